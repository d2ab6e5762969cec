"""Wind-tree translation surfaces, Veech group kernels and diffusion rates."""
from .group_core import GroupWord, PlanarMatrix, classify, commutator, fixed_directions
from .surface import build_windtree_surface, homology, intersection, holonomy, poincare_dual
from .homology_action import find_veech_generators, restrict, smallest_invariant_subspace
from .kernel import build_chain, enumerate_kernel, limit_set_sample, nontrivial_commutator
from .sim import (
    BilliardState,
    CoverSpec,
    Direction,
    WindTreeTable,
    deck_translation,
    estimate_slope,
    kernel_direction_diffusion,
    rank2_check,
    simulate,
)

__all__ = [
    "GroupWord", "PlanarMatrix", "classify", "commutator", "fixed_directions",
    "build_windtree_surface", "homology", "intersection", "holonomy", "poincare_dual",
    "find_veech_generators", "restrict", "smallest_invariant_subspace",
    "build_chain", "enumerate_kernel", "limit_set_sample", "nontrivial_commutator",
    "BilliardState", "CoverSpec", "Direction", "WindTreeTable", "deck_translation",
    "estimate_slope", "kernel_direction_diffusion", "rank2_check", "simulate",
]
