"""Affine automorphisms of origamis and their action on integer (co)homology.

The shear ``T = [[1,1],[0,1]]`` sends the origami ``(r, u)`` to
``(r, r^-1 u)`` and ``L = [[1,0],[1,1]]`` sends it to ``(u^-1 r, u)``.
Along the way the canonical affine map carries each square edge to an edge
path of the sheared origami; composing these chain maps with a relabelling
isomorphism back to the original origami gives the affine automorphism on
1-chains, from which the homology matrix follows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from . import lattice
from .group_core import GroupWord, PlanarMatrix, classify
from .surface import (
    CohomologyClass,
    HomologyLattice,
    TranslationSurface,
    holonomy,
    homology,
)

__all__ = [
    "AffineAutomorphism",
    "InvariantSubspace",
    "Representation",
    "NotFound",
    "NotInvariant",
    "SHEAR_LETTERS",
    "find_veech_generators",
    "affine_automorphism",
    "homology_action_of",
    "cohomology_action_of",
    "smallest_invariant_subspace",
    "subspace_from_vectors",
    "restrict",
    "check_zero_drift",
    "check_tautological_exclusion",
    "tautological_classes",
]

# letter index -> derivative; index 0 is the horizontal shear, 1 the vertical one
SHEAR_LETTERS = (PlanarMatrix(1, 1, 0, 1), PlanarMatrix(1, 0, 1, 1))


class NotFound(LookupError):
    pass


class NotInvariant(ValueError):
    pass


def _shear_step(letter: int, sign: int, right, top):
    """Apply one elementary shear; returns ``(right', top', chain_map)``.

    ``chain_map[new][old]``: column ``old`` is the image of that edge.
    """
    n = len(right)
    C = [[0] * (2 * n) for _ in range(2 * n)]
    rinv = [0] * n
    uinv = [0] * n
    for i in range(n):
        rinv[right[i]] = i
        uinv[top[i]] = i
    if letter == 0 and sign > 0:
        new_right, new_top = tuple(right), tuple(rinv[top[i]] for i in range(n))
        for i in range(n):
            C[rinv[i]][i] += 1
            C[rinv[i]][n + i] += 1
            C[n + i][n + i] += 1
    elif letter == 0:
        new_right, new_top = tuple(right), tuple(right[top[i]] for i in range(n))
        for i in range(n):
            C[right[i]][i] += 1
            C[n + i][n + i] += 1
            C[i][n + i] -= 1
    elif sign > 0:
        new_right, new_top = tuple(uinv[right[i]] for i in range(n)), tuple(top)
        for i in range(n):
            C[n + uinv[i]][n + i] += 1
            C[n + uinv[i]][i] += 1
            C[i][i] += 1
    else:
        new_right, new_top = tuple(top[right[i]] for i in range(n)), tuple(top)
        for i in range(n):
            C[n + top[i]][n + i] += 1
            C[i][i] += 1
            C[n + i][i] -= 1
    return new_right, new_top, C


def act_on_origami(steps: Sequence[tuple[int, int]], right, top):
    """Origami ``A . X`` for ``A`` the product of the unit steps (rightmost acts first)."""
    chain = lattice.identity(2 * len(right))
    for letter, sign in reversed(list(steps)):
        right, top, C = _shear_step(letter, sign, right, top)
        chain = lattice.matmul(C, chain)
    return right, top, chain


def isomorphisms(src_right, src_top, dst_right, dst_top) -> list[tuple[int, ...]]:
    """All relabellings ``s`` with ``s . src_right = dst_right . s`` (same for top)."""
    n = len(src_right)
    out = []
    for image0 in range(n):
        sigma = [-1] * n
        used = [False] * n
        sigma[0] = image0
        used[image0] = True
        stack = [0]
        ok = True
        while stack and ok:
            x = stack.pop()
            for p, q in ((src_right, dst_right), (src_top, dst_top)):
                y, target = p[x], q[sigma[x]]
                if sigma[y] == -1:
                    if used[target]:
                        ok = False
                        break
                    sigma[y] = target
                    used[target] = True
                    stack.append(y)
                elif sigma[y] != target:
                    ok = False
                    break
        if ok and -1 not in sigma:
            out.append(tuple(sigma))
    return out


@dataclass(frozen=True)
class AffineAutomorphism:
    """Affine self-map of an origami.

    ``cell_map`` relabels the squares of the sheared origami onto the
    original ones; ``chain_map`` is the induced map on edge chains.
    """

    surface: TranslationSurface
    derivative: PlanarMatrix
    word: GroupWord
    cell_map: tuple[int, ...]
    chain_map: tuple[tuple[int, ...], ...] = field(repr=False)

    @cached_property
    def homology_matrix(self) -> list[list[int]]:
        return homology_action_of(self)

    def __matmul__(self, other: AffineAutomorphism) -> AffineAutomorphism:
        chain = lattice.matmul(self.chain_map, other.chain_map)
        return AffineAutomorphism(self.surface, self.derivative @ other.derivative,
                                  self.word * other.word, (),
                                  tuple(map(tuple, chain)))

    @property
    def is_elliptic(self) -> bool:
        return classify(self.derivative).tag == "elliptic"


def affine_automorphism(surface: TranslationSurface, word: GroupWord,
                        which: int = 0) -> AffineAutomorphism | None:
    """Affine automorphism with derivative given by a word in the two shears.

    Returns None when the sheared origami is not isomorphic to the original.
    ``which`` selects among several lifts (differing by translations).
    """
    steps = word.steps()
    right, top, chain = act_on_origami(steps, surface.right, surface.top)
    isos = isomorphisms(right, top, surface.right, surface.top)
    if len(isos) <= which:
        return None
    sigma = isos[which]
    n = surface.n_squares
    perm = [[0] * (2 * n) for _ in range(2 * n)]
    for j in range(n):
        perm[sigma[j]][j] = 1
        perm[n + sigma[j]][n + j] = 1
    full = lattice.matmul(perm, chain)
    deriv = word.evaluate(SHEAR_LETTERS)
    return AffineAutomorphism(surface, deriv, word, sigma, tuple(map(tuple, full)))


def homology_action_of(auto: AffineAutomorphism) -> list[list[int]]:
    """Matrix ``M`` of the induced map on the homology basis (``M[:, l]`` = image of ``b_l``)."""
    lat = homology(auto.surface)
    cols = []
    for b in lat.basis:
        image = lattice.matvec(auto.chain_map, b)
        cols.append(lat.coordinates(image))
    return lattice.transpose(cols)


def cohomology_action_of(auto: AffineAutomorphism) -> list[list[int]]:
    """Push-forward on class coefficient vectors: ``M^-T = J M J^-1``.

    Chosen so that words act as a left representation; it matches the
    homology action under Poincare duality.
    """
    lat = homology(auto.surface)
    M = auto.homology_matrix
    return lattice.matmul(lattice.matmul(lat.J, M), lat.J_inv)


def _shear_power(surface, letter, bound):
    for n in range(1, bound + 1):
        auto = affine_automorphism(surface, GroupWord.gen(letter, n))
        if auto is not None:
            return auto
    return None


def _ball_words(radius: int):
    """Freely reduced words in the two shears of length 1..radius (unit steps)."""
    steps = [(0, 1), (0, -1), (1, 1), (1, -1)]
    frontier = [()]
    for _ in range(radius):
        nxt = []
        for w in frontier:
            for st in steps:
                if w and w[-1] == (st[0], -st[1]):
                    continue
                nxt.append(w + (st,))
        frontier = nxt
        yield from frontier


def find_veech_generators(surface: TranslationSurface, search_bound: int,
                          ball: bool = True) -> list[AffineAutomorphism]:
    """Stabilising affine automorphisms found within ``search_bound``.

    The first two entries are the horizontal and vertical multi-twists
    ``T^n`` and ``L^m`` with minimal ``n, m``; then every other non-elliptic
    derivative in the word ball of radius ``search_bound`` that stabilises
    the origami (one lift per derivative, no powers of the first two).
    """
    horizontal = _shear_power(surface, 0, search_bound)
    vertical = _shear_power(surface, 1, search_bound)
    if horizontal is None or vertical is None:
        raise NotFound(f"no stabilising parabolic within search bound {search_bound}")
    gens = [horizontal, vertical]
    if not ball:
        return gens
    seen = set()
    for k, auto in enumerate((horizontal, vertical)):
        step = auto.derivative
        m = PlanarMatrix.identity()
        for _ in range(2 * search_bound + 1):
            m = m @ step
            seen.add(m)
            seen.add(m.inverse())
    for steps in _ball_words(search_bound):
        word = GroupWord.from_steps(steps)
        deriv = word.evaluate(SHEAR_LETTERS)
        if deriv in seen:
            continue
        seen.add(deriv)
        cls = classify(deriv)
        if cls.tag == "elliptic":
            continue  # finite order elements are set aside
        auto = affine_automorphism(surface, word)
        if auto is not None:
            gens.append(auto)
    return gens


# -- invariant subspaces ----------------------------------------------------


@dataclass(frozen=True)
class InvariantSubspace:
    """Saturated sublattice of class vectors; ``basis`` rows are in Hermite form."""

    basis: tuple[tuple[int, ...], ...]
    ambient: int
    saturated: bool = True

    @property
    def rank(self) -> int:
        return len(self.basis)

    @property
    def is_degenerate(self) -> bool:
        return self.rank == 0

    def contains(self, v: Sequence[int]) -> bool:
        return lattice.solve(self.basis, v) is not None

    def coordinates(self, v: Sequence[int]) -> list[int]:
        x = lattice.solve(self.basis, v)
        if x is None or any(c.denominator != 1 for c in x):
            raise NotInvariant("vector is not in the subspace lattice")
        return [int(c) for c in x]

    def classes(self) -> list[CohomologyClass]:
        return [CohomologyClass(b) for b in self.basis]

    def __add__(self, other: InvariantSubspace) -> InvariantSubspace:
        return subspace_from_vectors(list(self.basis) + list(other.basis), self.ambient)


def subspace_from_vectors(vectors, ambient: int) -> InvariantSubspace:
    return InvariantSubspace(tuple(map(tuple, lattice.saturate(vectors, ambient))), ambient)


def smallest_invariant_subspace(seeds: Sequence[CohomologyClass],
                                generators: Sequence[AffineAutomorphism]) -> InvariantSubspace:
    """Saturated span of the orbit of the seeds under the generators and their inverses."""
    if not seeds:
        raise ValueError("need at least one seed class")
    dim = len(seeds[0])
    mats = []
    for g in generators:
        A = cohomology_action_of(g)
        mats.append(A)
        mats.append(lattice.unimodular_inverse(A))
    vectors = [list(s.coefficients) for s in seeds if not s.is_zero]
    current = lattice.saturate(vectors, dim)
    while True:
        images = [lattice.matvec(A, v) for A in mats for v in current]
        grown = lattice.saturate(list(current) + images, dim)
        if len(grown) == len(current):
            return InvariantSubspace(tuple(map(tuple, grown)), dim)
        current = grown


@dataclass(frozen=True)
class Representation:
    """Generator images of the action restricted to an invariant subspace.

    Images act on coordinate vectors with respect to ``subspace.basis``.
    """

    generator_images: tuple[tuple[tuple[int, ...], ...], ...]
    subspace: InvariantSubspace
    derivatives: tuple[PlanarMatrix, ...] = ()

    @property
    def dim(self) -> int:
        return self.subspace.rank

    def image(self, word: GroupWord) -> list[list[int]]:
        imgs = [list(map(list, m)) for m in self.generator_images]
        invs = [lattice.unimodular_inverse(m) for m in imgs]
        return word.evaluate(imgs, invs, lattice.identity(self.dim), lattice.matmul)

    def planar(self, word: GroupWord) -> PlanarMatrix:
        return word.evaluate(list(self.derivatives))


def restrict(generators: Sequence[AffineAutomorphism], F: InvariantSubspace) -> Representation:
    """Restricted images ``R_g`` with ``A_g B = B R_g`` (``B`` = basis as columns)."""
    images = []
    for g in generators:
        A = cohomology_action_of(g)
        cols = []
        for b in F.basis:
            img = lattice.matvec(A, b)
            x = lattice.solve(F.basis, img)
            if x is None:
                raise NotInvariant("generator image leaves the subspace")
            if any(c.denominator != 1 for c in x):
                raise NotInvariant("restricted image is not integral (unsaturated basis)")
            cols.append([int(c) for c in x])
        images.append(tuple(map(tuple, lattice.transpose(cols))) if cols else ())
    return Representation(tuple(images), F, tuple(g.derivative for g in generators))


def check_zero_drift(F: InvariantSubspace, lat: HomologyLattice) -> bool:
    return all(holonomy(CohomologyClass(b), lat) == (0, 0) for b in F.basis)


def tautological_classes(lat: HomologyLattice) -> tuple[list[Fraction], list[Fraction]]:
    """Rational class vectors of ``Re w`` and ``Im w`` (values = basis periods)."""
    return ([p[0] for p in lat.periods], [p[1] for p in lat.periods])


def check_tautological_exclusion(F: InvariantSubspace, lat: HomologyLattice) -> bool:
    """True iff neither period class lies in the rational span of ``F``."""
    for taut in tautological_classes(lat):
        den = math.lcm(*(x.denominator for x in taut))
        v = [int(x * den) for x in taut]
        if lattice.rank(list(F.basis) + [v]) == F.rank:
            return False
    return True
