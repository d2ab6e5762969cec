"""End-to-end wiring shared by the command line and the acceptance suite."""
from __future__ import annotations

import hashlib
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .group_core import GroupWord, PlanarMatrix, classify
from .homology_action import (
    AffineAutomorphism,
    InvariantSubspace,
    Representation,
    check_tautological_exclusion,
    check_zero_drift,
    find_veech_generators,
    restrict,
    smallest_invariant_subspace,
)
from .kernel import KernelSample, enumerate_kernel, in_kernel, reduced_words
from .sim import (
    CornerHit,
    CoverSpec,
    InsufficientData,
    WindTreeTable,
    default_start,
    estimate_slope,
    expanding_direction,
    generic_directions,
    simulate_with_retries,
    windtree_cover,
)
from .surface import CohomologyClass, HomologyLattice, TranslationSurface, homology

DESK_TABLE = (Fraction(1, 2), Fraction(1, 2))
DESK_DEPTH = 12
SEARCH_BOUND = 4
HORIZON = 1e7
N_GENERIC = 64
N_CONTROLS = 2


@dataclass
class RepBundle:
    surface: TranslationSurface
    lat: HomologyLattice
    generators: list[AffineAutomorphism]
    seeds: list[CohomologyClass]
    subspaces: list[InvariantSubspace]
    reps: list[Representation]
    overlapping: bool = False

    @property
    def derivatives(self) -> tuple[PlanarMatrix, ...]:
        return tuple(g.derivative for g in self.generators)


def representations(surface: TranslationSurface, seeds: Sequence[CohomologyClass],
                    search_bound: int = SEARCH_BOUND, ball: bool = False) -> RepBundle:
    """Generators, one invariant subspace per seed, and restricted representations.

    Seeds whose smallest invariant subspaces coincide share one summand.
    """
    lat = homology(surface)
    gens = find_veech_generators(surface, search_bound, ball=ball)
    subspaces: list[InvariantSubspace] = []
    overlapping = False
    for c in seeds:
        F = smallest_invariant_subspace([c], gens)
        if any(F.basis == G.basis for G in subspaces):
            overlapping = True
            continue
        subspaces.append(F)
    reps = [restrict(gens, F) for F in subspaces]
    return RepBundle(surface, lat, gens, list(seeds), subspaces, reps, overlapping)


def windtree_representations(a=DESK_TABLE[0], b=DESK_TABLE[1],
                             search_bound: int = SEARCH_BOUND) -> tuple[RepBundle, CoverSpec]:
    table = WindTreeTable(a, b)
    cover = windtree_cover(table)
    return representations(table.surface, list(cover.classes), search_bound), cover


def verdicts(bundle: RepBundle) -> list[dict]:
    return [{"zero_drift": check_zero_drift(F, bundle.lat),
             "tautological_exclusion": check_tautological_exclusion(F, bundle.lat)}
            for F in bundle.subspaces]


def kernel_samples(reps: Sequence[Representation], max_len: int = DESK_DEPTH
                   ) -> tuple[list[KernelSample], KernelSample]:
    """Kernel of each restricted representation and of all of them together."""
    per = [enumerate_kernel(r, max_len, j + 1) for j, r in enumerate(reps)]
    joint = enumerate_kernel(list(reps), max_len, 0)
    return per, joint


def control_words(reps: Sequence[Representation], derivatives: Sequence[PlanarMatrix],
                  count: int = N_CONTROLS, max_len: int = 6) -> list[GroupWord]:
    """Shortest hyperbolic words outside the joint kernel (distinct directions)."""
    out, seen = [], set()
    for w in reduced_words(len(derivatives), max_len):
        if len(out) == count:
            break
        m = w.evaluate(list(derivatives))
        if classify(m).tag != "hyperbolic" or in_kernel(w, reps):
            continue
        key = round(expanding_direction(m).angle, 9)
        if key not in seen:
            seen.add(key)
            out.append(w)
    return out


# -- diffusion runs -------------------------------------------------------------


@dataclass
class RunSummary:
    kind: str
    label: str
    angle: float
    slope: float | None
    window: tuple[int, int] | None
    reflections: int
    retries: int
    max_displacement: float
    digest: str
    times: np.ndarray = field(repr=False, default=None)
    displacement: np.ndarray = field(repr=False, default=None)
    error: str | None = None


def series_digest(times: np.ndarray, displacement: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(times, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(displacement, dtype="<f8").tobytes())
    return h.hexdigest()


def run_direction(job) -> RunSummary:
    """Simulate one direction; ``job = (kind, label, a, b, direction, start_index, horizon)``."""
    kind, label, a, b, direction, k, horizon = job
    table = WindTreeTable(a, b)
    start = default_start(table, direction, k)
    try:
        series, used = simulate_with_retries(table, start, horizon)
    except CornerHit as exc:
        return RunSummary(kind, label, direction.angle, None, None, 0, 3, math.nan, "",
                          error=str(exc))
    try:
        est = estimate_slope(series.times, series.displacement)
        slope, window, err = est.slope, est.window, None
    except InsufficientData as exc:
        slope, window, err = None, None, str(exc)
    return RunSummary(kind, label, direction.angle, slope, window, series.reflections, used,
                      float(series.displacement.max()),
                      series_digest(series.times, series.displacement),
                      series.times, series.displacement, err)


def scan_jobs(a, b, horizon: float, n_generic: int, seed: int,
              kernel_words: Sequence[GroupWord] = (), controls: Sequence[GroupWord] = (),
              derivatives: Sequence[PlanarMatrix] = ()) -> list[tuple]:
    jobs = []
    for k, d in enumerate(generic_directions(n_generic, seed)):
        jobs.append(("generic", f"generic-{k}", a, b, d, k, horizon))
    for kind, words in (("kernel", kernel_words), ("control", controls)):
        for k, w in enumerate(words):
            m = w.evaluate(list(derivatives))
            jobs.append((kind, str(w), a, b, expanding_direction(m), k, horizon))
    return jobs


def run_jobs(jobs: Sequence[tuple], workers: int | None = None) -> list[RunSummary]:
    workers = workers or os.cpu_count() or 1
    if workers == 1 or len(jobs) <= 1:
        return [run_direction(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_direction, jobs))
