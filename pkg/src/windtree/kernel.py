"""Kernel words of restricted representations and the commutator chain.

Words are enumerated level by level (all freely reduced words of length
``L`` are extensions of those of length ``L - 1``) with numpy carrying the
planar matrices and the representation images of every prefix, split by
first letter.  The commutator chain follows the induction
``H_1 = K_1``, ``H_j = <[H_{j-1}, K_j]>_N`` with the normal closure cut
off at a fixed conjugator length.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import lattice
from .group_core import (
    ANGULAR_TOL,
    GroupWord,
    PlanarMatrix,
    angular_distance,
    classify,
    commutator,
    fixed_direction_set,
    fixed_directions,
)
from .homology_action import Representation

__all__ = [
    "KernelSample",
    "KernelChain",
    "DirectionSet",
    "EmptyStage",
    "SharedFixedPoint",
    "Elliptic",
    "enumerate_kernel",
    "build_chain",
    "nontrivial_commutator",
    "limit_set_sample",
    "reduced_words",
    "in_kernel",
]

_SAFE = 2 ** 62


class EmptyStage(RuntimeError):
    def __init__(self, stage: int):
        super().__init__(f"every commutator at stage {stage} is trivial; raise the search depth")
        self.stage = stage


class SharedFixedPoint(ValueError):
    pass


class Elliptic(ValueError):
    pass


@dataclass(frozen=True)
class KernelSample:
    subspace_index: int
    words: tuple[GroupWord, ...]
    matrices: tuple[PlanarMatrix, ...]
    max_word_length: int

    def __len__(self):
        return len(self.words)

    def hyperbolic(self) -> list[tuple[GroupWord, PlanarMatrix]]:
        return [(w, m) for w, m in zip(self.words, self.matrices)
                if classify(m).tag == "hyperbolic"]


@dataclass(frozen=True)
class KernelChain:
    stage: int
    generating_set: tuple[GroupWord, ...]
    matrices: tuple[PlanarMatrix, ...]
    conjugator_depth: int

    def __len__(self):
        return len(self.generating_set)


@dataclass(frozen=True)
class DirectionSet:
    directions: tuple[float, ...]
    max_gap: float
    vacuous: bool = False

    def __len__(self):
        return len(self.directions)


def _as_reps(rep) -> list[Representation]:
    return list(rep) if isinstance(rep, (list, tuple)) else [rep]


def _int_planar(rep: Representation) -> list[list[list[int]]]:
    return [[list(r) for r in m.int_rows()] for m in rep.derivatives]


def in_kernel(word: GroupWord, reps: Sequence[Representation] | Representation) -> bool:
    """Exact check that every representation sends ``word`` to the identity."""
    for rep in _as_reps(reps):
        if rep.image(word) != lattice.identity(rep.dim):
            return False
    return True


def reduced_words(n_generators: int, max_len: int) -> Iterable[GroupWord]:
    """Freely reduced words of length ``1..max_len`` in shortlex order."""
    steps = [(g, s) for g in range(n_generators) for s in (1, -1)]
    frontier: list[tuple] = [()]
    for _ in range(max_len):
        nxt = []
        for w in frontier:
            for st in steps:
                if w and w[-1] == (st[0], -st[1]):
                    continue
                nxt.append(w + (st,))
        frontier = nxt
        for w in frontier:
            yield GroupWord.from_steps(w)


def _generator_stack(reps: Sequence[Representation]):
    """Per step: planar 2x2 and block-diagonal image of every representation."""
    planar = _int_planar(reps[0])
    n_gen = len(planar)
    dims = [r.dim for r in reps]
    total = sum(dims)
    steps = [(g, s) for g in range(n_gen) for s in (1, -1)]
    P = np.zeros((len(steps), 2, 2), dtype=np.int64)
    R = np.zeros((len(steps), total, total), dtype=np.int64)
    for k, (g, s) in enumerate(steps):
        m = planar[g] if s > 0 else lattice.unimodular_inverse(planar[g])
        P[k] = m
        off = 0
        for rep, d in zip(reps, dims):
            img = [list(r) for r in rep.generator_images[g]]
            if s < 0:
                img = lattice.unimodular_inverse(img)
            R[k, off:off + d, off:off + d] = img
            off += d
    return steps, P, R


def enumerate_kernel(rep, max_len: int, subspace_index: int = 1) -> KernelSample:
    """All reduced words of length <= ``max_len`` in the kernel of ``rep``.

    ``rep`` may be a list of representations (intersection of kernels).
    Words whose planar matrix is +-identity are dropped, and words are
    deduplicated by planar matrix keeping the shortlex-first one.
    """
    reps = _as_reps(rep)
    if max_len < 1:
        return KernelSample(subspace_index, (), (), max_len)
    steps, P, R = _generator_stack(reps)
    n_steps = len(steps)
    inverse_of = [steps.index((g, -s)) for g, s in steps]
    total = R.shape[1]
    ident = np.eye(total, dtype=np.int64)
    gen_max = int(max(np.abs(P).max(), np.abs(R).max()))
    found: dict[tuple, tuple] = {}
    for first in range(n_steps):
        words = np.array([[first]], dtype=np.int8)
        planar = P[first:first + 1].copy()
        image = R[first:first + 1].copy()
        for length in range(1, max_len + 1):
            if length > 1:
                cur_max = int(max(np.abs(planar).max(), np.abs(image).max()))
                if cur_max * gen_max * total >= _SAFE:
                    raise OverflowError("matrix entries too large for exact int64 search")
                last = words[:, -1]
                ext_words, ext_p, ext_r = [], [], []
                for k in range(n_steps):
                    keep = last != inverse_of[k]
                    if not keep.any():
                        continue
                    ext_words.append(np.concatenate(
                        [words[keep], np.full((keep.sum(), 1), k, dtype=np.int8)], axis=1))
                    ext_p.append(planar[keep] @ P[k])
                    ext_r.append(image[keep] @ R[k])
                words = np.concatenate(ext_words)
                planar = np.concatenate(ext_p)
                image = np.concatenate(ext_r)
            hit = np.all(image == ident, axis=(1, 2))
            central = (planar[:, 0, 1] == 0) & (planar[:, 1, 0] == 0) & (
                np.abs(planar[:, 0, 0]) == 1)
            for idx in np.nonzero(hit & ~central)[0]:
                key = tuple(planar[idx].ravel().tolist())
                code = tuple(words[idx].tolist())
                order = (len(code), code)
                if key not in found or order < found[key][0]:
                    found[key] = (order, code)
    entries = sorted(found.values())
    out_words, out_mats = [], []
    for _, code in entries:
        w = GroupWord.from_steps(steps[c] for c in code)
        m = w.evaluate(list(reps[0].derivatives))
        # independent re-evaluation with fresh exact products
        if not in_kernel(w, reps) or m.is_central:
            raise AssertionError(f"enumerated word {w} failed re-verification")
        out_words.append(w)
        out_mats.append(m)
    return KernelSample(subspace_index, tuple(out_words), tuple(out_mats), max_len)


def _conjugators(n_gen: int, depth: int) -> list[GroupWord]:
    return [GroupWord()] + list(reduced_words(n_gen, depth))


def build_chain(samples: Sequence[KernelSample], reps: Sequence[Representation],
                conjugator_depth: int = 2, max_generators: int = 24) -> KernelChain:
    """Truncated normal-closure chain ``H_1 = K_1``, ``H_j = <[H_{j-1}, K_j]>_N``.

    ``reps[j]`` is the representation whose kernel ``samples[j]`` came from.
    Each stage keeps at most ``max_generators`` survivors (shortest first).
    """
    if not samples or any(len(s) == 0 for s in samples):
        raise ValueError("every kernel sample must be nonempty")
    derivs = list(reps[0].derivatives)
    stage_words = list(samples[0].words[:max_generators])
    stage_mats = list(samples[0].matrices[:max_generators])
    conj = [(c, c.evaluate(derivs) if c.letters else PlanarMatrix.identity())
            for c in _conjugators(len(derivs), conjugator_depth)]
    for j in range(1, len(samples)):
        found: dict[PlanarMatrix, GroupWord] = {}
        ks = list(zip(samples[j].words[:max_generators], samples[j].matrices[:max_generators]))
        for (h, mh), (k, mk) in itertools.product(zip(stage_words, stage_mats), ks):
            base = commutator(mh, mk)
            if base.is_central:
                continue
            for c, mc in conj:
                m = mc @ base @ mc.inverse()
                w = None
                if m in found:
                    w = c * commutator(h, k) * c.inverse()
                    if (len(found[m]), found[m].letters) <= (len(w), w.letters):
                        continue
                found[m] = w or c * commutator(h, k) * c.inverse()
        if not found:
            raise EmptyStage(j + 1)
        ranked = sorted(found.items(), key=lambda kv: (len(kv[1]), kv[1].letters))[:max_generators]
        stage_words = [w for _, w in ranked]
        stage_mats = [m for m, _ in ranked]
        for w, m in zip(stage_words, stage_mats):
            if w.evaluate(derivs) != m or not in_kernel(w, reps[:j + 1]):
                raise AssertionError(f"chain element {w} escapes the kernel intersection")
    return KernelChain(len(samples), tuple(stage_words), tuple(stage_mats), conjugator_depth)


def nontrivial_commutator(h: GroupWord, k: GroupWord,
                          derivatives: Sequence[PlanarMatrix]) -> tuple[GroupWord, PlanarMatrix]:
    """Commutator of two infinite-order elements with disjoint boundary fixed points."""
    mh, mk = h.evaluate(list(derivatives)), k.evaluate(list(derivatives))
    for w, m in ((h, mh), (k, mk)):
        if not classify(m).infinite_order:
            raise Elliptic(f"{w} has finite order")
    dh, dk = fixed_direction_set(mh), fixed_direction_set(mk)
    if any(angular_distance(x, y) <= ANGULAR_TOL for x in dh for y in dk):
        raise SharedFixedPoint(f"{h} and {k} share a boundary fixed point")
    w = commutator(h, k)
    m = w.evaluate(list(derivatives))
    if m.is_central:
        raise AssertionError("commutator of elements with disjoint fixed points is trivial")
    return w, m


def _max_gap(directions: Sequence[float]) -> float:
    if not directions:
        return math.pi
    d = sorted(directions)
    gaps = [b - a for a, b in zip(d, d[1:])]
    gaps.append(d[0] + math.pi - d[-1])
    return max(gaps)


def _dedupe(directions: Iterable[float]) -> list[float]:
    out: list[float] = []
    for x in sorted(directions):
        if not out or x - out[-1] > ANGULAR_TOL:
            out.append(x)
    if len(out) > 1 and out[0] + math.pi - out[-1] <= ANGULAR_TOL:
        out.pop()
    return out


def limit_set_sample(words: Sequence[GroupWord], derivatives: Sequence[PlanarMatrix],
                     max_len: int) -> DirectionSet:
    """Fixed directions of hyperbolic elements built from kernel words.

    Uses the words, their pairwise products, and conjugates of both by
    every reduced word of length <= ``max_len``; sets grow with the budget.
    """
    if not words:
        return DirectionSet((), math.pi, vacuous=True)
    derivs = list(derivatives)
    base = [w.evaluate(derivs) for w in words]
    base += [a @ b for a, b in itertools.product(base[:len(words)], repeat=2)]
    seen = set()
    dirs = []
    for c in _conjugators(len(derivs), max_len):
        mc = c.evaluate(derivs) if c.letters else PlanarMatrix.identity()
        mci = mc.inverse()
        for m in base:
            g = mc @ m @ mci
            if g in seen or classify(g).tag != "hyperbolic":
                continue
            seen.add(g)
            dirs.extend(fixed_directions(g))
    dirs = _dedupe(dirs)
    return DirectionSet(tuple(dirs), _max_gap(dirs))
