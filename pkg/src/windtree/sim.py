"""Billiards in the periodic wind-tree table and diffusion-rate estimates.

Two engines share the same geometry (obstacles ``[0, a] x [0, b] + Z^2``):

* :func:`simulate` flows along the unfolded straight line on the compact
  translation surface.  The minor coordinate at successive major grid
  lines is accumulated in double-double arithmetic (about 106 bits) inside
  a compiled loop that also advances the square and lattice cell through
  the origami permutations; a crossing that passes too close to a grid
  vertex aborts the run.
* :func:`trace_events` is a plain event-driven billiard in the plane with
  explicit specular reflections in ``mpmath`` arithmetic, used to check
  the fast engine on short runs.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np
from numba import njit

from . import lattice
from .group_core import GroupWord, PlanarMatrix, classify
from .surface import (
    CohomologyClass,
    DimensionMismatch,
    HomologyLattice,
    WindTreeSurface,
    build_windtree_surface,
    class_of_cochain,
    holonomy,
    homology,
)

__all__ = [
    "WindTreeTable",
    "BilliardState",
    "Direction",
    "CoverSpec",
    "DisplacementSeries",
    "DiffusionEstimate",
    "CornerHit",
    "NonUnitDirection",
    "InsufficientData",
    "windtree_cover",
    "deck_translation",
    "rank2_check",
    "strip_core_curves",
    "simulate",
    "simulate_with_retries",
    "cover_displacement",
    "trace_events",
    "estimate_slope",
    "expanding_direction",
    "kernel_direction_diffusion",
    "checkpoint_times",
    "default_start",
    "generic_directions",
]

log = logging.getLogger(__name__)

_DPS = 40
UNIT_TOL = 1e-14
DISPLACEMENT_FLOOR = 1.0
T0 = 10.0
PER_OCTAVE = 4


class CornerHit(RuntimeError):
    def __init__(self, path_length: float):
        super().__init__(f"trajectory meets an obstacle corner near path length {path_length:.6g}")
        self.path_length = path_length


class NonUnitDirection(ValueError):
    pass


class InsufficientData(ValueError):
    pass


# -- geometry -----------------------------------------------------------------


@dataclass(frozen=True)
class WindTreeTable:
    """Obstacles ``[0, a] x [0, b]`` translated by every point of ``Z^2``."""

    a: Fraction
    b: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))
        if not (0 < self.a < 1 and 0 < self.b < 1):
            raise ValueError("obstacle sides must lie in (0, 1)")

    @property
    def surface(self) -> WindTreeSurface:
        return _surface(self.a, self.b)

    def blocked(self, x, y) -> bool:
        """Is the point strictly inside an obstacle?"""
        fx, fy = x - math.floor(x), y - math.floor(y)
        return 0 < fx < self.a and 0 < fy < self.b


@lru_cache(maxsize=None)
def _surface(a: Fraction, b: Fraction) -> WindTreeSurface:
    return build_windtree_surface(a, b)


@dataclass(frozen=True)
class Direction:
    """Unit vector stored in extended precision."""

    x: mpmath.mpf
    y: mpmath.mpf

    @classmethod
    def from_angle(cls, theta) -> Direction:
        with mpmath.workdps(_DPS):
            th = mpmath.mpf(theta)
            return cls(mpmath.cos(th), mpmath.sin(th))

    @classmethod
    def from_vector(cls, x, y) -> Direction:
        with mpmath.workdps(_DPS):
            x, y = mpmath.mpf(x), mpmath.mpf(y)
            norm = mpmath.sqrt(x * x + y * y)
            if norm == 0:
                raise NonUnitDirection("zero vector has no direction")
            return cls(x / norm, y / norm)

    def __post_init__(self):
        with mpmath.workdps(_DPS):
            x, y = mpmath.mpf(self.x), mpmath.mpf(self.y)
            object.__setattr__(self, "x", x)
            object.__setattr__(self, "y", y)
            if abs(x * x + y * y - 1) > UNIT_TOL:
                raise NonUnitDirection(f"|v|^2 = {float(x * x + y * y)!r} is not 1")

    def reversed(self) -> Direction:
        return Direction(-self.x, -self.y)

    @property
    def angle(self) -> float:
        return float(mpmath.atan2(self.y, self.x))


@dataclass(frozen=True)
class BilliardState:
    """Particle in lattice cell ``cell`` at ``position`` in ``[0, 1)^2``."""

    cell: tuple[int, int]
    position: tuple[Fraction, Fraction]
    direction: Direction

    def __post_init__(self):
        object.__setattr__(self, "cell", (int(self.cell[0]), int(self.cell[1])))
        object.__setattr__(self, "position", (Fraction(self.position[0]), Fraction(self.position[1])))
        if not isinstance(self.direction, Direction):
            object.__setattr__(self, "direction", Direction(*self.direction))
        px, py = self.position
        if not (0 <= px < 1 and 0 <= py < 1):
            raise ValueError("position must lie in the unit fundamental cell")

    def absolute(self) -> tuple[Fraction, Fraction]:
        return (self.cell[0] + self.position[0], self.cell[1] + self.position[1])

    def nudged(self, eps: Fraction) -> BilliardState:
        px, py = self.position
        return BilliardState(self.cell, ((px + eps) % 1, (py + eps * Fraction(7, 5)) % 1),
                             self.direction)


def default_start(table: WindTreeTable, direction: Direction, k: int = 0) -> BilliardState:
    """Deterministic start point off the grid lines, in the free region."""
    # irrational-looking rationals far from the grid of step 1/q
    q = table.surface.q
    fx = Fraction(2 * q - 1, 2 * q) - Fraction(1, 7919 + 104 * k)
    fy = Fraction(2 * q - 1, 2 * q) - Fraction(1, 6271 + 97 * k)
    return BilliardState((0, 0), (fx, fy), direction)


def generic_directions(n: int, seed: int = 0) -> list[Direction]:
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0.0, 2.0 * math.pi, size=n)
    return [Direction.from_angle(float(th)) for th in angles]


# -- the covering cocycle -------------------------------------------------------


@dataclass(frozen=True)
class CoverSpec:
    """Classes ``f_1..f_d`` defining a Z^d cover; checked primitive and independent."""

    classes: tuple[CohomologyClass, ...]
    lat: HomologyLattice = field(repr=False, compare=False, default=None)
    drift_checked: bool = True

    def __post_init__(self):
        for f in self.classes:
            if not f.is_primitive:
                raise ValueError(f"class {f.coefficients} is not primitive")
        if lattice.rank([f.coefficients for f in self.classes]) != len(self.classes):
            raise ValueError("cover classes are linearly dependent")
        if self.drift_checked:
            if self.lat is None:
                raise ValueError("drift check needs the homology lattice")
            for f in self.classes:
                if holonomy(f, self.lat) != (0, 0):
                    raise ValueError(f"class {f.coefficients} has nonzero drift")

    @property
    def d(self) -> int:
        return len(self.classes)


def windtree_cover(table: WindTreeTable) -> CoverSpec:
    """The wind-tree Z^2 cover: lattice displacement counted along dual moves."""
    s = table.surface
    lat = homology(s)
    f1 = class_of_cochain([d[0] for d in s.deck], lat)
    f2 = class_of_cochain([d[1] for d in s.deck], lat)
    return CoverSpec((f1, f2), lat, drift_checked=True)


def deck_translation(chain: Sequence[int], spec: CoverSpec, lat: HomologyLattice | None = None
                     ) -> tuple[int, ...]:
    """Deck element ``(f_1(c), ..., f_d(c))`` picked up by a lift of the closed chain ``c``."""
    lat = lat or spec.lat
    if len(chain) != 2 * lat.surface.n_squares:
        raise DimensionMismatch("chain does not live on this surface")
    if any(lat.surface.dual_divergence(chain)):
        raise ValueError("chain is not closed")
    coords = lat.coordinates(chain)
    return tuple(sum(x * y for x, y in zip(coords, f.coefficients)) for f in spec.classes)


def strip_core_curves(table: WindTreeTable) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Core curves of the horizontal and vertical corridors (in the ``++`` copy)."""
    s = table.surface
    n = s.n_squares
    wa, wb = s.obstacle_cells
    out = []
    for move, cell in ((0, (0, s.q - 1)), (1, (s.q - 1, 0))):
        start = s.square_index(1, 1, *cell)
        chain = [0] * (2 * n)
        x = start
        while True:
            if move == 0:
                chain[x] += 1
                x = s.right[x]
            else:
                chain[n + x] += 1
                x = s.top[x]
            if x == start:
                break
        out.append(tuple(chain))
    return out[0], out[1]


def rank2_check(spec: CoverSpec, strips: Sequence[Sequence[int]]) -> tuple[list[list[int]], int, bool]:
    """Pairing matrix ``M[i][j] = f_j(strip_i)``, its determinant, and ``det != 0``."""
    M = [list(deck_translation(c, spec)) for c in strips]
    det = lattice.determinant(M)
    return M, det, det != 0


# -- fast engine --------------------------------------------------------------


def checkpoint_times(horizon: float, t0: float = T0, per_octave: int = PER_OCTAVE) -> np.ndarray:
    """``t_k = t0 * 2**(k / per_octave)`` for every ``t_k <= horizon``."""
    if horizon < t0:
        return np.array([], dtype=np.float64)
    kmax = int(math.floor(per_octave * math.log2(horizon / t0) + 1e-12))
    return t0 * 2.0 ** (np.arange(kmax + 1) / per_octave)


@dataclass
class DisplacementSeries:
    times: np.ndarray
    displacement: np.ndarray
    reflections: int
    final: BilliardState | None = None
    positions: np.ndarray | None = None

    def rows(self):
        return list(zip(self.times.tolist(), self.displacement.tolist()))


def _to_surface(table: WindTreeTable, start: BilliardState):
    """Square index, surface-local point and flow speeds of a billiard state."""
    s = table.surface
    q = s.q
    d = start.direction
    sx = 1 if d.x >= 0 else -1
    sy = 1 if d.y >= 0 else -1
    gx = start.position[0] * q
    gy = start.position[1] * q
    cx, cy = math.floor(gx), math.floor(gy)
    fx, fy = gx - cx, gy - cy
    if fx == 0 or fy == 0:
        raise ValueError("start point lies on a grid line; move it into a cell interior")
    if s.labels and (sx, sy, cx, cy) not in s._label_index:
        raise ValueError("start point is inside an obstacle")
    sq = s.square_index(sx, sy, cx, cy)
    xs = fx if sx > 0 else 1 - fx
    ys = fy if sy > 0 else 1 - fy
    return sq, xs, ys, abs(d.x), abs(d.y)


def _billiard_point(s: WindTreeSurface, sq: int, lx: float, ly: float, deck) -> tuple[float, float]:
    sx, sy, cx, cy = s.labels[sq]
    fx = lx if sx > 0 else 1 - lx
    fy = ly if sy > 0 else 1 - ly
    return (deck[0] + (cx + fx) / s.q, deck[1] + (cy + fy) / s.q)


@njit(cache=True)
def _two_sum(a, b):  # pragma: no cover - compiled
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


@njit(cache=True)
def _dd_add(ah, al, bh, bl):  # pragma: no cover - compiled
    s, e = _two_sum(ah, bh)
    e += al + bl
    hi = s + e
    return hi, e - (hi - s)


@njit(cache=True)
def _flow(n_blocks, y_hi, y_lo, m1_hi, m1_lo, m_hi, m_lo, tol, stops, deltas, start_sq,
          nxt_major, nxt_minor, deck_major, deck_minor, refl_major, refl_minor
          ):  # pragma: no cover - compiled
    """Straight-line flow through the square grid in double-double arithmetic.

    The minor coordinate, relative to the current major grid line, is
    advanced by the slope at each major crossing; passing an integer is a
    minor crossing.  Returns the square, deck element, reflection count and
    local minor coordinate at each stop, and the index of the first major
    crossing that passes within ``tol`` of a vertex (or -1).
    """
    n_stops = stops.shape[0]
    d = deck_major.shape[1]
    out_sq = np.empty(n_stops, np.int64)
    out_deck = np.zeros((n_stops, d), np.int64)
    out_refl = np.empty(n_stops, np.int64)
    out_ly = np.empty(n_stops, np.float64)
    deck = np.zeros(d, np.int64)
    sq = start_sq
    refl = 0
    fh, fl = y_hi, y_lo
    k = 0
    j = 0
    while j < n_stops:
        while k < stops[j]:
            if k == 0:
                fh, fl = _dd_add(fh, fl, m1_hi, m1_lo)
            else:
                fh, fl = _dd_add(fh, fl, m_hi, m_lo)
            if fh + fl >= 1.0:
                fh, fl = _dd_add(fh, fl, -1.0, 0.0)
                for c in range(d):
                    deck[c] += deck_minor[sq, c]
                refl += refl_minor[sq]
                sq = nxt_minor[sq]
            if fh + fl < tol or (1.0 - fh) - fl < tol:
                return out_sq, out_deck, out_refl, out_ly, k
            for c in range(d):
                deck[c] += deck_major[sq, c]
            refl += refl_major[sq]
            sq = nxt_major[sq]
            k += 1
        # partial block up to the checkpoint
        ly = (fh + deltas[j] * m_hi) + fl
        s2 = sq
        rr = refl
        for c in range(d):
            out_deck[j, c] = deck[c]
        if ly >= 1.0:
            ly -= 1.0
            for c in range(d):
                out_deck[j, c] += deck_minor[s2, c]
            rr += refl_minor[s2]
            s2 = nxt_minor[s2]
        out_sq[j] = s2
        out_refl[j] = rr
        out_ly[j] = ly
        j += 1
    return out_sq, out_deck, out_refl, out_ly, -1


def _dd(x) -> tuple[float, float]:
    """Split an mpf into a double-double pair."""
    with mpmath.workdps(_DPS):
        x = mpmath.mpf(x)
        hi = float(x)
        return hi, float(x - mpmath.mpf(hi))


# every crossing is resolved with ~106-bit arithmetic; the accumulated
# error after 10^10 steps stays far below this clearance
_CORNER_TOL = 1e-20


def _mp(x):
    with mpmath.workdps(_DPS):
        if isinstance(x, Fraction):
            return mpmath.mpf(x.numerator) / x.denominator
        return mpmath.mpf(x)


@dataclass
class _Flow:
    squares: np.ndarray
    deck: np.ndarray
    reflections: np.ndarray
    local: np.ndarray
    swap: bool


def _run_flow(table: WindTreeTable, start: BilliardState, horizon: float, times: np.ndarray,
              cochain: np.ndarray) -> _Flow:
    s = table.surface
    q = s.q
    n = s.n_squares
    sq0, xs, ys, u, w = _to_surface(table, start)
    swap = w > u
    if swap:
        xs, ys, u, w = ys, xs, w, u
    with mpmath.workdps(_DPS):
        slope = w / u
        scale = mpmath.mpf(q)
        X = [_mp(xs) + mpmath.mpf(float(t)) * scale * u for t in times]
        end = _mp(xs) + mpmath.mpf(horizon) * scale * u
        n_blocks = int(mpmath.floor(end))
        stops = np.array([int(mpmath.floor(x)) for x in X], dtype=np.int64)
        deltas = np.array([float(x - (k if k > 0 else _mp(xs))) for x, k in zip(X, stops)])
        local_major = np.array([float(x - k) for x, k in zip(X, stops)])
        m1 = (1 - _mp(xs)) * slope
    if stops.size and stops[-1] > n_blocks:
        raise ValueError("checkpoint beyond the horizon")
    right = np.array(s.right, dtype=np.int64)
    top = np.array(s.top, dtype=np.int64)
    refl = np.array(s.reflects, dtype=np.int64)
    if swap:
        maj, mnr = top, right
        c_maj, c_mnr, r_maj, r_mnr = cochain[n:], cochain[:n], refl[n:], refl[:n]
    else:
        maj, mnr = right, top
        c_maj, c_mnr, r_maj, r_mnr = cochain[:n], cochain[n:], refl[:n], refl[n:]
    y_hi, y_lo = _dd(_mp(ys))
    m1_hi, m1_lo = _dd(m1)
    m_hi, m_lo = _dd(slope)
    # run to the horizon even when the last checkpoint is earlier
    all_stops = np.append(stops, n_blocks)
    all_deltas = np.append(deltas, 0.0)
    out_sq, out_deck, out_refl, out_ly, bad = _flow(
        n_blocks, y_hi, y_lo, m1_hi, m1_lo, m_hi, m_lo, _CORNER_TOL, all_stops, all_deltas,
        sq0, maj, mnr, np.ascontiguousarray(c_maj), np.ascontiguousarray(c_mnr),
        np.ascontiguousarray(r_maj), np.ascontiguousarray(r_mnr))
    if bad >= 0:
        with mpmath.workdps(_DPS):
            t_bad = (bad + 1 - _mp(xs)) / (scale * u)
        raise CornerHit(float(t_bad))
    k = len(times)
    local = np.column_stack([local_major, out_ly[:k]])
    if swap:
        local = local[:, ::-1]
    return _Flow(out_sq[:k], out_deck[:k], out_refl[:k], local, swap)


def simulate(table: WindTreeTable, start: BilliardState, horizon: float,
             times: np.ndarray | None = None) -> DisplacementSeries:
    """Displacement ``d(t)`` at geometric checkpoints along a billiard trajectory.

    Path length and displacement are in lattice units.  Raises
    :class:`CornerHit` if the trajectory passes within rounding distance of
    an obstacle corner (or any grid vertex) before ``horizon``.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    s = table.surface
    times = checkpoint_times(horizon) if times is None else np.asarray(times, dtype=np.float64)
    if times.size and (np.any(np.diff(times) <= 0) or times[0] <= 0 or times[-1] > horizon):
        raise ValueError("checkpoint times must increase within (0, horizon]")
    flow = _run_flow(table, start, horizon, times, np.array(s.deck, dtype=np.int64))
    x0, y0 = (float(v) for v in start.absolute())
    pos = np.empty((times.shape[0], 2))
    for j in range(times.shape[0]):
        cell = (start.cell[0] + int(flow.deck[j, 0]), start.cell[1] + int(flow.deck[j, 1]))
        pos[j] = _billiard_point(s, int(flow.squares[j]), flow.local[j, 0], flow.local[j, 1], cell)
    disp = np.hypot(pos[:, 0] - x0, pos[:, 1] - y0) if times.size else np.empty(0)
    final = None
    if times.size:
        sx, sy, _, _ = s.labels[int(flow.squares[-1])]
        d = start.direction
        fpx, fpy = Fraction(float(pos[-1, 0])), Fraction(float(pos[-1, 1]))
        cell = (math.floor(fpx), math.floor(fpy))
        final = BilliardState(cell, (fpx - cell[0], fpy - cell[1]),
                              Direction(sx * abs(d.x), sy * abs(d.y)))
    return DisplacementSeries(times, disp, int(flow.reflections[-1]) if times.size else 0,
                              final, pos)


def cover_displacement(table: WindTreeTable, start: BilliardState, horizon: float,
                       cochains: Sequence[Sequence[int]], times: np.ndarray | None = None
                       ) -> tuple[np.ndarray, np.ndarray]:
    """Deck coordinates on the cover defined by integer cochains on dual moves.

    ``cochains`` are cocycles on the unfolded surface (one per cover
    coordinate); returns ``(times, deck)`` with ``deck`` of shape
    ``(len(times), len(cochains))``.
    """
    times = checkpoint_times(horizon) if times is None else np.asarray(times, dtype=np.float64)
    c = np.array(cochains, dtype=np.int64).T.copy()
    if c.shape[0] != 2 * table.surface.n_squares:
        raise DimensionMismatch("cochain length does not match the surface")
    return times, _run_flow(table, start, horizon, times, c).deck


def simulate_with_retries(table: WindTreeTable, start: BilliardState, horizon: float,
                          retries: int = 3, eps: Fraction = Fraction(1, 10 ** 9)):
    """Run :func:`simulate`, nudging the start by ``eps`` after each corner hit.

    Returns ``(series, retries_used)``; re-raises after ``retries`` failures.
    """
    state = start
    for attempt in range(retries + 1):
        try:
            return simulate(table, state, horizon), attempt
        except CornerHit:
            if attempt == retries:
                raise
            log.info("corner hit; nudging start (attempt %d)", attempt + 1)
            state = state.nudged(eps * (attempt + 1))
    raise AssertionError("unreachable")


# -- reference engine -----------------------------------------------------------


@dataclass(frozen=True)
class Event:
    path_length: mpmath.mpf
    kind: str  # "reflect-x", "reflect-y", "cross-x", "cross-y"
    position: tuple[mpmath.mpf, mpmath.mpf]
    direction: tuple[mpmath.mpf, mpmath.mpf]


def trace_events(table: WindTreeTable, start: BilliardState, path_length, dps: int = 40,
                 max_events: int = 10 ** 6) -> tuple[list[Event], tuple, tuple]:
    """Event-driven billiard: returns events, final position and final direction."""
    with mpmath.workdps(dps):
        q = table.surface.q
        wa, wb = table.surface.obstacle_cells
        x, y = (_mp(c) for c in start.absolute())
        dx, dy = mpmath.mpf(start.direction.x), mpmath.mpf(start.direction.y)
        gx, gy = int(mpmath.floor(x * q)), int(mpmath.floor(y * q))
        remaining = _mp(path_length)
        travelled = mpmath.mpf(0)
        tol = mpmath.mpf(10) ** (-(dps - 10))
        events: list[Event] = []

        def blocked(cx, cy):
            return cx % q < wa and cy % q < wb

        while remaining > 0 and len(events) < max_events:
            inf = mpmath.inf
            tx = ((mpmath.mpf(gx + (1 if dx > 0 else 0)) / q) - x) / dx if dx != 0 else inf
            ty = ((mpmath.mpf(gy + (1 if dy > 0 else 0)) / q) - y) / dy if dy != 0 else inf
            if tx != inf and ty != inf and abs(tx - ty) < tol:
                raise CornerHit(float(travelled + tx))
            step = min(tx, ty)
            if step >= remaining:
                x += dx * remaining
                y += dy * remaining
                travelled += remaining
                break
            x += dx * step
            y += dy * step
            travelled += step
            remaining -= step
            if tx < ty:
                nx = gx + (1 if dx > 0 else -1)
                if blocked(nx, gy):
                    dx = -dx
                    kind = "reflect-x"
                else:
                    gx = nx
                    kind = "cross-x"
            else:
                ny = gy + (1 if dy > 0 else -1)
                if blocked(gx, ny):
                    dy = -dy
                    kind = "reflect-y"
                else:
                    gy = ny
                    kind = "cross-y"
            events.append(Event(travelled, kind, (x, y), (dx, dy)))
        return events, (x, y), (dx, dy)


# -- slopes -------------------------------------------------------------------


@dataclass(frozen=True)
class DiffusionEstimate:
    samples: tuple[tuple[float, float], ...]
    slope: float
    window: tuple[int, int]
    intercept: float = 0.0

    def recompute(self) -> float:
        pts = [p for p in self.samples[self.window[0]:self.window[1]] if math.isfinite(p[1])]
        x = np.array([p[0] for p in pts])
        y = np.array([p[1] for p in pts])
        return float(np.polyfit(x, y, 1)[0])


def _upper_half(times: np.ndarray) -> tuple[int, int]:
    lt = np.log(times)
    mid = 0.5 * (lt[0] + lt[-1])
    return int(np.searchsorted(lt, mid - 1e-12)), len(times)


def estimate_slope(times, displacement, window: tuple[int, int] | None = None,
                   floor: float = DISPLACEMENT_FLOOR) -> DiffusionEstimate:
    """Least-squares slope of ``log d`` against ``log t`` over ``window``.

    Checkpoints with ``d < floor`` are left out of the fit.
    """
    t = np.asarray(times, dtype=np.float64)
    d = np.asarray(displacement, dtype=np.float64)
    if t.size < 10:
        raise InsufficientData(f"only {t.size} checkpoints")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    lo, hi = window if window is not None else _upper_half(t)
    if hi - lo < 10:
        raise InsufficientData(f"window holds {hi - lo} checkpoints, need 10")
    with np.errstate(divide="ignore"):
        samples = tuple(zip(np.log(t).tolist(), np.where(d >= floor, np.log(d), -np.inf).tolist()))
    sel = [p for p in samples[lo:hi] if math.isfinite(p[1])]
    if len(sel) < 2:
        raise InsufficientData("fewer than two checkpoints above the displacement floor")
    x = np.array([p[0] for p in sel])
    y = np.array([p[1] for p in sel])
    slope, intercept = np.polyfit(x, y, 1)
    return DiffusionEstimate(samples, float(slope), (lo, hi), float(intercept))


def expanding_direction(m: PlanarMatrix) -> Direction:
    """Unit eigenvector of the eigenvalue of largest modulus, upper half-plane."""
    if classify(m).tag != "hyperbolic":
        raise ValueError("matrix is not hyperbolic")
    with mpmath.workdps(_DPS):
        a, b, c, d = (mpmath.mpf(v.numerator) / v.denominator for v in (m.a, m.b, m.c, m.d))
        t = a + d
        root = mpmath.sqrt(t * t - 4)
        lam = (t + root) / 2 if t > 0 else (t - root) / 2
        if abs(b) + abs(lam - a) >= abs(c) + abs(lam - d):
            vx, vy = b, lam - a
        else:
            vx, vy = lam - d, c
        if vy < 0 or (vy == 0 and vx < 0):
            vx, vy = -vx, -vy
        return Direction.from_vector(vx, vy)


def kernel_direction_diffusion(table: WindTreeTable, spec: CoverSpec, kernel_word: GroupWord,
                               derivatives: Sequence[PlanarMatrix], horizon: float,
                               start: BilliardState | None = None, retries: int = 3):
    """Slope estimate along the expanding direction of a kernel word.

    Returns ``(estimate, series, retries_used)``.
    """
    m = kernel_word.evaluate(list(derivatives))
    direction = expanding_direction(m)
    start = start or default_start(table, direction)
    if start.direction != direction:
        start = BilliardState(start.cell, start.position, direction)
    series, used = simulate_with_retries(table, start, horizon, retries)
    return estimate_slope(series.times, series.displacement), series, used
