"""Square-tiled translation surfaces and their integer homology.

An origami with ``N`` squares is given by two permutations: ``right[i]`` is
the square glued to the right edge of square ``i`` and ``top[i]`` the square
glued above it.  Edges are indexed so that primal and dual chains share one
coordinate system of length ``2N``:

* index ``i``       -- primal: bottom edge ``h_i`` of square ``i`` (pointing right);
                       dual: the move ``R_i`` from square ``i`` to ``right[i]``;
* index ``N + i``   -- primal: left edge ``v_i`` of square ``i`` (pointing up);
                       dual: the move ``U_i`` from square ``i`` to ``top[i]``.

A closed dual path ``R_i``/``U_i`` is homotopic to the primal edge path
``h_i``/``v_i`` obtained by sliding every square centre to its bottom-left
corner, so one integer vector represents the same homology class in both
pictures.  Intersection numbers are computed between a primal chain and a
dual chain, which meet transversally at edge midpoints.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import lcm
from pathlib import Path
from typing import Sequence

from . import lattice

__all__ = [
    "TranslationSurface",
    "WindTreeSurface",
    "HomologyLattice",
    "CohomologyClass",
    "InvalidParameter",
    "DimensionMismatch",
    "SurfaceFormatError",
    "torus",
    "build_windtree_surface",
    "homology",
    "intersection",
    "holonomy",
    "chain_holonomy",
    "poincare_dual",
    "class_of_cochain",
    "cochain_of_class",
    "load_surface",
]

SURFACE_FORMAT_VERSION = 1


class InvalidParameter(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class SurfaceFormatError(ValueError):
    pass


def _inverse_perm(p: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(p)
    for i, j in enumerate(p):
        inv[j] = i
    return tuple(inv)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b) -> bool:
        a, b = self.find(a), self.find(b)
        if a == b:
            return False
        if b < a:
            a, b = b, a
        self.parent[b] = a
        return True


@dataclass(frozen=True)
class TranslationSurface:
    """Origami given by its right/top gluing permutations.

    ``scale`` is the side length of each square, so holonomies are exact
    rationals in the units of the surface.
    """

    right: tuple[int, ...]
    top: tuple[int, ...]
    scale: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "right", tuple(int(x) for x in self.right))
        object.__setattr__(self, "top", tuple(int(x) for x in self.top))
        object.__setattr__(self, "scale", Fraction(self.scale))
        n = len(self.right)
        if n == 0 or len(self.top) != n:
            raise InvalidParameter("right and top must be permutations of the same nonzero size")
        for name in ("right", "top"):
            if sorted(getattr(self, name)) != list(range(n)):
                raise InvalidParameter(f"{name} is not a permutation of 0..{n - 1}")
        if self.scale <= 0:
            raise InvalidParameter("scale must be positive")

    @property
    def n_squares(self) -> int:
        return len(self.right)

    @cached_property
    def right_inv(self) -> tuple[int, ...]:
        return _inverse_perm(self.right)

    @cached_property
    def top_inv(self) -> tuple[int, ...]:
        return _inverse_perm(self.top)

    # -- cell complex ------------------------------------------------------

    @cached_property
    def _corner_classes(self) -> tuple[int, ...]:
        """Vertex id of every corner ``4*i + k`` (k: 0=BL, 1=BR, 2=TL, 3=TR)."""
        n = self.n_squares
        uf = _UnionFind(4 * n)
        r, u = self.right, self.top
        for i in range(n):
            uf.union(4 * i + 1, 4 * r[i] + 0)
            uf.union(4 * i + 2, 4 * u[i] + 0)
            uf.union(4 * i + 3, 4 * r[i] + 2)
            uf.union(4 * i + 3, 4 * u[i] + 1)
        roots = {}
        ids = []
        for c in range(4 * n):
            ids.append(roots.setdefault(uf.find(c), len(roots)))
        return tuple(ids)

    def vertex(self, square: int, corner: int) -> int:
        return self._corner_classes[4 * square + corner]

    @property
    def n_vertices(self) -> int:
        return max(self._corner_classes) + 1

    @cached_property
    def cone_angles(self) -> tuple[int, ...]:
        """Cone angle of every vertex as a multiple of 2*pi."""
        counts = [0] * self.n_vertices
        for v in self._corner_classes:
            counts[v] += 1
        assert all(c % 4 == 0 for c in counts)
        return tuple(c // 4 for c in counts)

    @property
    def singularities(self) -> list[tuple[int, int]]:
        """Cone points ``(vertex, angle / 2pi)``; regular vertices are left out."""
        return [(v, k) for v, k in enumerate(self.cone_angles) if k > 1]

    @property
    def genus(self) -> int:
        excess = sum(k - 1 for k in self.cone_angles)
        return excess // 2 + 1

    @property
    def euler_characteristic(self) -> int:
        n = self.n_squares
        return self.n_vertices - 2 * n + n

    def edge_endpoints(self, index: int) -> tuple[int, int]:
        """(start, end) vertex of primal edge ``index``."""
        n = self.n_squares
        if index < n:
            return self.vertex(index, 0), self.vertex(index, 1)
        i = index - n
        return self.vertex(i, 0), self.vertex(i, 2)

    def dual_endpoints(self, index: int) -> tuple[int, int]:
        """(source, target) square of dual move ``index``."""
        n = self.n_squares
        if index < n:
            return index, self.right[index]
        return index - n, self.top[index - n]

    def crossed_edge(self, index: int) -> int:
        """Primal edge crossed by dual move ``index``."""
        n = self.n_squares
        if index < n:
            return n + self.right[index]
        return self.top[index - n]

    def is_connected(self) -> bool:
        seen = {0}
        todo = [0]
        while todo:
            x = todo.pop()
            for y in (self.right[x], self.top[x], self.right_inv[x], self.top_inv[x]):
                if y not in seen:
                    seen.add(y)
                    todo.append(y)
        return len(seen) == self.n_squares

    def edge_gluings(self):
        """Every glued edge pair with the holonomy of both sides (for validation)."""
        s = self.scale
        for i in range(self.n_squares):
            yield ("right", i), ("left", self.right[i]), (s, Fraction(0)), (s, Fraction(0))
            yield ("top", i), ("bottom", self.top[i]), (Fraction(0), s), (Fraction(0), s)

    def dual_divergence(self, chain: Sequence[int]) -> list[int]:
        """Net outflow of a dual chain at every square (zero iff closed)."""
        out = [0] * self.n_squares
        for k, c in enumerate(chain):
            if c:
                a, b = self.dual_endpoints(k)
                out[a] += c
                out[b] -= c
        return out

    def primal_boundary(self, chain: Sequence[int]) -> list[int]:
        out = [0] * self.n_vertices
        for k, c in enumerate(chain):
            if c:
                a, b = self.edge_endpoints(k)
                out[b] += c
                out[a] -= c
        return out

    def vertex_loop(self, v: int) -> tuple[int, ...]:
        """Counter-clockwise dual loop around vertex ``v`` (a null-homologous cycle)."""
        n = self.n_squares
        out = [0] * (2 * n)
        for j in range(n):
            start, end = self.edge_endpoints(self.top[j])
            out[n + j] = int(start == v) - int(end == v)
            start, end = self.edge_endpoints(n + self.right[j])
            out[j] = int(end == v) - int(start == v)
        return tuple(out)

    def face_boundary(self, i: int) -> tuple[int, ...]:
        """Primal boundary of square ``i``: h_i + v_{r(i)} - h_{u(i)} - v_i."""
        n = self.n_squares
        out = [0] * (2 * n)
        out[i] += 1
        out[n + self.right[i]] += 1
        out[self.top[i]] -= 1
        out[n + i] -= 1
        return tuple(out)

    def primal_dual_pairing(self, a: Sequence[int], b: Sequence[int]) -> int:
        """Signed crossings of primal chain ``a`` with dual chain ``b``.

        ``h_i`` is crossed upward by ``U_{top^-1(i)}`` (sign +1) and ``v_i``
        rightward by ``R_{right^-1(i)}`` (sign -1).
        """
        n = self.n_squares
        ui, ri = self.top_inv, self.right_inv
        total = 0
        for i in range(n):
            if a[i]:
                total += a[i] * b[n + ui[i]]
            if a[n + i]:
                total -= a[n + i] * b[ri[i]]
        return total

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "version": SURFACE_FORMAT_VERSION,
            "n_squares": self.n_squares,
            "right": list(self.right),
            "top": list(self.top),
            "scale": [self.scale.numerator, self.scale.denominator],
        }

    @classmethod
    def from_json(cls, data: dict) -> TranslationSurface:
        allowed = {"version", "n_squares", "right", "top", "scale"}
        if not isinstance(data, dict):
            raise SurfaceFormatError("surface file must hold a JSON object")
        unknown = set(data) - allowed
        if unknown:
            raise SurfaceFormatError(f"unknown fields: {sorted(unknown)}")
        missing = {"n_squares", "right", "top"} - set(data)
        if missing:
            raise SurfaceFormatError(f"missing fields: {sorted(missing)}")
        if data.get("version", SURFACE_FORMAT_VERSION) != SURFACE_FORMAT_VERSION:
            raise SurfaceFormatError(f"unsupported version {data['version']}")
        n = data["n_squares"]
        if len(data["right"]) != n or len(data["top"]) != n:
            raise SurfaceFormatError("permutation length does not match n_squares")
        num, den = data.get("scale", [1, 1])
        try:
            return cls(tuple(data["right"]), tuple(data["top"]), Fraction(num, den))
        except InvalidParameter as exc:
            raise SurfaceFormatError(str(exc)) from exc

    def validate(self) -> list[str]:
        """Diagnostics for every failed surface invariant (empty when valid)."""
        problems = []
        if not self.is_connected():
            problems.append("surface is not connected")
        for (_, _), (_, _), h1, h2 in self.edge_gluings():
            if h1 != h2:
                problems.append("edge glued to a partner of different holonomy")
        excess = sum(k - 1 for k in self.cone_angles)
        if excess % 2:
            problems.append("odd total angle excess")
        if self.euler_characteristic != 2 - 2 * self.genus:
            problems.append(
                f"Gauss-Bonnet genus {self.genus} disagrees with Euler characteristic "
                f"{self.euler_characteristic}")
        if not problems:
            lat = homology(self)
            if lat.rank != 2 * self.genus:
                problems.append(f"homology rank {lat.rank} != 2g = {2 * self.genus}")
            if abs(lattice.determinant(lat.J)) != 1:
                problems.append("intersection form is not unimodular")
        return problems


def load_surface(path) -> TranslationSurface:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SurfaceFormatError(f"invalid JSON: {exc}") from exc
    return TranslationSurface.from_json(data)


def torus() -> TranslationSurface:
    return TranslationSurface((0,), (0,))


# -- wind-tree unfolding ----------------------------------------------------

COPIES = ((1, 1), (-1, 1), (1, -1), (-1, -1))


@dataclass(frozen=True)
class WindTreeSurface(TranslationSurface):
    """Compact translation surface unfolding the wind-tree table.

    Each square carries a label ``(sx, sy, cx, cy)``: the reflection copy
    (signs of the billiard velocity relative to the flow direction) and the
    grid cell of the fundamental domain.  Grid cells have side ``1/q`` where
    the obstacle lattice is the unit lattice.
    """

    a: Fraction = Fraction(1, 2)
    b: Fraction = Fraction(1, 2)
    q: int = 2
    labels: tuple[tuple[int, int, int, int], ...] = ()
    deck: tuple[tuple[int, int], ...] = field(default=(), repr=False)
    reflects: tuple[bool, ...] = field(default=(), repr=False)

    @property
    def obstacle_cells(self) -> tuple[int, int]:
        return int(self.a * self.q), int(self.b * self.q)

    def square_index(self, sx: int, sy: int, cx: int, cy: int) -> int:
        return self._label_index[(sx, sy, cx, cy)]

    @cached_property
    def _label_index(self):
        return {lab: i for i, lab in enumerate(self.labels)}

    def deck_cochain(self) -> list[tuple[int, int]]:
        """Lattice displacement picked up by each dual move (the cover's cocycle)."""
        return list(self.deck)


def build_windtree_surface(a, b) -> WindTreeSurface:
    """Unfold the wind-tree table with an ``a x b`` obstacle at each lattice point.

    The fundamental domain is the unit torus minus the obstacle, cut into a
    ``q x q`` grid (``q`` the common denominator of ``a`` and ``b``) with
    the obstacle occupying cells ``[0, aq) x [0, bq)``.  Four copies, one for
    each sign pattern of the velocity, are glued along the obstacle sides.
    """
    a, b = Fraction(a), Fraction(b)
    for name, x in (("a", a), ("b", b)):
        if not 0 < x < 1:
            raise InvalidParameter(f"{name} = {x} must lie in (0, 1)")
    q = lcm(a.denominator, b.denominator)
    wa, wb = int(a * q), int(b * q)

    def blocked(cx, cy):
        return cx < wa and cy < wb

    cells = [(cx, cy) for cy in range(q) for cx in range(q) if not blocked(cx, cy)]
    labels = [(sx, sy, cx, cy) for sx, sy in COPIES for cx, cy in cells]
    index = {lab: i for i, lab in enumerate(labels)}
    n = len(labels)
    right, top = [0] * n, [0] * n
    deck = [(0, 0)] * (2 * n)
    reflects = [False] * (2 * n)
    for i, (sx, sy, cx, cy) in enumerate(labels):
        nx = cx + sx
        if blocked(nx % q, cy):
            right[i] = index[(-sx, sy, cx, cy)]
            reflects[i] = True
        else:
            right[i] = index[(sx, sy, nx % q, cy)]
            deck[i] = (nx // q, 0)
        ny = cy + sy
        if blocked(cx, ny % q):
            top[i] = index[(sx, -sy, cx, cy)]
            reflects[n + i] = True
        else:
            top[i] = index[(sx, sy, cx, ny % q)]
            deck[n + i] = (0, ny // q)
    return WindTreeSurface(
        tuple(right), tuple(top), Fraction(1, q),
        a=a, b=b, q=q, labels=tuple(labels), deck=tuple(deck), reflects=tuple(reflects))


# -- homology -------------------------------------------------------------


@dataclass(frozen=True)
class CohomologyClass:
    """Integer cohomology class, stored as its values on the homology basis."""

    coefficients: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(int(x) for x in self.coefficients))

    def __len__(self):
        return len(self.coefficients)

    def __add__(self, other: CohomologyClass) -> CohomologyClass:
        if len(self) != len(other):
            raise DimensionMismatch("classes live on lattices of different rank")
        return CohomologyClass(tuple(x + y for x, y in zip(self.coefficients, other.coefficients)))

    def __neg__(self):
        return CohomologyClass(tuple(-x for x in self.coefficients))

    def __sub__(self, other):
        return self + (-other)

    def __rmul__(self, k: int):
        return CohomologyClass(tuple(k * x for x in self.coefficients))

    @property
    def is_primitive(self) -> bool:
        return lattice.primitive(self.coefficients)

    @property
    def is_zero(self) -> bool:
        return not any(self.coefficients)

    @classmethod
    def zero(cls, rank: int) -> CohomologyClass:
        return cls((0,) * rank)


@dataclass(frozen=True)
class HomologyLattice:
    """Basis of ``H_1(X, Z)`` by closed edge chains and its intersection matrix."""

    surface: TranslationSurface
    basis: tuple[tuple[int, ...], ...]
    J: tuple[tuple[int, ...], ...]

    @property
    def rank(self) -> int:
        return len(self.basis)

    @cached_property
    def J_inv(self) -> list[list[int]]:
        return lattice.unimodular_inverse(self.J)

    @cached_property
    def Jt_inv(self) -> list[list[int]]:
        return lattice.transpose(self.J_inv)

    def coordinates(self, chain: Sequence[int]) -> list[int]:
        """Basis coordinates of a closed chain (read as a primal cycle)."""
        s = self.surface
        p = [s.primal_dual_pairing(chain, b) for b in self.basis]
        return lattice.matvec(self.Jt_inv, p)

    def chain(self, coords: Sequence[int]) -> tuple[int, ...]:
        out = [0] * (2 * self.surface.n_squares)
        for c, b in zip(coords, self.basis):
            if c:
                for k, x in enumerate(b):
                    out[k] += c * x
        return tuple(out)

    @cached_property
    def periods(self) -> tuple[tuple[Fraction, Fraction], ...]:
        """Holonomy vector of each basis cycle."""
        return tuple(chain_holonomy(self.surface, b) for b in self.basis)


def chain_holonomy(surface: TranslationSurface, chain: Sequence[int]) -> tuple[Fraction, Fraction]:
    n = surface.n_squares
    return (surface.scale * sum(chain[:n]), surface.scale * sum(chain[n:]))


def _dual_spanning_tree(s: TranslationSurface):
    """BFS tree of the dual graph from square 0: ``parent[x] = (edge, sign)``.

    ``sign`` is +1 when the edge points from the parent to ``x``.
    """
    n = s.n_squares
    parent: dict[int, tuple[int, int] | None] = {0: None}
    queue = deque([0])
    while queue:
        x = queue.popleft()
        moves = [(x, s.right[x], +1), (n + x, s.top[x], +1),
                 (s.right_inv[x], s.right_inv[x], -1), (n + s.top_inv[x], s.top_inv[x], -1)]
        for edge, y, sign in moves:
            if y not in parent:
                parent[y] = (edge, sign)
                queue.append(y)
    return parent


def _path_to_root(s, parent, x) -> list[int]:
    out = [0] * (2 * s.n_squares)
    while parent[x] is not None:
        edge, sign = parent[x]
        out[edge] -= sign
        src, dst = s.dual_endpoints(edge)
        x = src if sign > 0 else dst
    return out


def tree_path(surface: TranslationSurface, x: int, y: int) -> list[int]:
    """Dual chain along the spanning tree from square ``x`` to square ``y``."""
    parent = _dual_spanning_tree(surface)
    px = _path_to_root(surface, parent, x)
    py = _path_to_root(surface, parent, y)
    return [a - b for a, b in zip(px, py)]


_HOMOLOGY_CACHE: dict[tuple, HomologyLattice] = {}


def homology(surface: TranslationSurface) -> HomologyLattice:
    """Tree-cotree homology basis of an origami with its intersection matrix."""
    key = (surface.right, surface.top, surface.scale)
    if key in _HOMOLOGY_CACHE:
        return _HOMOLOGY_CACHE[key]
    s = surface
    n = s.n_squares
    parent = _dual_spanning_tree(s)
    tree_edges = {p[0] for p in parent.values() if p is not None}
    uf = _UnionFind(s.n_vertices)
    cotree = set()
    crossed_by_tree = {s.crossed_edge(e) for e in tree_edges}
    for e in range(2 * n):
        if e in crossed_by_tree:
            continue
        a, b = s.edge_endpoints(e)
        if uf.union(a, b):
            cotree.add(e)
    basis = []
    for e in range(2 * n):
        if e in tree_edges or s.crossed_edge(e) in cotree:
            continue
        src, dst = s.dual_endpoints(e)
        cyc = [x - y for x, y in zip(_path_to_root(s, parent, dst), _path_to_root(s, parent, src))]
        cyc[e] += 1
        basis.append(tuple(cyc))
    J = tuple(tuple(s.primal_dual_pairing(x, y) for y in basis) for x in basis)
    lat = HomologyLattice(s, tuple(basis), J)
    _HOMOLOGY_CACHE[key] = lat
    return lat


def _as_chain(x, lat: HomologyLattice) -> tuple[int, ...]:
    if isinstance(x, CohomologyClass):
        if len(x) != lat.rank:
            raise DimensionMismatch(f"class of length {len(x)} on lattice of rank {lat.rank}")
        return lat.chain(_dual_coords(x, lat))
    x = tuple(x)
    if len(x) != 2 * lat.surface.n_squares:
        raise DimensionMismatch(f"chain of length {len(x)}, expected {2 * lat.surface.n_squares}")
    return x


def intersection(x, y, lat: HomologyLattice) -> int:
    """Algebraic intersection of two cycles (classes are paired through duality)."""
    if isinstance(x, CohomologyClass) != isinstance(y, CohomologyClass):
        raise DimensionMismatch("cannot pair a class with a chain; dualize first")
    cx, cy = _as_chain(x, lat), _as_chain(y, lat)
    return lat.surface.primal_dual_pairing(cx, cy)


def _dual_coords(c: CohomologyClass, lat: HomologyLattice) -> list[int]:
    # <d, b_k> = c_k  <=>  J^T d = c
    return lattice.matvec(lat.Jt_inv, c.coefficients)


def poincare_dual(c: CohomologyClass, lat: HomologyLattice) -> tuple[int, ...]:
    """Closed chain ``d`` with ``intersection(d, b) = c(b)`` for every basis cycle ``b``."""
    if len(c) != lat.rank:
        raise DimensionMismatch(f"class of length {len(c)} on lattice of rank {lat.rank}")
    return lat.chain(_dual_coords(c, lat))


def holonomy(c: CohomologyClass, lat: HomologyLattice) -> tuple[Fraction, Fraction]:
    """Holonomy of the Poincare dual cycle of ``c``."""
    d = _dual_coords(c, lat)
    hx = sum((k * p[0] for k, p in zip(d, lat.periods)), Fraction(0))
    hy = sum((k * p[1] for k, p in zip(d, lat.periods)), Fraction(0))
    return hx, hy


def evaluate_cochain(cochain: Sequence[int], chain: Sequence[int]) -> int:
    return sum(int(a) * int(b) for a, b in zip(cochain, chain) if b)


def class_of_cochain(cochain: Sequence[int], lat: HomologyLattice) -> CohomologyClass:
    """Cohomology class of an integer cochain on dual moves (must vanish on vertex loops)."""
    s = lat.surface
    for v in range(s.n_vertices):
        if evaluate_cochain(cochain, s.vertex_loop(v)):
            raise ValueError(f"cochain does not vanish around vertex {v}")
    return CohomologyClass(tuple(evaluate_cochain(cochain, b) for b in lat.basis))


def cochain_of_class(c: CohomologyClass, lat: HomologyLattice) -> list[int]:
    """A cochain on dual moves representing ``c``: crossings with its dual cycle."""
    s = lat.surface
    n = s.n_squares
    d = poincare_dual(c, lat)
    out = [0] * (2 * n)
    for j in range(n):
        out[n + j] = d[s.top[j]]
        out[j] = -d[n + s.right[j]]
    return out
