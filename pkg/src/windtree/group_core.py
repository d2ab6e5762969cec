"""Exact 2x2 matrices, freely reduced words, and a finite-group oracle.

Matrices are stored as exact rationals and always have determinant 1.
Words are freely reduced sequences of ``(generator, exponent)`` letters;
free reduction is the only simplification ever applied to them, so two
different words may still evaluate to the same matrix.
"""
from __future__ import annotations

import itertools
import math
import operator
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Sequence

import mpmath

__all__ = [
    "PlanarMatrix",
    "GroupWord",
    "ElementClass",
    "FiniteGroupTable",
    "NotHyperbolic",
    "NotNormal",
    "multiply",
    "classify",
    "commutator",
    "fixed_directions",
    "fixed_direction_set",
    "commutator_containment_oracle",
    "ANGULAR_TOL",
]

ANGULAR_TOL = 1e-12
_DPS = 40


class NotHyperbolic(ValueError):
    pass


class NotNormal(ValueError):
    pass


@dataclass(frozen=True)
class PlanarMatrix:
    """A 2x2 rational matrix ``[[a, b], [c, d]]`` of determinant one."""

    a: Fraction
    b: Fraction
    c: Fraction
    d: Fraction

    def __post_init__(self):
        for name in "abcd":
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError(f"determinant must be 1, got {self.a * self.d - self.b * self.c}")

    @classmethod
    def from_rows(cls, rows) -> PlanarMatrix:
        (a, b), (c, d) = rows
        return cls(a, b, c, d)

    @classmethod
    def identity(cls) -> PlanarMatrix:
        return cls(1, 0, 0, 1)

    def rows(self):
        return ((self.a, self.b), (self.c, self.d))

    def int_rows(self) -> tuple[tuple[int, int], tuple[int, int]]:
        if any(x.denominator != 1 for x in (self.a, self.b, self.c, self.d)):
            raise ValueError("matrix has non-integer entries")
        return ((int(self.a), int(self.b)), (int(self.c), int(self.d)))

    @property
    def trace(self) -> Fraction:
        return self.a + self.d

    def inverse(self) -> PlanarMatrix:
        return PlanarMatrix(self.d, -self.b, -self.c, self.a)

    def __matmul__(self, other: PlanarMatrix) -> PlanarMatrix:
        return multiply(self, other)

    def __neg__(self) -> PlanarMatrix:
        return PlanarMatrix(-self.a, -self.b, -self.c, -self.d)

    def __pow__(self, n: int) -> PlanarMatrix:
        base = self if n >= 0 else self.inverse()
        result = PlanarMatrix.identity()
        for _ in range(abs(n)):
            result = result @ base
        return result

    @property
    def is_identity(self) -> bool:
        return self.a == 1 and self.d == 1 and self.b == 0 and self.c == 0

    @property
    def is_central(self) -> bool:
        return self.b == 0 and self.c == 0 and self.a == self.d and abs(self.a) == 1

    def __repr__(self):
        return f"PlanarMatrix([[{self.a}, {self.b}], [{self.c}, {self.d}]])"


def multiply(a: PlanarMatrix, b: PlanarMatrix) -> PlanarMatrix:
    return PlanarMatrix(
        a.a * b.a + a.b * b.c,
        a.a * b.b + a.b * b.d,
        a.c * b.a + a.d * b.c,
        a.c * b.b + a.d * b.d,
    )


def _reduce(letters: Iterable[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    out: list[tuple[int, int]] = []
    for g, e in letters:
        g, e = int(g), int(e)
        if e == 0:
            continue
        if out and out[-1][0] == g:
            e += out.pop()[1]
            if e == 0:
                continue
        out.append((g, e))
    return tuple(out)


@dataclass(frozen=True)
class GroupWord:
    """Freely reduced word; ``letters`` is a tuple of (generator, exponent)."""

    letters: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", _reduce(self.letters))

    @classmethod
    def gen(cls, index: int, exponent: int = 1) -> GroupWord:
        return cls(((index, exponent),))

    @classmethod
    def from_steps(cls, steps: Iterable[tuple[int, int]]) -> GroupWord:
        """Build from unit steps ``(generator, +-1)``."""
        return cls(tuple(steps))

    def steps(self) -> list[tuple[int, int]]:
        """Expand into unit letters ``(generator, +-1)``."""
        out = []
        for g, e in self.letters:
            s = 1 if e > 0 else -1
            out.extend([(g, s)] * abs(e))
        return out

    def __len__(self) -> int:
        return sum(abs(e) for _, e in self.letters)

    def __mul__(self, other: GroupWord) -> GroupWord:
        return GroupWord(self.letters + other.letters)

    def inverse(self) -> GroupWord:
        return GroupWord(tuple((g, -e) for g, e in reversed(self.letters)))

    def __pow__(self, n: int) -> GroupWord:
        base = self if n >= 0 else self.inverse()
        return GroupWord(base.letters * abs(n))

    @property
    def is_empty(self) -> bool:
        return not self.letters

    def evaluate(self, images: Sequence, inverse_images: Sequence | None = None,
                 identity=None, mul: Callable = operator.matmul):
        """Multiply out the word over ``images[g]``; left-to-right product."""
        if inverse_images is None:
            inverse_images = [m.inverse() for m in images]
        result = identity if identity is not None else type(images[0]).identity()
        for g, e in self.letters:
            factor = images[g] if e > 0 else inverse_images[g]
            for _ in range(abs(e)):
                result = mul(result, factor)
        return result

    def to_json(self) -> list[list[int]]:
        return [[g, e] for g, e in self.letters]

    @classmethod
    def from_json(cls, data) -> GroupWord:
        return cls(tuple((int(g), int(e)) for g, e in data))

    def __str__(self):
        if not self.letters:
            return "1"
        return "*".join(f"g{g}^{e}" if e != 1 else f"g{g}" for g, e in self.letters)


@dataclass(frozen=True)
class ElementClass:
    tag: str  # "elliptic" | "parabolic" | "hyperbolic"
    trace: Fraction
    is_central: bool = False

    @property
    def infinite_order(self) -> bool:
        return self.tag != "elliptic" and not self.is_central


def classify(m: PlanarMatrix) -> ElementClass:
    t = m.trace
    if m.is_central:
        # +-identity: reported under the elliptic tag, flagged central
        return ElementClass("elliptic", t, True)
    if abs(t) > 2:
        return ElementClass("hyperbolic", t)
    if abs(t) == 2:
        return ElementClass("parabolic", t)
    return ElementClass("elliptic", t)


def commutator(a, b):
    """``a b a^-1 b^-1`` for matrices or words."""
    if isinstance(a, GroupWord):
        return a * b * a.inverse() * b.inverse()
    return a @ b @ a.inverse() @ b.inverse()


def _angle(x, y) -> float:
    theta = mpmath.atan2(y, x)
    if theta < 0:
        theta += mpmath.pi
    if theta >= mpmath.pi:
        theta -= mpmath.pi
    return float(theta)


def _eigvec(m: PlanarMatrix, lam):
    a, b, c, d = (mpmath.mpf(x.numerator) / x.denominator for x in (m.a, m.b, m.c, m.d))
    # pick the better-conditioned row of (m - lam)
    if abs(b) + abs(lam - a) >= abs(c) + abs(lam - d):
        return b, lam - a
    return lam - d, c


def fixed_directions(m: PlanarMatrix) -> tuple[float, float]:
    """Eigen-directions in [0, pi) of a hyperbolic matrix, expanding first."""
    if classify(m).tag != "hyperbolic":
        raise NotHyperbolic(f"{m!r} is not hyperbolic")
    with mpmath.workdps(_DPS):
        t = mpmath.mpf(m.trace.numerator) / m.trace.denominator
        root = mpmath.sqrt(t * t - 4)
        big = (t + root) / 2 if t > 0 else (t - root) / 2
        small = 1 / big
        return _angle(*_eigvec(m, big)), _angle(*_eigvec(m, small))


def fixed_direction_set(m: PlanarMatrix) -> tuple[float, ...]:
    """Fixed boundary directions of any non-central element (empty if elliptic)."""
    cls = classify(m)
    if cls.tag == "hyperbolic":
        return fixed_directions(m)
    if cls.tag == "parabolic":
        with mpmath.workdps(_DPS):
            lam = mpmath.mpf(1 if m.trace > 0 else -1)
            return (_angle(*_eigvec(m, lam)),)
    return ()


def angular_distance(x: float, y: float) -> float:
    """Distance on the projective circle R/pi Z."""
    d = abs(x - y) % math.pi
    return min(d, math.pi - d)


# -- finite groups --------------------------------------------------------


@dataclass(frozen=True)
class FiniteGroupTable:
    """Multiplication table ``table[i][j] = i*j`` on elements ``0..order-1``."""

    table: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(tuple(int(x) for x in row) for row in self.table))
        n = self.order
        if any(len(row) != n for row in self.table):
            raise ValueError("table must be square")
        for row in self.table:
            if sorted(row) != list(range(n)):
                raise ValueError("each row must be a permutation")
        for col in zip(*self.table):
            if sorted(col) != list(range(n)):
                raise ValueError("each column must be a permutation")
        ident = self.identity
        if ident is None:
            raise ValueError("no identity element")
        for i in range(n):
            if ident not in self.table[i]:
                raise ValueError(f"element {i} has no inverse")
        # associativity is spot-checked; exhaustive for small groups
        triples = itertools.product(range(n), repeat=3) if n <= 24 else (
            (i % n, (7 * i + 3) % n, (13 * i + 5) % n) for i in range(2000))
        t = self.table
        for i, j, k in triples:
            if t[t[i][j]][k] != t[i][t[j][k]]:
                raise ValueError("table is not associative")

    @property
    def order(self) -> int:
        return len(self.table)

    @cached_property
    def identity(self) -> int | None:
        for e in range(self.order):
            if all(self.table[e][x] == x == self.table[x][e] for x in range(self.order)):
                return e
        return None

    def mul(self, i: int, j: int) -> int:
        return self.table[i][j]

    @cached_property
    def _inverses(self) -> tuple[int, ...]:
        return tuple(row.index(self.identity) for row in self.table)

    def inv(self, i: int) -> int:
        return self._inverses[i]

    def commutator(self, i: int, j: int) -> int:
        t, inv = self.table, self._inverses
        return t[t[t[i][j]][inv[i]]][inv[j]]

    def is_subgroup(self, mask: frozenset[int]) -> bool:
        if self.identity not in mask:
            return False
        return all(self.mul(x, self.inv(y)) in mask for x in mask for y in mask)

    def is_normal(self, mask: frozenset[int]) -> bool:
        if not self.is_subgroup(mask):
            return False
        return all(self.mul(self.mul(g, h), self.inv(g)) in mask
                   for g in range(self.order) for h in mask)

    def subgroup_closure(self, gens: Iterable[int]) -> frozenset[int]:
        out = {self.identity}
        frontier = list(gens)
        while frontier:
            x = frontier.pop()
            if x in out:
                continue
            out.add(x)
            frontier.extend(self.mul(x, y) for y in list(out))
            frontier.extend(self.mul(y, x) for y in list(out))
        return frozenset(out)

    def normal_closure(self, gens: Iterable[int]) -> frozenset[int]:
        t, inv = self.table, self._inverses
        conj = {t[t[g][x]][inv[g]] for x in gens for g in range(self.order)}
        return self.subgroup_closure(conj)

    def normal_subgroups(self) -> list[frozenset[int]]:
        """All normal subgroups, as joins of normal closures of single elements."""
        found = {frozenset([self.identity])}
        found.update(self.normal_closure([x]) for x in range(self.order))
        changed = True
        while changed:
            changed = False
            for p, q in itertools.combinations(list(found), 2):
                j = self.normal_closure(p | q)
                if j not in found:
                    found.add(j)
                    changed = True
        return sorted(found, key=lambda s: (len(s), sorted(s)))

    @classmethod
    def from_permutations(cls, gens: Sequence[Sequence[int]]) -> FiniteGroupTable:
        """Group generated by permutations (composition ``(p*q)(x) = p(q(x))``)."""
        n = len(gens[0])
        ident = tuple(range(n))
        elems = [ident]
        seen = {ident}
        i = 0
        while i < len(elems):
            for g in gens:
                h = tuple(elems[i][g[x]] for x in range(n))
                if h not in seen:
                    seen.add(h)
                    elems.append(h)
            i += 1
        elems.sort()
        index = {e: k for k, e in enumerate(elems)}
        table = [[index[tuple(p[q[x]] for x in range(n))] for q in elems] for p in elems]
        return cls(tuple(map(tuple, table)))

    def dumps(self) -> str:
        lines = [str(self.order)] + [" ".join(map(str, row)) for row in self.table]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> FiniteGroupTable:
        lines = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
        n = int(lines[0][0])
        rows = lines[1:]
        if len(rows) != n:
            raise ValueError(f"expected {n} rows, found {len(rows)}")
        return cls(tuple(tuple(int(x) for x in row) for row in rows))

    @classmethod
    def load(cls, path) -> FiniteGroupTable:
        return cls.loads(Path(path).read_text())


def commutator_containment_oracle(group: FiniteGroupTable, a_mask: Iterable[int], b_mask: Iterable[int]) -> bool:
    """Exhaustively check ``[A, B] <= A n B`` for normal subgroups ``A, B``."""
    A, B = frozenset(a_mask), frozenset(b_mask)
    for name, mask in (("A", A), ("B", B)):
        if not group.is_normal(mask):
            raise NotNormal(f"{name} is not a normal subgroup")
    both = A & B
    return all(group.commutator(a, b) in both for a in A for b in B)
