"""Small exact integer/rational linear algebra used across the package.

Matrices are plain nested lists (or tuples) of Python ints.  Smith
decompositions come from sympy's ``DomainMatrix``; everything else is done
by hand on small matrices.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Sequence

from sympy import QQ, ZZ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.normalforms import smith_normal_decomp, invariant_factors

Matrix = list[list[int]]


def _dm(rows: Sequence[Sequence[int]], ncols: int | None = None) -> DomainMatrix:
    rows = [list(map(int, r)) for r in rows]
    if not rows:
        return DomainMatrix.zeros((0, ncols or 0), ZZ)
    return DomainMatrix(rows, (len(rows), len(rows[0])), ZZ)


def transpose(m: Sequence[Sequence[int]]) -> Matrix:
    return [list(col) for col in zip(*m)]


def matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> list[list]:
    bt = list(zip(*b))
    return [[sum(x * y for x, y in zip(row, col)) for col in bt] for row in a]


def matvec(a: Sequence[Sequence], v: Sequence) -> list:
    return [sum(x * y for x, y in zip(row, v)) for row in a]


def identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def rank(rows: Sequence[Sequence[int]]) -> int:
    if not rows:
        return 0
    return _dm(rows).convert_to(QQ).rank()


def fraction_free_rank(rows: Sequence[Sequence[int]]) -> int:
    """Rank by Bareiss elimination; kept separate from :func:`rank` as a cross-check."""
    m = [list(map(int, r)) for r in rows]
    if not m:
        return 0
    nrows, ncols = len(m), len(m[0])
    r, prev = 0, 1
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        for i in range(r + 1, nrows):
            for j in range(c + 1, ncols):
                m[i][j] = (m[r][c] * m[i][j] - m[i][c] * m[r][j]) // prev
            m[i][c] = 0
        prev = m[r][c]
        r += 1
        if r == nrows:
            break
    return r


def determinant(m: Sequence[Sequence[int]]) -> int:
    if not m:
        return 1
    return int(_dm(m).det())


def inverse(m: Sequence[Sequence[int]]) -> list[list[Fraction]]:
    """Exact rational inverse by Gauss-Jordan."""
    n = len(m)
    aug = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(m)]
    for c in range(n):
        piv = next((i for i in range(c, n) if aug[i][c] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        aug[c], aug[piv] = aug[piv], aug[c]
        p = aug[c][c]
        aug[c] = [x / p for x in aug[c]]
        for i in range(n):
            if i != c and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[c])]
    return [row[n:] for row in aug]


def unimodular_inverse(m: Sequence[Sequence[int]]) -> Matrix:
    inv = inverse(m)
    if any(x.denominator != 1 for row in inv for x in row):
        raise ValueError("matrix is not unimodular")
    return [[int(x) for x in row] for row in inv]


def solve(columns: Sequence[Sequence[int]], v: Sequence[int]) -> list[Fraction] | None:
    """Coefficients ``x`` with ``sum x_k columns[k] = v``; None if ``v`` is outside the span."""
    k = len(columns)
    n = len(v)
    if k == 0:
        return [] if all(x == 0 for x in v) else None
    aug = [[Fraction(columns[j][i]) for j in range(k)] + [Fraction(v[i])] for i in range(n)]
    pivots = []
    r = 0
    for c in range(k):
        piv = next((i for i in range(r, n) if aug[i][c] != 0), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        p = aug[r][c]
        aug[r] = [x / p for x in aug[r]]
        for i in range(n):
            if i != r and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[r])]
        pivots.append(c)
        r += 1
    if any(aug[i][k] != 0 for i in range(r, n)):
        return None
    x = [Fraction(0)] * k
    for i, c in enumerate(pivots):
        x[c] = aug[i][k]
    return x


def hnf_rows(rows: Sequence[Sequence[int]]) -> Matrix:
    """Row-style Hermite normal form; zero rows dropped.

    Pivots are positive and entries above each pivot are reduced into
    ``[0, pivot)``, so the result is a canonical basis of the row lattice.
    """
    m = [list(map(int, r)) for r in rows if any(r)]
    if not m:
        return []
    ncols = len(m[0])
    r = 0
    for c in range(ncols):
        # Euclid down the column until a single nonzero entry remains
        while True:
            nz = [i for i in range(r, len(m)) if m[i][c] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda i: abs(m[i][c]))
            m[r], m[piv] = m[piv], m[r]
            done = True
            for i in range(r + 1, len(m)):
                if m[i][c]:
                    q = m[i][c] // m[r][c]
                    m[i] = [x - q * y for x, y in zip(m[i], m[r])]
                    if m[i][c]:
                        done = False
            if done:
                break
        if r < len(m) and m[r][c] != 0:
            if m[r][c] < 0:
                m[r] = [-x for x in m[r]]
            for i in range(r):
                q = m[i][c] // m[r][c]
                if q:
                    m[i] = [x - q * y for x, y in zip(m[i], m[r])]
            r += 1
            if r == len(m):
                break
    return [row for row in m if any(row)]


def elementary_divisors(rows: Sequence[Sequence[int]]) -> list[int]:
    """Nonzero invariant factors of an integer matrix."""
    if not rows or not any(any(r) for r in rows):
        return []
    return [int(abs(d)) for d in invariant_factors(_dm(rows)) if d != 0]


def saturate(vectors: Sequence[Sequence[int]], dim: int) -> Matrix:
    """Basis (as rows) of ``span_Q(vectors) n Z^dim``, in row Hermite form."""
    vecs = [list(map(int, v)) for v in vectors if any(v)]
    if not vecs:
        return []
    basis = hnf_rows(vecs)
    k = len(basis)
    # columns of the basis matrix: dim x k; S * B * T = D
    cols = transpose(basis)
    D, S, _ = smith_normal_decomp(_dm(cols))
    s_inv = unimodular_inverse(S.to_Matrix().tolist())
    sat = [[s_inv[i][j] for i in range(dim)] for j in range(k)]
    return hnf_rows(sat)


def is_saturated(vectors: Sequence[Sequence[int]]) -> bool:
    vecs = [v for v in vectors if any(v)]
    return all(d == 1 for d in elementary_divisors(vecs))


def integer_kernel(rows: Sequence[Sequence[int]], ncols: int) -> Matrix:
    """Lattice basis (as rows) of ``{x in Z^ncols : rows . x = 0}``."""
    if not rows:
        return identity(ncols)
    # augment [A^T | I] and row-reduce: rows whose A-part vanishes span the kernel
    at = transpose(rows)
    aug = [list(at[i]) + [int(i == j) for j in range(ncols)] for i in range(ncols)]
    h = hnf_rows(aug)
    m = len(rows)
    kern = [row[m:] for row in h if not any(row[:m])]
    return hnf_rows(kern)


def primitive(v: Sequence[int]) -> bool:
    g = 0
    for x in v:
        g = gcd(g, int(x))
    return g == 1
