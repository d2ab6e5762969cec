from fractions import Fraction

import sympy
from hypothesis import given
from hypothesis import strategies as st

from windtree import lattice

small = st.integers(-6, 6)


def int_matrix(rows=st.integers(1, 4), cols=st.integers(1, 5)):
    return st.tuples(rows, cols).flatmap(
        lambda rc: st.lists(st.lists(small, min_size=rc[1], max_size=rc[1]),
                            min_size=rc[0], max_size=rc[0]))


@given(int_matrix())
def test_rank_routes_agree(m):
    r = sympy.Matrix(m).rank()
    assert lattice.rank(m) == r
    assert lattice.fraction_free_rank(m) == r


@given(int_matrix())
def test_hnf_spans_same_lattice(m):
    h = lattice.hnf_rows(m)
    assert len(h) == sympy.Matrix(m).rank()
    # each original row is an integer combination of the HNF rows and vice versa
    for row in m:
        x = lattice.solve([list(r) for r in h], row)
        assert x is not None and all(c.denominator == 1 for c in x)
    assert lattice.hnf_rows(h) == h


@given(int_matrix())
def test_saturation(m):
    dim = len(m[0])
    sat = lattice.saturate(m, dim)
    assert lattice.is_saturated(sat)
    assert len(sat) == sympy.Matrix(m).rank()
    for row in m:
        assert lattice.solve(sat, row) is not None


@given(int_matrix())
def test_integer_kernel(m):
    n = len(m[0])
    k = lattice.integer_kernel(m, n)
    assert len(k) == n - sympy.Matrix(m).rank()
    for v in k:
        assert lattice.matvec(m, v) == [0] * len(m)
    assert lattice.is_saturated(k)


def test_elementary_divisors_example():
    assert lattice.elementary_divisors([[2, 0], [0, 4]]) == [2, 4]
    assert lattice.elementary_divisors([[2, 4], [6, 8]]) == [2, 4]
    assert not lattice.is_saturated([[2, 2]])


def test_inverse():
    m = [[2, 1], [1, 1]]
    assert lattice.unimodular_inverse(m) == [[1, -1], [-1, 2]]
    assert lattice.inverse([[2, 0], [0, 1]]) == [[Fraction(1, 2), 0], [0, 1]]
    assert lattice.determinant(m) == 1
