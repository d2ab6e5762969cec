import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from windtree.group_core import (
    ANGULAR_TOL,
    FiniteGroupTable,
    GroupWord,
    NotHyperbolic,
    NotNormal,
    PlanarMatrix,
    angular_distance,
    classify,
    commutator,
    fixed_directions,
    multiply,
    commutator_containment_oracle,
)

from conftest import FIXTURES

GROUP_FILES = sorted((FIXTURES / "groups").glob("*.txt"))


def naive(a, b):
    """2x2 product written out entry by entry."""
    (a11, a12), (a21, a22) = a
    (b11, b12), (b21, b22) = b
    return ((a11 * b11 + a12 * b21, a11 * b12 + a12 * b22),
            (a21 * b11 + a22 * b21, a21 * b12 + a22 * b22))


def M(rows):
    return PlanarMatrix.from_rows(rows)


# unimodular matrices as products of elementary shears
_shears = st.sampled_from([((1, 1), (0, 1)), ((1, -1), (0, 1)), ((1, 0), (1, 1)),
                           ((1, 0), (-1, 1)), ((1, Fraction(1, 2)), (0, 1)),
                           ((2, 0), (0, Fraction(1, 2)))])
matrices = st.lists(_shears, min_size=0, max_size=12).map(
    lambda fs: PlanarMatrix.from_rows(_prod(fs)))


def _prod(factors):
    out = ((1, 0), (0, 1))
    for f in factors:
        out = naive(out, f)
    return out


class TestMultiply:
    def test_identity(self):
        m = M([[2, 1], [1, 1]])
        assert multiply(PlanarMatrix.identity(), m) == m

    def test_shears(self):
        assert multiply(M([[1, 1], [0, 1]]), M([[1, 0], [1, 1]])) == M([[2, 1], [1, 1]])

    @given(matrices, matrices)
    def test_against_naive(self, a, b):
        assert multiply(a, b).rows() == naive(a.rows(), b.rows())

    def test_determinant_enforced(self):
        with pytest.raises(ValueError):
            M([[1, 1], [1, 1]])


class TestClassify:
    def test_identity_flagged(self):
        c = classify(PlanarMatrix.identity())
        assert c.tag == "elliptic" and c.is_central and c.trace == 2
        assert classify(-PlanarMatrix.identity()).is_central

    def test_examples(self):
        assert classify(M([[2, 1], [1, 1]])).tag == "hyperbolic"
        assert classify(M([[1, 5], [0, 1]])).tag == "parabolic"
        assert classify(M([[0, -1], [1, 0]])).tag == "elliptic"

    def test_trichotomy_randomized(self):
        rng = random.Random(7)
        for _ in range(1000):
            a = Fraction(rng.randint(-9, 9), rng.randint(1, 4))
            b = Fraction(rng.choice([-1, 1]) * rng.randint(1, 9), rng.randint(1, 4))
            c = Fraction(rng.randint(-9, 9), rng.randint(1, 4))
            d = (1 + b * c) / a if a else None
            if d is None:
                a, d, c = Fraction(0), Fraction(rng.randint(-5, 5)), -1 / b
            m = PlanarMatrix(a, b, c, d)
            t = abs(a + d)
            expected = "hyperbolic" if t > 2 else "parabolic" if t == 2 else "elliptic"
            if m.is_central:
                expected = "elliptic"
            assert classify(m).tag == expected


class TestCommutator:
    def test_self(self):
        m = M([[2, 1], [1, 1]])
        assert commutator(m, m).is_identity

    def test_hand_expanded(self):
        a, b = ((1, 2), (0, 1)), ((1, 0), (2, 1))
        ai, bi = ((1, -2), (0, 1)), ((1, 0), (-2, 1))
        expected = naive(naive(naive(a, b), ai), bi)
        assert expected == ((21, -8), (8, -3))
        assert commutator(M(a), M(b)).rows() == expected

    def test_identity_case(self):
        assert commutator(PlanarMatrix.identity(), M([[3, 2], [1, 1]])).is_identity

    def test_words_reduced(self):
        g0 = GroupWord.gen(0)
        assert commutator(g0, g0).is_empty
        w = commutator(GroupWord.gen(0, 2), GroupWord.gen(1))
        assert all(x[0] != y[0] for x, y in zip(w.letters, w.letters[1:]))


class TestFixedDirections:
    def test_diagonal(self):
        e, c = fixed_directions(M([[2, 0], [0, Fraction(1, 2)]]))
        assert e == pytest.approx(0, abs=ANGULAR_TOL)
        assert c == pytest.approx(math.pi / 2, abs=ANGULAR_TOL)

    def test_golden(self):
        m = M([[2, 1], [1, 1]])
        e, _ = fixed_directions(m)
        # eigenvalue (3 + sqrt5)/2 has eigenvector (1, (sqrt5 - 1)/2)
        assert e == pytest.approx(math.atan((math.sqrt(5) - 1) / 2), abs=1e-12)
        assert e == pytest.approx(0.55357, abs=1e-5)

    def test_inverse_swaps(self):
        m = M([[5, 2], [2, 1]])
        e, c = fixed_directions(m)
        ei, ci = fixed_directions(m.inverse())
        assert angular_distance(e, ci) < ANGULAR_TOL and angular_distance(c, ei) < ANGULAR_TOL

    def test_not_hyperbolic(self):
        with pytest.raises(NotHyperbolic):
            fixed_directions(M([[1, 1], [0, 1]]))

    @pytest.mark.parametrize("rows", [[[2, 1], [1, 1]], [[5, 2], [2, 1]], [[-191, 156], [-60, 49]],
                                      [[1, 2], [2, 5]], [[3, 1], [-1, 0]], [[0, 1], [-1, 3]]])
    def test_invariant(self, rows):
        m = M(rows)
        dirs = fixed_directions(m)
        assert angular_distance(*dirs) > ANGULAR_TOL
        for th in dirs:
            x, y = math.cos(th), math.sin(th)
            fx = float(m.a) * x + float(m.b) * y
            fy = float(m.c) * x + float(m.d) * y
            assert angular_distance(math.atan2(fy, fx), th) < 1e-9


@given(st.lists(st.tuples(st.integers(0, 2), st.sampled_from([-2, -1, 1, 3])), max_size=20))
def test_word_inverse_exact(letters):
    gens = [M([[1, Fraction(1, 3)], [0, 1]]), M([[2, 0], [Fraction(5, 7), Fraction(1, 2)]]),
            M([[Fraction(2, 3), 1], [Fraction(-1, 3), 1]])]
    w = GroupWord(tuple(letters))
    assert len(w) <= 60
    assert (w.evaluate(gens) @ w.inverse().evaluate(gens)).is_identity


def test_word_json_round_trip():
    w = GroupWord(((0, 2), (1, -1), (0, 1)))
    assert GroupWord.from_json(w.to_json()) == w
    assert GroupWord(((0, 1), (0, -1))).is_empty


class TestCommutatorContainment:
    @pytest.mark.parametrize("path", GROUP_FILES, ids=lambda p: p.stem)
    def test_exhaustive(self, path):
        g = FiniteGroupTable.load(path)
        assert g.order <= 24
        normals = g.normal_subgroups()
        for A in normals:
            for B in normals:
                assert commutator_containment_oracle(g, A, B)

    def test_whole_and_trivial(self):
        g = FiniteGroupTable.load(FIXTURES / "groups" / "s3.txt")
        whole = frozenset(range(g.order))
        assert commutator_containment_oracle(g, whole, whole)
        assert commutator_containment_oracle(g, {g.identity}, whole)

    def test_s4_alternating_klein(self):
        g = FiniteGroupTable.load(FIXTURES / "groups" / "s4.txt")
        by_size = {len(h): h for h in g.normal_subgroups()}
        A, V = by_size[12], by_size[4]
        pairs = [(a, b) for a in A for b in V]
        assert len(pairs) == 48
        assert all(g.commutator(a, b) in V for a, b in pairs)
        assert commutator_containment_oracle(g, A, V)

    def test_not_normal(self):
        g = FiniteGroupTable.load(FIXTURES / "groups" / "s3.txt")
        transposition = next(x for x in range(g.order)
                             if x != g.identity and g.mul(x, x) == g.identity)
        with pytest.raises(NotNormal):
            commutator_containment_oracle(g, {g.identity, transposition}, range(g.order))

    def test_table_round_trip(self):
        g = FiniteGroupTable.load(FIXTURES / "groups" / "q8.txt")
        assert FiniteGroupTable.loads(g.dumps()) == g

    def test_bad_table(self):
        with pytest.raises(ValueError):
            FiniteGroupTable(((0, 1), (0, 1)))
