import itertools
import json
import random
from fractions import Fraction

import pytest
import sympy
from sympy.matrices.normalforms import smith_normal_form
from hypothesis import given, settings
from hypothesis import strategies as st

from windtree import lattice
from windtree.surface import (
    CohomologyClass,
    DimensionMismatch,
    InvalidParameter,
    SurfaceFormatError,
    TranslationSurface,
    build_windtree_surface,
    class_of_cochain,
    cochain_of_class,
    evaluate_cochain,
    holonomy,
    homology,
    intersection,
    load_surface,
    poincare_dual,
    torus,
)


def commutator_cycles(s):
    """Cycle lengths of r u r^-1 u^-1: one cycle per vertex, length = cone angle / 2pi."""
    n = s.n_squares
    r, u = s.right, s.top
    ri, ui = s.right_inv, s.top_inv
    perm = [r[u[ri[ui[i]]]] for i in range(n)]
    seen, lengths = set(), []
    for i in range(n):
        if i in seen:
            continue
        k, j = 0, i
        while j not in seen:
            seen.add(j)
            j = perm[j]
            k += 1
        lengths.append(k)
    return sorted(lengths)


def crossing_oracle(s, primal, dual):
    """Signed crossings counted move by move from the square geometry.

    The move right from square j passes through the left side of right(j),
    a vertical edge; the move up passes through the bottom of top(j).  The
    sign is the orientation of (edge direction, move direction).
    """
    n = s.n_squares
    total = 0
    for j in range(n):
        # vertical edge (0,1) against rightward move (1,0): det = -1
        total -= dual[j] * primal[n + s.right[j]]
        # horizontal edge (1,0) against upward move (0,1): det = +1
        total += dual[n + j] * primal[s.top[j]]
    return total


def random_origami(rng, n):
    while True:
        r = list(range(n)); u = list(range(n))
        rng.shuffle(r); rng.shuffle(u)
        s = TranslationSurface(tuple(r), tuple(u))
        if s.is_connected():
            return s


ORIGAMIS = [torus(), build_windtree_surface(Fraction(1, 2), Fraction(1, 2)),
            build_windtree_surface(Fraction(1, 3), Fraction(2, 3)),
            TranslationSurface((1, 2, 0), (0, 1, 2)),
            TranslationSurface((1, 0, 2), (0, 2, 1))]
ORIGAMIS += [random_origami(random.Random(k), 3 + k) for k in range(6)]


class TestConstruction:
    def test_windtree_half(self):
        s = build_windtree_surface(Fraction(1, 2), Fraction(1, 2))
        assert s.q == 2 and s.n_squares == 12 and s.genus == 5
        assert s.is_connected() and s.validate() == []

    @pytest.mark.parametrize("a,b", [(0, Fraction(1, 2)), (1, Fraction(1, 2)),
                                     (Fraction(1, 2), 0), (Fraction(1, 2), Fraction(3, 2))])
    def test_degenerate(self, a, b):
        with pytest.raises(InvalidParameter):
            build_windtree_surface(a, b)

    def test_not_permutation(self):
        with pytest.raises(InvalidParameter):
            TranslationSurface((0, 0), (0, 1))

    def test_disconnected_reported(self):
        assert "surface is not connected" in TranslationSurface((0, 1), (0, 1)).validate()

    @pytest.mark.parametrize("s", ORIGAMIS, ids=lambda s: f"n{s.n_squares}")
    def test_genus_two_routes(self, s):
        cyc = commutator_cycles(s)
        assert len(cyc) == s.n_vertices
        assert sorted(s.cone_angles) == cyc
        chi = len(cyc) - 2 * s.n_squares + s.n_squares
        assert chi == 2 - 2 * s.genus
        assert sum(k - 1 for k in cyc) == 2 * s.genus - 2

    @pytest.mark.parametrize("s", ORIGAMIS, ids=lambda s: f"n{s.n_squares}")
    def test_gluing_holonomy(self, s):
        for _, _, h1, h2 in s.edge_gluings():
            assert h1 == h2

    def test_json_round_trip(self, tmp_path):
        s = build_windtree_surface(Fraction(1, 2), Fraction(1, 2))
        p = tmp_path / "s.json"
        p.write_text(json.dumps(s.to_json()))
        t = load_surface(p)
        assert (t.right, t.top, t.scale) == (s.right, s.top, s.scale)

    def test_unknown_field(self):
        with pytest.raises(SurfaceFormatError):
            TranslationSurface.from_json({"n_squares": 1, "right": [0], "top": [0], "colour": 1})

    def test_bad_permutation_in_file(self):
        with pytest.raises(SurfaceFormatError):
            TranslationSurface.from_json({"n_squares": 2, "right": [0, 0], "top": [0, 1]})


class TestHomology:
    def test_torus(self):
        lat = homology(torus())
        assert lat.rank == 2
        assert [list(r) for r in lat.J] in ([[0, 1], [-1, 0]], [[0, -1], [1, 0]])
        assert {p for p in lat.periods} == {(1, 0), (0, 1)}

    @pytest.mark.parametrize("s", ORIGAMIS, ids=lambda s: f"n{s.n_squares}")
    def test_rank_against_cellular_homology(self, s):
        n = s.n_squares
        d2 = sympy.zeros(2 * n, n)
        for i in range(n):
            d2[i, i] += 1
            d2[n + s.right[i], i] += 1
            d2[s.top[i], i] -= 1
            d2[n + i, i] -= 1
        d1 = sympy.zeros(s.n_vertices, 2 * n)
        for e in range(2 * n):
            a, b = s.edge_endpoints(e)
            d1[b, e] += 1
            d1[a, e] -= 1
        assert (d1 * d2).is_zero_matrix
        betti = (2 * n - d1.rank()) - d2.rank()
        snf = smith_normal_form(d2, domain=sympy.ZZ)
        torsion = [abs(snf[i, i]) for i in range(min(snf.shape)) if abs(snf[i, i]) > 1]
        assert torsion == []
        lat = homology(s)
        assert lat.rank == betti == 2 * s.genus
        assert abs(lattice.determinant(lat.J)) == 1

    @pytest.mark.parametrize("s", ORIGAMIS, ids=lambda s: f"n{s.n_squares}")
    def test_basis_closed(self, s):
        lat = homology(s)
        for b in lat.basis:
            assert not any(s.dual_divergence(b))
            assert not any(s.primal_boundary(b))

    @pytest.mark.parametrize("s", ORIGAMIS, ids=lambda s: f"n{s.n_squares}")
    def test_intersection_against_crossings(self, s):
        lat = homology(s)
        rng = random.Random(s.n_squares)
        for _ in range(20):
            x = lat.chain([rng.randint(-3, 3) for _ in range(lat.rank)])
            y = lat.chain([rng.randint(-3, 3) for _ in range(lat.rank)])
            assert intersection(x, y, lat) == crossing_oracle(s, x, y)
            assert intersection(x, y, lat) == -intersection(y, x, lat)
            assert intersection(x, x, lat) == 0

    def test_mismatch(self, lat):
        c = CohomologyClass.zero(lat.rank)
        with pytest.raises(DimensionMismatch):
            intersection(c, lat.basis[0], lat)
        with pytest.raises(DimensionMismatch):
            poincare_dual(CohomologyClass.zero(3), lat)
        with pytest.raises(DimensionMismatch):
            intersection((0, 1), (1, 0), lat)


classes10 = st.lists(st.integers(-5, 5), min_size=10, max_size=10).map(CohomologyClass)


class TestDuality:
    @given(classes10, classes10)
    def test_round_trip(self, lat, c, d):
        pd = poincare_dual(c, lat)
        assert [intersection(pd, b, lat) for b in lat.basis] == list(c.coefficients)
        assert lat.coordinates(pd) == lattice.matvec(lat.Jt_inv, c.coefficients)
        assert intersection(c, d, lat) == intersection(poincare_dual(c, lat),
                                                       poincare_dual(d, lat), lat)

    @given(classes10, classes10)
    def test_holonomy_additive(self, lat, c, d):
        hc, hd, hs = holonomy(c, lat), holonomy(d, lat), holonomy(c + d, lat)
        assert hs == (hc[0] + hd[0], hc[1] + hd[1])

    @given(classes10)
    def test_cochain_round_trip(self, lat, c):
        cochain = cochain_of_class(c, lat)
        assert class_of_cochain(cochain, lat) == c

    def test_zero(self, lat):
        assert holonomy(CohomologyClass.zero(lat.rank), lat) == (0, 0)

    def test_torus_horizontal(self):
        lat = homology(torus())
        h = next(b for b, p in zip(lat.basis, lat.periods) if p == (1, 0))
        c = CohomologyClass(tuple(intersection(h, b, lat) for b in lat.basis))
        assert holonomy(c, lat) == (1, 0)
        assert tuple(poincare_dual(c, lat)) == tuple(h)

    def test_vertex_loops_trivial(self, surface, lat):
        for v in range(surface.n_vertices):
            loop = surface.vertex_loop(v)
            assert not any(surface.dual_divergence(loop))
            assert lat.coordinates(loop) == [0] * lat.rank

    def test_cochain_must_be_closed(self, surface, lat):
        bad = [0] * (2 * surface.n_squares)
        bad[0] = 1
        with pytest.raises(ValueError):
            class_of_cochain(bad, lat)


def test_tree_path_connects(surface):
    from windtree.surface import tree_path
    for x, y in itertools.product(range(surface.n_squares), repeat=2):
        div = surface.dual_divergence(tree_path(surface, x, y))
        expected = [0] * surface.n_squares
        if x != y:
            expected[x] += 1
            expected[y] -= 1
        assert div == expected
