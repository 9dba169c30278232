"""Tests for the 1D multiwavelet families."""
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sgdg.basis1d import (LEFT, RIGHT, Basis1DIndex, build_alpert_family,
                          build_interpolatory_family, element_id, element_of_id, equispaced_points,
                          eval_basis, gauss_legendre01, levels_of_ids, nested_point_sets)


def gram(fam, nq=None):
    """Gram matrix by Gauss quadrature on the finest cells."""
    x, w = gauss_legendre01(fam.degree + 2 if nq is None else nq)
    ncell = 2 ** max(fam.max_level, 1)
    xs = ((np.arange(ncell)[:, None] + x) / ncell).ravel()
    ws = np.tile(w, ncell) / ncell
    E = fam.evaluate(xs).toarray()
    return (E * ws) @ E.T


class TestElementIds:
    def test_level_zero(self):
        assert element_id(0, 0) == 0
        assert element_of_id(0) == (0, 0)

    @given(st.integers(1, 12), st.data())
    def test_round_trip(self, level, data):
        j = data.draw(st.integers(0, 2 ** (level - 1) - 1))
        eid = element_id(level, j)
        assert element_of_id(eid) == (level, j)
        assert levels_of_ids(np.array([eid]))[0] == level

    def test_bad_support(self):
        with pytest.raises(ValueError):
            element_id(2, 2)
        with pytest.raises(ValueError):
            element_id(0, 1)


class TestAlpert:
    @pytest.mark.parametrize("k", [0, 1, 2, 3])
    @pytest.mark.parametrize("N", [0, 3, 6])
    def test_orthonormal(self, k, N):
        fam = build_alpert_family(k, N)
        np.testing.assert_allclose(gram(fam), np.eye(fam.size), atol=1e-12)

    def test_level1_vanishing_moments(self):
        fam = build_alpert_family(2, 1)
        x, w = gauss_legendre01(6)
        xs = np.concatenate([x / 2, 0.5 + x / 2])
        ws = np.concatenate([w, w]) / 2
        E = fam.evaluate(xs).toarray()
        mono = np.vstack([xs**p for p in range(3)])
        mom = (E[3:] * ws) @ mono.T
        np.testing.assert_allclose(mom, 0, atol=1e-14)

    def test_sign_convention(self):
        # leading coefficient on the right half is positive
        fam = build_alpert_family(1, 1)
        for i in range(2):
            assert fam.wavelet[i, 1, -1] > 0 or np.all(fam.wavelet[i, 1, 1:] == 0)

    def test_derivative_matches_finite_difference(self):
        fam = build_alpert_family(2, 3)
        x = np.array([0.1, 0.33, 0.77])
        h = 1e-6
        fd = (fam.evaluate(x + h) - fam.evaluate(x - h)).toarray() / (2 * h)
        np.testing.assert_allclose(fam.evaluate(x, deriv=1).toarray(), fd, atol=1e-5)

    def test_index_round_trip(self):
        fam = build_alpert_family(2, 4)
        for pos in range(fam.size):
            assert fam.index(fam.basis_index(pos)) == pos
        with pytest.raises(IndexError):
            fam.index(Basis1DIndex(5, 0, 0))
        with pytest.raises(IndexError):
            fam.index(Basis1DIndex(1, 0, 3))

    def test_sides_at_cell_boundary(self):
        fam = build_alpert_family(0, 2)
        idx = Basis1DIndex(1, 0, 0)
        assert eval_basis(fam, idx, 0.5, side=LEFT) == pytest.approx(-1.0)
        assert eval_basis(fam, idx, 0.5, side=RIGHT) == pytest.approx(1.0)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            build_alpert_family(-1, 2)


class TestInterpolatory:
    def test_equispaced_points(self):
        assert equispaced_points(2) == [Fraction(0), Fraction(1, 2), Fraction(1)]

    def test_nested_increment(self):
        p0, p1 = nested_point_sets(equispaced_points(1))
        locs1 = sorted(float(x) for x, _ in p1)
        assert locs1 == [0.5, 1.0] or len(p1) == 2

    @pytest.mark.parametrize("P,K", [(1, 0), (2, 0), (3, 0), (5, 0), (1, 1), (2, 1)])
    def test_delta_property(self, P, K):
        fam = build_interpolatory_family(P, K, 3)
        loc, side = fam.point_table()
        orders = fam.deriv_orders[np.arange(fam.size) % fam.per_element]
        lev = fam.levels
        E = np.zeros((fam.size, fam.size))
        for o in np.unique(orders):
            sel = orders == o
            E[:, sel] = fam.evaluate(loc[sel], side[sel], int(o)).toarray()
        # a function is a delta on its own level and vanishes on coarser points
        mask = lev[None, :] <= lev[:, None]
        np.testing.assert_allclose(E[mask], np.eye(fam.size)[mask], atol=1e-12)

    @pytest.mark.parametrize("P,K", [(1, 0), (3, 0), (5, 0), (2, 1)])
    def test_delta_property_exact(self, P, K):
        # rational tables: level-0 nodal functions on X_0, level-1 wavelets on X_0 and X_1
        fam = build_interpolatory_family(P, K, 1)

        def ev(pieces, x, sd, order):
            h = 1 if (x > Fraction(1, 2) or (x == Fraction(1, 2) and sd == RIGHT)) else 0
            t = 2 * x - h
            c = pieces[h]
            val = Fraction(0)
            for p in range(order, len(c)):
                f = Fraction(1)
                for q in range(order):
                    f *= p - q
                val += c[p] * f * t ** (p - order)
            return val * 2**order

        slots0 = [(x, sd, l) for x, sd in fam.points0 for l in range(K + 1)]
        slots1 = [(x, sd, l) for x, sd in fam.points1 for l in range(K + 1)]
        for i, pieces in enumerate(fam.exact_level0):
            for j, (x, sd, l) in enumerate(slots0):
                assert ev(pieces, x, sd, l) == (1 if i == j else 0)
        for i, pieces in enumerate(fam.exact_wavelet):
            for j, (x, sd, l) in enumerate(slots0):
                assert ev(pieces, x, sd, l) == 0
            for j, (x, sd, l) in enumerate(slots1):
                assert ev(pieces, x, sd, l) == (1 if i == j else 0)

    def test_polynomial_degree(self):
        fam = build_interpolatory_family(2, 1, 1)
        assert fam.degree == (2 + 1) * (1 + 1) - 1

    def test_reproduces_polynomial(self):
        # hierarchical interpolation of x**P is exact
        fam = build_interpolatory_family(3, 0, 2)
        loc, side = fam.point_table()
        V = fam.evaluate(loc, side).toarray()
        c = np.linalg.solve(V.T, loc**3)
        x = np.linspace(0.01, 0.99, 17)
        np.testing.assert_allclose(fam.evaluate(x).toarray().T @ c, x**3, atol=1e-12)

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            build_interpolatory_family(0, 0, 1)
        with pytest.raises(ValueError):
            build_interpolatory_family(2, 0, 1, points=[0, 1])

    def test_eval_basis_degree_guard(self):
        fam = build_interpolatory_family(1, 0, 1)
        with pytest.raises(ValueError):
            eval_basis(fam, Basis1DIndex(0, 0, 0), 0.3, deriv=5)


class TestQuadrature:
    @settings(max_examples=20)
    @given(st.integers(1, 8))
    def test_gauss_exact(self, n):
        x, w = gauss_legendre01(n)
        assert w.sum() == pytest.approx(1.0)
        p = 2 * n - 1
        assert np.dot(w, x**p) == pytest.approx(1.0 / (p + 1))
