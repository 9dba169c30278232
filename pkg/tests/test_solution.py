"""Tests for DG solution storage, initialization and error measures."""
import numpy as np
import pytest

from sgdg.solution import DGSolution


def cos2pi(x):
    return np.cos(2 * np.pi * x)


def sin2pi(x):
    return np.sin(2 * np.pi * x)


class TestLayout:
    def test_sizes(self):
        sol = DGSolution(2, 1, 3, nvar=3)
        assert sol.per_element == 4
        assert sol.coeffs.shape == (sol.n_elements, 3, 4)
        assert sol.dof() == sol.n_elements * 4

    def test_gather_scatter(self, rng):
        sol = DGSolution(2, 2, 3, nvar=2)
        v = rng.standard_normal(sol.dof())
        sol.scatter(v, 1)
        np.testing.assert_array_equal(sol.gather(1), v)
        assert not sol.gather(0).any()

    def test_mismatched_set(self):
        other = DGSolution(2, 1, 4)
        with pytest.raises(ValueError):
            DGSolution(2, 1, 3, G=other.G)


class TestInitialization:
    def test_separable_polynomial_exact(self):
        sol = DGSolution(2, 2, 2)
        sol.init_separable_sum([[lambda x: x**2, lambda y: 1 - y]])
        x = np.array([[0.3, 0.7], [0.91, 0.12]])
        np.testing.assert_allclose(sol.eval_at(x), x[:, 0] ** 2 * (1 - x[:, 1]), atol=1e-12)

    def test_separable_needs_all_factors(self):
        sol = DGSolution(2, 1, 2)
        with pytest.raises(ValueError):
            sol.separable_coefficients([[cos2pi]])

    def test_l2_norm_matches_analytic(self):
        sol = DGSolution(2, 2, 6)
        sol.init_separable_sum([[cos2pi, cos2pi]])
        assert sol.l2_norm() == pytest.approx(0.5, rel=1e-4)

    def test_adaptive_interpolation_sum_of_products(self):
        # cos(2 pi (x + y)) = cos cos - sin sin
        f = lambda x: np.cos(2 * np.pi * (x[:, 0] + x[:, 1]))
        a = DGSolution(2, 1, 6)
        a.init_adaptive_interpolation(f, 1e10)
        b = DGSolution(2, 1, 6)
        b.init_separable_sum([[cos2pi, cos2pi], [sin2pi, sin2pi]], [1.0, -1.0])
        assert a.l2_error_against(b) < 2e-3

    def test_adaptive_refines_where_needed(self):
        bump = lambda x: np.exp(-200 * np.sum((x - 0.3) ** 2, axis=1))
        sol = DGSolution(2, 1, 6, N_init=2)
        added = sol.init_adaptive_interpolation(bump, 1e-3, indicator="alpert")
        assert added > 0 and sol.G.is_downward_closed()

    def test_unknown_indicator(self):
        with pytest.raises(ValueError):
            DGSolution(1, 1, 3).init_adaptive_interpolation(cos2pi, 1e-3, indicator="max")

    def test_non_finite_rejected(self):
        with pytest.raises(FloatingPointError):
            DGSolution(1, 1, 2).init_adaptive_interpolation(lambda x: np.full(len(x), np.nan), 1.0)


class TestErrors:
    def test_quadrature_and_coefficient_errors_agree(self):
        f = lambda x: np.cos(2 * np.pi * x[:, 0]) * np.sin(2 * np.pi * x[:, 1])
        sol = DGSolution(2, 1, 4, sparse=False)
        sol.init_separable_sum([[cos2pi, sin2pi]])
        ref = DGSolution(2, 1, 4, sparse=False)
        ref.init_separable_sum([[cos2pi, sin2pi]])
        sol.coeffs *= 1.01
        # both measure 1 percent of the projection norm
        assert sol.l2_error_against(ref) == pytest.approx(0.01 * ref.l2_norm(), rel=1e-10)
        assert sol.quadrature_l2_error(f) > 0

    def test_error_against_disjoint_parts(self):
        a = DGSolution(1, 0, 2, N_init=0)
        b = DGSolution(1, 0, 2)
        a.coeffs[0, 0, 0] = 1.0
        b.coeffs[:, 0, 0] = [1.0, 2.0, 2.0, 2.0]
        assert a.l2_error_against(b) == pytest.approx(np.sqrt(12.0))

    def test_eval_shape_guard(self):
        with pytest.raises(ValueError):
            DGSolution(2, 1, 2).eval_at(np.zeros((3, 3)))


class TestMutation:
    def test_snapshot_restore(self, rng):
        sol = DGSolution(2, 1, 3, N_init=1)
        sol.coeffs[:] = rng.standard_normal(sol.coeffs.shape)
        before = sol.coeffs.copy()
        sol.predict_snapshot()
        sol.coeffs[:] = 0
        sol.add_elements(np.array([[2, 0]]))
        sol.restore_snapshot()
        pos = sol.G.positions(np.array([[2, 0]]))[0]
        assert not sol.coeffs[pos].any()
        mask = np.ones(sol.n_elements, bool)
        mask[pos] = False
        np.testing.assert_array_equal(sol.coeffs[mask], before)

    def test_restore_without_snapshot(self):
        with pytest.raises(RuntimeError):
            DGSolution(1, 1, 2).restore_snapshot()

    def test_add_marks_new(self):
        sol = DGSolution(1, 1, 3, N_init=1)
        sol.new_add[:] = False
        assert sol.add_elements(np.array([[2], [2]])) == 1
        assert sol.new_add.sum() == 1

    def test_csv_round_trip(self, tmp_path, rng):
        sol = DGSolution(2, 1, 3, nvar=2)
        sol.coeffs[:] = rng.standard_normal(sol.coeffs.shape)
        path = tmp_path / "sol.csv"
        sol.export_csv(path)
        back = DGSolution.load_csv(path, 1, 3)
        np.testing.assert_array_equal(back.G.ids, sol.G.ids)
        np.testing.assert_array_equal(back.coeffs, sol.coeffs)
