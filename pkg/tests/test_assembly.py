"""Tests for global operator assembly."""
import numpy as np
import pytest

from sgdg.assembly import (assemble_hyperbolic, assemble_ipdg_diffusion, assemble_jump_penalty,
                           assemble_ldg_gradient, default_sigma, finest_h)
from sgdg.solution import DGSolution


def cos_sum(x):
    return np.cos(2 * np.pi * np.sum(x, axis=1))


class TestHyperbolic:
    def test_conserves_mean(self, rng):
        sol = DGSolution(2, 1, 4)
        A = assemble_hyperbolic(sol, [1.0, 0.5]).matrix
        u = rng.standard_normal(sol.dof())
        assert abs((A @ u)[0]) < 1e-12

    def test_upwind_dissipative(self):
        sol = DGSolution(2, 1, 3, sparse=False)
        A = assemble_hyperbolic(sol, [1.0, -1.0]).toarray()
        assert np.linalg.eigvalsh(0.5 * (A + A.T)).max() < 1e-10

    def test_central_skew(self):
        sol = DGSolution(2, 1, 3)
        A = assemble_hyperbolic(sol, [1.0, 1.0], "central").toarray()
        np.testing.assert_allclose(A, -A.T, atol=1e-10)

    def test_lf_equals_upwind_for_unit_alpha(self):
        sol = DGSolution(1, 2, 4)
        up = assemble_hyperbolic(sol, [1.0]).toarray()
        lf = assemble_hyperbolic(sol, [1.0], "lf").toarray()
        np.testing.assert_allclose(lf, up, atol=1e-10)

    def test_derivative_of_smooth_function(self):
        # rhs of u_t + u_x = 0 approximates -u_x at order k
        errs = []
        for N in (5, 6):
            sol = DGSolution(1, 2, N)
            sol.init_adaptive_interpolation(lambda x: np.sin(2 * np.pi * x[:, 0]), 1e10)
            ref = DGSolution(1, 2, N)
            ref.init_adaptive_interpolation(lambda x: -2 * np.pi * np.cos(2 * np.pi * x[:, 0]), 1e10)
            sol.scatter(assemble_hyperbolic(sol, [1.0]) @ sol.gather())
            errs.append(sol.l2_error_against(ref))
        assert errs[1] < 5e-3
        assert np.log2(errs[0] / errs[1]) > 1.8

    def test_errors(self):
        sol = DGSolution(2, 1, 2)
        with pytest.raises(ValueError):
            assemble_hyperbolic(sol, [1.0])
        with pytest.raises(ValueError):
            assemble_hyperbolic(sol, [1.0, 1.0], "roe")


class TestDiffusion:
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_negative_semidefinite(self, k):
        sol = DGSolution(1, k, 3)
        A = assemble_ipdg_diffusion(sol).toarray()
        np.testing.assert_allclose(A, A.T, atol=1e-9)
        ev = np.linalg.eigvalsh(A)
        assert ev.max() <= 1e-10 * np.abs(ev).max()

    def test_lowest_eigenvalues(self):
        # periodic Laplacian: 0 once, then -4 pi^2 twice
        sol = DGSolution(1, 2, 5)
        ev = np.sort(-np.linalg.eigvalsh(assemble_ipdg_diffusion(sol).toarray()))
        assert abs(ev[0]) < 1e-8
        np.testing.assert_allclose(ev[1:3], 4 * np.pi**2, rtol=1e-4)

    def test_penalty_scale(self):
        sol = DGSolution(1, 1, 3)
        assert finest_h(sol) == 2.0**-3
        J = assemble_jump_penalty(sol, 10.0).toarray()
        J2 = assemble_jump_penalty(sol, 20.0).toarray()
        np.testing.assert_allclose(J2, 2 * J)

    def test_default_sigma(self):
        assert default_sigma(1) == 80.0

    def test_bad_sigma(self):
        with pytest.raises(ValueError):
            assemble_ipdg_diffusion(DGSolution(1, 1, 2), -1.0)


class TestLDG:
    @pytest.mark.parametrize("sign", [-1, 1])
    def test_linear_exact(self, sign):
        # outflow traces: the gradient of a linear function is reproduced
        sol = DGSolution(2, 1, 4)
        sol.init_separable_sum([[lambda x: 3 * x, lambda y: np.ones_like(y)]])
        g = assemble_ldg_gradient(sol, 0, sign) @ sol.gather()
        expect = np.zeros_like(g)
        expect[0] = 3.0
        np.testing.assert_allclose(g, expect, atol=1e-10)

    def test_bad_sign(self):
        with pytest.raises(ValueError):
            assemble_ldg_gradient(DGSolution(1, 1, 2), 0, 0)
