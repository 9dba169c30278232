"""Tests for the 1D operator matrices."""
import numpy as np
import pytest

from sgdg.basis1d import build_alpert_family, build_interpolatory_family
from sgdg.opmat1d import OperatorKind, build_operator_matrix


@pytest.fixture(scope="module")
def alpert():
    return build_alpert_family(2, 3)


class TestVolume:
    def test_u_v_identity(self, alpert):
        ops = build_operator_matrix(alpert, alpert)
        np.testing.assert_allclose(ops.u_v, np.eye(alpert.size), atol=1e-12)

    def test_ux_vx_symmetric_psd(self, alpert):
        M = build_operator_matrix(alpert, alpert).ux_vx
        np.testing.assert_allclose(M, M.T, atol=1e-12)
        assert np.linalg.eigvalsh(M).min() > -1e-10

    def test_integration_by_parts(self, alpert):
        # int u v' + int u' v = sum over interfaces of -[u v]; periodic
        ops = build_operator_matrix(alpert, alpert)
        lhs = ops.u_vx + ops.ux_v
        x = np.linspace(0, 1, 2**3 + 1)[1:]
        tm = alpert.evaluate(x, -1).toarray()
        tp = alpert.evaluate(np.where(x == 1.0, 0.0, x), 1).toarray()
        rhs = -(tp @ tp.T - tm @ tm.T)
        np.testing.assert_allclose(lhs, rhs, atol=1e-11)

    def test_derivative_beyond_degree(self):
        fam = build_alpert_family(1, 2)
        with pytest.raises(ValueError):
            build_operator_matrix(fam, fam).u_vxx


class TestInterface:
    def test_jump_jump_psd(self, alpert):
        M = build_operator_matrix(alpert, alpert).ujp_vjp
        np.testing.assert_allclose(M, M.T, atol=1e-13)
        assert np.linalg.eigvalsh(M).min() > -1e-10

    def test_average_split(self, alpert):
        ops = build_operator_matrix(alpert, alpert)
        np.testing.assert_allclose(ops.ujp_vxave, 0.5 * (ops.ujp_vxlft + ops.ujp_vxrgt), atol=1e-11)

    def test_constants_have_no_jump(self, alpert):
        ops = build_operator_matrix(alpert, alpert)
        # the level-0 constant is continuous across periodic interfaces
        np.testing.assert_allclose(ops.ujp_vjp[0], 0, atol=1e-13)

    @pytest.mark.parametrize("bc", ["periodic", "zero_dirichlet", "inside"])
    def test_bc_accepted(self, alpert, bc):
        assert build_operator_matrix(alpert, alpert, bc).ulft_vjp.shape == (alpert.size,) * 2

    def test_bad_bc(self, alpert):
        with pytest.raises(ValueError):
            build_operator_matrix(alpert, alpert, "reflect").ulft_vjp


class TestMixed:
    def test_interp_to_alpert_projection_is_exact_on_polynomials(self):
        alp = build_alpert_family(1, 2)
        itp = build_interpolatory_family(1, 0, 2)
        M = build_operator_matrix(itp, alp).u_v
        loc, side = itp.point_table()
        V = itp.evaluate(loc, side).toarray()
        c = np.linalg.solve(V.T, 2 * loc - 1)
        # projection coefficients of 2x - 1 onto the Alpert basis
        expected = np.zeros(alp.size)
        expected[1] = 1 / np.sqrt(3)
        np.testing.assert_allclose(c @ M, expected, atol=1e-12)

    def test_level_mismatch(self):
        with pytest.raises(ValueError):
            build_operator_matrix(build_alpert_family(1, 2), build_alpert_family(1, 3)).u_v


class TestCache:
    def test_save_load_round_trip(self, tmp_path, alpert):
        ops = build_operator_matrix(alpert, alpert, kinds=[OperatorKind.u_vx, "ujp_vjp"])
        path = tmp_path / "ops.npz"
        ops.save(path)
        again = build_operator_matrix(alpert, alpert, cache_file=path)
        np.testing.assert_array_equal(again.matrices["u_vx"], ops.u_vx)

    def test_stale_cache_ignored(self, tmp_path, alpert):
        path = tmp_path / "ops.npz"
        build_operator_matrix(alpert, alpert, kinds=["u_vx"]).save(path)
        other = build_alpert_family(1, 3)
        fresh = build_operator_matrix(other, other)
        assert fresh.load(path) is False
