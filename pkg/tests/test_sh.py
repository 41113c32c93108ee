import numpy as np
import pytest

from skewsplat.sh import SH_C0, SH_C1, eval_sh, n_coeffs, sh_basis, sh_basis_grad

from oracles import fd_gradient


def unit_dirs(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


class TestBasis:
    def test_coefficient_counts(self):
        assert [n_coeffs(d) for d in range(4)] == [1, 4, 9, 16]

    def test_degree0_constant(self):
        rng = np.random.default_rng(0)
        b = sh_basis(0, unit_dirs(rng, 5))
        np.testing.assert_allclose(b, SH_C0)

    def test_degree1_along_z(self):
        b = sh_basis(1, np.array([[0.0, 0.0, 1.0]]))[0]
        np.testing.assert_allclose(b, [SH_C0, 0.0, SH_C1, 0.0], atol=1e-15)

    def test_degree1_signs(self):
        b = sh_basis(1, np.array([[1.0, 0.0, 0.0]]))[0]
        assert b[3] == pytest.approx(-SH_C1)
        b = sh_basis(1, np.array([[0.0, 1.0, 0.0]]))[0]
        assert b[1] == pytest.approx(-SH_C1)

    def test_shapes(self):
        rng = np.random.default_rng(1)
        d = unit_dirs(rng, 7)
        for deg in range(4):
            assert sh_basis(deg, d).shape == (7, n_coeffs(deg))
            assert sh_basis_grad(deg, d).shape == (7, n_coeffs(deg), 3)


class TestEval:
    def test_linear_in_coefficients(self):
        rng = np.random.default_rng(2)
        d = unit_dirs(rng, 4)
        a = rng.normal(size=(4, 16, 3))
        b = rng.normal(size=(4, 16, 3))
        lhs = eval_sh(3, a + 2 * b, d)
        rhs = eval_sh(3, a, d) + 2 * eval_sh(3, b, d)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_dc_only(self):
        sh = np.zeros((1, 9, 3))
        sh[0, 0] = [1.0, 2.0, 3.0]
        out = eval_sh(2, sh, np.array([[0.0, 0.0, 1.0]]))
        np.testing.assert_allclose(out[0], SH_C0 * np.array([1.0, 2, 3]))


class TestBasisGradient:
    @pytest.mark.parametrize("degree", [1, 2, 3])
    def test_matches_finite_differences(self, degree):
        rng = np.random.default_rng(degree)
        dirs = unit_dirs(rng, 12)
        grad = sh_basis_grad(degree, dirs)
        k = n_coeffs(degree)

        for i in range(12):
            for j in range(k):
                def f(v):
                    return sh_basis(degree, v[None, :])[0, j]

                num = fd_gradient(f, dirs[i], 1e-6)
                np.testing.assert_allclose(grad[i, j], num, atol=1e-7,
                                           err_msg=f"basis {j} dir {i}")

    def test_degree0_gradient_zero(self):
        rng = np.random.default_rng(9)
        g = sh_basis_grad(0, unit_dirs(rng, 3))
        np.testing.assert_array_equal(g, 0.0)
