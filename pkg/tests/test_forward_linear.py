try:
    from . import common as c
except BaseException:
    import common as c

from dynreg.forward_linear import gaussian_kernel, operator_norm
from dynreg.helpers import raise_if


def _adjoint_gap(op, seed=c.SEED):
    rng = c.rng(seed)
    x = rng.standard_normal(op.in_dim)
    y = rng.standard_normal(op.out_dim)
    lhs = float(op.apply(x) @ y)
    rhs = float(x @ op.adjoint_apply(y))

    return abs(lhs - rhs) / max(abs(lhs), 1.)


class LinearFrameOperatorTest(c.unittest.TestCase):

    def test_kernel(self):
        kernel = gaussian_kernel(5, 1.)
        assert kernel.shape == (5, 5)
        assert c.np.isclose(kernel.sum(), 1.)
        assert c.np.allclose(kernel, kernel.T)
        assert kernel[2, 2] == kernel.max()

        with self.assertRaises(ValueError):
            gaussian_kernel(4)
        with self.assertRaises(ValueError):
            gaussian_kernel(5, 0.)

    def test_adjoint(self):
        """
        <A x, y> = <x, A^T y>, with and without subsampling.
        """
        op = c.dynreg.LinearFrameOperator(c.GRID)
        assert _adjoint_gap(op) < 1e-12

        mask = c.np.zeros(c.GRID, dtype=bool)
        mask[::2, ::3] = True
        sub = c.dynreg.LinearFrameOperator(c.GRID, mask=mask)
        assert sub.out_dim == int(mask.sum())
        assert _adjoint_gap(sub) < 1e-12

    def test_matrix_matches_apply(self):
        op = c.dynreg.LinearFrameOperator((6, 5))
        matrix = op.as_matrix()
        x = c.rng().standard_normal(op.in_dim)

        assert matrix.shape == (30, 30)
        assert c.np.allclose(matrix @ x, op.apply(x))
        assert c.np.allclose(matrix.T @ x, op.adjoint_apply(x))
        # assembled once
        assert op.as_matrix() is matrix

    def test_norm(self):
        op = c.dynreg.LinearFrameOperator(c.GRID)
        norm = operator_norm(op)
        assert 0. < norm <= op.norm_bound() + 1e-9
        assert c.np.isclose(
                norm, c.np.linalg.norm(op.as_matrix(), 2), rtol=1e-4
        )

    def test_dimension_checks(self):
        op = c.dynreg.LinearFrameOperator(c.GRID)
        with self.assertRaises(raise_if.DimensionError):
            op.apply(c.np.zeros(3))
        with self.assertRaises(raise_if.DimensionError):
            op.adjoint_apply(c.np.zeros(3))
        with self.assertRaises(ValueError):
            c.dynreg.LinearFrameOperator((4, 4, 4))


class MatrixOperatorTest(c.unittest.TestCase):

    def test_matrix(self):
        matrix = c.rng().standard_normal((7, 4))
        op = c.dynreg.MatrixOperator(matrix)

        assert op.in_dim == 4
        assert op.out_dim == 7
        assert _adjoint_gap(op) < 1e-12
        assert c.np.isclose(
                operator_norm(op), c.np.linalg.norm(matrix, 2), rtol=1e-4
        )

    def test_identity_data_gradient(self):
        """
        1/2 |W (x - b)|^2 has gradient W^2 (x - b).
        """
        op = c.dynreg.MatrixOperator.identity(3)
        x = c.np.array([1., 2., 3.])
        b = c.np.array([0., 2., 1.])
        value, grad = op.data_gradient(x, b, precision=2.)

        assert c.np.isclose(value, 0.5 * 4. * 5.)
        assert c.np.allclose(grad, 4. * (x - b))

    def test_zero_operator_norm(self):
        op = c.dynreg.MatrixOperator(c.np.zeros((2, 2)))
        assert operator_norm(op) == 0.


if __name__ == "__main__":
    c.unittest.main()
