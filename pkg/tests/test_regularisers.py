try:
    from . import common as c
except BaseException:
    import common as c

from dynreg import regularisers
from dynreg.forward_linear import operator_norm
from dynreg.helpers import raise_if


class GridGradientTest(c.unittest.TestCase):

    def test_transpose(self):
        """
        div_apply is the transpose of grad_apply.
        """
        grad = c.dynreg.GridGradient((5, 7))
        rng = c.rng()
        x = rng.standard_normal(grad.in_dim)
        y = rng.standard_normal((2, grad.n_sites))

        lhs = float(c.np.sum(grad.grad_apply(x) * y))
        rhs = float(x @ grad.div_apply(y))
        assert abs(lhs - rhs) < 1e-12

    def test_norm_bound(self):
        grad = c.dynreg.GridGradient(c.GRID)
        assert operator_norm(grad, max_iter=5000) <= grad.norm() + 1e-9

    def test_tv_of_step(self):
        """
        A vertical edge of height 2 across n_y rows has TV 2 n_y.
        """
        shape = (4, 6)
        x = c.np.zeros(shape)
        x[:, 3:] = 2.
        grad = c.dynreg.GridGradient(shape)

        assert c.np.isclose(regularisers.tv_value(grad, x.ravel()), 8.)
        assert regularisers.tv_value(grad, c.np.ones(24)) == 0.

    def test_bad_shape(self):
        with self.assertRaises(ValueError):
            c.dynreg.GridGradient((3, ))
        with self.assertRaises(raise_if.DimensionError):
            c.dynreg.GridGradient((3, 3)).grad_apply(c.np.zeros(4))


class MeshGradientTest(c.unittest.TestCase):

    def test_linear_function(self):
        """
        TV of an affine function is |slope| times the mesh area.
        """
        mesh = c.coarse_mesh()
        grad = c.dynreg.MeshGradient(mesh)
        slope = c.np.array([0.3, -0.4])
        x = mesh.nodes @ slope

        area = float(c.np.sum(mesh.areas()))
        assert c.np.isclose(
                regularisers.tv_value(grad, x), 0.5 * area, rtol=1e-10
        )

    def test_transpose_and_norm(self):
        mesh = c.coarse_mesh()
        grad = c.dynreg.MeshGradient(mesh)
        rng = c.rng()
        x = rng.standard_normal(grad.in_dim)
        y = rng.standard_normal((2, grad.n_sites))

        lhs = float(c.np.sum(grad.grad_apply(x) * y))
        rhs = float(x @ grad.div_apply(y))
        assert abs(lhs - rhs) < 1e-10
        assert c.np.isclose(
                operator_norm(grad, max_iter=5000), grad.norm(), rtol=1e-4
        )


class DualSetsTest(c.unittest.TestCase):

    def test_projection(self):
        ball = regularisers.DualBall(0.5)
        y = c.np.array([[3., 0.1, 0.], [4., 0.1, 0.]])
        p = regularisers.project_dual_ball(ball, y)

        assert ball.contains(p)
        assert c.np.allclose(p[:, 0], [0.3, 0.4])
        assert c.np.allclose(p[:, 1:], y[:, 1:])

        with self.assertRaises(ValueError):
            regularisers.DualBall(0.)

    def test_tv_is_support_function(self):
        """
        TV(x) = sup over the unit dual ball of <y, K x> = <K^T y, x>.
        """
        grad = regularisers.GridGradient((7, 6))
        ball = regularisers.DualBall(1.)
        rng = c.rng(6)
        x = rng.standard_normal(grad.in_dim)
        kx = grad.grad_apply(x)
        tv = regularisers.tv_value(grad, x)

        # the maximiser is K x scaled onto the sphere
        y_star = regularisers.project_dual_ball(ball, 1e6 * kx)
        assert c.np.isclose(float(c.np.sum(y_star * kx)), tv, rtol=1e-10)
        pairing = float(grad.div_apply(y_star) @ x)
        assert c.np.isclose(pairing, tv, rtol=1e-10)

        for _ in range(50):
            y = regularisers.project_dual_ball(
                    ball, rng.standard_normal(kx.shape)
            )
            assert float(c.np.sum(y * kx)) <= tv * (1. + 1e-12)

    def test_box(self):
        box = regularisers.BoxConstraint(0., 1.)
        assert box.contains([0., 0.5, 1.])
        assert box.indicator([2.]) == c.np.inf
        assert c.np.array_equal(
                regularisers.prox_box(box, [-1., 0.5, 3.]), [0., 0.5, 1.]
        )
        with self.assertRaises(ValueError):
            regularisers.BoxConstraint(1., 1.)

    def test_rn_value(self):
        """
        Unbounded radii give the summed TV, zero radii give zero.
        """
        grad = c.dynreg.GridGradient((3, 3))
        frames = c.rng().standard_normal((4, 9))
        tv_sum = sum(regularisers.tv_value(grad, x) for x in frames)

        free = regularisers.DualHull(c.np.inf)
        assert c.np.isclose(
                regularisers.rn_value_under_dual_dynamics(grad, frames, free),
                tv_sum,
        )
        closed = regularisers.DualHull(0.)
        assert regularisers.rn_value_under_dual_dynamics(
                grad, frames, closed
        ) == 0.

        half = regularisers.DualHull(0.5)
        assert c.np.isclose(
                regularisers.rn_value_under_dual_dynamics(grad, frames, half),
                0.5 * tv_sum,
        )

    def test_rn_value_errors(self):
        grad = c.dynreg.GridGradient((3, 3))
        frames = c.np.zeros((2, 9))
        with self.assertRaises(raise_if.PreconditionError):
            regularisers.rn_value_under_dual_dynamics(grad, frames, None)
        with self.assertRaises(raise_if.PreconditionError):
            regularisers.DualHull([])
        with self.assertRaises(raise_if.PreconditionError):
            regularisers.DualHull(-1.)
        with self.assertRaises(raise_if.DimensionError):
            regularisers.rn_value_under_dual_dynamics(
                    grad, frames, regularisers.DualHull(c.np.ones((3, 4)))
            )

    def test_subgradient(self):
        """
        <v, x> = TV(x) for the returned subgradient.
        """
        grad = c.dynreg.GridGradient((5, 5))
        x = c.rng().standard_normal(25)
        v = regularisers.tv_subgradient(grad, x)

        assert c.np.isclose(v @ x, regularisers.tv_value(grad, x))

    def test_stack(self):
        grad = c.dynreg.GridGradient((2, 2))
        stack = c.dynreg.RegulariserStack(
                grad, box=regularisers.BoxConstraint(0., 1.)
        )
        assert stack.value([0., 1., 0., 1.]) == 2.
        assert stack.value([0., 2., 0., 1.]) == c.np.inf
        assert stack.ball(0.7).radius == 0.7
        assert stack.__slots__ == ("gradient", "box")


if __name__ == "__main__":
    c.unittest.main()
