try:
    from . import common as c
except BaseException:
    import common as c

from dynreg import convex_oracle as co
from dynreg.helpers import raise_if


def _line(n=101, low=-1., high=1.):
    return co.Lattice.uniform([(low, high)], n)


def _on(lattice, func):
    return co.GridFunction(lattice, func(lattice.points()))


def _abs(p):
    return c.np.sum(c.np.abs(p), axis=1)


def _half_sq(p):
    return 0.5 * c.np.sum(p * p, axis=1)


class LatticeTest(c.unittest.TestCase):

    def test_uniform(self):
        lattice = co.Lattice.uniform([(-1., 1.), (0., 2.)], [3, 5])

        assert lattice.shape == (3, 5)
        assert lattice.size == 15
        assert lattice.dim == 2
        assert lattice.is_uniform
        assert c.np.allclose(lattice.steps(), [1., 0.5])
        # C order, last axis fastest
        assert c.np.allclose(lattice.points()[:2], [[-1., 0.], [-1., 0.5]])
        assert not lattice.points().flags.writeable

    def test_snap(self):
        lattice = _line(5)
        index, bias = lattice.snap([[0.1], [-2.], [0.74]])
        assert c.np.array_equal(index, [2, 0, 3])
        assert c.np.allclose(bias, [0.1, 1., 0.24])

        # exact midpoints
        index, bias = lattice.snap([[0.25], [-0.25], [0.75]])
        assert c.np.array_equal(index, [2, 2, 4])
        assert c.np.allclose(bias, 0.25)

        irregular = co.Lattice([[0., 0.1, 1.]])
        assert not irregular.is_uniform
        index, _ = irregular.snap([[0.4], [0.9]])
        assert c.np.array_equal(index, [1, 2])

        assert c.np.array_equal(
                lattice.contains([[0.], [1.5]]), [True, False]
        )

    def test_minkowski(self):
        lattice = co.Lattice.uniform([(-1., 1.)], 5)
        wide = lattice.minkowski(lattice)
        assert wide.shape == (9, )
        assert c.np.allclose(wide.axes[0][[0, -1]], [-2., 2.])

        with self.assertRaises(raise_if.UnsupportedError):
            co.Lattice([[0., 0.1, 1.]]).minkowski(lattice)

    def test_bad_lattices(self):
        with self.assertRaises(ValueError):
            co.Lattice([[0., 1.]] * 4)
        with self.assertRaises(ValueError):
            co.Lattice([c.np.arange(co.MAX_AXIS_POINTS + 1.)])
        with self.assertRaises(ValueError):
            co.Lattice([[0., 0., 1.]])


class GridFunctionTest(c.unittest.TestCase):

    def test_values(self):
        lattice = _line(3)
        f = co.GridFunction(lattice, [1., c.np.inf, 3.])
        assert c.np.array_equal(f.finite(), [True, False, True])
        assert f.at([0.9]) == 3.

        for bad in (
                [1., c.np.nan, 0.],
                [1., -c.np.inf, 0.],
                [1., c.np.finfo(float).max, 0.],
        ):
            with self.assertRaises(ValueError):
                co.GridFunction(lattice, bad)
        with self.assertRaises(raise_if.ProperError):
            co.GridFunction(lattice, [c.np.inf] * 3)
        with self.assertRaises(raise_if.DimensionError):
            co.GridFunction(lattice, [1., 2.])

    def test_on_lattice(self):
        lattice = _line(5)
        f = co.GridFunction.on_lattice(lattice, lambda p: float(p[0])**2)
        assert c.np.allclose(f.values, lattice.axes[0]**2)


class ConjugateTest(c.unittest.TestCase):

    def test_half_square(self):
        """
        (x^2 / 2)^* = s^2 / 2 up to the lattice error.
        """
        f = _on(_line(co.MAX_AXIS_POINTS, -2., 2.), _half_sq)
        duals = co.Lattice.uniform([(-1., 1.)], 21)
        f_star = co.conjugate(f, duals)

        s = duals.axes[0]
        assert c.np.allclose(f_star.values, 0.5 * s**2, atol=1e-4)

    def test_norm(self):
        """
        |x|^* is the indicator of [-1, 1], cut at the lattice bounds.
        """
        f = _on(_line(), _abs)
        values, argmax = co.conjugate_at(f, [[0.5], [-0.5], [2.]])

        assert c.np.allclose(values, [0., 0., 1.])
        assert f.lattice.points()[argmax[2], 0] == 1.

    def test_biconjugate(self):
        convex = _on(_line(), lambda p: c.np.sum(p * p, axis=1))
        assert co.biconjugate_gap(convex) < 1e-6

        well = _on(_line(), co._double_well(_line()))
        assert co.biconjugate_gap(well) > 1.


class InfconvTest(c.unittest.TestCase):

    def test_half_squares(self):
        """
        x^2/2 □ x^2/2 = x^2/4, the infimum is attained at x/2.
        """
        line = _line(41)
        f = _on(line, _half_sq)
        out = line.minkowski(line)
        conv, argmin = co.infconv(f, f, out_lattice=out, return_argmin=True)

        x = out.axes[0]
        step = line.steps()[0]
        assert c.np.allclose(conv.values, 0.25 * x**2, atol=step**2)
        assert c.np.allclose(line.points()[argmin, 0], 0.5 * x, atol=step)
        assert conv.meta["snap_bias"] < 1e-12

    def test_infinite_parts(self):
        """
        Inf convolving with the indicator of {0} gives g back, points out of
        reach get argmin -1.
        """
        line = _line(21)
        g = _on(line, _abs)
        origin = co.GridFunction(
                line, c.np.where(line.axes[0] == 0., 0., c.np.inf)
        )
        conv = co.infconv(g, origin)
        assert c.np.allclose(conv.values, g.values)

        half = co.GridFunction(
                line, c.np.where(line.axes[0] <= 0., 0., c.np.inf)
        )
        wall = co.GridFunction(
                line, c.np.where(line.axes[0] <= -0.5, 0., c.np.inf)
        )
        conv, argmin = co.infconv(half, wall, return_argmin=True)
        assert c.np.all(c.np.isinf(conv.values[line.axes[0] > -0.5]))
        assert c.np.all(argmin[line.axes[0] > -0.5] == -1)


class ConvexityTest(c.unittest.TestCase):

    def test_is_convex(self):
        assert co.is_convex(_on(_line(), _half_sq))
        plane = co.Lattice.uniform([(-1., 1.)] * 2, 9)
        assert co.is_convex(_on(plane, _abs))
        assert not co.is_convex(_on(_line(), co._double_well(_line())))
        assert not co.is_convex(_on(plane, co._double_well(plane)))

        # finite ends around an infinite midpoint
        gap = co.GridFunction(_line(3), [0., c.np.inf, 0.])
        assert not co.is_convex(gap)

    def test_subdiff_contains(self):
        f = _on(_line(), _abs)
        assert co.subdiff_contains(f, [0.], [0.5])
        assert co.subdiff_contains(f, [0.], [-1.])
        assert not co.subdiff_contains(f, [0.], [1.5])
        assert co.subdiff_contains(f, [0.5], [1.])
        assert not co.subdiff_contains(f, [0.5], [0.])

        well = _on(_line(), co._double_well(_line()))
        with self.assertRaises(raise_if.UnsupportedError):
            co.subdiff_contains(well, [0.], [0.])


class CertificateTest(c.unittest.TestCase):

    def test_strong(self):
        """
        x^2 grows with γ = 1 around 0.
        """
        f = _on(_line(), lambda p: c.np.sum(p * p, axis=1))
        good = co.make_certificate([0.], [0.], gamma=1., radius=0.5)
        bad = co.make_certificate([0.], [0.], gamma=1.5, radius=0.5)

        assert co.certify_subdiff(f, good).valid
        check = co.certify_subdiff(f, bad)
        assert not check.valid
        assert check.worst_violation > 0.
        assert c.np.isclose(abs(check.worst_point[0]), 0.5)

        assert c.np.isclose(co.growth_factor(f, [0.], [0.], 0.5), 1.)
        # slope 1 is no subgradient at 0
        assert co.growth_factor(f, [0.], [1.], 0.5) < 0.
        # nothing but the center in reach
        assert co.growth_factor(f, [0.], [0.], 1e-3) == c.np.inf

    def test_semi_strong(self):
        """
        max(|x| - 1/2, 0) has no strong growth at 0, but grows away from
        its solution set [-1/2, 1/2] with γ = 2.
        """
        f = _on(_line(), lambda p: c.np.maximum(_abs(p) - 0.5, 0.))

        strong = co.growth_factor(f, [0.], [0.], 1.)
        semi = co.growth_factor(f, [0.], [0.], 1., mode="semi_strong")
        assert c.np.isclose(strong, 0.)
        assert c.np.isclose(semi, 2.)

        cert = co.make_certificate(
                [0.], [0.], gamma=2., radius=1., mode="semi_strong"
        )
        assert co.certify_subdiff(f, cert).valid

        plain = co.make_certificate([0.], [0.], gamma=100., mode="plain")
        assert co.certify_subdiff(f, plain).valid

    def test_epsilon(self):
        """
        ε pays for a wrong slope.
        """
        f = _on(_line(), _abs)
        cert = co.make_certificate([0.], [1.5], radius=1., mode="plain")
        assert not co.certify_subdiff(f, cert).valid

        cert = co.make_certificate(
                [0.], [1.5], epsilon=0.5, radius=1., mode="plain"
        )
        assert co.certify_subdiff(f, cert).valid

    def test_certificate_validation(self):
        with self.assertRaises(ValueError):
            co.make_certificate([0.], [0.], mode="weak")
        with self.assertRaises(ValueError):
            co.make_certificate([0.], [0.], gamma=-1.)
        with self.assertRaises(ValueError):
            co.make_certificate([0.], [0.], radius=0.)

        f = co.GridFunction(_line(3), [c.np.inf, 0., 0.])
        cert = co.make_certificate([-1.], [0.])
        with self.assertRaises(raise_if.PreconditionError):
            co.certify_subdiff(f, cert)


class SeminormTest(c.unittest.TestCase):

    def test_axioms(self):
        line = _line(21)
        assert co.check_seminorm(_on(line, _abs)) is None
        assert co.check_seminorm(
                _on(line, lambda p: _abs(p) + 0.1)
        ) == "zero at origin"
        assert co.check_seminorm(
                _on(line, lambda p: p[:, 0])
        ) == "nonnegativity"
        assert co.check_seminorm(
                _on(line, lambda p: _abs(p) + 0.5 * p[:, 0])
        ) == "symmetry"
        assert co.check_seminorm(
                _on(line, lambda p: p[:, 0]**2)
        ) == "homogeneity"

        plane = co.Lattice.uniform([(-1., 1.)] * 2, 5)
        root_sum = _on(
                plane,
                lambda p: c.np.sum(c.np.sqrt(c.np.abs(p)), axis=1)**2,
        )
        assert co.check_seminorm(root_sum) == "triangle inequality"

        without_origin = _line(4)
        with self.assertRaises(raise_if.PreconditionError):
            co.check_seminorm(_on(without_origin, _abs))

    def test_sqrt_infconv(self):
        """
        sqrt(|x|^2 □ |x|^2) = |x| / sqrt(2).
        """
        line = _line(41)
        g = _on(line, _abs)
        f = co.sqrt_infconv_seminorm(g, g)

        x = line.axes[0]
        step = line.steps()[0]
        assert c.np.all(f.values >= c.np.abs(x) / c.np.sqrt(2.) - 1e-12)
        assert c.np.allclose(f.values, c.np.abs(x) / c.np.sqrt(2.),
                             atol=step)

        with self.assertRaises(raise_if.PreconditionError) as ctx:
            co.sqrt_infconv_seminorm(_on(line, lambda p: p[:, 0]**2), g)
        assert "homogeneity" in str(ctx.exception)


class SetFormulaTest(c.unittest.TestCase):

    def test_support(self):
        u_set = [[1., 0.], [0., 2.]]
        values = co.support_values([[1., 1.], [-1., 0.]], u_set)
        assert c.np.allclose(values, [2., 0.])

    def test_box_support(self):
        """
        g the support function of a box holding U satisfies the formula.
        """
        line = _line(41)
        dual = co.Lattice.uniform([(-2., 2.)], 21)
        g = _on(line, lambda p: 1.2 * _abs(p))

        result = co.set_infconv_formula_check(g, [[-0.8], [0.4]], dual)
        assert result.max_gap < 1e-8
        assert result.lhs.shape == (41, )

    def test_quadratic_counterexample(self):
        """
        For g = x^2/2 and U = {-1, 1} the direct supremum |x| - 1/2 differs
        from the convexified Huber function, the formula needs the
        supremum over conv U to sit at points of U.
        """
        line = _line(41)
        dual = co.Lattice.uniform([(-2., 2.)], 21)
        g = _on(line, _half_sq)

        result = co.set_infconv_formula_check(g, [[-1.], [1.]], dual)
        origin = 20
        assert c.np.isclose(result.lhs[origin], -0.5)
        assert abs(result.rhs[origin]) < 1e-3
        assert result.max_gap > 0.4

    def test_empty_set(self):
        g = _on(_line(5), _abs)
        dual = _line(5)
        with self.assertRaises(raise_if.PreconditionError):
            co.set_infconv_formula_check(g, c.np.zeros((0, 1)), dual)


class SuiteTest(c.unittest.TestCase):

    def test_suites_pass(self):
        reports = [
                co.suite_conjugate_sum(instances=4, seed=1),
                co.suite_set_formula(instances=6, seed=1),
                co.suite_subdiff_inclusion(instances=6, seed=1),
                co.suite_seminorm(instances=4, seed=1),
                co.suite_data_term(instances=20, seed=1),
        ]
        for report in reports:
            assert report.failures == 0, report
            assert report.counterexample is None
            assert report.worst_margin >= 0.

    def test_nonconvex_injection_fails(self):
        report = co.suite_conjugate_sum(
                instances=4, seed=1, inject_nonconvex=True
        )
        assert report.failures > 0
        assert report.counterexample is not None

    def test_deterministic(self):
        a = co.suite_data_term(instances=5, seed=3)
        b = co.suite_data_term(instances=5, seed=3)
        assert a == b


if __name__ == "__main__":
    c.unittest.main()
