try:
    from . import common as c
except BaseException:
    import common as c

from dynreg import batch_oracle
from dynreg import diagnostics
from dynreg import forward_eit
from dynreg.helpers import raise_if
from dynreg.helpers.data import CheckResult
from dynreg.regularisers import tv_subgradient


class ErrorMeasureTest(c.unittest.TestCase):

    def test_averaged_sq_error(self):
        truth = c.np.zeros((4, 2))
        frames = c.np.array([[1., 0.], [0., 1.], [1., 1.], [0., 0.]])
        errors = diagnostics.averaged_sq_error(frames, truth)

        assert c.np.allclose(errors, [1., 1., 4. / 3., 1.])
        # longer truth is fine, shorter is not
        longer = c.np.zeros((6, 2))
        assert c.np.allclose(
                diagnostics.averaged_sq_error(frames, longer), errors
        )
        with self.assertRaises(raise_if.DimensionError):
            diagnostics.averaged_sq_error(frames, truth[:2])

    def test_bregman(self):
        """
        TV Bregman divergences are nonnegative and vanish at the reference.
        """
        grad = c.dynreg.GridGradient((4, 4))
        rng = c.rng()
        reference = rng.standard_normal((3, 16))
        v = c.np.stack([tv_subgradient(grad, x) for x in reference])
        frames = reference + rng.standard_normal((3, 16))

        div = diagnostics.frame_bregman(grad, frames, reference, v)
        assert c.np.all(div >= -1e-12)
        assert c.np.allclose(
                diagnostics.frame_bregman(grad, reference, reference, v), 0.
        )
        assert c.np.isclose(
                diagnostics.bregman_r(frames, reference, v, grad), div.sum()
        )

        # callables work too
        def half_sq(x):
            return 0.5 * float(x @ x)

        quad = diagnostics.frame_bregman(half_sq, frames, reference, reference)
        diff = frames - reference
        assert c.np.allclose(quad, 0.5 * c.np.sum(diff * diff, axis=1))

    def test_select_subgradient(self):
        grad = c.dynreg.GridGradient((3, 3))
        x = c.rng().standard_normal(9)
        assert c.np.allclose(
                diagnostics.select_subgradient(grad, x),
                tv_subgradient(grad, x),
        )
        dual = c.rng(1).standard_normal((2, 9))
        assert c.np.allclose(
                diagnostics.select_subgradient(grad, x, dual, alpha=2.),
                grad.div_apply(dual / 2.),
        )


class SourceWitnessTest(c.unittest.TestCase):

    def test_identity(self):
        v = c.rng().standard_normal((3, 4))
        witness = diagnostics.fit_source_witness(
                c.dynreg.MatrixOperator.identity(4), v, precision=2., ridge=0.
        )

        assert c.np.allclose(witness.w, -v / 2.)
        assert c.np.allclose(witness.residual, 0.)
        assert c.np.allclose(
                witness.norm_sq, c.np.cumsum(c.np.sum(v * v, axis=1) / 4.)
        )
        assert witness.ridge == 0.

        shifted = diagnostics.fit_source_witness(
                c.dynreg.MatrixOperator.identity(4), v, precision=2.
        )
        assert shifted.ridge == c.dynreg.settings.WITNESS_RIDGE_MIN
        assert c.np.allclose(shifted.w, witness.w)

    def test_rank_deficient(self):
        model = c.dynreg.MatrixOperator([[1., 0.], [1., 0.]])
        for ridge in (None, 0.):
            witness = diagnostics.fit_source_witness(
                    model, [[1., 0.]], ridge=ridge
            )
            assert witness.residual[0] < 1e-6

        with self.assertRaises(ValueError):
            diagnostics.fit_source_witness(model, [[1., 0.]], ridge=-1.)

    def test_ridge_follows_delta(self):
        """
        Larger δ, larger λ, smaller witness and larger residual.
        """
        operator, regs, truth, _, _ = c.small_linear_setup(frames=2)
        v = [
                diagnostics.select_subgradient(regs.gradient, x)
                for x in truth.frames
        ]
        fits = [
                diagnostics.fit_source_witness(operator, v, delta=delta)
                for delta in (0.1, 0.01)
        ]
        exact = diagnostics.fit_source_witness(operator, v, ridge=0.)

        assert fits[0].ridge == c.dynreg.settings.WITNESS_RIDGE * 0.1
        assert fits[0].norm_sq[-1] < fits[1].norm_sq[-1]
        assert fits[1].norm_sq[-1] < exact.norm_sq[-1]
        assert c.np.all(fits[0].residual >= fits[1].residual - 1e-12)

    def test_wrong_reconstruction_violates_bound(self):
        """
        Moving x̂ along the witness residual grows the Bregman distance much
        faster than the objective, so the basic estimate breaks.
        """
        operator, regs, truth, _, _ = c.small_linear_setup(frames=2)
        x_hat = truth.frames[-1]
        b = operator.apply(x_hat)
        v = diagnostics.select_subgradient(regs.gradient, x_hat)
        delta, alpha = 0.1, 0.9
        witness = diagnostics.fit_source_witness(operator, [v], delta=delta)

        lam = witness.ridge
        w = witness.w[0]
        rho = operator.adjoint_apply(w) + v
        assert c.np.isclose(c.np.linalg.norm(rho), witness.residual[0])
        # step maximising the gap between both sides
        t = alpha * (lam * (w @ w) + rho @ rho) / (lam**2 * (w @ w))

        problem = batch_oracle.BatchProblem(operator, [b], alpha, regs)
        for x, holds in ((x_hat, True), (x_hat - t * rho, False)):
            ledger = batch_oracle.compute_e([x], [x_hat], problem)
            bregman = diagnostics.frame_bregman(
                    regs.gradient, [x], [x_hat], [v]
            )
            check = diagnostics.theorem_bregman_check(
                    bregman, ledger.e, witness.norm_sq, delta, alpha
            )
            assert bool(check.holds[0]) == holds

    def test_nonlinear(self):
        m = c.coarse_mesh()
        model = forward_eit.EITFrameModel(forward_eit.CEMSystem(m))
        with self.assertRaises(raise_if.UnsupportedError):
            diagnostics.fit_source_witness(model, c.np.zeros((1, m.n_nodes)))


class AssumptionChecksTest(c.unittest.TestCase):

    def test_noise_levels(self):
        exact = c.rng().standard_normal((20, 10))
        stream = c.dynreg.MeasurementStream(exact)
        spec = c.dynreg.NoiseSpec(0.05, seed=1)
        noisy = c.dynreg.core.generate_noise(stream, spec)

        check = diagnostics.check_noise_levels(noisy, spec)
        assert check.holds
        assert check.first.size == 20
        assert check.measured[0] <= 0.05

        loud = c.dynreg.MeasurementStream(exact, exact + 1.)
        assert not diagnostics.check_noise_levels(loud, spec).holds

    def test_quadratic_bound(self):
        """
        For quadratic fidelities C = 2 always holds, C = 1 without noise.
        """
        rng = c.rng()
        a = rng.standard_normal((30, 5))
        n = rng.standard_normal((30, 5))
        exact = 0.5 * c.np.sum(a * a, axis=1)
        noisy = 0.5 * c.np.sum((a - n)**2, axis=1)
        noise = c.np.sum(n * n, axis=1)

        constant, check = diagnostics.check_quadratic_bound(
                exact, noisy, noise
        )
        assert c.np.all(check.holds)
        assert c.np.all(c.np.diff(constant) >= 0.)
        assert constant[-1] <= 2.

        constant, check = diagnostics.check_quadratic_bound(
                exact, exact, c.np.zeros(30)
        )
        assert c.np.allclose(constant, 1.)

    def test_linear_linearisation(self):
        """
        Linear models have margin (1/2 - η) ||W A h||^2.
        """
        operator, regs, truth, _, stream = c.small_linear_setup(frames=6)
        frames = truth.as_array() + 0.1 * c.rng().standard_normal(
                (6, truth.frame_dim)
        )
        margins, check = diagnostics.check_linearisation(
                operator, frames, truth, stream, eta=0.4
        )
        expected = [
                0.1 * float(c.np.sum(operator.apply(h)**2))
                for h in frames - truth.as_array()
        ]

        assert c.np.allclose(margins, expected)
        assert c.np.all(check.holds)

    def test_misfits(self):
        model = c.dynreg.MatrixOperator.identity(2)
        stream = c.dynreg.MeasurementStream(
                [[0., 0.], [1., 1.]], [[1., 0.], [1., 2.]]
        )
        exact, noisy, noise = diagnostics.frame_misfits(
                model, [[0., 0.], [1., 1.]], stream
        )
        assert c.np.allclose(exact, 0.)
        assert c.np.allclose(noisy, [0.5, 0.5])
        assert c.np.allclose(noise, [1., 1.])


class TheoremChecksTest(c.unittest.TestCase):

    def test_bregman_formula(self):
        check = diagnostics.theorem_bregman_check(
                bregman=[1., 1.],
                e=[0., 2.],
                witness_sq=[1., 1.],
                delta=0.1,
                alpha=0.5,
                eta=0.5,
        )
        # δ/(2ηα) = 0.2, e/(α(N+1)), α||w||^2/(2η(N+1))
        assert c.np.allclose(check.rhs, [0.2 + 0. + 0.5, 0.2 + 2. + 0.25])
        assert c.np.allclose(check.lhs, [1., 1.])
        assert c.np.array_equal(check.holds, [False, True])

        v = diagnostics.verdict("bregman", check)
        assert v.frames_checked == 2
        assert v.violations == 1
        assert c.np.isclose(v.worst_margin, -0.3)

        with self.assertRaises(ValueError):
            diagnostics.theorem_bregman_check([1.], [0.], [0.], 0.1, 0.)

    def test_d_bound(self):
        spec = c.dynreg.NoiseSpec(0.1, q=1., c_prime=1.)
        d = diagnostics.boundconst_d(
                e=[0., 1.], alpha=0.5, spec=spec, r_hat=[1., 3.]
        )
        assert c.np.allclose(d, [0.4 + 0. + 1., 0.4 + 1. + 2.])

        misfit, reg = diagnostics.bound_consequences(
                d, 0.5, 2., exact=[0.1, 0.1], reg_values=[1., 3.]
        )
        assert c.np.all(misfit.holds)
        assert c.np.all(reg.holds)
        assert c.np.allclose(reg.lhs, [1., 2.])

    def test_strong_check_needs_positive_growth(self):
        check = diagnostics.theorem_strong_check(
                sq_error=[0., 0.],
                e=[0., 0.],
                witness_sq=[0., 0.],
                delta=0.1,
                alpha=0.5,
                gamma=[1., 0.],
                epsilon=[0., 0.],
        )
        assert c.np.array_equal(check.holds, [True, False])
        assert c.np.isclose(check.rhs[0], 0.05)

    def test_growth_factor_of_quadratic(self):
        """
        Q(x) = 1/2 ||x - b||^2 gives exactly γ = 1/4 without ε.
        """
        grad = c.dynreg.GridGradient((1, 4))
        regs = c.dynreg.RegulariserStack(grad)
        data = c.rng().standard_normal((3, 4))
        problem = batch_oracle.BatchProblem(
                c.dynreg.MatrixOperator.identity(4), data, 0., regs
        )
        reference = c.rng(1).standard_normal((3, 4))
        witness = diagnostics.SourceWitness(
                w=c.np.zeros((3, 4)),
                residual=c.np.zeros(3),
                norm_sq=c.np.zeros(3),
                ridge=False,
        )
        star = diagnostics.reference_star(problem, reference, witness)
        assert c.np.allclose(star, reference - data)

        samples = diagnostics.perturbed_samples(reference + 1., seed=2)
        assert len(samples) == 5
        gamma = diagnostics.realised_growth_factor(
                problem, reference, star, samples, c.np.zeros(3)
        )
        assert c.np.allclose(gamma, 0.25)

        eps = diagnostics.growth_epsilon(0.1, 3, eta=0.5)
        assert c.np.allclose(eps, [0.2, 0.4, 0.6])
        loose = diagnostics.realised_growth_factor(
                problem, reference, star, samples, eps
        )
        assert c.np.all(loose > 0.25)

    def test_set_distance(self):
        distance = diagnostics.set_distance([[0., 0.], [1., 0.]])
        assert distance([1., 1.]) == 1.
        assert distance([0.5, 0.]) == 0.25

        with self.assertRaises(raise_if.PreconditionError):
            diagnostics.set_distance(c.np.zeros((0, 2)))


class LimitQuantitiesTest(c.unittest.TestCase):

    def _levels(self, gamma=1.):
        levels = list()
        for delta in (0.1, 0.05, 0.01):
            levels.append(
                    diagnostics.LevelSummary(
                            delta=delta,
                            alpha=c.dynreg.alpha_schedule(delta),
                            e=c.np.full(8, delta),
                            witness_sq=c.np.arange(1., 9.),
                            gamma=gamma,
                    )
            )
        return levels

    def test_trend(self):
        table = diagnostics.limit_quantities(self._levels()[::-1], eta=0.4)

        assert c.np.allclose(table.deltas, [0.1, 0.05, 0.01])
        assert table.gamma == 1.
        assert table.decreasing == (True, True, True)
        assert c.np.allclose(table.e2, table.deltas)

    def test_preconditions(self):
        with self.assertRaises(raise_if.PreconditionError):
            diagnostics.limit_quantities(self._levels()[:2])
        with self.assertRaises(raise_if.PreconditionError):
            diagnostics.limit_quantities(self._levels(gamma=0.))

    def test_verdict_ignores_nonfinite(self):
        check = CheckResult(
                lhs=c.np.array([0., 1.]),
                rhs=c.np.array([c.np.nan, 2.]),
                holds=c.np.array([False, True]),
        )
        v = diagnostics.verdict("x", check)
        assert v.violations == 1
        assert v.worst_margin == 1.


if __name__ == "__main__":
    c.unittest.main()
