try:
    from . import common as c
except BaseException:
    import common as c

from dynreg import batch_oracle
from dynreg import forward_eit
from dynreg.create import scenario
from dynreg.helpers import raise_if
from dynreg.regularisers import tv_value


def _denoising(n=6, frames=3, alpha=0.2):
    grad = c.dynreg.GridGradient((1, n))
    regs = c.dynreg.RegulariserStack(grad)
    data = c.rng().standard_normal((frames, n))
    data[1] = data[0]
    model = c.dynreg.MatrixOperator.identity(n)

    return batch_oracle.BatchProblem(model, data, alpha, regs)


class SolveBatchTest(c.unittest.TestCase):

    def test_unregularised(self):
        """
        α = 0 with the identity returns the data.
        """
        problem = _denoising(alpha=0.)
        result = batch_oracle.solve_batch(problem)

        assert c.np.allclose(result.trajectory.as_array(), problem.data)
        assert c.np.isclose(result.objective, 0.)

    def test_minimiser(self):
        """
        Random perturbations never lower the frame objectives.
        """
        problem = _denoising()
        result = batch_oracle.solve_batch(problem)
        base = problem.frame_objectives(result.trajectory)
        rng = c.rng(2)

        for _ in range(20):
            h = rng.standard_normal(result.trajectory.as_array().shape)
            moved = result.trajectory.as_array() + 1e-3 * h
            assert c.np.all(problem.frame_objectives(moved) >= base - 1e-12)

        assert c.np.all(result.gaps <= problem.tolerance)
        radius = problem.alpha * (1. + 1e-10)
        assert c.np.all(c.np.linalg.norm(result.duals, axis=1) <= radius)

    def test_identical_frames_shared(self):
        problem = _denoising()
        result = batch_oracle.solve_batch(problem)

        assert result.history[0] is result.history[1]
        assert c.np.array_equal(result.trajectory[0], result.trajectory[1])
        # running best objective
        assert c.np.all(c.np.diff(result.history[2]) <= 0.)

    def test_nonlinear_models_unsupported(self):
        m = c.coarse_mesh()
        model = forward_eit.EITFrameModel(forward_eit.CEMSystem(m))
        regs = c.dynreg.RegulariserStack(c.dynreg.MeshGradient(m))
        problem = batch_oracle.BatchProblem(
                model, c.np.zeros((1, model.out_dim)), 1., regs
        )
        with self.assertRaises(raise_if.UnsupportedError):
            batch_oracle.solve_batch(problem)
        with self.assertRaises(raise_if.UnsupportedError):
            batch_oracle.min_r_solution(
                    model, c.np.zeros((1, model.out_dim)), regs
            )

    def test_problem_validation(self):
        grad = c.dynreg.GridGradient((1, 4))
        regs = c.dynreg.RegulariserStack(grad)
        model = c.dynreg.MatrixOperator.identity(4)

        with self.assertRaises(raise_if.ProperError):
            batch_oracle.BatchProblem(model, c.np.zeros((0, 4)), 1., regs)
        with self.assertRaises(raise_if.DimensionError):
            batch_oracle.BatchProblem(model, c.np.zeros((2, 5)), 1., regs)
        with self.assertRaises(raise_if.DimensionError):
            batch_oracle.BatchProblem(
                    [model], c.np.zeros((2, 4)), 1., regs
            )
        with self.assertRaises(ValueError):
            batch_oracle.BatchProblem(model, c.np.zeros((2, 4)), -1., regs)


class MinRTest(c.unittest.TestCase):

    def test_injective(self):
        """
        Injective operators have x̂ = A^+ b̂.
        """
        grad = c.dynreg.GridGradient((2, 3))
        regs = c.dynreg.RegulariserStack(grad)
        matrix = c.np.eye(6) + 0.1 * c.rng().standard_normal((6, 6))
        model = c.dynreg.MatrixOperator(matrix)
        truth = c.rng(4).standard_normal((2, 6))
        exact = truth @ matrix.T

        result = batch_oracle.min_r_solution(model, exact, regs)
        assert c.np.allclose(result.trajectory.as_array(), truth)
        assert result.residual < 1e-8
        assert result.path.shape == (0, 2)
        assert c.np.isclose(
                result.r_value, sum(tv_value(grad, x) for x in truth)
        )

    def test_degenerate_chain(self):
        """
        On the chain the minimum-R solution keeps the data, reaches the
        smallest total variation and its subgradient is in the range of
        A^*.
        """
        chain = scenario.degenerate_chain(n=8)
        regs = c.dynreg.RegulariserStack(chain.gradient)
        exact = c.np.stack([chain.operator.apply(chain.truth)] * 3)

        result = batch_oracle.min_r_solution(chain.operator, exact, regs)
        assert result.residual < 1e-7
        assert result.path.shape[0] == len(batch_oracle.continuation_alphas())
        for x in result.trajectory:
            assert c.np.isclose(tv_value(chain.gradient, x), 1., atol=1e-4)
        null = scenario.null_direction(chain)
        assert c.np.allclose(result.subgradients @ null, 0., atol=1e-8)

    def test_continuation_alphas(self):
        alphas = batch_oracle.continuation_alphas(4)
        assert c.np.allclose(alphas, [1., 10**-0.5, 0.1, 10**-1.5, 0.01])


class OnlineComparisonTest(c.unittest.TestCase):

    def test_batch_beats_online(self):
        """
        At every noise level the batch minimiser has an objective no larger
        than the online trajectory.
        """
        for delta in (0.1, 0.01):
            operator, regs, _, _, stream = c.small_linear_setup(
                    frames=4, delta=delta
            )
            alpha = c.dynreg.core.alpha_schedule(delta)
            problem = batch_oracle.BatchProblem(
                    operator,
                    stream.corrupted,
                    alpha,
                    regs,
                    precision=stream.precision,
            )
            online, _ = c.dynreg.run_online(
                    operator, stream, regs, alpha=alpha
            )
            batch = batch_oracle.solve_batch(problem)

            online_value = problem.objective(online)
            assert batch.objective <= online_value
            # frames decouple, so the batch wins frame by frame
            ledger = batch_oracle.compute_e(online, batch.trajectory, problem)
            assert c.np.all(ledger.differences >= -1e-9)


class ErrorLedgerTest(c.unittest.TestCase):

    def test_reference_has_no_error(self):
        problem = _denoising()
        reference = problem.data
        ledger = batch_oracle.compute_e(reference, reference, problem)

        assert c.np.all(ledger.e == 0.)
        assert c.np.all(ledger.differences == 0.)

    def test_increments_bound_error(self):
        problem = _denoising()
        reference = batch_oracle.solve_batch(problem).trajectory
        other = reference.as_array() + c.rng(8).standard_normal((3, 6))
        ledger = batch_oracle.compute_e(other, reference, problem)

        assert c.np.all(ledger.e > 0.)
        assert c.np.all(c.np.diff(ledger.e) >= 0.)
        assert c.np.all(c.np.cumsum(ledger.increments) >= ledger.e - 1e-12)

        # prefixes are allowed
        head = batch_oracle.compute_e(
                other[:2], reference.prefix(2), problem
        )
        assert c.np.allclose(head.e, ledger.e[:2])

        with self.assertRaises(raise_if.DimensionError):
            batch_oracle.compute_e(other[:2], reference, problem)


if __name__ == "__main__":
    c.unittest.main()
