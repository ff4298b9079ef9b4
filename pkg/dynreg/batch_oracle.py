"""dynreg/dynreg/batch_oracle.py.

Reference solutions. Minimises the cumulative Tikhonov objective
Q^N_δ(x) = sum_k 1/2 ||W (A_k x_k - b_k)||^2 + α R(x_k) frame by frame,
finds minimum-R solutions of the exact data equation, and measures the
solution quality error e^N_δ of an online trajectory against them.
"""

from collections import namedtuple

import numpy as np

from dynreg import settings
from dynreg.core import Trajectory
from dynreg.forward_linear import operator_norm
from dynreg.regularisers import DualBall
from dynreg.regularisers import project_dual_ball
from dynreg.regularisers import prox_box
from dynreg.regularisers import tv_subgradient
from dynreg.regularisers import tv_value
from dynreg.utils import arr
from dynreg.utils import log
from dynreg.helpers import raise_if
from dynreg._base import DynregBase


class BatchProblem(DynregBase):
    """Cumulative problem over frames 0..N with linear frame models.

    Parameters
    -----------
    frame_models: FrameForwardModel or list
      one shared model or one per frame.
    data: (N + 1, m) array-like
    alpha: float
      >= 0. Zero drops the regulariser.
    regs: RegulariserStack
    precision: float or (m,) array-like
    tolerance: float
      Default is `settings.BATCH_TOLERANCE`.
    max_iterations: int
      Default is `settings.BATCH_MAX_ITERATIONS`.
    """

    __slots__ = (
            "frame_models",
            "data",
            "alpha",
            "regs",
            "precision",
            "tolerance",
            "max_iterations",
    )

    def __init__(self, frame_models, data, alpha, regs, precision=1.,
                 tolerance=None, max_iterations=None):
        data = np.atleast_2d(np.asarray(data, dtype=settings.FLOAT_DTYPE))
        if data.size == 0:
            raise raise_if.ProperError("batch problem has no data.")
        if not isinstance(frame_models, (list, tuple)):
            frame_models = [frame_models] * data.shape[0]
        frame_models = list(frame_models)
        raise_if.dimension_mismatch(
                data.shape[0], len(frame_models), "frame model list"
        )
        for k, model in enumerate(frame_models):
            raise_if.dimension_mismatch(
                    model.out_dim, data.shape[1], f"data of frame {k}"
            )
            raise_if.dimension_mismatch(
                    regs.gradient.in_dim, model.in_dim, f"model of frame {k}"
            )

        if alpha < 0:
            raise ValueError(f"alpha should be >= 0, got {alpha}.")

        self.frame_models = frame_models
        self.data = arr.frozen(data)
        self.alpha = float(alpha)
        self.regs = regs
        self.precision = arr.frozen(
                np.broadcast_to(np.asarray(precision, dtype=float),
                                (data.shape[1], ))
        )
        self.tolerance = float(
                settings.BATCH_TOLERANCE if tolerance is None else tolerance
        )
        self.max_iterations = int(
                settings.BATCH_MAX_ITERATIONS
                if max_iterations is None else max_iterations
        )
        raise_if.not_positive(self.tolerance, "batch tolerance")

    @property
    def horizon(self):
        return self.data.shape[0] - 1

    def frame_objective(self, k, x, data=None):
        """1/2 ||W (A_k x - b_k)||^2 + α R(x)."""
        b = self.data[k] if data is None else data
        wr = (self.frame_models[k].apply(x) - b) * self.precision
        value = 0.5 * float(wr @ wr)
        if self.alpha > 0:
            value += self.alpha * tv_value(self.regs.gradient, x)

        return value + self.regs.box.indicator(x)

    def frame_objectives(self, trajectory, data=None):
        """Per-frame objective values of a trajectory (or an (N+1, d) array).
        """
        frames = _frames_of(trajectory)
        if data is None:
            data = self.data
        return np.array(
                [self.frame_objective(k, x, data[k])
                 for k, x in enumerate(frames)]
        )

    def objective(self, trajectory):
        """Q^N_δ of a trajectory on the problem horizon."""
        frames = _frames_of(trajectory)
        raise_if.dimension_mismatch(
                self.horizon + 1, len(frames), "trajectory length"
        )
        return float(np.sum(self.frame_objectives(frames)))


def _frames_of(trajectory):
    if isinstance(trajectory, Trajectory):
        return trajectory.frames
    return list(np.atleast_2d(trajectory))


BatchResult = namedtuple(
        "BatchResult", ["trajectory", "duals", "objective", "gaps", "history"]
)
"""
namedtuple returned by `solve_batch`.

Attributes
-----------
trajectory: Trajectory
duals: (N + 1, 2, n_sites) np.ndarray
  dual fields in the radius α ball.
objective: float
  Q^N_δ at the returned trajectory.
gaps: (N + 1,) np.ndarray
  final fixed point residual per frame, the gap surrogate.
history: tuple of np.ndarray
  running best frame objective per iteration, one array per frame.
"""

MinRResult = namedtuple(
        "MinRResult",
        ["trajectory", "subgradients", "r_value", "residual", "path"],
)
"""
namedtuple returned by `min_r_solution`.

Attributes
-----------
trajectory: Trajectory
  minimum-R solution x̂^N.
subgradients: (N + 1, d) np.ndarray
  v̂_k in the subdifferential of TV at x̂_k, of the form K^T y.
r_value: float
  sum of per-frame TV.
residual: float
  largest ||A_k x̂_k - b̂_k||.
path: (n_alpha, 2) np.ndarray
  continuation (α_j, R) pairs, empty for injective operators.
"""

ErrorLedger = namedtuple("ErrorLedger", ["e", "increments", "differences"])
"""
namedtuple returned by `compute_e`.

Attributes
-----------
e: (N + 1,) np.ndarray
  e^n_δ = max(0, Q^n_δ(x_δ) - Q^n_δ(x̂)) for every prefix n.
increments: (N + 1,) np.ndarray
  frame-wise objective differences clipped at 0. Their cumulative sums
  bound e from above.
differences: (N + 1,) np.ndarray
  unclipped frame-wise objective differences.
"""


def _lipschitz(model, precision):
    """||W A||^2, the Lipschitz constant of the data gradient."""
    if hasattr(model, "norm_bound"):
        norm = model.norm_bound()
    else:
        norm = operator_norm(model)
    return float(np.max(precision)**2 * norm**2)


def _solve_frame(model, b, alpha, regs, precision, tolerance,
                 max_iterations, x0=None, y0=None):
    """Primal-dual iteration with an explicit data gradient step on one
    frame. Steps satisfy τ (L / 2 + s ||K||^2) < 1.

    Returns
    --------
    x: (d,) np.ndarray
    y: (2, n_sites) np.ndarray
    residual: float
    history: (n_iter,) np.ndarray
    """
    gradient = regs.gradient
    lip = _lipschitz(model, precision)
    k_norm = gradient.norm()
    regularised = alpha > 0

    if regularised:
        sigma = 1. / k_norm
        tau = 0.99 / (0.5 * lip + k_norm)
        ball = DualBall(alpha)
    else:
        sigma = 0.
        tau = 1. / max(lip, settings.TOLERANCE)

    x = np.zeros(gradient.in_dim) if x0 is None else np.array(x0, dtype=float)
    x = prox_box(regs.box, x)
    if y0 is None or not regularised:
        y = np.zeros((2, gradient.n_sites))
    else:
        y = project_dual_ball(ball, y0)

    def objective(x_):
        wr = (model.apply(x_) - b) * precision
        value = 0.5 * float(wr @ wr)
        if regularised:
            value += alpha * tv_value(gradient, x_)
        return value

    best = objective(x)
    history = list()
    residual = np.inf
    for _ in range(max_iterations):
        g = model.adjoint_apply((model.apply(x) - b) * precision**2)
        if regularised:
            x_new = prox_box(regs.box, x - tau * (g + gradient.div_apply(y)))
            y_new = project_dual_ball(
                    ball, y + sigma * gradient.grad_apply(2. * x_new - x)
            )
        else:
            x_new = prox_box(regs.box, x - tau * g)
            y_new = y

        scale = max(1., float(np.linalg.norm(x_new)))
        residual = max(
                float(np.linalg.norm(x_new - x)),
                float(np.linalg.norm(y_new - y)),
        ) / scale
        x, y = x_new, y_new

        best = min(best, objective(x))
        history.append(best)
        if residual <= tolerance:
            break
    else:
        raise raise_if.ConvergenceError(
                f"batch iteration did not converge in {max_iterations} "
                f"iterations, residual {residual:.3e}.",
                residual=residual,
        )

    return x, y, residual, np.asarray(history)


def solve_batch(problem, x_init=None):
    """Minimiser of Q^N_δ. Frames decouple, so each is solved on its own.
    Frames with identical model and data are solved once and shared.

    Parameters
    -----------
    problem: BatchProblem
    x_init: (d,) np.ndarray
      (Optional) starting point of the first frame. Later frames start
      from the previous solution.

    Returns
    --------
    result: BatchResult
    """
    if not all(m.is_linear for m in problem.frame_models):
        raise raise_if.UnsupportedError(
                "solve_batch needs linear frame models."
        )

    solved = dict()
    xs, ys, gaps, histories = list(), list(), list(), list()
    x_prev, y_prev = x_init, None
    for k in range(problem.horizon + 1):
        model = problem.frame_models[k]
        b = problem.data[k]
        key = (id(model), b.tobytes())
        if key not in solved:
            solved[key] = _solve_frame(
                    model,
                    b,
                    problem.alpha,
                    problem.regs,
                    problem.precision,
                    problem.tolerance,
                    problem.max_iterations,
                    x0=x_prev,
                    y0=y_prev,
            )
        x, y, gap, history = solved[key]
        xs.append(x)
        ys.append(y)
        gaps.append(gap)
        histories.append(history)
        x_prev, y_prev = x, y
        log.progress("solve_batch", k, problem.horizon)

    trajectory = Trajectory(xs, frame_dim=problem.regs.gradient.in_dim)
    return BatchResult(
            trajectory=trajectory,
            duals=np.stack(ys),
            objective=problem.objective(trajectory),
            gaps=np.asarray(gaps),
            history=tuple(histories),
    )


def continuation_alphas(steps=None):
    """α_j = 10^(-j/2), j = 0..steps."""
    if steps is None:
        steps = settings.CONTINUATION_STEPS
    return 10.**(-np.arange(int(steps) + 1) / 2.)


def min_r_solution(frame_models, exact_data, regs, tolerance=None,
                   steps=None):
    """Minimum-R solution of A_k x_k = b̂_k on every frame, with a
    subgradient of TV at it whose negative lies in the range of A_k^*.

    Injective operators have a singleton solution set and are solved
    directly. Otherwise α-continuation over `continuation_alphas` is
    followed by a least squares projection onto the constraint.

    Parameters
    -----------
    frame_models: MatrixOperator, LinearFrameOperator or list
    exact_data: (N + 1, m) array-like
    regs: RegulariserStack
    tolerance: float
      constraint residual to reach. Default is
      `settings.CONSTRAINT_TOLERANCE`.
    steps: int
      continuation length. Default is `settings.CONTINUATION_STEPS`.

    Returns
    --------
    result: MinRResult
    """
    if tolerance is None:
        tolerance = settings.CONSTRAINT_TOLERANCE

    exact_data = np.atleast_2d(
            np.asarray(exact_data, dtype=settings.FLOAT_DTYPE)
    )
    if not isinstance(frame_models, (list, tuple)):
        frame_models = [frame_models] * exact_data.shape[0]
    if not all(getattr(m, "is_linear", False) for m in frame_models):
        raise raise_if.UnsupportedError(
                "minimum-R solutions are available for linear models only."
        )

    gradient = regs.gradient
    alphas = continuation_alphas(steps)
    solved = dict()
    factors = dict()
    xs, vs, path = list(), list(), None
    for k, (model, b) in enumerate(zip(frame_models, exact_data)):
        key = (id(model), b.tobytes())
        if key in solved:
            x, v = solved[key]
            xs.append(x)
            vs.append(v)
            continue

        if id(model) not in factors:
            matrix = model.as_matrix()
            factors[id(model)] = (
                    matrix,
                    np.linalg.pinv(matrix),
                    arr.is_injective(matrix),
            )
        matrix, pinv, injective = factors[id(model)]
        if injective:
            x = pinv @ b
            v = tv_subgradient(gradient, x)
        else:
            x, v, path = _continuation(model, b, regs, alphas, tolerance)
            x = x - pinv @ (matrix @ x - b)

        residual = float(np.linalg.norm(matrix @ x - b))
        if residual > tolerance * max(1., float(np.linalg.norm(b))):
            raise raise_if.ConvergenceError(
                    f"frame {k} constraint residual {residual:.3e} is above "
                    f"{tolerance:.1e}.",
                    residual=residual,
            )
        solved[key] = (x, v)
        xs.append(x)
        vs.append(v)

    trajectory = Trajectory(xs, frame_dim=gradient.in_dim)
    residual = max(
            float(np.linalg.norm(m.apply(x) - b))
            for m, x, b in zip(frame_models, trajectory, exact_data)
    )
    r_value = float(sum(tv_value(gradient, x) for x in trajectory))
    log.debug(
            "min_r_solution -", len(solved), "distinct frames, R =", r_value,
            "residual", residual
    )

    return MinRResult(
            trajectory=trajectory,
            subgradients=np.stack(vs),
            r_value=r_value,
            residual=residual,
            path=np.empty((0, 2)) if path is None else path,
    )


def _continuation(model, b, regs, alphas, tolerance):
    """α-continuation on one frame. The returned subgradient
    K^T (y / α) = A^* W^2 (b - A x) / α lies in the range of A^*.
    """
    x, y = None, None
    path = list()
    for alpha in alphas:
        x, y, _, _ = _solve_frame(
                model,
                b,
                alpha,
                regs,
                np.ones(model.out_dim),
                settings.BATCH_TOLERANCE,
                settings.BATCH_MAX_ITERATIONS,
                x0=x,
                y0=y,
        )
        path.append((alpha, tv_value(regs.gradient, x)))

    path = np.asarray(path)
    if path.shape[0] > 1 and abs(path[-1, 1] - path[-2, 1]) > 1e-6 * max(
            1., abs(path[-1, 1])
    ):
        log.warning(
                "min_r_solution - continuation R still moves "
                f"{path[-2, 1]:.8g} -> {path[-1, 1]:.8g}"
        )
    v = model.adjoint_apply(b - model.apply(x)) / alphas[-1]

    return x, v, path


def compute_e(trajectory, reference, problem):
    """Solution quality error e^n_δ = max(0, Q^n_δ(x_δ) - Q^n_δ(x̂)) for
    every prefix n of the horizon.

    Parameters
    -----------
    trajectory: Trajectory
      online reconstruction x_δ.
    reference: Trajectory
      minimum-R solution x̂.
    problem: BatchProblem
      carries corrupted data, α and R.

    Returns
    --------
    ledger: ErrorLedger
    """
    frames = _frames_of(trajectory)
    ref = _frames_of(reference)
    if len(frames) != len(ref):
        raise raise_if.DimensionError(
                f"trajectory has {len(frames)} frames, reference has "
                f"{len(ref)}."
        )
    if len(frames) > problem.horizon + 1:
        raise raise_if.DimensionError(
                f"trajectory has {len(frames)} frames, problem horizon is "
                f"{problem.horizon}."
        )

    differences = problem.frame_objectives(frames) - problem.frame_objectives(
            ref
    )
    e = np.maximum(0., np.cumsum(differences))

    return ErrorLedger(
            e=e,
            increments=np.maximum(0., differences),
            differences=differences,
    )
