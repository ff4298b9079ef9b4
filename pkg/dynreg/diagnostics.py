"""dynreg/dynreg/diagnostics.py.

Numerical evaluation of the assumptions and convergence estimates on
computed trajectories. Quantities are evaluated at every horizon N, so
most checks return arrays indexed by N.

The data fidelity is l(y) = 1/2 ||W y||^2 with diagonal precision W, and
norms in data space are weighted by W throughout.
"""

from collections import namedtuple

import numpy as np

from dynreg import settings
from dynreg.core import Trajectory
from dynreg.regularisers import tv_subgradient
from dynreg.regularisers import tv_value
from dynreg.utils import arr
from dynreg.utils import log
from dynreg.helpers import raise_if
from dynreg.helpers.data import CheckResult
from dynreg.helpers.data import Verdict

DiagnosticsRecord = namedtuple(
        "DiagnosticsRecord",
        [
                "frame",
                "delta",
                "alpha",
                "cum_avg_sq_error",
                "bregman",
                "data_fit",
                "reg_value",
                "e_increment",
                "thm_lhs",
                "thm_rhs",
                "holds",
                "noise_energy",
                "quadratic_c",
                "linearisation_margin",
                "witness_norm",
        ],
)
"""
namedtuple for one frame of a diagnosed run. `_asdict()` gives a run CSV
row.

Attributes
-----------
frame: int
delta: float
alpha: float
cum_avg_sq_error: float
  (1/(N+1)) sum_t ||x̂_t - x_t||^2 with N = frame.
bregman: float
  Bregman divergence of TV at this frame.
data_fit: float
reg_value: float
e_increment: float
thm_lhs: float
thm_rhs: float
holds: bool
noise_energy: float
  ||W n_k||^2
quadratic_c: float
  smallest valid quadratic bound constant up to this frame.
linearisation_margin: float
witness_norm: float
  ||ŵ^N|| of the source witness, nan in EIT mode.
"""

SourceWitness = namedtuple(
        "SourceWitness", ["w", "residual", "norm_sq", "ridge"]
)
"""
namedtuple returned by `fit_source_witness`.

Attributes
-----------
w: (N + 1, m) np.ndarray
  per frame ω_k with A_k^* W ω_k ≈ -v̂_k.
residual: (N + 1,) np.ndarray
  ||A_k^* W ω_k + v̂_k|| per frame.
norm_sq: (N + 1,) np.ndarray
  cumulative sum_{k<=N} ||ω_k||^2, i.e. ||ŵ^N||^2.
ridge: float
  λ of the fit, zero for the pseudoinverse fit.
"""

NoiseCheck = namedtuple("NoiseCheck", ["holds", "measured", "first", "second"])
"""
namedtuple returned by `check_noise_levels`.

Attributes
-----------
holds: bool
measured: tuple
  (first, second) at the last horizon.
first: (N + 1,) np.ndarray
  (1/(N+1)) ||l'(b_δ - b̂)||^2 per horizon.
second: (N + 1,) np.ndarray
  (1/(N+1)) l(b_δ - b̂) per horizon.
"""

LimitTable = namedtuple(
        "LimitTable", ["deltas", "e1", "e2", "e3", "gamma", "decreasing"]
)
"""
namedtuple returned by `limit_quantities`, levels sorted by decreasing δ.

Attributes
-----------
deltas: (L,) np.ndarray
e1: (L,) np.ndarray
  (e + ε) / ((N+1) γ̃), tail averaged.
e2: (L,) np.ndarray
  δ / γ̃^2
e3: (L,) np.ndarray
  α^2 ||ŵ||^2 / ((N+1) γ̃^2), tail averaged.
gamma: float
  common growth factor γ̃.
decreasing: tuple
  one bool per quantity, True if it decreases with δ.
"""

LevelSummary = namedtuple(
        "LevelSummary", ["delta", "alpha", "e", "witness_sq", "gamma"]
)
"""
namedtuple of the per-level inputs of `limit_quantities`.

Attributes
-----------
delta: float
alpha: float
e: (N + 1,) np.ndarray
witness_sq: (N + 1,) np.ndarray
  cumulative ||ŵ^N||^2.
gamma: float
  realised growth factor of this level.
"""


def _stack(frames):
    if isinstance(frames, Trajectory):
        return frames.as_array()
    return np.atleast_2d(np.asarray(frames, dtype=settings.FLOAT_DTYPE))


def _horizons(n):
    return np.arange(1, n + 1, dtype=settings.FLOAT_DTYPE)


def _weighted(precision, r):
    return np.asarray(r) * precision


def averaged_sq_error(trajectory, truth):
    """Cumulative averaged squared error (1/(N+1)) sum_{t<=N} ||x̂_t - x_t||^2
    at every N.

    Parameters
    -----------
    trajectory: Trajectory or (N + 1, d) array-like
    truth: Trajectory or (n >= N + 1, d) array-like
      extra truth frames are ignored.

    Returns
    --------
    errors: (N + 1,) np.ndarray
    """
    x = _stack(trajectory)
    t = _stack(truth)
    if t.shape[0] < x.shape[0] or t.shape[1] != x.shape[1]:
        raise raise_if.DimensionError(
                f"truth {t.shape} does not cover trajectory {x.shape}."
        )
    diff = x - t[:x.shape[0]]

    return arr.running_mean(np.sum(diff * diff, axis=1))


def frame_bregman(regulariser, frames, reference, subgradients):
    """Per-frame Bregman divergence R(x_k) - R(x̂_k) - <v̂_k, x_k - x̂_k>.

    Parameters
    -----------
    regulariser: callable or gradient operator
      R itself, or a gradient operator for R = TV.
    frames: (N + 1, d) array-like
    reference: (N + 1, d) array-like
    subgradients: (N + 1, d) array-like

    Returns
    --------
    divergences: (N + 1,) np.ndarray
    """
    x = _stack(frames)
    x_hat = _stack(reference)[:x.shape[0]]
    v = np.atleast_2d(np.asarray(subgradients))[:x.shape[0]]
    raise_if.dimension_mismatch(x.shape, x_hat.shape, "reference")
    raise_if.dimension_mismatch(x.shape, v.shape, "subgradients")

    if callable(regulariser):
        value = regulariser
    else:

        def value(f):
            return tv_value(regulariser, f)

    return np.array(
            [
                    value(a) - value(b) - float(s @ (a - b))
                    for a, b, s in zip(x, x_hat, v)
            ]
    )


def bregman_r(x, x_hat, v, regulariser):
    """Bregman divergence of R at x̂ for the subgradient v, summed over
    frames for stacked inputs.

    Parameters
    -----------
    x: (d,) or (N + 1, d) array-like
    x_hat: same shape as x
    v: same shape as x
    regulariser: callable or gradient operator

    Returns
    --------
    divergence: float
    """
    return float(np.sum(frame_bregman(regulariser, x, x_hat, v)))


def select_subgradient(gradient, x_hat, dual=None, alpha=1.):
    """Subgradient v̂ of TV at x̂. With a dual field y from a solve at
    parameter α, v̂ = K^T (y / α), otherwise the pointwise normalised
    gradient.

    Parameters
    -----------
    gradient: GridGradient or MeshGradient
    x_hat: (d,) array-like
    dual: (2, n_sites) array-like
    alpha: float

    Returns
    --------
    v: (d,) np.ndarray
    """
    if dual is None:
        return tv_subgradient(gradient, x_hat)
    raise_if.not_positive(alpha, "alpha")

    return gradient.div_apply(np.asarray(dual) / alpha)


def fit_source_witness(frame_models, subgradients, precision=1., ridge=None,
                       delta=None):
    """Ridge source condition witness per frame, minimising

        ||A_k^* W ω_k + v̂_k||^2 + λ ||ω_k||^2.

    Parameters
    -----------
    frame_models: LinearOperatorBase or list
    subgradients: (N + 1, d) array-like
    precision: float or (m,) array-like
    ridge: float
      λ >= 0. Zero gives the pseudoinverse fit. Default is
      `settings.WITNESS_RIDGE` * δ, or `settings.WITNESS_RIDGE_MIN` without
      a noise level.
    delta: float
      (Optional) noise level the default λ follows.

    Returns
    --------
    witness: SourceWitness
    """
    if ridge is None:
        ridge = settings.WITNESS_RIDGE_MIN
        if delta is not None:
            ridge = max(ridge, settings.WITNESS_RIDGE * float(delta))
    ridge = float(ridge)
    if ridge < 0:
        raise ValueError(f"ridge should be >= 0, got {ridge}.")
    v = np.atleast_2d(np.asarray(subgradients, dtype=settings.FLOAT_DTYPE))
    if not isinstance(frame_models, (list, tuple)):
        frame_models = [frame_models] * v.shape[0]
    raise_if.dimension_mismatch(v.shape[0], len(frame_models), "model list")

    solvers = dict()
    ws, residuals = list(), list()
    for model, vk in zip(frame_models, v):
        if id(model) not in solvers:
            if not getattr(model, "is_linear", False):
                raise raise_if.UnsupportedError(
                        "source witness fitting needs linear models."
                )
            w_diag = np.broadcast_to(precision, (model.out_dim, ))
            mat = model.as_matrix().T * w_diag[None, :]
            if ridge > 0:
                solve = np.linalg.solve(
                        mat.T @ mat + ridge * np.eye(mat.shape[1]), mat.T
                )
            else:
                solve = np.linalg.pinv(mat)
            solvers[id(model)] = (mat, solve)

        mat, solve = solvers[id(model)]
        w = -solve @ vk
        ws.append(w)
        residuals.append(float(np.linalg.norm(mat @ w + vk)))

    ws = np.stack(ws)
    norm_sq = np.cumsum(np.sum(ws * ws, axis=1))
    log.debug(
            "fit_source_witness - ridge", ridge, "||w||", np.sqrt(norm_sq[-1]),
            "max residual", max(residuals)
    )

    return SourceWitness(
            w=ws,
            residual=np.asarray(residuals),
            norm_sq=norm_sq,
            ridge=ridge,
    )


def check_noise_levels(stream, spec):
    """Noise level condition at every horizon,

        (1/(N+1)) ||l'(b_δ - b̂)||^2 <= δ,
        (1/(N+1)) l(b_δ - b̂) <= C' δ^q.

    Parameters
    -----------
    stream: MeasurementStream
    spec: NoiseSpec

    Returns
    --------
    check: NoiseCheck
    """
    energy = stream.weighted_noise_energy()
    horizons = _horizons(energy.size)
    first = np.cumsum(energy) / horizons
    second = np.cumsum(0.5 * energy) / horizons
    tol = settings.TOLERANCE
    holds = bool(
            np.all(first <= spec.delta + tol) and np.all(
                    second <= spec.c_prime * spec.delta**spec.q + tol
            )
    )

    return NoiseCheck(
            holds=holds,
            measured=(float(first[-1]), float(second[-1])),
            first=first,
            second=second,
    )


def frame_misfits(frame_models, frames, stream):
    """Per-frame l(A x_k - b̂_k), l(A x_k - b_{k,δ}) and ||W n_k||^2.

    Returns
    --------
    exact: (N + 1,) np.ndarray
    noisy: (N + 1,) np.ndarray
    noise: (N + 1,) np.ndarray
    """
    x = _stack(frames)
    if not isinstance(frame_models, (list, tuple)):
        frame_models = [frame_models] * x.shape[0]
    w = stream.precision
    exact, noisy = list(), list()
    for k, xk in enumerate(x):
        ax = frame_models[k].apply(xk)
        r0 = _weighted(w, ax - stream.exact[k])
        r1 = _weighted(w, ax - stream.corrupted[k])
        exact.append(0.5 * float(r0 @ r0))
        noisy.append(0.5 * float(r1 @ r1))

    return (
            np.asarray(exact),
            np.asarray(noisy),
            stream.weighted_noise_energy()[:x.shape[0]],
    )


def check_quadratic_bound(exact, noisy, noise, bound=2.):
    """Smallest C with l(A x_δ - A x̂) <= C (l(A x_δ - b_δ) + ||l'(n)||^2)
    at every horizon up to N. For quadratic l any C >= 2 is valid, and
    C = 1 without noise.

    Parameters
    -----------
    exact: (N + 1,) array-like
      per-frame l(A x_k - b̂_k).
    noisy: (N + 1,) array-like
      per-frame l(A x_k - b_{k,δ}).
    noise: (N + 1,) array-like
      per-frame ||W n_k||^2.
    bound: float
      C the check is held against.

    Returns
    --------
    c: (N + 1,) np.ndarray
      running smallest valid C.
    check: CheckResult
    """
    lhs = np.cumsum(exact)
    rhs = np.cumsum(noisy) + np.cumsum(noise)
    ratio = np.divide(
            lhs,
            rhs,
            out=np.where(lhs > settings.TOLERANCE, np.inf, 0.),
            where=rhs > 0,
    )
    c = np.maximum.accumulate(ratio)

    return c, CheckResult(lhs=lhs, rhs=bound * rhs, holds=c <= bound)


def check_linearisation(frame_models, frames, truth, stream, eta=None,
                        tolerance=None):
    """Approximate linearisation margin per frame,

        <l'(b̂ - b_δ), A(x) - A(x̂) - A'(x̂) h>
        + 1/2 ||W (A(x) - A(x̂))||^2
        - η ||W A'(x̂) h||^2,

    h = x - x̂. For linear A this is (1/2 - η) ||W A h||^2.

    Parameters
    -----------
    frame_models: FrameForwardModel or list
    frames: (N + 1, d) array-like
    truth: (N + 1, d) array-like
    stream: MeasurementStream
    eta: float
      Default is `settings.ETA`.
    tolerance: float
      absolute slack of the cumulative check.

    Returns
    --------
    margins: (N + 1,) np.ndarray
      per frame.
    check: CheckResult
      cumulative lhs (first two terms) against η ||W A' h||^2.
    """
    if eta is None:
        eta = settings.ETA
    if tolerance is None:
        tolerance = settings.TOLERANCE
    x = _stack(frames)
    x_hat = _stack(truth)[:x.shape[0]]
    if not isinstance(frame_models, (list, tuple)):
        frame_models = [frame_models] * x.shape[0]

    w = stream.precision
    fidelity, quadratic = list(), list()
    for k, (xk, tk) in enumerate(zip(x, x_hat)):
        model = frame_models[k]
        h = xk - tk
        a_hat = model.apply(tk)
        diff = model.apply(xk) - a_hat
        lin = model.jacobian_apply(tk, h)
        n_prime = w * w * (stream.exact[k] - stream.corrupted[k])
        wd = _weighted(w, diff)
        wl = _weighted(w, lin)
        fidelity.append(
                float(n_prime @ (diff - lin)) + 0.5 * float(wd @ wd)
        )
        quadratic.append(eta * float(wl @ wl))

    fidelity = np.asarray(fidelity)
    quadratic = np.asarray(quadratic)
    cum_fidelity = np.cumsum(fidelity)
    cum_quadratic = np.cumsum(quadratic)
    margins = fidelity - quadratic
    if np.any(margins < -tolerance):
        log.info(
                "check_linearisation -",
                int(np.sum(margins < -tolerance)), "negative frame margins"
        )

    return margins, CheckResult(
            lhs=cum_quadratic,
            rhs=cum_fidelity,
            holds=cum_quadratic <= cum_fidelity + tolerance,
    )


def theorem_bregman_check(bregman, e, witness_sq, delta, alpha, eta=None):
    """Basic Bregman estimate at every horizon N,

        (1/(N+1)) D_R <= δ/(2ηα) + e/(α(N+1)) + α ||ŵ||^2 / (2η(N+1)).

    Parameters
    -----------
    bregman: (N + 1,) array-like
      per-frame Bregman divergences.
    e: (N + 1,) array-like
      e^N_δ per horizon.
    witness_sq: (N + 1,) array-like
      cumulative ||ŵ^N||^2.
    delta: float
    alpha: float
    eta: float
      Default is `settings.ETA`.

    Returns
    --------
    check: CheckResult
    """
    if eta is None:
        eta = settings.ETA
    raise_if.not_positive(alpha, "alpha")
    raise_if.not_positive(eta, "eta")

    bregman = np.asarray(bregman, dtype=settings.FLOAT_DTYPE)
    horizons = _horizons(bregman.size)
    lhs = np.cumsum(bregman) / horizons
    rhs = (
            delta / (2. * eta * alpha) + np.asarray(e) / (alpha * horizons)
            + alpha * np.asarray(witness_sq) / (2. * eta * horizons)
    )
    slack = settings.TOLERANCE * np.maximum(1., np.abs(rhs))

    return CheckResult(lhs=lhs, rhs=rhs, holds=lhs <= rhs + slack)


def boundconst_d(e, alpha, spec, r_hat):
    """D^N_δ = (C' δ^q + δ)/α + e/(α(N+1)) + R(x̂^N)/(N+1) at every N.

    Parameters
    -----------
    e: (N + 1,) array-like
    alpha: float
    spec: NoiseSpec
    r_hat: (N + 1,) array-like
      per-frame R(x̂_k).

    Returns
    --------
    d: (N + 1,) np.ndarray
    """
    raise_if.not_positive(alpha, "alpha")
    r_hat = np.asarray(r_hat, dtype=settings.FLOAT_DTYPE)
    horizons = _horizons(r_hat.size)

    return (
            (spec.c_prime * spec.delta**spec.q + spec.delta) / alpha
            + np.asarray(e) / (alpha * horizons)
            + np.cumsum(r_hat) / horizons
    )


def bound_consequences(d, alpha, c, exact, reg_values):
    """Both consequences of the D bound at every horizon,

        (1/(N+1)) l(A x_δ - A x̂) <= α C D,
        (1/(N+1)) R(x_δ) <= D.

    Parameters
    -----------
    d: (N + 1,) array-like
    alpha: float
    c: float or (N + 1,) array-like
    exact: (N + 1,) array-like
      per-frame l(A x_k - b̂_k).
    reg_values: (N + 1,) array-like
      per-frame R(x_k).

    Returns
    --------
    misfit: CheckResult
    regulariser: CheckResult
    """
    d = np.asarray(d)
    horizons = _horizons(d.size)
    lhs_fit = np.cumsum(exact) / horizons
    rhs_fit = alpha * np.asarray(c) * d
    lhs_reg = np.cumsum(reg_values) / horizons
    slack = settings.TOLERANCE * np.maximum(1., d)

    return (
            CheckResult(lhs=lhs_fit, rhs=rhs_fit,
                        holds=lhs_fit <= rhs_fit + slack),
            CheckResult(lhs=lhs_reg, rhs=d, holds=lhs_reg <= d + slack),
    )


def growth_epsilon(delta, n_frames, eta=None):
    """ε^N_δ = δ (N+1) / η for N = 0..n_frames-1."""
    if eta is None:
        eta = settings.ETA
    return delta * _horizons(n_frames) / eta


def _prefix_objectives(problem, stack):
    return np.cumsum(problem.frame_objectives(stack))


def realised_growth_factor(problem, reference, reference_star, samples,
                           epsilon, distance=None, precision=None):
    """Largest γ with

        Q(x) - Q(x̂) - <x̂*, x - x̂> + ε >= γ (||W A h||^2 + ||h||^2)

    at every sample x and every horizon N. With `distance`, ||h||^2 is
    replaced by the squared distance to the solution set.

    Parameters
    -----------
    problem: BatchProblem
      provides Q^N_δ, the models and W.
    reference: (N + 1, d) array-like
      x̂
    reference_star: (N + 1, d) array-like
      x̂* = J'(x̂) - α A^* W ω.
    samples: list of (N + 1, d) array-like
      the run trajectory and perturbations of it.
    epsilon: (N + 1,) array-like
      ε^N per horizon.
    distance: callable
      (Optional) frame -> squared distance to the frame's solution set.
    precision: float or (m,) array-like
      Default is the problem's.

    Returns
    --------
    gamma: (N + 1,) np.ndarray
      minimum over samples per horizon. Nonpositive values mean the check
      is not applicable.
    """
    if precision is None:
        precision = problem.precision
    x_hat = _stack(reference)
    x_star = _stack(reference_star)
    n = x_hat.shape[0]
    base = _prefix_objectives(problem, x_hat)
    epsilon = np.asarray(epsilon)

    gamma = np.full(n, np.inf)
    for sample in samples:
        x = _stack(sample)[:n]
        h = x - x_hat
        numer = (
                _prefix_objectives(problem, x) - base
                - np.cumsum(np.sum(x_star * h, axis=1)) + epsilon
        )
        wah = np.array(
                [
                        np.sum((problem.frame_models[k].apply(h[k])
                                * precision)**2)
                        for k in range(n)
                ]
        )
        if distance is None:
            dist = np.sum(h * h, axis=1)
        else:
            dist = np.array([distance(xk) for xk in x])
        denom = np.cumsum(wah + dist)
        ratio = np.divide(
                numer,
                denom,
                out=np.full(n, np.inf),
                where=denom > settings.TOLERANCE,
        )
        gamma = np.minimum(gamma, ratio)

    return gamma


def perturbed_samples(trajectory, count=4, scale=1e-2, seed=0):
    """The trajectory and `count` seeded random perturbations of relative
    size `scale`."""
    x = _stack(trajectory)
    rng = np.random.default_rng(seed)
    size = max(float(np.max(np.abs(x))), 1.)
    samples = [x]
    for _ in range(int(count)):
        samples.append(x + scale * size * rng.standard_normal(x.shape))

    return samples


def reference_star(problem, reference, witness):
    """x̂* = J'(x̂) - α A^* W ω per frame."""
    x_hat = _stack(reference)
    out = list()
    for k, xk in enumerate(x_hat):
        model = problem.frame_models[k]
        residual = (model.apply(xk) - problem.data[k]) * problem.precision
        dj = model.adjoint_apply(residual * problem.precision)
        out.append(
                dj - problem.alpha
                * model.adjoint_apply(problem.precision * witness.w[k])
        )

    return np.stack(out)


def theorem_strong_check(sq_error, e, witness_sq, delta, alpha, gamma,
                         epsilon):
    """Strong source condition estimate at every horizon N,

        (1/(N+1)) ||x_δ - x̂||^2
          <= (1/γ) ((e + ε)/(N+1) + δ/(2γ) + α^2 ||ŵ||^2 / (2γ(N+1))).

    Parameters
    -----------
    sq_error: (N + 1,) array-like
      per-frame ||x_k - x̂_k||^2.
    e: (N + 1,) array-like
    witness_sq: (N + 1,) array-like
    delta: float
    alpha: float
    gamma: float or (N + 1,) array-like
    epsilon: (N + 1,) array-like

    Returns
    --------
    check: CheckResult
      `holds` is False where γ <= 0.
    """
    sq_error = np.asarray(sq_error, dtype=settings.FLOAT_DTYPE)
    horizons = _horizons(sq_error.size)
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), horizons.shape)
    applicable = gamma > 0
    g = np.where(applicable, gamma, np.nan)

    lhs = np.cumsum(sq_error) / horizons
    rhs = (
            (np.asarray(e) + epsilon) / horizons + delta / (2. * g)
            + alpha**2 * np.asarray(witness_sq) / (2. * g * horizons)
    ) / g
    slack = settings.TOLERANCE * np.maximum(1., np.abs(rhs))
    holds = applicable & (lhs <= rhs + slack)

    return CheckResult(lhs=lhs, rhs=rhs, holds=holds)


def semi_strong_check(sq_distance, e, witness_sq, delta, alpha, gamma,
                      epsilon):
    """Distance to solution set estimate at every horizon N,

        (1/(N+1)) dist^2(x_δ, X̂)
          <= (e + ε)/((N+1) γ) + δ/(2γ^2) + α^2 ||ŵ||^2 / (2(N+1)γ^2).

    Parameters
    -----------
    sq_distance: (N + 1,) array-like
      per-frame squared distance to the frame's solution set.
    e, witness_sq, delta, alpha, gamma, epsilon:
      as in `theorem_strong_check`.

    Returns
    --------
    check: CheckResult
    """
    return theorem_strong_check(
            sq_distance, e, witness_sq, delta, alpha, gamma, epsilon
    )


def set_distance(solutions):
    """Squared distance function to a sampled solution set.

    Parameters
    -----------
    solutions: (s, d) array-like

    Returns
    --------
    distance: callable
    """
    solutions = arr.frozen(np.atleast_2d(solutions))
    if solutions.shape[0] == 0:
        raise raise_if.PreconditionError("solution set sample is empty.")

    def distance(x):
        diff = solutions - np.ravel(x)[None, :]
        return float(np.min(np.sum(diff * diff, axis=1)))

    return distance


def limit_quantities(levels, eta=None, tail=0.25):
    """Tail averaged limit quantities per noise level with a common growth
    factor γ̃, the smallest realised one.

    Parameters
    -----------
    levels: list of LevelSummary
      at least three.
    eta: float
    tail: float
      fraction of the last horizons averaged.

    Returns
    --------
    table: LimitTable
    """
    if eta is None:
        eta = settings.ETA
    if len(levels) < 3:
        raise raise_if.PreconditionError(
                f"limit quantities need at least 3 noise levels, got "
                f"{len(levels)}."
        )

    levels = sorted(levels, key=lambda lv: -lv.delta)
    gamma = float(min(lv.gamma for lv in levels))
    if not gamma > 0:
        raise raise_if.PreconditionError(
                f"common growth factor is not positive ({gamma})."
        )

    e1, e2, e3 = list(), list(), list()
    for lv in levels:
        e = np.asarray(lv.e, dtype=settings.FLOAT_DTYPE)
        horizons = _horizons(e.size)
        start = min(int(np.floor((1. - tail) * e.size)), e.size - 1)
        eps = growth_epsilon(lv.delta, e.size, eta)
        e1.append(np.mean(((e + eps) / (horizons * gamma))[start:]))
        e2.append(lv.delta / gamma**2)
        e3.append(
                np.mean(
                        (lv.alpha**2 * np.asarray(lv.witness_sq)
                         / (horizons * gamma**2))[start:]
                )
        )

    e1, e2, e3 = np.asarray(e1), np.asarray(e2), np.asarray(e3)
    decreasing = tuple(bool(np.all(np.diff(q) < 0)) for q in (e1, e2, e3))
    if not all(decreasing):
        log.warning(
                "limit_quantities - non-monotone trend",
                dict(zip(("e1", "e2", "e3"), decreasing))
        )

    return LimitTable(
            deltas=np.array([lv.delta for lv in levels]),
            e1=e1,
            e2=e2,
            e3=e3,
            gamma=gamma,
            decreasing=decreasing,
    )


def verdict(name, check):
    """Verdict line of a CheckResult. `worst_margin` is min(rhs - lhs)."""
    holds = np.atleast_1d(check.holds)
    margin = np.atleast_1d(np.asarray(check.rhs) - np.asarray(check.lhs))
    margin = margin[np.isfinite(margin)]

    return Verdict(
            name=name,
            frames_checked=int(holds.size),
            violations=int(np.sum(~holds)),
            worst_margin=float(margin.min()) if margin.size else np.nan,
    )
