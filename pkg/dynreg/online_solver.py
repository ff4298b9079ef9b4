"""dynreg/dynreg/online_solver.py.

History free online prediction-correction primal-dual method. Per frame,
the previous primal and dual iterates are predicted forward, then a
single primal-dual proximal splitting step corrects them against the new
data. Frames are never revisited.
"""

from collections import namedtuple

import numpy as np
from scipy import interpolate
from scipy import ndimage
from scipy import spatial

from dynreg import settings
from dynreg.core import Trajectory
from dynreg.core import alpha_schedule
from dynreg.create import vertices
from dynreg.regularisers import DualBall
from dynreg.regularisers import GridGradient
from dynreg.regularisers import project_dual_ball
from dynreg.regularisers import prox_box
from dynreg.regularisers import tv_value
from dynreg.utils import arr
from dynreg.utils import log
from dynreg.helpers import raise_if
from dynreg._base import DynregBase


class PredictorSpec(DynregBase):
    """Choice of primal and dual predictors.

    Parameters
    -----------
    primal: str
      zero_motion, known_flow_translation or optical_flow.
    dual: str
      identity, zero or affine_scaling.
    """

    __slots__ = ("primal", "dual")

    primal_options = ("zero_motion", "known_flow_translation", "optical_flow")
    dual_options = ("identity", "zero", "affine_scaling")

    def __init__(self, primal="zero_motion", dual="identity"):
        if primal not in self.primal_options:
            raise ValueError(
                    f"unknown primal predictor `{primal}`. "
                    f"Options are {self.primal_options}."
            )
        if dual not in self.dual_options:
            raise ValueError(
                    f"unknown dual predictor `{dual}`. "
                    f"Options are {self.dual_options}."
            )
        self.primal = primal
        self.dual = dual

    def __repr__(self):
        return f"PredictorSpec(primal={self.primal!r}, dual={self.dual!r})"


class SolverState(DynregBase):
    """Iterates after correcting frame k. The initial state has k = -1.

    Parameters
    -----------
    x: (d,) np.ndarray
    y: (2, n_sites) np.ndarray
    k: int
    tau: float
      primal step.
    sigma: float
      dual step.
    alpha: float
    rescaled: bool
      True if tau was reduced to pass the step guard.
    previous: (d,) np.ndarray
      primal iterate of frame k - 1, used by the optical flow predictor.
    data_fit: float
      data fidelity at the prediction the last correction started from.
    """

    __slots__ = (
            "x",
            "y",
            "k",
            "tau",
            "sigma",
            "alpha",
            "rescaled",
            "previous",
            "data_fit",
    )

    def __init__(self, x, y, k=-1, tau=None, sigma=None, alpha=1.,
                 rescaled=False, previous=None, data_fit=np.nan):
        self.x = arr.frozen(np.ravel(x))
        self.y = arr.frozen(np.asarray(y).reshape(2, -1))
        self.k = int(k)
        self.tau = float(settings.LINEAR_TAU if tau is None else tau)
        self.sigma = float(settings.LINEAR_SIGMA if sigma is None else sigma)
        self.alpha = float(alpha)
        self.rescaled = bool(rescaled)
        self.previous = previous
        self.data_fit = float(data_fit)

    def replace(self, **kwargs):
        """New state with the given fields changed."""
        fields = {s: getattr(self, s) for s in self.__slots__}
        fields.update(kwargs)

        return SolverState(**fields)


RunFrame = namedtuple(
        "RunFrame",
        ["frame", "x", "y", "data_fit", "reg_value", "alpha", "rescaled"],
)
"""
namedtuple for one frame of an online run.

Attributes
-----------
frame: int
x: (d,) np.ndarray
  corrected primal iterate, read-only.
y: (2, n_sites) np.ndarray
  corrected dual iterate, read-only.
data_fit: float
  1/2 ||W (A(x̆) - b)||^2 at the prediction x̆.
reg_value: float
  TV of the corrected iterate.
alpha: float
rescaled: bool
"""


def admissible_steps(gradient_norm, tau, sigma, safety=None):
    """Primal and dual steps with tau * sigma * ||K||^2 < 1. The dual step is
    kept and tau is reduced to safety / (sigma ||K||^2) if needed.

    Parameters
    -----------
    gradient_norm: float
      ||K||
    tau: float
    sigma: float
    safety: float
      Default is `settings.STEP_SAFETY`.

    Returns
    --------
    tau: float
    sigma: float
    rescaled: bool
    """
    if safety is None:
        safety = settings.STEP_SAFETY
    raise_if.not_positive(tau, "primal step")
    raise_if.not_positive(sigma, "dual step")

    product = tau * sigma * gradient_norm**2
    if product < 1.:
        return float(tau), float(sigma), False

    new_tau = safety / (sigma * gradient_norm**2)
    log.info(
            f"admissible_steps - tau {tau} rescaled to {new_tau:.6g}, "
            f"tau * sigma * ||K||^2 was {product:.4g}"
    )

    return float(new_tau), float(sigma), True


def horn_schunck(first, second, smoothness=None, sweeps=None):
    """Horn-Schunck optical flow between two images. Flow is in pixels per
    frame, u along columns and v along rows.

    Parameters
    -----------
    first: (n_y, n_x) np.ndarray
    second: (n_y, n_x) np.ndarray
    smoothness: float
      Default is `settings.FLOW_SMOOTHNESS`.
    sweeps: int
      Default is `settings.FLOW_SWEEPS`.

    Returns
    --------
    u: (n_y, n_x) np.ndarray
    v: (n_y, n_x) np.ndarray
    """
    if smoothness is None:
        smoothness = settings.FLOW_SMOOTHNESS
    if sweeps is None:
        sweeps = settings.FLOW_SWEEPS

    first = np.asarray(first, dtype=settings.FLOAT_DTYPE)
    second = np.asarray(second, dtype=settings.FLOAT_DTYPE)
    raise_if.dimension_mismatch(first.shape, second.shape, "second image")

    kernel_x = np.array([[-1., 1.], [-1., 1.]]) * .25
    kernel_y = np.array([[-1., -1.], [1., 1.]]) * .25
    kernel_t = np.ones((2, 2)) * .25
    average = np.array(
            [
                    [1. / 12., 1. / 6., 1. / 12.],
                    [1. / 6., 0., 1. / 6.],
                    [1. / 12., 1. / 6., 1. / 12.],
            ]
    )

    fx = ndimage.convolve(first, kernel_x) + ndimage.convolve(second, kernel_x)
    fy = ndimage.convolve(first, kernel_y) + ndimage.convolve(second, kernel_y)
    ft = ndimage.convolve(first, kernel_t)
    ft += ndimage.convolve(second, -kernel_t)

    u = np.zeros_like(first)
    v = np.zeros_like(first)
    denom = smoothness**2 + fx**2 + fy**2
    for _ in range(int(sweeps)):
        u_avg = ndimage.convolve(u, average)
        v_avg = ndimage.convolve(v, average)
        der = (fx * u_avg + fy * v_avg + ft) / denom
        u = u_avg - fx * der
        v = v_avg - fy * der

    return u, v


class GridWarper(DynregBase):
    """Backward warps on a (n_y, n_x) pixel grid of [-1, 1]^2, bilinear and
    clamped at the boundary. Primal and dual sites are both pixels.

    Parameters
    -----------
    shape: tuple
    """

    __slots__ = ("shape", "_rows", "_cols", "_pixel")

    def __init__(self, shape):
        self.shape = tuple(int(s) for s in shape)
        self._rows, self._cols = np.meshgrid(
                np.arange(self.shape[0], dtype=settings.FLOAT_DTYPE),
                np.arange(self.shape[1], dtype=settings.FLOAT_DTYPE),
                indexing="ij",
        )
        self._pixel = vertices.pixel_size(self.shape)

    def _warp_image(self, image, displacement):
        d = np.asarray(displacement).reshape(self.shape + (2, ))
        coords = np.stack(
                (
                        self._rows - d[..., 1] / self._pixel[0],
                        self._cols - d[..., 0] / self._pixel[1],
                )
        )
        return ndimage.map_coordinates(
                image.reshape(self.shape), coords, order=1, mode="nearest"
        ).ravel()

    def warp_primal(self, x, displacement):
        """x̆(p) = x(p - d(p)).

        Parameters
        -----------
        x: (n,) np.ndarray
        displacement: (n, 2) np.ndarray
          in domain units.

        Returns
        --------
        warped: (n,) np.ndarray
        """
        if not np.any(displacement):
            return np.array(x, dtype=settings.FLOAT_DTYPE)
        return self._warp_image(np.asarray(x), displacement)

    def warp_dual(self, y, displacement):
        """Warps every component of a (2, n) field with the primal motion."""
        y = np.asarray(y).reshape(2, -1)
        if not np.any(displacement):
            return np.array(y, dtype=settings.FLOAT_DTYPE)
        return np.stack([self._warp_image(c, displacement) for c in y])

    def flow(self, previous, current):
        """Horn-Schunck displacement from previous to current in domain
        units, (n, 2)."""
        u, v = horn_schunck(
                np.reshape(previous, self.shape),
                np.reshape(current, self.shape),
        )
        return np.column_stack(
                (u.ravel() * self._pixel[1], v.ravel() * self._pixel[0])
        )


class PointWarper(DynregBase):
    """Backward warps of values on scattered points. Piecewise linear on the
    Delaunay triangulation of the points, nearest value outside the hull.

    Parameters
    -----------
    points: (n, 2) np.ndarray
    """

    __slots__ = ("points", "_delaunay")

    def __init__(self, points):
        self.points = arr.frozen(points)
        self._delaunay = spatial.Delaunay(self.points)

    def sample(self, values, targets):
        """Values interpolated at target points.

        Parameters
        -----------
        values: (n,) or (n, c) np.ndarray
        targets: (m, 2) np.ndarray

        Returns
        --------
        sampled: (m,) or (m, c) np.ndarray
        """
        values = np.asarray(values, dtype=settings.FLOAT_DTYPE)
        out = interpolate.LinearNDInterpolator(self._delaunay, values)(targets)
        outside = np.isnan(out)
        if outside.ndim > 1:
            outside = outside.any(axis=1)
        if np.any(outside):
            out[outside] = interpolate.NearestNDInterpolator(
                    self.points, values
            )(targets[outside])

        return out

    def warp(self, values, displacement):
        if not np.any(displacement):
            return np.array(values, dtype=settings.FLOAT_DTYPE)
        return self.sample(values, self.points - displacement)


class MeshWarper(DynregBase):
    """Warps on a mesh. Primal sites are nodes, dual sites are triangles.
    Optical flow is estimated on a pixel raster of the mesh.

    Parameters
    -----------
    mesh: Mesh
    raster: tuple
      pixel grid used for optical flow.
    """

    __slots__ = ("mesh", "raster", "_nodes", "_centroids", "_pixels")

    def __init__(self, mesh, raster=(32, 32)):
        self.mesh = mesh
        self.raster = tuple(int(r) for r in raster)
        self._nodes = PointWarper(np.asarray(mesh.nodes))
        self._centroids = PointWarper(np.asarray(mesh.centroids()))
        self._pixels = vertices.pixel_centers(self.raster)

    def warp_primal(self, x, displacement):
        return self._nodes.warp(x, displacement)

    def warp_dual(self, y, displacement):
        y = np.asarray(y).reshape(2, -1)
        tri_d = np.asarray(displacement)[np.asarray(self.mesh.triangles)]
        return self._centroids.warp(y.T, tri_d.mean(axis=1)).T

    def flow(self, previous, current):
        grid = GridWarper(self.raster)
        d = grid.flow(
                self._nodes.sample(previous, self._pixels),
                self._nodes.sample(current, self._pixels),
        )
        return PointWarper(self._pixels).sample(d, np.asarray(self.mesh.nodes))


def make_warper(gradient):
    """Warper matching the sites of a gradient operator."""
    if isinstance(gradient, GridGradient):
        return GridWarper(gradient.shape)
    return MeshWarper(gradient.mesh)


def primal_displacement(spec, state, motion_hint=None, warper=None):
    """Displacement field the primal predictor applies to state.x, on the
    primal sites. None means no motion."""
    if spec.primal == "zero_motion" or state.k < 0:
        return None

    if spec.primal == "known_flow_translation":
        if motion_hint is None:
            raise raise_if.UnsupportedError(
                    "known_flow_translation needs scenario motion metadata."
            )
        return motion_hint.displacement(state.k)

    if state.previous is None:
        return None
    if warper is None:
        raise ValueError("optical_flow needs a warper.")

    return warper.flow(state.previous, state.x)


def predict_primal(spec, state, motion_hint=None, warper=None,
                   displacement=None):
    """Predicted next primal frame x̆_{k+1}.

    Parameters
    -----------
    spec: PredictorSpec
    state: SolverState
    motion_hint: MotionMetadata
      required by known_flow_translation.
    warper: GridWarper or MeshWarper
    displacement: (n, 2) np.ndarray
      (Optional) precomputed `primal_displacement`.

    Returns
    --------
    x_pred: (d,) np.ndarray
    """
    if displacement is None:
        displacement = primal_displacement(spec, state, motion_hint, warper)
    if displacement is None:
        return np.array(state.x)

    return warper.warp_primal(state.x, displacement)


def predict_dual(spec, state, motion_hint=None, warper=None,
                 displacement=None):
    """Predicted next dual field y̆_{k+1}. Always inside the radius α ball.

    Parameters
    -----------
    spec: PredictorSpec
    state: SolverState
    motion_hint: MotionMetadata
    warper: GridWarper or MeshWarper
    displacement: (n, 2) np.ndarray
      primal displacement. Computed from the primal predictor if None.

    Returns
    --------
    y_pred: (2, n_sites) np.ndarray
    """
    if spec.dual == "identity":
        return np.array(state.y)
    if spec.dual == "zero":
        return np.zeros_like(state.y)

    if displacement is None:
        displacement = primal_displacement(spec, state, motion_hint, warper)
    y = state.y
    if displacement is not None:
        y = warper.warp_dual(y, displacement)

    return project_dual_ball(DualBall(state.alpha), y)


def corrector_step(state, frame_model, b, regs, precision=1.):
    """One primal-dual proximal splitting step from the predicted iterates
    held in `state`.

        g   = A'(x̆)^* W^2 (A(x̆) - b)
        x+  = clip(x̆ - τ (g + K^T y̆))
        y+  = proj_α(y̆ + s K (2 x+ - x̆))

    Parameters
    -----------
    state: SolverState
      x and y are the predictions x̆, y̆.
    frame_model: FrameForwardModel
    b: (m,) np.ndarray
    regs: RegulariserStack
    precision: float or (m,) np.ndarray

    Returns
    --------
    state: SolverState
      k advanced by one.
    """
    gradient = regs.gradient
    if state.tau * state.sigma * gradient.norm()**2 >= 1.:
        raise raise_if.SolverError(
                "step sizes violate tau * sigma * ||K||^2 < 1 "
                f"(tau={state.tau}, sigma={state.sigma}, "
                f"||K||={gradient.norm():.4g})."
        )

    x_pred = state.x
    y_pred = state.y
    data_fit, g = frame_model.data_gradient(x_pred, b, precision)

    x_new = prox_box(
            regs.box,
            x_pred - state.tau * (g + gradient.div_apply(y_pred)),
            state.tau,
    )
    y_new = project_dual_ball(
            regs.ball(state.alpha),
            y_pred + state.sigma * gradient.grad_apply(2. * x_new - x_pred),
    )

    return state.replace(
            x=x_new,
            y=y_new,
            k=state.k + 1,
            data_fit=data_fit,
    )


def initial_state(regs, alpha, x_init=None, tau=None, sigma=None,
                  background=None):
    """x_0 = homogeneous background, y_0 = 0, steps passed through the guard.

    Returns
    --------
    state: SolverState
    """
    gradient = regs.gradient
    if x_init is None:
        value = settings.BACKGROUND if background is None else background
        x_init = np.full(gradient.in_dim, float(value))
    x_init = prox_box(regs.box, x_init)

    tau, sigma, rescaled = admissible_steps(
            gradient.norm(),
            settings.LINEAR_TAU if tau is None else tau,
            settings.LINEAR_SIGMA if sigma is None else sigma,
    )

    return SolverState(
            x=x_init,
            y=np.zeros((2, gradient.n_sites)),
            k=-1,
            tau=tau,
            sigma=sigma,
            alpha=alpha,
            rescaled=rescaled,
    )


def run_online(
        frame_models,
        stream,
        regs,
        alpha=None,
        predictor=None,
        motion=None,
        n_frames=None,
        schedule=None,
        delta=None,
        tau=None,
        sigma=None,
        x_init=None,
        warper=None,
        label="run_online",
):
    """Online reconstruction x_{0,δ}, ..., x_{N,δ}. Frame k is final once
    it is emitted.

    Parameters
    -----------
    frame_models: FrameForwardModel or list
      one model shared by all frames, or one per frame.
    stream: MeasurementStream
      corrupted data b_{k,δ} and precision W.
    regs: RegulariserStack
    alpha: float
      (Optional) taken from `schedule` at `delta` if None.
    predictor: PredictorSpec
      Default is zero motion with identity dual.
    motion: MotionMetadata
    n_frames: int
      Default is every frame of the stream.
    schedule: RegSchedule
    delta: float
    tau: float
    sigma: float
    x_init: (d,) np.ndarray
    warper: GridWarper or MeshWarper
      Default matches `regs.gradient`.
    label: str
      log prefix.

    Returns
    --------
    trajectory: Trajectory
    records: list of RunFrame
    """
    if alpha is None:
        if delta is None:
            raise ValueError("run_online needs alpha or a noise level.")
        alpha = alpha_schedule(delta, schedule)
    if predictor is None:
        predictor = PredictorSpec()
    if n_frames is None:
        n_frames = stream.n_frames
    n_frames = int(n_frames)
    if not 1 <= n_frames <= stream.n_frames:
        raise ValueError(
                f"n_frames should be in [1, {stream.n_frames}], got {n_frames}"
        )

    if not isinstance(frame_models, (list, tuple)):
        frame_models = [frame_models] * n_frames
    if len(frame_models) < n_frames:
        raise raise_if.DimensionError(
                f"{len(frame_models)} frame models for {n_frames} frames."
        )

    needs_warper = predictor.primal != "zero_motion" or (
            predictor.dual == "affine_scaling"
    )
    if warper is None and needs_warper:
        warper = make_warper(regs.gradient)

    state = initial_state(regs, alpha, x_init=x_init, tau=tau, sigma=sigma)
    trajectory = Trajectory(frame_dim=regs.gradient.in_dim)
    records = list()

    for k in range(n_frames):
        displacement = primal_displacement(predictor, state, motion, warper)
        x_pred = predict_primal(
                predictor, state, motion, warper, displacement=displacement
        )
        y_pred = predict_dual(
                predictor, state, motion, warper, displacement=displacement
        )

        previous = state.x
        try:
            state = corrector_step(
                    state.replace(x=x_pred, y=y_pred),
                    frame_models[k],
                    stream.corrupted[k],
                    regs,
                    stream.precision,
            )
        except raise_if.SolverError as err:
            err.frame = k
            raise
        state = state.replace(previous=previous)
        if not regs.box.contains(state.x) or not regs.ball(alpha).contains(
                state.y
        ):
            err = raise_if.SolverError(
                    f"frame {k} iterate left the box or the dual ball."
            )
            err.frame = k
            raise err

        trajectory = trajectory.append(state.x)
        records.append(
                RunFrame(
                        frame=k,
                        x=trajectory[k],
                        y=state.y,
                        data_fit=state.data_fit,
                        reg_value=tv_value(regs.gradient, state.x),
                        alpha=state.alpha,
                        rescaled=state.rescaled,
                )
        )
        log.progress(label, k, n_frames - 1)

    return trajectory, records
