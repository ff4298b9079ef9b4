"""dynreg/dynreg/core.py.

Time-indexed data model. Trajectories, measurement streams, noise
levels, regularisation parameter schedules and scenario timing.
"""

import abc

import numpy as np

from dynreg import settings
from dynreg.utils import arr
from dynreg.helpers import raise_if
from dynreg._base import DynregBase


def _as_frame(frame):
    """Read-only 1D float frame. Frozen frames are shared, not copied."""
    if (
            isinstance(frame, np.ndarray) and not frame.flags.writeable
            and frame.ndim == 1 and frame.dtype == settings.FLOAT_DTYPE
    ):
        return frame

    return arr.frozen(np.ravel(frame))


class Trajectory(DynregBase):
    """Frames x_0, ..., x_N of one dynamic reconstruction. Frames are stored
    read-only and shared between trajectories, so appending never touches
    the history.

    Parameters
    -----------
    frames: list of (d,) array-like or (N + 1, d) array-like
    frame_dim: int
      (Optional) checked against the frames if given.
    """

    __slots__ = ("_frames", "_frame_dim")

    def __init__(self, frames=None, frame_dim=None):
        if frames is None:
            frames = []
        frames = [_as_frame(f) for f in frames]
        if frame_dim is None:
            if len(frames) == 0:
                raise raise_if.ProperError(
                        "frame_dim is required for an empty trajectory."
                )
            frame_dim = frames[0].size

        for k, f in enumerate(frames):
            if f.size != frame_dim:
                raise raise_if.DimensionError(
                        f"frame {k} has size {f.size}, "
                        f"trajectory frame_dim is {frame_dim}."
                )

        self._frames = tuple(frames)
        self._frame_dim = int(frame_dim)

    @property
    def frames(self):
        """Tuple of read-only frame vectors."""
        return self._frames

    @property
    def frame_dim(self):
        return self._frame_dim

    @property
    def horizon(self):
        """N, number of frames minus one. -1 for an empty trajectory."""
        return len(self._frames) - 1

    def __len__(self):
        return len(self._frames)

    def __getitem__(self, k):
        return self._frames[k]

    def append(self, frame):
        """Returns a new trajectory with `frame` appended. Existing frames
        are shared, not copied.

        Parameters
        -----------
        frame: (d,) array-like

        Returns
        --------
        trajectory: Trajectory
        """
        frame = _as_frame(frame)
        raise_if.dimension_mismatch(self._frame_dim, frame.size, "frame")
        new = Trajectory.__new__(Trajectory)
        new._frames = self._frames + (frame, )
        new._frame_dim = self._frame_dim

        return new

    def prefix(self, n_frames):
        """First `n_frames` frames as a trajectory."""
        new = Trajectory.__new__(Trajectory)
        new._frames = self._frames[:n_frames]
        new._frame_dim = self._frame_dim

        return new

    def as_array(self):
        """(N + 1, d) np.ndarray copy of the frames."""
        if len(self._frames) == 0:
            return np.zeros((0, self._frame_dim), dtype=settings.FLOAT_DTYPE)
        return np.vstack(self._frames)


class NoiseSpec(DynregBase):
    """Noise level δ with the constants of the noise level condition

        (1/(N+1)) ||l'(b_δ - b)||^2 <= δ,
        (1/(N+1)) l(b_δ - b) <= C' δ^q.

    Parameters
    -----------
    delta: float
    q: float
    c_prime: float
    seed: int
    """

    __slots__ = ("delta", "q", "c_prime", "seed")

    def __init__(self, delta, q=None, c_prime=None, seed=0):
        self.delta = float(delta)
        self.q = float(settings.NOISE_Q if q is None else q)
        self.c_prime = float(
                settings.NOISE_C_PRIME if c_prime is None else c_prime
        )
        self.seed = int(seed)

        if self.delta < 0:
            raise ValueError(f"noise level should be >= 0, got {delta}.")
        raise_if.not_positive(self.q, "q")
        raise_if.not_positive(self.c_prime, "c_prime")

    @property
    def frame_cap(self):
        """Largest weighted energy ||W n_k||^2 allowed on a single frame.
        Capping every frame makes every prefix of the stream satisfy both
        inequalities."""
        if self.delta == 0:
            return 0.
        return min(self.delta, 2. * self.c_prime * self.delta**self.q)


class RegSchedule(DynregBase):
    """Regularisation parameter schedule α(δ).

    Rules
    ------
    log_rule: α = 1 + log10(δ) / 10, valid for δ in (1e-10, 1].
    constant: α = value on any δ > 0.
    custom: piecewise linear in log10(δ) through `table` rows (δ, α).

    Parameters
    -----------
    rule: str
    value: float
      used by `constant`.
    table: (n, 2) array-like
      used by `custom`.
    valid_range: tuple
      (Optional) (δ_min, δ_max) overriding the rule's own range.
    """

    __slots__ = ("rule", "value", "table", "valid_range")

    _rules = ("log_rule", "constant", "custom")

    def __init__(self, rule="log_rule", value=None, table=None,
                 valid_range=None):
        if rule not in self._rules:
            raise ValueError(
                    f"unknown schedule rule `{rule}`. "
                    f"Options are {self._rules}."
            )
        self.rule = rule
        self.value = None if value is None else float(value)
        self.table = None

        if rule == "constant":
            if self.value is None:
                raise ValueError("constant schedule needs a value.")
            raise_if.not_positive(self.value, "constant α")
            default_range = (0., np.inf)

        elif rule == "custom":
            if table is None:
                raise ValueError("custom schedule needs a table.")
            table = np.asarray(table, dtype=settings.FLOAT_DTYPE)
            arr.is_shape(table, (-1, 2), strict=True)
            table = table[np.argsort(table[:, 0])]
            raise_if.not_positive(table, "custom schedule table")
            if np.any(np.diff(table[:, 0]) <= 0):
                raise ValueError("custom schedule δ entries must be unique.")
            self.table = table
            default_range = (table[0, 0], table[-1, 0])

        else:
            default_range = (
                    settings.ALPHA_DELTA_MIN, settings.ALPHA_DELTA_MAX
            )

        self.valid_range = tuple(
                default_range if valid_range is None else valid_range
        )

    def in_range(self, delta):
        """Lower end is open, except for table based schedules."""
        lo, hi = self.valid_range
        if self.rule == "custom":
            return lo <= delta <= hi

        return lo < delta <= hi

    def __call__(self, delta):
        return alpha_schedule(delta, self)


def alpha_schedule(delta, schedule=None):
    """Regularisation parameter for noise level δ.

    Parameters
    -----------
    delta: float
    schedule: RegSchedule
      Default is `log_rule`.

    Returns
    --------
    alpha: float
    """
    if schedule is None:
        schedule = RegSchedule()

    delta = float(delta)
    if not np.isfinite(delta) or not schedule.in_range(delta):
        raise raise_if.ScheduleDomainError(
                f"δ={delta} is outside the valid range "
                f"{schedule.valid_range} "
                f"of the `{schedule.rule}` schedule."
        )

    if schedule.rule == "log_rule":
        alpha = 1. + np.log10(delta) / 10.
    elif schedule.rule == "constant":
        alpha = schedule.value
    else:
        alpha = np.interp(
                np.log10(delta),
                np.log10(schedule.table[:, 0]),
                schedule.table[:, 1],
        )

    return float(alpha)


def speed_rescale(t):
    """Slow-down profile s(t) = t + t^2 - t^3 with s(0) = 0, s(1) = 1,
    s'(0) = 1 and s'(1) = 0.

    Parameters
    -----------
    t: float or array-like
      in [0, 1]

    Returns
    --------
    s: float or np.ndarray
    """
    t_arr = np.asarray(t, dtype=settings.FLOAT_DTYPE)
    if np.any(~np.isfinite(t_arr)) or np.any(t_arr < 0) or np.any(t_arr > 1):
        raise raise_if.ScheduleDomainError(
                f"speed_rescale is defined on [0, 1], got {t}."
        )
    s = t_arr + t_arr**2 - t_arr**3

    return float(s) if s.ndim == 0 else s


def rescaled_time(k, ramp_frames):
    """t = min(k / ramp_frames, 1)."""
    if k < 0:
        raise ValueError(f"frame index should be >= 0, got {k}.")
    if ramp_frames < 1:
        raise ValueError(f"ramp_frames should be >= 1, got {ramp_frames}.")

    return min(float(k) / float(ramp_frames), 1.)


class InclusionSpec(DynregBase):
    """One circular inclusion moving on a circular path. Coordinates are
    relative to the domain: the imaging domain is the unit disk / the square
    [-1, 1]^2.

    Parameters
    -----------
    path_center: (2,) array-like
    path_radius: float
    start_angle: float
      radians
    sweep: float
      angle travelled over the whole motion, radians. Negative is clockwise.
    radius: float
    absent: tuple
      (begin, end) interval of the motion parameter where the inclusion is
      absent. None for always present.
    """

    __slots__ = (
            "path_center",
            "path_radius",
            "start_angle",
            "sweep",
            "radius",
            "absent",
    )

    def __init__(self, path_center=(0., 0.), path_radius=0.5,
                 start_angle=0., sweep=np.pi, radius=None, absent=None):
        self.path_center = np.asarray(path_center, dtype=settings.FLOAT_DTYPE)
        self.path_radius = float(path_radius)
        self.start_angle = float(start_angle)
        self.sweep = float(sweep)
        self.radius = float(
                settings.INCLUSION_RADIUS if radius is None else radius
        )
        self.absent = None if absent is None else tuple(map(float, absent))

        raise_if.not_positive(self.radius, "inclusion radius")
        if self.absent is not None:
            b, e = self.absent
            if not 0 <= b <= e <= 1:
                raise raise_if.ScheduleDomainError(
                        f"absence interval should lie in [0, 1], got {absent}"
                )

    def center(self, p):
        """Center at motion parameter p in [0, 1]."""
        angle = self.start_angle + self.sweep * p
        return self.path_center + self.path_radius * np.array(
                [np.cos(angle), np.sin(angle)]
        )

    def present(self, p):
        if self.absent is None:
            return True
        b, e = self.absent
        return not b <= p < e


class ScenarioSpec(DynregBase):
    """Timing and phantom description of the disappearing inclusions
    scenario. Motion parameter of frame k is s(min(k / ramp, 1)); the
    inclusions stop moving at `ramp_frames`.

    Parameters
    -----------
    total_frames: int
      number of frames, N + 1.
    ramp_frames: int
    inclusions: list of InclusionSpec
      Default is the two-inclusion scenario.
    background: float
    contrast: float
      conductivity / pixel value inside inclusions.
    radius: float
      inclusion radius for the default inclusions.
    """

    __slots__ = (
            "total_frames",
            "ramp_frames",
            "inclusions",
            "background",
            "contrast",
    )

    def __init__(self, total_frames, ramp_frames, inclusions=None,
                 background=None, contrast=None, radius=None):
        self.total_frames = int(total_frames)
        self.ramp_frames = int(ramp_frames)
        if not self.total_frames >= self.ramp_frames >= 1:
            raise ValueError(
                    "scenario needs total_frames >= ramp_frames >= 1, got "
                    f"{total_frames} and {ramp_frames}."
            )

        if inclusions is None:
            inclusions = default_inclusions(radius)
        self.inclusions = list(inclusions)
        self.background = float(
                settings.BACKGROUND if background is None else background
        )
        self.contrast = float(
                settings.INCLUSION_CONTRAST if contrast is None else contrast
        )

    def motion_parameter(self, k):
        return speed_rescale(rescaled_time(k, self.ramp_frames))

    @property
    def horizon(self):
        return self.total_frames - 1


def default_inclusions(radius=None):
    """Two inclusions on concentric circular paths moving in opposite
    directions. The outer one is absent for motion parameter in [1/4, 3/4),
    the inner one in [2/4, 3/4).

    Parameters
    -----------
    radius: float
      inclusion radius relative to the domain radius.

    Returns
    --------
    inclusions: list of InclusionSpec
    """
    return [
            InclusionSpec(
                    path_radius=0.55,
                    start_angle=0.,
                    sweep=np.pi,
                    radius=radius,
                    absent=(0.25, 0.75),
            ),
            InclusionSpec(
                    path_radius=0.2,
                    start_angle=0.5 * np.pi,
                    sweep=-np.pi,
                    radius=radius,
                    absent=(0.5, 0.75),
            ),
    ]


class MeasurementStream(DynregBase):
    """Exact data b_k, corrupted data b_{k,δ} and the diagonal data
    precision W = Σ^{-1/2}. The data fidelity is l(y) = 1/2 ||W y||^2.

    Parameters
    -----------
    exact: (N + 1, m) array-like
    corrupted: (N + 1, m) array-like
      Default is a copy of `exact`.
    precision: float or (m,) array-like
    """

    __slots__ = ("_exact", "_corrupted", "_precision")

    def __init__(self, exact, corrupted=None, precision=1.):
        exact = np.atleast_2d(np.asarray(exact, dtype=settings.FLOAT_DTYPE))
        if exact.size == 0:
            raise raise_if.ProperError("measurement stream is empty.")
        if corrupted is None:
            corrupted = exact
        corrupted = np.atleast_2d(
                np.asarray(corrupted, dtype=settings.FLOAT_DTYPE)
        )
        raise_if.dimension_mismatch(
                exact.shape, corrupted.shape, "corrupted data"
        )

        precision = np.broadcast_to(
                np.asarray(precision, dtype=settings.FLOAT_DTYPE),
                (exact.shape[1], ),
        )
        raise_if.not_positive(precision, "precision")

        self._exact = arr.frozen(exact)
        self._corrupted = arr.frozen(corrupted)
        self._precision = arr.frozen(precision)

    @property
    def exact(self):
        return self._exact

    @property
    def corrupted(self):
        return self._corrupted

    @property
    def precision(self):
        return self._precision

    @property
    def n_frames(self):
        return self._exact.shape[0]

    @property
    def measurement_dim(self):
        return self._exact.shape[1]

    def noise(self):
        """b_{k,δ} - b_k per frame."""
        return self._corrupted - self._exact

    def weighted_noise_energy(self):
        """||W (b_{k,δ} - b_k)||^2 per frame."""
        wn = self.noise() * self._precision
        return np.sum(wn * wn, axis=1)

    def fidelity(self, residual):
        """l(residual) = 1/2 ||W residual||^2, summed over leading frames."""
        wr = np.asarray(residual) * self._precision
        return 0.5 * float(np.sum(wr * wr))

    def prefix(self, n_frames):
        return MeasurementStream(
                self._exact[:n_frames],
                self._corrupted[:n_frames],
                self._precision,
        )


def generate_noise(stream, spec):
    """Corrupts the exact data with Gaussian noise calibrated to δ.

    Per frame, a standard normal draw g gives n_k = g sqrt(δ / m) / W, so that
    E||W n_k||^2 = δ. Frames whose realised energy exceeds
    `spec.frame_cap` are scaled back onto the cap. Since every frame obeys
    the cap, every prefix of the stream satisfies both noise-level
    inequalities.

    Parameters
    -----------
    stream: MeasurementStream
    spec: NoiseSpec

    Returns
    --------
    corrupted_stream: MeasurementStream
    """
    if stream is None or stream.exact.size == 0:
        raise raise_if.ProperError("cannot corrupt an empty stream.")

    if spec.delta == 0:
        return MeasurementStream(stream.exact, stream.exact, stream.precision)

    rng = np.random.default_rng(spec.seed)
    n_frames, m = stream.exact.shape
    cap = spec.frame_cap

    weighted = rng.standard_normal((n_frames, m)) * np.sqrt(spec.delta / m)
    energy = np.sum(weighted * weighted, axis=1)
    over = energy > cap
    weighted[over] *= np.sqrt(cap / energy[over])[:, None]

    noise = weighted / stream.precision
    corrupted = stream.exact + noise

    return MeasurementStream(stream.exact, corrupted, stream.precision)


class FrameForwardModel(DynregBase):
    """Per-frame forward map A_k with derivative and adjoint derivative.

    Subclasses implement `apply`, `jacobian_apply` and
    `jacobian_adjoint_apply`. Everything else is derived from those.
    """

    __slots__ = []

    is_linear = False

    @property
    @abc.abstractmethod
    def in_dim(self):
        pass

    @property
    @abc.abstractmethod
    def out_dim(self):
        pass

    @abc.abstractmethod
    def apply(self, x):
        """A_k(x)."""

    @abc.abstractmethod
    def jacobian_apply(self, x, h):
        """A_k'(x) h."""

    @abc.abstractmethod
    def jacobian_adjoint_apply(self, x, r):
        """A_k'(x)^* r."""

    def data_gradient(self, x, b, precision=1.):
        """Value and gradient of 1/2 ||W (A_k(x) - b)||^2.

        Parameters
        -----------
        x: (d,) np.ndarray
        b: (m,) np.ndarray
        precision: float or (m,) np.ndarray

        Returns
        --------
        value: float
        gradient: (d,) np.ndarray
        """
        residual = self.apply(x) - b
        weighted = residual * precision
        value = 0.5 * float(weighted @ weighted)

        return value, self.jacobian_adjoint_apply(x, weighted * precision)

    def adjoint_apply(self, y):
        """A_k^* y for maps whose derivative does not depend on x."""
        return self.jacobian_adjoint_apply(None, y)
