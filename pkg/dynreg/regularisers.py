"""dynreg/dynreg/regularisers.py.

Discrete gradients, isotropic total variation and its dual ball, box
constraints, and the spatiotemporal regulariser under per-site dual
constraints.

Gradient fields are stored component first with shape (2, n_sites).
"""

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from dynreg import settings
from dynreg.utils import arr
from dynreg.helpers import raise_if
from dynreg._base import DynregBase


class GridGradient(DynregBase):
    """Forward differences with unit spacing on a (n_y, n_x) pixel grid.
    The difference leaving the grid is zero (Neumann boundary).

    Component 0 differentiates along x (columns), component 1 along y
    (rows).

    Parameters
    -----------
    shape: tuple
      (n_y, n_x)
    """

    __slots__ = ("shape", )

    def __init__(self, shape):
        self.shape = tuple(int(s) for s in shape)
        if len(self.shape) != 2 or min(self.shape) < 1:
            raise ValueError(f"grid shape should be 2D, got {shape}.")

    @property
    def in_dim(self):
        return self.shape[0] * self.shape[1]

    @property
    def n_sites(self):
        return self.in_dim

    def site_weights(self):
        return np.ones(self.n_sites, dtype=settings.FLOAT_DTYPE)

    def grad_apply(self, x):
        x = np.asarray(x, dtype=settings.FLOAT_DTYPE)
        raise_if.dimension_mismatch(self.in_dim, x.size, "frame vector")
        x = x.reshape(self.shape)

        field = np.zeros((2, ) + self.shape, dtype=settings.FLOAT_DTYPE)
        field[0, :, :-1] = x[:, 1:] - x[:, :-1]
        field[1, :-1, :] = x[1:, :] - x[:-1, :]

        return field.reshape(2, -1)

    def div_apply(self, y):
        """Transpose of `grad_apply`, the negative divergence."""
        y = np.asarray(y, dtype=settings.FLOAT_DTYPE)
        raise_if.dimension_mismatch(2 * self.n_sites, y.size, "dual field")
        y = y.reshape((2, ) + self.shape)

        out = np.zeros(self.shape, dtype=settings.FLOAT_DTYPE)
        out[:, :-1] -= y[0, :, :-1]
        out[:, 1:] += y[0, :, :-1]
        out[:-1, :] -= y[1, :-1, :]
        out[1:, :] += y[1, :-1, :]

        return out.ravel()

    def norm(self):
        """Upper bound ||K|| <= sqrt(8)."""
        return float(np.sqrt(8.))


class MeshGradient(DynregBase):
    """Area weighted P1 gradient on a triangle mesh,
    (K x)_t = area_t * grad(x)|_t, so that TV(x) = sum_t area_t |grad x|_t|
    and the dual ball has the same radius on every triangle.

    Parameters
    -----------
    mesh: Mesh
    """

    __slots__ = ("mesh", "_matrix", "_norm")

    def __init__(self, mesh):
        self.mesh = mesh
        self._norm = None

        tri = np.asarray(mesh.triangles)
        weighted = mesh.areas()[:, None, None] * mesh.gradients()
        n_tri = tri.shape[0]
        rows = np.concatenate(
                (
                        np.repeat(np.arange(n_tri), 3),
                        n_tri + np.repeat(np.arange(n_tri), 3),
                )
        )
        cols = np.concatenate((tri.ravel(), tri.ravel()))
        vals = np.concatenate(
                (weighted[:, :, 0].ravel(), weighted[:, :, 1].ravel())
        )
        self._matrix = sparse.csr_matrix(
                (vals, (rows, cols)), shape=(2 * n_tri, mesh.n_nodes)
        )

    @property
    def in_dim(self):
        return self.mesh.n_nodes

    @property
    def n_sites(self):
        return self.mesh.n_tri

    @property
    def matrix(self):
        """(2 n_tri, n_nodes) sparse matrix."""
        return self._matrix

    def site_weights(self):
        return np.asarray(self.mesh.areas())

    def grad_apply(self, x):
        x = np.asarray(x, dtype=settings.FLOAT_DTYPE).ravel()
        raise_if.dimension_mismatch(self.in_dim, x.size, "nodal vector")
        return (self._matrix @ x).reshape(2, -1)

    def div_apply(self, y):
        y = np.asarray(y, dtype=settings.FLOAT_DTYPE).ravel()
        raise_if.dimension_mismatch(2 * self.n_sites, y.size, "dual field")
        return self._matrix.T @ y

    def norm(self):
        """||K|| from the largest eigenvalue of K^T K."""
        if self._norm is None:
            ktk = (self._matrix.T @ self._matrix).tocsc()
            top = splinalg.eigsh(ktk, k=1, which="LA",
                                 return_eigenvectors=False)
            self._norm = float(np.sqrt(max(top[0], 0.)))
            self._logd("||K|| =", self._norm)

        return self._norm


class DualBall(DynregBase):
    """Pointwise 2-ball of radius α at every gradient site (the 2,inf-ball).

    Parameters
    -----------
    radius: float
    """

    __slots__ = ("radius", )

    def __init__(self, radius=1.):
        raise_if.not_positive(radius, "dual ball radius")
        self.radius = float(radius)

    def contains(self, y, tolerance=None):
        if tolerance is None:
            tolerance = settings.TOLERANCE
        norms = arr.pointwise_norm(np.asarray(y).reshape(2, -1))
        return bool(np.all(norms <= self.radius * (1. + tolerance)))


class BoxConstraint(DynregBase):
    """Pointwise bounds lower <= x <= upper. Infinite bounds are allowed.

    Parameters
    -----------
    lower: float
    upper: float
    """

    __slots__ = ("lower", "upper")

    def __init__(self, lower=-np.inf, upper=np.inf):
        self.lower = float(lower)
        self.upper = float(upper)
        if not self.lower < self.upper:
            raise ValueError(
                    f"box needs lower < upper, got {lower} and {upper}."
            )

    def contains(self, x):
        x = np.asarray(x)
        return bool(np.all((x >= self.lower) & (x <= self.upper)))

    def indicator(self, x):
        return 0. if self.contains(x) else np.inf


class DualHull(DynregBase):
    """Per-site radius box describing a restricted dual constraint set.
    Radii broadcast to (n_frames, n_sites); np.inf leaves a site at the
    unit dual ball.

    Parameters
    -----------
    radii: float or array-like
    """

    __slots__ = ("radii", )

    def __init__(self, radii):
        radii = np.asarray(radii, dtype=settings.FLOAT_DTYPE)
        if radii.size == 0:
            raise raise_if.PreconditionError(
                    "dual constraint hull is empty (no radii)."
            )
        if np.any(np.isnan(radii)) or np.any(radii < 0):
            raise raise_if.PreconditionError(
                    "dual constraint hull is empty (negative radius)."
            )
        self.radii = arr.frozen(radii)


class RegulariserStack(DynregBase):
    """Per-frame regulariser R(x) = TV(x) + indicator_box(x) with the pieces
    the solvers need.

    Parameters
    -----------
    gradient: GridGradient or MeshGradient
    box: BoxConstraint
      Default is unbounded.
    """

    __slots__ = ("gradient", "box")

    def __init__(self, gradient, box=None):
        self.gradient = gradient
        self.box = BoxConstraint() if box is None else box

    def value(self, x):
        """R(x) including the box indicator."""
        return tv_value(self.gradient, x) + self.box.indicator(x)

    def ball(self, alpha):
        return DualBall(alpha)


def tv_value(gradient, x):
    """Isotropic total variation, sum over sites of |K x|_2.

    Parameters
    -----------
    gradient: GridGradient or MeshGradient
    x: (d,) array-like

    Returns
    --------
    tv: float
    """
    return float(np.sum(arr.pointwise_norm(gradient.grad_apply(x))))


def project_dual_ball(ball, y):
    """Radial projection of every site onto the radius-α ball.

    Parameters
    -----------
    ball: DualBall
    y: (2, n_sites) array-like

    Returns
    --------
    projected: (2, n_sites) np.ndarray
    """
    y = np.asarray(y, dtype=settings.FLOAT_DTYPE).reshape(2, -1)
    scale = np.maximum(1., arr.pointwise_norm(y) / ball.radius)

    return y / scale


def prox_box(box, x, step=1.):
    """Prox of the box indicator, a clamp. Independent of step."""
    return np.clip(np.asarray(x, dtype=settings.FLOAT_DTYPE), box.lower,
                   box.upper)


def rn_value_under_dual_dynamics(gradient, frames, hull):
    """Spatiotemporal regulariser as the support function of the unit dual
    ball intersected with a per-site radius box,

        R^N(x) = sup { <y, K x> : |y_{k,site}| <= min(1, r_{k,site}) }
               = sum_k sum_site min(1, r_{k,site}) |K x_k|_site.

    Parameters
    -----------
    gradient: GridGradient or MeshGradient
    frames: Trajectory or (N + 1, d) array-like
    hull: DualHull

    Returns
    --------
    value: float
    """
    if hull is None:
        raise raise_if.PreconditionError("dual constraint hull is missing.")

    if hasattr(frames, "as_array"):
        frames = frames.as_array()
    else:
        frames = np.atleast_2d(np.asarray(frames, dtype=settings.FLOAT_DTYPE))
    norms = np.stack(
            [arr.pointwise_norm(gradient.grad_apply(x)) for x in frames]
    )
    try:
        radii = np.broadcast_to(hull.radii, norms.shape)
    except ValueError as err:
        raise raise_if.DimensionError(
                f"hull radii {hull.radii.shape} do not broadcast to "
                f"(frames, sites) {norms.shape}."
        ) from err

    return float(np.sum(np.minimum(1., radii) * norms))


def tv_subgradient(gradient, x):
    """Element of the TV subdifferential at x, K^T y with y = K x / |K x| on
    sites with a jump and 0 elsewhere.

    Parameters
    -----------
    gradient: GridGradient or MeshGradient
    x: (d,) array-like

    Returns
    --------
    v: (d,) np.ndarray
    """
    field = gradient.grad_apply(x)
    norms = arr.pointwise_norm(field)
    y = np.divide(
            field,
            norms,
            out=np.zeros_like(field),
            where=norms > settings.TOLERANCE,
    )

    return gradient.div_apply(y)
