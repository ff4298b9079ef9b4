"""dynreg/dynreg/forward_linear.py.

Linear frame operators with exact adjoints. Gaussian blur with optional
subsampling on pixel grids, and explicit matrices.
"""

import numpy as np
from scipy import ndimage

from dynreg import settings
from dynreg.core import FrameForwardModel
from dynreg.utils import arr
from dynreg.utils import log
from dynreg.helpers import raise_if


def gaussian_kernel(size=5, sigma=1.):
    """Truncated, renormalised 2D Gaussian stencil.

    Parameters
    -----------
    size: int
      odd stencil width.
    sigma: float
      in pixels.

    Returns
    --------
    kernel: (size, size) np.ndarray
    """
    if size % 2 != 1:
        raise ValueError(f"stencil size should be odd, got {size}.")
    raise_if.not_positive(sigma, "sigma")

    half = size // 2
    ax = np.arange(-half, half + 1, dtype=settings.FLOAT_DTYPE)
    g = np.exp(-0.5 * (ax / sigma)**2)
    kernel = np.outer(g, g)

    return kernel / kernel.sum()


class LinearOperatorBase(FrameForwardModel):
    """Shared parts of linear frame operators. A'(x) = A for every x."""

    __slots__ = ["_matrix_cache"]

    is_linear = True

    def adjoint_apply(self, y):
        raise NotImplementedError

    def jacobian_apply(self, x, h):
        return self.apply(h)

    def jacobian_adjoint_apply(self, x, r):
        return self.adjoint_apply(r)

    def as_matrix(self):
        """Dense matrix, assembled column by column once.

        Returns
        --------
        matrix: (out_dim, in_dim) np.ndarray
          read-only
        """
        cached = getattr(self, "_matrix_cache", None)
        if cached is not None:
            return cached

        self._logd("assembling dense matrix", self.out_dim, "x", self.in_dim)
        matrix = np.empty((self.out_dim, self.in_dim),
                          dtype=settings.FLOAT_DTYPE)
        unit = np.zeros(self.in_dim, dtype=settings.FLOAT_DTYPE)
        for j in range(self.in_dim):
            unit[j] = 1.
            matrix[:, j] = self.apply(unit)
            unit[j] = 0.
        matrix.flags.writeable = False
        self._matrix_cache = matrix

        return matrix

    def _check_in(self, x):
        x = np.asarray(x, dtype=settings.FLOAT_DTYPE).ravel()
        raise_if.dimension_mismatch(self.in_dim, x.size, "frame vector")
        return x

    def _check_out(self, y):
        y = np.asarray(y, dtype=settings.FLOAT_DTYPE).ravel()
        raise_if.dimension_mismatch(
                self.out_dim, y.size, "measurement vector"
        )
        return y


class LinearFrameOperator(LinearOperatorBase):
    """Blur and optional subsampling on a (n_y, n_x) pixel grid.

    Boundary handling is zero padding, so the adjoint is the correlation
    transpose, i.e. convolution with the same stencil.

    Parameters
    -----------
    shape: tuple
      (n_y, n_x)
    kernel: (s, s) array-like
      Default is `gaussian_kernel(5, 1.)`.
    mask: (n_y, n_x) bool array-like
      (Optional) pixels that are measured.
    """

    __slots__ = ("shape", "kernel", "mask", "_flat_mask")

    def __init__(self, shape, kernel=None, mask=None):
        self.shape = tuple(int(s) for s in shape)
        if len(self.shape) != 2:
            raise ValueError(f"shape should be 2D, got {shape}.")

        if kernel is None:
            kernel = gaussian_kernel()
        kernel = arr.frozen(kernel)
        if kernel.ndim != 2 or any(s % 2 != 1 for s in kernel.shape):
            raise ValueError("kernel should be 2D with odd extents.")
        self.kernel = kernel

        if mask is None:
            self.mask = None
            self._flat_mask = None
        else:
            mask = np.asarray(mask, dtype=bool)
            raise_if.dimension_mismatch(self.shape, mask.shape, "mask")
            self.mask = arr.frozen(mask, dtype=bool)
            self._flat_mask = np.flatnonzero(mask)

        self._matrix_cache = None

    @property
    def in_dim(self):
        return self.shape[0] * self.shape[1]

    @property
    def out_dim(self):
        if self._flat_mask is None:
            return self.in_dim
        return self._flat_mask.size

    def apply(self, x):
        x = self._check_in(x).reshape(self.shape)
        out = ndimage.correlate(x, self.kernel, mode="constant", cval=0.)
        out = out.ravel()

        if self._flat_mask is not None:
            return out[self._flat_mask]

        return out

    def adjoint_apply(self, y):
        y = self._check_out(y)
        if self._flat_mask is not None:
            full = np.zeros(self.in_dim, dtype=settings.FLOAT_DTYPE)
            full[self._flat_mask] = y
            y = full

        return ndimage.convolve(
                y.reshape(self.shape), self.kernel, mode="constant", cval=0.
        ).ravel()

    def norm_bound(self):
        """||A|| <= sum |kernel| (Young's inequality for convolutions)."""
        return float(np.abs(self.kernel).sum())


class MatrixOperator(LinearOperatorBase):
    """Explicit (m, d) matrix.

    Parameters
    -----------
    matrix: (m, d) array-like
    """

    __slots__ = ("matrix", )

    def __init__(self, matrix):
        matrix = np.atleast_2d(arr.frozen(matrix))
        if matrix.ndim != 2:
            raise ValueError("matrix should be 2D.")
        self.matrix = matrix
        self._matrix_cache = matrix

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n))

    @property
    def in_dim(self):
        return self.matrix.shape[1]

    @property
    def out_dim(self):
        return self.matrix.shape[0]

    def apply(self, x):
        return self.matrix @ self._check_in(x)

    def adjoint_apply(self, y):
        return self.matrix.T @ self._check_out(y)

    def norm_bound(self):
        return float(np.linalg.norm(self.matrix, 2))


def operator_norm(op, max_iter=None, tolerance=None, seed=0):
    """Largest singular value by power iteration on A^T A. Works with any
    object that has `apply` and `adjoint_apply` (or `grad_apply` and
    `div_apply` for gradient operators).

    Parameters
    -----------
    op: object
    max_iter: int
      Default is `settings.POWER_ITERATIONS`.
    tolerance: float
      relative change of the Rayleigh quotient. Default is
      `settings.POWER_TOLERANCE`.
    seed: int

    Returns
    --------
    norm: float
    """
    if max_iter is None:
        max_iter = settings.POWER_ITERATIONS
    if tolerance is None:
        tolerance = settings.POWER_TOLERANCE

    if hasattr(op, "apply"):
        forward, adjoint = op.apply, op.adjoint_apply
    else:
        forward, adjoint = op.grad_apply, op.div_apply

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(op.in_dim)
    v /= np.linalg.norm(v)

    eig = 0.
    residual = np.inf
    for i in range(int(max_iter)):
        w = np.ravel(adjoint(forward(v)))
        new_eig = float(v @ w)
        w_norm = np.linalg.norm(w)
        if w_norm == 0:
            return 0.

        residual = np.linalg.norm(w - new_eig * v) / w_norm
        if abs(new_eig - eig) <= tolerance * abs(new_eig):
            log.debug(
                    "operator_norm -", type(op).__qualname__,
                    f"converged after {i + 1} iterations"
            )
            return float(np.sqrt(new_eig))

        eig = new_eig
        v = w / w_norm

    raise raise_if.ConvergenceError(
            f"power iteration did not converge in {max_iter} iterations, "
            f"iterate residual {residual:.3e}.",
            residual=residual,
    )
