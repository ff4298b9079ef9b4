"""dynreg/dynreg/convex_oracle.py.

Brute force convex analysis on axis aligned lattices in R^d, d <= 3.
Conjugates, infimal convolutions, subdifferential membership and local
growth certificates, used to falsify identities of convex analysis on
seeded random instances.

Extended real values are stored as floats with +inf as the only infinite
value. Ties in argmin and argmax go to the lowest C-order lattice index.
"""

from collections import namedtuple

import numpy as np
from scipy import spatial

from dynreg import settings
from dynreg.utils import arr
from dynreg.utils import log
from dynreg.helpers import raise_if
from dynreg.helpers.data import SuiteReport
from dynreg._base import DynregBase

MAX_DIM = 3
MAX_AXIS_POINTS = 201

# pairs per vectorised chunk of brute force loops
_CHUNK = 2_000_000


class Lattice(DynregBase):
    """Tensor product lattice.

    Parameters
    -----------
    axes: list of (n_i,) array-like
      strictly increasing coordinates per axis.
    """

    __slots__ = ("_axes", "_points", "_tree", "_uniform")

    def __init__(self, axes):
        axes = [arr.frozen(np.ravel(a)) for a in axes]
        if not 1 <= len(axes) <= MAX_DIM:
            raise ValueError(
                    f"lattice dimension should be in [1, {MAX_DIM}], "
                    f"got {len(axes)}."
            )
        for i, a in enumerate(axes):
            if a.size < 1 or a.size > MAX_AXIS_POINTS:
                raise ValueError(
                        f"axis {i} has {a.size} points, allowed are 1 to "
                        f"{MAX_AXIS_POINTS}."
                )
            if np.any(np.diff(a) <= 0):
                raise ValueError(f"axis {i} is not strictly increasing.")

        self._axes = tuple(axes)
        self._points = None
        self._tree = None
        self._uniform = all(
                a.size < 3 or np.allclose(np.diff(a), a[1] - a[0],
                                          rtol=1e-12, atol=0.)
                for a in axes
        )

    @classmethod
    def uniform(cls, bounds, counts):
        """Uniform lattice.

        Parameters
        -----------
        bounds: list
          (low, high) per axis.
        counts: int or list
          points per axis.

        Returns
        --------
        lattice: Lattice
        """
        bounds = np.atleast_2d(np.asarray(bounds, dtype=settings.FLOAT_DTYPE))
        counts = np.broadcast_to(np.asarray(counts, dtype=int),
                                 (bounds.shape[0], ))
        return cls(
                [np.linspace(lo, hi, n) for (lo, hi), n in zip(bounds, counts)]
        )

    @property
    def axes(self):
        return self._axes

    @property
    def dim(self):
        return len(self._axes)

    @property
    def shape(self):
        return tuple(a.size for a in self._axes)

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def is_uniform(self):
        return self._uniform

    def steps(self):
        """Smallest spacing per axis, inf on single point axes."""
        return np.array(
                [np.min(np.diff(a)) if a.size > 1 else np.inf
                 for a in self._axes]
        )

    def points(self):
        """(size, dim) coordinates in C order, read-only."""
        if self._points is None:
            grids = np.meshgrid(*self._axes, indexing="ij")
            self._points = arr.frozen(
                    np.stack([g.ravel() for g in grids], axis=1)
            )
        return self._points

    def contains(self, points, tolerance=None):
        """True per point if it lies in the lattice bounding box."""
        if tolerance is None:
            tolerance = settings.TOLERANCE
        points = np.atleast_2d(points)
        lo = np.array([a[0] for a in self._axes]) - tolerance
        hi = np.array([a[-1] for a in self._axes]) + tolerance
        return np.all((points >= lo) & (points <= hi), axis=1)

    def snap(self, points):
        """Nearest lattice points. On uniform axes an exact midpoint goes
        to the even index.

        Parameters
        -----------
        points: (n, dim) array-like

        Returns
        --------
        index: (n,) np.ndarray
          flat C-order index.
        bias: (n,) np.ndarray
          distance to the snapped point.
        """
        points = np.atleast_2d(np.asarray(points, dtype=settings.FLOAT_DTYPE))
        raise_if.dimension_mismatch(self.dim, points.shape[1], "point dim")

        if self._uniform:
            sub = list()
            for i, a in enumerate(self._axes):
                if a.size == 1:
                    sub.append(np.zeros(points.shape[0], dtype=int))
                    continue
                step = a[1] - a[0]
                j = np.rint((points[:, i] - a[0]) / step).astype(int)
                sub.append(np.clip(j, 0, a.size - 1))
            index = np.ravel_multi_index(sub, self.shape)
        else:
            if self._tree is None:
                self._tree = spatial.cKDTree(self.points())
            _, index = self._tree.query(points)

        bias = np.linalg.norm(self.points()[index] - points, axis=1)

        return np.asarray(index), bias

    def minkowski(self, other):
        """Uniform lattice holding all sums of points of two uniform
        lattices with equal steps."""
        if not (self._uniform and other.is_uniform):
            raise raise_if.UnsupportedError(
                    "Minkowski lattice needs uniform lattices."
            )
        axes = list()
        for a, b in zip(self._axes, other.axes):
            step = a[1] - a[0] if a.size > 1 else b[1] - b[0]
            n = a.size + b.size - 1
            axes.append(a[0] + b[0] + step * np.arange(n))
        return Lattice(axes)

    def __repr__(self):
        return f"Lattice(shape={self.shape})"


class GridFunction(DynregBase):
    """Extended real function sampled on a lattice.

    Parameters
    -----------
    lattice: Lattice
    values: (size,) or lattice.shape array-like
      finite or +inf.
    meta: dict
      (Optional) bookkeeping such as snap bias.
    """

    __slots__ = ("lattice", "_values", "meta")

    def __init__(self, lattice, values, meta=None):
        values = np.asarray(values, dtype=settings.FLOAT_DTYPE).ravel()
        raise_if.dimension_mismatch(lattice.size, values.size, "values")
        if np.any(np.isnan(values)):
            raise ValueError("grid function values contain nan.")
        if np.any(values == -np.inf):
            raise ValueError("grid function values contain -inf.")
        if np.any(values == np.finfo(settings.FLOAT_DTYPE).max):
            raise ValueError(
                    "largest finite float is ambiguous, use inf instead."
            )
        finite = np.isfinite(values)
        if not np.any(finite):
            raise raise_if.ProperError(
                    "grid function is +inf everywhere (not proper)."
            )

        self.lattice = lattice
        self._values = arr.frozen(values)
        self.meta = dict() if meta is None else dict(meta)

    @classmethod
    def on_lattice(cls, lattice, func, meta=None):
        """Evaluates func on each point. func takes a (dim,) array."""
        values = [func(p) for p in lattice.points()]
        return cls(lattice, values, meta=meta)

    @property
    def values(self):
        return self._values

    def finite(self):
        return np.isfinite(self._values)

    def at(self, point):
        """Value at the lattice point nearest to `point`."""
        index, _ = self.lattice.snap(point)
        return float(self._values[index[0]])

    def __repr__(self):
        return (
                f"GridFunction({self.lattice!r}, "
                f"finite={int(self.finite().sum())})"
        )


SubdiffCertificate = namedtuple(
        "SubdiffCertificate",
        ["point", "slope", "gamma", "epsilon", "radius", "mode"],
)
"""
namedtuple for a local (semi-)strong ε-subdifferentiability claim at x̂
for slope x̂*,

  f(x) >= f(x̂) + <x̂*, x - x̂> + γ dist(x)^2 - ε,
  for |x - x̂| <= radius.

dist is |x - x̂| in strong mode, the distance to the lattice set where x̂*
is a subgradient in semi_strong mode, and γ is ignored in plain mode.

Attributes
-----------
point: (dim,) np.ndarray
slope: (dim,) np.ndarray
gamma: float
epsilon: float
radius: float
mode: str
"""

CertificateCheck = namedtuple(
        "CertificateCheck", ["valid", "worst_violation", "worst_point"]
)
"""
namedtuple returned by `certify_subdiff`.

Attributes
-----------
valid: bool
worst_violation: float
  largest rhs - f(x) over the neighbourhood, <= tolerance if valid.
worst_point: (dim,) np.ndarray
"""

FormulaGap = namedtuple("FormulaGap", ["lhs", "rhs", "max_gap"])
"""
namedtuple returned by `set_infconv_formula_check`.

Attributes
-----------
lhs: (size,) np.ndarray
  (g^* + indicator_U)_* on the primal lattice.
rhs: (size,) np.ndarray
  biconjugate of g infconv support(conv U).
max_gap: float
"""

_MODES = ("strong", "semi_strong", "plain")


def make_certificate(point, slope, gamma=0., epsilon=0., radius=1.,
                     mode="strong"):
    """Validated SubdiffCertificate."""
    if mode not in _MODES:
        raise ValueError(f"unknown mode `{mode}`. Options are {_MODES}.")
    if gamma < 0 or epsilon < 0:
        raise ValueError("certificate needs gamma >= 0 and epsilon >= 0.")
    raise_if.not_positive(radius, "neighbourhood radius")

    return SubdiffCertificate(
            point=np.atleast_1d(np.asarray(point, dtype=float)),
            slope=np.atleast_1d(np.asarray(slope, dtype=float)),
            gamma=float(gamma),
            epsilon=float(epsilon),
            radius=float(radius),
            mode=mode,
    )


def _scale(values):
    finite = values[np.isfinite(values)]
    return max(1., float(np.max(np.abs(finite)))) if finite.size else 1.


def conjugate_at(f, duals):
    """f^*(s) = max over finite lattice x of <s, x> - f(x).

    Parameters
    -----------
    f: GridFunction
    duals: (n, dim) array-like

    Returns
    --------
    values: (n,) np.ndarray
    argmax: (n,) np.ndarray
      lattice index of the maximiser.
    """
    duals = np.atleast_2d(np.asarray(duals, dtype=settings.FLOAT_DTYPE))
    raise_if.dimension_mismatch(f.lattice.dim, duals.shape[1], "dual dim")

    finite = np.flatnonzero(f.finite())
    x = f.lattice.points()[finite]
    fx = f.values[finite]

    values = np.empty(duals.shape[0])
    argmax = np.empty(duals.shape[0], dtype=int)
    chunk = max(1, _CHUNK // max(finite.size, 1))
    for start in range(0, duals.shape[0], chunk):
        block = duals[start:start + chunk] @ x.T - fx[None, :]
        j = np.argmax(block, axis=1)
        values[start:start + chunk] = block[np.arange(j.size), j]
        argmax[start:start + chunk] = finite[j]

    return values, argmax


def conjugate(f, dual_lattice):
    """Fenchel conjugate of f sampled on dual_lattice.

    Parameters
    -----------
    f: GridFunction
    dual_lattice: Lattice

    Returns
    --------
    f_star: GridFunction
    """
    values, _ = conjugate_at(f, dual_lattice.points())
    return GridFunction(dual_lattice, values)


def infconv(g, h, out_lattice=None, return_argmin=False):
    """Infimal convolution (g □ h)(x) = min over lattice x̃ of
    g(x̃) + h(x - x̃). x - x̃ is snapped to the nearest point of h's
    lattice and counts as +inf outside its bounds.

    Parameters
    -----------
    g: GridFunction
    h: GridFunction
    out_lattice: Lattice
      Default is g's lattice.
    return_argmin: bool

    Returns
    --------
    f: GridFunction
      meta["snap_bias"] is the largest snap distance of a finite pair.
    argmin: (size,) np.ndarray
      lattice index of x̃ in g's lattice, -1 where the result is inf.
    """
    if out_lattice is None:
        out_lattice = g.lattice
    raise_if.dimension_mismatch(g.lattice.dim, h.lattice.dim, "h dim")
    raise_if.dimension_mismatch(g.lattice.dim, out_lattice.dim, "out dim")

    g_idx = np.flatnonzero(g.finite())
    g_pts = g.lattice.points()[g_idx]
    g_val = g.values[g_idx]
    out = out_lattice.points()

    values = np.full(out.shape[0], np.inf)
    argmin = np.full(out.shape[0], -1, dtype=int)
    max_bias = 0.
    chunk = max(1, _CHUNK // max(g_idx.size, 1))
    for start in range(0, out.shape[0], chunk):
        block = out[start:start + chunk]
        diffs = block[:, None, :] - g_pts[None, :, :]
        diffs = diffs.reshape(-1, block.shape[1])
        h_index, bias = h.lattice.snap(diffs)
        h_val = np.where(h.lattice.contains(diffs), h.values[h_index], np.inf)
        total = (g_val[None, :] + h_val.reshape(block.shape[0], -1))
        j = np.argmin(total, axis=1)
        best = total[np.arange(j.size), j]
        finite = np.isfinite(best)
        values[start:start + chunk] = best
        argmin[start:start + chunk] = np.where(finite, g_idx[j], -1)

        used = np.isfinite(total.ravel())
        if np.any(used):
            max_bias = max(max_bias, float(np.max(bias[used])))

    f = GridFunction(out_lattice, values, meta={"snap_bias": max_bias})
    if return_argmin:
        return f, argmin

    return f


def _shifted(step, n, side):
    """Slice of the x - e (side -1), x (0) or x + e (1) member of midpoint
    triples along one axis."""
    if step == 0:
        return slice(None)
    offset = 1 + side * step
    return slice(offset, n - 2 + offset)


def is_convex(f, tolerance=None):
    """Discrete midpoint convexity along axes and two-axis diagonals,
    f(x) <= (f(x - e) + f(x + e)) / 2 whenever x is the coordinate midpoint.
    A finite pair around an infinite midpoint is nonconvex.

    Parameters
    -----------
    f: GridFunction
    tolerance: float
      relative to the largest finite |f|. Default is `settings.TOLERANCE`.

    Returns
    --------
    convex: bool
    """
    if tolerance is None:
        tolerance = settings.TOLERANCE
    shape = f.lattice.shape
    values = f.values.reshape(shape)
    coords = np.meshgrid(*f.lattice.axes, indexing="ij")
    tol = tolerance * _scale(f.values)

    steps = list()
    dim = f.lattice.dim
    for i in range(dim):
        e = [0] * dim
        e[i] = 1
        steps.append(e)
        for j in range(i + 1, dim):
            for sign in (1, -1):
                e = [0] * dim
                e[i] = 1
                e[j] = sign
                steps.append(e)

    for e in steps:
        if any(n < 3 for s, n in zip(e, shape) if s):
            continue
        lo = tuple(_shifted(s, n, -1) for s, n in zip(e, shape))
        mid = tuple(_shifted(s, n, 0) for s, n in zip(e, shape))
        hi = tuple(_shifted(s, n, 1) for s, n in zip(e, shape))

        a, m, b = values[lo], values[mid], values[hi]
        is_mid = np.ones(a.shape, dtype=bool)
        for c in coords:
            is_mid &= np.isclose(c[mid], 0.5 * (c[lo] + c[hi]), rtol=0.,
                                 atol=1e-12)
        outer = np.isfinite(a) & np.isfinite(b) & is_mid
        if np.any(outer & ~np.isfinite(m)):
            return False
        check = outer & np.isfinite(m)
        if np.any(m[check] > 0.5 * (a[check] + b[check]) + tol):
            return False

    return True


def subdiff_contains(f, x, x_star, tolerance=None, convexity_tolerance=None):
    """x* in the subdifferential of f at x, by the global subgradient
    inequality f(y) >= f(x) + <x*, y - x> at every lattice point y.

    Parameters
    -----------
    f: GridFunction
      convex.
    x: (dim,) array-like
      snapped to the lattice.
    x_star: (dim,) array-like
    tolerance: float
      relative. Default is `settings.TOLERANCE`.
    convexity_tolerance: float
      passed to `is_convex`.

    Returns
    --------
    contains: bool
    """
    if tolerance is None:
        tolerance = settings.TOLERANCE
    if not is_convex(f, convexity_tolerance):
        raise raise_if.UnsupportedError(
                "subdiff_contains needs a convex grid function."
        )

    index, _ = f.lattice.snap(x)
    fx = f.values[index[0]]
    if not np.isfinite(fx):
        return False
    x = f.lattice.points()[index[0]]
    finite = f.finite()
    y = f.lattice.points()[finite]
    lower = fx + (y - x) @ np.ravel(x_star)
    tol = tolerance * _scale(f.values)

    return bool(np.all(f.values[finite] >= lower - tol))


def _neighbourhood(f, center, radius):
    pts = f.lattice.points()
    near = np.linalg.norm(pts - center[None, :], axis=1) <= radius * (
            1. + 1e-12
    )
    near &= f.finite()
    if not np.any(near):
        raise raise_if.PreconditionError(
                f"neighbourhood of radius {radius} holds no finite lattice "
                "point."
        )
    return np.flatnonzero(near)


def _solution_set(f, slope, tolerance):
    """Lattice points where `slope` is a subgradient, the minimisers of
    f - <slope, .>."""
    pts = f.lattice.points()
    tilted = np.where(f.finite(), f.values - pts @ slope, np.inf)
    tol = tolerance * _scale(f.values)
    return pts[tilted <= np.min(tilted) + tol]


def _growth_terms(f, cert, tolerance):
    index, _ = f.lattice.snap(cert.point)
    center = f.lattice.points()[index[0]]
    f_hat = f.values[index[0]]
    if not np.isfinite(f_hat):
        raise raise_if.PreconditionError("f is +inf at the certificate point.")

    near = _neighbourhood(f, center, cert.radius)
    pts = f.lattice.points()[near]
    linear = f_hat + (pts - center) @ cert.slope

    if cert.mode == "semi_strong":
        solutions = _solution_set(f, cert.slope, tolerance)
        tree = spatial.cKDTree(solutions)
        dist, _ = tree.query(pts)
        dist_sq = dist**2
    else:
        dist_sq = np.sum((pts - center)**2, axis=1)

    return pts, f.values[near], linear, dist_sq


def certify_subdiff(f, cert, tolerance=None):
    """Checks a growth certificate at every lattice point of the
    neighbourhood.

    Parameters
    -----------
    f: GridFunction
    cert: SubdiffCertificate
    tolerance: float
      relative. Default is `settings.TOLERANCE`.

    Returns
    --------
    check: CertificateCheck
    """
    if tolerance is None:
        tolerance = settings.TOLERANCE
    pts, fx, linear, dist_sq = _growth_terms(f, cert, tolerance)
    gamma = 0. if cert.mode == "plain" else cert.gamma

    violation = linear + gamma * dist_sq - cert.epsilon - fx
    worst = int(np.argmax(violation))
    tol = tolerance * _scale(f.values)

    return CertificateCheck(
            valid=bool(violation[worst] <= tol),
            worst_violation=float(violation[worst]),
            worst_point=pts[worst],
    )


def growth_factor(f, point, slope, radius, mode="strong", epsilon=0.,
                  tolerance=None):
    """Largest γ for which `certify_subdiff` passes. inf if every
    neighbourhood point has zero distance, negative if no γ >= 0 works.

    Returns
    --------
    gamma: float
    """
    if tolerance is None:
        tolerance = settings.TOLERANCE
    cert = make_certificate(point, slope, 0., epsilon, radius, mode)
    _, fx, linear, dist_sq = _growth_terms(f, cert, tolerance)
    gap = fx - linear + epsilon
    tol = tolerance * _scale(f.values)

    flat = dist_sq <= settings.TOLERANCE
    if np.any(gap[flat] < -tol):
        return -np.inf
    if np.all(flat):
        return np.inf

    return float(np.min(gap[~flat] / dist_sq[~flat]))


def biconjugate_gap(f, dual_lattice=None):
    """max(f - f**) over finite lattice points. Zero up to lattice error for
    convex f, positive where f is above its convex envelope.

    Parameters
    -----------
    f: GridFunction
    dual_lattice: Lattice
      Default spans the finite difference slopes of f.

    Returns
    --------
    gap: float
    """
    if dual_lattice is None:
        dual_lattice = _slope_lattice(f)
    f_star = conjugate(f, dual_lattice)
    f_bi, _ = conjugate_at(f_star, f.lattice.points())
    finite = f.finite()

    return float(np.max(f.values[finite] - f_bi[finite]))


def _slope_lattice(f):
    values = f.values.reshape(f.lattice.shape)
    bounds = list()
    for i, a in enumerate(f.lattice.axes):
        if a.size < 2:
            bounds.append((-1., 1.))
            continue
        diff = np.diff(values, axis=i)
        steps = np.diff(a).reshape([-1 if j == i else 1
                                    for j in range(f.lattice.dim)])
        slopes = diff / steps
        slopes = slopes[np.isfinite(slopes)]
        top = float(np.max(np.abs(slopes))) if slopes.size else 1.
        bounds.append((-top, top))

    return Lattice.uniform(bounds, f.lattice.shape)


def check_seminorm(f, tolerance=None):
    """Name of the first violated seminorm axiom on the lattice, or None.
    Checks nonnegativity, f(0) = 0, symmetry, homogeneity for λ = 2 and the
    triangle inequality over lattice point pairs. Needs a lattice that is
    symmetric around the origin.

    Returns
    --------
    axiom: str or None
    """
    if tolerance is None:
        tolerance = settings.TOLERANCE
    lattice = f.lattice
    values = f.values
    tol = tolerance * _scale(values)
    pts = lattice.points()

    if np.any(values < -tol):
        return "nonnegativity"

    origin, bias = lattice.snap(np.zeros(lattice.dim))
    if bias[0] > settings.TOLERANCE:
        raise raise_if.PreconditionError("lattice does not contain 0.")
    if abs(values[origin[0]]) > tol:
        return "zero at origin"

    mirror, bias = lattice.snap(-pts)
    inside = lattice.contains(-pts) & (bias <= settings.TOLERANCE)
    if np.any(np.abs(values[inside] - values[mirror[inside]]) > tol):
        return "symmetry"

    double, bias = lattice.snap(2. * pts)
    inside = lattice.contains(2. * pts) & (bias <= settings.TOLERANCE)
    if np.any(np.abs(values[double[inside]] - 2. * values[inside]) > tol):
        return "homogeneity"

    n = pts.shape[0]
    chunk = max(1, _CHUNK // n)
    for start in range(0, n, chunk):
        a = np.arange(start, min(n, start + chunk))
        sums = (pts[a, None, :] + pts[None, :, :]).reshape(-1, lattice.dim)
        index, bias = lattice.snap(sums)
        ok = lattice.contains(sums) & (bias <= settings.TOLERANCE)
        bound = (values[a, None] + values[None, :]).ravel()
        if np.any(values[index[ok]] > bound[ok] + tol):
            return "triangle inequality"

    return None


def sqrt_infconv_seminorm(g, h, tolerance=None):
    """F = sqrt(g^2 □ h^2) for seminorms g and h on a common lattice.

    Parameters
    -----------
    g: GridFunction
    h: GridFunction
    tolerance: float
      axiom check tolerance.

    Returns
    --------
    f: GridFunction
    """
    for name, s in (("g", g), ("h", h)):
        axiom = check_seminorm(s, tolerance)
        if axiom is not None:
            raise raise_if.PreconditionError(
                    f"{name} is not a seminorm: {axiom} fails."
            )

    squared = infconv(
            GridFunction(g.lattice, g.values**2),
            GridFunction(h.lattice, h.values**2),
    )
    return GridFunction(
            squared.lattice, np.sqrt(squared.values), meta=squared.meta
    )


def support_values(points, u_set):
    """Support function of conv U, max over u of <u, x>, at points."""
    u_set = np.atleast_2d(u_set)
    return np.max(np.atleast_2d(points) @ u_set.T, axis=1)


def set_infconv_formula_check(g, u_set, dual_lattice):
    """Compares F = (g^* + indicator_U)_* with the biconjugate of
    g □ support(conv U) on g's lattice.

    lhs is the direct supremum over U. rhs goes through an infimal
    convolution on the Minkowski lattice and two lattice conjugates. They
    agree when <., x> - g^* has its supremum over conv U at points of U, in
    particular when g is the support function of a set containing U and U
    lies on the dual lattice.

    Parameters
    -----------
    g: GridFunction
      convex, proper.
    u_set: (n, dim) array-like
      nonempty.
    dual_lattice: Lattice

    Returns
    --------
    gap: FormulaGap
    """
    u_set = np.atleast_2d(np.asarray(u_set, dtype=settings.FLOAT_DTYPE))
    if u_set.size == 0:
        raise raise_if.PreconditionError("dual constraint set U is empty.")
    raise_if.dimension_mismatch(g.lattice.dim, u_set.shape[1], "U dim")

    pts = g.lattice.points()
    g_star_u, _ = conjugate_at(g, u_set)
    lhs = np.max(pts @ u_set.T - g_star_u[None, :], axis=1)

    wide = g.lattice.minkowski(g.lattice)
    support = GridFunction(wide, support_values(wide.points(), u_set))
    conv = infconv(g, support, out_lattice=g.lattice)
    rhs, _ = conjugate_at(conjugate(conv, dual_lattice), pts)

    max_gap = float(np.max(np.abs(lhs - rhs)))

    return FormulaGap(lhs=lhs, rhs=rhs, max_gap=max_gap)


def _max_of_quadratics(lattice, rng, pieces=3, curvature=(1., 2.),
                       center=0.3, level=0.5):
    """Random strongly convex max of quadratics and its gradient map."""
    dim = lattice.dim
    a = rng.uniform(*curvature, size=pieces)
    c = rng.uniform(-center, center, size=(pieces, dim))
    lv = rng.uniform(0., level, size=pieces)

    def pieces_at(x):
        x = np.atleast_2d(x)
        sq = np.sum((x[:, None, :] - c[None, :, :])**2, axis=2)
        return 0.5 * a[None, :] * sq + lv[None, :]

    def value(x):
        return np.max(pieces_at(x), axis=1)

    def grad(x):
        j = int(np.argmax(pieces_at(x)[0]))
        return a[j] * (np.ravel(x) - c[j])

    return value, grad


def _double_well(lattice, depth=4., width=0.7):
    w = np.zeros(lattice.dim)
    w[0] = width

    def value(x):
        x = np.atleast_2d(x)
        return depth * np.minimum(
                np.sum((x - w)**2, axis=1), np.sum((x + w)**2, axis=1)
        )

    return value


def _report(name, instances, failures, worst, counterexample):
    log.info(
            name, "-", instances, "instances,", failures,
            f"failures, worst margin {worst:.3e}"
    )
    return SuiteReport(
            name=name,
            instances=int(instances),
            failures=int(failures),
            worst_margin=float(worst),
            counterexample=counterexample,
    )


def suite_conjugate_sum(instances=100, seed=0, inject_nonconvex=False,
                        tolerance=1e-8):
    """(g □ h)^* = g^* + h^* and g □ h = (g^* + h^*)^* on random convex
    pairs, alternating d = 1 and d = 2. The second identity is checked in
    one dimension only, where the lattice error is small. With
    `inject_nonconvex`, g is a double well and the second identity must
    break.

    Returns
    --------
    report: SuiteReport
    """
    rng = np.random.default_rng(seed)
    failures = 0
    worst = np.inf
    counterexample = None

    for i in range(int(instances)):
        dim = 1 if i % 2 == 0 else 2
        if dim == 1:
            primal = Lattice.uniform([(-1., 1.)], 101)
            dual = Lattice.uniform([(-10., 10.)], MAX_AXIS_POINTS)
        else:
            primal = Lattice.uniform([(-1., 1.)] * 2, 11)
            dual = Lattice.uniform([(-4., 4.)] * 2, 21)
        out = primal.minkowski(primal)

        g_val, _ = _max_of_quadratics(primal, rng)
        h_val, _ = _max_of_quadratics(primal, rng)
        if inject_nonconvex:
            g_val = _double_well(primal)
        g = GridFunction(primal, g_val(primal.points()))
        h = GridFunction(primal, h_val(primal.points()))

        conv = infconv(g, h, out_lattice=out)
        lhs = conjugate(conv, dual).values
        rhs = conjugate(g, dual).values + conjugate(h, dual).values
        gap = float(np.max(np.abs(lhs - rhs)))
        margin = tolerance * max(1., float(np.max(np.abs(rhs)))) - gap
        what = "conjugate of infconv"

        if dim == 1:
            # biconjugate of the conjugate sum on the central region
            dual_step = dual.steps()[0]
            lattice_error = 2. * (0.5 * dual_step)**2 / 0.5 + 2. * (
                    primal.steps()[0]**2
            )
            central = np.abs(out.points()[:, 0]) <= 1. + 1e-12
            star_sum = GridFunction(dual, rhs)
            bi, _ = conjugate_at(star_sum, out.points()[central])
            gap2 = float(np.max(np.abs(conv.values[central] - bi)))
            margin2 = tolerance + lattice_error - gap2
            if margin2 < margin:
                margin, gap, what = margin2, gap2, "infconv vs biconjugate"

        worst = min(worst, margin)
        if margin < 0:
            failures += 1
            if counterexample is None:
                counterexample = {
                        "instance": i,
                        "dim": dim,
                        "identity": what,
                        "gap": gap,
                }

    return _report(
            "conjugate_sum", instances, failures, worst, counterexample
    )


def suite_set_formula(instances=100, seed=0, tolerance=1e-8):
    """Set-inverse formula on support functions g of boxes B with finite
    U inside B, nonconvex in general. Also compares U with U plus the
    midpoints of its pairs, which only enlarges conv U by nothing.

    Returns
    --------
    report: SuiteReport
    """
    rng = np.random.default_rng(seed)
    failures = 0
    worst = np.inf
    counterexample = None

    for i in range(int(instances)):
        dim = 1 if i % 2 == 0 else 2
        primal = Lattice.uniform([(-1., 1.)] * dim, 41 if dim == 1 else 11)
        dual = Lattice.uniform([(-2., 2.)] * dim, 21)
        half = rng.uniform(0.8, 1.8)
        g = GridFunction(
                primal, half * np.sum(np.abs(primal.points()), axis=1)
        )

        inside = np.flatnonzero(
                np.all(np.abs(dual.points()) <= half + 1e-12, axis=1)
        )
        n_u = int(rng.integers(1, 5))
        u_set = dual.points()[rng.choice(inside, size=n_u, replace=False)]

        result = set_infconv_formula_check(g, u_set, dual)
        gap = result.max_gap

        if n_u > 1:
            mids = 0.5 * (u_set[:, None, :] + u_set[None, :, :])
            hull = np.vstack((u_set, mids.reshape(-1, dim)))
            g_star, _ = conjugate_at(g, hull)
            hull_lhs = np.max(
                    primal.points() @ hull.T - g_star[None, :], axis=1
            )
            gap = max(gap, float(np.max(np.abs(hull_lhs - result.lhs))))

        margin = tolerance * max(1., float(np.max(np.abs(result.lhs)))) - gap
        worst = min(worst, margin)
        if margin < 0:
            failures += 1
            if counterexample is None:
                counterexample = {
                        "instance": i,
                        "dim": dim,
                        "u_set": u_set.tolist(),
                        "gap": gap,
                }

    return _report("set_formula", instances, failures, worst, counterexample)


def suite_subdiff_inclusion(instances=100, seed=0, tolerance=1e-8):
    """x* in ∂g(x̃) and in ∂h(x - x̃) implies x* in ∂(g □ h)(x), on
    random convex g and tilted h with a prescribed common subgradient.

    Returns
    --------
    report: SuiteReport
    """
    rng = np.random.default_rng(seed)
    failures = 0
    worst = np.inf
    counterexample = None

    for i in range(int(instances)):
        dim = 1 if i % 2 == 0 else 2
        primal = Lattice.uniform([(-1., 1.)] * dim, 41 if dim == 1 else 11)
        out = primal.minkowski(primal)
        pts = primal.points()

        g_val, g_grad = _max_of_quadratics(primal, rng)
        h_val, h_grad = _max_of_quadratics(primal, rng)
        x_tilde = pts[rng.integers(pts.shape[0])]
        y = pts[rng.integers(pts.shape[0])]
        x_star = g_grad(x_tilde)
        tilt = x_star - h_grad(y)

        g = GridFunction(primal, g_val(pts))
        h = GridFunction(primal, h_val(pts) + pts @ tilt)
        f = infconv(g, h, out_lattice=out)

        # discrete infconv in 2D is midpoint convex up to sampling error
        convexity = None if dim == 1 else 0.05
        contains = subdiff_contains(
                f, x_tilde + y, x_star, tolerance=tolerance,
                convexity_tolerance=convexity
        )

        index, _ = out.snap(x_tilde + y)
        anchor = out.points()[index[0]]
        lower = f.values[index[0]] + (out.points() - anchor) @ x_star
        finite = f.finite()
        margin = float(np.min(f.values[finite] - lower[finite]))
        worst = min(worst, margin)
        if not contains:
            failures += 1
            if counterexample is None:
                counterexample = {
                        "instance": i,
                        "dim": dim,
                        "x_tilde": x_tilde.tolist(),
                        "y": y.tolist(),
                        "x_star": x_star.tolist(),
                        "margin": margin,
                }

    return _report(
            "subdiff_inclusion", instances, failures, worst, counterexample
    )


def _random_seminorm(rng, dim, rank_one=False):
    if dim == 1:
        scale = rng.uniform(0.5, 1.5)
        return np.array([[scale]])
    if rank_one:
        angle = rng.uniform(0., np.pi)
        return rng.uniform(0.5, 1.5) * np.array(
                [[np.cos(angle), np.sin(angle)]]
        )
    angle = rng.uniform(0., np.pi)
    rot = np.array(
            [[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]]
    )
    return np.diag(rng.uniform(0.5, 1.5, size=2)) @ rot


def suite_seminorm(instances=100, seed=0, tolerance=1e-9):
    """sqrt(g^2 □ h^2) is a seminorm for random seminorms g(x) = |B x|.
    Checks nonnegativity, F(0) = 0, homogeneity for λ in {0.5, 2, 3} and
    the triangle inequality, with the lattice error of the infimum added to
    the tolerance.

    Returns
    --------
    report: SuiteReport
    """
    rng = np.random.default_rng(seed)
    failures = 0
    worst = np.inf
    counterexample = None

    for i in range(int(instances)):
        dim = 1 if i % 2 == 0 else 2
        counts = 121 if dim == 1 else 31
        lattice = Lattice.uniform([(-1., 1.)] * dim, counts)
        pts = lattice.points()
        step = lattice.steps()[0]

        b_g = _random_seminorm(rng, dim, rank_one=bool(rng.integers(2)))
        b_h = _random_seminorm(rng, dim)
        g = GridFunction(lattice, np.linalg.norm(pts @ b_g.T, axis=1))
        h = GridFunction(lattice, np.linalg.norm(pts @ b_h.T, axis=1))
        f = sqrt_infconv_seminorm(g, h)
        values = f.values

        sq_error = (
                np.linalg.norm(b_g, 2)**2 + np.linalg.norm(b_h, 2)**2
        ) * dim * step**2 / 4.
        tol = tolerance * _scale(values)
        margins = [float(np.min(values)) + tol]

        origin, _ = lattice.snap(np.zeros(dim))
        margins.append(tol - abs(values[origin[0]]))

        center = np.asarray(lattice.shape) // 2
        sub = np.stack(np.unravel_index(np.arange(pts.shape[0]),
                                        lattice.shape), axis=1) - center
        small = np.all(np.abs(sub) <= max(2, counts // 20), axis=1)
        for lam in (0.5, 2., 3.):
            scaled = sub[small] * lam
            integral = np.all(np.abs(scaled - np.rint(scaled)) < 1e-9, axis=1)
            src = np.flatnonzero(small)[integral]
            dst = np.ravel_multi_index(
                    (np.rint(scaled[integral]).astype(int) + center).T,
                    lattice.shape,
            )
            diff = np.abs(values[dst]**2 - lam**2 * values[src]**2)
            bound = max(1., lam**2) * sq_error + tol
            if diff.size:
                margins.append(float(np.min(bound - diff)))

        pair_a = rng.integers(pts.shape[0], size=200)
        pair_b = rng.integers(pts.shape[0], size=200)
        sums = pts[pair_a] + pts[pair_b]
        ok = lattice.contains(sums)
        index, _ = lattice.snap(sums[ok])
        excess = values[index] - values[pair_a[ok]] - values[pair_b[ok]]
        if excess.size:
            margins.append(float(np.min(np.sqrt(sq_error) + tol - excess)))

        margin = min(margins)
        worst = min(worst, margin)
        if margin < 0:
            failures += 1
            if counterexample is None:
                counterexample = {
                        "instance": i,
                        "dim": dim,
                        "b_g": b_g.tolist(),
                        "b_h": b_h.tolist(),
                        "margin": margin,
                }

    return _report("seminorm", instances, failures, worst, counterexample)


def suite_data_term(instances=100, seed=0, kappa=0.1, radius=0.2, eta=None,
                    samples=50):
    """Data term growth for A(x) = M x + κ sin(x) and l = 1/2 |.|^2
    (γ = 1). With β = κ r / σ_min(A'(x̂)) and |n|^2 <= δ, checks

        J(x) - J(x̂) >= <J'(x̂), h> - δ/η
            + ((γ - η β^2)/2) |A'(x̂) h|^2

    at sampled points of the box |h|_inf <= r.

    Returns
    --------
    report: SuiteReport
    """
    if eta is None:
        eta = settings.ETA
    rng = np.random.default_rng(seed)
    failures = 0
    worst = np.inf
    counterexample = None
    gamma = 1.

    for i in range(int(instances)):
        dim = int(rng.integers(2, 4))
        matrix = np.eye(dim) + 0.3 * rng.standard_normal((dim, dim))
        x_hat = rng.uniform(-1., 1., size=dim)
        delta = rng.uniform(0.01, 0.1)
        noise = rng.standard_normal(dim)
        noise *= np.sqrt(delta) / np.linalg.norm(noise)

        def forward(x):
            return matrix @ x + kappa * np.sin(x)

        jac = matrix + kappa * np.diag(np.cos(x_hat))
        sigma_min = np.linalg.svd(jac, compute_uv=False)[-1]
        beta = kappa * radius / sigma_min
        b = forward(x_hat) + noise

        def j(x):
            r = forward(x) - b
            return 0.5 * float(r @ r)

        j_grad = jac.T @ (forward(x_hat) - b)
        h = rng.uniform(-radius, radius, size=(samples, dim))
        lhs = np.array([j(x_hat + hk) for hk in h]) - j(x_hat)
        jh = h @ jac.T
        rhs = (
                h @ j_grad - delta / eta
                + 0.5 * (gamma - eta * beta**2) * np.sum(jh * jh, axis=1)
        )
        margin = float(np.min(lhs - rhs))
        worst = min(worst, margin)
        if margin < -settings.TOLERANCE:
            failures += 1
            if counterexample is None:
                counterexample = {
                        "instance": i,
                        "dim": dim,
                        "beta": float(beta),
                        "delta": float(delta),
                        "margin": margin,
                }

    return _report("data_term", instances, failures, worst, counterexample)
