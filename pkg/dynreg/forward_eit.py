"""dynreg/dynreg/forward_eit.py.

Potential driven Complete Electrode Model on triangle meshes with
piecewise linear conductivity. Electrode potentials U are prescribed per
pattern, the interior potential u solves

    (B1(σ) + B2) u = C U,

and the electrode currents are I = C^T u - D U. B1 is the conductivity
weighted stiffness, B2 and C hold the contact terms 1/ζ_i on the
electrode edges and D = diag(|e_i| / ζ_i).
"""

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from dynreg import settings
from dynreg.core import FrameForwardModel
from dynreg.utils import arr
from dynreg.helpers import raise_if
from dynreg._base import DynregBase


class Conductivity(DynregBase):
    """Nodal conductivity with admissible bounds σ_m <= σ <= σ_M.

    Parameters
    -----------
    values: (n_nodes,) array-like
    lower: float
      Default is `settings.SIGMA_MIN`.
    upper: float
      Default is `settings.SIGMA_MAX`.
    """

    __slots__ = ("values", "lower", "upper")

    def __init__(self, values, lower=None, upper=None):
        self.lower = float(settings.SIGMA_MIN if lower is None else lower)
        self.upper = float(settings.SIGMA_MAX if upper is None else upper)
        if not 0. < self.lower < self.upper:
            raise ValueError(
                    "conductivity bounds need 0 < lower < upper, got "
                    f"{self.lower} and {self.upper}."
            )

        values = arr.frozen(np.ravel(values))
        if values.min() < self.lower or values.max() > self.upper:
            raise ValueError(
                    f"conductivity leaves [{self.lower}, {self.upper}], "
                    f"range is [{values.min()}, {values.max()}]."
            )
        self.values = values

    @classmethod
    def homogeneous(cls, n_nodes, value=None, **kwargs):
        value = settings.BACKGROUND if value is None else value
        return cls(np.full(int(n_nodes), float(value)), **kwargs)


def measurement_vector(currents):
    """Drops the current at the excited electrode of every pattern. Pattern j
    excites electrode j.

    Parameters
    -----------
    currents: (n_electrodes, n_patterns) array-like

    Returns
    --------
    measurements: ((n_electrodes - 1) * n_patterns,) np.ndarray
      pattern major.
    """
    currents = np.asarray(currents, dtype=settings.FLOAT_DTYPE)
    if currents.ndim != 2:
        raise raise_if.DimensionError(
                f"currents should be 2D, got {currents.ndim}D."
        )
    n_el, n_pat = currents.shape
    if n_pat > n_el:
        raise raise_if.DimensionError(
                f"{n_pat} patterns for {n_el} electrodes. Pattern j should "
                "excite electrode j."
        )

    keep = ~np.eye(n_el, n_pat, dtype=bool)
    return currents.T[keep.T]


def embed_measurements(measurements, n_electrodes, n_patterns=None):
    """Inverse of `measurement_vector` with zeros at the excited entries.

    Parameters
    -----------
    measurements: ((n_electrodes - 1) * n_patterns,) array-like
    n_electrodes: int
    n_patterns: int
      Default is n_electrodes.

    Returns
    --------
    currents: (n_electrodes, n_patterns) np.ndarray
    """
    if n_patterns is None:
        n_patterns = n_electrodes
    measurements = np.asarray(measurements, dtype=settings.FLOAT_DTYPE)
    raise_if.dimension_mismatch(
            (n_electrodes - 1) * n_patterns, measurements.size,
            "measurement vector"
    )

    keep = ~np.eye(n_electrodes, n_patterns, dtype=bool)
    full = np.zeros((n_patterns, n_electrodes), dtype=settings.FLOAT_DTYPE)
    full[keep.T] = measurements.ravel()

    return full.T


class CEMSystem(DynregBase):
    """Assembly and direct solves of the CEM on a mesh. The last
    factorisation and its potentials are kept, so the forward and the
    adjoint solve of one frame share a single factorisation.

    Parameters
    -----------
    mesh: Mesh
    contact_impedance: float or (n_electrodes,) array-like
      Default is `settings.CONTACT_IMPEDANCE`.
    patterns: (n_electrodes, n_patterns) array-like
      electrode potentials per pattern. Default is the identity, one
      active electrode per pattern with the rest grounded.

    Attributes
    -----------
    n_factorisations: int
    n_forward_solves: int
    n_adjoint_solves: int
    n_tangent_solves: int
    """

    __slots__ = (
            "mesh",
            "contact_impedance",
            "patterns",
            "_b2",
            "_c",
            "_d",
            "_stiff_rows",
            "_stiff_cols",
            "_stiff_local",
            "_cached_sigma",
            "_cached_lu",
            "_cached_potentials",
            "n_factorisations",
            "n_forward_solves",
            "n_adjoint_solves",
            "n_tangent_solves",
    )

    def __init__(self, mesh, contact_impedance=None, patterns=None):
        self.mesh = mesh
        n_el = mesh.n_electrodes

        if contact_impedance is None:
            contact_impedance = settings.CONTACT_IMPEDANCE
        zeta = np.broadcast_to(
                np.asarray(contact_impedance, dtype=settings.FLOAT_DTYPE),
                (n_el, ),
        )
        raise_if.not_positive(zeta, "contact impedance")
        self.contact_impedance = arr.frozen(zeta)

        if patterns is None:
            patterns = np.eye(n_el)
        patterns = np.asarray(patterns, dtype=settings.FLOAT_DTYPE)
        if patterns.ndim != 2 or patterns.shape[0] != n_el:
            raise raise_if.DimensionError(
                    f"patterns should be ({n_el}, n_patterns), got "
                    f"{patterns.shape}."
            )
        self.patterns = arr.frozen(patterns)

        self._assemble_electrode_terms()
        self._prepare_stiffness_pattern()

        self._cached_sigma = None
        self._cached_lu = None
        self._cached_potentials = None
        self.reset_counters()

    @property
    def n_electrodes(self):
        return self.mesh.n_electrodes

    @property
    def n_patterns(self):
        return self.patterns.shape[1]

    @property
    def electrode_matrix(self):
        """B2, (n_nodes, n_nodes) sparse."""
        return self._b2

    @property
    def coupling(self):
        """C, (n_nodes, n_electrodes) sparse."""
        return self._c

    @property
    def contact(self):
        """Diagonal of D, (n_electrodes,)."""
        return self._d

    def reset_counters(self):
        self.n_factorisations = 0
        self.n_forward_solves = 0
        self.n_adjoint_solves = 0
        self.n_tangent_solves = 0

    def _assemble_electrode_terms(self):
        n = self.mesh.n_nodes
        b2_rows, b2_cols, b2_vals = [], [], []
        c_rows, c_cols, c_vals = [], [], []
        d = np.zeros(self.n_electrodes, dtype=settings.FLOAT_DTYPE)

        local = np.array([[2., 1.], [1., 2.]]) / 6.
        for i in range(self.n_electrodes):
            edges = self.mesh.electrode_edges(i)
            lengths = self.mesh.edge_lengths(edges)
            weight = 1. / self.contact_impedance[i]

            b2_rows.append(np.repeat(edges, 2, axis=1).ravel())
            b2_cols.append(np.tile(edges, (1, 2)).ravel())
            b2_vals.append(
                    (weight * lengths[:, None, None] * local).ravel()
            )

            c_rows.append(edges.ravel())
            c_cols.append(np.full(edges.size, i))
            c_vals.append(np.repeat(weight * lengths / 2., 2))

            d[i] = weight * lengths.sum()

        self._b2 = sparse.coo_matrix(
                (
                        np.concatenate(b2_vals),
                        (np.concatenate(b2_rows), np.concatenate(b2_cols)),
                ),
                shape=(n, n),
        ).tocsr()
        self._c = sparse.coo_matrix(
                (
                        np.concatenate(c_vals),
                        (np.concatenate(c_rows), np.concatenate(c_cols)),
                ),
                shape=(n, self.n_electrodes),
        ).tocsr()
        self._d = arr.frozen(d)

    def _prepare_stiffness_pattern(self):
        """Sparsity pattern and σ independent local matrices of B1."""
        tri = np.asarray(self.mesh.triangles)
        grads = np.asarray(self.mesh.gradients())
        areas = np.asarray(self.mesh.areas())

        dim = np.arange(3)
        idx = np.repeat(dim, 3)
        idy = np.tile(dim, 3)
        self._stiff_rows = tri[:, idx].ravel()
        self._stiff_cols = tri[:, idy].ravel()
        # area_t * grad_a . grad_b, (t, 9)
        self._stiff_local = (
                areas[:, None, None] * grads @ np.swapaxes(grads, 1, 2)
        ).reshape(-1, 9)

    def _sigma(self, sigma):
        if isinstance(sigma, Conductivity):
            sigma = sigma.values
        sigma = np.asarray(sigma, dtype=settings.FLOAT_DTYPE).ravel()
        raise_if.dimension_mismatch(
                self.mesh.n_nodes, sigma.size, "conductivity"
        )
        return sigma

    def stiffness(self, sigma):
        """B1(σ) = sum_t mean(σ_t) area_t G_t G_t^T. Linear in σ.

        Parameters
        -----------
        sigma: (n_nodes,) array-like or Conductivity

        Returns
        --------
        b1: (n_nodes, n_nodes) sparse csr matrix
        """
        sigma = self._sigma(sigma)
        tri = np.asarray(self.mesh.triangles)
        tri_sigma = sigma[tri].mean(axis=1)
        n = self.mesh.n_nodes

        b1 = sparse.coo_matrix(
                (
                        (tri_sigma[:, None] * self._stiff_local).ravel(),
                        (self._stiff_rows, self._stiff_cols),
                ),
                shape=(n, n),
        ).tocsr()
        b1.eliminate_zeros()

        return b1.sorted_indices()

    def assemble(self, sigma):
        """System matrix A(σ) = B1(σ) + B2, symmetric positive definite when
        σ > 0 and at least one electrode exists.

        Returns
        --------
        system: (n_nodes, n_nodes) sparse csr matrix
        """
        self._logd("assembling")
        return (self.stiffness(sigma) + self._b2).tocsr()

    def _factorised(self, sigma):
        """(splu, potentials) at σ. Potentials are Φ = A^{-1} C U."""
        if (
                self._cached_sigma is not None
                and np.array_equal(self._cached_sigma, sigma)
        ):
            return self._cached_lu, self._cached_potentials

        system = self.assemble(sigma)
        try:
            lu = splinalg.splu(system.tocsc())
        except RuntimeError as err:
            raise raise_if.SolverError(
                    f"CEM system factorisation failed: {err}"
            ) from err
        self.n_factorisations += 1
        self._logd("factorised, n_nodes =", system.shape[0])

        rhs = np.asarray(self._c @ self.patterns)
        potentials = lu.solve(rhs)
        if not np.all(np.isfinite(potentials)):
            raise raise_if.SolverError("CEM forward solve is not finite.")
        self.n_forward_solves += 1

        self._cached_sigma = arr.frozen(sigma)
        self._cached_lu = lu
        self._cached_potentials = potentials

        return lu, potentials

    def potentials(self, sigma):
        """Interior potentials, (n_nodes, n_patterns)."""
        return self._factorised(self._sigma(sigma))[1].copy()

    def solve_forward(self, sigma):
        """Electrode currents per pattern.

        Parameters
        -----------
        sigma: (n_nodes,) array-like or Conductivity

        Returns
        --------
        currents: (n_electrodes, n_patterns) np.ndarray
          column j sums to zero.
        """
        _, phi = self._factorised(self._sigma(sigma))
        return np.asarray(self._c.T @ phi) - self._d[:, None] * self.patterns

    def jacobian_apply(self, sigma, h):
        """Directional derivative of the currents,
        dI = C^T du with A du = -B1(h) u.

        Parameters
        -----------
        sigma: (n_nodes,) array-like
        h: (n_nodes,) array-like

        Returns
        --------
        d_currents: (n_electrodes, n_patterns) np.ndarray
        """
        lu, phi = self._factorised(self._sigma(sigma))
        h = self._sigma(h)
        du = -lu.solve(np.asarray(self.stiffness(h) @ phi))
        self.n_tangent_solves += 1

        return np.asarray(self._c.T @ du)

    def jacobian_adjoint_apply(self, sigma, weights):
        """Adjoint state gradient of <weights, I(σ)> with respect to nodal σ.

        With Ψ = A^{-1} C R, the derivative in direction h is
        -sum_j ψ_j^T B1(h) u_j, so every triangle adds
        -area_t sum_j grad ψ_j . grad u_j / 3 to each of its nodes.

        Parameters
        -----------
        sigma: (n_nodes,) array-like
        weights: (n_electrodes, n_patterns) array-like

        Returns
        --------
        gradient: (n_nodes,) np.ndarray
        """
        lu, phi = self._factorised(self._sigma(sigma))
        weights = np.asarray(weights, dtype=settings.FLOAT_DTYPE)
        raise_if.dimension_mismatch(
                (self.n_electrodes, self.n_patterns), weights.shape,
                "current weights"
        )

        n = self.mesh.n_nodes
        if not np.any(weights):
            return np.zeros(n, dtype=settings.FLOAT_DTYPE)

        psi = lu.solve(np.asarray(self._c @ weights))
        self.n_adjoint_solves += 1

        tri = np.asarray(self.mesh.triangles)
        grads = np.asarray(self.mesh.gradients())
        areas = np.asarray(self.mesh.areas())
        # (t, 2, n_patterns) element gradients
        grad_u = np.einsum("tad,tap->tdp", grads, phi[tri])
        grad_psi = np.einsum("tad,tap->tdp", grads, psi[tri])
        q = areas * np.einsum("tdp,tdp->t", grad_u, grad_psi)

        return -np.bincount(
                tri.ravel(), weights=np.repeat(q / 3., 3), minlength=n
        )


class EITFrameModel(FrameForwardModel):
    """Per-frame EIT forward map σ -> measurement vector. The map is the same
    for every frame.

    Parameters
    -----------
    system: CEMSystem
    """

    __slots__ = ("system", )

    def __init__(self, system):
        self.system = system
        if system.n_patterns > system.n_electrodes:
            raise raise_if.DimensionError(
                    "EIT frame model needs at most one pattern per electrode."
            )

    @property
    def in_dim(self):
        return self.system.mesh.n_nodes

    @property
    def out_dim(self):
        return (self.system.n_electrodes - 1) * self.system.n_patterns

    def apply(self, x):
        return measurement_vector(self.system.solve_forward(x))

    def jacobian_apply(self, x, h):
        return measurement_vector(self.system.jacobian_apply(x, h))

    def jacobian_adjoint_apply(self, x, r):
        weights = embed_measurements(
                r, self.system.n_electrodes, self.system.n_patterns
        )
        return self.system.jacobian_adjoint_apply(x, weights)

    adjoint_apply = raise_if.invalid_inherited_attr(
            FrameForwardModel.adjoint_apply,
            __qualname__,
            property_=False,
    )
