"""dynreg/dynreg/mesh.py.

Triangle mesh with boundary electrode arcs. Nodes and triangles are fixed at
construction, geometry that the CEM and the mesh gradient need is computed
on first use and kept.
"""

import numpy as np

from dynreg import settings
from dynreg.helpers import raise_if
from dynreg.helpers.data import computed
from dynreg.utils import arr
from dynreg.utils import connec
from dynreg._base import DynregBase


class Mesh(DynregBase):

    __slots__ = (
            "_nodes",
            "_triangles",
            "_electrodes",
            "_computed",
            "symmetry",
    )

    def __init__(self, nodes, triangles, electrodes, symmetry=None):
        """Mesh. It has nodes, counter-clockwise triangles and electrodes.

        Parameters
        -----------
        nodes: (n, 2) np.ndarray
        triangles: (t, 3) np.ndarray
        electrodes: list of (k,) array-like
          boundary node chain of each electrode arc.
        symmetry: tuple
          (Optional) (node_permutation, electrode_shift) of a rotation
          that maps the mesh onto itself.

        Attributes
        -----------
        n_nodes: int
        n_tri: int
        n_electrodes: int
        """
        arr.is_shape(nodes, (-1, 2), strict=True)
        arr.is_shape(triangles, (-1, 3), strict=True)
        self._computed = dict()
        self._nodes = arr.frozen(nodes, dtype=settings.FLOAT_DTYPE)
        self._triangles = arr.frozen(triangles, dtype=settings.INT_DTYPE)
        self._electrodes = tuple(
                arr.frozen(np.ravel(e), dtype=settings.INT_DTYPE)
                for e in electrodes
        )
        self.symmetry = symmetry
        self.validate()

    @property
    def nodes(self):
        return self._nodes

    @property
    def triangles(self):
        return self._triangles

    @property
    def electrodes(self):
        return self._electrodes

    @property
    def n_nodes(self):
        return self._nodes.shape[0]

    @property
    def n_tri(self):
        return self._triangles.shape[0]

    @property
    def n_electrodes(self):
        return len(self._electrodes)

    @computed
    def areas(self):
        """Signed triangle areas. Positive for counter-clockwise triangles.

        Returns
        --------
        areas: (t,) np.ndarray
        """
        p = np.asarray(self._nodes)[np.asarray(self._triangles)]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]

        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @computed
    def gradients(self):
        """Constant gradients of the three P1 basis functions per triangle.
        Basis function i has gradient rot(p_{i+1} - p_{i+2}) / (2 area).

        Returns
        --------
        gradients: (t, 3, 2) np.ndarray
        """
        p = np.asarray(self._nodes)[np.asarray(self._triangles)]
        two_area = 2. * np.asarray(self.areas())
        grads = np.empty((p.shape[0], 3, 2), dtype=settings.FLOAT_DTYPE)
        for i in range(3):
            a = p[:, (i + 1) % 3]
            b = p[:, (i + 2) % 3]
            grads[:, i, 0] = (a[:, 1] - b[:, 1]) / two_area
            grads[:, i, 1] = (b[:, 0] - a[:, 0]) / two_area

        return grads

    @computed
    def centroids(self):
        return np.asarray(self._nodes)[np.asarray(self._triangles)].mean(
                axis=1
        )

    @computed
    def boundary_edges(self):
        """Counter-clockwise boundary edges.

        Returns
        --------
        boundary_edges: (b, 2) np.ndarray
        """
        return connec.boundary_edges(np.asarray(self._triangles))

    def electrode_edges(self, i):
        """(k - 1, 2) node pairs of electrode i."""
        return connec.chain_to_edges(self._electrodes[i])

    def edge_lengths(self, edges):
        p = np.asarray(self._nodes)
        return np.linalg.norm(p[edges[:, 1]] - p[edges[:, 0]], axis=1)

    def electrode_lengths(self):
        """Arc length of every electrode."""
        return np.array(
                [
                        self.edge_lengths(self.electrode_edges(i)).sum()
                        for i in range(self.n_electrodes)
                ]
        )

    def validate(self):
        """Raises AssemblyError on degenerate or clockwise triangles, empty or
        overlapping electrodes, or electrode edges off the boundary."""
        tri = np.asarray(self._triangles)
        if tri.size and (tri.min() < 0 or tri.max() >= self.n_nodes):
            raise raise_if.AssemblyError(
                    "triangle references a missing node."
            )

        areas = np.asarray(self.areas())
        scale = max(float(np.max(np.abs(areas))), 1.) if areas.size else 1.
        bad = np.flatnonzero(areas <= settings.TOLERANCE * scale)
        if bad.size:
            raise raise_if.AssemblyError(
                    f"triangle {int(bad[0])} is degenerate or not "
                    f"counter-clockwise (area {areas[bad[0]]:.3e})."
            )

        if self.n_electrodes == 0:
            raise raise_if.AssemblyError("mesh has no electrodes.")

        seen = set()
        boundary = {
                tuple(sorted(e)) for e in np.asarray(self.boundary_edges())
        }
        for i, chain in enumerate(self._electrodes):
            if chain.size < 2:
                raise raise_if.AssemblyError(f"electrode {i} is empty.")
            nodes = set(chain.tolist())
            if nodes & seen:
                raise raise_if.AssemblyError(
                        f"electrode {i} overlaps another one."
                )
            seen |= nodes
            for e in self.electrode_edges(i):
                if tuple(sorted(e)) not in boundary:
                    raise raise_if.AssemblyError(
                            f"electrode {i} edge {tuple(e)} is not on the "
                            "boundary."
                    )

    def rotate_nodal(self, values, steps=1):
        """Moves nodal values along the mesh symmetry `steps` times.

        Parameters
        -----------
        values: (n,) or (n, k) np.ndarray
        steps: int

        Returns
        --------
        rotated: np.ndarray
          rotated[perm[n]] = values[n]
        """
        if self.symmetry is None:
            raise ValueError("mesh has no recorded symmetry.")
        perm = np.asarray(self.symmetry[0])
        out = np.asarray(values)
        for _ in range(int(steps)):
            rotated = np.empty_like(out)
            rotated[perm] = out
            out = rotated

        return out
