"""dynreg/create/mesh.py.

Deterministic structured disk meshes with boundary electrodes.
"""

import numpy as np

from dynreg import settings
from dynreg.mesh import Mesh


def _ring_offset(i, n_sectors):
    """Index of the first node of ring i. Ring 0 is the center node."""
    if i == 0:
        return 0
    return 1 + n_sectors * (i - 1) * i // 2


def _zipper(inner, outer):
    """Counter-clockwise triangles between two node runs of one sector.
    Both runs include the node that starts the next sector.

    Parameters
    -----------
    inner: (p + 1,) list
    outer: (q + 1,) list

    Returns
    --------
    triangles: list
    """
    p = len(inner) - 1
    q = len(outer) - 1
    a = b = 0
    triangles = list()
    while a < p or b < q:
        advance_outer = a == p or (b < q and (b + 1) * p <= (a + 1) * q)
        if advance_outer:
            triangles.append((inner[a], outer[b], outer[b + 1]))
            b += 1
        else:
            triangles.append((inner[a], outer[b], inner[a + 1]))
            a += 1

    return triangles


def rotation_permutation(rings, n_electrodes=None):
    """Node permutation of the rotation by one electrode sector. Node m of
    ring i moves to node (m + i) mod (n_electrodes * i).

    Parameters
    -----------
    rings: int
    n_electrodes: int
      Default is `settings.N_ELECTRODES`.

    Returns
    --------
    permutation: (n_nodes,) np.ndarray
    """
    if n_electrodes is None:
        n_electrodes = settings.N_ELECTRODES

    perm = [0]
    for i in range(1, rings + 1):
        size = n_electrodes * i
        start = _ring_offset(i, n_electrodes)
        perm.extend(start + (np.arange(size) + i) % size)

    return np.asarray(perm, dtype=settings.INT_DTYPE)


def disk(
        rings=None,
        n_electrodes=None,
        radius=1.,
        coverage=None,
):
    """Structured ring mesh of a disk. Ring i carries n_electrodes * i
    equally spaced nodes, so every electrode sector is triangulated the same
    way and the mesh maps onto itself under rotation by one sector.

    Each electrode covers the middle `coverage` fraction of its sector's
    boundary nodes.

    Parameters
    -----------
    rings: int
      Default is `settings.EIT_RINGS`.
    n_electrodes: int
      Default is `settings.N_ELECTRODES`.
    radius: float
    coverage: float
      in (0, 1). Default is `settings.ELECTRODE_COVERAGE`.

    Returns
    --------
    mesh: Mesh
    """
    if rings is None:
        rings = settings.EIT_RINGS
    if n_electrodes is None:
        n_electrodes = settings.N_ELECTRODES
    if coverage is None:
        coverage = settings.ELECTRODE_COVERAGE

    rings = int(rings)
    n_electrodes = int(n_electrodes)
    if rings < 2:
        raise ValueError(f"disk needs at least 2 rings, got {rings}.")
    if n_electrodes < 3:
        raise ValueError(
                f"disk needs at least 3 electrodes, got {n_electrodes}."
        )
    if not 0. < coverage < 1.:
        raise ValueError(f"coverage should be in (0, 1), got {coverage}.")

    nodes = [(0., 0.)]
    for i in range(1, rings + 1):
        size = n_electrodes * i
        angles = 2. * np.pi * np.arange(size) / size
        r = radius * i / rings
        nodes.extend(zip(r * np.cos(angles), r * np.sin(angles)))

    def ring_node(i, m):
        if i == 0:
            return 0
        return _ring_offset(i, n_electrodes) + m % (n_electrodes * i)

    triangles = list()
    for i in range(1, rings + 1):
        for s in range(n_electrodes):
            if i == 1:
                inner = [0, 0]
            else:
                inner = [
                        ring_node(i - 1, s * (i - 1) + a) for a in range(i)
                ]
            outer = [ring_node(i, s * i + b) for b in range(i + 1)]
            if i == 1:
                triangles.append((0, outer[0], outer[1]))
            else:
                triangles.extend(_zipper(inner, outer))

    n_edges = min(max(1, int(np.floor(coverage * rings + 0.5))), rings - 1)
    offset = (rings - n_edges) // 2
    electrodes = [
            [
                    ring_node(rings, e * rings + offset + j)
                    for j in range(n_edges + 1)
            ] for e in range(n_electrodes)
    ]

    return Mesh(
            nodes=np.asarray(nodes, dtype=settings.FLOAT_DTYPE),
            triangles=np.asarray(triangles, dtype=settings.INT_DTYPE),
            electrodes=electrodes,
            symmetry=(rotation_permutation(rings, n_electrodes), 1),
    )
