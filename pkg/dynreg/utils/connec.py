"""dynreg/dynreg/utils/connec.py.

Connectivity helpers for triangle meshes. Named connec because
connectivity is too long.
"""

import numpy as np

from dynreg import settings
from dynreg.utils import arr


def faces_to_edges(faces):
    """Compute edges based on following edge scheme.

    .. code-block::

        Ref: (node_ind), edge_ind

             (0)
             /\
          2 /  \1
           /____\
        (1)  0   (2)

        edge_ind | node_ind
        ---------|----------
        0        | 1 2
        1        | 2 0
        2        | 0 1

    Edge `i` is the one opposite to node `i`, which is what the P1
    gradient formula expects.

    Parameters
    -----------
    faces: (n, 3) np.ndarray

    Returns
    --------
    edges: (n * 3, 2) np.ndarray
    """
    faces = arr.make_c_contiguous(faces, settings.INT_DTYPE)

    if faces.ndim != 2 or faces.shape[1] != 3:
        raise ValueError("Given faces are not `tri` faces")

    epf = 3  # edges per face
    edges = np.ones((faces.shape[0] * epf, 2), dtype=settings.INT_DTYPE) * -1
    edges[::epf] = faces[:, [1, 2]]
    edges[1::epf] = faces[:, [2, 0]]
    edges[2::epf] = faces[:, [0, 1]]

    if (edges == -1).any():
        raise ValueError("There was an error while computing edges.")

    return edges


def boundary_edges(faces):
    """Edges referenced by exactly one face. Orientation is kept from the
    face, so boundary edges of counter-clockwise faces run
    counter-clockwise around the domain.

    Parameters
    -----------
    faces: (n, 3) np.ndarray

    Returns
    --------
    boundary_edges: (m, 2) np.ndarray
    """
    edges = faces_to_edges(faces)
    _, ids, _, counts = arr.unique_rows(np.sort(edges, axis=1))

    return edges[np.sort(ids[counts == 1])]


def chain_to_edges(chain):
    """Consecutive node pairs of an open node chain.

    Parameters
    -----------
    chain: (k,) array-like

    Returns
    --------
    edges: (k - 1, 2) np.ndarray
    """
    chain = arr.make_c_contiguous(chain, settings.INT_DTYPE).ravel()
    if chain.size < 2:
        raise ValueError("a node chain needs at least two nodes")

    return np.column_stack((chain[:-1], chain[1:]))
