"""dynreg/dynreg/io/meshtxt.py.

io functions for the plain text mesh format. Sections are

.. code-block::

    nodes <n>
    x y                # n lines
    triangles <t>
    i j k              # t lines, zero-based
    electrodes <E>
    i j ...            # E lines, boundary node chain of each electrode

Lines starting with `#` are ignored.
"""

import numpy as np

from dynreg import settings
from dynreg.mesh import Mesh
from dynreg.io.ioutils import abs_fname, check_and_makedirs, fmt_float
from dynreg.utils import log

_SECTIONS = ("nodes", "triangles", "electrodes")


def _read_sections(lines):
    sections = dict()
    it = iter(lines)
    for line in it:
        line = line.strip()
        if not line or line.startswith("#"):
            continue

        head = line.split()
        if len(head) != 2 or head[0] not in _SECTIONS:
            raise ValueError(f"expected a section header, got `{line}`.")
        name, count = head[0], int(head[1])
        if name in sections:
            raise ValueError(f"section `{name}` appears twice.")

        rows = list()
        while len(rows) < count:
            row = next(it, None)
            if row is None:
                raise ValueError(
                        f"section `{name}` ended after {len(rows)} of "
                        f"{count} rows."
                )
            row = row.strip()
            if row and not row.startswith("#"):
                rows.append(row.split())
        sections[name] = rows

    missing = [s for s in _SECTIONS if s not in sections]
    if missing:
        raise ValueError(f"mesh file is missing sections {missing}.")

    return sections


def load(fname):
    """Loads a mesh from the plain text format.

    Parameters
    -----------
    fname: str

    Returns
    --------
    mesh: Mesh
    """
    fname = abs_fname(fname)
    with open(fname, "r") as f:
        sections = _read_sections(f.readlines())

    nodes = np.asarray(sections["nodes"], dtype=settings.FLOAT_DTYPE)
    triangles = np.asarray(sections["triangles"], dtype=settings.INT_DTYPE)
    electrodes = [
            np.asarray(row, dtype=settings.INT_DTYPE)
            for row in sections["electrodes"]
    ]
    log.debug(
            "meshtxt.load -", fname, nodes.shape[0], "nodes",
            triangles.shape[0], "triangles"
    )

    return Mesh(nodes, triangles.reshape(-1, 3), electrodes)


def export(mesh, fname):
    """Exports a mesh to the plain text format.

    Parameters
    -----------
    mesh: Mesh
    fname: str

    Returns
    --------
    None
    """
    fname = abs_fname(fname)
    check_and_makedirs(fname)

    with open(fname, "w") as f:
        f.write("# dynreg mesh\n")
        f.write(f"nodes {mesh.n_nodes}\n")
        for x, y in np.asarray(mesh.nodes):
            f.write(f"{fmt_float(x)} {fmt_float(y)}\n")

        f.write(f"triangles {mesh.n_tri}\n")
        for tri in np.asarray(mesh.triangles):
            f.write(" ".join(str(int(t)) for t in tri) + "\n")

        f.write(f"electrodes {mesh.n_electrodes}\n")
        for chain in mesh.electrodes:
            f.write(" ".join(str(int(n)) for n in chain) + "\n")
