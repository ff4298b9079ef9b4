"""dynreg/dynreg/io/csvsink.py.

Fixed schema CSV files. One row per frame for diagnostics runs, and point
value dumps of grid functions for debugging.
"""

import csv

import numpy as np

from dynreg.io.ioutils import abs_fname, check_and_makedirs, fmt_float

RUN_COLUMNS = (
        "frame",
        "delta",
        "alpha",
        "cum_avg_sq_error",
        "bregman",
        "data_fit",
        "reg_value",
        "e_increment",
        "thm_lhs",
        "thm_rhs",
        "holds",
)


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))

    return fmt_float(value)


def export_run(fname, rows):
    """Writes run rows in `RUN_COLUMNS` order, header first.

    Parameters
    -----------
    fname: str
    rows: iterable of dict
      every dict holds all `RUN_COLUMNS` keys.

    Returns
    --------
    None
    """
    fname = abs_fname(fname)
    check_and_makedirs(fname)

    with open(fname, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(RUN_COLUMNS)
        for row in rows:
            missing = [c for c in RUN_COLUMNS if c not in row]
            if missing:
                raise KeyError(f"run row is missing columns {missing}.")
            writer.writerow([_cell(row[c]) for c in RUN_COLUMNS])


def load_run(fname):
    """Reads a run file back.

    Returns
    --------
    columns: dict
      column name -> np.ndarray. `frame` is int, `holds` is bool.
    """
    with open(abs_fname(fname), "r", newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if tuple(header) != RUN_COLUMNS:
            raise ValueError(f"unexpected run header {header}.")
        rows = [r for r in reader if r]

    table = np.asarray(rows, dtype=str).reshape(-1, len(RUN_COLUMNS))
    columns = dict()
    for i, name in enumerate(RUN_COLUMNS):
        if name == "frame":
            columns[name] = table[:, i].astype(int)
        elif name == "holds":
            columns[name] = table[:, i] == "1"
        else:
            columns[name] = table[:, i].astype(float)

    return columns


def export_grid_function(fname, gridfunc):
    """Dumps a GridFunction as `x_0, ..., x_{d-1}, value` rows."""
    fname = abs_fname(fname)
    check_and_makedirs(fname)

    points = gridfunc.lattice.points()
    values = np.ravel(gridfunc.values)
    with open(fname, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow([f"x{i}" for i in range(points.shape[1])] + ["value"])
        for p, v in zip(points, values):
            writer.writerow([fmt_float(c) for c in p] + [fmt_float(v)])
