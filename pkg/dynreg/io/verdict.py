"""dynreg/dynreg/io/verdict.py.

Verdict file. One line per checked inequality.
"""

import csv

from dynreg.helpers.data import Verdict
from dynreg.io.ioutils import abs_fname, check_and_makedirs, fmt_float

HEADER = ("name", "frames_checked", "violations", "worst_margin")


def export(fname, verdicts):
    """
    Parameters
    -----------
    fname: str
    verdicts: iterable of Verdict

    Returns
    --------
    None
    """
    fname = abs_fname(fname)
    check_and_makedirs(fname)

    with open(fname, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(HEADER)
        for v in verdicts:
            writer.writerow(
                    [
                            v.name,
                            str(int(v.frames_checked)),
                            str(int(v.violations)),
                            fmt_float(v.worst_margin),
                    ]
            )


def load(fname):
    """Returns a list of Verdict."""
    with open(abs_fname(fname), "r", newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if tuple(header) != HEADER:
            raise ValueError(f"unexpected verdict header {header}.")

        return [
                Verdict(r[0], int(r[1]), int(r[2]), float(r[3]))
                for r in reader if r
        ]


def all_pass(verdicts):
    """True if no verdict has violations."""
    return all(int(v.violations) == 0 for v in verdicts)
