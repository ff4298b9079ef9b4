"""dynreg/dynreg/io/ioutils.py.

Path helpers shared by loaders and exporters.
"""

import os


def abs_fname(fname):
    """Checks if fname is abs. If not, returns abs. Tilde safe.

    Parameters
    -----------
    fname: str

    Returns
    --------
    abs_fname: str
    """
    fname = os.fspath(fname)
    if "~" in fname:
        fname = os.path.expanduser(fname)

    return os.path.abspath(fname)


def check_and_makedirs(fname):
    """Creates the parent directory of fname if it is missing.

    Parameters
    -----------
    fname: str

    Returns
    --------
    None
    """
    dirs = os.path.dirname(fname)
    if dirs and not os.path.isdir(dirs):
        os.makedirs(dirs, exist_ok=True)


def out_path(directory, name):
    """Absolute path of `name` inside `directory`, directory created."""
    fname = abs_fname(os.path.join(directory, name))
    check_and_makedirs(fname)

    return fname


def fmt_float(value):
    """Round trip safe text of a float. Same value gives same bytes."""
    value = float(value)
    if value != value:
        return "nan"
    if value in (float("inf"), float("-inf")):
        return "inf" if value > 0 else "-inf"

    return repr(value)
