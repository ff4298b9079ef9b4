"""dynreg/create/vertices.py.

Routines to create point sets on the imaging domain.
"""

import numpy as np

from dynreg import settings


def pixel_centers(shape):
    """Centers of a (n_y, n_x) pixel grid covering [-1, 1]^2, in C order of
    the pixels. Row index grows with y, column index with x.

    Parameters
    -----------
    shape: tuple
      (n_y, n_x)

    Returns
    --------
    centers: (n_y * n_x, 2) np.ndarray
      (x, y) per pixel.
    """
    n_y, n_x = (int(s) for s in shape)
    if n_y < 1 or n_x < 1:
        raise ValueError(f"pixel grid should be nonempty, got {shape}.")

    x = -1. + (2. * np.arange(n_x) + 1.) / n_x
    y = -1. + (2. * np.arange(n_y) + 1.) / n_y
    yy, xx = np.meshgrid(y, x, indexing="ij")

    return np.column_stack((xx.ravel(), yy.ravel())).astype(
            settings.FLOAT_DTYPE
    )


def pixel_size(shape):
    """(h_y, h_x) pixel extents on [-1, 1]^2."""
    return 2. / int(shape[0]), 2. / int(shape[1])
