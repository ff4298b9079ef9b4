"""dynreg/dynreg/utils/arr.py.

Useful functions for array / point operations. Named `arr`, since
`array` is python library and it sounds funny.
"""

import numpy as np

from dynreg import settings


def make_c_contiguous(array, dtype=None):
    """Make given array like object a c contiguous np.ndarray. dtype is
    optional. If None is given, just returns None.

    Parameters
    -----------
    array: array-like
    dtype: type or str
      (Optional) `numpy` interpretable type or str, describing type.

    Returns
    --------
    c_contiguous_array: np.ndarray
    """
    if array is None:
        return None

    if isinstance(array, np.ndarray):
        if array.flags.c_contiguous:
            if dtype is not None and array.dtype != dtype:
                return array.astype(dtype)

            return array

    if dtype:
        return np.ascontiguousarray(array, dtype=dtype)

    else:
        return np.ascontiguousarray(array)


def frozen(array, dtype=None):
    """Returns a read-only, c contiguous copy.

    Parameters
    -----------
    array: array-like
    dtype: type or str

    Returns
    --------
    frozen: np.ndarray
    """
    if dtype is None:
        dtype = settings.FLOAT_DTYPE
    out = np.array(array, dtype=dtype, copy=True, order="C")
    out.flags.writeable = False

    return out


def unique_rows(
        in_arr,
        return_index=True,
        return_inverse=True,
        return_counts=True,
        dtype_name=None,
):
    """Find unique rows using np.unique on a byte view of each row. Suitable
    for int types.

    Parameters
    -----------
    in_arr: (n, m) 2D array-like
    return_index: bool
    return_inverse: bool
    return_counts: bool
    dtype_name: str

    Returns
    --------
    unique_arr: (p, q) np.ndarray
    unique_ind: (p,) np.ndarray
    unique_inv: (n,) np.ndarray
    unique_counts: (p,) np.ndarray
    """
    if dtype_name is None:
        dtype_name = settings.INT_DTYPE

    in_arr = make_c_contiguous(in_arr, dtype_name)

    if len(in_arr.shape) != 2:
        raise ValueError("unique_rows can be only applied for 2D arrays")

    in_arr_row_view = in_arr.view(f"|S{in_arr.itemsize * in_arr.shape[1]}")

    unique_stuff = np.unique(
            in_arr_row_view.ravel(),
            return_index=True,
            return_inverse=return_inverse,
            return_counts=return_counts,
    )
    unique_stuff = list(unique_stuff)

    # switch view to original
    unique_stuff[0] = in_arr[unique_stuff[1]]
    if not return_index:
        unique_stuff.pop(1)

    return unique_stuff


def is_shape(arr, shape, strict=False):
    """Checks if arr matches given shape. shape can have negative numbers,
    which match any extent.

    Parameters
    -----------
    arr: np.ndarray
    shape: tuple
    strict: bool
      raises ValueError if shapes do not match

    Returns
    --------
    matches: bool
    """
    arr = np.asanyarray(arr)

    if arr.ndim != len(shape):
        if strict:
            raise ValueError(f"array should be {len(shape)}D, got {arr.ndim}D")
        return False

    for a, s in zip(arr.shape, shape):
        if s < 0:
            continue
        if a != s:
            if strict:
                raise ValueError(
                        f"array should have shape {tuple(shape)}, "
                        f"got {arr.shape}"
                )
            return False

    return True


def pointwise_norm(field):
    """Euclidean norm over the leading axis of a vector field. Gradient
    fields are stored component first, i.e. (2, ...).

    Parameters
    -----------
    field: (c, ...) np.ndarray

    Returns
    --------
    norms: (...) np.ndarray
    """
    field = np.asarray(field)
    return np.sqrt(np.sum(field * field, axis=0))


def running_mean(values):
    """Running mean along the first axis.

    Parameters
    -----------
    values: (n,) array-like

    Returns
    --------
    means: (n,) np.ndarray
    """
    values = np.asarray(values, dtype=settings.FLOAT_DTYPE)
    return np.cumsum(values) / np.arange(1, values.shape[0] + 1)


def is_injective(matrix, tolerance=None):
    """Rank test on a dense matrix.

    Parameters
    -----------
    matrix: (m, n) np.ndarray
    tolerance: float
      relative singular value cut off. Default is 1e-12.

    Returns
    --------
    injective: bool
    """
    if tolerance is None:
        tolerance = 1e-12
    matrix = np.asarray(matrix, dtype=settings.FLOAT_DTYPE)
    if matrix.shape[0] < matrix.shape[1]:
        return False
    singular = np.linalg.svd(matrix, compute_uv=False)
    if singular.size == 0 or singular[0] == 0:
        return False

    return bool(singular[-1] > tolerance * singular[0])
