"""dynreg/dynreg/helpers/data.py.

Compute-once geometry of immutable objects and the small result records
shared across modules.
"""

from functools import wraps
from collections import namedtuple

import numpy as np

from dynreg.utils import arr


def computed(func):
    """Compute-once method. The first call stores a read-only copy of the
    result in the instance's `_computed` dict under the method name, later
    calls return it. Only for objects whose inputs never change.

    Parameters
    -----------
    func: callable
      method without arguments besides self.

    Returns
    --------
    cached: callable
    """
    name = func.__name__

    @wraps(func)
    def cached(self):
        if name not in self._computed:
            self._logd("computing", name)
            value = np.asarray(func(self))
            self._computed[name] = arr.frozen(value, dtype=value.dtype)

        return self._computed[name]

    return cached


CheckResult = namedtuple("CheckResult", ["lhs", "rhs", "holds"])
"""
namedtuple for a single evaluated inequality lhs <= rhs. Entries are
arrays when the check is evaluated at every horizon N.

Attributes
-----------
lhs: float or np.ndarray
rhs: float or np.ndarray
holds: bool or np.ndarray
"""

Verdict = namedtuple(
        "Verdict", ["name", "frames_checked", "violations", "worst_margin"]
)
"""
namedtuple for one line of a verdict file. `worst_margin` is the smallest
rhs - lhs over checked frames, negative exactly when there are violations.

Attributes
-----------
name: str
frames_checked: int
violations: int
worst_margin: float
"""

SuiteReport = namedtuple(
        "SuiteReport",
        ["name", "instances", "failures", "worst_margin", "counterexample"],
)
"""
namedtuple for a seeded random lemma suite.

Attributes
-----------
name: str
instances: int
failures: int
worst_margin: float
counterexample: dict or None
  description of the first failing instance.
"""
