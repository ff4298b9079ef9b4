"""dynreg/dynreg/_base.py.

Useful base class for dynreg. Logging is nicely wrapped here.
"""

import abc

from dynreg.utils import log


class DynregBase(abc.ABC):
    """Base class for dynreg, where logging is nicely wrapped.

    Since attributes are predefined with __slots__, subclasses list what
    they store. Values that are expensive to compute are kept in a
    `_computed` dict, see `helpers.data.computed`.
    """

    __slots__ = []

    def _logd(self, *log_):
        """Debug logger wrapper.

        Parameters
        -----------
        *log_: *str

        Returns
        --------
        None
        """
        log.debug(type(self).__qualname__, "-", *log_)

    def _logi(self, *log_):
        """Info logger wrapper.

        Parameters
        -----------
        *log_: *str

        Returns
        --------
        None
        """
        log.info(type(self).__qualname__, "-", *log_)

    def _logw(self, *log_):
        """Warning logger wrapper.

        Parameters
        -----------
        *log_: *str

        Returns
        --------
        None
        """
        log.warning(type(self).__qualname__, "-", *log_)
