"""dynreg/dynreg/io/__init__.py.

io.
I - `load`.
O - `export`.
"""

from dynreg.io import csvsink
from dynreg.io import ioutils
from dynreg.io import meshtxt
from dynreg.io import svg
from dynreg.io import verdict

__all__ = [
        "csvsink",
        "ioutils",
        "meshtxt",
        "svg",
        "verdict",
]
