from dynreg.helpers import data
from dynreg.helpers import raise_if

__all__ = [
        "data",
        "raise_if",
]
