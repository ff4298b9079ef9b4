from dynreg.create import mesh
from dynreg.create import scenario
from dynreg.create import vertices

__all__ = [
        "mesh",
        "scenario",
        "vertices",
]
