from dynreg import _version
from dynreg import settings
from dynreg import core
from dynreg import convex_oracle
from dynreg import forward_linear
from dynreg import mesh
from dynreg import forward_eit
from dynreg import regularisers
from dynreg import online_solver
from dynreg import batch_oracle
from dynreg import diagnostics
from dynreg import config
from dynreg import harness
from dynreg import utils
from dynreg import create
from dynreg import io
from dynreg import helpers
from dynreg.core import (
        Trajectory,
        NoiseSpec,
        RegSchedule,
        ScenarioSpec,
        MeasurementStream,
        alpha_schedule,
)
from dynreg.convex_oracle import Lattice, GridFunction
from dynreg.forward_linear import LinearFrameOperator, MatrixOperator
from dynreg.mesh import Mesh
from dynreg.forward_eit import CEMSystem, EITFrameModel
from dynreg.regularisers import GridGradient, MeshGradient, RegulariserStack
from dynreg.online_solver import PredictorSpec, run_online
from dynreg.config import RunConfig

__version__ = _version.version

__all__ = [
        "__version__",
        "settings",
        "core",
        "convex_oracle",
        "forward_linear",
        "mesh",
        "forward_eit",
        "regularisers",
        "online_solver",
        "batch_oracle",
        "diagnostics",
        "config",
        "harness",
        "utils",
        "create",
        "io",
        "helpers",
        "Trajectory",
        "NoiseSpec",
        "RegSchedule",
        "ScenarioSpec",
        "MeasurementStream",
        "alpha_schedule",
        "Lattice",
        "GridFunction",
        "LinearFrameOperator",
        "MatrixOperator",
        "Mesh",
        "CEMSystem",
        "EITFrameModel",
        "GridGradient",
        "MeshGradient",
        "RegulariserStack",
        "PredictorSpec",
        "run_online",
        "RunConfig",
]
