"""dynreg/tests/common.py

Common imports/routines needed for testing.
"""

import os
import tempfile
import unittest

import numpy as np

import dynreg

# try to satisfy flake8 F401
__all__ = [
        "unittest",
        "np",
        "dynreg",
        "SEED",
        "GRID",
        "SMALL_FRAMES",
        "SMALL_RAMP",
        "rng",
        "small_spec",
        "small_linear_setup",
        "coarse_mesh",
        "tmp_dir",
        "relative_error",
        "listdir",
        "DATA_DIR",
        "UPDATE_GOLDEN",
]

SEED = 11

# stored reference outputs, rewritten with DYNREG_UPDATE_GOLDEN=1
DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")
UPDATE_GOLDEN = os.environ.get("DYNREG_UPDATE_GOLDEN", "0") == "1"

# reduced linear scenario used by unit tests
GRID = (12, 12)
SMALL_FRAMES = 24
SMALL_RAMP = 16


def rng(seed=SEED):
    return np.random.default_rng(seed)


def small_spec(frames=SMALL_FRAMES, ramp=SMALL_RAMP):
    return dynreg.ScenarioSpec(
            total_frames=frames, ramp_frames=min(ramp, frames)
    )


def small_linear_setup(frames=SMALL_FRAMES, delta=0.05, seed=SEED):
    """Blur operator, regulariser, truth, motion and corrupted stream on the
    reduced grid."""
    operator = dynreg.LinearFrameOperator(GRID)
    regs = dynreg.RegulariserStack(dynreg.GridGradient(GRID))
    truth, motion = dynreg.create.scenario.build_scenario(
            small_spec(frames), grid=GRID
    )
    exact = np.stack([operator.apply(x) for x in truth.frames])
    stream = dynreg.core.generate_noise(
            dynreg.MeasurementStream(exact),
            dynreg.NoiseSpec(delta, seed=seed),
    )

    return operator, regs, truth, motion, stream


def coarse_mesh(rings=3, n_electrodes=8):
    return dynreg.create.mesh.disk(rings=rings, n_electrodes=n_electrodes)


def tmp_dir():
    """Fresh temporary directory, removed with the returned object."""
    return tempfile.TemporaryDirectory(prefix="dynreg_test_")


def relative_error(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def listdir(path):
    return sorted(os.listdir(path))
