"""dynreg/create/scenario.py.

Ground truth generation. Disappearing inclusions on a pixel grid or a
mesh, the motion metadata the known-flow predictor needs, and a small
degenerate linear instance whose minimum-R solution set is a segment.
"""

from collections import namedtuple

import numpy as np

from dynreg import settings
from dynreg.core import Trajectory
from dynreg.create import vertices
from dynreg.forward_linear import MatrixOperator
from dynreg.regularisers import GridGradient
from dynreg.regularisers import tv_value
from dynreg.utils import arr
from dynreg.utils import log
from dynreg.helpers import raise_if
from dynreg._base import DynregBase


def phantom(spec, p, points):
    """Pixel or nodal values at motion parameter p.

    Parameters
    -----------
    spec: ScenarioSpec
    p: float
    points: (n, 2) np.ndarray

    Returns
    --------
    values: (n,) np.ndarray
    """
    points = np.asarray(points, dtype=settings.FLOAT_DTYPE)
    values = np.full(points.shape[0], spec.background)
    for inclusion in spec.inclusions:
        if not inclusion.present(p):
            continue
        dist = np.linalg.norm(points - inclusion.center(p), axis=1)
        values[dist <= inclusion.radius] = spec.contrast

    return values


class MotionMetadata(DynregBase):
    """Exact inclusion motion between consecutive frames, sampled at the
    sites of the reconstruction (pixel centers or mesh nodes).

    Parameters
    -----------
    spec: ScenarioSpec
    points: (n, 2) np.ndarray
    shape: tuple
      (Optional) pixel grid shape. None on meshes.
    """

    __slots__ = ("spec", "points", "shape")

    def __init__(self, spec, points, shape=None):
        self.spec = spec
        self.points = np.asarray(points, dtype=settings.FLOAT_DTYPE)
        self.shape = shape

    def centers(self, k):
        """Inclusion centers at frame k, None for absent inclusions."""
        p = self.spec.motion_parameter(k)
        return [
                inc.center(p) if inc.present(p) else None
                for inc in self.spec.inclusions
        ]

    def displacement(self, k):
        """Displacement field of the transition k -> k + 1 on the sites.
        Sites within two inclusion radii of an inclusion's new center move
        with that inclusion. Everything else is still.

        Parameters
        -----------
        k: int

        Returns
        --------
        displacement: (n, 2) np.ndarray
        """
        p0 = self.spec.motion_parameter(k)
        p1 = self.spec.motion_parameter(k + 1)
        field = np.zeros_like(self.points)
        for inc in self.spec.inclusions:
            if not inc.present(p1):
                continue
            new = inc.center(p1)
            near = np.linalg.norm(self.points - new, axis=1) <= 2. * inc.radius
            field[near] = new - inc.center(p0)

        return field


def build_scenario(spec, grid=None, mesh=None):
    """Ground truth frames x̂_0, ..., x̂_N of the disappearing inclusions
    scenario and their motion metadata. Give either a grid or a mesh.

    Parameters
    -----------
    spec: ScenarioSpec
    grid: tuple
      (n_y, n_x) pixel grid on [-1, 1]^2.
    mesh: Mesh
      nodal values on a mesh of the unit disk.

    Returns
    --------
    truth: Trajectory
    motion: MotionMetadata
    """
    if (grid is None) == (mesh is None):
        raise ValueError("build_scenario needs exactly one of grid or mesh.")

    if grid is not None:
        points = vertices.pixel_centers(grid)
        shape = tuple(int(g) for g in grid)
    else:
        points = np.asarray(mesh.nodes)
        shape = None

    for inc in spec.inclusions:
        reach = np.linalg.norm(inc.path_center) + inc.path_radius + inc.radius
        if reach > 1. + settings.TOLERANCE:
            raise ValueError(
                    "inclusion path leaves the unit domain "
                    f"(reach {reach:.3f})."
            )

    frames = list()
    last_p = None
    for k in range(spec.total_frames):
        p = spec.motion_parameter(k)
        if p == last_p:
            frames.append(frames[-1])
        else:
            frames.append(arr.frozen(phantom(spec, p, points)))
        last_p = p

    log.debug(
            "build_scenario -", spec.total_frames, "frames on",
            points.shape[0], "sites"
    )

    return (
            Trajectory(frames, frame_dim=points.shape[0]),
            MotionMetadata(spec, points, shape),
    )


def presence_events(spec):
    """Frames where an inclusion disappears or reappears.

    Parameters
    -----------
    spec: ScenarioSpec

    Returns
    --------
    events: list
      (frame, inclusion index, "disappear" or "reappear")
    """
    events = list()
    start = spec.motion_parameter(0)
    present = [inc.present(start) for inc in spec.inclusions]
    for k in range(1, spec.total_frames):
        p = spec.motion_parameter(k)
        for i, inc in enumerate(spec.inclusions):
            now = inc.present(p)
            if now != present[i]:
                events.append((k, i, "reappear" if now else "disappear"))
                present[i] = now

    return events


ChainInstance = namedtuple(
        "ChainInstance", ["operator", "gradient", "truth", "pair"]
)
"""
namedtuple for a 1 x n chain whose measurement merges pixels `pair` and
`pair + 1` into their sum. Moving mass between the two merged pixels is
invisible to the operator, so minimum-R solutions form a segment.

Attributes
-----------
operator: MatrixOperator
gradient: GridGradient
truth: (n,) np.ndarray
pair: int
"""


def degenerate_chain(n=8, pair=None, low=0., high=1.):
    """Chain instance with a one dimensional operator null space.

    Parameters
    -----------
    n: int
      number of pixels, at least 4.
    pair: int
      first merged pixel. Default is the middle of the chain.
    low: float
    high: float
      truth is linspace(low, high, n), strictly increasing.

    Returns
    --------
    instance: ChainInstance
    """
    n = int(n)
    if n < 4:
        raise ValueError(f"chain needs at least 4 pixels, got {n}.")
    if pair is None:
        pair = n // 2 - 1
    if not 1 <= pair <= n - 3:
        raise ValueError(
                "merged pair should leave a neighbour on both sides, "
                f"got {pair}"
        )
    if not low < high:
        raise ValueError("chain truth needs low < high.")

    matrix = np.delete(np.eye(n), pair + 1, axis=0)
    matrix[pair, pair + 1] = 1.

    return ChainInstance(
            operator=MatrixOperator(matrix),
            gradient=GridGradient((1, n)),
            truth=np.linspace(low, high, n),
            pair=int(pair),
    )


def null_direction(instance):
    """Unit vector spanning the operator null space of a chain instance."""
    direction = np.zeros(instance.truth.size)
    direction[instance.pair] = 1.
    direction[instance.pair + 1] = -1.

    return direction / np.sqrt(2.)


def chain_solution_set(instance, n_samples=401, tolerance=None):
    """Brute-forced minimum-R solutions of A x = A x̂ on a chain instance.
    Samples the null space line and keeps the samples whose total variation
    is minimal.

    Parameters
    -----------
    instance: ChainInstance
    n_samples: int
    tolerance: float
      Default is `settings.CONSTRAINT_TOLERANCE`.

    Returns
    --------
    solutions: (s, n) np.ndarray
    """
    if tolerance is None:
        tolerance = settings.CONSTRAINT_TOLERANCE

    truth = instance.truth
    direction = null_direction(instance)
    # the minimal set lies between the outer neighbours of the merged pair
    span = truth[instance.pair + 2] - truth[instance.pair - 1]
    steps = np.linspace(-span, span, int(n_samples))
    candidates = truth[None, :] + steps[:, None] * direction[None, :]
    values = np.array([tv_value(instance.gradient, c) for c in candidates])
    keep = values <= values.min() + tolerance
    if not np.any(keep):
        raise raise_if.ProperError("solution set sampling found nothing.")

    return candidates[keep]
