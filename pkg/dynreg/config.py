"""dynreg/dynreg/config.py.

Experiment configuration. A RunConfig is read from a JSON document and
completed with defaults from `dynreg.settings`.
"""

import json

from dynreg import settings
from dynreg.core import NoiseSpec, RegSchedule, ScenarioSpec
from dynreg.helpers import raise_if
from dynreg.io.ioutils import abs_fname
from dynreg.online_solver import PredictorSpec
from dynreg._base import DynregBase

MODES = ("linear", "eit")

CHECKS = (
        "noise_levels",
        "quadratic_bound",
        "linearisation",
        "theorem_bregman",
        "bound_misfit",
        "bound_regulariser",
        "theorem_strong",
        "semi_strong",
        "terminal_trend",
)

_SECTIONS = {
        "noise": ("q", "c_prime"),
        "schedule": ("rule", "value", "table"),
        "scenario": (
                "grid",
                "ramp_frames",
                "radius",
                "contrast",
                "background",
                "rings",
                "n_electrodes",
                "contact_impedance",
                "precision",
        ),
        "predictor": ("primal", "dual"),
        "steps": ("tau", "sigma"),
}

_TOP = (
        "mode",
        "frames",
        "deltas",
        "seed",
        "out",
        "eta",
        "checks",
) + tuple(_SECTIONS)


def _check_keys(given, allowed, where):
    unknown = sorted(set(given) - set(allowed))
    if unknown:
        raise ValueError(
                f"unknown configuration keys {unknown} in {where}. "
                f"Allowed are {sorted(allowed)}."
        )


def read_document(fname):
    """Parsed JSON configuration document."""
    with open(abs_fname(fname), "r") as f:
        document = json.load(f)
    if not isinstance(document, dict):
        raise ValueError(f"{fname} does not hold a JSON object.")

    return document


class RunConfig(DynregBase):
    """Everything one experiment needs.

    Parameters
    -----------
    mode: str
      linear or eit.
    frames: int
      N + 1, number of frames. Default depends on mode.
    deltas: list
      noise levels, all > 0. Default depends on mode.
    seed: int
    out: str
      output directory.
    noise: dict
      q, c_prime.
    schedule: dict
      rule, value, table. See `RegSchedule`.
    scenario: dict
      grid, ramp_frames, radius, contrast, background, rings,
      n_electrodes, contact_impedance, precision.
    predictor: dict
      primal, dual. See `PredictorSpec`.
    steps: dict
      tau, sigma.
    eta: float
    checks: list
      enabled inequality checks. Default is every check of the mode.
    """

    __slots__ = (
            "mode",
            "frames",
            "deltas",
            "seed",
            "out",
            "noise",
            "schedule",
            "scenario",
            "predictor",
            "steps",
            "eta",
            "checks",
    )

    def __init__(
            self,
            mode="linear",
            frames=None,
            deltas=None,
            seed=0,
            out="dynreg_out",
            noise=None,
            schedule=None,
            scenario=None,
            predictor=None,
            steps=None,
            eta=None,
            checks=None,
    ):
        if mode not in MODES:
            raise ValueError(f"unknown mode `{mode}`. Options are {MODES}.")
        self.mode = mode
        linear = mode == "linear"

        if frames is None:
            frames = settings.LINEAR_FRAMES if linear else settings.EIT_FRAMES
        self.frames = int(frames)
        if self.frames < 1:
            raise ValueError(f"frames should be >= 1, got {frames}.")

        if deltas is None:
            deltas = settings.DELTAS if linear else settings.EIT_DELTAS
        self.deltas = tuple(float(d) for d in deltas)
        if len(self.deltas) == 0:
            raise ValueError("at least one noise level is needed.")
        raise_if.not_positive(self.deltas, "noise levels")

        self.seed = int(seed)
        self.out = str(out)

        sections = dict(
                noise=noise,
                schedule=schedule,
                scenario=scenario,
                predictor=predictor,
                steps=steps,
        )
        for name, given in sections.items():
            given = dict() if given is None else dict(given)
            _check_keys(given, _SECTIONS[name], f"`{name}`")
            setattr(self, name, given)

        self.eta = float(settings.ETA if eta is None else eta)
        raise_if.not_positive(self.eta, "eta")

        available = self.available_checks()
        if checks is None:
            checks = available
        unknown = sorted(set(checks) - set(available))
        if unknown:
            raise ValueError(
                    f"checks {unknown} are not available in {mode} mode. "
                    f"Options are {available}."
            )
        self.checks = tuple(checks)

        # fail early on bad values
        self.schedule_obj()
        self.predictor_obj()
        self.scenario_spec()

    @classmethod
    def from_dict(cls, document):
        """RunConfig from a parsed JSON document. Unknown keys raise."""
        if not isinstance(document, dict):
            raise ValueError("configuration document should be an object.")
        _check_keys(document, _TOP, "the top level")

        return cls(**document)

    @classmethod
    def load(cls, fname):
        """RunConfig from a JSON file."""
        return cls.from_dict(read_document(fname))

    def available_checks(self):
        if self.mode == "linear":
            return CHECKS
        # no batch oracle or source witness for EIT
        return ("noise_levels", "linearisation")

    def to_dict(self):
        return {name: getattr(self, name) for name in _TOP}

    def dumps(self):
        """Canonical JSON text, same config gives same bytes."""
        document = self.to_dict()
        document["deltas"] = list(self.deltas)
        document["checks"] = list(self.checks)

        return json.dumps(document, indent=2, sort_keys=True)

    @property
    def ramp_frames(self):
        default = (
                settings.LINEAR_RAMP
                if self.mode == "linear" else settings.EIT_RAMP
        )
        ramp = int(self.scenario.get("ramp_frames", default))

        return min(ramp, self.frames)

    @property
    def grid(self):
        return tuple(self.scenario.get("grid", settings.LINEAR_GRID))

    @property
    def precision(self):
        default = (
                settings.LINEAR_PRECISION
                if self.mode == "linear" else settings.EIT_PRECISION
        )
        return float(self.scenario.get("precision", default))

    def scenario_spec(self):
        return ScenarioSpec(
                total_frames=self.frames,
                ramp_frames=self.ramp_frames,
                background=self.scenario.get("background"),
                contrast=self.scenario.get("contrast"),
                radius=self.scenario.get("radius"),
        )

    def schedule_obj(self):
        return RegSchedule(**self.schedule)

    def predictor_obj(self):
        """PredictorSpec, primal defaults to `settings.PREDICTOR_PRIMAL`."""
        predictor = dict(primal=settings.PREDICTOR_PRIMAL)
        predictor.update(self.predictor)

        return PredictorSpec(**predictor)

    def noise_spec(self, delta, index=0):
        """NoiseSpec of one level. Every level gets its own seed."""
        return NoiseSpec(
                delta,
                q=self.noise.get("q"),
                c_prime=self.noise.get("c_prime"),
                seed=self.seed + 1000 * (index + 1),
        )

    def step_sizes(self):
        """(tau, sigma) with mode defaults."""
        if self.mode == "linear":
            tau, sigma = settings.LINEAR_TAU, settings.LINEAR_SIGMA
        else:
            tau, sigma = settings.EIT_TAU, settings.EIT_SIGMA

        return (
                float(self.steps.get("tau", tau)),
                float(self.steps.get("sigma", sigma)),
        )

    def __repr__(self):
        return (
                f"RunConfig(mode={self.mode!r}, frames={self.frames}, "
                f"deltas={self.deltas}, seed={self.seed})"
        )
