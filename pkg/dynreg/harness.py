"""dynreg/dynreg/harness.py.

Experiment orchestration. Builds the scenario and data, runs the online
solver per noise level, evaluates the diagnostics and writes run CSVs, the
verdict file and the error plot. Noise levels run in parallel; frames
within a level run in order.
"""

import csv
import json
from collections import namedtuple
from concurrent import futures

import numpy as np

from dynreg import convex_oracle
from dynreg import diagnostics
from dynreg import settings
from dynreg.batch_oracle import BatchProblem
from dynreg.batch_oracle import compute_e
from dynreg.batch_oracle import min_r_solution
from dynreg.batch_oracle import solve_batch
from dynreg.core import MeasurementStream
from dynreg.core import NoiseSpec
from dynreg.core import Trajectory
from dynreg.core import alpha_schedule
from dynreg.core import generate_noise
from dynreg.create import mesh as create_mesh
from dynreg.create.scenario import build_scenario
from dynreg.create.scenario import chain_solution_set
from dynreg.create.scenario import degenerate_chain
from dynreg.forward_eit import CEMSystem
from dynreg.forward_eit import EITFrameModel
from dynreg.forward_linear import LinearFrameOperator
from dynreg.helpers import raise_if
from dynreg.helpers.data import CheckResult
from dynreg.helpers.data import Verdict
from dynreg.io import csvsink
from dynreg.io import svg
from dynreg.io import verdict as verdict_io
from dynreg.io.ioutils import fmt_float
from dynreg.io.ioutils import out_path
from dynreg.online_solver import run_online
from dynreg.regularisers import BoxConstraint
from dynreg.regularisers import GridGradient
from dynreg.regularisers import MeshGradient
from dynreg.regularisers import RegulariserStack
from dynreg.regularisers import tv_value
from dynreg.utils import log
from dynreg.utils.tictoc import Tic

Experiment = namedtuple(
        "Experiment",
        [
                "config",
                "truth",
                "motion",
                "exact",
                "regs",
                "make_model",
                "reference",
        ],
)
"""
namedtuple of everything shared by the noise levels of one experiment.

Attributes
-----------
config: RunConfig
truth: Trajectory
motion: MotionMetadata
exact: (N + 1, m) np.ndarray
  exact data b̂_k.
regs: RegulariserStack
make_model: callable
  fresh frame model. EIT systems cache factorisations and are not shared
  between threads.
reference: MinRResult
  minimum-R solution, None in EIT mode.
"""

LevelResult = namedtuple(
        "LevelResult",
        [
                "delta",
                "alpha",
                "stream",
                "trajectory",
                "records",
                "rows",
                "verdicts",
                "summary",
        ],
)
"""
namedtuple returned by `run_level`.

Attributes
-----------
delta: float
alpha: float
stream: MeasurementStream
trajectory: Trajectory
records: list of RunFrame
rows: list of DiagnosticsRecord
verdicts: list of Verdict
summary: LevelSummary
  limit quantity inputs, None in EIT mode.
"""

ExperimentResult = namedtuple(
        "ExperimentResult", ["out", "levels", "verdicts", "limits", "passed"]
)
"""
namedtuple returned by `run_experiment`.

Attributes
-----------
out: str
  output directory.
levels: list of LevelResult
  in δ order of the config.
verdicts: list of Verdict
limits: LimitTable
  None if fewer than three linear levels.
passed: bool
  every enabled check holds at every frame.
"""


def _exact_data(model, truth):
    """A(x̂_k) per frame, repeated frames evaluated once."""
    cache = dict()
    rows = list()
    for frame in truth.frames:
        key = frame.tobytes()
        if key not in cache:
            cache[key] = np.asarray(model.apply(frame))
        rows.append(cache[key])

    return np.stack(rows)


def prepare(config):
    """Ground truth, exact data, regulariser and references of a config.

    Parameters
    -----------
    config: RunConfig

    Returns
    --------
    experiment: Experiment
    """
    spec = config.scenario_spec()

    if config.mode == "linear":
        grid = config.grid
        operator = LinearFrameOperator(grid)
        regs = RegulariserStack(GridGradient(grid))
        truth, motion = build_scenario(spec, grid=grid)
        exact = _exact_data(operator, truth)
        reference = min_r_solution(operator, exact, regs)

        def make_model():
            return operator

    else:
        mesh = create_mesh.disk(
                rings=config.scenario.get("rings"),
                n_electrodes=config.scenario.get("n_electrodes"),
        )
        regs = RegulariserStack(
                MeshGradient(mesh),
                BoxConstraint(settings.SIGMA_MIN, settings.SIGMA_MAX),
        )
        impedance = config.scenario.get("contact_impedance")

        def make_model():
            return EITFrameModel(CEMSystem(mesh, impedance))

        truth, motion = build_scenario(spec, mesh=mesh)
        exact = _exact_data(make_model(), truth)
        reference = None

    log.info(
            "prepare -", config.mode, "mode,", truth.horizon + 1, "frames,",
            truth.frame_dim, "unknowns,", exact.shape[1], "measurements"
    )

    return Experiment(
            config=config,
            truth=truth,
            motion=motion,
            exact=exact,
            regs=regs,
            make_model=make_model,
            reference=reference,
    )


def corrupted_stream(experiment, delta, index):
    """Noisy stream of one level. Level `index` has its own seed."""
    config = experiment.config
    exact = MeasurementStream(experiment.exact, precision=config.precision)

    return generate_noise(exact, config.noise_spec(delta, index))


def _noise_check(stream, spec):
    check = diagnostics.check_noise_levels(stream, spec)
    ratio = np.maximum(
            check.first / spec.delta,
            check.second / (spec.c_prime * spec.delta**spec.q),
    )
    ones = np.ones_like(ratio)

    return CheckResult(
            lhs=ratio,
            rhs=ones,
            holds=ratio <= ones + settings.TOLERANCE,
    )


def diagnose_level(experiment, delta, index, stream, trajectory):
    """Diagnostics of one online run.

    Parameters
    -----------
    experiment: Experiment
    delta: float
    index: int
      position of δ in the config.
    stream: MeasurementStream
    trajectory: Trajectory

    Returns
    --------
    rows: list of DiagnosticsRecord
    verdicts: list of Verdict
    summary: LevelSummary
      None in EIT mode.
    """
    config = experiment.config
    alpha = alpha_schedule(delta, config.schedule_obj())
    model = experiment.make_model()
    regs = experiment.regs
    truth = experiment.truth.prefix(trajectory.horizon + 1)
    n = trajectory.horizon + 1
    spec = config.noise_spec(delta, index)

    checks = dict()
    checks["noise_levels"] = _noise_check(stream.prefix(n), spec)

    frames = trajectory.as_array()
    diff = frames - truth.as_array()
    sq_error = np.sum(diff * diff, axis=1)
    cum_error = diagnostics.averaged_sq_error(trajectory, truth)
    reg_values = np.array([tv_value(regs.gradient, x) for x in frames])
    exact, noisy, noise = diagnostics.frame_misfits(model, frames, stream)
    c, checks["quadratic_bound"] = diagnostics.check_quadratic_bound(
            exact, noisy, noise
    )
    margins, checks["linearisation"] = diagnostics.check_linearisation(
            model, frames, truth, stream, config.eta
    )

    nan = np.full(n, np.nan)
    bregman, increments, witness_norm, summary = nan, nan, nan, None
    headline = checks["linearisation"]

    if config.mode == "linear":
        reference = experiment.reference.trajectory.prefix(n)
        subgradients = experiment.reference.subgradients[:n]
        witness = diagnostics.fit_source_witness(
                model, subgradients, stream.precision, delta=delta
        )
        witness_sq = witness.norm_sq
        witness_norm = np.sqrt(witness_sq)
        problem = BatchProblem(
                model, stream.corrupted[:n], alpha, regs, stream.precision
        )
        ledger = compute_e(trajectory, reference, problem)
        increments = ledger.increments
        bregman = diagnostics.frame_bregman(
                regs.gradient, frames, reference, subgradients
        )
        checks["theorem_bregman"] = diagnostics.theorem_bregman_check(
                bregman, ledger.e, witness_sq, delta, alpha, config.eta
        )
        headline = checks["theorem_bregman"]

        r_hat = np.array(
                [tv_value(regs.gradient, x) for x in reference.frames]
        )
        d = diagnostics.boundconst_d(ledger.e, alpha, spec, r_hat)
        (
                checks["bound_misfit"],
                checks["bound_regulariser"],
        ) = diagnostics.bound_consequences(d, alpha, c, exact, reg_values)

        epsilon = diagnostics.growth_epsilon(delta, n, config.eta)
        star = diagnostics.reference_star(
                problem,
                reference,
                witness,
        )
        samples = diagnostics.perturbed_samples(frames, seed=config.seed)
        gamma = diagnostics.realised_growth_factor(
                problem, reference, star, samples, epsilon
        )
        checks["theorem_strong"] = diagnostics.theorem_strong_check(
                sq_error, ledger.e, witness_sq, delta, alpha, gamma, epsilon
        )
        summary = diagnostics.LevelSummary(
                delta=delta,
                alpha=alpha,
                e=ledger.e,
                witness_sq=witness_sq,
                gamma=float(np.min(gamma)),
        )

    rows = [
            diagnostics.DiagnosticsRecord(
                    frame=k,
                    delta=delta,
                    alpha=alpha,
                    cum_avg_sq_error=float(cum_error[k]),
                    bregman=float(bregman[k]),
                    data_fit=float(noisy[k]),
                    reg_value=float(reg_values[k]),
                    e_increment=float(increments[k]),
                    thm_lhs=float(headline.lhs[k]),
                    thm_rhs=float(headline.rhs[k]),
                    holds=bool(headline.holds[k]),
                    noise_energy=float(noise[k]),
                    quadratic_c=float(c[k]),
                    linearisation_margin=float(margins[k]),
                    witness_norm=float(witness_norm[k]),
            ) for k in range(n)
    ]

    verdicts = list()
    for name in config.checks:
        if name not in checks:
            continue
        v = diagnostics.verdict(f"{name}[delta={delta:g}]", checks[name])
        if v.violations:
            log.warning(
                    "diagnose_level -", v.name, "fails on", v.violations,
                    "of", v.frames_checked, "frames"
            )
        verdicts.append(v)

    return rows, verdicts, summary


def semi_strong_level(delta, frames=60, seed=0, eta=None, schedule=None,
                      n=8):
    """Distance to the solution set estimate on the degenerate chain with a
    static truth.

    Returns
    --------
    check: CheckResult
    verdict: Verdict
    """
    if eta is None:
        eta = settings.ETA
    instance = degenerate_chain(n)
    regs = RegulariserStack(instance.gradient)
    truth = Trajectory([instance.truth] * int(frames))
    exact = np.stack([instance.operator.apply(x) for x in truth.frames])
    stream = generate_noise(
            MeasurementStream(exact),
            NoiseSpec(delta, seed=seed),
    )
    alpha = alpha_schedule(delta, schedule)

    trajectory, _ = run_online(
            instance.operator,
            stream,
            regs,
            alpha=alpha,
            label=f"semi_strong[delta={delta:g}]",
    )
    reference = min_r_solution(instance.operator, exact, regs)
    witness = diagnostics.fit_source_witness(
            instance.operator, reference.subgradients, delta=delta
    )
    problem = BatchProblem(instance.operator, stream.corrupted, alpha, regs)
    ledger = compute_e(trajectory, reference.trajectory, problem)

    distance = diagnostics.set_distance(chain_solution_set(instance))
    epsilon = diagnostics.growth_epsilon(delta, truth.horizon + 1, eta)
    star = diagnostics.reference_star(
            problem, reference.trajectory, witness
    )
    samples = diagnostics.perturbed_samples(trajectory, seed=seed)
    gamma = diagnostics.realised_growth_factor(
            problem,
            reference.trajectory,
            star,
            samples,
            epsilon,
            distance=distance,
    )
    sq_distance = np.array([distance(x) for x in trajectory.frames])
    check = diagnostics.semi_strong_check(
            sq_distance, ledger.e, witness.norm_sq, delta, alpha, gamma,
            epsilon
    )

    return check, diagnostics.verdict(f"semi_strong[delta={delta:g}]", check)


def run_level(experiment, delta, index, n_frames=None):
    """Online run and diagnostics of one noise level.

    Parameters
    -----------
    experiment: Experiment
    delta: float
    index: int
    n_frames: int
      Default is every frame.

    Returns
    --------
    result: LevelResult
    """
    config = experiment.config
    timer = Tic(f"run_level[delta={delta:g}]")
    stream = corrupted_stream(experiment, delta, index)
    alpha = alpha_schedule(delta, config.schedule_obj())
    tau, sigma = config.step_sizes()

    try:
        trajectory, records = run_online(
                experiment.make_model(),
                stream,
                experiment.regs,
                alpha=alpha,
                predictor=config.predictor_obj(),
                motion=experiment.motion,
                n_frames=n_frames,
                tau=tau,
                sigma=sigma,
                label=f"delta={delta:g}",
        )
        timer.toc("online")
        rows, verdicts, summary = diagnose_level(
                experiment, delta, index, stream, trajectory
        )
        timer.toc("diagnostics")
    except (
            raise_if.SolverError,
            raise_if.ConvergenceError,
            raise_if.UnsupportedError,
            ValueError,
    ) as err:
        frame = getattr(err, "frame", None)
        raise raise_if.ExperimentError(
                f"level δ={delta:g} failed at frame {frame}: {err}",
                delta=delta,
                frame=frame,
        ) from err

    return LevelResult(
            delta=delta,
            alpha=alpha,
            stream=stream,
            trajectory=trajectory,
            records=records,
            rows=rows,
            verdicts=verdicts,
            summary=summary,
    )


def _run_levels(experiment):
    deltas = experiment.config.deltas
    workers = max(1, min(int(settings.NTHREADS), len(deltas)))
    with futures.ThreadPoolExecutor(max_workers=workers) as pool:
        jobs = [
                pool.submit(run_level, experiment, d, i)
                for i, d in enumerate(deltas)
        ]
        # merged in δ order
        return [job.result() for job in jobs]


def run_csv_name(delta):
    return f"run_delta_{fmt_float(delta)}.csv"


def export_limits(fname, table, terminal):
    """Limit quantities and terminal errors per level."""
    with open(fname, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(("delta", "e1", "e2", "e3", "terminal_error"))
        for i, delta in enumerate(table.deltas):
            writer.writerow(
                    [
                            fmt_float(delta),
                            fmt_float(table.e1[i]),
                            fmt_float(table.e2[i]),
                            fmt_float(table.e3[i]),
                            fmt_float(terminal[float(delta)]),
                    ]
            )


def write_level_outputs(out, levels):
    """Run CSVs and the error plot. Returns the plot path."""
    curves = list()
    for level in levels:
        csvsink.export_run(
                out_path(out, run_csv_name(level.delta)),
                (row._asdict() for row in level.rows),
        )
        curves.append(
                (
                        f"δ = {level.delta:.3f}",
                        [row.frame for row in level.rows],
                        [row.cum_avg_sq_error for row in level.rows],
                )
        )
    fname = out_path(out, "error_curves.svg")
    svg.export(
            fname,
            curves,
            title="cumulative averaged squared error",
            ylabel="error",
    )

    return fname


def terminal_trend(terminal):
    """Verdict on the last-frame averaged error falling strictly as δ
    decreases. The margin of a pair of neighbouring levels is the drop of
    the error, a zero drop counts as a violation.

    Parameters
    -----------
    terminal: dict
      δ -> last-frame cum_avg_sq_error.

    Returns
    --------
    verdict: Verdict
    """
    deltas = sorted(terminal, reverse=True)
    drops = np.array(
            [terminal[a] - terminal[b] for a, b in zip(deltas, deltas[1:])]
    )
    violations = int(np.sum(~(drops > 0.)))
    if violations:
        log.warning(
                "terminal_trend - error does not fall with δ at",
                violations, "of", drops.size, "steps:", terminal
        )

    return Verdict(
            name="terminal_trend",
            frames_checked=int(drops.size),
            violations=violations,
            worst_margin=float(np.min(drops)) if drops.size else np.inf,
    )


def run_experiment(config):
    """Every noise level of a config, with all outputs written to
    `config.out`: config.json, one run CSV per level, verdict.csv,
    error_curves.svg and, for at least three linear levels, limits.csv.

    Parameters
    -----------
    config: RunConfig

    Returns
    --------
    result: ExperimentResult
    """
    timer = Tic("run_experiment")
    out = config.out
    with open(out_path(out, "config.json"), "w") as f:
        f.write(config.dumps() + "\n")

    experiment = prepare(config)
    timer.toc("prepare")
    levels = _run_levels(experiment)
    timer.toc("levels")

    verdicts = [v for level in levels for v in level.verdicts]
    if "semi_strong" in config.checks:
        for delta in config.deltas:
            _, v = semi_strong_level(
                    delta,
                    frames=min(config.frames, 60),
                    seed=config.seed,
                    eta=config.eta,
                    schedule=config.schedule_obj(),
            )
            verdicts.append(v)
        timer.toc("semi strong")

    terminal = {
            level.delta: level.rows[-1].cum_avg_sq_error for level in levels
    }
    if "terminal_trend" in config.checks and len(terminal) > 1:
        verdicts.append(terminal_trend(terminal))

    write_level_outputs(out, levels)
    verdict_io.export(out_path(out, "verdict.csv"), verdicts)

    limits = None
    summaries = [lv.summary for lv in levels if lv.summary is not None]
    if len(summaries) >= 3:
        limits = diagnostics.limit_quantities(summaries, config.eta)
        export_limits(out_path(out, "limits.csv"), limits, terminal)

    passed = verdict_io.all_pass(verdicts)
    log.info("run_experiment -", "pass" if passed else "FAIL", "in", out)
    timer.summary()

    return ExperimentResult(
            out=out,
            levels=levels,
            verdicts=verdicts,
            limits=limits,
            passed=passed,
    )


def verify_lemmas(instances=100, seed=0, inject_nonconvex=False, out=None):
    """Runs every convex analysis lemma suite.

    Parameters
    -----------
    instances: int
      per suite.
    seed: int
    inject_nonconvex: bool
      replaces g in the conjugate sum suite by a nonconvex function.
    out: str
      (Optional) directory for lemmas.csv and counterexamples.json.

    Returns
    --------
    reports: list of SuiteReport
    """
    timer = Tic("verify_lemmas")
    reports = [
            convex_oracle.suite_conjugate_sum(
                    instances, seed, inject_nonconvex=inject_nonconvex
            ),
            convex_oracle.suite_set_formula(instances, seed),
            convex_oracle.suite_subdiff_inclusion(instances, seed),
            convex_oracle.suite_seminorm(instances, seed),
            convex_oracle.suite_data_term(instances, seed),
    ]
    timer.toc("suites")

    for report in reports:
        if report.failures:
            log.warning(
                    "verify_lemmas -", report.name, "counterexample",
                    report.counterexample
            )

    if out is not None:
        verdict_io.export(
                out_path(out, "lemmas.csv"),
                [lemma_verdict(r) for r in reports],
        )
        failing = {
                r.name: r.counterexample for r in reports if r.failures
        }
        with open(out_path(out, "counterexamples.json"), "w") as f:
            json.dump(failing, f, indent=2, sort_keys=True)
            f.write("\n")

    return reports


def lemma_verdict(report):
    """Verdict line of a SuiteReport."""
    return Verdict(
            name=report.name,
            frames_checked=report.instances,
            violations=report.failures,
            worst_margin=report.worst_margin,
    )


def simulate(config):
    """Writes truth, exact and corrupted data of every level to data.npz.

    Returns
    --------
    fname: str
    """
    experiment = prepare(config)
    corrupted = [
            corrupted_stream(experiment, d, i).corrupted
            for i, d in enumerate(config.deltas)
    ]
    fname = out_path(config.out, "data.npz")
    np.savez(
            fname,
            truth=experiment.truth.as_array(),
            exact=experiment.exact,
            corrupted=np.stack(corrupted),
            deltas=np.asarray(config.deltas),
            precision=np.asarray(config.precision),
    )

    return fname


def _load_streams(config, data_fname):
    with np.load(data_fname) as data:
        deltas = tuple(float(d) for d in data["deltas"])
        if deltas != config.deltas:
            raise ValueError(
                    f"data file holds δ {deltas}, config has "
                    f"{config.deltas}."
            )
        exact = np.array(data["exact"])
        corrupted = np.array(data["corrupted"])
        precision = float(data["precision"])

    return [
            MeasurementStream(exact, c, precision) for c in corrupted
    ]


def solve_online(config, data_fname):
    """Online trajectories of every level from a data file, written to
    online.npz.

    Returns
    --------
    fname: str
    """
    experiment = prepare(config)
    streams = _load_streams(config, data_fname)
    tau, sigma = config.step_sizes()
    predictor = config.predictor_obj()

    trajectories = list()
    for delta, stream in zip(config.deltas, streams):
        trajectory, _ = run_online(
                experiment.make_model(),
                stream,
                experiment.regs,
                alpha=alpha_schedule(delta, config.schedule_obj()),
                predictor=predictor,
                motion=experiment.motion,
                tau=tau,
                sigma=sigma,
                label=f"delta={delta:g}",
        )
        trajectories.append(trajectory.as_array())

    fname = out_path(config.out, "online.npz")
    np.savez(
            fname,
            deltas=np.asarray(config.deltas),
            trajectories=np.stack(trajectories),
    )

    return fname


def solve_batch_levels(config, data_fname):
    """Batch minimisers of every level and the minimum-R reference, written
    to batch.npz. Linear mode only.

    Returns
    --------
    fname: str
    """
    if config.mode != "linear":
        raise raise_if.UnsupportedError("batch oracle needs linear mode.")
    experiment = prepare(config)
    streams = _load_streams(config, data_fname)

    batches, objectives = list(), list()
    for delta, stream in zip(config.deltas, streams):
        problem = BatchProblem(
                experiment.make_model(),
                stream.corrupted,
                alpha_schedule(delta, config.schedule_obj()),
                experiment.regs,
                stream.precision,
        )
        result = solve_batch(problem)
        batches.append(result.trajectory.as_array())
        objectives.append(result.objective)

    fname = out_path(config.out, "batch.npz")
    np.savez(
            fname,
            deltas=np.asarray(config.deltas),
            batch=np.stack(batches),
            objectives=np.asarray(objectives),
            reference=experiment.reference.trajectory.as_array(),
            subgradients=experiment.reference.subgradients,
    )

    return fname


def diagnose(config, data_fname, online_fname):
    """Run CSVs, verdict.csv and error_curves.svg from saved arrays.

    Returns
    --------
    verdicts: list of Verdict
    """
    experiment = prepare(config)
    streams = _load_streams(config, data_fname)
    with np.load(online_fname) as online:
        trajectories = np.array(online["trajectories"])

    levels = list()
    for i, (delta, stream) in enumerate(zip(config.deltas, streams)):
        trajectory = Trajectory(list(trajectories[i]))
        rows, verdicts, summary = diagnose_level(
                experiment, delta, i, stream, trajectory
        )
        levels.append(
                LevelResult(
                        delta=delta,
                        alpha=rows[0].alpha,
                        stream=stream,
                        trajectory=trajectory,
                        records=None,
                        rows=rows,
                        verdicts=verdicts,
                        summary=summary,
                )
        )

    verdicts = [v for level in levels for v in level.verdicts]
    terminal = {
            level.delta: level.rows[-1].cum_avg_sq_error for level in levels
    }
    if "terminal_trend" in config.checks and len(terminal) > 1:
        verdicts.append(terminal_trend(terminal))

    write_level_outputs(config.out, levels)
    verdict_io.export(out_path(config.out, "verdict.csv"), verdicts)

    return verdicts
