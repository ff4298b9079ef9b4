"""dynreg/dynreg/cli.py.

Command line front-end. `dynreg <command> [options]`, see `dynreg -h`.
Exit code is 0 only if every enabled check passes, 1 if a check fails
and 2 on errors.
"""

import argparse
import os
import sys

from dynreg import _version
from dynreg import harness
from dynreg.config import MODES
from dynreg.config import RunConfig
from dynreg.config import read_document
from dynreg.helpers import raise_if
from dynreg.io import verdict as verdict_io
from dynreg.utils import log

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_ERROR = 2

COMMANDS = (
        "simulate",
        "solve-online",
        "solve-batch",
        "diagnose",
        "verify-lemmas",
        "reproduce",
)

# alternative names of a command
ALIASES = {"reproduce": ["reproduce-fig2"]}


def _add_run_options(parser):
    parser.add_argument(
            "--config",
            help="JSON run configuration. Flags override its values.",
    )
    parser.add_argument("--mode", choices=MODES, help="forward model")
    parser.add_argument("--frames", type=int, help="number of frames N + 1")
    parser.add_argument(
            "--noise",
            type=float,
            action="append",
            help="noise level δ, repeat for several levels",
    )
    parser.add_argument("--seed", type=int, help="random seed")
    parser.add_argument("--out", help="output directory")


def _add_common_options(parser):
    parser.add_argument(
            "--debug", action="store_true", help="debug logging"
    )
    parser.add_argument("--logfile", help="also log to this file")


def build_parser():
    parser = argparse.ArgumentParser(
            prog="dynreg",
            description="Online dynamic regularisation experiments.",
    )
    parser.add_argument(
            "--version", action="version", version=_version.version
    )
    commands = parser.add_subparsers(dest="command", required=True)

    helps = {
            "simulate": "write ground truth and data to data.npz",
            "solve-online": "online reconstruction of data.npz",
            "solve-batch": "batch minimisers and minimum-R reference",
            "diagnose": "run CSVs and verdict from saved arrays",
            "verify-lemmas": "convex analysis lemma suites",
            "reproduce": "full experiment with plot and verdict",
    }
    for name in COMMANDS:
        sub = commands.add_parser(
                name, help=helps[name], aliases=ALIASES.get(name, [])
        )
        _add_common_options(sub)
        if name == "verify-lemmas":
            sub.add_argument("--seed", type=int, default=0)
            sub.add_argument("--out", help="output directory")
            sub.add_argument("--instances", type=int, default=100)
            sub.add_argument(
                    "--inject-nonconvex",
                    action="store_true",
                    help="use a nonconvex g in the conjugate sum suite",
            )
            continue

        _add_run_options(sub)
        if name in ("solve-online", "solve-batch", "diagnose"):
            sub.add_argument(
                    "--data", help="data file, default <out>/data.npz"
            )
        if name == "diagnose":
            sub.add_argument(
                    "--online", help="trajectories, default <out>/online.npz"
            )

    return parser


def config_from_args(args):
    """RunConfig from --config, overridden by flags."""
    document = dict()
    if args.config is not None:
        document = read_document(args.config)
    flags = dict(
            mode=args.mode,
            frames=args.frames,
            deltas=args.noise,
            seed=args.seed,
            out=args.out,
    )
    document.update({k: v for k, v in flags.items() if v is not None})

    return RunConfig.from_dict(document)


def _verdict_exit(verdicts):
    return EXIT_PASS if verdict_io.all_pass(verdicts) else EXIT_FAIL


def _run(args):
    if args.command == "verify-lemmas":
        reports = harness.verify_lemmas(
                instances=args.instances,
                seed=args.seed,
                inject_nonconvex=args.inject_nonconvex,
                out=args.out,
        )
        for r in reports:
            state = "pass" if r.failures == 0 else "FAIL"
            print(
                    f"{r.name:20s} {state:4s} {r.failures}/{r.instances} "
                    f"worst margin {r.worst_margin:.3e}"
            )
        return _verdict_exit([harness.lemma_verdict(r) for r in reports])

    config = config_from_args(args)
    data = getattr(args, "data", None) or os.path.join(
            config.out, "data.npz"
    )

    if args.command == "simulate":
        print(harness.simulate(config))
        return EXIT_PASS

    if args.command == "solve-online":
        print(harness.solve_online(config, data))
        return EXIT_PASS

    if args.command == "solve-batch":
        print(harness.solve_batch_levels(config, data))
        return EXIT_PASS

    if args.command == "diagnose":
        online = args.online or os.path.join(config.out, "online.npz")
        return _verdict_exit(harness.diagnose(config, data, online))

    result = harness.run_experiment(config)
    for v in result.verdicts:
        print(
                f"{v.name:36s} {v.violations}/{v.frames_checked} "
                f"worst margin {v.worst_margin:.3e}"
        )

    return EXIT_PASS if result.passed else EXIT_FAIL


def main(argv=None):
    """Entry point of the `dynreg` console script.

    Parameters
    -----------
    argv: list
      Default is sys.argv[1:].

    Returns
    --------
    exit_code: int
    """
    args = build_parser().parse_args(argv)
    log.configure(debug=args.debug, logfile=args.logfile)

    try:
        return _run(args)
    except raise_if.ExperimentError as err:
        log.warning(
                "dynreg -", args.command, "failed at δ =", err.delta,
                "frame", err.frame, ":", err
        )
    except (ValueError, OSError, RuntimeError, NotImplementedError) as err:
        log.warning("dynreg -", args.command, "failed:", err)

    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
