import argparse
import sys

import database as db
from config import (
    COMMAND_OPTIONS, DEFAULT_PAIR_BUDGET, DEFAULT_SEED, EXIT_USAGE, GALLERY_IDS, OUTPUT_FORMATS,
)
from utils.errors import ConvlabError, SpecError, UsageError
from utils.logger import configure_logging, get_logger, is_debug

# Import Commands
from commands import convergence, gallery, history, oracle, weak_spaces

logger = get_logger("app")

ROUTES = {
    "check-in-measure": convergence.run_check_in_measure,
    "check-alpha": convergence.run_check_alpha,
    "synth-witness": convergence.run_synth_witness,
    "check-cauchy": convergence.run_check_cauchy,
    "weak-norm": weak_spaces.run_weak_norm,
    "check-weak-conv": weak_spaces.run_check_weak_conv,
    "ap-member": weak_spaces.run_ap_member,
    "embed": weak_spaces.run_embed,
    "gallery": gallery.run_gallery,
    "oracle": oracle.run_oracle,
    "history": history.run_history,
}


class _Parser(argparse.ArgumentParser):
    """argparse reports usage problems through UsageError so they map to exit 64."""

    def error(self, message):
        raise UsageError(message)


def _common_flags():
    common = _Parser(add_help=False)
    src = common.add_argument_group("subject")
    src.add_argument("--spec", help="JSON spec of a function or sequence")
    src.add_argument("--gallery", choices=GALLERY_IDS, help="built-in example")
    src.add_argument("--p", type=float, default=None, help="exponent p >= 1 (default: spec value, or 2)")
    src.add_argument("--n", type=int, default=None, help="sequence index for single-function commands")

    run = common.add_argument_group("run")
    run.add_argument("--delta", default=None, help="δ as a number, comma list, or 'grid'")
    run.add_argument("--horizon", type=int, default=64)
    run.add_argument("--pair-window", type=int, default=None)
    run.add_argument("--pair-budget", type=int, default=DEFAULT_PAIR_BUDGET)
    run.add_argument("--pass-th", type=float, default=None)
    run.add_argument("--fail-th", type=float, default=None)
    run.add_argument("--witness", choices=convergence.WITNESS_MODES, default=None)
    run.add_argument("--mode", choices=["measure", "alpha"], default="measure", help="check-cauchy variant")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--seed", type=int, default=DEFAULT_SEED)
    run.add_argument("--samples", type=int, default=100_000)
    run.add_argument("--cells", type=int, default=100_000)
    run.add_argument("--window", default=None, help="oracle window 'lo,hi'")

    out = common.add_argument_group("output")
    out.add_argument("--out", default=None, help="report path ('-' for stdout)")
    out.add_argument("--format", choices=OUTPUT_FORMATS, default="json")
    out.add_argument("--config", default=None, help="JSON settings file overriding tolerances")
    out.add_argument("--record", action="store_true", help="store the run in the local run registry")
    return common


def build_parser():
    parser = _Parser(prog="convlab", description="Finite-horizon certificates for modes of convergence.")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    common = _common_flags()
    for name in COMMAND_OPTIONS:
        if name == "history":
            hp = sub.add_parser("history", help="list recorded runs")
            hp.add_argument("--show", default=None, help="print the stored report of one run id")
            hp.add_argument("--only", default=None, choices=[c for c in COMMAND_OPTIONS if c != "history"])
            hp.add_argument("--versions", default=None, metavar="SOURCE",
                            help="every recorded version of one source (needs --only)")
            continue
        sub.add_parser(name, parents=[common], help=ROUTES[name].__doc__)
    return parser


def main(argv=None):
    configure_logging()
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "record", False) or args.command == "history":
            db.init_db()
        return ROUTES[args.command](args)
    except SpecError as e:
        print(e.diagnostics(), file=sys.stderr)
        return EXIT_USAGE
    except (ConvlabError, ValueError, OSError) as e:
        if is_debug():
            logger.exception("Run failed")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
