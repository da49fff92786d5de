"""
Shared plumbing for the command handlers: resolving the subject (JSON spec or
gallery item), building numeric settings, and finishing a run (report file,
run registry, one-line verdict).
"""
import math
import sys
from dataclasses import dataclass
from typing import Optional

import config
import database as db
from config import DEFAULT_DELTA_GRID, EXIT_FAIL, EXIT_PASS, EXIT_UNDECIDED
from services import gallery
from services.codec import SpecDocument, load_spec
from services.convergence import HorizonRule, Verdict
from services.func_model import NumericOptions, PiecewiseFunction, instantiate, zero_function
from services.reporting import build_envelope, rows_frame, to_json, validate_report, write_report
from utils.errors import UsageError
from utils.logger import get_logger

logger = get_logger(__name__)

VERDICT_EXIT = {
    Verdict.CONVERGES.value: EXIT_PASS,
    Verdict.FAILS.value: EXIT_FAIL,
    Verdict.INCONCLUSIVE.value: EXIT_UNDECIDED,
    "member": EXIT_PASS,
    "not-member": EXIT_FAIL,
    "unknown": EXIT_UNDECIDED,
    "synthesized": EXIT_PASS,
    "Finite": EXIT_PASS,
    "Infinite": EXIT_FAIL,
    "ok": EXIT_PASS,
    "failed": EXIT_UNDECIDED,
}


def exit_code_for(verdict: str) -> int:
    """Exit status is a function of the verdict label only."""
    return VERDICT_EXIT.get(verdict, EXIT_UNDECIDED)


@dataclass
class Subject:
    """What a command runs on: a sequence (with its limit) or a single function."""
    source: str
    p: float
    doc: Optional[SpecDocument] = None
    item: Optional[gallery.GalleryItem] = None

    @property
    def sequence(self):
        if self.item is not None:
            return self.item.sequence
        return self.doc.sequence

    @property
    def limit(self) -> Optional[PiecewiseFunction]:
        if self.item is not None:
            return self.item.limit() if self.item.is_sequence else None
        return self.doc.limit

    @property
    def witness_template(self):
        return self.doc.witness if self.doc is not None else None

    def function(self, n: Optional[int] = None) -> PiecewiseFunction:
        """The single function to analyse: the function item, or the sequence instance at n."""
        if self.sequence is None:
            return self.item.function if self.item is not None else self.doc.function
        if n is None:
            raise UsageError(f"{self.source} is a sequence; pass --n to pick an instance")
        return instantiate(self.sequence, n)

    def require_sequence(self, command):
        if self.sequence is None:
            raise UsageError(f"'{command}' needs a sequence, but {self.source} is a single function")
        return self.sequence


def resolve_subject(args) -> Subject:
    if bool(args.spec) == bool(args.gallery):
        raise UsageError("Pass exactly one of --spec <path> or --gallery <E1..E4>")
    if args.gallery:
        p = args.p if args.p is not None else 2.0
        item = gallery.build(args.gallery, p)
        return Subject(f"gallery:{args.gallery}", p, item=item)

    doc = load_spec(args.spec)
    p = args.p if args.p is not None else doc.p
    if doc.sequence is not None and p != doc.p:
        doc.sequence = doc.sequence.with_p(p)
    return Subject(args.spec, p, doc=doc)


def parse_deltas(raw, default_grid=False):
    """--delta accepts a number, a comma list, or the word "grid"."""
    if raw is None:
        return list(DEFAULT_DELTA_GRID) if default_grid else [0.5]
    if raw.strip().lower() == "grid":
        return list(DEFAULT_DELTA_GRID)
    try:
        values = [float(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--delta must be a number, a comma list or 'grid', got '{raw}'")
    if not values or any(not (v > 0 and math.isfinite(v)) for v in values):
        raise UsageError(f"--delta values must be positive, got '{raw}'")
    return values


def build_settings(args):
    settings = config.load_settings(args.config)
    if args.pass_th is not None:
        settings["pass_threshold"] = args.pass_th
    if args.fail_th is not None:
        settings["fail_threshold"] = args.fail_th
    if args.pair_window is not None:
        settings["pair_window"] = args.pair_window
    return settings


def numeric_options(settings) -> NumericOptions:
    return NumericOptions(
        quad_tol=settings["quad_tolerance"],
        xtol=settings["bisection_xtol"],
        grid_points=settings["grid_points"],
        max_pieces=settings["max_pieces"],
        report_tol=settings["report_tolerance"],
    )


def horizon_rule(settings) -> HorizonRule:
    return HorizonRule.from_settings(settings)


def check_common(args):
    if args.p is not None and args.p < 1:
        raise UsageError(f"--p must be >= 1, got {args.p}")
    if args.horizon < config.MIN_HORIZON:
        raise UsageError(f"--horizon must be >= {config.MIN_HORIZON}, got {args.horizon}")
    if args.n is not None and args.n < 1:
        raise UsageError(f"--n must be >= 1, got {args.n}")


def finish(args, command, subject_source, verdict, report, rows, settings, message):
    """Writes the report (if --out), records the run (if --record), prints the verdict line."""
    code = exit_code_for(verdict)
    envelope = build_envelope(command, subject_source, verdict, code, report, settings)
    ok, problems = validate_report(envelope)
    if not ok:
        logger.error("Report failed schema validation: %s", "; ".join(problems))

    target = None
    if args.out:
        if args.out == "-":
            sys.stdout.write(rows_frame(rows).to_csv(index=False) if args.format == "csv" else to_json(envelope))
        else:
            target = write_report(envelope, rows, args.out, args.format)

    if args.record:
        saved, run_id = db.save_run(command, subject_source, verdict, code, envelope)
        if saved:
            logger.info("Recorded run %s", run_id)

    line = f"{command} [{subject_source}] {verdict}: {message}"
    if target:
        line += f" -> {target}"
    print(line)
    return code


def zero_limit_for(subject: Subject) -> PiecewiseFunction:
    return subject.limit if subject.limit is not None else zero_function(subject.sequence.domain)
