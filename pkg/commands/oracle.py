from config import ORACLE_MIN_CELLS, ORACLE_MIN_SAMPLES
from services.func_model import lp_integral_on, superlevel_set
from services.measure_core import Interval, IntervalSet, intersect, measure
from services.oracle import grid_measure, mc_integral
from utils.errors import UsageError
from commands.common import build_settings, check_common, finish, numeric_options, parse_deltas, resolve_subject


def _window(args, carrier: Interval) -> Interval:
    if args.window:
        try:
            lo, hi = (float(v) for v in args.window.split(","))
            return Interval(lo, hi)
        except ValueError:
            raise UsageError(f"--window must be 'lo,hi' with lo <= hi, got '{args.window}'")
    if not carrier.is_bounded:
        raise UsageError(f"The carrier {carrier} is unbounded; pass --window lo,hi")
    return Interval.closed(carrier.lo, carrier.hi)


def run_oracle(args):
    """Cross-checks the analytic superlevel measure and integral against the grid and Monte-Carlo oracles."""
    check_common(args)
    settings = build_settings(args)
    opts = numeric_options(settings)
    subject = resolve_subject(args)
    f = subject.function(args.n)
    p = subject.p
    delta = parse_deltas(args.delta)[0]
    window = _window(args, f.domain.carrier)
    region = intersect(IntervalSet.of(window), f.domain.as_set)

    cells = max(args.cells, ORACLE_MIN_CELLS)
    samples = max(args.samples, ORACLE_MIN_SAMPLES)

    exact_set = intersect(superlevel_set(f, delta, opts), region)
    exact_measure = measure(exact_set)
    grid = grid_measure(f, delta, cells, window)
    grid_bound = 2 * max(2 * len(exact_set), 1) * grid.resolution
    tol = opts.report_tol
    grid_ok = abs(grid.value - exact_measure) <= grid_bound + tol

    integral = lp_integral_on(f, p, region, opts)
    mc = mc_integral(f, p, region, samples, args.seed)
    mc_ok = (not integral.is_finite) or abs(integral.value - mc.value) <= integral.err + 3 * mc.stderr + tol

    report = {
        "kind": "oracle",
        "delta": delta,
        "p": p,
        "tolerance": tol,
        "window": window.to_dict(),
        "measure": {"analytic": exact_measure, "grid": grid.value, "resolution": grid.resolution,
                    "cells": grid.cells, "bound": grid_bound, "agrees": grid_ok},
        "integral": {"analytic": integral.to_dict(), "mc": mc.value, "stderr": mc.stderr,
                     "samples": samples, "seed": args.seed, "agrees": mc_ok},
    }
    rows = [
        {"n": 1, "value": grid.value, "err": grid_bound, "verdict_contribution": "ok" if grid_ok else "failed",
         "quantity": "measure", "analytic": exact_measure},
        {"n": 2, "value": mc.value, "err": 3 * mc.stderr, "verdict_contribution": "ok" if mc_ok else "failed",
         "quantity": "integral", "analytic": integral.value},
    ]
    verdict = "ok" if grid_ok and mc_ok else "failed"
    message = (f"μ analytic {exact_measure:.6g} vs grid {grid.value:.6g}; "
               f"∫ analytic {integral} vs MC {mc.value:.6g} ± {mc.stderr:.2g}")
    return finish(args, "oracle", subject.source, verdict, report, rows, settings, message)
