from services.convergence import (
    Verdict, WitnessSequence, check_alpha_p, check_alpha_p_cauchy, check_cauchy_in_measure, check_in_measure,
    combine_verdicts, full_witness, synthesize_cauchy_witness, synthesize_witness,
)
from utils.errors import UsageError
from utils.helpers import format_number
from commands.common import (
    build_settings, check_common, finish, horizon_rule, numeric_options, parse_deltas, resolve_subject,
    zero_limit_for,
)

WITNESS_MODES = ["synth", "full", "spec"]


# ==========================================
# HELPERS
# ==========================================

def _grid_report(kind, reports, rule):
    """One report for a single δ; a wrapper listing every per-δ report otherwise."""
    if len(reports) == 1:
        return reports[0].to_dict(), reports[0].rows(rule)
    rows = []
    for r in reports:
        rows.extend({**row, "delta": r.delta} for row in r.rows(rule))
    verdict = combine_verdicts(*(r.verdict for r in reports))
    return {"kind": kind, "verdict": verdict.value, "reports": [r.to_dict() for r in reports]}, rows


def _measure_message(reports):
    return ", ".join(f"δ={r.delta:g}: a_H={format_number(r.measures[-1], 3)}" for r in reports)


def _resolve_witness(args, subject, seq, f, p, opts, cauchy=False) -> WitnessSequence:
    mode = args.witness
    domain = seq.domain
    if mode is None:
        if subject.witness_template is not None:
            mode = "spec"
        else:
            mode = "synth" if domain.is_finite else "full"

    if mode == "full":
        return full_witness(domain, args.horizon)
    if mode == "spec":
        if subject.witness_template is None:
            raise UsageError(f"--witness spec needs a 'witness' entry in the spec file ({subject.source} has none)")
        return subject.witness_template.realize(domain, p, args.horizon)
    if cauchy:
        return synthesize_cauchy_witness(seq, f, p, args.horizon, opts=opts, workers=args.workers)
    return synthesize_witness(seq, f, p, args.horizon, opts, args.workers)


# ==========================================
# COMMANDS
# ==========================================

def run_check_in_measure(args):
    check_common(args)
    settings = build_settings(args)
    opts, rule = numeric_options(settings), horizon_rule(settings)
    subject = resolve_subject(args)
    seq = subject.require_sequence("check-in-measure")
    f = zero_limit_for(subject)

    reports = [check_in_measure(seq, f, d, args.horizon, rule, opts, args.workers)
               for d in parse_deltas(args.delta)]
    verdict = combine_verdicts(*(r.verdict for r in reports))
    report, rows = _grid_report("in-measure-grid", reports, rule)
    return finish(args, "check-in-measure", subject.source, verdict.value, report, rows, settings,
                  _measure_message(reports))


def run_check_alpha(args):
    check_common(args)
    settings = build_settings(args)
    opts, rule = numeric_options(settings), horizon_rule(settings)
    subject = resolve_subject(args)
    seq = subject.require_sequence("check-alpha")
    f = zero_limit_for(subject)

    witness = _resolve_witness(args, subject, seq, f, subject.p, opts)
    rep = check_alpha_p(seq, f, subject.p, witness, args.horizon, rule, opts, args.workers)
    H = args.horizon
    message = (f"μ(B_H^c)={format_number(witness.complement_measures[H], 3)}, "
               f"∫ at H: {rep.integrals[H]} (complements {rep.complement_verdict.value}, "
               f"integrals {rep.integral_verdict.value})")
    return finish(args, "check-alpha", subject.source, rep.verdict.value, rep.to_dict(), rep.rows(rule),
                  settings, message)


def run_synth_witness(args):
    check_common(args)
    settings = build_settings(args)
    opts, rule = numeric_options(settings), horizon_rule(settings)
    subject = resolve_subject(args)
    seq = subject.require_sequence("synth-witness")
    f = zero_limit_for(subject)

    w = synthesize_witness(seq, f, subject.p, args.horizon, opts, args.workers)
    rows = [
        {"n": k, "value": w.complement_measures[k], "err": 0.0,
         "verdict_contribution": rule.contribution(w.complement_measures[k]), "lambda": w.lambda_schedule[k]}
        for k in sorted(w.sets)
    ]
    report = {"kind": "witness", "p": subject.p, "horizon": args.horizon, **w.to_dict()}
    if w.thresholds:
        verdict = "synthesized"
        message = f"{len(w.thresholds)} levels, N_1={w.thresholds[0]}, truncated at level {w.truncated_at}"
    else:
        verdict = Verdict.INCONCLUSIVE.value
        message = "no level N_1 inside the horizon; convergence in measure is unverified"
    return finish(args, "synth-witness", subject.source, verdict, report, rows, settings, message)


def run_check_cauchy(args):
    check_common(args)
    settings = build_settings(args)
    opts, rule = numeric_options(settings), horizon_rule(settings)
    subject = resolve_subject(args)
    seq = subject.require_sequence("check-cauchy")
    window = settings["pair_window"]

    if args.mode == "alpha":
        f = zero_limit_for(subject)
        witness = _resolve_witness(args, subject, seq, f, subject.p, opts, cauchy=True)
        rep = check_alpha_p_cauchy(seq, subject.p, witness, args.horizon, args.pair_budget, window,
                                   rule, opts, args.workers)
        last = rep.indices[-1]
        message = f"band integral at n={last}: {rep.integrals[last]}"
        return finish(args, "check-cauchy", subject.source, rep.verdict.value, rep.to_dict(), rep.rows(rule),
                      settings, message)

    reports = [check_cauchy_in_measure(seq, d, args.horizon, args.pair_budget, window, rule, opts, args.workers)
               for d in parse_deltas(args.delta)]
    verdict = combine_verdicts(*(r.verdict for r in reports))
    report, rows = _grid_report("cauchy-in-measure-grid", reports, rule)
    return finish(args, "check-cauchy", subject.source, verdict.value, report, rows, settings,
                  _measure_message(reports))
