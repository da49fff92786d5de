from services.weak_spaces import (
    check_ap_membership, check_weak_lp_convergence, weak_lp_quasinorm, weak_to_ap_embedding,
)
from utils.helpers import format_number
from commands.common import (
    build_settings, check_common, finish, horizon_rule, numeric_options, parse_deltas, resolve_subject,
    zero_limit_for,
)


def run_weak_norm(args):
    check_common(args)
    settings = build_settings(args)
    opts, rule = numeric_options(settings), horizon_rule(settings)
    subject = resolve_subject(args)
    f = subject.function(args.n)

    rep = weak_lp_quasinorm(f, subject.p, opts)
    if rep.is_finite:
        where = "attained" if rep.attained else "approached"
        message = f"quasinorm = {rep.value:.10g} ({where} at δ={format_number(rep.maximizer_delta)})"
    else:
        message = f"quasinorm infinite: {rep.reason}"
    return finish(args, "weak-norm", subject.source, rep.tag, rep.to_dict(), rep.rows(rule), settings, message)


def run_check_weak_conv(args):
    check_common(args)
    settings = build_settings(args)
    opts, rule = numeric_options(settings), horizon_rule(settings)
    subject = resolve_subject(args)
    seq = subject.require_sequence("check-weak-conv")
    f = zero_limit_for(subject)

    rep = check_weak_lp_convergence(seq, f, subject.p, args.horizon, rule, opts, args.workers)
    message = f"quasinorm of f_H - f = {format_number(rep.per_n[-1])}"
    return finish(args, "check-weak-conv", subject.source, rep.verdict.value, rep.to_dict(), rep.rows(rule),
                  settings, message)


def run_ap_member(args):
    check_common(args)
    settings = build_settings(args)
    opts, rule = numeric_options(settings), horizon_rule(settings)
    subject = resolve_subject(args)
    f = subject.function(args.n)

    deltas = sorted(set(parse_deltas(args.delta, default_grid=True)), reverse=True)
    cert = check_ap_membership(f, subject.p, deltas, settings["ap_measure_fraction"], opts)
    if cert.obstruction:
        message = f"obstruction: {cert.obstruction}"
    else:
        message = cert.reason
    return finish(args, "ap-member", subject.source, cert.status.value, cert.to_dict(), cert.rows(rule),
                  settings, message)


def run_embed(args):
    check_common(args)
    settings = build_settings(args)
    opts = numeric_options(settings)
    subject = resolve_subject(args)
    f = subject.function(args.n)

    deltas = parse_deltas(args.delta) if args.delta is not None else [0.1]
    results = [weak_to_ap_embedding(f, subject.p, d, opts) for d in deltas]
    rows = [
        {"n": r.K, "value": r.integral.value, "err": r.integral.err,
         "verdict_contribution": "ok" if r.holds else "failed",
         "delta": r.delta, "measure": r.measure, "bound": r.bound}
        for r in results
    ]
    verdict = "ok" if all(r.holds for r in results) else "failed"
    if len(results) == 1:
        report = results[0].to_dict()
    else:
        report = {"kind": "embedding-grid", "results": [r.to_dict() for r in results]}
    message = ", ".join(f"δ={r.delta:g}: K={r.K}, μ(E_δ)={r.measure:.3g}, bound={r.bound:g}" for r in results)
    return finish(args, "embed", subject.source, verdict, report, rows, settings, message)
