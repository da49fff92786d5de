import math

import pytest
from hypothesis import assume, given, settings, strategies as st

from config import DEFAULT_DELTA_GRID
from services import gallery
from services.convergence import (
    DEFAULT_RULE, HorizonRule, IntervalTemplate, Verdict, WitnessSequence, WitnessTemplate, _band_indices,
    check_alpha_p, check_alpha_p_cauchy, check_cauchy_in_measure, check_in_measure, combine_verdicts,
    decide_tendency, full_witness, synthesize_cauchy_witness, synthesize_witness,
)
from services.func_model import (
    Expr, FunctionSequence, Piece, PieceTemplate, PiecewiseFunction, Slot, TermTemplate, constant_function,
    instantiate, subtract, superlevel_set, zero_function,
)
from services.measure_core import Interval, complement, measure
from strategies import UNIT, shrinking_steps
from utils.errors import DomainError, PreconditionError


def indicator_sequence(alternating=False):
    """f_n = χ_[0,1], or (-1)^n χ_[0,1] when alternating."""
    coeff = Slot.mono(1.0, alt=True) if alternating else Slot.const(1.0)
    return FunctionSequence(
        UNIT,
        (PieceTemplate(Slot.const(0.0), Slot.const(1.0), True, True, (TermTemplate(coeff, Slot.const(0.0)),)),),
    )


def E1(p=2.0):
    return gallery.build("E1", p)


def E2(p=2.0):
    return gallery.build("E2", p)


# --- decision rule ---

def test_power_law_decay_converges():
    ns = list(range(1, 101))
    verdict, ev = decide_tendency(ns, [1.0 / n for n in ns])
    assert verdict == Verdict.CONVERGES
    assert ev["slope"] == pytest.approx(-1.0)


def test_flat_sequence_fails():
    ns = list(range(1, 65))
    verdict, _ = decide_tendency(ns, [1.0] * 64)
    assert verdict == Verdict.FAILS


def test_all_zero_converges():
    ns = list(range(1, 65))
    verdict, _ = decide_tendency(ns, [0.0] * 64)
    assert verdict == Verdict.CONVERGES


@pytest.mark.parametrize("c", [5e-4, 3e-4, 2e-4])
def test_small_constant_is_not_a_decay(c):
    ns = list(range(1, 65))
    verdict, ev = decide_tendency(ns, [c] * 64)
    assert abs(ev["slope"]) < 1e-9
    assert verdict == Verdict.INCONCLUSIVE


def test_fixed_small_indicator_is_inconclusive():
    f = PiecewiseFunction(UNIT, (
        Piece(Interval(0.0, 5e-4, True, True), Expr.constant(1.0)),
        Piece(Interval(5e-4, 1.0, False, True), Expr.constant(0.0)),
    ))
    rep = check_in_measure(FunctionSequence.from_function(f), zero_function(UNIT), 0.5, 64)
    assert rep.measures == pytest.approx([5e-4] * 64)
    assert rep.verdict == Verdict.INCONCLUSIVE


def test_divergence_forces_fail():
    ns = list(range(1, 17))
    values = [0.0] * 15 + [math.inf]
    assert decide_tendency(ns, values)[0] == Verdict.FAILS


def test_unknown_in_top_half_is_inconclusive():
    ns = list(range(1, 17))
    values = [1.0 / n ** 2 for n in ns]
    values[-1] = None
    assert decide_tendency(ns, values)[0] == Verdict.INCONCLUSIVE


def slow_decay(ns):
    """0.005 at n = 64, decaying like n^-0.1."""
    return [0.005 * (64.0 / n) ** 0.1 for n in ns]


def test_slow_small_values_are_inconclusive():
    ns = list(range(1, 65))
    values = slow_decay(ns)
    assert decide_tendency(ns, values)[0] == Verdict.INCONCLUSIVE


def test_thresholds_are_configurable():
    ns = list(range(1, 65))
    values = slow_decay(ns)
    strict = HorizonRule(pass_threshold=1e-3, fail_threshold=1e-3)
    assert decide_tendency(ns, values, strict)[0] == Verdict.FAILS
    loose = HorizonRule(pass_threshold=1e-2)
    assert decide_tendency(ns, values, loose)[0] == Verdict.CONVERGES


def test_combine_verdicts():
    assert combine_verdicts(Verdict.CONVERGES, Verdict.CONVERGES) == Verdict.CONVERGES
    assert combine_verdicts(Verdict.CONVERGES, Verdict.INCONCLUSIVE) == Verdict.INCONCLUSIVE
    assert combine_verdicts(Verdict.INCONCLUSIVE, Verdict.FAILS) == Verdict.FAILS


def test_contribution_labels():
    assert DEFAULT_RULE.contribution(None) == "unknown"
    assert DEFAULT_RULE.contribution(math.inf) == "divergent"
    assert DEFAULT_RULE.contribution(1e-4) == "below-pass"
    assert DEFAULT_RULE.contribution(0.005) == "between"
    assert DEFAULT_RULE.contribution(0.5) == "above-fail"


# --- check_in_measure ---

def test_in_measure_e1():
    item = E1()
    rep = check_in_measure(item.sequence, item.limit(), 0.5, 100)
    assert rep.measures == pytest.approx([1.0 / n for n in range(1, 101)])
    assert rep.verdict == Verdict.CONVERGES


def test_in_measure_constant_sequence():
    f = instantiate(E1().sequence, 5)
    seq = FunctionSequence.from_function(f, 2.0)
    rep = check_in_measure(seq, f, 0.5, 16)
    assert rep.measures == [0.0] * 16
    assert rep.verdict == Verdict.CONVERGES


def test_in_measure_indicator_fails():
    rep = check_in_measure(indicator_sequence(), zero_function(UNIT), 0.5, 32)
    assert rep.measures == [1.0] * 32
    assert rep.verdict == Verdict.FAILS


def test_in_measure_preconditions():
    item = E1()
    with pytest.raises(PreconditionError):
        check_in_measure(item.sequence, item.limit(), 0.0, 16)
    with pytest.raises(PreconditionError):
        check_in_measure(item.sequence, item.limit(), 0.5, 4)


def test_workers_do_not_change_results():
    item = E1()
    serial = check_in_measure(item.sequence, item.limit(), 0.5, 40)
    pooled = check_in_measure(item.sequence, item.limit(), 0.5, 40, workers=4)
    assert serial.measures == pooled.measures
    assert serial.verdict == pooled.verdict


# --- witnesses and check_alpha_p ---

def e1_tail_witness(horizon):
    """B_n = (1/n, 1]."""
    template = WitnessTemplate("sets", (IntervalTemplate(Slot.mono(1.0, b=-1.0), Slot.const(1.0), False, True),))
    return template.realize(UNIT, 2.0, horizon)


def test_alpha_e1_with_tail_witness():
    item = E1()
    H = 64
    rep = check_alpha_p(item.sequence, item.limit(), 2.0, e1_tail_witness(H), H)
    assert all(rep.integrals[k].is_finite and rep.integrals[k].value == 0.0 for k in range(1, H + 1))
    assert rep.witness.complement_measures[H] == pytest.approx(1.0 / H)
    assert rep.verdict == Verdict.CONVERGES


def test_alpha_constant_sequence_full_witness():
    f = constant_function(UNIT, 2.0)
    seq = FunctionSequence.from_function(f, 2.0)
    rep = check_alpha_p(seq, f, 2.0, full_witness(UNIT, 16), 16)
    assert rep.verdict == Verdict.CONVERGES
    assert all(rep.witness.complement_measures[k] == 0.0 for k in range(1, 17))


def test_alpha_e2_complement_witness_fails():
    item = E2()
    X = item.domain
    # B_n = [1, ∞) minus [2, 2 + 1/n]
    hole = IntervalTemplate(Slot.const(2.0), Slot((Slot.const(2.0).monomials[0], Slot.mono(1.0, b=-1.0).monomials[0])))
    witness = WitnessTemplate("complement", (hole,)).realize(X, 2.0, 32)
    rep = check_alpha_p(item.sequence, item.limit(), 2.0, witness, 32)
    for k in range(1, 33):
        assert witness.complement_measures[k] == pytest.approx(1.0 / k)
        assert rep.integrals[k].is_divergent
    assert rep.verdict == Verdict.FAILS
    assert rep.integral_verdict == Verdict.FAILS


def test_alpha_rejects_short_witness():
    item = E1()
    with pytest.raises(PreconditionError):
        check_alpha_p(item.sequence, item.limit(), 2.0, e1_tail_witness(8), 16)


def test_witness_outside_domain_rejected():
    template = WitnessTemplate("sets", (IntervalTemplate(Slot.const(0.5), Slot.const(2.0)),))
    with pytest.raises(DomainError):
        template.realize(UNIT, 2.0, 8)
    with pytest.raises(DomainError):
        WitnessTemplate("everything")


# --- synthesize_witness ---

def test_synthesize_e1():
    item = E1()
    H = 200
    w = synthesize_witness(item.sequence, item.limit(), 2.0, H)
    assert w.thresholds[:10] == [n + 1 for n in range(1, 11)]
    assert all(b > a for a, b in zip(w.thresholds, w.thresholds[1:]))
    assert w.truncated_at == H
    for k in range(2, H + 1):
        assert w.lambda_schedule[k] == pytest.approx(1.0 / (k - 1))
        assert w.complement_measures[k] == pytest.approx(1.0 / k)
        (part,) = w.sets[k].parts
        assert part.lo == pytest.approx(1.0 / k) and not part.lo_closed and part.hi == 1.0

    rep = check_alpha_p(item.sequence, item.limit(), 2.0, w, H)
    assert rep.bound_violations == []
    assert rep.verdict == Verdict.CONVERGES


def test_synthesize_constant_sequence():
    f = instantiate(E1().sequence, 3)
    seq = FunctionSequence.from_function(f, 2.0)
    w = synthesize_witness(seq, f, 2.0, 16)
    assert all(w.sets[k] == UNIT.as_set for k in range(1, 17))
    assert len(w.lambda_schedule) == 16


def test_synthesize_needs_finite_domain():
    item = E2()
    with pytest.raises(PreconditionError):
        synthesize_witness(item.sequence, item.limit(), 2.0, 16)


def test_synthesize_marks_truncation_for_nonconvergent_sequence():
    w = synthesize_witness(indicator_sequence(), zero_function(UNIT), 1.0, 16)
    assert w.thresholds == []
    assert w.truncated_at == 1
    assert all(lam == 1.0 for lam in w.lambda_schedule.values())


# --- Cauchy ---

def test_band_indices_keep_full_bands():
    idx = _band_indices(256, 16, 4096)
    assert idx[0] == 1 and idx[-1] == 240
    assert _band_indices(10, 16, 4096)[-1] == 5
    sampled = _band_indices(10_000, 16, 4096)
    assert len(sampled) <= 256


def test_cauchy_in_measure_e1():
    item = E1()
    rep = check_cauchy_in_measure(item.sequence, 0.5, 256)
    assert rep.kind == "cauchy-in-measure"
    for n, v in zip(rep.indices, rep.measures):
        assert v <= 1.0 / n + 1e-12
    assert rep.verdict == Verdict.CONVERGES


def test_cauchy_in_measure_constant_and_oscillating():
    f = constant_function(UNIT, 1.0)
    rep = check_cauchy_in_measure(FunctionSequence.from_function(f), 0.5, 32)
    assert set(rep.measures) == {0.0}
    assert rep.verdict == Verdict.CONVERGES

    rep = check_cauchy_in_measure(indicator_sequence(alternating=True), 0.5, 32)
    assert set(rep.measures) == {1.0}
    assert rep.verdict == Verdict.FAILS


def test_alpha_cauchy_e1_synthesized():
    item = E1()
    H = 128
    w = synthesize_cauchy_witness(item.sequence, item.limit(), 2.0, H, deltas=(0.5,))
    rep = check_alpha_p_cauchy(item.sequence, 2.0, w, H)
    assert rep.kind == "alpha-p-cauchy"
    assert rep.verdict == Verdict.CONVERGES


def test_alpha_cauchy_constant_full():
    f = constant_function(UNIT, 3.0)
    rep = check_alpha_p_cauchy(FunctionSequence.from_function(f), 2.0, full_witness(UNIT, 16), 16)
    assert all(iv.value == 0.0 for iv in rep.integrals.values())


def test_alpha_cauchy_e2_full_witness_diverges():
    item = E2()
    rep = check_alpha_p_cauchy(item.sequence, 2.0, full_witness(item.domain, 16), 16)
    assert all(iv.is_divergent for iv in rep.integrals.values())
    assert rep.verdict == Verdict.FAILS


def test_cauchy_witness_refuses_failing_limit():
    with pytest.raises(PreconditionError):
        synthesize_cauchy_witness(indicator_sequence(), zero_function(UNIT), 1.0, 16, deltas=(0.5,))


# --- properties ---

@settings(max_examples=40, deadline=None)
@given(shrinking_steps(), st.sampled_from([1.0, 0.5, 0.1]))
def test_measure_bound_from_witness(case, delta):
    """δ^p μ(E_k(δ)) <= ∫_{B_k} |f_k - f|^p + δ^p μ(B_k^c) at every index."""
    seq, _, _ = case
    p, H = seq.p_exponent, 16
    f = zero_function(UNIT)
    w = synthesize_witness(seq, f, p, H)
    rep = check_alpha_p(seq, f, p, w, H)
    for k in range(1, H + 1):
        iv = rep.integrals[k]
        assert iv.is_finite
        lhs = delta ** p * measure(superlevel_set(subtract(instantiate(seq, k), f), delta))
        assert lhs <= iv.value + iv.err + delta ** p * w.complement_measures[k] + 1e-12
    assert rep.bound_violations == []


@settings(max_examples=20, deadline=None)
@given(shrinking_steps())
def test_in_measure_implies_cauchy_at_double_delta(case):
    seq, _, _ = case
    H, delta = 64, 0.25
    rep = check_in_measure(seq, zero_function(UNIT), delta, H)
    if rep.verdict == Verdict.CONVERGES:
        assert check_cauchy_in_measure(seq, 2 * delta, H).verdict == Verdict.CONVERGES


@settings(max_examples=20, deadline=None)
@given(shrinking_steps())
def test_witness_complements_shrink_when_in_measure_passes(case):
    """max over k in [H/2, H] of μ(B_k^c) stays below 2/√H once every grid δ passes."""
    seq, _, _ = case
    p, H = seq.p_exponent, 64
    f = zero_function(UNIT)
    assume(all(check_in_measure(seq, f, d, H).verdict == Verdict.CONVERGES for d in DEFAULT_DELTA_GRID))
    w = synthesize_witness(seq, f, p, H)
    assert max(w.complement_measures[k] for k in range(H // 2, H + 1)) <= 2.0 / math.sqrt(H)
    rep = check_alpha_p(seq, f, p, w, H)
    assert all(rep.integrals[k].is_finite for k in range(1, H + 1))
    assert rep.bound_violations == []


def test_witness_sequence_serializes():
    w = WitnessSequence.from_sets({1: UNIT.as_set}, UNIT)
    d = w.to_dict()
    assert d["complement_measures"] == {"1": 0.0}
    assert "lambda_schedule" not in d
    assert complement(w.sets[1], UNIT).is_empty
