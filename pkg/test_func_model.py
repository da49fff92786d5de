import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from services import gallery
from services.func_model import (
    Expr, FunctionSequence, IntegralValue, NumericOptions, Piece, PieceTemplate, PiecewiseFunction, PowerTerm,
    Slot, TermTemplate, constant_function, evaluate, evaluate_many, instantiate, lp_integral_on, lp_norm, scale,
    single_piece, split_divergence_test, subtract, superlevel_set, zero_function,
)
from services.measure_core import INF, Domain, Interval, IntervalSet, difference, measure
from strategies import UNIT, monotone_polynomials, step_functions
from utils.errors import DomainError, ResourceLimitError

HALF_LINE = gallery.HALF_LINE
OPEN_UNIT = gallery.OPEN_UNIT


def e1(n, p=2.0):
    return instantiate(gallery.build("E1", p).sequence, n)


def e2(n, p=2.0):
    return instantiate(gallery.build("E2", p).sequence, n)


# --- Expr ---

def test_expr_canonical_form():
    e = Expr((PowerTerm(1.0, 0.0), PowerTerm(2.0, 2.0), PowerTerm(-1.0, 0.0), PowerTerm(3.0, 1.0)))
    assert [t.exponent for t in e.terms] == [2.0, 1.0]
    assert Expr((PowerTerm(1.0, 1.0), PowerTerm(-1.0, 1.0))).is_zero


def test_expr_term_cap():
    with pytest.raises(ResourceLimitError):
        Expr(tuple(PowerTerm(1.0, float(a)) for a in range(9)))


def test_expr_derivative():
    d = Expr((PowerTerm(3.0, 2.0), PowerTerm(5.0, 0.0))).derivative()
    assert d.terms == (PowerTerm(6.0, 1.0),)


def test_negative_exponent_needs_positive_piece():
    with pytest.raises(DomainError):
        single_piece(UNIT, Expr.power(1.0, -1.0))


# --- evaluate ---

def test_evaluate_examples():
    assert evaluate(e1(4), 0.1) == pytest.approx(2.0)
    assert evaluate(zero_function(UNIT), 0.7) == 0.0
    assert evaluate(gallery.build("E3", 2).function, 0.5) == pytest.approx(4.0)


def test_evaluate_respects_endpoint_closedness():
    f = e1(4)
    assert evaluate(f, 0.25) == pytest.approx(2.0)
    assert evaluate(f, 0.2500001) == 0.0


def test_evaluate_outside_carrier():
    with pytest.raises(DomainError):
        evaluate(e1(4), 1.5)
    with pytest.raises(DomainError):
        evaluate(gallery.build("E3", 2).function, 0.0)


def test_evaluate_many_marks_outside_points_nan():
    out = evaluate_many(e1(4), [0.1, 0.5, 2.0])
    assert out[0] == pytest.approx(2.0)
    assert out[1] == 0.0
    assert math.isnan(out[2])


# --- subtract ---

def test_subtract_identity_and_self():
    f = e1(4)
    assert subtract(f, zero_function(UNIT)).pieces == f.pieces
    diff = subtract(f, f)
    assert diff.is_zero
    assert len(diff.pieces) == 1


def test_subtract_refines_partitions():
    diff = subtract(e1(4), e1(2))
    assert len(diff.pieces) == 3
    for x in (0.1, 0.3, 0.6):
        assert evaluate(diff, x) == pytest.approx(evaluate(e1(4), x) - evaluate(e1(2), x), abs=1e-12)
    assert evaluate(diff, 0.1) == pytest.approx(2 - math.sqrt(2))
    assert evaluate(diff, 0.3) == pytest.approx(-math.sqrt(2))


def test_subtract_rejects_other_domains():
    with pytest.raises(DomainError):
        subtract(e1(2), zero_function(OPEN_UNIT))


def test_subtract_piece_cap():
    steps = []
    for k in range(20):
        last = k == 19
        steps.append(Piece(Interval(k / 20, (k + 1) / 20, True, last), Expr.constant(float(k % 2))))
    f = PiecewiseFunction(UNIT, tuple(steps))
    with pytest.raises(ResourceLimitError):
        subtract(f, zero_function(UNIT), NumericOptions(max_pieces=5))


@settings(max_examples=200, deadline=None)
@given(st.one_of(step_functions(), monotone_polynomials()),
       st.one_of(step_functions(), monotone_polynomials()),
       st.floats(0.0, 1.0))
def test_subtract_is_pointwise_exact(f, g, x):
    assert evaluate(subtract(f, g), x) == pytest.approx(evaluate(f, x) - evaluate(g, x), abs=1e-12)


def test_scale_multiplies_values():
    f = scale(e1(4), -3.0)
    assert evaluate(f, 0.1) == pytest.approx(-6.0)


# --- superlevel sets ---

def test_superlevel_examples():
    s = superlevel_set(e1(4), 1.0)
    assert s == IntervalSet.of(Interval.closed(0, 0.25))
    assert measure(s) == pytest.approx(0.25)

    assert superlevel_set(zero_function(UNIT), 0.3).is_empty

    s3 = superlevel_set(gallery.build("E3", 1).function, 4.0)
    assert s3 == IntervalSet.of(Interval(0.0, 0.5, False, True))


def test_superlevel_rejects_nonpositive_delta():
    with pytest.raises(DomainError):
        superlevel_set(e1(4), 0.0)


def test_superlevel_includes_exact_threshold():
    f = constant_function(UNIT, 0.5)
    assert superlevel_set(f, 0.5) == UNIT.as_set
    assert superlevel_set(f, 0.5000001).is_empty


def test_superlevel_multi_term_roots():
    X = Domain(Interval.closed(-2, 2))
    f = single_piece(X, Expr((PowerTerm(1.0, 2.0), PowerTerm(-1.0, 0.0))))
    s = superlevel_set(f, 0.5)
    assert len(s) == 3
    expected = 2 * (2 - math.sqrt(1.5)) + 2 * math.sqrt(0.5)
    assert measure(s) == pytest.approx(expected, abs=1e-9)


def test_superlevel_unbounded_tail():
    f = single_piece(HALF_LINE, Expr((PowerTerm(1.0, 0.0), PowerTerm(1.0, -1.0))))
    s = superlevel_set(f, 1.5)
    assert measure(s) == pytest.approx(1.0, abs=1e-9)
    assert measure(superlevel_set(f, 1.0)) == INF


def test_superlevel_singular_head():
    X = Domain(Interval(0.0, 1.0, False, True))
    f = single_piece(X, Expr((PowerTerm(1.0, -0.5), PowerTerm(1.0, 0.0))))
    # 1 + x^{-1/2} >= 3  <=>  x <= 1/4
    assert measure(superlevel_set(f, 3.0)) == pytest.approx(0.25, abs=1e-9)


# --- integrals ---

def test_integral_examples():
    f = e1(4)
    tail = IntervalSet.of(Interval(0.25, 1.0, False, True))
    assert lp_integral_on(f, 2, tail) == IntegralValue.finite(0.0)

    whole = lp_norm(f, 2)
    assert whole.is_finite
    assert whole.value == pytest.approx(1.0, abs=1e-12)

    assert lp_norm(e2(3), 2).is_divergent


def test_log_case_single_term():
    X = Domain(Interval.closed(1, math.e))
    f = single_piece(X, Expr.power(1.0, -0.5))
    assert lp_norm(f, 2).value == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("alpha", [-2.0, -1.5, -1.0, -0.5])
def test_tail_rule_matches_antiderivative(alpha):
    f = single_piece(HALF_LINE, Expr.power(1.0, alpha))
    result = lp_norm(f, 1)
    if alpha < -1:
        assert result.is_finite
        assert result.value == pytest.approx(1.0 / (-alpha - 1.0))
    else:
        assert result.is_divergent
        assert "divergent tail" in result.reason


def test_zero_boundary_rule():
    f = single_piece(OPEN_UNIT, Expr.power(1.0, -0.5))
    assert lp_norm(f, 1).value == pytest.approx(2.0)
    assert lp_norm(f, 2).is_divergent


def test_multi_term_quadrature():
    f = single_piece(UNIT, Expr((PowerTerm(1.0, 1.0), PowerTerm(1.0, 2.0))))
    r = lp_norm(f, 1)
    assert r.is_finite
    assert r.value == pytest.approx(0.5 + 1.0 / 3.0, abs=1e-9)


def test_multi_term_singular_head_and_tail():
    X = Domain(Interval(0.0, 1.0, False, True))
    head = single_piece(X, Expr((PowerTerm(1.0, -0.5), PowerTerm(1.0, 0.0))))
    assert lp_norm(head, 1).value == pytest.approx(3.0, abs=1e-8)

    tail = single_piece(HALF_LINE, Expr((PowerTerm(1.0, -2.0), PowerTerm(1.0, -3.0))))
    assert lp_norm(tail, 1).value == pytest.approx(1.5, abs=1e-8)

    flat = single_piece(HALF_LINE, Expr((PowerTerm(1.0, 0.0), PowerTerm(1.0, -2.0))))
    assert lp_norm(flat, 1).is_divergent


def test_integral_argument_checks():
    with pytest.raises(DomainError):
        lp_norm(e1(4), 0.5)
    with pytest.raises(DomainError):
        lp_integral_on(e1(4), 2, IntervalSet.of(Interval.closed(0.5, 2)))


def test_divergent_absorbs_sum():
    d = IntegralValue.divergent("tail")
    assert (IntegralValue.finite(1.0) + d).is_divergent
    assert (IntegralValue.unknown("quad") + IntegralValue.finite(2.0)).is_unknown
    assert (d + IntegralValue.unknown("quad")).is_divergent


# --- split divergence ---

def test_split_divergence_examples():
    B = difference(HALF_LINE.as_set, IntervalSet.of(Interval.closed(2, 2.5)))
    r = split_divergence_test(e2(3), 2, B, HALF_LINE)
    assert r.is_divergent
    assert "split" in r.reason

    assert split_divergence_test(zero_function(HALF_LINE), 2, B, HALF_LINE) == IntegralValue.finite(0.0)

    g = single_piece(HALF_LINE, Expr.power(1.0, -2.0 / 2))
    r = split_divergence_test(g, 2, HALF_LINE.as_set, HALF_LINE)
    assert r.value == pytest.approx(1.0)


# --- sequences ---

def test_instantiate_examples():
    f1 = e1(1)
    assert len(f1.pieces) == 1
    assert evaluate(f1, 1.0) == pytest.approx(1.0)

    assert evaluate(e2(4, p=1), 1.0) == pytest.approx(0.25)
    assert evaluate(e1(9), 0.05) == pytest.approx(3.0)


def test_instantiate_reports_bad_index():
    seq = gallery.build("E1", 2).sequence
    with pytest.raises(DomainError):
        instantiate(seq, 0)

    escaping = FunctionSequence(
        UNIT,
        (
            PieceTemplate(Slot.const(0.0), Slot.mono(0.5, b=1.0), True, True,
                          (TermTemplate(Slot.const(1.0), Slot.const(0.0)),)),
            PieceTemplate(Slot.mono(0.5, b=1.0), Slot.const(1.0), False, True,
                          (TermTemplate(Slot.const(0.0), Slot.const(0.0)),)),
        ),
    )
    instantiate(escaping, 1)
    with pytest.raises(DomainError, match="n=3"):
        instantiate(escaping, 3)


def test_alternating_slot():
    slot = Slot.mono(1.0, alt=True)
    assert slot.value(1, 2.0) == -1.0
    assert slot.value(2, 2.0) == 1.0
    assert not slot.is_constant


def test_from_function_is_constant_sequence():
    f = e1(4)
    seq = FunctionSequence.from_function(f, 2.0)
    for n in (1, 7):
        assert instantiate(seq, n) == f


# --- layer cake ---

@settings(max_examples=50, deadline=None)
@given(step_functions(nonnegative=True), st.sampled_from([1.0, 2.0, 3.0]))
def test_layer_cake_matches_integral(f, p):
    direct = lp_norm(f, p)
    top = max(abs(pc.expr.leading.coeff) for pc in f.pieces)
    if top == 0:
        assert direct.value == 0.0
        return
    levels = sorted({abs(pc.expr.leading.coeff) for pc in f.pieces if pc.expr.leading.coeff})

    def integrand(d):
        return p * d ** (p - 1) * measure(superlevel_set(f, d)) if d > 0 else 0.0

    value, _ = integrate.quad(integrand, 0.0, top, points=levels[:-1] or None, limit=200,
                              epsabs=1e-12, epsrel=1e-10)
    assert value == pytest.approx(direct.value, rel=1e-6)


# --- oracle agreement ---

@settings(max_examples=200, deadline=None)
@given(st.one_of(step_functions(), monotone_polynomials()), st.floats(0.05, 4.0))
def test_superlevel_agrees_with_grid(f, delta):
    from services.oracle import grid_measure

    exact = superlevel_set(f, delta)
    est = grid_measure(f, delta, 20_000, Interval.closed(0, 1))
    bound = 2 * max(2 * len(exact), 1) * est.resolution
    assert abs(est.value - measure(exact)) <= bound


@pytest.mark.parametrize("f, p", [
    (single_piece(UNIT, Expr((PowerTerm(1.0, 2.0), PowerTerm(-0.5, 0.0)))), 2.0),
    (single_piece(UNIT, Expr((PowerTerm(2.0, 1.0), PowerTerm(1.0, 0.0)))), 1.0),
    (single_piece(UNIT, Expr.power(1.0, 1.0)), 3.0),
])
def test_integral_agrees_with_monte_carlo(f, p):
    from services.oracle import mc_integral

    exact = lp_norm(f, p)
    mc = mc_integral(f, p, UNIT.as_set, 200_000, seed=7)
    assert abs(exact.value - mc.value) <= exact.err + 3 * mc.stderr


def test_evaluate_many_matches_evaluate():
    f = subtract(e1(4), e1(2))
    xs = np.linspace(0, 1, 101)
    assert np.allclose(evaluate_many(f, xs), [evaluate(f, x) for x in xs])
