"""
Hypothesis strategies shared by the test modules.

Breakpoints live on the dyadic grid k/64 so set identities hold to rounding.
"""
from hypothesis import strategies as st

from services.func_model import (
    Expr, FunctionSequence, Piece, PieceTemplate, PiecewiseFunction, PowerTerm, Slot, TermTemplate,
)
from services.measure_core import Domain, Interval, IntervalSet

UNIT = Domain(Interval(0.0, 1.0, True, True))
GRID = 64


@st.composite
def interval_sets(draw, max_parts=4):
    """Canonical IntervalSets inside [0, 1]."""
    ends = sorted(draw(st.sets(st.integers(0, GRID), min_size=0, max_size=2 * max_parts)))
    if len(ends) % 2:
        ends = ends[:-1]
    parts = []
    for lo, hi in zip(ends[::2], ends[1::2]):
        parts.append(Interval(lo / GRID, hi / GRID, draw(st.booleans()), draw(st.booleans())))
    return IntervalSet(tuple(parts))


def _partition(draw, max_pieces):
    cuts = sorted(draw(st.sets(st.integers(1, GRID - 1), max_size=max_pieces - 1)))
    ends = [0.0] + [c / GRID for c in cuts] + [1.0]
    out = []
    for i, (lo, hi) in enumerate(zip(ends, ends[1:])):
        last = i == len(ends) - 2
        out.append(Interval(lo, hi, True, last))
    return out


@st.composite
def step_functions(draw, max_pieces=6, nonnegative=False):
    """Piecewise-constant functions on [0, 1]."""
    lo = 0.0 if nonnegative else -3.0
    pieces = []
    for iv in _partition(draw, max_pieces):
        c = draw(st.floats(lo, 3.0, allow_nan=False).map(lambda v: round(v, 3)))
        pieces.append(Piece(iv, Expr.constant(c)))
    return PiecewiseFunction(UNIT, tuple(pieces))


@st.composite
def monotone_polynomials(draw, max_pieces=3):
    """Pieces c_0 + c_1 x + c_2 x^2 with c_i >= 0 (and an optional overall sign); no tangencies with δ."""
    pieces = []
    for iv in _partition(draw, max_pieces):
        coeffs = draw(st.lists(st.floats(0.0, 2.0, allow_nan=False).map(lambda v: round(v, 3)),
                               min_size=1, max_size=3))
        sign = draw(st.sampled_from([1.0, -1.0]))
        pieces.append(Piece(iv, Expr(tuple(PowerTerm(sign * c, float(a)) for a, c in enumerate(coeffs)))))
    return PiecewiseFunction(UNIT, tuple(pieces))


def shrinking_step_sequence(h, w, b, s, p):
    """f_n = h on [s, s + w n^{-b}], 0 elsewhere on [0, 1], converging in measure to 0."""
    start = Slot.const(s)
    stop = Slot((Slot.const(s).monomials[0], Slot.mono(w, b=-b).monomials[0]))
    zero = (TermTemplate(Slot.const(0.0), Slot.const(0.0)),)
    return FunctionSequence(
        UNIT,
        (
            PieceTemplate(Slot.const(0.0), start, True, False, zero),
            PieceTemplate(start, stop, True, True, (TermTemplate(Slot.const(h), Slot.const(0.0)),)),
            PieceTemplate(stop, Slot.const(1.0), False, True, zero),
        ),
        p, label=f"step h={h} w={w} b={b} s={s}",
    )


@st.composite
def shrinking_steps(draw, with_offset=True):
    """Random shrinking_step_sequence; returns (sequence, width, exponent)."""
    h = draw(st.floats(0.5, 3.0).map(lambda v: round(v, 3)))
    w = draw(st.floats(0.05, 0.5).map(lambda v: round(v, 3)))
    b = draw(st.floats(1.5, 2.5).map(lambda v: round(v, 3)))
    s = draw(st.floats(0.0, 0.5).map(lambda v: round(v, 3))) if with_offset else 0.0
    p = draw(st.sampled_from([1.0, 2.0, 3.0]))
    return shrinking_step_sequence(h, w, b, s, p), w, b
