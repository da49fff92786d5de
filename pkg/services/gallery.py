"""
The four reference examples with their closed-form expected quantities.

    E1  f_n = n^{1/p} on [0, 1/n], 0 on (1/n, 1]        X = [0, 1]
    E2  f_n(x) = (n x)^{-1/p}                            X = [1, ∞)
    E3  f(x) = x^{-2}                                    X = (0, 1)
    E4  f(x) = x^{-1/p}                                  X = [1, ∞)
"""
from dataclasses import dataclass
from typing import Optional, Union

from config import GALLERY_IDS
from services.func_model import (
    Expr, FunctionSequence, PieceTemplate, PiecewiseFunction, Slot, TermTemplate, single_piece, zero_function,
)
from services.measure_core import INF, Domain, Interval
from utils.errors import DomainError, PreconditionError

UNIT = Domain(Interval(0.0, 1.0, True, True))
OPEN_UNIT = Domain(Interval(0.0, 1.0, False, False))
HALF_LINE = Domain(Interval(1.0, INF, True, False))


@dataclass(frozen=True)
class GalleryItem:
    id: str
    p: float
    title: str
    sequence: Optional[FunctionSequence] = None
    function: Optional[PiecewiseFunction] = None
    expected: Optional[dict] = None

    @property
    def is_sequence(self) -> bool:
        return self.sequence is not None

    @property
    def domain(self) -> Domain:
        return self.sequence.domain if self.is_sequence else self.function.domain

    @property
    def subject(self) -> Union[FunctionSequence, PiecewiseFunction]:
        return self.sequence if self.is_sequence else self.function

    def limit(self) -> PiecewiseFunction:
        """In-measure limit of the sequence items (the zero function)."""
        return zero_function(self.domain)


def _e1(p):
    height = Slot.mono(1.0, b=1.0, b_p=-1.0)          # n^{1/p}
    shrink = Slot.mono(1.0, b=-1.0)                  # 1/n
    seq = FunctionSequence(
        UNIT,
        (
            PieceTemplate(Slot.const(0.0), shrink, True, True, (TermTemplate(height, Slot.const(0.0)),)),
            PieceTemplate(shrink, Slot.const(1.0), False, True, (TermTemplate(Slot.const(0.0), Slot.const(0.0)),)),
        ),
        p, label="E1",
    )
    expected = {
        "F_n": "δ^p/n for 0 < δ <= n^{1/p}, else 0",
        "sup": 1.0,
        "alpha_p_limit": 0.0,
        "weak_lp_convergent": False,
    }
    return GalleryItem("E1", p, "n^{1/p} on [0, 1/n]", sequence=seq, expected=expected)


def _e2(p):
    coeff = Slot.mono(1.0, b=-1.0, b_p=-1.0)         # n^{-1/p}
    exponent = Slot.mono(-1.0, a_p=-1.0)             # -1/p
    seq = FunctionSequence(
        HALF_LINE,
        (PieceTemplate(Slot.const(1.0), Slot.const(INF), True, False, (TermTemplate(coeff, exponent),)),),
        p, label="E2",
    )
    expected = {
        "F_n": "(1 - n δ^p)/n for 0 < δ <= n^{-1/p}, else 0",
        "sup": "1/n",
        "alpha_p_convergent": False,
        "weak_lp_convergent": True,
    }
    return GalleryItem("E2", p, "(n x)^{-1/p} on [1, ∞)", sequence=seq, expected=expected)


def _e3(p):
    f = single_piece(OPEN_UNIT, Expr.power(1.0, -2.0))
    expected = {"F": "δ^{p-1/2} for δ >= 1, δ^p for δ < 1", "weak_lp": False, "in_A_p": True}
    return GalleryItem("E3", p, "x^{-2} on (0, 1)", function=f, expected=expected)


def _e4(p):
    f = single_piece(HALF_LINE, Expr.power(1.0, -1.0 / p))
    expected = {"F": "1 - δ^p for δ <= 1, else 0", "quasinorm": 1.0, "weak_lp": True, "in_A_p": False}
    return GalleryItem("E4", p, "x^{-1/p} on [1, ∞)", function=f, expected=expected)


_BUILDERS = {"E1": _e1, "E2": _e2, "E3": _e3, "E4": _e4}


def build(item_id: str, p: float) -> GalleryItem:
    if item_id not in _BUILDERS:
        raise DomainError(f"Unknown gallery item '{item_id}'; expected one of {', '.join(GALLERY_IDS)}")
    if p < 1:
        raise PreconditionError(f"p must be >= 1, got {p}")
    return _BUILDERS[item_id](float(p))


def expected_F(item: GalleryItem, n: int, delta: float) -> float:
    """Closed-form δ^p·μ({|f_n| >= δ}) for the sequence items."""
    p = item.p
    if delta <= 0:
        raise DomainError(f"delta must be positive, got {delta}")
    if item.id == "E1":
        return delta ** p / n if delta <= n ** (1.0 / p) else 0.0
    if item.id == "E2":
        return (1.0 - n * delta ** p) / n if delta <= n ** (-1.0 / p) else 0.0
    raise DomainError(f"Gallery item {item.id} has no closed-form F_n")


def expected_probe(item: GalleryItem, delta: float) -> float:
    """Closed-form δ^p·μ({|f| >= δ}) for the single-function items."""
    p = item.p
    if delta <= 0:
        raise DomainError(f"delta must be positive, got {delta}")
    if item.id == "E3":
        return delta ** (p - 0.5) if delta >= 1 else delta ** p
    if item.id == "E4":
        return 1.0 - delta ** p if delta <= 1 else 0.0
    raise DomainError(f"Gallery item {item.id} has no closed-form probe")
