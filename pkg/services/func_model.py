"""
Piecewise sum-of-power-terms functions on a one-dimensional domain.

A function is a partition of the domain carrier into intervals, each carrying
an expression  c_1 x^a_1 + ... + c_k x^a_k  with strictly decreasing exponents.
The class is closed under subtraction (after refining both partitions), which
is all the convergence definitions need.
"""
import bisect
import math
import warnings
from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy import integrate, optimize

from config import (
    BISECTION_XTOL, GRID_POINTS_PER_PIECE, MAX_PIECES, MAX_TERMS, QUAD_LIMIT, QUAD_TOLERANCE, REPORT_TOLERANCE,
)
from services.measure_core import (
    INF, Domain, Interval, IntervalSet, complement, intersect, intersect_intervals, make_interval,
)
from utils.errors import DomainError, ResourceLimitError
from utils.logger import get_logger

logger = get_logger(__name__)

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class NumericOptions:
    quad_tol: float = QUAD_TOLERANCE
    xtol: float = BISECTION_XTOL
    grid_points: int = GRID_POINTS_PER_PIECE
    max_pieces: int = MAX_PIECES
    quad_limit: int = QUAD_LIMIT
    report_tol: float = REPORT_TOLERANCE


DEFAULT_OPTIONS = NumericOptions()


# ==========================================
#  PART 1: Expressions
# ==========================================

@dataclass(frozen=True)
class PowerTerm:
    coeff: float
    exponent: float

    def __call__(self, x):
        return self.coeff * x ** self.exponent


def _is_integer(a: float) -> bool:
    return float(a).is_integer()


@dataclass(frozen=True)
class Expr:
    """Sum of power terms in canonical form (exponents strictly decreasing, no zero coefficients)."""
    terms: Tuple[PowerTerm, ...]

    def __post_init__(self):
        merged = {}
        for t in self.terms:
            merged.setdefault(float(t.exponent), []).append(float(t.coeff))
        canon = []
        for exponent in sorted(merged, reverse=True):
            coeff = math.fsum(merged[exponent])
            if coeff != 0.0:
                canon.append(PowerTerm(coeff, exponent))
        if not canon:
            canon = [PowerTerm(0.0, 0.0)]
        if len(canon) > MAX_TERMS:
            raise ResourceLimitError(f"Expression has {len(canon)} terms; the cap is {MAX_TERMS}")
        object.__setattr__(self, "terms", tuple(canon))

    @classmethod
    def constant(cls, c):
        return cls((PowerTerm(c, 0.0),))

    @classmethod
    def zero(cls):
        return cls.constant(0.0)

    @classmethod
    def power(cls, c, a):
        return cls((PowerTerm(c, a),))

    @property
    def is_zero(self) -> bool:
        return self.terms[0].coeff == 0.0

    @property
    def is_constant(self) -> bool:
        return len(self.terms) == 1 and self.terms[0].exponent == 0.0

    @property
    def is_single(self) -> bool:
        return len(self.terms) == 1

    @property
    def leading(self) -> PowerTerm:
        return self.terms[0]

    @property
    def trailing(self) -> PowerTerm:
        return self.terms[-1]

    @property
    def max_exponent(self) -> float:
        return self.terms[0].exponent

    @property
    def min_exponent(self) -> float:
        return self.terms[-1].exponent

    @property
    def needs_positive_x(self) -> bool:
        return any(t.exponent < 0 or not _is_integer(t.exponent) for t in self.terms if t.coeff != 0.0)

    def __call__(self, x: float) -> float:
        if self.is_constant:
            return self.terms[0].coeff
        return math.fsum(t(x) for t in self.terms)

    def evaluate_array(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        out = np.zeros_like(xs)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            for t in self.terms:
                if t.exponent == 0.0:
                    out = out + t.coeff
                else:
                    out = out + t.coeff * np.power(xs, t.exponent)
        return out

    def __neg__(self):
        return Expr(tuple(PowerTerm(-t.coeff, t.exponent) for t in self.terms))

    def __sub__(self, other: "Expr") -> "Expr":
        return Expr(self.terms + (-other).terms)

    def __add__(self, other: "Expr") -> "Expr":
        return Expr(self.terms + other.terms)

    def scale(self, c: float) -> "Expr":
        return Expr(tuple(PowerTerm(c * t.coeff, t.exponent) for t in self.terms))

    def derivative(self) -> "Expr":
        terms = tuple(PowerTerm(t.coeff * t.exponent, t.exponent - 1.0)
                      for t in self.terms if t.exponent != 0.0)
        return Expr(terms) if terms else Expr.zero()

    def __str__(self):
        parts = []
        for t in self.terms:
            parts.append(f"{t.coeff:g}" if t.exponent == 0 else f"{t.coeff:g}·x^{t.exponent:g}")
        return " + ".join(parts)


# ==========================================
#  PART 2: Piecewise functions
# ==========================================

class Piece(NamedTuple):
    interval: Interval
    expr: Expr


def _check_partition(domain: Domain, pieces: Tuple[Piece, ...]):
    if not pieces:
        raise DomainError("A piecewise function needs at least one piece")
    carrier = domain.carrier
    first, last = pieces[0].interval, pieces[-1].interval
    if first.lo != carrier.lo or first.lo_closed != carrier.lo_closed:
        raise DomainError(f"First piece {first} does not start the carrier {carrier}")
    if last.hi != carrier.hi or last.hi_closed != carrier.hi_closed:
        raise DomainError(f"Last piece {last} does not end the carrier {carrier}")
    for a, b in zip(pieces, pieces[1:]):
        ia, ib = a.interval, b.interval
        if ia.hi != ib.lo or ia.hi_closed == ib.lo_closed:
            raise DomainError(f"Pieces {ia} and {ib} do not meet exactly")
    for piece in pieces:
        iv = piece.interval
        if piece.expr.needs_positive_x and not (iv.lo > 0 or (iv.lo == 0 and not iv.lo_closed)):
            raise DomainError(f"Piece {iv} carries {piece.expr}, which is only defined for x > 0")


@dataclass(frozen=True)
class PiecewiseFunction:
    domain: Domain
    pieces: Tuple[Piece, ...]

    def __post_init__(self):
        pieces = tuple(Piece(p[0], p[1]) for p in self.pieces)
        _check_partition(self.domain, pieces)
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "_los", tuple(p.interval.lo for p in pieces))

    @property
    def is_zero(self) -> bool:
        return all(p.expr.is_zero for p in self.pieces)

    def piece_at(self, x: float) -> Piece:
        i = bisect.bisect_right(self._los, x) - 1
        for j in (i, i - 1):
            if 0 <= j < len(self.pieces) and self.pieces[j].interval.contains(x):
                return self.pieces[j]
        raise DomainError(f"x = {x} is outside the carrier {self.domain.carrier}")

    def __str__(self):
        return "; ".join(f"{p.interval}: {p.expr}" for p in self.pieces)


def zero_function(domain: Domain) -> PiecewiseFunction:
    """The identically zero function on the domain."""
    return PiecewiseFunction(domain, (Piece(domain.carrier, Expr.zero()),))


def constant_function(domain: Domain, c: float) -> PiecewiseFunction:
    return PiecewiseFunction(domain, (Piece(domain.carrier, Expr.constant(c)),))


def single_piece(domain: Domain, expr: Expr) -> PiecewiseFunction:
    return PiecewiseFunction(domain, (Piece(domain.carrier, expr),))


def evaluate(f: PiecewiseFunction, x: float) -> float:
    """f(x) from the piece containing x. Raises DomainError outside the carrier."""
    return f.piece_at(x).expr(x)


def evaluate_many(f: PiecewiseFunction, xs) -> np.ndarray:
    """Vectorised evaluation; points outside the carrier come back as NaN."""
    xs = np.asarray(xs, dtype=float)
    out = np.full(xs.shape, np.nan)
    for piece in f.pieces:
        iv = piece.interval
        lo_ok = (xs >= iv.lo) if iv.lo_closed else (xs > iv.lo)
        hi_ok = (xs <= iv.hi) if iv.hi_closed else (xs < iv.hi)
        mask = lo_ok & hi_ok
        if mask.any():
            out[mask] = piece.expr.evaluate_array(xs[mask])
    return out


def _merge_equal_neighbours(pieces):
    merged = []
    for piece in pieces:
        if merged and merged[-1].expr == piece.expr:
            prev = merged[-1].interval
            iv = Interval(prev.lo, piece.interval.hi, prev.lo_closed, piece.interval.hi_closed)
            merged[-1] = Piece(iv, piece.expr)
        else:
            merged.append(piece)
    return tuple(merged)


def subtract(f: PiecewiseFunction, g: PiecewiseFunction, opts: NumericOptions = DEFAULT_OPTIONS) -> PiecewiseFunction:
    """f - g on the common refinement of both partitions, equal neighbours merged."""
    if f.domain != g.domain:
        raise DomainError(f"Cannot subtract functions on different domains ({f.domain} vs {g.domain})")

    refined = []
    i = j = 0
    pf, pg = f.pieces, g.pieces
    while i < len(pf) and j < len(pg):
        iv = intersect_intervals(pf[i].interval, pg[j].interval)
        if iv is not None:
            refined.append(Piece(iv, pf[i].expr - pg[j].expr))
            if len(refined) > opts.max_pieces:
                raise ResourceLimitError(f"Common refinement exceeds {opts.max_pieces} pieces")
        a, b = pf[i].interval, pg[j].interval
        if a.hi < b.hi or (a.hi == b.hi and not a.hi_closed):
            i += 1
        else:
            j += 1

    return PiecewiseFunction(f.domain, _merge_equal_neighbours(refined))


def scale(f: PiecewiseFunction, c: float) -> PiecewiseFunction:
    """c · f, piece by piece."""
    pieces = tuple(Piece(p.interval, p.expr.scale(c)) for p in f.pieces)
    return PiecewiseFunction(f.domain, _merge_equal_neighbours(pieces))


# ==========================================
#  PART 3: Superlevel sets
# ==========================================

def _doubling_search(predicate, start, grow, limit=2000):
    x = start
    for _ in range(limit):
        if predicate(x):
            return x
        x = grow(x)
    return None


def _tail_cutoff(expr: Expr, delta: float):
    """
    R such that the sign of |expr(x)| - delta is fixed for |x| >= R,
    together with that sign (True: the tail belongs to the superlevel set).
    """
    c0, a0 = expr.leading.coeff, expr.leading.exponent
    rest = expr.terms[1:]

    def rest_ratio(r, ref_exp):
        return math.fsum(abs(t.coeff) * r ** (t.exponent - ref_exp) for t in rest)

    if a0 == 0.0:
        gap = abs(abs(c0) - delta)
        if gap > 0:
            r = _doubling_search(lambda r: rest_ratio(r, 0.0) <= gap / 2, 1.0, lambda r: 2 * r)
            return r, abs(c0) > delta
        # |c0| == delta: the first correction decides
        c1, a1 = rest[0].coeff, rest[0].exponent
        later = rest[1:]
        r = _doubling_search(
            lambda r: math.fsum(abs(t.coeff) * r ** (t.exponent - a1) for t in later) <= abs(c1) / 2,
            1.0, lambda r: 2 * r)
        return r, c0 * c1 > 0

    r = _dominance_radius(expr)
    if r is None:
        return None, False
    if a0 > 0:
        return max(r, (2 * delta / abs(c0)) ** (1.0 / a0)), True
    return max(r, (delta / (1.5 * abs(c0))) ** (1.0 / a0) * (1 + 1e-9)), False


def _dominance_radius(expr: Expr):
    """R >= 1 beyond which the leading term outweighs the rest twice over."""
    c0, a0 = expr.leading.coeff, expr.leading.exponent
    rest = expr.terms[1:]
    return _doubling_search(
        lambda r: math.fsum(abs(t.coeff) * r ** (t.exponent - a0) for t in rest) <= abs(c0) / 2,
        1.0, lambda r: 2 * r)


def _head_radius(expr: Expr):
    """r <= 1 below which the trailing term outweighs the rest twice over."""
    cm, am = expr.trailing.coeff, expr.trailing.exponent
    rest = expr.terms[:-1]
    return _doubling_search(
        lambda r: math.fsum(abs(t.coeff) * r ** (t.exponent - am) for t in rest) <= abs(cm) / 2,
        1.0, lambda r: r / 2)


def _head_cutoff(expr: Expr, delta: float):
    """r in (0, 1] with |expr| >= delta on (0, r], for a trailing exponent < 0."""
    cm, am = expr.trailing.coeff, expr.trailing.exponent
    r = _head_radius(expr)
    if r is None:
        return None
    return min(r, (2 * delta / abs(cm)) ** (1.0 / am))


def _sample_points(lo: float, hi: float, n: int) -> np.ndarray:
    k = max(n // 3, 4)
    span = hi - lo
    geo = np.geomspace(1e-12, 1.0, k)
    pts = np.concatenate([np.linspace(lo, hi, n - 2 * k), lo + span * geo, hi - span * geo, [lo, hi]])
    pts = np.unique(np.clip(pts, lo, hi))
    return pts


def _bracketed_superlevel(expr: Expr, delta: float, lo: float, hi: float, opts: NumericOptions):
    """Closed sub-intervals of [lo, hi] where |expr| >= delta, found by grid bracketing and bisection."""
    if lo == hi:
        return [Interval.point(lo)] if abs(expr(lo)) >= delta else []

    def g(x):
        return abs(expr(x)) - delta

    xs = _sample_points(lo, hi, opts.grid_points)
    gs = np.abs(expr.evaluate_array(xs)) - delta
    roots = []
    for k in range(len(xs) - 1):
        inside_a, inside_b = gs[k] >= 0, gs[k + 1] >= 0
        if inside_a == inside_b:
            continue
        if gs[k] == 0:
            roots.append(float(xs[k]))
            continue
        roots.append(optimize.bisect(g, xs[k], xs[k + 1], xtol=opts.xtol))

    cuts = [lo] + roots + [hi]
    out = []
    for u, v in zip(cuts, cuts[1:]):
        if v <= u:
            continue
        if g(0.5 * (u + v)) >= 0:
            out.append(Interval.closed(u, v))
    return out


def expr_roots(expr: Expr, iv: Interval, opts: NumericOptions = DEFAULT_OPTIONS):
    """Sign changes of expr strictly inside iv. Single terms and constants have none there."""
    if len(expr.terms) < 2:
        return []
    lo, hi = iv.lo, iv.hi
    if hi == INF or lo == -INF:
        R = _dominance_radius(expr)
        if R is None:
            return []
        lo, hi = max(lo, -R), min(hi, R)
    if lo == 0 and expr.min_exponent < 0:
        r = _head_radius(expr)
        if r is None:
            return []
        lo = min(r, hi)
    if not lo < hi:
        return []

    xs = _sample_points(lo, hi, opts.grid_points)
    ys = expr.evaluate_array(xs)
    roots = []
    for k in range(len(xs) - 1):
        if ys[k] == 0 and iv.lo < xs[k] < iv.hi:
            roots.append(float(xs[k]))
        elif ys[k] * ys[k + 1] < 0:
            roots.append(optimize.bisect(expr, xs[k], xs[k + 1], xtol=opts.xtol))
    return roots


def _piece_superlevel(iv: Interval, expr: Expr, delta: float, opts: NumericOptions):
    if expr.is_zero:
        return []
    if expr.is_constant:
        return [iv] if abs(expr.leading.coeff) >= delta else []

    if expr.is_single and iv.lo >= 0:
        c, a = expr.leading.coeff, expr.leading.exponent
        t = (delta / abs(c)) ** (1.0 / a)
        bound = Interval(t, INF, True, False) if a > 0 else Interval(-INF, t, False, True)
        hit = intersect_intervals(iv, bound)
        return [hit] if hit is not None else []

    regions = []
    s_lo, s_hi = iv.lo, iv.hi

    if iv.lo == 0 and expr.min_exponent < 0:
        r = _head_cutoff(expr, delta)
        if r is None:
            logger.warning("Could not isolate the singular head of %s; sampling from 1e-300", expr)
            r = 1e-300
        regions.append(Interval(0.0, r, False, True))
        s_lo = r

    if iv.hi == INF:
        R, include = _tail_cutoff(expr, delta)
        if R is None:
            raise ResourceLimitError(f"Could not bound the tail of {expr}")
        if include:
            regions.append(Interval(R, INF, True, False))
        s_hi = R

    if iv.lo == -INF:
        R, include = _tail_cutoff(expr, delta)
        if R is None:
            raise ResourceLimitError(f"Could not bound the tail of {expr}")
        if include:
            regions.append(Interval(-INF, -R, False, True))
        s_lo = -R

    s_lo, s_hi = max(s_lo, iv.lo), min(s_hi, iv.hi)
    if s_lo <= s_hi:
        regions.extend(_bracketed_superlevel(expr, delta, s_lo, s_hi, opts))

    clipped = intersect(IntervalSet(tuple(regions)), IntervalSet.of(iv))
    return list(clipped.parts)


def superlevel_set(f: PiecewiseFunction, delta: float, opts: NumericOptions = DEFAULT_OPTIONS) -> IntervalSet:
    """{x : |f(x)| >= delta}, closed at every located crossing."""
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    parts = []
    for piece in f.pieces:
        parts.extend(_piece_superlevel(piece.interval, piece.expr, delta, opts))
    return IntervalSet(tuple(parts))


# ==========================================
#  PART 4: Integrals with divergence classification
# ==========================================

class IntegralTag(str, Enum):
    FINITE = "Finite"
    DIVERGENT = "Divergent"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class IntegralValue:
    tag: IntegralTag
    value: Optional[float] = None
    err: Optional[float] = None
    reason: str = ""

    @classmethod
    def finite(cls, value, err=0.0, reason=""):
        return cls(IntegralTag.FINITE, float(value), float(err), reason)

    @classmethod
    def divergent(cls, reason):
        return cls(IntegralTag.DIVERGENT, reason=reason)

    @classmethod
    def unknown(cls, reason):
        return cls(IntegralTag.UNKNOWN, reason=reason)

    @property
    def is_finite(self):
        return self.tag == IntegralTag.FINITE

    @property
    def is_divergent(self):
        return self.tag == IntegralTag.DIVERGENT

    @property
    def is_unknown(self):
        return self.tag == IntegralTag.UNKNOWN

    def upper(self) -> float:
        return self.value + self.err if self.is_finite else INF

    def __add__(self, other: "IntegralValue") -> "IntegralValue":
        # integrands are non-negative, so one divergent part makes the whole divergent
        if self.is_divergent:
            return self
        if other.is_divergent:
            return other
        if self.is_unknown:
            return self
        if other.is_unknown:
            return other
        return IntegralValue.finite(self.value + other.value, self.err + other.err)

    def to_dict(self):
        d = {"tag": self.tag.value}
        if self.is_finite:
            d["value"] = self.value
            d["err"] = self.err
        if self.reason:
            d["reason"] = self.reason
        return d

    def __str__(self):
        if self.is_finite:
            return f"Finite({self.value:.6g} ± {self.err:.1e})"
        return f"{self.tag.value}({self.reason})"


def _power_integral(beta: float, u: float, v: float) -> IntegralValue:
    """∫_u^v y^beta dy for 0 <= u <= v <= inf."""
    if u == v:
        return IntegralValue.finite(0.0)
    if beta == -1.0:
        if u == 0:
            return IntegralValue.divergent("zero-boundary exponent -1")
        if v == INF:
            return IntegralValue.divergent("divergent tail, exponent -1")
        value = math.log(v) - math.log(u)
    elif beta < -1.0:
        if u == 0:
            return IntegralValue.divergent(f"zero-boundary exponent {beta:g}")
        value = (v ** (beta + 1) - u ** (beta + 1)) / (beta + 1)
    else:
        if v == INF:
            return IntegralValue.divergent(f"divergent tail, exponent {beta:g}")
        value = (v ** (beta + 1) - u ** (beta + 1)) / (beta + 1)
    return IntegralValue.finite(value, 8 * _EPS * abs(value))


def _single_term_integral(term: PowerTerm, p: float, part: Interval) -> IntegralValue:
    scale_ = abs(term.coeff) ** p
    beta = term.exponent * p
    total = IntegralValue.finite(0.0)
    if part.lo < 0:
        # only integer exponents reach negative x: |x^a| = |x|^a
        total = total + _power_integral(beta, max(-part.hi, 0.0), -part.lo)
    if part.hi > 0:
        total = total + _power_integral(beta, max(part.lo, 0.0), part.hi)
    if not total.is_finite:
        return total
    value = scale_ * total.value
    return IntegralValue.finite(value, scale_ * total.err + 4 * _EPS * abs(value))


def _quad(func, a, b, opts: NumericOptions):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value, abserr = integrate.quad(func, a, b, epsabs=opts.quad_tol, epsrel=1e-10, limit=opts.quad_limit)
    if caught or not math.isfinite(value) or abserr > max(opts.quad_tol, 1e-10 * abs(value)):
        msg = str(caught[0].message).splitlines()[0] if caught else f"error estimate {abserr:.2e}"
        return IntegralValue.unknown(f"quadrature on [{a:g}, {b:g}] did not converge: {msg}")
    return IntegralValue.finite(value, abserr)


def _multi_term_integral(expr: Expr, p: float, part: Interval, opts: NumericOptions) -> IntegralValue:
    if part.hi == INF and p * expr.max_exponent >= -1:
        return IntegralValue.divergent(f"divergent tail, exponent {p * expr.max_exponent:g}")
    if part.lo == -INF and p * expr.max_exponent >= -1:
        return IntegralValue.divergent(f"divergent tail, exponent {p * expr.max_exponent:g}")

    def integrand(x):
        return abs(expr(x)) ** p

    lo, hi = part.lo, part.hi
    singular_head = lo == 0 and expr.min_exponent < 0
    if singular_head and p * expr.min_exponent <= -1:
        return IntegralValue.divergent(f"zero-boundary exponent {p * expr.min_exponent:g}")

    total = IntegralValue.finite(0.0)
    if singular_head:
        # x = u^k removes the algebraic singularity at 0
        k = max(1.0, 1.0 / (1.0 + p * expr.min_exponent))
        cut = min(hi, 1.0)
        total = total + _quad(lambda u: integrand(u ** k) * k * u ** (k - 1), 0.0, cut ** (1.0 / k), opts)
        lo = cut
    if hi > lo:
        total = total + _quad(integrand, lo, hi, opts)
    return total


def lp_integral_on(f: PiecewiseFunction, p: float, B: IntervalSet,
                   opts: NumericOptions = DEFAULT_OPTIONS) -> IntegralValue:
    """∫_B |f|^p dμ, with Divergent certified by the tail-exponent rule only."""
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    if not f.domain.contains_set(B):
        raise DomainError(f"Integration set {B} is not contained in {f.domain.carrier}")

    total = IntegralValue.finite(0.0)
    for piece in f.pieces:
        if piece.expr.is_zero:
            continue
        for part in intersect(IntervalSet.of(piece.interval), B):
            if part.is_point:
                continue
            if piece.expr.is_single:
                total = total + _single_term_integral(piece.expr.leading, p, part)
            else:
                total = total + _multi_term_integral(piece.expr, p, part, opts)
            if total.is_divergent:
                return total
    return total


def lp_norm(f: PiecewiseFunction, p: float, opts: NumericOptions = DEFAULT_OPTIONS) -> IntegralValue:
    """∫_X |f|^p dμ over the whole carrier."""
    return lp_integral_on(f, p, f.domain.as_set, opts)


def split_divergence_test(f: PiecewiseFunction, p: float, B: IntervalSet, X: Domain,
                          opts: NumericOptions = DEFAULT_OPTIONS) -> IntegralValue:
    """
    Certifies ∫_B |f|^p = ∞ from ∫_X |f|^p = ∞ and ∫_{B^c} |f|^p < ∞;
    otherwise falls back to integrating over B directly.
    """
    if not X.contains_set(B):
        raise DomainError(f"Set {B} is not contained in {X.carrier}")
    whole = lp_integral_on(f, p, X.as_set, opts)
    if whole.is_divergent:
        rest = lp_integral_on(f, p, complement(B, X), opts)
        if rest.is_finite:
            return IntegralValue.divergent(
                f"split: integral over X diverges ({whole.reason}), complement part is {rest.value:.6g}")
    return lp_integral_on(f, p, B, opts)


# ==========================================
#  PART 5: n-parameterised sequences
# ==========================================

@dataclass(frozen=True)
class Monomial:
    """a · n^b, where a and b may each carry a factor p^k and an alternating sign (-1)^n."""
    a: float
    b: float = 0.0
    a_p: float = 0.0
    b_p: float = 0.0
    alt: bool = False

    def value(self, n: int, p: float) -> float:
        a = self.a * p ** self.a_p if self.a_p else self.a
        b = self.b * p ** self.b_p if self.b_p else self.b
        v = a if b == 0 else a * float(n) ** b
        return -v if (self.alt and n % 2) else v


@dataclass(frozen=True)
class Slot:
    monomials: Tuple[Monomial, ...]

    @classmethod
    def const(cls, v: float):
        return cls((Monomial(float(v)),))

    @classmethod
    def mono(cls, a, b=0.0, a_p=0.0, b_p=0.0, alt=False):
        return cls((Monomial(a, b, a_p, b_p, alt),))

    @property
    def is_constant(self) -> bool:
        return all(m.b == 0 and not m.alt for m in self.monomials)

    def value(self, n: int, p: float) -> float:
        values = [m.value(n, p) for m in self.monomials]
        if len(values) == 1:
            return values[0]
        return math.fsum(values)


@dataclass(frozen=True)
class TermTemplate:
    coeff: Slot
    exponent: Slot


@dataclass(frozen=True)
class PieceTemplate:
    lo: Slot
    hi: Slot
    lo_closed: bool
    hi_closed: bool
    terms: Tuple[TermTemplate, ...]


@dataclass(frozen=True)
class FunctionSequence:
    domain: Domain
    pieces: Tuple[PieceTemplate, ...]
    p_exponent: float = 1.0
    label: str = ""

    @classmethod
    def from_function(cls, f: PiecewiseFunction, p: float = 1.0, label: str = ""):
        """The constant sequence f_n = f."""
        pieces = tuple(
            PieceTemplate(
                Slot.const(pc.interval.lo), Slot.const(pc.interval.hi),
                pc.interval.lo_closed, pc.interval.hi_closed,
                tuple(TermTemplate(Slot.const(t.coeff), Slot.const(t.exponent)) for t in pc.expr.terms),
            )
            for pc in f.pieces
        )
        return cls(f.domain, pieces, p, label)

    def with_p(self, p: float) -> "FunctionSequence":
        return replace(self, p_exponent=p)


def instantiate(seq: FunctionSequence, n: int) -> PiecewiseFunction:
    """f_n: every slot evaluated at n, empty pieces dropped before the partition check."""
    if n < 1:
        raise DomainError(f"Sequence index must be >= 1, got {n}")
    p = seq.p_exponent
    carrier = seq.domain.carrier
    pieces = []
    for idx, tpl in enumerate(seq.pieces):
        lo, hi = tpl.lo.value(n, p), tpl.hi.value(n, p)
        if lo < carrier.lo or hi > carrier.hi:
            raise DomainError(
                f"Template piece {idx} escapes the carrier {carrier} at n={n}: [{lo:g}, {hi:g}]")
        iv = make_interval(lo, hi, tpl.lo_closed, tpl.hi_closed)
        if iv is None:
            continue
        expr = Expr(tuple(PowerTerm(t.coeff.value(n, p), t.exponent.value(n, p)) for t in tpl.terms))
        pieces.append(Piece(iv, expr))
    try:
        return PiecewiseFunction(seq.domain, tuple(pieces))
    except DomainError as e:
        raise DomainError(f"Template instantiation failed at n={n}: {e}") from e
