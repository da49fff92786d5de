"""
Weak L_p quasinorm, weak L_p convergence, almost-L_p (A_p) membership
certificates and the constructive weak-L_p to A_p embedding on finite
measure spaces.

The profile F(δ) = δ^p · μ({|f| >= δ}) is maximised in t = log δ. Its
breakpoints are the critical levels of |f| (values at piece endpoints and at
interior extrema); suprema approached only as δ -> 0+ or δ -> ∞ are settled
by the dominant-exponent rule and reported as not attained.
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from config import AP_MAX_DOUBLINGS, AP_MEASURE_FRACTION, DEFAULT_DELTA_GRID, GOLDEN_COARSE_POINTS, GOLDEN_TTOL
from services.convergence import DEFAULT_RULE, HorizonRule, Verdict, _map_indices, decide_tendency
from services.func_model import (
    DEFAULT_OPTIONS, Expr, FunctionSequence, IntegralValue, NumericOptions, PiecewiseFunction,
    expr_roots, instantiate, lp_integral_on, lp_norm, subtract, superlevel_set,
)
from services.measure_core import INF, IntervalSet, complement, encode_number, is_subset, measure
from utils.errors import PreconditionError
from utils.logger import get_logger

logger = get_logger(__name__)

# search span, in log δ, beyond the outermost critical levels
_LOG_SPAN = math.log(1e6)
_TIE_TOL = 1e-12
_MAX_REFINED_PEAKS = 4


def level_profile(f: PiecewiseFunction, p: float, delta: float, opts: NumericOptions = DEFAULT_OPTIONS) -> float:
    """F(δ) = δ^p · μ({|f| >= δ}); +inf when the superlevel set has infinite measure."""
    m = measure(superlevel_set(f, delta, opts))
    if math.isinf(m):
        return INF
    return delta ** p * m


# ==========================================
#  REPORTS
# ==========================================

@dataclass
class WeakLpReport:
    p: float
    tag: str
    value: Optional[float] = None
    maximizer_delta: Optional[float] = None
    attained: bool = True
    reason: str = ""
    probes: List[Tuple[float, float]] = field(default_factory=list)
    per_n: Optional[List[float]] = None
    indices: Optional[List[int]] = None
    verdict: Optional[Verdict] = None
    decision_rule: Optional[dict] = None

    @property
    def is_finite(self) -> bool:
        return self.tag == "Finite"

    @property
    def as_number(self) -> float:
        return self.value if self.is_finite else INF

    def rows(self, rule: HorizonRule = DEFAULT_RULE):
        if self.per_n is None:
            return [{"n": 1, "value": encode_number(self.as_number), "err": 0.0,
                     "verdict_contribution": rule.contribution(self.as_number)}]
        return [
            {"n": n, "value": encode_number(v), "err": 0.0, "verdict_contribution": rule.contribution(v)}
            for n, v in zip(self.indices, self.per_n)
        ]

    def to_dict(self):
        d = {
            "kind": "weak-lp",
            "p": self.p,
            "quasinorm": {"tag": self.tag, "value": self.value},
            "maximizer_delta": encode_number(self.maximizer_delta) if self.maximizer_delta is not None else None,
            "attained": self.attained,
            "reason": self.reason,
            "probes": [[d_, encode_number(v)] for d_, v in self.probes],
        }
        if self.per_n is not None:
            d["indices"] = list(self.indices)
            d["per_n"] = [encode_number(v) for v in self.per_n]
            d["verdict"] = self.verdict.value
            d["decision_rule"] = self.decision_rule
        return d


class MembershipStatus(str, Enum):
    MEMBER = "member"
    NOT_MEMBER = "not-member"
    UNKNOWN = "unknown"


@dataclass
class ApWitness:
    delta: float
    E: IntervalSet
    measure: float
    level: Optional[float]
    integral: IntegralValue

    @property
    def ok(self) -> bool:
        return self.integral.is_finite and self.measure < self.delta

    def to_dict(self):
        return {
            "delta": self.delta,
            "E": self.E.to_dict(),
            "measure": self.measure,
            "level": self.level,
            "integral": self.integral.to_dict(),
        }


@dataclass
class ApCertificate:
    p: float
    status: MembershipStatus
    witness_map: List[ApWitness]
    obstruction: Optional[str] = None
    reason: str = ""

    @property
    def member(self) -> bool:
        return self.status == MembershipStatus.MEMBER

    def rows(self, rule: HorizonRule = DEFAULT_RULE):
        return [
            {"n": i, "value": w.integral.value, "err": w.integral.err,
             "verdict_contribution": "ok" if w.ok else "failed", "delta": w.delta, "measure": w.measure}
            for i, w in enumerate(self.witness_map, start=1)
        ]

    def to_dict(self):
        return {
            "kind": "ap-membership",
            "p": self.p,
            "member": self.member,
            "status": self.status.value,
            "witness_map": [w.to_dict() for w in self.witness_map],
            "obstruction": self.obstruction,
            "reason": self.reason,
        }


@dataclass
class EmbeddingResult:
    K: int
    E_delta: IntervalSet
    bound: float
    integral: IntegralValue
    C: float
    delta: float
    measure: float
    holds: bool

    def to_dict(self):
        return {
            "kind": "embedding",
            "K": self.K,
            "E_delta": self.E_delta.to_dict(),
            "measure": self.measure,
            "bound": self.bound,
            "integral": self.integral.to_dict(),
            "C": self.C,
            "delta": self.delta,
            "holds": self.holds,
        }


# ==========================================
#  QUASINORM
# ==========================================

def _limit_abs(expr: Expr, x: float) -> float:
    """lim |expr| at a piece endpoint (possibly infinite)."""
    if math.isinf(x):
        a0 = expr.max_exponent
        if a0 > 0:
            return INF
        return abs(expr.leading.coeff) if a0 == 0 else 0.0
    if x == 0 and expr.min_exponent < 0:
        return INF
    return abs(expr(x))


def _critical_levels(f: PiecewiseFunction, opts: NumericOptions) -> List[float]:
    levels = set()
    for piece in f.pieces:
        expr, iv = piece.expr, piece.interval
        if expr.is_zero:
            continue
        candidates = [_limit_abs(expr, iv.lo), _limit_abs(expr, iv.hi)]
        candidates.extend(abs(expr(r)) for r in expr_roots(expr.derivative(), iv, opts))
        levels.update(v for v in candidates if 0 < v < INF)
    return sorted(levels)


def _small_delta_limit(f: PiecewiseFunction, p: float):
    """(limit of F as δ -> 0+, reason); the limit is inf when F is unbounded there."""
    limit = 0.0
    for piece in f.pieces:
        expr, iv = piece.expr, piece.interval
        if expr.is_zero or iv.is_bounded:
            continue
        a0, c0 = expr.max_exponent, expr.leading.coeff
        if a0 >= 0:
            return INF, f"μ({{|f| >= δ}}) is infinite on {iv} for small δ"
        e = p + 1.0 / a0
        if e < 0:
            return INF, f"F(δ) ~ δ^{e:g} as δ -> 0+ on the tail {iv}"
        if e == 0:
            limit += abs(c0) ** p
    return limit, ""


def _large_delta_limit(f: PiecewiseFunction, p: float):
    """(limit of F as δ -> ∞, reason)."""
    limit = 0.0
    for piece in f.pieces:
        expr, iv = piece.expr, piece.interval
        if expr.is_zero:
            continue
        if not iv.is_bounded and expr.max_exponent > 0:
            return INF, f"|f| is unbounded on the tail {iv}"
        if iv.lo == 0 and expr.min_exponent < 0:
            cm, am = expr.trailing.coeff, expr.trailing.exponent
            e = p + 1.0 / am
            if e > 0:
                return INF, f"F(δ) ~ δ^{e:g} as δ -> ∞ near x = 0"
            if e == 0:
                limit += abs(cm) ** p
    return limit, ""


class _Maximiser:
    def __init__(self, f, p, opts):
        self.f, self.p, self.opts = f, p, opts
        self.best_value, self.best_delta = -1.0, None
        self.probes = []
        self.infinite_at = None

    def consider(self, delta: float) -> float:
        v = level_profile(self.f, self.p, delta, self.opts)
        self.probes.append((delta, v))
        if math.isinf(v):
            self.infinite_at = delta
        elif v > self.best_value:
            self.best_value, self.best_delta = v, delta
        return v

    def segment(self, a: float, b: float, open_lo: bool = False, open_hi: bool = False):
        """
        Coarse scan of the open segment (a, b) in log δ, then a bounded
        golden-section (Brent) refinement around each coarse local maximum.
        Critical-level ends count as neighbours, so a peak between the outermost
        sample and a critical level is still refined. Open ends, toward δ -> 0
        or δ -> ∞, are left to the limit checks.
        """
        ts = np.linspace(a, b, GOLDEN_COARSE_POINTS + 2)
        values = [self.consider(math.exp(t)) for t in ts[1:-1]]
        if self.infinite_at is not None or max(values) == min(values):
            return
        last = len(values) - 1
        peaks = [i for i, v in enumerate(values)
                 if (i > 0 or not open_lo) and (i < last or not open_hi)
                 and (i == 0 or v >= values[i - 1]) and (i == last or v > values[i + 1])]
        peaks = sorted(peaks, key=lambda i: values[i], reverse=True)[:_MAX_REFINED_PEAKS]

        def neg(t):
            return -level_profile(self.f, self.p, math.exp(t), self.opts)

        for i in peaks:
            lo, hi = ts[i], ts[i + 2]
            res = optimize.minimize_scalar(neg, bounds=(lo, hi), method="bounded",
                                           options={"xatol": GOLDEN_TTOL})
            if not res.success:
                logger.debug("bounded search on (%g, %g) stopped: %s", lo, hi, res.message)
            self.consider(math.exp(float(res.x)))


def weak_lp_quasinorm(f: PiecewiseFunction, p: float, opts: NumericOptions = DEFAULT_OPTIONS) -> WeakLpReport:
    if p < 1:
        raise PreconditionError(f"p must be >= 1, got {p}")
    if f.is_zero:
        return WeakLpReport(p, "Finite", 0.0, None, True, "zero function")

    lo_limit, lo_reason = _small_delta_limit(f, p)
    if math.isinf(lo_limit):
        return WeakLpReport(p, "Infinite", reason=lo_reason, attained=False, maximizer_delta=0.0)
    hi_limit, hi_reason = _large_delta_limit(f, p)

    search = _Maximiser(f, p, opts)
    levels = _critical_levels(f, opts)
    for L in levels:
        search.consider(L)

    ts = [math.log(L) for L in levels] or [0.0]
    bounds = [ts[0] - _LOG_SPAN] + ts + [ts[-1] + _LOG_SPAN]
    last = len(bounds) - 2
    for i, (a, b) in enumerate(zip(bounds, bounds[1:])):
        if search.infinite_at is not None:
            break
        if b > a:
            search.segment(a, b, open_lo=i == 0, open_hi=i == last)

    if search.infinite_at is not None:
        return WeakLpReport(p, "Infinite", reason=f"μ({{|f| >= δ}}) is infinite at δ={search.infinite_at:g}",
                            attained=False, maximizer_delta=search.infinite_at, probes=search.probes)
    if math.isinf(hi_limit):
        return WeakLpReport(p, "Infinite", reason=hi_reason, attained=False, maximizer_delta=INF,
                            probes=search.probes)

    value, delta, attained, reason = search.best_value, search.best_delta, True, "attained at a probed level"
    for limit, where, label in ((lo_limit, 0.0, "δ -> 0+"), (hi_limit, INF, "δ -> ∞")):
        if limit > value + _TIE_TOL * max(1.0, limit):
            value, delta, attained, reason = limit, where, False, f"supremum approached as {label}"

    logger.debug("weak_lp_quasinorm p=%g -> %.12g at δ=%s (%s)", p, value, delta, reason)
    return WeakLpReport(p, "Finite", value, delta, attained, reason, probes=search.probes)


def check_weak_lp_convergence(seq: FunctionSequence, f: PiecewiseFunction, p: float, horizon: int,
                              rule: HorizonRule = DEFAULT_RULE, opts: NumericOptions = DEFAULT_OPTIONS,
                              workers: int = 1) -> WeakLpReport:
    indices = list(range(1, horizon + 1))

    def work(n):
        return weak_lp_quasinorm(subtract(instantiate(seq, n), f, opts), p, opts)

    reports = _map_indices(work, indices, workers)
    per_n = [r.as_number for r in reports]
    verdict, evidence = decide_tendency(indices, per_n, rule)
    last = reports[-1]
    logger.info("check_weak_lp_convergence p=%g horizon=%d -> %s", p, horizon, verdict.value)
    return WeakLpReport(
        p, last.tag, last.value, last.maximizer_delta, last.attained,
        reason="quasinorm at the horizon index", per_n=per_n, indices=indices,
        verdict=verdict, decision_rule={**rule.to_dict(), **evidence},
    )


# ==========================================
#  A_p MEMBERSHIP
# ==========================================

def _tail_obstruction(f: PiecewiseFunction, p: float) -> Optional[str]:
    """Removing a finite-measure set cannot cancel a tail with p·α_max >= -1."""
    for piece in f.pieces:
        if piece.expr.is_zero or piece.interval.is_bounded:
            continue
        e = p * piece.expr.max_exponent
        if e >= -1:
            return f"divergent tail, exponent {e:g}"
    return None


def _level_for(f: PiecewiseFunction, target: float, opts: NumericOptions):
    """Smallest K (to bisection accuracy) with μ({|f| >= K}) < target, or None."""
    def mu(K):
        return measure(superlevel_set(f, K, opts))

    K_hi = 1.0
    steps = 0
    while mu(K_hi) >= target:
        K_hi *= 2.0
        steps += 1
        if steps > AP_MAX_DOUBLINGS:
            return None
    K_lo = K_hi / 2.0
    while mu(K_lo) < target:
        K_hi, K_lo = K_lo, K_lo / 2.0
        steps += 1
        if steps > AP_MAX_DOUBLINGS:
            return K_hi

    # bisection in log K
    for _ in range(200):
        if K_hi / K_lo <= 1 + 1e-9:
            break
        mid = math.sqrt(K_lo * K_hi)
        if mu(mid) < target:
            K_hi = mid
        else:
            K_lo = mid
    return K_hi


def check_ap_membership(f: PiecewiseFunction, p: float, deltas: Sequence[float] = tuple(DEFAULT_DELTA_GRID),
                        fraction: float = AP_MEASURE_FRACTION,
                        opts: NumericOptions = DEFAULT_OPTIONS) -> ApCertificate:
    if p < 1:
        raise PreconditionError(f"p must be >= 1, got {p}")
    deltas = list(deltas)
    if not deltas or any(d <= 0 for d in deltas):
        raise PreconditionError("The δ grid must be non-empty and positive")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise PreconditionError("The δ grid must be strictly decreasing")

    obstruction = _tail_obstruction(f, p)
    if obstruction:
        logger.info("A_p membership refuted: %s", obstruction)
        return ApCertificate(p, MembershipStatus.NOT_MEMBER, [], obstruction, "analytic tail obstruction")

    X = f.domain
    whole = lp_norm(f, p, opts)
    if whole.is_finite:
        witnesses = [ApWitness(d, IntervalSet.empty(), 0.0, None, whole) for d in deltas]
        return ApCertificate(p, MembershipStatus.MEMBER, witnesses, None, "f is in L_p; E_δ = ∅")

    witnesses = []
    problems = []
    for d in deltas:
        K = _level_for(f, fraction * d, opts)
        if K is None:
            problems.append(f"K-bisection failed at δ={d:g}: no level with μ({{|f| >= K}}) < {fraction * d:g}")
            witnesses.append(ApWitness(d, X.as_set, X.total_measure, None,
                                       IntegralValue.unknown("no admissible level")))
            continue
        E = superlevel_set(f, K, opts)
        integral = lp_integral_on(f, p, complement(E, X), opts)
        w = ApWitness(d, E, measure(E), K, integral)
        witnesses.append(w)
        if not w.ok:
            problems.append(f"δ={d:g}: integral off E_δ is {integral}")
    for prev, nxt in zip(witnesses, witnesses[1:]):
        if not is_subset(nxt.E, prev.E):
            logger.warning("E_δ not nested between δ=%g and δ=%g", prev.delta, nxt.delta)

    if problems:
        return ApCertificate(p, MembershipStatus.UNKNOWN, witnesses, None, "; ".join(problems))
    return ApCertificate(p, MembershipStatus.MEMBER, witnesses, None,
                         f"finite integral off a superlevel set of measure < {fraction:g}·δ at every δ")


def weak_to_ap_embedding(f: PiecewiseFunction, p: float, delta: float,
                         opts: NumericOptions = DEFAULT_OPTIONS) -> EmbeddingResult:
    """E_δ = {|f| >= K} for the least integer K with C/K^p < δ; the bound is K^p·μ(X)."""
    X = f.domain
    if not X.is_finite:
        raise PreconditionError(f"The embedding needs a finite-measure domain, got {X.carrier}")
    if not delta > 0:
        raise PreconditionError(f"delta must be positive, got {delta}")
    q = weak_lp_quasinorm(f, p, opts)
    if not q.is_finite:
        raise PreconditionError(f"f is not in weak L_{p:g}: {q.reason}")
    C = q.value

    K = max(1, math.floor((C / delta) ** (1.0 / p)) + 1)
    while K > 1 and C / (K - 1) ** p < delta:
        K -= 1
    while C / K ** p >= delta:
        K += 1

    E = superlevel_set(f, float(K), opts)
    m = measure(E)
    integral = lp_integral_on(f, p, complement(E, X), opts)
    bound = K ** p * X.total_measure
    holds = integral.is_finite and integral.value <= bound + integral.err + opts.report_tol and m < delta
    if not holds:
        logger.error("Embedding check failed: K=%d, μ(E)=%g, integral=%s, bound=%g", K, m, integral, bound)
    return EmbeddingResult(K, E, bound, integral, C, delta, m, holds)
