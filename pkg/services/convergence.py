"""
Finite-horizon checkers for convergence in measure, asymptotic L_p-convergence
and both Cauchy variants, plus the constructive witness synthesizer.

Every checker returns a report carrying its per-index evidence. A verdict is
a horizon certificate: limits are never decided from finitely many terms, so
Inconclusive is a legitimate answer.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import (
    DECAY_SLOPE_TOL, DEFAULT_DELTA_GRID, DEFAULT_PAIR_BUDGET, FAIL_THRESHOLD, FIT_FACTOR, MIN_DECAY_SLOPE,
    MIN_HORIZON, PAIR_WINDOW, PASS_THRESHOLD,
)
from services.func_model import (
    DEFAULT_OPTIONS, FunctionSequence, IntegralValue, NumericOptions, PiecewiseFunction, Slot,
    instantiate, split_divergence_test, subtract, superlevel_set,
)
from services.measure_core import (
    Domain, IntervalSet, complement, intersect, make_interval, measure,
)
from utils.errors import DomainError, PreconditionError
from utils.logger import get_logger

logger = get_logger(__name__)


class Verdict(str, Enum):
    CONVERGES = "ConvergesAtHorizon"
    FAILS = "FailsAtHorizon"
    INCONCLUSIVE = "Inconclusive"


def combine_verdicts(*verdicts: Verdict) -> Verdict:
    if any(v == Verdict.FAILS for v in verdicts):
        return Verdict.FAILS
    if all(v == Verdict.CONVERGES for v in verdicts):
        return Verdict.CONVERGES
    return Verdict.INCONCLUSIVE


# ==========================================
#  HORIZON DECISION RULE
# ==========================================

@dataclass(frozen=True)
class HorizonRule:
    pass_threshold: float = PASS_THRESHOLD
    fail_threshold: float = FAIL_THRESHOLD
    min_decay_slope: float = MIN_DECAY_SLOPE
    fit_factor: float = FIT_FACTOR

    @classmethod
    def from_settings(cls, settings: dict):
        return cls(
            pass_threshold=settings.get("pass_threshold", PASS_THRESHOLD),
            fail_threshold=settings.get("fail_threshold", FAIL_THRESHOLD),
            min_decay_slope=settings.get("min_decay_slope", MIN_DECAY_SLOPE),
            fit_factor=settings.get("fit_factor", FIT_FACTOR),
        )

    def to_dict(self):
        return {
            "pass_threshold": self.pass_threshold,
            "fail_threshold": self.fail_threshold,
            "min_decay_slope": self.min_decay_slope,
            "fit_factor": self.fit_factor,
            "window": "top half of the horizon",
        }

    def contribution(self, value: Optional[float]) -> str:
        """Per-index label for CSV export."""
        if value is None:
            return "unknown"
        if math.isinf(value):
            return "divergent"
        if value <= self.pass_threshold:
            return "below-pass"
        if value > self.fail_threshold:
            return "above-fail"
        return "between"


DEFAULT_RULE = HorizonRule()


def _loglog_fit(ns, values):
    slope, intercept = np.polyfit(np.log(ns), np.log(values), 1)
    return float(slope), float(intercept)


def decide_tendency(indices: Sequence[int], values: Sequence[Optional[float]],
                    rule: HorizonRule = DEFAULT_RULE) -> Tuple[Verdict, dict]:
    """
    Decides "a_n -> 0" from a finite sample.

    values: float per index; math.inf marks a certified divergence, None an
    unknown value. Returns the verdict and the evidence the rule looked at.
    """
    evidence = {"slope": None, "a_H": None, "liminf_top": None, "reason": ""}
    if not indices:
        evidence["reason"] = "no indices"
        return Verdict.INCONCLUSIVE, evidence

    if any(v is not None and math.isinf(v) for v in values):
        evidence["reason"] = "certified divergence"
        return Verdict.FAILS, evidence

    H = max(indices)
    top = [(n, v) for n, v in zip(indices, values) if n >= H / 2]
    known = [(n, v) for n, v in top if v is not None]
    if not known:
        evidence["reason"] = "no known values in the top half"
        return Verdict.INCONCLUSIVE, evidence

    a_H = known[-1][1]
    liminf = min(v for _, v in known)
    evidence["a_H"] = a_H
    evidence["liminf_top"] = liminf

    positives = [(n, v) for n, v in known if v > 0]
    slope = None
    decays = False
    if len(positives) >= 2 and len({n for n, _ in positives}) >= 2:
        ns = np.array([n for n, _ in positives], dtype=float)
        vs = np.array([v for _, v in positives], dtype=float)
        slope, intercept = _loglog_fit(ns, vs)
        fitted = np.exp(intercept + slope * np.log(ns))
        majorised = bool(np.all(vs <= rule.fit_factor * fitted))
        decays = slope < -DECAY_SLOPE_TOL and majorised
        evidence["slope"] = slope
    else:
        decays = max(v for _, v in known) <= rule.pass_threshold

    small_enough = a_H <= rule.pass_threshold or (slope is not None and slope <= -rule.min_decay_slope)
    unknown_in_top = len(known) < len(top)

    if small_enough and decays and not unknown_in_top:
        evidence["reason"] = "decaying below threshold"
        return Verdict.CONVERGES, evidence
    if liminf > rule.fail_threshold:
        evidence["reason"] = "liminf over the top half exceeds the fail threshold"
        return Verdict.FAILS, evidence
    evidence["reason"] = "unknown values in the top half" if unknown_in_top else "no decisive trend"
    return Verdict.INCONCLUSIVE, evidence


def _map_indices(fn: Callable[[int], object], indices: Sequence[int], workers: int = 1) -> list:
    """Applies fn per index; results always come back in index order."""
    if workers <= 1:
        return [fn(k) for k in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, indices))


def _integral_number(iv: IntegralValue) -> Optional[float]:
    if iv.is_divergent:
        return math.inf
    if iv.is_unknown:
        return None
    return iv.value


# ==========================================
#  REPORTS
# ==========================================

@dataclass
class WitnessSequence:
    sets: Dict[int, IntervalSet]
    complement_measures: Dict[int, float]
    lambda_schedule: Optional[Dict[int, float]] = None
    thresholds: Optional[List[int]] = None
    truncated_at: Optional[int] = None

    @classmethod
    def from_sets(cls, sets: Dict[int, IntervalSet], domain: Domain, **extra):
        comp = {k: measure(complement(s, domain)) for k, s in sets.items()}
        return cls(dict(sets), comp, **extra)

    @property
    def is_synthesized(self) -> bool:
        return self.lambda_schedule is not None

    def covers(self, horizon: int) -> bool:
        return all(k in self.sets for k in range(1, horizon + 1))

    def to_dict(self):
        d = {
            "sets": {str(k): s.to_dict() for k, s in sorted(self.sets.items())},
            "complement_measures": {str(k): v for k, v in sorted(self.complement_measures.items())},
        }
        if self.lambda_schedule is not None:
            d["lambda_schedule"] = {str(k): v for k, v in sorted(self.lambda_schedule.items())}
            d["thresholds"] = list(self.thresholds or [])
            d["truncated_at"] = self.truncated_at
        return d


@dataclass
class InMeasureReport:
    delta: float
    horizon: int
    indices: List[int]
    measures: List[float]
    verdict: Verdict
    decision_rule: dict
    kind: str = "in-measure"
    pairs: int = 0

    def rows(self, rule: HorizonRule = DEFAULT_RULE):
        return [
            {"n": n, "value": v, "err": 0.0, "verdict_contribution": rule.contribution(v)}
            for n, v in zip(self.indices, self.measures)
        ]

    def to_dict(self):
        d = {
            "kind": self.kind,
            "delta": self.delta,
            "horizon": self.horizon,
            "indices": list(self.indices),
            "measures": list(self.measures),
            "verdict": self.verdict.value,
            "decision_rule": self.decision_rule,
        }
        if self.pairs:
            d["pairs"] = self.pairs
        return d


@dataclass
class AlphaPReport:
    p: float
    horizon: int
    indices: List[int]
    witness: WitnessSequence
    integrals: Dict[int, IntegralValue]
    verdict: Verdict
    complement_verdict: Verdict
    integral_verdict: Verdict
    decision_rule: dict
    kind: str = "alpha-p"
    bounds: Dict[int, float] = field(default_factory=dict)
    bound_violations: List[int] = field(default_factory=list)

    def rows(self, rule: HorizonRule = DEFAULT_RULE):
        out = []
        for n in self.indices:
            iv = self.integrals[n]
            out.append({
                "n": n,
                "value": iv.value if iv.is_finite else None,
                "err": iv.err if iv.is_finite else None,
                "verdict_contribution": rule.contribution(_integral_number(iv)),
                "complement_measure": self.witness.complement_measures.get(n),
            })
        return out

    def to_dict(self):
        d = {
            "kind": self.kind,
            "p": self.p,
            "horizon": self.horizon,
            "indices": list(self.indices),
            "witness": self.witness.to_dict(),
            "integrals": {str(k): self.integrals[k].to_dict() for k in self.indices},
            "verdict": self.verdict.value,
            "complement_verdict": self.complement_verdict.value,
            "integral_verdict": self.integral_verdict.value,
            "decision_rule": self.decision_rule,
        }
        if self.bounds:
            d["bounds"] = {str(k): v for k, v in sorted(self.bounds.items())}
            d["bound_violations"] = list(self.bound_violations)
        return d


# ==========================================
#  WITNESS TEMPLATES
# ==========================================

@dataclass(frozen=True)
class IntervalTemplate:
    lo: Slot
    hi: Slot
    lo_closed: bool = True
    hi_closed: bool = True

    def realize(self, n: int, p: float):
        return make_interval(self.lo.value(n, p), self.hi.value(n, p), self.lo_closed, self.hi_closed)


@dataclass(frozen=True)
class WitnessTemplate:
    """B_n as the whole domain, a templated union, or the domain minus a templated union."""
    kind: str
    intervals: Tuple[IntervalTemplate, ...] = ()

    KINDS = ("full", "sets", "complement")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise DomainError(f"Unknown witness kind '{self.kind}'; expected one of {', '.join(self.KINDS)}")

    def set_at(self, n: int, domain: Domain, p: float) -> IntervalSet:
        if self.kind == "full":
            return domain.as_set
        union = IntervalSet.of(*(t.realize(n, p) for t in self.intervals))
        if not domain.contains_set(union):
            raise DomainError(f"Witness set {union} at n={n} leaves the domain {domain.carrier}")
        if self.kind == "sets":
            return union
        return complement(union, domain)

    def realize(self, domain: Domain, p: float, horizon: int) -> WitnessSequence:
        sets = {k: self.set_at(k, domain, p) for k in range(1, horizon + 1)}
        return WitnessSequence.from_sets(sets, domain)


def full_witness(domain: Domain, horizon: int) -> WitnessSequence:
    return WitnessTemplate("full").realize(domain, 1.0, horizon)


# ==========================================
#  CHECKERS
# ==========================================

def _check_horizon(horizon: int):
    if horizon < MIN_HORIZON:
        raise PreconditionError(f"horizon must be >= {MIN_HORIZON}, got {horizon}")


def _check_delta(delta: float):
    if not delta > 0:
        raise PreconditionError(f"delta must be positive, got {delta}")


def _check_p(p: float):
    if p < 1:
        raise PreconditionError(f"p must be >= 1, got {p}")


def check_in_measure(seq: FunctionSequence, f: PiecewiseFunction, delta: float, horizon: int,
                     rule: HorizonRule = DEFAULT_RULE, opts: NumericOptions = DEFAULT_OPTIONS,
                     workers: int = 1) -> InMeasureReport:
    _check_delta(delta)
    _check_horizon(horizon)
    indices = list(range(1, horizon + 1))

    def work(n):
        g = subtract(instantiate(seq, n), f, opts)
        return measure(superlevel_set(g, delta, opts))

    measures = _map_indices(work, indices, workers)
    verdict, evidence = decide_tendency(indices, measures, rule)
    logger.info("check_in_measure delta=%g horizon=%d -> %s", delta, horizon, verdict.value)
    return InMeasureReport(delta, horizon, indices, measures, verdict, {**rule.to_dict(), **evidence})


def check_alpha_p(seq: FunctionSequence, f: PiecewiseFunction, p: float, witness: WitnessSequence,
                  horizon: int, rule: HorizonRule = DEFAULT_RULE, opts: NumericOptions = DEFAULT_OPTIONS,
                  workers: int = 1) -> AlphaPReport:
    _check_p(p)
    _check_horizon(horizon)
    if not witness.covers(horizon):
        raise PreconditionError(f"Witness does not define B_k for every k <= {horizon}")
    X = f.domain
    for k in range(1, horizon + 1):
        if not X.contains_set(witness.sets[k]):
            raise DomainError(f"Witness set B_{k} = {witness.sets[k]} is not contained in {X.carrier}")

    indices = list(range(1, horizon + 1))

    def work(k):
        g = subtract(instantiate(seq, k), f, opts)
        return split_divergence_test(g, p, witness.sets[k], X, opts)

    integrals = dict(zip(indices, _map_indices(work, indices, workers)))

    comp_verdict, comp_ev = decide_tendency(indices, [witness.complement_measures[k] for k in indices], rule)
    int_verdict, int_ev = decide_tendency(indices, [_integral_number(integrals[k]) for k in indices], rule)
    verdict = combine_verdicts(comp_verdict, int_verdict)

    bounds, violations = {}, []
    if witness.is_synthesized and X.is_finite:
        for k in indices:
            bounds[k] = witness.lambda_schedule[k] ** p * X.total_measure
            iv = integrals[k]
            if not iv.is_finite or iv.value > bounds[k] + iv.err:
                violations.append(k)
        if violations:
            logger.warning("Witness bound violated at %d indices (first k=%d)", len(violations), violations[0])

    logger.info("check_alpha_p p=%g horizon=%d -> %s (complements %s, integrals %s)",
                p, horizon, verdict.value, comp_verdict.value, int_verdict.value)
    return AlphaPReport(
        p, horizon, indices, witness, integrals, verdict, comp_verdict, int_verdict,
        {**rule.to_dict(), "complements": comp_ev, "integrals": int_ev},
        bounds=bounds, bound_violations=violations,
    )


def _least_violating_level(measure_at: Callable[[int], float], horizon: int) -> Optional[int]:
    """
    Least level n in [1, horizon] with μ(E_k(1/n)) >= 1/n, or None.
    Violation is monotone in n for fixed k, so binary search applies.
    """
    def violates(n):
        return measure_at(n) >= 1.0 / n

    if not violates(horizon):
        return None
    lo, hi = 1, horizon
    while lo < hi:
        mid = (lo + hi) // 2
        if violates(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def synthesize_witness(seq: FunctionSequence, f: PiecewiseFunction, p: float, horizon: int,
                       opts: NumericOptions = DEFAULT_OPTIONS, workers: int = 1) -> WitnessSequence:
    """
    Builds λ_k = 1/n for k in [N_n, N_{n+1}) and B_k = E_k(λ_k)^c, where N_n is the
    least index after which every scanned k has μ(E_k(1/n)) < 1/n.
    """
    _check_p(p)
    _check_horizon(horizon)
    X = f.domain
    if not X.is_finite:
        raise PreconditionError(f"Witness synthesis needs a finite-measure domain, got {X.carrier}")

    indices = list(range(1, horizon + 1))
    diffs = dict(zip(indices, _map_indices(lambda k: subtract(instantiate(seq, k), f, opts), indices, workers)))

    def first_violation(k):
        cache = {}

        def measure_at(n):
            if n not in cache:
                cache[n] = measure(superlevel_set(diffs[k], 1.0 / n, opts))
            return cache[n]

        return _least_violating_level(measure_at, horizon)

    least_level = dict(zip(indices, _map_indices(first_violation, indices, workers)))

    # last violating k per level, as a running maximum over levels
    last_violating = [0] * (horizon + 1)
    for k, lvl in least_level.items():
        if lvl is not None:
            last_violating[lvl] = max(last_violating[lvl], k)
    for n in range(2, horizon + 1):
        last_violating[n] = max(last_violating[n], last_violating[n - 1])

    # N_n = 1 + last k violating at level n, forced strictly increasing
    thresholds = []
    truncated_at = None
    for n in range(1, horizon + 1):
        N = last_violating[n] + 1
        if thresholds:
            N = max(N, thresholds[-1] + 1)
        if N > horizon:
            truncated_at = n
            break
        thresholds.append(N)

    lambdas = {}
    level = 0
    for k in indices:
        while level < len(thresholds) and thresholds[level] <= k:
            level += 1
        lambdas[k] = 1.0 if level == 0 else 1.0 / level

    sets = {k: complement(superlevel_set(diffs[k], lambdas[k], opts), X) for k in indices}
    witness = WitnessSequence.from_sets(sets, X, lambda_schedule=lambdas, thresholds=thresholds,
                                        truncated_at=truncated_at)

    for n, N in enumerate(thresholds, start=1):
        bad = [k for k in range(N, horizon + 1) if witness.complement_measures[k] > 1.0 / n]
        if bad:
            logger.warning("Complement measure above 1/%d at k=%d despite N_%d=%d", n, bad[0], n, N)
            break

    if truncated_at is not None:
        logger.info("Witness levels established up to n=%d; level %d has no N_n within horizon %d",
                    len(thresholds), truncated_at, horizon)
    return witness


def _band_indices(horizon: int, window: int, pair_budget: int) -> List[int]:
    """
    Sampled n whose band m in (n, min(n + window, horizon)] stays inside the horizon.
    n stops at horizon - window so bands keep their full width, but never before horizon / 2.
    """
    last = max(horizon - window, horizon // 2, 1)
    candidates = list(range(1, last + 1))
    count = max(pair_budget // max(window, 1), 2)
    if len(candidates) <= count:
        return candidates
    picks = np.unique(np.round(np.linspace(1, last, count)).astype(int))
    return [int(n) for n in picks]


def check_cauchy_in_measure(seq: FunctionSequence, delta: float, horizon: int,
                            pair_budget: int = DEFAULT_PAIR_BUDGET, window: int = PAIR_WINDOW,
                            rule: HorizonRule = DEFAULT_RULE, opts: NumericOptions = DEFAULT_OPTIONS,
                            workers: int = 1) -> InMeasureReport:
    _check_delta(delta)
    _check_horizon(horizon)
    indices = _band_indices(horizon, window, pair_budget)
    pairs = sum(min(n + window, horizon) - n for n in indices)

    def work(n):
        fn = instantiate(seq, n)
        return max(
            measure(superlevel_set(subtract(fn, instantiate(seq, m), opts), delta, opts))
            for m in range(n + 1, min(n + window, horizon) + 1)
        )

    maxima = _map_indices(work, indices, workers)
    verdict, evidence = decide_tendency(indices, maxima, rule)
    logger.info("check_cauchy_in_measure delta=%g horizon=%d pairs=%d -> %s", delta, horizon, pairs, verdict.value)
    return InMeasureReport(delta, horizon, indices, maxima, verdict,
                           {**rule.to_dict(), **evidence, "pair_window": window},
                           kind="cauchy-in-measure", pairs=pairs)


def _band_max(values: List[IntegralValue]) -> IntegralValue:
    for v in values:
        if v.is_divergent:
            return v
    for v in values:
        if v.is_unknown:
            return v
    return max(values, key=lambda v: v.value + v.err)


def check_alpha_p_cauchy(seq: FunctionSequence, p: float, witness: WitnessSequence, horizon: int,
                         pair_budget: int = DEFAULT_PAIR_BUDGET, window: int = PAIR_WINDOW,
                         rule: HorizonRule = DEFAULT_RULE, opts: NumericOptions = DEFAULT_OPTIONS,
                         workers: int = 1) -> AlphaPReport:
    _check_p(p)
    _check_horizon(horizon)
    if not witness.covers(horizon):
        raise PreconditionError(f"Witness does not define B_k for every k <= {horizon}")
    X = seq.domain
    for k in range(1, horizon + 1):
        if not X.contains_set(witness.sets[k]):
            raise DomainError(f"Witness set B_{k} = {witness.sets[k]} is not contained in {X.carrier}")

    indices = _band_indices(horizon, window, pair_budget)

    def work(n):
        fn = instantiate(seq, n)
        band = []
        for m in range(n + 1, min(n + window, horizon) + 1):
            g = subtract(fn, instantiate(seq, m), opts)
            band.append(split_divergence_test(g, p, intersect(witness.sets[n], witness.sets[m]), X, opts))
        return _band_max(band)

    integrals = dict(zip(indices, _map_indices(work, indices, workers)))
    comp_verdict, comp_ev = decide_tendency(indices, [witness.complement_measures[n] for n in indices], rule)
    int_verdict, int_ev = decide_tendency(indices, [_integral_number(integrals[n]) for n in indices], rule)
    verdict = combine_verdicts(comp_verdict, int_verdict)
    logger.info("check_alpha_p_cauchy p=%g horizon=%d -> %s", p, horizon, verdict.value)
    return AlphaPReport(
        p, horizon, indices, witness, integrals, verdict, comp_verdict, int_verdict,
        {**rule.to_dict(), "pair_window": window, "complements": comp_ev, "integrals": int_ev},
        kind="alpha-p-cauchy",
    )


def synthesize_cauchy_witness(seq: FunctionSequence, candidate_limit: PiecewiseFunction, p: float,
                              horizon: int, deltas: Sequence[float] = tuple(DEFAULT_DELTA_GRID),
                              rule: HorizonRule = DEFAULT_RULE, opts: NumericOptions = DEFAULT_OPTIONS,
                              workers: int = 1) -> WitnessSequence:
    """
    Witness for the α_p-Cauchy property of a Cauchy-in-measure sequence, built
    through a caller-supplied in-measure limit. The limit is checked first.
    """
    for delta in deltas:
        report = check_in_measure(seq, candidate_limit, delta, horizon, rule, opts, workers)
        if report.verdict == Verdict.FAILS:
            raise PreconditionError(
                f"Candidate limit fails convergence in measure at delta={delta:g}; no witness can be built from it")
        if report.verdict == Verdict.INCONCLUSIVE:
            logger.warning("Candidate limit is inconclusive in measure at delta=%g", delta)
    return synthesize_witness(seq, candidate_limit, p, horizon, opts, workers)
