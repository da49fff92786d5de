"""
Interval and interval-set algebra with exact Lebesgue measure.

Every value here is immutable. Endpoint closedness is tracked exactly by the
set algebra but never changes a measure.
"""
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Tuple

from utils.errors import DomainError

INF = math.inf


def encode_number(x: float):
    """JSON-safe number: infinities become the strings "inf" and "-inf"."""
    if x == INF:
        return "inf"
    if x == -INF:
        return "-inf"
    return x


@dataclass(frozen=True, order=False)
class Interval:
    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise DomainError("Interval endpoints must not be NaN")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        # infinite endpoints are always open
        if hi == INF:
            object.__setattr__(self, "hi_closed", False)
        if lo == -INF:
            object.__setattr__(self, "lo_closed", False)
        if lo > hi or lo == INF or hi == -INF:
            raise DomainError(f"Empty interval: lo={lo} > hi={hi}")
        if lo == hi and not (self.lo_closed and self.hi_closed):
            raise DomainError(f"Empty interval at {lo}: a degenerate interval must be closed")

    @classmethod
    def closed(cls, lo, hi):
        return cls(lo, hi, True, True)

    @classmethod
    def open(cls, lo, hi):
        return cls(lo, hi, False, False)

    @classmethod
    def point(cls, x):
        return cls(x, x, True, True)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    @property
    def is_bounded(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def contains(self, x: float) -> bool:
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo and not self.lo_closed:
            return False
        if x == self.hi and not self.hi_closed:
            return False
        return True

    def to_dict(self):
        return {
            "lo": encode_number(self.lo),
            "hi": encode_number(self.hi),
            "lo_closed": self.lo_closed,
            "hi_closed": self.hi_closed,
        }

    def __str__(self):
        left = "[" if self.lo_closed else "("
        right = "]" if self.hi_closed else ")"
        return f"{left}{self.lo:g}, {self.hi:g}{right}"


def make_interval(lo, hi, lo_closed=True, hi_closed=True) -> Optional[Interval]:
    """Interval constructor that returns None instead of raising for empty input."""
    if hi == INF:
        hi_closed = False
    if lo == -INF:
        lo_closed = False
    if lo > hi or (lo == hi and not (lo_closed and hi_closed)):
        return None
    return Interval(lo, hi, lo_closed, hi_closed)


def intersect_intervals(a: Interval, b: Interval) -> Optional[Interval]:
    if a.lo > b.lo:
        lo, lo_closed = a.lo, a.lo_closed
    elif b.lo > a.lo:
        lo, lo_closed = b.lo, b.lo_closed
    else:
        lo, lo_closed = a.lo, a.lo_closed and b.lo_closed

    if a.hi < b.hi:
        hi, hi_closed = a.hi, a.hi_closed
    elif b.hi < a.hi:
        hi, hi_closed = b.hi, b.hi_closed
    else:
        hi, hi_closed = a.hi, a.hi_closed and b.hi_closed

    return make_interval(lo, hi, lo_closed, hi_closed)


def _canonical_parts(intervals: Iterable[Interval]) -> Tuple[Interval, ...]:
    items = sorted(intervals, key=lambda iv: (iv.lo, not iv.lo_closed))
    merged = []
    for iv in items:
        if not merged:
            merged.append(iv)
            continue
        cur = merged[-1]
        touching = iv.lo < cur.hi or (iv.lo == cur.hi and (cur.hi_closed or iv.lo_closed))
        if not touching:
            merged.append(iv)
            continue
        if iv.hi > cur.hi:
            hi, hi_closed = iv.hi, iv.hi_closed
        elif iv.hi < cur.hi:
            hi, hi_closed = cur.hi, cur.hi_closed
        else:
            hi, hi_closed = cur.hi, cur.hi_closed or iv.hi_closed
        lo_closed = cur.lo_closed or (iv.lo == cur.lo and iv.lo_closed)
        merged[-1] = Interval(cur.lo, hi, lo_closed, hi_closed)
    return tuple(merged)


@dataclass(frozen=True)
class IntervalSet:
    """Finite union of disjoint, non-adjacent intervals, kept in canonical order."""
    parts: Tuple[Interval, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "parts", _canonical_parts(self.parts))

    @classmethod
    def empty(cls):
        return cls(())

    @classmethod
    def of(cls, *intervals: Optional[Interval]):
        return cls(tuple(iv for iv in intervals if iv is not None))

    @property
    def is_empty(self) -> bool:
        return not self.parts

    @property
    def is_bounded(self) -> bool:
        return all(p.is_bounded for p in self.parts)

    def contains(self, x: float) -> bool:
        return any(p.contains(x) for p in self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __len__(self):
        return len(self.parts)

    def to_dict(self):
        return {"parts": [p.to_dict() for p in self.parts]}

    def __str__(self):
        if not self.parts:
            return "∅"
        return " ∪ ".join(str(p) for p in self.parts)


@dataclass(frozen=True)
class Domain:
    carrier: Interval
    total_measure: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total_measure", self.carrier.length)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.total_measure)

    @property
    def as_set(self) -> IntervalSet:
        return IntervalSet.of(self.carrier)

    def contains_set(self, s: IntervalSet) -> bool:
        return is_subset(s, self.as_set)

    def __str__(self):
        return f"X = {self.carrier}"


# ==========================================
#  OPERATIONS
# ==========================================

def measure(s: IntervalSet) -> float:
    """Lebesgue measure: the sum of part lengths, inf when any part is unbounded."""
    return math.fsum(p.length for p in s.parts)


def intersect(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    """Two-pointer sweep over both canonical part lists."""
    out = []
    i = j = 0
    pa, pb = a.parts, b.parts
    while i < len(pa) and j < len(pb):
        iv = intersect_intervals(pa[i], pb[j])
        if iv is not None:
            out.append(iv)
        # advance whichever part ends first
        if pa[i].hi < pb[j].hi or (pa[i].hi == pb[j].hi and not pa[i].hi_closed):
            i += 1
        else:
            j += 1
    return IntervalSet(tuple(out))


def union(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    """Canonical union; touching parts merge unless both facing ends are open."""
    return IntervalSet(a.parts + b.parts)


def _complement_in(s: IntervalSet, carrier: Interval) -> IntervalSet:
    gaps = []
    cur, cur_closed = carrier.lo, carrier.lo_closed
    for part in s.parts:
        gap = make_interval(cur, part.lo, cur_closed, not part.lo_closed)
        if gap is not None:
            gaps.append(gap)
        cur, cur_closed = part.hi, not part.hi_closed
    tail = make_interval(cur, carrier.hi, cur_closed, carrier.hi_closed)
    if tail is not None:
        gaps.append(tail)
    return IntervalSet(tuple(gaps))


def is_subset(a: IntervalSet, b: IntervalSet) -> bool:
    """True when a is contained in b, endpoints included."""
    return intersect(a, b) == a


def complement(s: IntervalSet, within: Domain) -> IntervalSet:
    """within.carrier minus s. Raises DomainError when s leaves the domain."""
    if not within.contains_set(s):
        raise DomainError(f"Set {s} is not contained in the domain {within.carrier}")
    return _complement_in(s, within.carrier)


def difference(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    """a minus b; b need not lie inside a."""
    line = Interval(-INF, INF, False, False)
    return intersect(a, _complement_in(b, line))
