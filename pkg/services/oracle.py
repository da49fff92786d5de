"""
Brute-force estimators used to cross-check the analytic paths.

Nothing in the production checkers imports this module; it serves the tests
and the `oracle` CLI command. Random streams come from numpy's PCG64 via
`numpy.random.default_rng`, seeded with a 64-bit integer; parallel chunks use
child seeds spawned from one `SeedSequence`.
"""
import math
from typing import NamedTuple

import numpy as np

from config import ORACLE_MIN_CELLS, ORACLE_MIN_SAMPLES
from services.func_model import PiecewiseFunction, evaluate_many
from services.measure_core import Interval, IntervalSet
from utils.errors import DomainError


class GridEstimate(NamedTuple):
    value: float
    resolution: float
    cells: int


class MCEstimate(NamedTuple):
    value: float
    stderr: float


def grid_measure(f: PiecewiseFunction, delta: float, cells: int, window: Interval) -> GridEstimate:
    """Window length times the fraction of cell midpoints with |f| >= δ."""
    if not window.is_bounded:
        raise DomainError(f"Grid window must be bounded, got {window}")
    if cells < ORACLE_MIN_CELLS:
        raise DomainError(f"Grid oracle needs at least {ORACLE_MIN_CELLS} cells, got {cells}")
    h = window.length / cells
    mids = window.lo + (np.arange(cells) + 0.5) * h
    values = np.abs(evaluate_many(f, mids))
    hits = np.count_nonzero(values >= delta)   # NaN (outside the carrier) never counts
    return GridEstimate(float(hits * h), float(h), int(cells))


def mc_integral(f: PiecewiseFunction, p: float, B: IntervalSet, samples: int, seed: int,
                chunks: int = 1) -> MCEstimate:
    """Uniform Monte-Carlo estimate of ∫_B |f|^p with its standard error."""
    if not B.is_bounded:
        raise DomainError(f"Monte-Carlo oracle needs a bounded set, got {B}")
    if samples < ORACLE_MIN_SAMPLES:
        raise DomainError(f"Monte-Carlo oracle needs at least {ORACLE_MIN_SAMPLES} samples, got {samples}")
    parts = [iv for iv in B if iv.length > 0]
    if not parts:
        return MCEstimate(0.0, 0.0)

    lengths = np.array([iv.length for iv in parts])
    total = float(lengths.sum())
    weights = lengths / total
    los = np.array([iv.lo for iv in parts])

    sizes = [samples // chunks + (1 if i < samples % chunks else 0) for i in range(chunks)]
    children = np.random.SeedSequence(seed).spawn(chunks)
    draws = []
    for size, child in zip(sizes, children):
        rng = np.random.default_rng(child)
        which = rng.choice(len(parts), size=size, p=weights)
        xs = los[which] + rng.random(size) * lengths[which]
        draws.append(np.abs(evaluate_many(f, xs)) ** p * total)

    y = np.concatenate(draws)
    y = np.nan_to_num(y, nan=0.0)
    value = float(y.mean())
    stderr = float(y.std(ddof=1) / math.sqrt(len(y)))
    return MCEstimate(value, stderr)
