"""Composite rules on dyadic partitions.

A rule on [0, 1] moves to the cell ``X_j^k`` by mapping nodes to
``(j + z) / 2^k`` and scaling weights by the cell mass.  Summing over all
``2^k`` cells of one order gives the level-``k`` composite value, and
:func:`run_composite` refines level by level until a derivative-based
error estimate falls below the tolerance.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .error_model import PEANO_TIE_TOL, effective_degree, peano_constant
from .measure import (
    MAX_REFERENCE_ORDER,
    AlphaLike,
    DyadicInterval,
    MomentCache,
    as_alpha,
    dyadic_mass,
    level_masses,
)
from .rules import QuadratureRule, _check_finite, _evaluate

log = logging.getLogger(__name__)

#: Largest level accepted by :func:`composite_eval`.
MAX_LEVEL = MAX_REFERENCE_ORDER

#: Cells per block.  Partial sums are formed per block and then reduced in
#: block order, so results do not depend on the number of workers.
BLOCK = 1 << 15

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class DyadicPartition:
    """A partition of [0, 1) into dyadic cells, ordered left to right."""

    intervals: tuple[DyadicInterval, ...]

    def __post_init__(self):
        cells = tuple(sorted(self.intervals, key=lambda c: c.j / 2.0**c.k))
        if not cells:
            raise ValueError("a partition needs at least one cell")
        depth = max(c.k for c in cells)
        pos = 0
        for c in cells:
            start = c.j << (depth - c.k)
            if start != pos:
                raise ValueError(f"cells overlap or leave a gap at {pos}/2^{depth}")
            pos = start + (1 << (depth - c.k))
        if pos != 1 << depth:
            raise ValueError("cells do not cover [0, 1)")
        object.__setattr__(self, "intervals", cells)

    @classmethod
    def proper(cls, k: int) -> DyadicPartition:
        return cls(tuple(DyadicInterval(j, k) for j in range(1 << k)))

    @property
    def is_proper(self) -> bool:
        k = self.intervals[0].k
        return all(c.k == k for c in self.intervals)

    def refine(self, index: int) -> DyadicPartition:
        """Partition with cell ``index`` replaced by its two halves."""
        cells = list(self.intervals)
        cells[index : index + 1] = cells[index].children()
        return DyadicPartition(tuple(cells))


@dataclass(frozen=True)
class StopConfig:
    tol: float = 1e-8
    k_min: int = 2
    k_max: int = 20

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.k_min < 0 or self.k_max < self.k_min:
            raise ValueError(f"need 0 <= k_min <= k_max, got k_min={self.k_min}, k_max={self.k_max}")
        if self.k_max > MAX_LEVEL:
            raise ValueError(f"k_max must not exceed {MAX_LEVEL}")


@dataclass
class ConvergenceHistory:
    levels: list[int] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    errors: list[float] | None = None
    exact: float | None = None
    fitted_order: float | None = None

    def append(self, level: int, value: float) -> None:
        if self.levels and level <= self.levels[-1]:
            raise ValueError("levels must be strictly increasing")
        self.levels.append(level)
        self.values.append(value)
        if self.exact is not None:
            if self.errors is None:
                self.errors = []
            self.errors.append(abs(value - self.exact))

    def usable(self) -> list[tuple[int, float]]:
        """(level, error) pairs whose error stands clear of rounding noise."""
        if self.errors is None:
            return []
        floor = 100 * EPS * abs(self.exact or 0.0)
        return [(k, e) for k, e in zip(self.levels, self.errors) if e > floor and e > 0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["level", "value", "abs_error"])
        for i, (k, v) in enumerate(zip(self.levels, self.values)):
            err = "" if self.errors is None else format(self.errors[i], ".17g")
            writer.writerow([k, format(v, ".17g"), err])
        return buf.getvalue()


@dataclass
class CompositeResult:
    result: float
    final_level: int
    est_error: float
    history: ConvergenceHistory
    stopped_by: str  # "tol" or "k_max"
    warning: str | None = None

    @property
    def converged(self) -> bool:
        return self.stopped_by == "tol"


def local_apply(rule: QuadratureRule, alpha: AlphaLike, f: Callable, interval: DyadicInterval) -> float:
    """``mu(I) * sum_q w_q f((j + z_q) / 2^k)``."""
    z = (interval.j + np.asarray(rule.nodes)) / 2.0**interval.k
    values = _evaluate(f, z)
    _check_finite(values, z)
    return dyadic_mass(alpha, interval) * math.fsum(b * v for b, v in zip(rule.weights, values))


def _block_locals(rule: QuadratureRule, a: float, f: Callable, k: int, start: int, stop: int) -> np.ndarray:
    j = np.arange(start, stop, dtype=np.float64)
    points = (j[:, None] + np.asarray(rule.nodes)[None, :]) / 2.0**k
    values = _evaluate(f, points)
    _check_finite(values, points)
    return level_masses(a, k, start, stop) * (values @ np.asarray(rule.weights))


def _blocks(k: int) -> list[tuple[int, int]]:
    n = 1 << k
    return [(s, min(s + BLOCK, n)) for s in range(0, n, BLOCK)]


def _check_level(k: int) -> None:
    if not (0 <= k <= MAX_LEVEL):
        raise ValueError(f"level must be in [0, {MAX_LEVEL}], got {k}")


def level_locals(rule: QuadratureRule, alpha: AlphaLike, f: Callable, k: int,
                 workers: int | None = None) -> np.ndarray:
    """Array of ``I(f, X_j^k)`` for ``j = 0 .. 2^k - 1``."""
    _check_level(k)
    a = as_alpha(alpha).value
    blocks = _blocks(k)
    if workers and workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda b: _block_locals(rule, a, f, k, *b), blocks))
    else:
        parts = [_block_locals(rule, a, f, k, *b) for b in blocks]
    return np.concatenate(parts)


def _reduce(local_values: np.ndarray) -> float:
    n = local_values.size
    return math.fsum(math.fsum(local_values[s : s + BLOCK]) for s in range(0, n, BLOCK))


def composite_eval(rule: QuadratureRule, alpha: AlphaLike, f: Callable, k: int,
                   workers: int | None = None) -> float:
    """Level-``k`` composite value over all ``2^k`` cells of order ``k``."""
    return _reduce(level_locals(rule, alpha, f, k, workers))


def composite_on_partition(rule: QuadratureRule, alpha: AlphaLike, f: Callable,
                           partition: DyadicPartition) -> float:
    """Composite value on an arbitrary dyadic-regular partition."""
    return math.fsum(local_apply(rule, alpha, f, c) for c in partition.intervals)


def _criterion_level(peano: float, k_bar: float, r: int, tol: float) -> int | None:
    """Smallest acceptable level, or None when the estimate is unusable."""
    if not math.isfinite(k_bar):
        return None
    arg = abs(peano) * k_bar / (math.factorial(r + 1) * tol)
    if arg <= 0:
        return 1
    return int(max(0.0, math.log2(arg) / r)) + 1


def run_composite(rule: QuadratureRule, alpha: AlphaLike, f: Callable, cfg: StopConfig | None = None,
                  exact: float | None = None, cache: MomentCache | None = None,
                  workers: int | None = None) -> CompositeResult:
    """Refine level by level until the estimated error drops below ``cfg.tol``.

    At level ``k`` the ``(r+1)``-th derivative on each cell of level ``k-1``
    is estimated from the gap between the coarse value and the sum of its
    two children; the largest estimate ``Kbar`` fixes the level

        [ log2(|c| Kbar / ((r+1)! tol)) / r ]_+ + 1

    that must be reached, ``c`` being the Peano constant of the rule.  The
    returned error estimate is ``|c| Kbar / ((r+1)! 2^(k(r+1)))``.

    When the Peano constant vanishes the derivative estimate is undefined;
    refinement then stops once two successive levels differ by less than
    ``tol``.
    """
    cfg = cfg or StopConfig()
    a = as_alpha(alpha)
    if cache is None or cache.alpha != a:
        cache = MomentCache(a)
    r = effective_degree(rule, cache)
    if r < 1:
        raise ValueError(f"run_composite needs a rule of degree >= 1, {rule.family} has degree {r}")
    peano = peano_constant(rule, cache, r)
    use_estimator = abs(peano) > max(PEANO_TIE_TOL * abs(cache.moment(r + 1)), 1e-14)
    warning = None
    history = ConvergenceHistory(exact=exact)
    factorial = math.factorial(r + 1)

    k = cfg.k_min
    prev = level_locals(rule, a, f, k - 1, workers) if k >= 1 else None
    est = math.inf
    stopped_by = "k_max"
    while True:
        cur = level_locals(rule, a, f, k, workers)
        value = _reduce(cur)
        history.append(k, value)
        if prev is not None:
            gap = prev - (cur[0::2] + cur[1::2])
            if use_estimator:
                masses = level_masses(a, k - 1)
                with np.errstate(all="ignore"):
                    deriv = 2.0 ** (k * (r + 1)) * factorial / ((2.0 ** (r + 1) - 1) * masses * abs(peano)) * gap
                k_bar = float(np.max(np.abs(deriv)))
                target = _criterion_level(peano, k_bar, r, cfg.tol)
                if target is None:
                    use_estimator = False
                    warning = "non-finite derivative estimate; refining to k_max"
                    log.warning(warning)
                    est = math.inf
                else:
                    est = abs(peano) * k_bar / (factorial * 2.0 ** (k * (r + 1)))
                    if k >= target:
                        stopped_by = "tol"
                        break
            elif warning is None:
                est = abs(math.fsum(gap))
                if est < cfg.tol:
                    stopped_by = "tol"
                    break
        if k >= cfg.k_max:
            break
        prev = cur
        k += 1

    if history.errors is not None:
        try:
            history.fitted_order = measure_order(history)
        except ValueError:
            pass
    return CompositeResult(value, k, est, history, stopped_by, warning)


def convergence_history(rule: QuadratureRule, alpha: AlphaLike, f: Callable, levels: Iterable[int],
                        exact: float | None = None, workers: int | None = None) -> ConvergenceHistory:
    """Composite values (and errors, when ``exact`` is known) at the given levels."""
    history = ConvergenceHistory(exact=exact)
    for k in levels:
        history.append(k, composite_eval(rule, alpha, f, k, workers))
    if exact is not None:
        try:
            history.fitted_order = measure_order(history)
        except ValueError:
            pass
    return history


def measure_order(history: ConvergenceHistory) -> float:
    """Least-squares slope of ``log2(error)`` against ``-k``.

    Only errors above ``100 eps |exact|`` take part.

    Raises
    ------
    ValueError
        If fewer than three usable points remain.
    """
    points = history.usable()
    if len(points) < 3:
        raise ValueError(f"insufficient points to fit an order ({len(points)} usable, need 3)")
    k = np.array([p[0] for p in points], dtype=float)
    e = np.log2([p[1] for p in points])
    slope, _ = np.polyfit(-k, e, 1)
    return float(slope)

