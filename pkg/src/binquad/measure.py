"""Binomial measures on [0, 1].

The binomial measure ``mu_alpha`` gives the right half of every dyadic
interval the fraction ``alpha`` of its parent's mass.  Everything here is
expressed through dyadic cells ``X_j^k = [j/2^k, (j+1)/2^k)``: their masses,
the piecewise constant densities of the order-``k`` approximations, and the
exact polynomial moments on ``[0, 1]`` and on single cells.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

#: Largest supported dyadic order (cell indices must fit a signed 64-bit int).
MAX_ORDER = 62

#: Largest order accepted by :func:`reference_integral`.
MAX_REFERENCE_ORDER = 24


@dataclass(frozen=True)
class Alpha:
    """Measure parameter, restricted to the open interval (0, 1)."""

    value: float

    def __post_init__(self):
        value = float(self.value)
        if not (0.0 < value < 1.0):
            raise ValueError(f"alpha must lie in the open interval (0, 1), got {self.value!r}")
        object.__setattr__(self, "value", value)

    @property
    def is_lebesgue(self) -> bool:
        """True for alpha = 1/2, where the measure is uniform."""
        return abs(self.value - 0.5) <= 1e-12

    def __float__(self) -> float:
        return self.value


AlphaLike = Union[Alpha, float]


def as_alpha(alpha: AlphaLike) -> Alpha:
    return alpha if isinstance(alpha, Alpha) else Alpha(alpha)


@dataclass(frozen=True)
class DyadicInterval:
    """The cell ``[j/2^k, (j+1)/2^k)``."""

    j: int
    k: int

    def __post_init__(self):
        if not (0 <= self.k <= MAX_ORDER):
            raise ValueError(f"order k must be in [0, {MAX_ORDER}], got {self.k}")
        if not (0 <= self.j < (1 << self.k)):
            raise ValueError(f"index j must be in [0, 2^{self.k}), got {self.j}")

    @property
    def left(self) -> float:
        return self.j / 2.0**self.k

    @property
    def right(self) -> float:
        return (self.j + 1) / 2.0**self.k

    @property
    def width(self) -> float:
        return 2.0**-self.k

    def children(self) -> tuple[DyadicInterval, DyadicInterval]:
        return DyadicInterval(2 * self.j, self.k + 1), DyadicInterval(2 * self.j + 1, self.k + 1)


def ones_count(j: int) -> int:
    """Number of 1 digits in the binary expansion of ``j``."""
    if j < 0:
        raise ValueError("ones_count is defined for nonnegative integers only")
    return bin(j).count("1")


def _mass(a: float, n: int, k: int) -> float:
    return a**n * (1.0 - a) ** (k - n)


def dyadic_mass(alpha: AlphaLike, interval: DyadicInterval) -> float:
    """Mass ``alpha^n(j) (1 - alpha)^(k - n(j))`` of a dyadic cell."""
    a = as_alpha(alpha).value
    return _mass(a, ones_count(interval.j), interval.k)


def level_masses(alpha: AlphaLike, k: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Masses of the cells ``X_j^k`` for ``start <= j < stop`` as an array.

    Uses the same power table as :func:`dyadic_mass`, so entries agree with
    the scalar function bit for bit.
    """
    a = as_alpha(alpha).value
    if not (0 <= k <= MAX_ORDER):
        raise ValueError(f"order k must be in [0, {MAX_ORDER}], got {k}")
    if stop is None:
        stop = 1 << k
    table = np.array([_mass(a, n, k) for n in range(k + 1)])
    counts = np.bitwise_count(np.arange(start, stop, dtype=np.int64))
    return table[counts]


def density_at(alpha: AlphaLike, k: int, x: float) -> float:
    """Density of the order-``k`` approximating measure at ``x`` in [0, 1)."""
    if not (0.0 <= x < 1.0):
        raise ValueError(f"x must lie in [0, 1), got {x!r}")
    j = int(math.floor(x * 2.0**k))
    return 2.0**k * dyadic_mass(alpha, DyadicInterval(j, k))


class MomentCache:
    """Memoized moments ``m_s`` of ``mu_alpha`` on [0, 1].

    Moments follow the recursion

        m_s = alpha / (2^s - 1) * sum_{q=1}^{s} C(s, q) m_{s-q},  m_0 = 1.

    Binomial coefficients are built incrementally in floating point, so
    no integer coefficient is ever formed.  Extension is serialized by an
    internal lock; reads of already materialized moments are lock free.
    """

    def __init__(self, alpha: AlphaLike):
        self.alpha = as_alpha(alpha)
        self._moments: list[float] = [1.0]
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._moments)

    def moment(self, s: int) -> float:
        if s < 0:
            raise ValueError(f"moment order must be nonnegative, got {s}")
        if s >= len(self._moments):
            with self._lock:
                self._extend(s)
        return self._moments[s]

    def moments(self, n: int) -> list[float]:
        """The list ``[m_0, ..., m_n]``."""
        self.moment(n)
        return self._moments[: n + 1]

    def _extend(self, s: int) -> None:
        a = self.alpha.value
        m = self._moments
        for t in range(len(m), s + 1):
            terms = []
            coef = 1.0
            for q in range(1, t + 1):
                coef = coef * (t - q + 1) / q
                terms.append(coef * m[t - q])
            value = a / (2.0**t - 1.0) * math.fsum(terms)
            if not math.isfinite(value) or not math.isfinite(coef):
                raise OverflowError(f"moment recursion overflowed at order {t}")
            m.append(value)


def moment(cache: MomentCache, s: int) -> float:
    return cache.moment(s)


def dyadic_moment(cache: MomentCache, s: int, interval: DyadicInterval) -> float:
    """Integral of ``x^s`` over one dyadic cell.

    Expands ``x = (j + y) / 2^k`` binomially; each term is formed as
    ``C(s, q) (j/2^k)^q (1/2^k)^(s-q) m_{s-q}`` so that nothing overflows.
    """
    if s < 0:
        raise ValueError(f"moment order must be nonnegative, got {s}")
    m = cache.moments(s)
    left = interval.j / 2.0**interval.k
    h = 2.0**-interval.k
    terms = []
    coef = 1.0
    for q in range(s + 1):
        if q:
            coef = coef * (s - q + 1) / q
        terms.append(coef * left**q * h ** (s - q) * m[s - q])
    return dyadic_mass(cache.alpha, interval) * math.fsum(terms)


def polynomial_integral(cache: MomentCache, coeffs) -> float:
    """Integral over [0, 1] of ``sum_s coeffs[s] x^s``."""
    coeffs = list(coeffs)
    if not coeffs:
        return 0.0
    m = cache.moments(len(coeffs) - 1)
    return math.fsum(c * ms for c, ms in zip(coeffs, m))


def reference_integral(alpha: AlphaLike, f: Callable, k: int = 20) -> float:
    """Brute-force integral of ``f`` against the order-``k`` cell masses.

    Each cell ``X_j^k`` is integrated with the two-point Gauss rule of the
    measure rescaled to that cell, so polynomials up to degree 3 are exact
    and a function with modulus of continuity ``w`` is off by at most
    ``2 w(2^-k)``.  Cost is ``2^(k+1)`` evaluations of ``f``.
    """
    if not (0 <= k <= MAX_REFERENCE_ORDER):
        raise ValueError(f"reference order must be in [0, {MAX_REFERENCE_ORDER}], got {k}")
    from .composite import composite_eval
    from .rules import build_rule

    return composite_eval(build_rule("G1", alpha), alpha, f, k)
