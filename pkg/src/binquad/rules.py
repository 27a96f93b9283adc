"""Quadrature rules on [0, 1] for the binomial measure.

All rules are interpolatory: given the nodes, the weights are the unique
ones that reproduce the moments ``m_0 .. m_p``.  The named families below
carry their closed forms; :func:`interpolatory_weights` builds a rule for
any node set by solving the moment (Vandermonde) system.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .measure import AlphaLike, MomentCache, as_alpha

FAMILIES = ("G0", "G1", "W1", "NC0", "NC1", "NC2", "NC3", "NC4", "GL2", "H4")

#: Largest node count accepted by :func:`interpolatory_weights`.
MAX_NODES = 12

#: Reciprocal condition numbers below this make the moment system singular.
RCOND_MIN = 1e-13

DEGREE_RTOL = 1e-10
DEGREE_ATOL = 1e-14

W1_DOMAIN = (0.25, 0.75)


class DomainError(ValueError):
    """A rule was requested for a parameter outside its valid range."""


class SingularSystemError(ValueError):
    """The moment system for the given nodes is singular or ill conditioned."""

    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


class EvaluationError(ArithmeticError):
    """The integrand returned a non-finite value or faulted at a node."""


@dataclass(frozen=True)
class QuadratureRule:
    family: str
    alpha: float
    nodes: tuple[float, ...]
    weights: tuple[float, ...]
    degree: int
    has_duplicate_nodes: bool = field(default=False, compare=False)

    def __post_init__(self):
        nodes = tuple(float(z) for z in self.nodes)
        weights = tuple(float(b) for b in self.weights)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if not nodes or len(nodes) != len(weights):
            raise ValueError("nodes and weights must be nonempty and of equal length")
        if any(not (0.0 <= z <= 1.0) for z in nodes):
            raise ValueError(f"nodes must lie in [0, 1]: {nodes}")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {math.fsum(weights)!r}")
        duplicates = len(set(nodes)) != len(nodes)
        if duplicates and not self.has_duplicate_nodes:
            raise ValueError(f"nodes must be pairwise distinct: {nodes}")
        if self.degree < 0:
            raise ValueError("degree must be nonnegative")

    @property
    def size(self) -> int:
        return len(self.nodes)

    def __call__(self, f: Callable) -> float:
        return apply_rule(self, f)

    def sorted_view(self) -> list[tuple[float, float]]:
        """(node, weight) pairs in increasing node order, for display."""
        return sorted(zip(self.nodes, self.weights))

    def merged(self) -> QuadratureRule:
        """Same rule with coincident nodes combined into one node."""
        acc: dict[float, list[float]] = {}
        for z, b in zip(self.nodes, self.weights):
            acc.setdefault(z, []).append(b)
        nodes = sorted(acc)
        return QuadratureRule(
            self.family, self.alpha, tuple(nodes), tuple(math.fsum(acc[z]) for z in nodes), self.degree
        )

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "alpha": self.alpha,
            "nodes": list(self.nodes),
            "weights": list(self.weights),
            "degree": self.degree,
        }

    def dumps(self) -> str:
        """One JSON record with 17 significant digits per number."""
        return _dump_record(self.to_dict())


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def _dump_record(record: dict) -> str:
    parts = []
    for key, value in record.items():
        if isinstance(value, str):
            text = json.dumps(value)
        elif isinstance(value, (list, tuple)):
            text = "[" + ", ".join(_fmt(v) for v in value) + "]"
        else:
            text = _fmt(value)
        parts.append(f"{json.dumps(key)}: {text}")
    return "{" + ", ".join(parts) + "}"


# Closed forms.  Each returns (nodes, weights, generic degree, degree at alpha = 1/2).


def _g0(a):
    return [a], [1.0], 1, 1


def _g1(a):
    radicand = -264 * a * a + 264 * a + 81
    assert radicand > 0, "G1 radicand must be positive on (0, 1)"
    r = math.sqrt(radicand)
    c = (8 * a + 3) / 14
    t = (18 * a - 9) / (2 * r)
    return [c - r / 42, c + r / 42], [0.5 - t, 0.5 + t], 3, 3


def _w1(a):
    lo, hi = W1_DOMAIN
    if not (lo <= a <= hi):
        raise DomainError(f"W1 is defined only for alpha in [{lo}, {hi}], got {a}")
    d = math.sqrt(a * (1 - a) / 3)
    # clip the endpoint cases alpha = 1/4, 3/4 where a node lands on 0 or 1
    nodes = [min(max(a - d, 0.0), 1.0), min(max(a + d, 0.0), 1.0)]
    return nodes, [0.5, 0.5], 2, 3


def _nc0(a):
    return [0.5], [1.0], 0, 1


def _nc1(a):
    return [0.0, 1.0], [1 - a, a], 1, 1


def _nc2(a):
    w = [4 * a * a - 7 * a + 3, -8 * a * a + 8 * a, 4 * a * a - a]
    return [0.0, 0.5, 1.0], [x / 3 for x in w], 2, 3


def _nc3(a):
    w = [
        -9 * a**3 + 24 * a**2 - 22 * a + 7,
        27 * a**3 - 51 * a**2 + 24 * a,
        -27 * a**3 + 30 * a**2 - 3 * a,
        9 * a**3 - 3 * a**2 + a,
    ]
    return [0.0, 1 / 3, 2 / 3, 1.0], [x / 7 for x in w], 3, 3


def _nc4(a):
    w = [
        256 * a**4 - 992 * a**3 + 1572 * a**2 - 1151 * a + 315,
        -32 * a * (32 * a**3 - 94 * a**2 + 99 * a - 37),
        24 * a * (64 * a**3 - 128 * a**2 + 73 * a - 9),
        -32 * a * (32 * a**3 - 34 * a**2 + 9 * a - 7),
        a * (256 * a**3 - 32 * a**2 + 132 * a - 41),
    ]
    return [0.0, 0.25, 0.5, 0.75, 1.0], [x / 315 for x in w], 4, 5


def _gl2(a):
    w = [
        (a - 1) * (5 * a - 6) / (3 * a + 2),
        98 * a * (a - 1) / ((3 * a + 2) * (3 * a - 5)),
        a * (5 * a + 1) / (5 - 3 * a),
    ]
    return [0.0, (3 * a + 2) / 7, 1.0], [x / 3 for x in w], 3, 3


def _h4(a):
    c = (3 * a + 2) / 14
    # fixed node order: the sixth node (3a + 2)/7 sits between the
    # second and fourth and equals 1/2 when alpha = 1/2
    nodes = [0.0, c, 0.5, 0.5 + c, 1.0, 2 * c]
    den = 1395
    w = [
        (688 * a**5 - 24257 * a**4 + 59238 * a**3 - 32825 * a**2 - 19584 * a + 16740)
        / (den * (a + 3) * (3 * a + 2) ** 2),
        224 * a * (1667 * a**4 - 6012 * a**3 + 4855 * a**2 + 1442 * a - 1952)
        / (den * (4 - a) * (3 * a - 5) * (9 * a**2 + 12 * a + 4)),
        32 * a * (43 * a**3 - 86 * a**2 - 669 * a + 712) / (den * (3 * a + 2) * (5 - 3 * a)),
        224 * a * (1667 * a**4 - 2323 * a**3 - 2523 * a**2 + 3395 * a - 216)
        / (den * (3 * a - 5) * (9 * a**3 + 18 * a**2 - 37 * a - 30)),
        a * (688 * a**4 + 20817 * a**3 - 30910 * a**2 - 6227 * a - 1108) / (den * (a - 4) * (3 * a - 5) ** 2),
        -98 * a * (2311 * a**3 - 4622 * a**2 + 1137 * a + 1174)
        / (den * (81 * a**4 - 162 * a**3 - 99 * a**2 + 180 * a + 100)),
    ]
    return nodes, w, 5, 5


_BUILDERS = {
    "G0": _g0,
    "G1": _g1,
    "W1": _w1,
    "NC0": _nc0,
    "NC1": _nc1,
    "NC2": _nc2,
    "NC3": _nc3,
    "NC4": _nc4,
    "GL2": _gl2,
    "H4": _h4,
}


def build_rule(family: str, alpha: AlphaLike) -> QuadratureRule:
    """Closed-form rule of the named family at ``alpha``.

    Raises
    ------
    KeyError
        For an unknown family name.
    DomainError
        For W1 outside alpha in [1/4, 3/4].
    """
    name = family.upper()
    if name not in _BUILDERS:
        raise KeyError(f"unknown rule family {family!r}; expected one of {', '.join(FAMILIES)}")
    a = as_alpha(alpha)
    nodes, weights, degree, lebesgue_degree = _BUILDERS[name](a.value)
    if a.is_lebesgue:
        degree = lebesgue_degree
    duplicates = name == "H4" and len(set(nodes)) < len(nodes)
    return QuadratureRule(name, a.value, tuple(nodes), tuple(weights), degree, has_duplicate_nodes=duplicates)


def interpolatory_weights(alpha: AlphaLike, nodes: Sequence[float], cache: MomentCache | None = None,
                          family: str = "CUSTOM") -> QuadratureRule:
    """Interpolatory rule on the given nodes.

    Solves ``sum_q w_q z_q^s = m_s`` for ``s = 0..p`` by LU with partial
    pivoting, and reports the degree actually attained.
    """
    a = as_alpha(alpha)
    if cache is None or cache.alpha != a:
        cache = MomentCache(a)
    z = np.asarray(nodes, dtype=float)
    n = z.size
    if n == 0 or n > MAX_NODES:
        raise ValueError(f"need between 1 and {MAX_NODES} nodes, got {n}")
    if np.any((z < 0) | (z > 1)):
        raise ValueError("nodes must lie in [0, 1]")
    system = np.vander(z, n, increasing=True).T
    rhs = np.array(cache.moments(n - 1))
    cond = float(np.linalg.cond(system, 1)) if n > 1 else 1.0
    if not math.isfinite(cond) or 1.0 / cond < RCOND_MIN:
        raise SingularSystemError(
            f"moment system for nodes {list(z)} is singular (condition number {cond:.3g})", cond
        )
    weights = np.linalg.solve(system, rhs)
    provisional = QuadratureRule(family, a.value, tuple(z), tuple(weights), n - 1)
    degree = verify_degree(provisional, cache, max(2 * n, n + 1))
    return QuadratureRule(family, a.value, tuple(z), tuple(weights), max(degree, n - 1))


def _monomial_sum(rule: QuadratureRule, s: int) -> float:
    return math.fsum(b * z**s for z, b in zip(rule.nodes, rule.weights))


def verify_degree(rule: QuadratureRule, cache: MomentCache, max_check: int,
                  rtol: float = DEGREE_RTOL, atol: float = DEGREE_ATOL) -> int:
    """Largest ``r <= max_check`` such that the rule integrates ``x^s`` exactly for all ``s <= r``."""
    for s in range(max_check + 1):
        ms = cache.moment(s)
        if abs(_monomial_sum(rule, s) - ms) > max(rtol * abs(ms), atol):
            return s - 1
    return max_check


def _evaluate(f: Callable, x: np.ndarray) -> np.ndarray:
    """Evaluate ``f`` on an array, falling back to a loop for scalar-only callables."""
    try:
        with np.errstate(all="ignore"), warnings.catch_warnings():
            warnings.simplefilter("error", DeprecationWarning)
            y = np.asarray(f(x), dtype=float)
        if y.shape == x.shape:
            return y
        if y.ndim == 0:
            return np.full(x.shape, float(y))
    except (TypeError, ValueError, DeprecationWarning):
        pass
    return np.array([float(f(float(t))) for t in x.ravel()]).reshape(x.shape)


def _check_finite(values: np.ndarray, points: np.ndarray) -> None:
    bad = ~np.isfinite(values)
    if bad.any():
        i = int(np.flatnonzero(bad.ravel())[0])
        raise EvaluationError(
            f"integrand is not finite at node x = {float(points.ravel()[i])!r} (value {float(values.ravel()[i])!r})"
        )


def apply_rule(rule: QuadratureRule, f: Callable) -> float:
    """Weighted sum ``sum_q w_q f(z_q)``."""
    z = np.asarray(rule.nodes)
    values = _evaluate(f, z)
    _check_finite(values, z)
    return math.fsum(b * v for b, v in zip(rule.weights, values))


def extrapolated(family: str, alpha: AlphaLike, f: Callable) -> float:
    """Richardson-type combination ``(16 (I(X_0^1) + I(X_1^1)) - I(X_0^0)) / 15``.

    For alpha = 1/2 this is the five-point Newton-Cotes value.  Otherwise the
    NC2 based combination keeps degree 2 and the GL2 based one reaches 4.
    """
    from .composite import local_apply
    from .measure import DyadicInterval

    name = family.upper()
    if name not in ("NC2", "GL2"):
        raise ValueError(f"extrapolation is defined for NC2 and GL2, got {family!r}")
    rule = build_rule(name, alpha)
    halves = local_apply(rule, alpha, f, DyadicInterval(0, 1)) + local_apply(rule, alpha, f, DyadicInterval(1, 1))
    whole = local_apply(rule, alpha, f, DyadicInterval(0, 0))
    return (16 * halves - whole) / 15
