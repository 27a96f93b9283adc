"""A-priori error constants for interpolatory rules.

Two kinds of estimate are supported.  The interpolation-error form splits
the nodal polynomial ``w(x) = prod (x - z_q)`` into its positive and
negative parts, ``K+ = int w+ dmu`` and ``K- = int w- dmu``.  The Taylor
form uses the Peano constant ``m_{r+1} - I(x^{r+1})`` of a rule of degree
``r``; it also drives the composite stopping criterion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measure import AlphaLike, MomentCache, as_alpha, polynomial_integral, reference_integral
from .rules import QuadratureRule, _monomial_sum, build_rule

#: A Peano constant this small relative to the moment counts as zero.
PEANO_TIE_TOL = 1e-12


@dataclass(frozen=True)
class ErrorConstants:
    k_plus: float
    k_minus: float
    peano: float

    @property
    def nodal_integral(self) -> float:
        """Signed integral of the nodal polynomial, ``K+ - K-``."""
        return self.k_plus - self.k_minus


def nodal_polynomial(rule: QuadratureRule) -> np.ndarray:
    """Monic nodal polynomial, coefficients in increasing degree order."""
    if len(set(rule.nodes)) != len(rule.nodes):
        raise ValueError("nodal polynomial needs pairwise distinct nodes")
    coeffs = np.array([1.0])
    for z in rule.nodes:
        # multiply by (x - z)
        coeffs = np.concatenate(([0.0], coeffs)) - z * np.concatenate((coeffs, [0.0]))
    return coeffs


def nodal_integral(rule: QuadratureRule, cache: MomentCache) -> float:
    """Exact ``int w dmu`` through the moments."""
    return polynomial_integral(cache, nodal_polynomial(rule))


def split_nodal_integrals(rule: QuadratureRule, k: int = 20) -> tuple[float, float]:
    """``(K+, K-)`` by brute-force integration at dyadic order ``k``.

    Accuracy is about ``2^-k`` times the Lipschitz constant of ``w``.
    """
    poly = np.polynomial.Polynomial(nodal_polynomial(rule))
    k_plus = reference_integral(rule.alpha, lambda x: np.maximum(poly(x), 0.0), k)
    k_minus = reference_integral(rule.alpha, lambda x: np.maximum(-poly(x), 0.0), k)
    return k_plus, k_minus


def nc2_k_constants(alpha: AlphaLike, cache: MomentCache | None = None) -> ErrorConstants:
    """Closed-form split constants of the three-point Newton-Cotes rule.

    The nodal polynomial is nonnegative on [0, 1/2] and nonpositive on
    [1/2, 1].  Mapping each half onto [0, 1] by self-similarity gives

        K+ = alpha (1 - alpha)^2 (4 - alpha) / 28
        K- = alpha^2 (1 - alpha) (3 + alpha) / 28

    The halves are not mirror images under mu_alpha, so K- is not
    ``alpha / (1 - alpha) * K+``.
    """
    a = as_alpha(alpha).value
    k_plus = a * (1 - a) ** 2 * (4 - a) / 28
    k_minus = a**2 * (1 - a) * (3 + a) / 28
    rule = build_rule("NC2", a)
    return ErrorConstants(k_plus, k_minus, peano_constant(rule, cache or MomentCache(a)))


def nc2_nodal_difference(alpha: AlphaLike) -> float:
    """``K+ - K-`` for NC2 in factored form; zero only at alpha = 1/2."""
    a = as_alpha(alpha).value
    return a * (1 - a) * (1 - 2 * a) / 7


def nc2_error_bound(alpha: AlphaLike, max_d3: float, max_d4: float) -> float:
    """Bound on the NC2 error from bounds on ``|f'''|`` and ``|f''''|``.

    ``(|K+ - K-| max|f'''| + min(K+, K-) max|f''''|) / 3!``
    """
    c = nc2_k_constants(alpha)
    return (abs(c.nodal_integral) * max_d3 + min(c.k_plus, c.k_minus) * max_d4) / 6


def local_interpolation_bound(rule: QuadratureRule, cache: MomentCache, mass: float, k: int,
                              max_d_p1: float, max_d_p2: float,
                              constants: ErrorConstants | None = None) -> float:
    """Error bound for one rule application on a cell of order ``k``.

    ``max_d_p1`` and ``max_d_p2`` bound the derivatives of order p+1 and
    p+2 on the cell (p+1 = number of nodes).  The ``min(K+, K-) / 2^k``
    term rests on a mean-value step rather than a strict inequality, so
    the result is an estimate; it dominates the observed cell errors for
    NC2 on smooth integrands.
    """
    p1 = rule.size
    if constants is None:
        kp, km = split_nodal_integrals(rule)
    else:
        kp, km = constants.k_plus, constants.k_minus
    scale = mass / (2.0 ** (k * p1) * math.factorial(p1))
    return scale * (min(kp, km) / 2.0**k * max_d_p2 + max_d_p1 * abs(nodal_integral(rule, cache)))


def gl2_error_constant(alpha: AlphaLike) -> float:
    """Coefficient of ``f''''(xi)/24`` in the GL2 error."""
    a = as_alpha(alpha).value
    return -2 * a * (17 * a**3 - 34 * a**2 + 9 * a + 8) / 735


def effective_degree(rule: QuadratureRule, cache: MomentCache) -> int:
    """Declared degree, raised while the Peano constant vanishes."""
    r = rule.degree
    while r < 4 * rule.size:
        m = cache.moment(r + 1)
        if abs(m - _monomial_sum(rule, r + 1)) > max(PEANO_TIE_TOL * abs(m), 1e-16):
            break
        r += 1
    return r


def peano_constant(rule: QuadratureRule, cache: MomentCache, degree: int | None = None) -> float:
    """``m_{r+1} - I(x^{r+1})`` at the verified degree ``r`` of the rule."""
    r = effective_degree(rule, cache) if degree is None else degree
    return cache.moment(r + 1) - _monomial_sum(rule, r + 1)


def taylor_error_bound(rule: QuadratureRule, cache: MomentCache, deriv_bound: float,
                       degree: int | None = None) -> float:
    """``sup|f^(r+1)| / (r+1)! * |peano constant|``."""
    if deriv_bound < 0:
        raise ValueError("deriv_bound must be nonnegative")
    r = effective_degree(rule, cache) if degree is None else degree
    return deriv_bound / math.factorial(r + 1) * abs(peano_constant(rule, cache, r))


def error_constants(rule: QuadratureRule, cache: MomentCache, k: int = 20) -> ErrorConstants:
    """Split constants for any rule; closed form for NC2, numerical otherwise."""
    if rule.family == "NC2":
        return nc2_k_constants(rule.alpha, cache)
    kp, km = split_nodal_integrals(rule, k)
    return ErrorConstants(kp, km, peano_constant(rule, cache))

