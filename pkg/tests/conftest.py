import math
from fractions import Fraction

import numpy as np
import pytest

ALPHA_GRID = [round(0.05 * i, 2) for i in range(1, 20)]
NINE_ALPHAS = [0.05, 0.1, 0.2, 0.3, 0.45, 0.5, 0.6, 0.75, 0.9]


def exact_moments(alpha: Fraction, n: int) -> list[Fraction]:
    """Moments in rational arithmetic, straight from the defining recursion."""
    m = [Fraction(1)]
    for s in range(1, n + 1):
        m.append(alpha / (2**s - 1) * sum(math.comb(s, q) * m[s - q] for q in range(1, s + 1)))
    return m


def density_oracle(alpha: float, coeffs, k: int, lo: float = 0.0, hi: float = 1.0) -> float:
    """Integral of a polynomial against the order-k piecewise constant density.

    Each cell contributes its mass times the uniform average of the
    polynomial over the cell; independent of the moment recursion and of
    any quadrature rule.  Error is O(2^-k).
    """
    n = 1 << k
    j = np.arange(n)
    counts = np.array([bin(int(t)).count("1") for t in j]) if k <= 10 else np.bitwise_count(j)
    mass = alpha**counts * (1 - alpha) ** (k - counts)
    h = 1.0 / n
    a = j * h
    b = a + h
    avg = sum(c * (b ** (s + 1) - a ** (s + 1)) / ((s + 1) * h) for s, c in enumerate(coeffs))
    sel = (a >= lo) & (b <= hi)
    return math.fsum((mass * avg)[sel])


@pytest.fixture(params=ALPHA_GRID)
def grid_alpha(request):
    return request.param


# One pass/fail line per acceptance criterion, collected by test_acceptance.
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[number]
        ok = all(p[1] for p in parts)
        failed = "; ".join(f"{name}: {detail}" for name, passed, detail in parts if not passed)
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}"
        terminalreporter.write_line(line + (f"  ({failed})" if failed else ""))
