import math

import numpy as np
import pytest

from binquad.error_model import (
    effective_degree,
    error_constants,
    gl2_error_constant,
    nc2_error_bound,
    nc2_k_constants,
    nc2_nodal_difference,
    nodal_integral,
    nodal_polynomial,
    peano_constant,
    split_nodal_integrals,
    taylor_error_bound,
)
from binquad.measure import MomentCache
from binquad.rules import apply_rule, build_rule

from conftest import ALPHA_GRID, NINE_ALPHAS

F1 = lambda x: (5 * x**4 + 6 * x**3 - x) / 10


def f1_exact(cache):
    m = cache.moments(4)
    return (5 * m[4] + 6 * m[3] - m[1]) / 10


class TestNodalPolynomial:
    def test_nc1(self):
        assert nodal_polynomial(build_rule("NC1", 0.3)).tolist() == [0.0, -1.0, 1.0]

    def test_nc2(self):
        # x (x - 1/2)(x - 1) = x^3 - 1.5 x^2 + 0.5 x
        assert nodal_polynomial(build_rule("NC2", 0.3)).tolist() == [0.0, 0.5, -1.5, 1.0]

    def test_g0(self):
        assert nodal_polynomial(build_rule("G0", 0.3)).tolist() == [-0.3, 1.0]

    def test_vanishes_at_nodes(self):
        rule = build_rule("NC4", 0.3)
        poly = np.polynomial.Polynomial(nodal_polynomial(rule))
        assert np.allclose(poly(np.array(rule.nodes)), 0, atol=1e-15)

    def test_duplicate_nodes_rejected(self):
        with pytest.raises(ValueError):
            nodal_polynomial(build_rule("H4", 0.5))


class TestNC2Constants:
    def test_lebesgue_symmetry(self):
        c = nc2_k_constants(0.5)
        assert c.k_plus == pytest.approx(0.015625, abs=1e-17)
        assert c.k_minus == pytest.approx(0.015625, abs=1e-17)

    def test_closed_forms_at_03(self):
        c = nc2_k_constants(0.3)
        assert c.k_plus == pytest.approx(0.3 * 0.49 * 3.7 / 28, abs=1e-16)
        assert c.k_minus == pytest.approx(0.09 * 0.7 * 3.3 / 28, abs=1e-16)

    @pytest.mark.parametrize("alpha", ALPHA_GRID)
    def test_difference_identity(self, alpha):
        c = nc2_k_constants(alpha)
        assert c.nodal_integral == pytest.approx(nc2_nodal_difference(alpha), abs=1e-15)
        assert np.sign(c.nodal_integral) == np.sign(0.5 - alpha)

    @pytest.mark.parametrize("alpha", [0.1, 0.3, 0.75])
    def test_against_numerical_split(self, alpha):
        c = nc2_k_constants(alpha)
        kp, km = split_nodal_integrals(build_rule("NC2", alpha), 20)
        assert kp == pytest.approx(c.k_plus, abs=1e-8)
        assert km == pytest.approx(c.k_minus, abs=1e-8)

    def test_difference_equals_moment_expansion(self):
        for alpha in NINE_ALPHAS:
            exact = nodal_integral(build_rule("NC2", alpha), MomentCache(alpha))
            assert exact == pytest.approx(nc2_nodal_difference(alpha), abs=1e-15)

    def test_peano_generic_and_lebesgue(self):
        assert nc2_k_constants(0.3).peano == pytest.approx(0.102 - 0.09, abs=1e-15)
        # at alpha = 1/2 the verified degree is 3, so the constant is taken at x^4
        assert nc2_k_constants(0.5).peano == pytest.approx(1 / 5 - (0.5**4 * 4 + 1) / 6, abs=1e-15)


class TestSplitConsistency:
    @pytest.mark.parametrize("family", ["NC1", "NC2", "G1"])
    @pytest.mark.parametrize("alpha", [0.05, 0.3, 0.6])
    def test_difference_matches_moments(self, family, alpha):
        rule = build_rule(family, alpha)
        kp, km = split_nodal_integrals(rule, 20)
        assert kp >= 0 and km >= 0
        assert kp - km == pytest.approx(nodal_integral(rule, MomentCache(alpha)), abs=1e-8)

    def test_error_constants_dispatch(self):
        cache = MomentCache(0.3)
        assert error_constants(build_rule("NC2", 0.3), cache) == nc2_k_constants(0.3, cache)
        g1 = error_constants(build_rule("G1", 0.3), cache, k=16)
        assert g1.nodal_integral == pytest.approx(nodal_integral(build_rule("G1", 0.3), cache), abs=1e-7)


class TestGL2:
    @pytest.mark.parametrize("alpha", ALPHA_GRID)
    def test_hermite_constant(self, alpha):
        cache = MomentCache(alpha)
        err = cache.moment(4) - apply_rule(build_rule("GL2", alpha), lambda x: x**4)
        assert err == pytest.approx(gl2_error_constant(alpha), abs=1e-13)

    def test_lebesgue_value(self):
        # -2 * 0.5 * (17/8 - 34/4 + 9/2 + 8) / 735 = -6.125 / 735
        assert gl2_error_constant(0.5) == pytest.approx(-1 / 120, abs=1e-17)
        # Simpson: int x^4 - S(x^4) = 1/5 - 5/24 = -1/120
        assert gl2_error_constant(0.5) == pytest.approx(1 / 5 - 5 / 24, abs=1e-16)

    def test_vanishes_toward_dirac(self):
        assert abs(gl2_error_constant(1e-9)) < 1e-10

    @pytest.mark.parametrize("alpha", ALPHA_GRID)
    def test_nodal_orthogonality(self, alpha):
        assert nodal_integral(build_rule("GL2", alpha), MomentCache(alpha)) == pytest.approx(0, abs=1e-12)

    @pytest.mark.parametrize("alpha", [0.2, 0.3, 0.7])
    def test_equal_split(self, alpha):
        kp, km = split_nodal_integrals(build_rule("GL2", alpha), 18)
        assert kp == pytest.approx(km, abs=1e-7)


class TestPeano:
    def test_nc1(self):
        assert peano_constant(build_rule("NC1", 0.3), MomentCache(0.3)) == pytest.approx(-0.14, abs=1e-15)

    def test_nc2_upgrade(self):
        rule = build_rule("NC2", 0.5)
        cache = MomentCache(0.5)
        assert peano_constant(rule, cache, degree=2) == pytest.approx(0, abs=1e-15)
        assert effective_degree(rule, cache) == 3
        assert peano_constant(rule, cache) != 0

    def test_nc2_declared_degree_two_recomputed(self):
        # a rule declared at degree 2 that is exact at 3 is bumped up
        rule = build_rule("NC2", 0.5)
        object.__setattr__(rule, "degree", 2)
        assert effective_degree(rule, MomentCache(0.5)) == 3

    def test_g1(self):
        value = peano_constant(build_rule("G1", 0.3), MomentCache(0.3))
        assert value == pytest.approx(0.07136 - 0.06725714285714, abs=1e-14)

    @pytest.mark.parametrize("family", ["NC1", "NC2", "NC3", "G1", "GL2", "H4"])
    def test_definition(self, family):
        cache = MomentCache(0.37)
        rule = build_rule(family, 0.37)
        r = rule.degree
        for s in range(r + 1):
            assert cache.moment(s) - apply_rule(rule, lambda x: x**s) == pytest.approx(0, abs=1e-12)
        top = cache.moment(r + 1) - apply_rule(rule, lambda x: x ** (r + 1))
        assert abs(top) == pytest.approx(abs(peano_constant(rule, cache)), rel=1e-12)


class TestTaylorBound:
    @pytest.mark.parametrize("family", ["NC1", "NC2", "GL2", "G1", "NC4"])
    def test_attained_by_monomial(self, family):
        cache = MomentCache(0.3)
        rule = build_rule(family, 0.3)
        r = rule.degree
        true = abs(cache.moment(r + 1) - apply_rule(rule, lambda x: x ** (r + 1)))
        bound = taylor_error_bound(rule, cache, math.factorial(r + 1))
        assert bound == pytest.approx(true, rel=1e-12)

    def test_zero_derivative(self):
        assert taylor_error_bound(build_rule("NC3", 0.3), MomentCache(0.3), 0.0) == 0.0

    def test_nc2_f1(self):
        cache = MomentCache(0.3)
        rule = build_rule("NC2", 0.3)
        true = abs(f1_exact(cache) - apply_rule(rule, F1))
        # f1''' = 12 x + 3.6, at most 15.6 on [0, 1]
        assert taylor_error_bound(rule, cache, 15.6) >= true

    def test_negative_bound_rejected(self):
        with pytest.raises(ValueError):
            taylor_error_bound(build_rule("NC3", 0.3), MomentCache(0.3), -1.0)


class TestNC2AbsoluteBound:
    @pytest.mark.parametrize("alpha", ALPHA_GRID)
    def test_dominates_f1_error(self, alpha):
        cache = MomentCache(alpha)
        true = abs(f1_exact(cache) - apply_rule(build_rule("NC2", alpha), F1))
        assert nc2_error_bound(alpha, 15.6, 12.0) >= true - 1e-15

    def test_pessimistic_in_lebesgue_case(self):
        # Simpson's sharp constant is 1/2880; the bound gives a larger one
        assert nc2_error_bound(0.5, 0.0, 1.0) > 1 / 2880


class TestLocalBound:
    @pytest.mark.parametrize("alpha", [0.05, 0.3, 0.45, 0.7])
    def test_dominates_nc2_cell_errors_for_x20(self, alpha):
        from binquad.composite import local_apply
        from binquad.error_model import local_interpolation_bound
        from binquad.measure import DyadicInterval, dyadic_mass, dyadic_moment

        cache = MomentCache(alpha)
        rule = build_rule("NC2", alpha)
        consts = nc2_k_constants(alpha, cache)
        for k in range(1, 7):
            for j in range(1 << k):
                cell = DyadicInterval(j, k)
                right = (j + 1) / 2**k
                err = abs(dyadic_moment(cache, 20, cell) - local_apply(rule, alpha, lambda x: x**20, cell))
                bound = local_interpolation_bound(
                    rule, cache, dyadic_mass(alpha, cell), k,
                    20 * 19 * 18 * right**17, 20 * 19 * 18 * 17 * right**16, consts,
                )
                assert err <= bound
