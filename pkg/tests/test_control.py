import math

import numpy as np
import pytest

from helpers import adaptive_simpson
from sepoc.control import (ControlPolynomial, CostFunction, NORM0, NORMK,
                           chebyshev_nodes, constant_control, eval_mu, fit,
                           grad_G, grad_I, integral_G, integral_I, is_positive)

SQ = CostFunction.square()


class TestEvalMu:
    def test_constant_basis_value(self):
        c = ControlPolynomial(np.array([1.0] + [0.0] * 9), 3.0)
        for t in (0.0, 1.1, 3.0):
            assert eval_mu(c, t) == pytest.approx(1.0 / math.sqrt(math.pi), abs=1e-15)

    def test_known_constant_coefficient(self):
        # p1 = 1.0233 (4 decimals) encodes mu == sqrt(1/3) on any horizon
        c = ControlPolynomial(np.array([1.0233] + [0.0] * 9), 3.0)
        assert eval_mu(c, 1.5) == pytest.approx(math.sqrt(1.0 / 3.0), abs=5e-5)
        exact = ControlPolynomial(np.array([math.sqrt(math.pi / 3.0)]), 3.0)
        assert eval_mu(exact, 1.5) == pytest.approx(math.sqrt(1.0 / 3.0), abs=1e-15)

    def test_degree_one_endpoint(self):
        c = ControlPolynomial(np.array([0.0, 1.0, 0.0]), 2.0)
        assert eval_mu(c, 0.0) == pytest.approx(-math.sqrt(2.0 / math.pi), abs=1e-15)

    def test_out_of_domain_raises(self):
        c = constant_control(1.0, 1.0, 3)
        with pytest.raises(ValueError):
            eval_mu(c, 1.5)
        with pytest.raises(ValueError):
            eval_mu(c, -0.2)

    def test_matches_numpy_chebyshev(self):
        rng = np.random.default_rng(3)
        p = rng.normal(size=7)
        c = ControlPolynomial(p, 2.0)
        t = np.linspace(0, 2.0, 33)
        expected = np.polynomial.chebyshev.chebval(2 * t / 2.0 - 1, c.chebyshev_coeffs())
        np.testing.assert_allclose(eval_mu(c, t), expected, atol=1e-14)


class TestIntegralI:
    def test_constant(self):
        c = constant_control(0.7, 4.0, 10)
        assert integral_I(c) == pytest.approx(0.7 * 4.0, abs=1e-13)

    def test_first_coefficient_only(self):
        c = ControlPolynomial(np.array([2.5, 0.0, 0.0]), 3.0)
        assert integral_I(c) == pytest.approx(2.5 * 3.0 / math.sqrt(math.pi), abs=1e-13)

    def test_random_against_adaptive_simpson(self):
        rng = np.random.default_rng(7)
        c = ControlPolynomial(rng.normal(size=10), 3.0)
        oracle = adaptive_simpson(lambda t: eval_mu(c, t), 0.0, 3.0, tol=1e-14)
        assert integral_I(c) == pytest.approx(oracle, abs=1e-12)


class TestIntegralG:
    def test_budget_saturation(self):
        T, C1 = 3.0, 1.0
        c = constant_control(math.sqrt(C1 / T), T, 10)
        assert integral_G(c, SQ) == pytest.approx(C1, abs=1e-13)

    def test_two_coefficients_against_simpson(self):
        c = ControlPolynomial(np.array([1.0, 1.0, 0.0, 0.0]), math.pi)
        oracle = adaptive_simpson(lambda t: eval_mu(c, t) ** 2, 0.0, math.pi, tol=1e-14)
        val = integral_G(c, SQ)
        assert val == pytest.approx(oracle, abs=1e-10)
        # exact value: (T/2) * (2/pi + (2/pi)(2/3)) = 5/3 on T = pi
        assert val == pytest.approx(5.0 / 3.0, abs=1e-12)

    def test_quartic_cost(self):
        g4 = CostFunction(g=lambda m: m ** 4, gprime=lambda m: 4 * m ** 3, tag="quartic")
        c = constant_control(1.0, 2.0, 8)
        assert integral_G(c, g4) == pytest.approx(2.0, abs=1e-12)


class TestGradients:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_grad_matches_central_differences(self, seed):
        rng = np.random.default_rng(seed)
        c = ControlPolynomial(rng.normal(size=9), 2.2)
        gi, gg = grad_I(c), grad_G(c, SQ)
        step = 1e-6
        for i in range(c.q):
            dp = np.zeros(c.q)
            dp[i] = step
            cp = ControlPolynomial(c.coeffs + dp, c.T)
            cm = ControlPolynomial(c.coeffs - dp, c.T)
            fd_i = (integral_I(cp) - integral_I(cm)) / (2 * step)
            fd_g = (integral_G(cp, SQ) - integral_G(cm, SQ)) / (2 * step)
            assert gi[i] == pytest.approx(fd_i, rel=1e-8, abs=1e-8)
            assert gg[i] == pytest.approx(fd_g, rel=1e-8, abs=1e-8)

    def test_second_basis_function_integrates_to_zero(self):
        c = ControlPolynomial(np.zeros(5), 3.0)
        assert grad_I(c)[1] == 0.0


class TestSphereBound:
    def test_reach_bound_on_cost_sphere(self):
        # on G = C1 the total rescaled time never exceeds sqrt(C1 T), with
        # equality only for the positive constant control
        rng = np.random.default_rng(11)
        T, C1 = 3.0, 1.0
        for _ in range(1000):
            p = rng.normal(size=10)
            c = ControlPolynomial(p, T)
            c = ControlPolynomial(p * math.sqrt(C1 / integral_G(c, SQ)), T)
            assert integral_I(c) <= math.sqrt(C1 * T) + 1e-10
        c_star = constant_control(math.sqrt(C1 / T), T, 10)
        assert integral_I(c_star) == pytest.approx(math.sqrt(C1 * T), abs=1e-12)


class TestFitAndSerialization:
    def test_node_refit_roundtrip(self):
        rng = np.random.default_rng(5)
        c = ControlPolynomial(rng.normal(size=10), 1.7)
        t_nodes = 0.5 * c.T * (chebyshev_nodes(c.q) + 1.0)
        c2 = fit(eval_mu(c, t_nodes), c.T)
        np.testing.assert_allclose(c2.coeffs, c.coeffs, atol=1e-12)

    def test_csv_roundtrip(self):
        c = ControlPolynomial(np.array([1.25, -0.5, 1e-7]), 2.5)
        c2 = ControlPolynomial.from_csv_row(c.to_csv_row())
        np.testing.assert_array_equal(c2.coeffs, c.coeffs)
        assert c2.T == c.T

    def test_positivity_flag(self):
        assert is_positive(constant_control(0.3, 2.0, 6))
        assert not is_positive(ControlPolynomial(np.array([0.0, 1.0]), 2.0))

    def test_validation(self):
        with pytest.raises(ValueError):
            ControlPolynomial(np.array([1.0]), -1.0)
        with pytest.raises(ValueError):
            ControlPolynomial(np.empty(0), 1.0)


def test_normalization_constants():
    assert NORM0 == pytest.approx(1.0 / math.sqrt(math.pi), abs=1e-16)
    assert NORMK == pytest.approx(math.sqrt(2.0 / math.pi), abs=1e-16)
