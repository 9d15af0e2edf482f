import math

import numpy as np
import pytest

from heisencalc.errors import CapExceededError, DomainError
from heisencalc.quadrature import dyadic_rule, gauss_legendre, log_rule, panel_rule


class TestGaussLegendre:
    @pytest.mark.parametrize("order", [1, 4, 16])
    def test_integrates_polynomials_up_to_its_degree(self, order):
        rule = gauss_legendre(-1.0, 3.0, order)
        degree = 2 * order - 1
        exact = (3.0 ** (degree + 1) - (-1.0) ** (degree + 1)) / (degree + 1)
        assert rule.weights @ rule.nodes**degree == pytest.approx(exact, rel=1e-12)

    def test_order_cap(self):
        with pytest.raises(CapExceededError):
            gauss_legendre(0.0, 1.0, 0)


class TestPanelRule:
    def test_rejects_unsorted_edges(self):
        with pytest.raises(DomainError):
            panel_rule([0.0, 2.0, 1.0], 4)

    def test_integrates_exponential(self):
        rule = panel_rule(np.linspace(0.0, 4.0, 9), 8)
        assert rule.weights @ np.exp(-rule.nodes) == pytest.approx(1 - math.exp(-4), rel=1e-14)


class TestDyadicRule:
    def test_octaves_are_exact_shifts(self):
        rule = dyadic_rule(0.25, 4, 6, subdivisions=2)
        per_octave = 12
        first = rule.nodes[:per_octave]
        for k in range(1, 4):
            assert np.array_equal(rule.nodes[k * per_octave : (k + 1) * per_octave], np.ldexp(first, k))

    def test_measure_of_the_range(self):
        rule = dyadic_rule(1.0, 3, 4)
        assert rule.weights.sum() == pytest.approx(7.0, rel=1e-14)


class TestLogRule:
    def test_measure_dt_over_t(self):
        rule = log_rule(2.0**-4, 2, 5, 6)
        assert rule.weights.sum() == pytest.approx(10 * math.log(2.0), rel=1e-14)
        assert rule.nodes.min() > 2.0**-4
        assert rule.nodes.max() < 2.0**6

    def test_reproduces_gamma_integral(self):
        # int_0^inf t e^{-t} dt/t = 1
        rule = log_rule(4.0**-12, 2, 18, 8)
        assert rule.weights @ (rule.nodes * np.exp(-rule.nodes)) == pytest.approx(1.0, abs=1e-6)

    def test_rejects_nonpositive_start(self):
        with pytest.raises(DomainError):
            log_rule(0.0, 2, 3, 4)
