"""Special-function contracts, checked against independent references.

mpmath (arbitrary precision) and scipy.special provide the oracle
values; the implementation under test never calls either.
"""

import math

import mpmath
import numpy as np
import pytest
from scipy import special

from mfbench.mathfns import (
    EULER_GAMMA,
    _digamma_array,
    _sigmoid_array,
    digamma,
    inverse_digamma,
    sigmoid,
    trigamma,
)

mpmath.mp.dps = 50


class TestSigmoid:
    def test_symmetry_point(self):
        assert sigmoid(0.0) == 0.5

    @pytest.mark.parametrize("x", [-3.0, 0.7, 12.0])
    def test_reflection_identity(self, x):
        assert sigmoid(x) == pytest.approx(1.0 - sigmoid(-x), abs=1e-15)

    def test_known_value(self):
        # 1 / (1 + e^-2) evaluated with an arbitrary-precision oracle.
        oracle = float(1 / (1 + mpmath.e ** -2))
        assert sigmoid(2.0) == pytest.approx(oracle, abs=1e-15)
        assert sigmoid(2.0) == pytest.approx(0.8807970779778823, abs=1e-15)

    def test_reflection_sweep(self):
        rng = np.random.default_rng(42)
        for x in rng.uniform(-50, 50, 2000):
            assert abs(sigmoid(x) + sigmoid(-x) - 1.0) <= 1e-15

    def test_saturation_is_finite(self):
        assert sigmoid(1e8) == 1.0
        assert sigmoid(-1e8) == 0.0

    def test_strictly_increasing(self):
        xs = np.linspace(-30, 30, 5000)
        values = [sigmoid(x) for x in xs]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_array_matches_scalar(self):
        # numpy's exp and libm's exp may differ in the last ulp.
        xs = np.linspace(-40, 40, 101)
        np.testing.assert_allclose(
            _sigmoid_array(xs), np.array([sigmoid(x) for x in xs]),
            rtol=0, atol=1e-15)


class TestDigamma:
    def test_psi_of_one(self):
        # psi(1) = -EulerMascheroni, oracle value frozen from mpmath.
        assert digamma(1.0) == pytest.approx(-0.5772156649015329, abs=1e-12)
        assert digamma(1.0) == pytest.approx(-EULER_GAMMA, abs=1e-12)

    def test_recurrence_spot(self):
        assert digamma(4.7) - digamma(3.7) == pytest.approx(1 / 3.7, abs=1e-10)

    @pytest.mark.parametrize("x", [0.0, -1.0, -0.5])
    def test_domain_error(self, x):
        with pytest.raises(ValueError):
            digamma(x)

    def test_absolute_error_contract(self):
        # abs error <= 1e-10 over [1e-6, 1e6] against mpmath.
        xs = np.concatenate([
            np.logspace(-6, 6, 500),
            np.random.default_rng(3).uniform(1e-6, 1e-3, 100),
            [1e-6, 1e6, 1.0, 6.0, 5.999999],
        ])
        for x in xs:
            oracle = float(mpmath.digamma(mpmath.mpf(float(x))))
            assert abs(digamma(float(x)) - oracle) <= 1e-10, x

    def test_recurrence_sweep(self):
        # psi(x+1) - psi(x) = 1/x within 1e-10 over [0.01, 1000].
        xs = np.concatenate([np.linspace(0.01, 1000, 997),
                             np.logspace(-2, 3, 197)])
        for x in xs:
            assert abs(digamma(x + 1.0) - digamma(x) - 1.0 / x) <= 1e-10, x

    def test_strictly_increasing(self):
        rng = np.random.default_rng(11)
        xs = np.sort(rng.uniform(1e-4, 2000, 300))
        values = [digamma(float(x)) for x in xs]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_array_version_matches_scipy(self):
        xs = np.logspace(-5, 5, 400)
        np.testing.assert_allclose(_digamma_array(xs), special.digamma(xs),
                                   atol=1e-9, rtol=0)

    def test_array_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            _digamma_array(np.array([1.0, 0.0]))


class TestTrigamma:
    def test_against_scipy(self):
        xs = np.logspace(-3, 4, 200)
        for x in xs:
            assert trigamma(float(x)) == pytest.approx(
                float(special.polygamma(1, x)), rel=1e-10, abs=1e-10)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            trigamma(0.0)


class TestInverseDigamma:
    @pytest.mark.parametrize("x", [2.5, 0.1])
    def test_round_trip_spot(self, x):
        assert inverse_digamma(digamma(x)) == pytest.approx(x, abs=1e-8)

    def test_inverse_of_psi_one(self):
        assert inverse_digamma(-0.5772156649015329) == pytest.approx(
            1.0, abs=1e-8)

    def test_round_trip_sweep(self):
        # Relative error <= 1e-7 over [0.01, 1000]; residual <= 1e-8.
        xs = np.logspace(np.log10(0.01), 3, 400)
        for x in xs:
            y = digamma(float(x))
            back = inverse_digamma(y)
            assert abs(back - x) / x <= 1e-7, x
            assert abs(digamma(back) - y) <= 1e-8, x

    def test_result_positive_on_wide_range(self):
        for y in np.linspace(-500, 20, 200):
            assert inverse_digamma(float(y)) > 0.0

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            inverse_digamma(math.inf)
        with pytest.raises(ValueError):
            inverse_digamma(math.nan)
