"""Closed-form integral kernels against adaptive quadrature and high
precision references."""

import math

import mpmath
import numpy as np
import pytest
from scipy.integrate import quad

from xccy import kernels

QUAD = dict(epsabs=1e-14, epsrel=1e-13, limit=200)


def n_kernel(b):
    if b == 0.0:
        return lambda w: w
    return lambda w: -math.expm1(-b * w) / b


def test_ou_weight_reference_value():
    # (1 - e^{-5}) / 5 evaluated at 30 digits with mpmath.
    assert kernels.ou_weight(5.0, 1.0) == pytest.approx(0.198652410600182906580672790315, abs=1e-16)


def test_ou_weight_small_rate_series_continuity():
    tau = 1.0
    b = 1e-7
    series = tau * (1.0 - b * tau / 2.0)
    assert abs(kernels.ou_weight(b, tau) - series) < 1e-9


def test_ou_weight_zero_rate():
    assert kernels.ou_weight(0.0, 0.7) == pytest.approx(0.7, abs=0.0)


@pytest.mark.parametrize("b,tau", [(5.0, 0.5), (0.3, 2.0), (1e-7, 1.0), (12.0, 3.0), (0.0, 1.3)])
def test_single_rate_integrals_vs_quadrature(b, tau):
    n = n_kernel(b)
    assert kernels.int_exp(b, tau) == pytest.approx(
        quad(lambda w: math.exp(-b * w), 0, tau, **QUAD)[0], abs=1e-12
    )
    assert kernels.int_n(b, tau) == pytest.approx(quad(n, 0, tau, **QUAD)[0], abs=1e-12)
    assert kernels.int_n_sq(b, tau) == pytest.approx(
        quad(lambda w: n(w) ** 2, 0, tau, **QUAD)[0], abs=1e-12
    )


def test_randomized_kernels_vs_quadrature():
    rng = np.random.default_rng(2024)
    for _ in range(250):
        b1 = 10.0 ** rng.uniform(-8, 1.1)
        b2 = 10.0 ** rng.uniform(-8, 1.1)
        p = 10.0 ** rng.uniform(-8, 1.1)
        tau = rng.uniform(0.01, 4.5)
        n1, n2 = n_kernel(b1), n_kernel(b2)
        checks = [
            (kernels.int_exp_n(p, b1, tau), lambda w: math.exp(-p * w) * n1(w)),
            (kernels.int_n_n(b1, b2, tau), lambda w: n1(w) * n2(w)),
        ]
        for got, integrand in checks:
            want = quad(integrand, 0.0, tau, **QUAD)[0]
            assert got == pytest.approx(want, abs=2e-11), (b1, b2, p, tau)


def test_int_exp_n_equal_rates_closed_form():
    # With equal rates the integral has the elementary antiderivative
    # (n_b(tau) - n_{2b}(tau)) / b; check against 30-digit evaluation.
    mpmath.mp.dps = 30
    b, tau = mpmath.mpf(3), mpmath.mpf("0.8")
    want = ((1 - mpmath.e ** (-b * tau)) / b - (1 - mpmath.e ** (-2 * b * tau)) / (2 * b)) / b
    assert kernels.int_exp_n(3.0, 3.0, 0.8) == pytest.approx(float(want), rel=1e-14)
