"""Stable closed-form antiderivatives for the exponential integrands of the model.

Every deterministic time integral in the engine reduces to combinations of

    int_0^tau e^{-p w} dw,      int_0^tau n_b(w) dw,      int_0^tau n_b(w)^2 dw,
    int_0^tau e^{-p w} n_b(w) dw,          int_0^tau n_b1(w) n_b2(w) dw,

where ``n_b(w) = (1 - e^{-b w}) / b`` is the mean-reversion weight of an
Ornstein-Uhlenbeck factor with speed ``b``.  The direct formulas suffer
catastrophic cancellation when a speed times the horizon is small, so each
helper switches to a truncated power series below a fixed threshold.  All
results are accurate to roughly 1e-12 absolute for horizons up to a few years
and speeds from 0 to ~20, which is what the closed-form-vs-quadrature test
suite asserts.
"""

from __future__ import annotations

import math

# Below this value of b*tau the (1 - e^{-b tau})/b form is replaced by a
# 3-term Taylor expansion; both branches agree to machine precision there.
SMALL_RATE_TIME = 1e-6


def ou_weight(b: float, tau: float) -> float:
    """``n_b(tau) = (1 - e^{-b tau}) / b``, the OU mean-reversion weight.

    For ``b -> 0`` the weight tends to ``tau``; the small-``b*tau`` branch
    uses the series ``tau (1 - x/2 + x^2/6)`` with ``x = b tau``.
    """
    x = b * tau
    if abs(x) < SMALL_RATE_TIME:
        return tau * (1.0 - 0.5 * x + x * x / 6.0)
    return -math.expm1(-x) / b


def _psi(k: int, x: float) -> float:
    """``psi_k(x) = int_0^1 u^k e^{-x u} du`` (entire in x, decreasing)."""
    if abs(x) < 1.0:
        # Taylor series sum_j (-x)^j / (j! (k + j + 1)); 30 terms reach
        # machine precision for |x| < 1.
        total = 0.0
        term = 1.0
        for j in range(30):
            total += term / (k + j + 1)
            term *= -x / (j + 1)
        return total
    # Upward recurrence psi_k = (k psi_{k-1} - e^{-x}) / x, stable for x >= 1.
    e = math.exp(-x)
    val = -math.expm1(-x) / x
    for i in range(1, k + 1):
        val = (i * val - e) / x
    return val


def _chi(k: int, x: float) -> float:
    """``chi_k(x) = (1/(k+1) - psi_k(x)) / x`` (entire in x)."""
    if abs(x) < 1.0:
        total = 0.0
        term = 1.0  # x^i / (i+1)! at i = 0 gives 1/1!
        for i in range(30):
            total += term / (k + i + 2)
            term *= -x / (i + 2)
        return total
    return (1.0 / (k + 1) - _psi(k, x)) / x


def int_exp(p: float, tau: float) -> float:
    """``int_0^tau e^{-p w} dw``."""
    return tau * _psi(0, p * tau)


def int_w_exp(k: int, p: float, tau: float) -> float:
    """``int_0^tau w^k e^{-p w} dw``."""
    return tau ** (k + 1) * _psi(k, p * tau)


def int_n(b: float, tau: float) -> float:
    """``int_0^tau n_b(w) dw``."""
    return tau * tau * _chi(0, b * tau)


def int_n_sq(b: float, tau: float) -> float:
    """``int_0^tau n_b(w)^2 dw``."""
    x = b * tau
    if abs(x) < 0.5:
        # (1 - 2 phi0(x) + phi0(2x)) / x^2 = sum_j (-x)^j (2^{j+2}-2)/(j+3)!
        total = 0.0
        term = 1.0
        pow2 = 4.0
        fact = 6.0  # (j+3)! at j=0
        j = 0
        while j < 30:
            total += term * (pow2 - 2.0) / fact
            j += 1
            term *= -x
            pow2 *= 2.0
            fact *= j + 3
        return tau ** 3 * total
    n1 = ou_weight(b, tau)
    n2 = ou_weight(2.0 * b, tau)
    return (tau - 2.0 * n1 + n2) / (b * b)


def int_exp_n(p: float, b: float, tau: float) -> float:
    """``int_0^tau e^{-p w} n_b(w) dw``.

    Covers both the equal-rate case (the forward-bond convexity kernel) and
    the cross-rate case appearing in the exchange-rate covariance factor.
    """
    y = b * tau
    if abs(y) < 1e-3:
        # Expand n_b(w) = w - b w^2/2 + b^2 w^3/6 - b^3 w^4/24 + O(b^4 w^5).
        return (
            int_w_exp(1, p, tau)
            - 0.5 * b * int_w_exp(2, p, tau)
            + (b * b / 6.0) * int_w_exp(3, p, tau)
            - (b ** 3 / 24.0) * int_w_exp(4, p, tau)
        )
    return (int_exp(p, tau) - int_exp(p + b, tau)) / b


def _int_n_w(k: int, b: float, tau: float) -> float:
    """``int_0^tau n_b(w) w^k dw``."""
    return tau ** (k + 2) * _chi(k, b * tau)


def int_n_n(b1: float, b2: float, tau: float) -> float:
    """``int_0^tau n_b1(w) n_b2(w) dw``."""
    x, y = b1 * tau, b2 * tau
    if abs(x) < abs(y):
        b1, b2 = b2, b1
        x, y = y, x
    if abs(y) < 0.05:
        # Expand the slower factor: n_b2(w) = sum_k (-1)^{k+1} b2^{k-1} w^k / k!.
        total = 0.0
        coeff = 1.0  # b2^{k-1} / k! at k = 1
        for k in range(1, 7):
            total += coeff * _int_n_w(k, b1, tau)
            coeff *= -b2 / (k + 1)
        return total
    one = ou_weight(b1, tau)
    two = ou_weight(b2, tau)
    both = ou_weight(b1 + b2, tau)
    return (tau - one - two + both) / (b1 * b2)
