"""Closed-form futures prices, their volatility loadings, and state recovery.

Three contracts are covered: domestic (AONIA) compound-rate futures, foreign
(SOFR) compound-rate futures, and currency futures.  Rate futures settle on
the realised compound rate ``R(U,T) = (exp(int_U^T r) - 1) / delta``; the
currency futures settles on the spot exchange rate.

A compound-rate futures price satisfies ``1 + delta F_t = exp(n r_t + Theta)``
where ``n`` is the affine bond slope over the remaining accrual window and
``Theta`` a deterministic (pre-accrual) or realised-rate-dependent
(in-accrual) adjustment.  That representation is used both for pricing and
for inverting quoted futures back into the model state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import kernels
from .errors import DomainError, SingularityError, StateError
from .model import MarketModel, VasicekParams, affine_coeffs

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class AccrualPeriod:
    """Accrual window ``[start, end]`` of a compound-rate futures contract."""

    start: float
    end: float

    def __post_init__(self):
        if not self.start < self.end:
            raise DomainError(f"accrual period needs start < end, got [{self.start}, {self.end}]")

    @property
    def delta(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class RealizedCompound:
    """Accumulated compounding factor ``exp(int_U^t r du)`` inside an accrual period."""

    accumulated: ArrayLike

    def __post_init__(self):
        if np.any(np.asarray(self.accumulated) < 0.0):
            raise DomainError("realized compounding factor cannot be negative")


@dataclass(frozen=True)
class FuturesQuote:
    """A futures price with its instantaneous volatility loadings.

    ``vol`` holds the loadings of ``dF`` onto the three correlated drivers
    (domestic rate, foreign rate, exchange rate).  For foreign rate futures,
    ``vol_in_domestic`` additionally carries the loadings of the
    domestically-valued gains process (the quote scaled by the current spot)
    when the spot was supplied.
    """

    kind: str
    value: ArrayLike
    vol: tuple
    vol_in_domestic: Optional[tuple] = None

    def one_plus_delta(self, delta: float) -> ArrayLike:
        out = 1.0 + delta * np.asarray(self.value)
        if np.any(out <= 0.0):
            raise DomainError("rate futures quote implies non-positive compounding factor")
        return out


def _accumulated(realized) -> ArrayLike:
    if realized is None:
        return None
    if isinstance(realized, RealizedCompound):
        return realized.accumulated
    return realized


def rate_futures_adjustment(
    t: float,
    period: AccrualPeriod,
    p: VasicekParams,
    drift: float,
    realized: ArrayLike | None = None,
) -> ArrayLike:
    """Deterministic exponent term of ``log(1 + delta F_t)``.

    Before the accrual window this collects the drift and variance of the
    compound rate over ``[U, T]``; inside the window it additionally carries
    the log of the realised compounding factor, making it path dependent.
    ``drift`` is the factor's drift level under the futures contract's
    pricing measure (domestic level for AONIA, foreign level for SOFR).
    """
    u_start, u_end = period.start, period.end
    if t > u_end + 1e-12:
        raise DomainError("adjustment requested after futures settlement")
    b, sigma = p.b, p.sigma
    if t < u_start:
        n_window = kernels.ou_weight(b, u_end - u_start)
        mean_part = drift * (kernels.int_n(b, u_end - t) - kernels.int_n(b, u_start - t))
        var_part = sigma ** 2 * (
            n_window ** 2 * kernels.int_exp(2.0 * b, u_start - t)
            + kernels.int_n_sq(b, u_end - u_start)
        )
        return mean_part + 0.5 * var_part
    acc = _accumulated(realized)
    if acc is None:
        if abs(t - u_start) > 1e-12:
            raise StateError("in-period adjustment requires the realized compounding factor")
        acc = 1.0
    tail = u_end - t
    mean_part = drift * kernels.int_n(b, tail)
    var_part = sigma ** 2 * kernels.int_n_sq(b, tail)
    return np.log(acc) + mean_part + 0.5 * var_part


def _rate_futures(
    t: float,
    r: ArrayLike,
    period: AccrualPeriod,
    p: VasicekParams,
    drift: float,
    realized: ArrayLike | None,
) -> tuple[ArrayLike, ArrayLike, float]:
    """Shared compound-rate futures math; returns (value, 1+dF, slope n)."""
    delta = period.delta
    theta = rate_futures_adjustment(t, period, p, drift, realized)
    if t < period.start:
        # n(t,U,T) = n(t,T) - n(t,U) = e^{-b (U-t)} n(U,T), cancellation-free.
        slope = math.exp(-p.b * (period.start - t)) * kernels.ou_weight(p.b, delta)
    else:
        slope = kernels.ou_weight(p.b, period.end - t)
    one_plus = np.exp(slope * r + theta)
    value = (one_plus - 1.0) / delta
    return value, one_plus, slope


def aonia_futures(
    t: float,
    r_d: ArrayLike,
    period: AccrualPeriod,
    model: MarketModel,
    realized: ArrayLike | None = None,
) -> FuturesQuote:
    """Domestic compound-rate futures price and its volatility loading.

    ``realized`` must carry ``exp(int_U^t r_d)`` once ``t`` is inside the
    accrual window (it defaults to 1 exactly at the window start).
    """
    p = model.domestic
    value, one_plus, slope = _rate_futures(t, r_d, period, p, p.a, realized)
    nu = one_plus * slope * p.sigma / period.delta
    return FuturesQuote(kind="aonia", value=value, vol=(nu, 0.0, 0.0))


def sofr_futures(
    t: float,
    r_f: ArrayLike,
    period: AccrualPeriod,
    model: MarketModel,
    realized: ArrayLike | None = None,
    q: ArrayLike | None = None,
) -> FuturesQuote:
    """Foreign compound-rate futures price (a foreign-measure expectation).

    The quote itself is in foreign currency; when the spot ``q`` is supplied
    the loadings of the domestically-valued gains process are attached.
    """
    p = model.foreign
    value, one_plus, slope = _rate_futures(t, r_f, period, p, p.a, realized)
    nu = one_plus * slope * p.sigma / period.delta
    vol_dom = (0.0, q * nu, 0.0) if q is not None else None
    return FuturesQuote(kind="sofr", value=value, vol=(0.0, nu, 0.0), vol_in_domestic=vol_dom)


def currency_futures_convexity(t: float, maturity: float, model: MarketModel) -> float:
    """Convexity exponent ``c_Q`` of the currency futures price.

    ``c_Q = int_t^T sigma n(u,T) (sigma n(u,T) - sigma_f n_f(u,T) rho12
    + fx_vol rho13) du``; the futures-vs-forward correction from the joint
    dynamics of the two discount factors and the spot.
    """
    if t > maturity:
        raise DomainError("convexity exponent requires t <= maturity")
    p, pf, corr = model.domestic, model.foreign, model.corr
    tau = maturity - t
    return p.sigma * (
        p.sigma * kernels.int_n_sq(p.b, tau)
        - pf.sigma * corr.rho12 * kernels.int_n_n(p.b, pf.b, tau)
        + model.fx_vol * corr.rho13 * kernels.int_n(p.b, tau)
    )


def currency_futures(
    t: float,
    r_d: ArrayLike,
    r_f: ArrayLike,
    q: ArrayLike,
    maturity: float,
    model: MarketModel,
) -> FuturesQuote:
    """Currency futures price ``Lambda_Q q B_f(t,T) / B_d(t,T) e^{c_Q}``."""
    if np.any(np.asarray(q) <= 0.0):
        raise DomainError("spot exchange rate must be positive")
    if t > maturity:
        raise DomainError("currency futures requires t <= maturity")
    m_d, n_d = affine_coeffs(t, maturity, model.domestic)
    m_f, n_f = affine_coeffs(t, maturity, model.foreign)
    lam = model.spreads.lambda_q_integral(t, maturity)
    c_q = currency_futures_convexity(t, maturity, model)
    value = q * np.exp(lam + (m_f - n_f * r_f) - (m_d - n_d * r_d) + c_q)
    vol = (
        model.domestic.sigma * n_d * value,
        -model.foreign.sigma * n_f * value,
        model.fx_vol * value,
    )
    return FuturesQuote(kind="currency", value=value, vol=vol)


def theta_adjustments(
    t: float,
    period: AccrualPeriod,
    model: MarketModel,
    realized_d: ArrayLike | None = None,
    realized_f: ArrayLike | None = None,
) -> tuple[ArrayLike, ArrayLike, float]:
    """The three deterministic adjustments linking quotes to model state.

    Returns ``(theta_d, theta_f, theta_q)`` for the accrual period's dates,
    where ``log(1 + delta F) = n r + theta`` for each rate futures and the
    spot satisfies ``log q = log F_q + zeta_f log(1+dF_f) - zeta_d log(1+dF_d)
    + zeta_d theta_d - zeta_f theta_f - theta_q`` with the currency futures
    maturing at the period end.  In-period variants require the realised
    compounding factors.
    """
    theta_d = rate_futures_adjustment(t, period, model.domestic, model.domestic.a, realized_d)
    theta_f = rate_futures_adjustment(t, period, model.foreign, model.foreign.a, realized_f)
    m_d, _ = affine_coeffs(t, period.end, model.domestic)
    m_f, _ = affine_coeffs(t, period.end, model.foreign)
    theta_q = (
        m_f
        - m_d
        + model.spreads.lambda_q_integral(t, period.end)
        + currency_futures_convexity(t, period.end, model)
    )
    return theta_d, theta_f, theta_q


def invert_market_vars(
    fd: FuturesQuote,
    ff: FuturesQuote,
    fq: FuturesQuote,
    t: float,
    dates: tuple[float, float, float],
    model: MarketModel,
    realized_d: ArrayLike | None = None,
    realized_f: ArrayLike | None = None,
) -> tuple[ArrayLike, ArrayLike, ArrayLike]:
    """Recover ``(r_d, r_f, q)`` from the three futures quotes.

    ``dates = (inception, accrual_start, accrual_end)``; the currency futures
    matures at the accrual end.  Composing with the forward pricers is the
    identity.  Inside the accrual window the realised compounding factors
    must be supplied since the in-period adjustments are path dependent.
    """
    _, u_start, u_end = dates
    if t >= u_end - 1e-14:
        raise SingularityError("state recovery is singular at settlement (zero slope)")
    period = AccrualPeriod(u_start, u_end)
    theta_d, theta_f, theta_q = theta_adjustments(t, period, model, realized_d, realized_f)
    delta = period.delta
    log_fd = np.log(fd.one_plus_delta(delta))
    log_ff = np.log(ff.one_plus_delta(delta))
    p, pf = model.domestic, model.foreign
    if t < u_start:
        n_d_window = math.exp(-p.b * (u_start - t)) * kernels.ou_weight(p.b, delta)
        n_f_window = math.exp(-pf.b * (u_start - t)) * kernels.ou_weight(pf.b, delta)
        zeta_d = kernels.ou_weight(p.b, u_end - t) / n_d_window
        zeta_f = kernels.ou_weight(pf.b, u_end - t) / n_f_window
        r_d = (log_fd - theta_d) / n_d_window
        r_f = (log_ff - theta_f) / n_f_window
    else:
        zeta_d = zeta_f = 1.0
        r_d = (log_fd - theta_d) / kernels.ou_weight(p.b, u_end - t)
        r_f = (log_ff - theta_f) / kernels.ou_weight(pf.b, u_end - t)
    log_q = (
        np.log(fq.value)
        + zeta_f * log_ff
        - zeta_d * log_fd
        + zeta_d * theta_d
        - zeta_f * theta_f
        - theta_q
    )
    return r_d, r_f, np.exp(log_q)
