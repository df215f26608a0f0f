"""Replicating futures strategies for basis-swap components.

Two independent routes produce the hedge ratios:

* the generic pipeline: instantaneous loadings ``psi`` of the discounted
  claim price onto the three drivers, mapped through the futures volatility
  matrix (upper-triangular solve) into contract positions, and
* closed-form per-regime expressions in prices and slope ratios.

Both must agree to high precision; the test suite checks them against each
other and against finite differences of the pricing functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import kernels
from .errors import DomainError, SingularityError
from .futures import AccrualPeriod, aonia_futures, currency_futures, sofr_futures
from .model import (
    MarketModel,
    collateral_discount,
    forward_bond_price,
    fx_bond_covariance_factor,
    fx_spread_factor,
    zcb_price,
)
from .pricing import (
    BOUNDARY_TOL,
    CcbsSpec,
    MarketState,
    _accumulators,
    _q_start,
    price_ccbs,
    price_interest_leg,
    price_principal_exchange,
)

ArrayLike = Union[float, np.ndarray]


@dataclass
class PsiVector:
    """Loadings of the discounted claim value onto the three drivers."""

    psi1: ArrayLike
    psi2: ArrayLike
    psi3: ArrayLike

    def __add__(self, other):
        return PsiVector(self.psi1 + other.psi1, self.psi2 + other.psi2, self.psi3 + other.psi3)

    def __sub__(self, other):
        return PsiVector(self.psi1 - other.psi1, self.psi2 - other.psi2, self.psi3 - other.psi3)


@dataclass
class HedgePosition:
    """Aggregate futures positions per accrual period plus the cash leg.

    ``phi_d[j]``/``phi_f[j]`` are positions in the rate futures of period
    ``j+1``; ``phi_q[j]`` in the currency futures maturing at that period's
    payment date.  Positions in distinct contracts are never netted.
    """

    phi0: ArrayLike
    phi_d: np.ndarray
    phi_f: np.ndarray
    phi_q: np.ndarray
    collateral: ArrayLike
    value: ArrayLike


def _psi_foreign(t, state, inception, period, model) -> PsiVector:
    u, t_pay = period.start, period.end
    pf = model.foreign
    disc = collateral_discount(t, t_pay, model.spreads)
    lam_t = fx_spread_factor(t, t_pay, model.spreads)
    sig_f, sig_q = pf.sigma, model.fx_vol
    if t < u:
        b_u = zcb_price(t, state.r_f, u, pf)
        b_t = zcb_price(t, state.r_f, t_pay, pf)
        n_u = kernels.ou_weight(pf.b, u - t)
        n_t = kernels.ou_weight(pf.b, t_pay - t)
        x_f = disc * lam_t * state.q * (b_u - b_t)
        psi2 = disc * lam_t * state.q * sig_f * (-n_u * b_u + n_t * b_t)
        return PsiVector(0.0, psi2, sig_q * x_f)
    _, acc_f = _accumulators(state, t, u)
    b_t = zcb_price(t, state.r_f, t_pay, pf)
    n_t = kernels.ou_weight(pf.b, t_pay - t)
    x_f = disc * lam_t * state.q * (acc_f - b_t)
    psi2 = disc * lam_t * state.q * sig_f * n_t * b_t
    return PsiVector(0.0, psi2, sig_q * x_f)


def _psi_domestic(t, state, inception, period, kappa, model) -> PsiVector:
    s, u, t_pay = inception, period.start, period.end
    p, pf = model.domestic, model.foreign
    disc = collateral_discount(t, t_pay, model.spreads)
    kappa_tilde = 1.0 - kappa * period.delta
    sig, sig_f, sig_q = p.sigma, pf.sigma, model.fx_vol
    if t < s:
        upsilon = (
            disc
            * fx_spread_factor(t, s, model.spreads)
            * state.q
            * zcb_price(t, state.r_f, s, pf)
        )
        g_u = fx_bond_covariance_factor(t, s, u, model) * forward_bond_price(t, state.r_d, s, u, p)
        g_t = kappa_tilde * fx_bond_covariance_factor(t, s, t_pay, model) * forward_bond_price(
            t, state.r_d, s, t_pay, p
        )
        n_su = kernels.ou_weight(p.b, u - t) - kernels.ou_weight(p.b, s - t)
        n_st = kernels.ou_weight(p.b, t_pay - t) - kernels.ou_weight(p.b, s - t)
        n_f_s = kernels.ou_weight(pf.b, s - t)
        x_d = upsilon * (g_u - g_t)
        psi1 = upsilon * sig * (-n_su * g_u + n_st * g_t)
        psi2 = -sig_f * n_f_s * x_d
        return PsiVector(psi1, psi2, sig_q * x_d)
    q_s = _q_start(state, t, s)
    if t < u:
        b_u = zcb_price(t, state.r_d, u, p)
        b_t = zcb_price(t, state.r_d, t_pay, p)
        n_u = kernels.ou_weight(p.b, u - t)
        n_t = kernels.ou_weight(p.b, t_pay - t)
        psi1 = disc * q_s * sig * (-n_u * b_u + kappa_tilde * n_t * b_t)
        return PsiVector(psi1, 0.0, 0.0)
    b_t = zcb_price(t, state.r_d, t_pay, p)
    n_t = kernels.ou_weight(p.b, t_pay - t)
    psi1 = disc * q_s * sig * kappa_tilde * n_t * b_t
    return PsiVector(psi1, 0.0, 0.0)


def psi_interest(
    t: float,
    state: MarketState,
    inception: float,
    period: AccrualPeriod,
    kappa: float,
    model: MarketModel,
    component: str = "net_interest",
) -> PsiVector:
    """Driver loadings of an interest-leg claim's discounted price.

    ``component`` selects the foreign leg, the domestic leg or their
    difference (the net exchange of interest payments).
    """
    if t > period.end + BOUNDARY_TOL:
        raise DomainError("loadings requested after the payment date")
    if component == "foreign_leg":
        return _psi_foreign(t, state, inception, period, model)
    if component == "domestic_leg":
        return _psi_domestic(t, state, inception, period, kappa, model)
    if component == "net_interest":
        return _psi_foreign(t, state, inception, period, model) - _psi_domestic(
            t, state, inception, period, kappa, model
        )
    raise DomainError(f"unknown component {component!r}")


def psi_principal(
    t: float,
    state: MarketState,
    inception: float,
    maturity: float,
    model: MarketModel,
) -> PsiVector:
    """Driver loadings of the principal-exchange claim's discounted price."""
    if t > maturity + BOUNDARY_TOL:
        raise DomainError("loadings requested after maturity")
    p, pf = model.domestic, model.foreign
    disc = collateral_discount(t, maturity, model.spreads)
    lam_t = fx_spread_factor(t, maturity, model.spreads)
    sig, sig_f, sig_q = p.sigma, pf.sigma, model.fx_vol
    n_t = kernels.ou_weight(p.b, maturity - t)
    n_f_t = kernels.ou_weight(pf.b, maturity - t)
    b_f_t = zcb_price(t, state.r_f, maturity, pf)
    x_p = price_principal_exchange(t, state, inception, maturity, model)
    if t < inception:
        lam_s = fx_spread_factor(t, inception, model.spreads)
        n_st = n_t - kernels.ou_weight(p.b, inception - t)
        n_f_s = kernels.ou_weight(pf.b, inception - t)
        part2 = (
            disc
            * lam_s
            * state.q
            * fx_bond_covariance_factor(t, inception, maturity, model)
            * forward_bond_price(t, state.r_d, inception, maturity, p)
            * zcb_price(t, state.r_f, inception, pf)
        )
        psi1 = sig * n_st * part2
        psi2 = sig_f * (n_f_s * part2 - lam_t * n_f_t * state.q * b_f_t * disc)
        return PsiVector(psi1, psi2, sig_q * x_p)
    q_s = _q_start(state, t, inception)
    psi1 = sig * n_t * disc * q_s * zcb_price(t, state.r_d, maturity, p)
    psi2 = -sig_f * lam_t * n_f_t * disc * state.q * b_f_t
    psi3 = sig_q * lam_t * disc * state.q * b_f_t
    return PsiVector(psi1, psi2, psi3)


def phi_from_psi(
    psi: PsiVector,
    nu_d: ArrayLike,
    nu_fq: ArrayLike,
    nu_q: tuple,
) -> tuple[ArrayLike, ArrayLike, ArrayLike]:
    """Map driver loadings to futures positions via the volatility matrix.

    ``nu_d`` is the domestic rate futures loading, ``nu_fq`` the
    domestically-valued foreign rate futures loading, ``nu_q`` the three
    currency futures loadings.  The system is upper triangular: solve for the
    currency position first, then back out the rate futures.
    """
    nu_q1, nu_q2, nu_q3 = nu_q
    if np.any(np.asarray(nu_q3) == 0.0) or np.any(np.asarray(nu_d) == 0.0) or np.any(
        np.asarray(nu_fq) == 0.0
    ):
        raise SingularityError("futures volatility pivot is zero (e.g. at settlement)")
    phi_q = psi.psi3 / nu_q3
    phi_f = (psi.psi2 - phi_q * nu_q2) / nu_fq
    phi_d = (psi.psi1 - phi_q * nu_q1) / nu_d
    return phi_d, phi_f, phi_q


def _futures_vols(t, state, inception, period, model):
    """Volatility loadings of the period's three hedge contracts."""
    in_period = t >= period.start
    acc_d = state.acc_d if in_period else None
    acc_f = state.acc_f if in_period else None
    fd = aonia_futures(t, state.r_d, period, model, realized=acc_d)
    ff = sofr_futures(t, state.r_f, period, model, realized=acc_f, q=state.q)
    fq = currency_futures(t, state.r_d, state.r_f, state.q, period.end, model)
    return fd, ff, fq


def hedge_component_pipeline(
    t: float,
    state: MarketState,
    inception: float,
    period: AccrualPeriod,
    kappa: float,
    model: MarketModel,
    component: str,
) -> tuple[ArrayLike, ArrayLike, ArrayLike]:
    """Hedge ratios via the psi-to-phi pipeline (generic route)."""
    if component == "principal":
        psi = psi_principal(t, state, inception, period.end, model)
    else:
        psi = psi_interest(t, state, inception, period, kappa, model, component)
    fd, ff, fq = _futures_vols(t, state, inception, period, model)
    return phi_from_psi(psi, fd.vol[0], ff.vol_in_domestic[1], fq.vol)


def hedge_closed_form(
    t: float,
    state: MarketState,
    inception: float,
    period: AccrualPeriod,
    kappa: float,
    model: MarketModel,
    component: str,
) -> tuple[ArrayLike, ArrayLike, ArrayLike]:
    """Hedge ratios from the per-regime closed-form expressions.

    Structural zeros hold exactly: the domestic leg needs no foreign-rate or
    currency futures once the inception spot is fixed, and the principal
    exchange needs no foreign-rate futures after inception.
    """
    s, u, t_pay = inception, period.start, period.end
    delta = period.delta
    p, pf = model.domestic, model.foreign
    fd, ff, fq = _futures_vols(t, state, inception, period, model)
    one_d = fd.one_plus_delta(delta)
    one_f = ff.one_plus_delta(delta)
    disc = collateral_discount(t, t_pay, model.spreads)
    kappa_tilde = 1.0 - kappa * delta

    n_s = kernels.ou_weight(p.b, max(s - t, 0.0))
    n_u = kernels.ou_weight(p.b, u - t)
    n_t = kernels.ou_weight(p.b, t_pay - t)
    nf_s = kernels.ou_weight(pf.b, max(s - t, 0.0))
    nf_u = kernels.ou_weight(pf.b, u - t)
    nf_t = kernels.ou_weight(pf.b, t_pay - t)
    pre_accrual = t < u
    if pre_accrual:
        # n(t,U,T) = e^{-b (U-t)} n(U,T): the cancellation-free window slope.
        n_window = math.exp(-p.b * (u - t)) * kernels.ou_weight(p.b, delta)
        nf_window = math.exp(-pf.b * (u - t)) * kernels.ou_weight(pf.b, delta)
        zeta_d = n_t / n_window
        zeta_d_hat = n_s / n_window
        zeta_d_tilde = n_u / n_window
        zeta_f = nf_t / nf_window
        zeta_f_hat = nf_s / nf_window
    else:
        zeta_d = zeta_f = 1.0
        zeta_d_hat = zeta_d_tilde = zeta_f_hat = 0.0

    if component == "net_interest":
        f = hedge_closed_form(t, state, inception, period, kappa, model, "foreign_leg")
        d = hedge_closed_form(t, state, inception, period, kappa, model, "domestic_leg")
        return tuple(a - b for a, b in zip(f, d))

    if component == "foreign_leg":
        x_f, _ = price_interest_leg(t, state, s, period, kappa, model)
        if t < u:
            lead = disc * fx_spread_factor(t, t_pay, model.spreads) * zcb_price(t, state.r_f, u, pf)
        else:
            _, acc_f = _accumulators(state, t, u)
            lead = disc * fx_spread_factor(t, t_pay, model.spreads) * acc_f
        phi_1 = -x_f * zeta_d * delta / one_d
        phi_2 = lead * delta / one_f
        phi_3 = x_f / fq.value
        return phi_1, phi_2, phi_3

    if component == "domestic_leg":
        _, x_d = price_interest_leg(t, state, s, period, kappa, model)
        if t < s:
            upsilon = (
                disc
                * fx_spread_factor(t, s, model.spreads)
                * state.q
                * zcb_price(t, state.r_f, s, pf)
            )
            part_u = upsilon * fx_bond_covariance_factor(t, s, u, model) * forward_bond_price(
                t, state.r_d, s, u, p
            )
            part_t = upsilon * fx_bond_covariance_factor(t, s, t_pay, model) * forward_bond_price(
                t, state.r_d, s, t_pay, p
            )
            zeta_star = zeta_d_hat - zeta_d_tilde - zeta_d
            phi_1 = (zeta_star * part_u + (2.0 * zeta_d - zeta_d_hat) * kappa_tilde * part_t) * (
                delta / one_d
            )
            phi_2 = x_d / state.q * (zeta_f - zeta_f_hat) * delta / one_f
            phi_3 = x_d / fq.value
            return phi_1, phi_2, phi_3
        q_s = _q_start(state, t, s)
        if t < u:
            b_u = zcb_price(t, state.r_d, u, p)
            b_t = zcb_price(t, state.r_d, t_pay, p)
            phi_1 = -disc * q_s * (zeta_d_tilde * b_u - kappa_tilde * zeta_d * b_t) * delta / one_d
            return phi_1, 0.0 * np.asarray(phi_1), 0.0 * np.asarray(phi_1)
        b_t = zcb_price(t, state.r_d, t_pay, p)
        phi_1 = disc * q_s * kappa_tilde * b_t * delta / one_d
        return phi_1, 0.0 * np.asarray(phi_1), 0.0 * np.asarray(phi_1)

    if component == "principal":
        x_p = price_principal_exchange(t, state, s, t_pay, model)
        part_1 = (
            disc
            * fx_spread_factor(t, t_pay, model.spreads)
            * state.q
            * zcb_price(t, state.r_f, t_pay, pf)
        )
        if t < s:
            part_2 = (
                disc
                * fx_spread_factor(t, s, model.spreads)
                * state.q
                * fx_bond_covariance_factor(t, s, t_pay, model)
                * forward_bond_price(t, state.r_d, s, t_pay, p)
                * zcb_price(t, state.r_f, s, pf)
            )
            phi_1 = ((2.0 * zeta_d - zeta_d_hat) * part_2 - zeta_d * part_1) * delta / one_d
            phi_2 = (part_2 / state.q) * (zeta_f_hat - zeta_f) * delta / one_f
            phi_3 = x_p / fq.value
            return phi_1, phi_2, phi_3
        phi_1 = -x_p * zeta_d * delta / one_d if pre_accrual else -x_p * delta / one_d
        phi_3 = part_1 / fq.value
        return phi_1, 0.0 * np.asarray(phi_1), phi_3

    raise DomainError(f"unknown component {component!r}")


def hedge_ccbs(
    t: float,
    state: MarketState,
    spec: CcbsSpec,
    model: MarketModel,
    hedge_account: float = 1.0,
) -> HedgePosition:
    """Aggregate replicating strategy for the outstanding swap.

    Period ``j`` is hedged with the rate futures on its own accrual window
    and a currency futures maturing at its payment date; the principal
    exchange loads onto the final period's contracts.  ``hedge_account`` is
    the current hedge funding account value used to express the cash
    position in account units.
    """
    if t > spec.maturity + BOUNDARY_TOL:
        raise DomainError("hedge requested after swap maturity")
    n = spec.n_periods
    width = np.shape(np.asarray(state.r_d))
    phi_d = np.zeros((n,) + width)
    phi_f = np.zeros((n,) + width)
    phi_q = np.zeros((n,) + width)
    scale = spec.notional_f
    for j in range(1, n + 1):
        if spec.tenor[j] <= t + BOUNDARY_TOL:
            continue
        period = spec.period(j)
        period_state = MarketState(
            r_d=state.r_d,
            r_f=state.r_f,
            q=state.q,
            q_start=state.q_start,
            acc_d=state.acc_d if period.start - BOUNDARY_TOL <= t else None,
            acc_f=state.acc_f if period.start - BOUNDARY_TOL <= t else None,
        )
        d, f, c = hedge_closed_form(
            t, period_state, spec.inception, period, spec.kappa, model, "net_interest"
        )
        phi_d[j - 1] += scale * np.asarray(d)
        phi_f[j - 1] += scale * np.asarray(f)
        phi_q[j - 1] += scale * np.asarray(c)
        if j == n:
            d, f, c = hedge_closed_form(
                t, period_state, spec.inception, period, spec.kappa, model, "principal"
            )
            phi_d[j - 1] += scale * np.asarray(d)
            phi_f[j - 1] += scale * np.asarray(f)
            phi_q[j - 1] += scale * np.asarray(c)
    value = price_ccbs(t, state, spec, model).total
    beta = model.spreads.beta
    return HedgePosition(
        phi0=(1.0 - beta) * value / hedge_account,
        phi_d=phi_d,
        phi_f=phi_f,
        phi_q=phi_q,
        collateral=-beta * value,
        value=value,
    )
