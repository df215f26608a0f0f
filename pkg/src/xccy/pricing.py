"""Arbitrage-free prices of basis-swap legs, principal exchanges and swaptions.

All single-period formulas are per unit of foreign notional, with the
domestic notional fixed at inception as ``q_at_inception`` units of domestic
currency per foreign unit.  The multi-period swap price is the sum of the
outstanding interest legs plus the terminal principal exchange, and is affine
in the basis spread.

Dates follow the convention ``inception <= accrual_start < accrual_end``.
On ``[0, inception)`` a leg is priced off the current spot and forward bonds;
once the inception fixes the spot, the domestic leg only references domestic
bonds; inside the accrual window the realised compounding factors enter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import DomainError, NumericsError, StateError
from .futures import AccrualPeriod
from .model import (
    MarketModel,
    collateral_discount,
    forward_bond_price,
    fx_bond_covariance_factor,
    fx_spread_factor,
    zcb_price,
)

ArrayLike = Union[float, np.ndarray]

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class CcbsSpec:
    """A constant-notional cross-currency basis swap.

    ``tenor[0]`` is the inception date (principals exchanged), subsequent
    entries are payment dates; ``kappa`` is the annualized basis spread added
    to the domestic leg; ``notional_f`` the foreign principal.
    ``q_at_inception`` fixes the domestic principal once known (required for
    valuation at or after the inception date).
    """

    tenor: tuple
    kappa: float = 0.0
    notional_f: float = 1.0
    q_at_inception: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "tenor", tuple(float(t) for t in self.tenor))
        if len(self.tenor) < 2:
            raise DomainError("tenor needs an inception date and at least one payment date")
        if any(b <= a for a, b in zip(self.tenor, self.tenor[1:])):
            raise DomainError("tenor dates must be strictly increasing")
        if self.notional_f <= 0.0:
            raise DomainError("foreign notional must be positive")

    @property
    def inception(self) -> float:
        return self.tenor[0]

    @property
    def maturity(self) -> float:
        return self.tenor[-1]

    @property
    def n_periods(self) -> int:
        return len(self.tenor) - 1

    @property
    def deltas(self) -> tuple:
        return tuple(b - a for a, b in zip(self.tenor, self.tenor[1:]))

    def period(self, j: int) -> AccrualPeriod:
        """Accrual period of payment ``j`` (1-based, like the payment dates)."""
        return AccrualPeriod(self.tenor[j - 1], self.tenor[j])


@dataclass
class MarketState:
    """Observables needed by the regime-dependent pricing formulas.

    ``q_start`` is the exchange rate fixed at the swap inception (required
    from the inception onwards; defaults to ``q`` exactly at inception).
    ``acc_d``/``acc_f`` are the realised compounding factors
    ``exp(int_U^t r)`` of the accrual period currently in progress.
    """

    r_d: ArrayLike
    r_f: ArrayLike
    q: ArrayLike
    q_start: Optional[ArrayLike] = None
    acc_d: Optional[ArrayLike] = None
    acc_f: Optional[ArrayLike] = None


def _q_start(state: MarketState, t: float, inception: float) -> ArrayLike:
    if state.q_start is not None:
        return state.q_start
    if abs(t - inception) <= BOUNDARY_TOL:
        return state.q
    raise StateError("pricing after inception requires the inception exchange rate")


def _accumulators(state: MarketState, t: float, start: float) -> tuple[ArrayLike, ArrayLike]:
    acc_d, acc_f = state.acc_d, state.acc_f
    if acc_d is None or acc_f is None:
        if abs(t - start) <= BOUNDARY_TOL:
            acc_d = 1.0 if acc_d is None else acc_d
            acc_f = 1.0 if acc_f is None else acc_f
        else:
            raise StateError("in-period pricing requires realised compounding factors")
    return acc_d, acc_f


def price_interest_leg(
    t: float,
    state: MarketState,
    inception: float,
    period: AccrualPeriod,
    kappa: float,
    model: MarketModel,
) -> tuple[ArrayLike, ArrayLike]:
    """Prices of the foreign and domestic interest cash flows paid at the period end.

    Returns ``(x_f, x_d)`` per unit foreign notional; the leg's net value to
    the long (receive-foreign) party is ``x_f - x_d``.
    """
    s, u, t_pay = inception, period.start, period.end
    if not s <= u < t_pay:
        raise DomainError("need inception <= accrual_start < accrual_end")
    if t > t_pay + BOUNDARY_TOL:
        raise DomainError("pricing after the payment date")
    p, pf, spreads = model.domestic, model.foreign, model.spreads
    kappa_tilde = 1.0 - kappa * period.delta
    disc = collateral_discount(t, t_pay, spreads)

    if t < s:
        x_f = disc * fx_spread_factor(t, t_pay, spreads) * state.q * (
            zcb_price(t, state.r_f, u, pf) - zcb_price(t, state.r_f, t_pay, pf)
        )
        x_d = disc * fx_spread_factor(t, s, spreads) * state.q * zcb_price(t, state.r_f, s, pf) * (
            fx_bond_covariance_factor(t, s, u, model) * forward_bond_price(t, state.r_d, s, u, p)
            - kappa_tilde
            * fx_bond_covariance_factor(t, s, t_pay, model)
            * forward_bond_price(t, state.r_d, s, t_pay, p)
        )
        return x_f, x_d

    q_s = _q_start(state, t, s)
    if t < u:
        x_f = disc * fx_spread_factor(t, t_pay, spreads) * state.q * (
            zcb_price(t, state.r_f, u, pf) - zcb_price(t, state.r_f, t_pay, pf)
        )
        x_d = disc * q_s * (
            zcb_price(t, state.r_d, u, p) - kappa_tilde * zcb_price(t, state.r_d, t_pay, p)
        )
        return x_f, x_d

    acc_d, acc_f = _accumulators(state, t, u)
    x_f = disc * fx_spread_factor(t, t_pay, spreads) * state.q * (
        acc_f - zcb_price(t, state.r_f, t_pay, pf)
    )
    x_d = disc * q_s * (acc_d - kappa_tilde * zcb_price(t, state.r_d, t_pay, p))
    return x_f, x_d


def price_principal_exchange(
    t: float,
    state: MarketState,
    inception: float,
    maturity: float,
    model: MarketModel,
) -> ArrayLike:
    """Price of receiving the spot at maturity against the inception spot."""
    if not inception < maturity:
        raise DomainError("need inception < maturity")
    if t > maturity + BOUNDARY_TOL:
        raise DomainError("pricing after the maturity date")
    p, pf, spreads = model.domestic, model.foreign, model.spreads
    disc = collateral_discount(t, maturity, spreads)
    if t < inception:
        return disc * state.q * (
            fx_spread_factor(t, maturity, spreads) * zcb_price(t, state.r_f, maturity, pf)
            - fx_spread_factor(t, inception, spreads)
            * fx_bond_covariance_factor(t, inception, maturity, model)
            * forward_bond_price(t, state.r_d, inception, maturity, p)
            * zcb_price(t, state.r_f, inception, pf)
        )
    q_s = _q_start(state, t, inception)
    return disc * (
        fx_spread_factor(t, maturity, spreads) * state.q * zcb_price(t, state.r_f, maturity, pf)
        - q_s * zcb_price(t, state.r_d, maturity, p)
    )


@dataclass
class PriceBreakdown:
    """Per-period leg prices plus the principal exchange, in domestic currency."""

    x_f: list
    x_d: list
    principal: ArrayLike
    periods: tuple = ()

    @property
    def interest_total(self) -> ArrayLike:
        return sum(f - d for f, d in zip(self.x_f, self.x_d)) if self.x_f else 0.0

    @property
    def total(self) -> ArrayLike:
        return self.interest_total + self.principal


def _state_for_period(state: MarketState, t: float, spec: CcbsSpec, j: int) -> MarketState:
    """Restrict in-progress accumulators to the period they belong to."""
    period = spec.period(j)
    in_period = period.start - BOUNDARY_TOL <= t <= period.end + BOUNDARY_TOL
    return MarketState(
        r_d=state.r_d,
        r_f=state.r_f,
        q=state.q,
        q_start=state.q_start,
        acc_d=state.acc_d if in_period else None,
        acc_f=state.acc_f if in_period else None,
    )


def price_ccbs(t: float, state: MarketState, spec: CcbsSpec, model: MarketModel) -> PriceBreakdown:
    """Value of the outstanding swap (payments strictly after ``t``), scaled by notional."""
    if t > spec.maturity + BOUNDARY_TOL:
        raise DomainError("pricing after swap maturity")
    scale = spec.notional_f
    x_f, x_d, periods = [], [], []
    for j in range(1, spec.n_periods + 1):
        if spec.tenor[j] <= t + BOUNDARY_TOL:
            continue
        f, d = price_interest_leg(
            t, _state_for_period(state, t, spec, j), spec.inception, spec.period(j), spec.kappa, model
        )
        x_f.append(scale * f)
        x_d.append(scale * d)
        periods.append(j)
    if spec.maturity > t + BOUNDARY_TOL:
        principal = scale * price_principal_exchange(t, state, spec.inception, spec.maturity, model)
    else:
        principal = 0.0
    return PriceBreakdown(x_f=x_f, x_d=x_d, principal=principal, periods=tuple(periods))


@dataclass
class SpreadQuote:
    """Fair basis spread and its pricing components.

    ``value = (i_f - i_d + i_p) / k_d`` where ``i_*`` are the zero-spread leg
    totals and ``k_d`` the sensitivity of the swap price to the spread.
    """

    value: ArrayLike
    i_f: ArrayLike
    i_d: ArrayLike
    i_p: ArrayLike
    k_d: ArrayLike

    @property
    def value_bps(self) -> ArrayLike:
        return self.value * 1e4


def fair_spread(t: float, state: MarketState, spec: CcbsSpec, model: MarketModel) -> SpreadQuote:
    """The basis spread making the swap's time-``t`` value zero (``t <= inception``)."""
    if t > spec.inception + BOUNDARY_TOL:
        raise DomainError("forward fair spread defined for t <= inception")
    zero_spec = CcbsSpec(
        tenor=spec.tenor,
        kappa=0.0,
        notional_f=spec.notional_f,
        q_at_inception=spec.q_at_inception,
    )
    breakdown = price_ccbs(t, state, zero_spec, model)
    i_f = sum(breakdown.x_f)
    i_d = sum(breakdown.x_d)
    i_p = breakdown.principal
    k_d = _spread_sensitivity(t, state, spec, model)
    if np.any(np.asarray(k_d) <= 0.0):
        raise NumericsError("spread sensitivity must be positive")
    return SpreadQuote(value=(i_f - i_d + i_p) / k_d, i_f=i_f, i_d=i_d, i_p=i_p, k_d=k_d)


def _spread_sensitivity(t: float, state: MarketState, spec: CcbsSpec, model: MarketModel) -> ArrayLike:
    """``-d(price)/d(kappa)``: the annuity-like factor on the domestic leg."""
    p, pf, spreads = model.domestic, model.foreign, model.spreads
    s = spec.inception
    total = 0.0
    for j in range(1, spec.n_periods + 1):
        t_pay = spec.tenor[j]
        if t_pay <= t + BOUNDARY_TOL:
            continue
        delta_j = spec.deltas[j - 1]
        disc = collateral_discount(t, t_pay, spreads)
        if t < s:
            coef = (
                disc
                * fx_spread_factor(t, s, spreads)
                * state.q
                * zcb_price(t, state.r_f, s, pf)
                * fx_bond_covariance_factor(t, s, t_pay, model)
                * forward_bond_price(t, state.r_d, s, t_pay, p)
            )
        else:
            coef = disc * _q_start(state, t, s) * zcb_price(t, state.r_d, t_pay, p)
        total = total + delta_j * coef
    return spec.notional_f * total


def swaption_payoff(ccbs_value_at_inception: ArrayLike, side: str) -> ArrayLike:
    """Exercise value of a payer/receiver swaption on the swap's inception value."""
    v = np.asarray(ccbs_value_at_inception, dtype=float)
    if side == "payer":
        out = np.maximum(v, 0.0)
    elif side == "receiver":
        out = np.maximum(-v, 0.0)
    else:
        raise DomainError(f"side must be 'payer' or 'receiver', got {side!r}")
    return float(out) if np.isscalar(ccbs_value_at_inception) else out
