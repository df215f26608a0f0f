"""Model parameters and deterministic closed-form building blocks.

The market model couples two Vasicek short-rate factors (domestic and
foreign benchmark rates) with a lognormal exchange rate, plus four
deterministic piecewise-constant spread curves linking the benchmark rates
to hedge-funding, collateral and market funding rates.  Everything in this
module is a pure function of immutable inputs; all time integrals are
evaluated from hand-derived antiderivatives (see :mod:`xccy.kernels`), never
by numeric quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import kernels
from .errors import DomainError

ArrayLike = Union[float, np.ndarray]


def _require_ordering(*times: float) -> None:
    for lo, hi in zip(times, times[1:]):
        if lo > hi + 1e-15:
            raise DomainError(f"time arguments must be non-decreasing, got {times}")


# ---------------------------------------------------------------------------
# Spread curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PiecewiseFlatCurve:
    """Right-continuous piecewise-constant function of time with exact integrals.

    ``values[i]`` applies on ``[breaks[i-1], breaks[i])`` with ``breaks[-1]``
    extending to infinity and the first piece starting at time 0.
    """

    values: tuple
    breaks: tuple = ()

    def __post_init__(self):
        if len(self.values) != len(self.breaks) + 1:
            raise DomainError("need exactly one more value than breakpoints")
        if any(b2 <= b1 for b1, b2 in zip(self.breaks, self.breaks[1:])):
            raise DomainError("breakpoints must be strictly increasing")

    @classmethod
    def flat(cls, value: float) -> "PiecewiseFlatCurve":
        return cls(values=(float(value),))

    def __call__(self, t: float) -> float:
        i = 0
        for b in self.breaks:
            if t < b:
                break
            i += 1
        return self.values[i]

    def integral(self, t: float, u: float) -> float:
        """Exact ``int_t^u`` of the curve; antisymmetric in (t, u)."""
        if u < t:
            return -self.integral(u, t)
        knots = [t] + [b for b in self.breaks if t < b < u] + [u]
        total = 0.0
        for lo, hi in zip(knots, knots[1:]):
            total += self(lo) * (hi - lo)
        return total

    def combine(self, other: "PiecewiseFlatCurve", w_self: float, w_other: float) -> "PiecewiseFlatCurve":
        """Pointwise ``w_self * self + w_other * other`` on the merged breakpoints."""
        breaks = tuple(sorted(set(self.breaks) | set(other.breaks)))
        probes = (0.0,) + breaks
        values = tuple(w_self * self(p) + w_other * other(p) for p in probes)
        return PiecewiseFlatCurve(values=values, breaks=breaks)


def _as_curve(x) -> PiecewiseFlatCurve:
    if isinstance(x, PiecewiseFlatCurve):
        return x
    return PiecewiseFlatCurve.flat(float(x))


@dataclass(frozen=True)
class SpreadCurves:
    """Deterministic spreads over the benchmark rates and the collateral level.

    ``alpha_h``: hedge funding spread, ``alpha_c``: collateral remuneration
    spread, ``alpha_d``/``alpha_f``: domestic/foreign market funding spreads.
    ``beta`` is the proportional collateralization level (1 = full).
    """

    alpha_h: PiecewiseFlatCurve = field(default_factory=lambda: PiecewiseFlatCurve.flat(0.0))
    alpha_c: PiecewiseFlatCurve = field(default_factory=lambda: PiecewiseFlatCurve.flat(0.0))
    alpha_d: PiecewiseFlatCurve = field(default_factory=lambda: PiecewiseFlatCurve.flat(0.0))
    alpha_f: PiecewiseFlatCurve = field(default_factory=lambda: PiecewiseFlatCurve.flat(0.0))
    beta: float = 1.0

    def __post_init__(self):
        for name in ("alpha_h", "alpha_c", "alpha_d", "alpha_f"):
            object.__setattr__(self, name, _as_curve(getattr(self, name)))
        if self.beta < 0.0:
            raise DomainError("collateralization level beta must be non-negative")

    @property
    def alpha_beta(self) -> PiecewiseFlatCurve:
        """Effective discount spread ``(1-beta) alpha_h + beta alpha_c``."""
        return self.alpha_h.combine(self.alpha_c, 1.0 - self.beta, self.beta)

    @property
    def lambda_q(self) -> PiecewiseFlatCurve:
        """Market funding differential ``alpha_d - alpha_f`` driving the FX drift."""
        return self.alpha_d.combine(self.alpha_f, 1.0, -1.0)

    def alpha_beta_integral(self, t: float, u: float) -> float:
        return self.alpha_beta.integral(t, u)

    def lambda_q_integral(self, t: float, u: float) -> float:
        return self.lambda_q.integral(t, u)


# ---------------------------------------------------------------------------
# Factor parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VasicekParams:
    """One OU short-rate factor ``dr = (a - b r) dt + sigma dZ``."""

    a: float
    b: float
    sigma: float

    def __post_init__(self):
        if self.b < 0.0:
            raise DomainError("mean-reversion speed b must be non-negative")
        if self.sigma < 0.0:
            raise DomainError("volatility sigma must be non-negative")

    @property
    def mean_level(self) -> float:
        """Long-run mean ``a / b`` (undefined for b = 0)."""
        if self.b == 0.0:
            raise DomainError("mean level undefined for b = 0")
        return self.a / self.b


@dataclass(frozen=True)
class CorrelationSet:
    """Correlations of the three driving Brownian motions.

    ``rho12``: domestic/foreign rates, ``rho13``: domestic rate/FX,
    ``rho23``: foreign rate/FX.  The derived ``alpha`` coefficients
    orthogonalize the third driver against the first two; construction is
    rejected when the implied 3x3 correlation matrix is not PSD.
    """

    rho12: float
    rho13: float
    rho23: float
    alpha1: float = field(init=False)
    alpha2: float = field(init=False)
    alpha3: float = field(init=False)

    def __post_init__(self):
        for name in ("rho12", "rho13", "rho23"):
            r = getattr(self, name)
            if not -1.0 <= r <= 1.0:
                raise DomainError(f"{name} = {r} outside [-1, 1]")
        if abs(self.rho12) >= 1.0:
            raise DomainError("|rho12| must be < 1 for the orthogonalization")
        a1 = self.rho13
        a2 = (self.rho23 - self.rho12 * self.rho13) / math.sqrt(1.0 - self.rho12 ** 2)
        disc = 1.0 - self.rho13 ** 2 - a2 ** 2
        if disc < -1e-12:
            raise DomainError("correlation matrix is not positive semidefinite")
        a3 = math.sqrt(max(disc, 0.0))
        object.__setattr__(self, "alpha1", a1)
        object.__setattr__(self, "alpha2", a2)
        object.__setattr__(self, "alpha3", a3)

    def matrix(self) -> np.ndarray:
        return np.array(
            [
                [1.0, self.rho12, self.rho13],
                [self.rho12, 1.0, self.rho23],
                [self.rho13, self.rho23, 1.0],
            ]
        )


@dataclass(frozen=True)
class MarketModel:
    """Full parameter bundle for the two-economy model.

    ``foreign.a`` is quoted under the foreign martingale measure; the drift
    under the domestic measure is ``foreign.a - foreign.sigma * fx_vol * rho23``
    (exposed as :attr:`foreign_drift_domestic`).
    """

    domestic: VasicekParams
    foreign: VasicekParams
    corr: CorrelationSet
    spreads: SpreadCurves
    fx_vol: float
    r_d0: float
    r_f0: float
    q0: float

    def __post_init__(self):
        if self.q0 <= 0.0:
            raise DomainError("initial exchange rate must be positive")
        if self.fx_vol < 0.0:
            raise DomainError("exchange-rate volatility must be non-negative")

    @property
    def foreign_drift_domestic(self) -> float:
        """Foreign factor drift level under the domestic measure."""
        return self.foreign.a - self.foreign.sigma * self.fx_vol * self.corr.rho23

    @property
    def domestic_drift_foreign(self) -> float:
        """Domestic factor drift level under the foreign measure."""
        return self.domestic.a + self.domestic.sigma * self.fx_vol * self.corr.rho13


# ---------------------------------------------------------------------------
# Closed-form building blocks
# ---------------------------------------------------------------------------


def affine_coeffs(t: float, u: float, p: VasicekParams) -> tuple[float, float]:
    """Affine exponents ``(m, n)`` of the zero-coupon bond ``exp(m - n x)``.

    ``n(t,u) = (1 - e^{-b (u-t)}) / b`` and
    ``m(t,u) = sigma^2/2 int_t^u n^2(v,u) dv - a int_t^u n(v,u) dv``.
    """
    _require_ordering(t, u)
    tau = u - t
    n = kernels.ou_weight(p.b, tau)
    m = 0.5 * p.sigma ** 2 * kernels.int_n_sq(p.b, tau) - p.a * kernels.int_n(p.b, tau)
    return m, n


def zcb_price(t: float, x: ArrayLike, u: float, p: VasicekParams) -> ArrayLike:
    """Zero-coupon bond price ``exp(m(t,u) - n(t,u) x)`` for short rate ``x``."""
    m, n = affine_coeffs(t, u, p)
    return np.exp(m - n * x)


def forward_bond_convexity(t: float, s: float, u: float, p: VasicekParams) -> float:
    """Convexity term ``N(t,s,u) = int_t^s sigma^2 n(v,s)(n(v,s) - n(v,u)) dv``.

    Links the conditional-expectation bond ``E_t[B(s,u)]`` to the bond-price
    ratio; vanishes at ``t = s`` and at ``s = u``.
    """
    _require_ordering(t, s, u)
    n_su = kernels.ou_weight(p.b, u - s)
    return -p.sigma ** 2 * n_su * kernels.int_exp_n(p.b, p.b, s - t)


def forward_bond_price(t: float, x: ArrayLike, s: float, u: float, p: VasicekParams) -> ArrayLike:
    """``E_t[exp(-int_s^u r)]`` as a function of the time-``t`` short rate."""
    _require_ordering(t, s, u)
    ratio = zcb_price(t, x, u, p) / zcb_price(t, x, s, p)
    return ratio * math.exp(forward_bond_convexity(t, s, u, p))


def fx_bond_covariance_factor(t: float, s: float, end: float, model: MarketModel) -> float:
    """Multiplicative covariance correction for FX-converted forward bonds.

    ``exp[ int_t^s sigma (n(v,s) - n(v,end)) (fx_vol rho13 - sigma_f n_f(v,s) rho12) dv ]``,
    capturing the joint movement of the domestic forward bond with the
    exchange rate and the foreign discount factor.  Equals 1 at ``t = s`` and
    whenever ``rho12 = rho13 = 0``.
    """
    _require_ordering(t, s, end)
    p, pf = model.domestic, model.foreign
    tau = s - t
    n_s_end = kernels.ou_weight(p.b, end - s)
    exponent = -p.sigma * n_s_end * (
        model.fx_vol * model.corr.rho13 * kernels.int_exp(p.b, tau)
        - pf.sigma * model.corr.rho12 * kernels.int_exp_n(p.b, pf.b, tau)
    )
    return math.exp(exponent)


def fx_spread_factor(t: float, u: float, spreads: SpreadCurves) -> float:
    """Funding-differential growth factor ``exp(int_t^u (alpha_d - alpha_f))``."""
    _require_ordering(t, u)
    return math.exp(spreads.lambda_q_integral(t, u))


def collateral_discount(t: float, u: float, spreads: SpreadCurves) -> float:
    """Effective-spread discount ``exp(-int_t^u alpha_beta)`` over the benchmark rate."""
    _require_ordering(t, u)
    return math.exp(-spreads.alpha_beta_integral(t, u))
