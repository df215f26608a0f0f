"""Hedging backtests: discrete wealth recursion, tracking errors, P&L quantiles.

The hedger sells the swap at its model price and runs the replicating futures
strategy, rebalancing at a configurable interval while futures gains settle
at every grid step.  Between rebalances the positions are frozen; the wealth
update over one grid step is

    V' = V + r_beta V dt + sum_j [ phi_d dF_d + phi_f q' dF_f + phi_q dF_q ]

minus the swap's cash flows at payment dates.  Tracking error is the wealth
minus the closed-form swap value along the path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, DomainError
from .futures import aonia_futures, currency_futures, sofr_futures
from .hedging import hedge_ccbs
from .model import MarketModel
from .pricing import CcbsSpec, MarketState, price_ccbs
from .simulation import PathGrid, SimConfig, simulate_paths

FREQUENCY_INTERVALS = {
    "weekly": 1.0 / 52.0,
    "monthly": 1.0 / 12.0,
    "quarterly": 0.25,
    "biannual": 0.5,
}


@dataclass
class PnLProfile:
    """Linear-interpolation (type 7) quantile series of a P&L panel."""

    times: np.ndarray
    q25: np.ndarray
    q50: np.ndarray
    q75: np.ndarray

    @property
    def iqr(self) -> np.ndarray:
        return self.q75 - self.q25


def pnl_quantiles(samples: np.ndarray, times: Optional[np.ndarray] = None) -> PnLProfile:
    """Quantile profile of per-time samples (paths on axis 0)."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise DomainError("quantiles of an empty sample set")
    if samples.ndim == 1:
        samples = samples[:, None]
    q25, q50, q75 = np.quantile(samples, [0.25, 0.50, 0.75], axis=0, method="linear")
    if times is None:
        times = np.arange(samples.shape[1], dtype=float)
    return PnLProfile(times=np.asarray(times, dtype=float), q25=q25, q50=q50, q75=q75)


@dataclass
class BacktestResult:
    """Outcome of one hedging (or unhedged) backtest run."""

    times: np.ndarray
    profile: PnLProfile
    terminal_errors: np.ndarray
    sample_pnl: np.ndarray
    rebalance_interval: Optional[float]
    hedged: bool

    @property
    def terminal_iqr(self) -> float:
        q25, q75 = np.quantile(self.terminal_errors, [0.25, 0.75], method="linear")
        return float(q75 - q25)

    @property
    def median_abs_terminal_error(self) -> float:
        return float(np.median(np.abs(self.terminal_errors)))


def backtest_grid(
    spec: CcbsSpec,
    steps_per_year: int,
    intervals: Sequence[float] = (),
) -> np.ndarray:
    """Uniform accrual grid over the swap's life, augmented with tenor and
    rebalance dates so every backtest event lands exactly on a grid point."""
    t_end = spec.maturity
    times = set(np.round(np.linspace(0.0, t_end, int(round(t_end * steps_per_year)) + 1), 12))
    times.update(round(t, 12) for t in spec.tenor)
    times.add(0.0)
    for interval in intervals:
        n = int(np.floor(t_end / interval + 1e-9))
        times.update(round(k * interval, 12) for k in range(n + 1))
    return np.array(sorted(times))


def _swap_state(paths: PathGrid, spec: CcbsSpec, k: int) -> MarketState:
    """Market state at grid index ``k`` including regime observables."""
    t = float(paths.times[k])
    i0 = paths.index_of(spec.inception) if spec.inception <= t else None
    q_start = paths.q[:, i0] if i0 is not None else None
    acc_d = acc_f = None
    for j in range(1, spec.n_periods + 1):
        lo, hi = spec.tenor[j - 1], spec.tenor[j]
        if lo <= t < hi or (j == spec.n_periods and t == hi):
            i_lo = paths.index_of(lo)
            acc_d = paths.compounding(i_lo, k, "domestic")
            acc_f = paths.compounding(i_lo, k, "foreign")
            break
    return MarketState(
        r_d=paths.r_d[:, k],
        r_f=paths.r_f[:, k],
        q=paths.q[:, k],
        q_start=q_start,
        acc_d=acc_d,
        acc_f=acc_f,
    )


def _period_futures(paths: PathGrid, spec: CcbsSpec, model: MarketModel, k: int):
    """Current prices of every live hedge contract at grid index ``k``.

    Returns three arrays of shape (n_periods, n_paths); settled contracts
    hold their settlement price so later increments vanish.
    """
    t = float(paths.times[k])
    n = spec.n_periods
    fd = np.empty((n, paths.n_paths))
    ff = np.empty((n, paths.n_paths))
    fq = np.empty((n, paths.n_paths))
    for j in range(1, n + 1):
        period = spec.period(j)
        i_lo = paths.index_of(period.start)
        if t >= period.end:
            i_hi = paths.index_of(period.end)
            fd[j - 1] = (paths.compounding(i_lo, i_hi, "domestic") - 1.0) / period.delta
            ff[j - 1] = (paths.compounding(i_lo, i_hi, "foreign") - 1.0) / period.delta
            fq[j - 1] = paths.q[:, i_hi]
            continue
        acc_d = paths.compounding(i_lo, k, "domestic") if t >= period.start else None
        acc_f = paths.compounding(i_lo, k, "foreign") if t >= period.start else None
        fd[j - 1] = aonia_futures(t, paths.r_d[:, k], period, model, realized=acc_d).value
        ff[j - 1] = sofr_futures(t, paths.r_f[:, k], period, model, realized=acc_f).value
        fq[j - 1] = currency_futures(
            t, paths.r_d[:, k], paths.r_f[:, k], paths.q[:, k], period.end, model
        ).value
    return fd, ff, fq


def _ccbs_values(paths: PathGrid, spec: CcbsSpec, model: MarketModel, k: int) -> np.ndarray:
    t = float(paths.times[k])
    if t >= spec.maturity:
        return np.zeros(paths.n_paths)
    state = _swap_state(paths, spec, k)
    return np.asarray(price_ccbs(t, state, spec, model).total)


def _payment_amount(paths: PathGrid, spec: CcbsSpec, j: int) -> np.ndarray:
    """Realised swap cash flow at payment date ``T_j`` (long party receives)."""
    i_prev = paths.index_of(spec.tenor[j - 1])
    i_pay = paths.index_of(spec.tenor[j])
    i_start = paths.index_of(spec.inception)
    delta_j = spec.deltas[j - 1]
    growth_f = paths.compounding(i_prev, i_pay, "foreign")
    growth_d = paths.compounding(i_prev, i_pay, "domestic")
    flow = (growth_f - 1.0) * paths.q[:, i_pay] - (
        growth_d - 1.0 + spec.kappa * delta_j
    ) * paths.q[:, i_start]
    if j == spec.n_periods:
        flow = flow + paths.q[:, i_pay] - paths.q[:, i_start]
    return spec.notional_f * flow


def hedge_backtest(
    spec: CcbsSpec,
    model: MarketModel,
    rebalance_interval,
    config: SimConfig,
    paths: Optional[PathGrid] = None,
    unhedged: bool = False,
    n_sample_paths: int = 30,
) -> BacktestResult:
    """Run a discretized replication of the swap along simulated paths.

    ``rebalance_interval`` is a year fraction or ``"grid"`` (rebalance at
    every grid step).  Futures gains and funding accrue at every grid step
    with the positions most recently set.  The returned P&L is the hedged
    portfolio's tracking error (wealth minus closed-form swap value), or the
    financed mark-to-market P&L of the naked position when ``unhedged``.
    """
    if spec.inception != 0.0:
        raise ConfigError("backtest expects a spot-starting swap")
    if paths is None:
        intervals = [] if rebalance_interval == "grid" else [float(rebalance_interval)]
        grid = backtest_grid(spec, config.steps_per_year, intervals)
        paths = simulate_paths(config, grid, model)
    times = paths.times
    grid_step = float(np.min(np.diff(times)))
    if rebalance_interval == "grid":
        rebalance_times = set(np.round(times, 9))
        interval_out = None
    else:
        interval = float(rebalance_interval)
        if interval < grid_step - 1e-12:
            raise ConfigError("rebalance interval finer than the simulation grid")
        n_reb = int(np.floor(spec.maturity / interval + 1e-9))
        rebalance_times = set(round(k * interval, 9) for k in range(n_reb + 1))
        missing = rebalance_times - set(np.round(times, 9))
        if missing:
            raise ConfigError(f"rebalance times not on the grid: {sorted(missing)[:3]}")
        interval_out = interval

    n_paths, n_times = paths.q.shape
    pay_index = {paths.index_of(spec.tenor[j]): j for j in range(1, spec.n_periods + 1)}

    value0 = float(_ccbs_values(paths, spec, model, 0)[0])
    pnl = np.zeros((n_paths, n_times))
    alpha_beta = model.spreads.alpha_beta

    if unhedged:
        # Financed mark-to-market: hold the swap, reinvest cash flows, fund
        # the purchase at the effective rate.
        carried = np.zeros(n_paths)
        for k in range(n_times):
            ccbs_k = _ccbs_values(paths, spec, model, k)
            if k > 0:
                dt = float(times[k] - times[k - 1])
                rate = paths.r_d[:, k - 1] + alpha_beta(float(times[k - 1]))
                carried *= 1.0 + rate * dt
                j = pay_index.get(k)
                if j is not None:
                    carried += _payment_amount(paths, spec, j)
            pnl[:, k] = ccbs_k + carried - value0 * np.exp(
                paths.int_r_d[:, k] + alpha_beta.integral(0.0, float(times[k]))
            )
    else:
        wealth = np.full(n_paths, value0)
        fd_now, ff_now, fq_now = _period_futures(paths, spec, model, 0)
        hedge = hedge_ccbs(0.0, _swap_state(paths, spec, 0), spec, model)
        phi_d, phi_f, phi_q = hedge.phi_d, hedge.phi_f, hedge.phi_q
        pnl[:, 0] = 0.0
        for k in range(1, n_times):
            t_prev, t_k = float(times[k - 1]), float(times[k])
            dt = t_k - t_prev
            fd_new, ff_new, fq_new = _period_futures(paths, spec, model, k)
            rate = paths.r_d[:, k - 1] + alpha_beta(t_prev)
            gains = np.einsum("jp,jp->p", phi_d, fd_new - fd_now)
            gains += np.einsum("jp,jp->p", phi_f, paths.q[:, k][None, :] * (ff_new - ff_now))
            gains += np.einsum("jp,jp->p", phi_q, fq_new - fq_now)
            wealth = wealth + rate * wealth * dt + gains
            j = pay_index.get(k)
            if j is not None:
                wealth = wealth - _payment_amount(paths, spec, j)
            fd_now, ff_now, fq_now = fd_new, ff_new, fq_new
            pnl[:, k] = wealth - _ccbs_values(paths, spec, model, k)
            if round(t_k, 9) in rebalance_times and t_k < spec.maturity:
                hedge = hedge_ccbs(t_k, _swap_state(paths, spec, k), spec, model)
                phi_d, phi_f, phi_q = hedge.phi_d, hedge.phi_f, hedge.phi_q

    profile = pnl_quantiles(pnl, times)
    return BacktestResult(
        times=times,
        profile=profile,
        terminal_errors=pnl[:, -1].copy(),
        sample_pnl=pnl[: min(n_sample_paths, n_paths)].copy(),
        rebalance_interval=interval_out,
        hedged=not unhedged,
    )


def frequency_study(
    spec: CcbsSpec,
    model: MarketModel,
    config: SimConfig,
    frequencies: Sequence[str] = ("weekly", "monthly", "quarterly", "biannual"),
    include_unhedged: bool = False,
) -> dict[str, BacktestResult]:
    """Backtests across rebalancing frequencies on a common path set.

    Common random numbers: all frequencies reuse the same simulated paths on
    the union grid of their rebalance dates, so the ordering of terminal
    P&L dispersions is not confounded by sampling noise.
    """
    unknown = [f for f in frequencies if f not in FREQUENCY_INTERVALS]
    if unknown:
        raise ConfigError(f"unknown frequencies {unknown}; choose from {list(FREQUENCY_INTERVALS)}")
    intervals = [FREQUENCY_INTERVALS[f] for f in frequencies]
    grid = backtest_grid(spec, config.steps_per_year, intervals)
    paths = simulate_paths(config, grid, model)
    out = {}
    for freq in frequencies:
        out[freq] = hedge_backtest(
            spec, model, FREQUENCY_INTERVALS[freq], config, paths=paths
        )
    if include_unhedged:
        out["unhedged"] = hedge_backtest(spec, model, "grid", config, paths=paths, unhedged=True)
    return out
