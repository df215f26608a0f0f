"""Exact-transition Monte Carlo engine for the joint rate/FX model.

Transitions over arbitrary step sizes are sampled from the exact joint
Gaussian law of ``(dr_d, d int r_d, dr_f, d int r_f, d log q)``, so tenor
dates can be reached in single steps without discretization bias.  Paths are
generated in fixed-size blocks with per-block counter-based substreams
(Philox keyed by seed and block index), making results bit-identical for a
given seed regardless of the worker count; estimates are reduced in a fixed
order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, DomainError, NumericsError
from . import kernels
from .model import MarketModel
from .pricing import CcbsSpec, MarketState, price_ccbs, swaption_payoff

BLOCK_SIZE = 8192

MEASURES = ("domestic", "foreign")


def default_workers() -> int:
    env = os.environ.get("XCCY_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"XCCY_WORKERS must be an integer, got {env!r}") from exc
    return 1


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo run controls."""

    n_paths: int = 100_000
    seed: int = 20240001
    steps_per_year: int = 250
    measure: str = "domestic"
    workers: Optional[int] = None

    def __post_init__(self):
        if self.n_paths < 1:
            raise ConfigError("n_paths must be at least 1")
        if self.steps_per_year < 1:
            raise ConfigError("steps_per_year must be at least 1")
        if self.measure not in MEASURES:
            raise ConfigError(f"measure must be one of {MEASURES}")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers must be at least 1")

    @property
    def effective_workers(self) -> int:
        return self.workers if self.workers is not None else default_workers()


@dataclass(frozen=True)
class SimResult:
    """A Monte Carlo estimate with its standard error."""

    estimate: float
    stderr: float
    n_paths: int


@dataclass
class StepState:
    """Joint state arrays advanced by :func:`exact_step`."""

    r_d: np.ndarray
    r_f: np.ndarray
    int_r_d: np.ndarray
    int_r_f: np.ndarray
    log_q: np.ndarray


@dataclass
class PathGrid:
    """Simulated joint trajectories on a fixed time grid (paths x times)."""

    times: np.ndarray
    r_d: np.ndarray
    r_f: np.ndarray
    int_r_d: np.ndarray
    int_r_f: np.ndarray
    q: np.ndarray
    measure: str = "domestic"

    @property
    def n_paths(self) -> int:
        return self.r_d.shape[0]

    def index_of(self, t: float) -> int:
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > 1e-9:
            raise DomainError(f"time {t} is not on the simulation grid")
        return idx

    def compounding(self, i_from: int, i_to: int, which: str) -> np.ndarray:
        """``exp(int_{t_from}^{t_to} r)`` pathwise for the chosen rate."""
        arr = self.int_r_d if which == "domestic" else self.int_r_f
        return np.exp(arr[:, i_to] - arr[:, i_from])


class _Transition:
    """Cached exact-transition coefficients for one step size and measure."""

    def __init__(self, model: MarketModel, dt: float, measure: str):
        p, pf = model.domestic, model.foreign
        corr = model.corr
        sig, sig_f, sig_q = p.sigma, pf.sigma, model.fx_vol
        if measure == "domestic":
            drift_d = p.a
            drift_f = model.foreign_drift_domestic
            self.logq_half_sign = -1.0
        else:
            drift_d = model.domestic_drift_foreign
            drift_f = pf.a
            self.logq_half_sign = +1.0
        self.dt = dt
        self.decay_d = np.exp(-p.b * dt)
        self.decay_f = np.exp(-pf.b * dt)
        self.n_d = kernels.ou_weight(p.b, dt)
        self.n_f = kernels.ou_weight(pf.b, dt)
        self.mean_r_d = drift_d * self.n_d
        self.mean_r_f = drift_f * self.n_f
        self.mean_int_d = drift_d * kernels.int_n(p.b, dt)
        self.mean_int_f = drift_f * kernels.int_n(pf.b, dt)
        self.half_var_q = 0.5 * sig_q * sig_q * dt

        cov = np.empty((5, 5))
        cov[0, 0] = sig * sig * kernels.int_exp(2.0 * p.b, dt)
        cov[0, 1] = sig * sig * kernels.int_exp_n(p.b, p.b, dt)
        cov[1, 1] = sig * sig * kernels.int_n_sq(p.b, dt)
        cov[2, 2] = sig_f * sig_f * kernels.int_exp(2.0 * pf.b, dt)
        cov[2, 3] = sig_f * sig_f * kernels.int_exp_n(pf.b, pf.b, dt)
        cov[3, 3] = sig_f * sig_f * kernels.int_n_sq(pf.b, dt)
        c_df = corr.rho12 * sig * sig_f
        cov[0, 2] = c_df * kernels.int_exp(p.b + pf.b, dt)
        cov[0, 3] = c_df * kernels.int_exp_n(p.b, pf.b, dt)
        cov[1, 2] = c_df * kernels.int_exp_n(pf.b, p.b, dt)
        cov[1, 3] = c_df * kernels.int_n_n(p.b, pf.b, dt)
        c_dq = corr.rho13 * sig * sig_q
        cov[0, 4] = c_dq * kernels.int_exp(p.b, dt)
        cov[1, 4] = c_dq * kernels.int_n(p.b, dt)
        c_fq = corr.rho23 * sig_f * sig_q
        cov[2, 4] = c_fq * kernels.int_exp(pf.b, dt)
        cov[3, 4] = c_fq * kernels.int_n(pf.b, dt)
        cov[4, 4] = sig_q * sig_q * dt
        for i in range(5):
            for j in range(i):
                cov[i, j] = cov[j, i]

        eigvals, eigvecs = np.linalg.eigh(cov)
        if eigvals.min() < -1e-10:
            raise NumericsError(
                f"transition covariance has eigenvalue {eigvals.min():.3e} below -1e-10"
            )
        eigvals = np.clip(eigvals, 0.0, None)
        self.factor = eigvecs @ np.diag(np.sqrt(eigvals))


def exact_step(
    t: float,
    state: StepState,
    dt: float,
    gaussians: np.ndarray,
    model: MarketModel,
    measure: str = "domestic",
    _transition: Optional[_Transition] = None,
) -> StepState:
    """Advance the joint state by ``dt`` using the exact transition law.

    ``gaussians`` holds 5 iid standard normals per path (shape ``(..., 5)``);
    they are mixed through the Cholesky-type factor of the exact covariance
    of ``(shock r_d, shock int r_d, shock r_f, shock int r_f, shock log q)``.
    """
    if dt <= 0.0:
        raise DomainError("step size must be positive")
    tr = _transition if _transition is not None else _Transition(model, dt, measure)
    shocks = np.asarray(gaussians) @ tr.factor.T
    d_int_d = tr.n_d * state.r_d + tr.mean_int_d + shocks[..., 1]
    d_int_f = tr.n_f * state.r_f + tr.mean_int_f + shocks[..., 3]
    lam = model.spreads.lambda_q_integral(t, t + dt)
    d_log_q = d_int_d - d_int_f + lam + tr.logq_half_sign * tr.half_var_q + shocks[..., 4]
    return StepState(
        r_d=tr.decay_d * state.r_d + tr.mean_r_d + shocks[..., 0],
        r_f=tr.decay_f * state.r_f + tr.mean_r_f + shocks[..., 2],
        int_r_d=state.int_r_d + d_int_d,
        int_r_f=state.int_r_f + d_int_f,
        log_q=state.log_q + d_log_q,
    )


def _block_keys(seed: int, n_paths: int) -> list[tuple[int, int, int]]:
    """Fixed block decomposition: (block index, offset, size)."""
    out = []
    offset = 0
    i = 0
    while offset < n_paths:
        size = min(BLOCK_SIZE, n_paths - offset)
        out.append((i, offset, size))
        offset += size
        i += 1
    return out


def simulate_paths(config: SimConfig, grid: np.ndarray, model: MarketModel) -> PathGrid:
    """Simulate joint paths on ``grid`` (strictly increasing, starting at 0).

    Deterministic for a given seed and independent of the worker count: each
    fixed-size block of paths draws from its own Philox substream keyed by
    ``(seed, block_index)``.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid[0] != 0.0 or np.any(np.diff(grid) <= 0.0):
        raise ConfigError("grid must be 1-d, start at 0 and be strictly increasing")
    n_steps = len(grid) - 1
    transitions = {}
    for dt in np.diff(grid):
        key = round(float(dt), 12)
        if key not in transitions:
            transitions[key] = _Transition(model, float(dt), config.measure)

    n = config.n_paths
    shape = (n, len(grid))
    r_d = np.empty(shape)
    r_f = np.empty(shape)
    int_d = np.empty(shape)
    int_f = np.empty(shape)
    log_q = np.empty(shape)

    def run_block(block):
        idx, offset, size = block
        rng = np.random.Generator(
            np.random.Philox(key=np.array([config.seed, idx], dtype=np.uint64))
        )
        normals = rng.standard_normal((size, n_steps, 5))
        sl = slice(offset, offset + size)
        state = StepState(
            r_d=np.full(size, model.r_d0),
            r_f=np.full(size, model.r_f0),
            int_r_d=np.zeros(size),
            int_r_f=np.zeros(size),
            log_q=np.full(size, np.log(model.q0)),
        )
        r_d[sl, 0], r_f[sl, 0] = state.r_d, state.r_f
        int_d[sl, 0], int_f[sl, 0] = state.int_r_d, state.int_r_f
        log_q[sl, 0] = state.log_q
        for k in range(n_steps):
            dt = float(grid[k + 1] - grid[k])
            state = exact_step(
                float(grid[k]),
                state,
                dt,
                normals[:, k, :],
                model,
                config.measure,
                _transition=transitions[round(dt, 12)],
            )
            r_d[sl, k + 1], r_f[sl, k + 1] = state.r_d, state.r_f
            int_d[sl, k + 1], int_f[sl, k + 1] = state.int_r_d, state.int_r_f
            log_q[sl, k + 1] = state.log_q

    blocks = _block_keys(config.seed, n)
    workers = config.effective_workers
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_block, blocks))
    else:
        for block in blocks:
            run_block(block)

    return PathGrid(
        times=grid,
        r_d=r_d,
        r_f=r_f,
        int_r_d=int_d,
        int_r_f=int_f,
        q=np.exp(log_q),
        measure=config.measure,
    )


def _tree_sum(values: np.ndarray) -> float:
    """Pairwise tree reduction with fan-in 2 (deterministic order)."""
    vals = [float(v) for v in values]
    while len(vals) > 1:
        nxt = []
        for i in range(0, len(vals) - 1, 2):
            nxt.append(vals[i] + vals[i + 1])
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return vals[0] if vals else 0.0


def estimate_from_samples(samples: np.ndarray) -> SimResult:
    """Mean and standard error with a deterministic reduction order."""
    n = len(samples)
    blocks = [samples[o : o + s] for _, o, s in _block_keys(0, n)]
    mean = _tree_sum(np.array([np.sum(b) for b in blocks])) / n
    if n > 1:
        var = _tree_sum(np.array([np.sum((b - mean) ** 2) for b in blocks])) / (n - 1)
        stderr = float(np.sqrt(var / n))
    else:
        stderr = 0.0
    return SimResult(estimate=float(mean), stderr=stderr, n_paths=n)


def discount_factors(paths: PathGrid, model: MarketModel, idx: int) -> np.ndarray:
    """Pathwise discount factor to time 0 for a cash flow at grid index ``idx``.

    Under the domestic measure this is the effective collateralized rate
    ``r_d + alpha_beta``.  Under the foreign measure the equivalent deflator
    for domestic-currency flows converted at the terminal spot is
    ``r_f + alpha_beta - lambda_q``; callers must also convert the flow with
    the spot and rescale by the initial spot.
    """
    t = float(paths.times[idx])
    alpha = model.spreads.alpha_beta_integral(0.0, t)
    if paths.measure == "domestic":
        return np.exp(-paths.int_r_d[:, idx] - alpha)
    lam = model.spreads.lambda_q_integral(0.0, t)
    return np.exp(-paths.int_r_f[:, idx] - alpha + lam)


def present_value_samples(
    flows: list[tuple[float, Callable[[PathGrid, int], np.ndarray]]],
    paths: PathGrid,
    model: MarketModel,
) -> np.ndarray:
    """Per-path discounted total of dated cash flows (domestic currency).

    Each flow is ``(time, fn)`` with ``fn(paths, idx)`` returning the flow
    amount in domestic currency at its payment date.  Foreign-measure paths
    apply the measure-consistent deflator and spot conversion so the result
    is directly comparable with domestic-measure valuations.
    """
    total = np.zeros(paths.n_paths)
    for t, fn in flows:
        idx = paths.index_of(t)
        amount = fn(paths, idx)
        disc = discount_factors(paths, model, idx)
        if paths.measure == "foreign":
            amount = amount / paths.q[:, idx]
        total += disc * amount
    if paths.measure == "foreign":
        total *= model.q0
    return total


def mc_price(
    claim: Callable[[PathGrid, int], np.ndarray],
    maturity: float,
    config: SimConfig,
    model: MarketModel,
    grid: Optional[np.ndarray] = None,
) -> SimResult:
    """Discounted-expectation price of a single claim paid at ``maturity``."""
    if grid is None:
        grid = np.array([0.0, maturity]) if maturity > 0 else np.array([0.0])
    paths = simulate_paths(config, grid, model)
    samples = present_value_samples([(maturity, claim)], paths, model)
    return estimate_from_samples(samples)


def ccbs_flows(spec: CcbsSpec) -> list[tuple[float, Callable[[PathGrid, int], np.ndarray]]]:
    """Dated cash flows of the swap for the long (receive-foreign) party."""
    flows = []
    start_t = spec.inception

    def interest(j):
        def fn(paths: PathGrid, idx: int) -> np.ndarray:
            i_prev = paths.index_of(spec.tenor[j - 1])
            i_start = paths.index_of(start_t)
            delta_j = spec.deltas[j - 1]
            growth_f = paths.compounding(i_prev, idx, "foreign")
            growth_d = paths.compounding(i_prev, idx, "domestic")
            q_pay = paths.q[:, idx]
            q_start = paths.q[:, i_start]
            return spec.notional_f * (
                (growth_f - 1.0) * q_pay - (growth_d - 1.0 + spec.kappa * delta_j) * q_start
            )

        return fn

    for j in range(1, spec.n_periods + 1):
        flows.append((spec.tenor[j], interest(j)))

    def principal(paths: PathGrid, idx: int) -> np.ndarray:
        i_start = paths.index_of(start_t)
        return spec.notional_f * (paths.q[:, idx] - paths.q[:, i_start])

    flows.append((spec.maturity, principal))
    return flows


def ccbs_grid(spec: CcbsSpec) -> np.ndarray:
    times = sorted({0.0, *spec.tenor})
    return np.asarray(times, dtype=float)


def mc_ccbs_price(
    spec: CcbsSpec,
    config: SimConfig,
    model: MarketModel,
    paths: Optional[PathGrid] = None,
) -> dict[str, SimResult]:
    """Monte Carlo value of the swap, split into interest and principal parts."""
    if paths is None:
        paths = simulate_paths(config, ccbs_grid(spec), model)
    flows = ccbs_flows(spec)
    interest = present_value_samples(flows[:-1], paths, model)
    principal = present_value_samples(flows[-1:], paths, model)
    return {
        "interest": estimate_from_samples(interest),
        "principal": estimate_from_samples(principal),
        "total": estimate_from_samples(interest + principal),
    }


@dataclass(frozen=True)
class SwaptionMC:
    """Joint payer/receiver estimates from a common path set."""

    payer: SimResult
    receiver: SimResult
    parity_mean: float
    parity_stderr: float
    forward_value: float


def _ccbs_value_at_inception(spec: CcbsSpec, strike: float, paths: PathGrid, model: MarketModel):
    idx = paths.index_of(spec.inception)
    struck = replace(spec, kappa=strike)
    state = MarketState(
        r_d=paths.r_d[:, idx],
        r_f=paths.r_f[:, idx],
        q=paths.q[:, idx],
        q_start=paths.q[:, idx],
    )
    return price_ccbs(spec.inception, state, struck, model).total, idx


def mc_swaption(
    spec: CcbsSpec,
    strike: float,
    side: str,
    config: SimConfig,
    model: MarketModel,
) -> SimResult | SwaptionMC:
    """Price a European swaption on the forward-starting swap.

    Simulates to the swap inception, evaluates the swap there in closed form,
    applies the payoff and discounts at the effective collateralized rate.
    With ``side='both'`` the payer and receiver use the same path set and the
    parity residual against the closed-form forward swap value is reported.
    """
    if spec.inception <= 0.0:
        raise DomainError("swaption requires a forward-starting swap (inception > 0)")
    if side not in ("payer", "receiver", "both"):
        raise DomainError("side must be 'payer', 'receiver' or 'both'")
    grid = np.array([0.0, spec.inception])
    paths = simulate_paths(config, grid, model)
    values, idx = _ccbs_value_at_inception(spec, strike, paths, model)
    disc = discount_factors(paths, model, idx)
    if side in ("payer", "receiver"):
        return estimate_from_samples(disc * swaption_payoff(values, side))
    payer = estimate_from_samples(disc * swaption_payoff(values, "payer"))
    receiver = estimate_from_samples(disc * swaption_payoff(values, "receiver"))
    state0 = MarketState(r_d=model.r_d0, r_f=model.r_f0, q=model.q0)
    forward = float(price_ccbs(0.0, state0, replace(spec, kappa=strike), model).total)
    parity = estimate_from_samples(disc * values)
    return SwaptionMC(
        payer=payer,
        receiver=receiver,
        parity_mean=parity.estimate,
        parity_stderr=parity.stderr,
        forward_value=forward,
    )
