"""Backtest machinery: quantiles, wealth recursion, frequency studies."""

import numpy as np
import pytest

from conftest import make_model
from xccy import CcbsSpec, ConfigError, SimConfig, hedge_backtest, pnl_quantiles
from xccy.backtest import backtest_grid, frequency_study
from xccy.errors import DomainError

MODEL = make_model()
SPEC = CcbsSpec(tenor=(0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0), notional_f=1.0e7, q_at_inception=1.5)


class TestQuantiles:
    def test_hand_computed_linear_interpolation(self):
        prof = pnl_quantiles(np.array([1.0, 2.0, 3.0, 4.0]))
        assert prof.q25[0] == pytest.approx(1.75)
        assert prof.q50[0] == pytest.approx(2.5)
        assert prof.q75[0] == pytest.approx(3.25)

    def test_constant_samples(self):
        prof = pnl_quantiles(np.full((7, 3), 2.5))
        assert np.all(prof.q25 == 2.5) and np.all(prof.q75 == 2.5)

    def test_symmetric_samples_median_is_mean(self):
        rng = np.random.default_rng(0)
        x = rng.normal(0.0, 1.0, 4001)
        x = np.concatenate([x, -x])
        prof = pnl_quantiles(x)
        assert prof.q50[0] == pytest.approx(0.0, abs=1e-12)
        assert prof.q25[0] == pytest.approx(-prof.q75[0], abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            pnl_quantiles(np.array([]))

    def test_ordering_invariant(self):
        rng = np.random.default_rng(1)
        prof = pnl_quantiles(rng.normal(size=(50, 8)))
        assert np.all(prof.q25 <= prof.q50) and np.all(prof.q50 <= prof.q75)


class TestGrid:
    def test_contains_tenor_and_rebalance_dates(self):
        grid = backtest_grid(SPEC, 52, intervals=[1.0 / 12.0])
        for t in SPEC.tenor:
            assert np.min(np.abs(grid - t)) < 1e-12
        for k in range(37):
            assert np.min(np.abs(grid - k / 12.0)) < 1e-9

    def test_rebalance_finer_than_grid_rejected(self):
        cfg = SimConfig(n_paths=10, seed=1, steps_per_year=12)
        with pytest.raises(ConfigError):
            # Weekly rebalancing on a monthly grid without augmentation.
            from xccy.simulation import simulate_paths

            grid = np.linspace(0.0, 3.0, 37)
            paths = simulate_paths(cfg, grid, MODEL)
            hedge_backtest(SPEC, MODEL, 1.0 / 52.0, cfg, paths=paths)


@pytest.fixture(scope="module")
def daily_result():
    cfg = SimConfig(n_paths=60, seed=11, steps_per_year=250)
    return hedge_backtest(SPEC, MODEL, "grid", cfg)


class TestHedgedBacktest:
    def test_tracking_error_small_on_daily_grid(self, daily_result):
        frac = np.mean(np.abs(daily_result.terminal_errors) < 0.005 * 763_169)
        assert frac >= 0.9

    def test_pnl_starts_at_zero(self, daily_result):
        assert np.allclose(daily_result.sample_pnl[:, 0], 0.0, atol=1e-9)

    def test_profile_shapes(self, daily_result):
        assert daily_result.profile.q25.shape == daily_result.times.shape
        assert daily_result.sample_pnl.shape[0] == min(30, 60)


@pytest.fixture(scope="module")
def study():
    cfg = SimConfig(n_paths=1_500, seed=22, steps_per_year=52)
    return frequency_study(SPEC, MODEL, cfg, include_unhedged=True)


class TestFrequencyStudy:
    def test_median_error_monotone_in_interval(self, study):
        meds = [
            study[f].median_abs_terminal_error
            for f in ("weekly", "monthly", "quarterly", "biannual")
        ]
        assert meds[0] < meds[1] < meds[2] < meds[3]

    def test_terminal_iqr_monotone_in_interval(self, study):
        iqrs = [study[f].terminal_iqr for f in ("weekly", "monthly", "quarterly", "biannual")]
        assert iqrs[0] < iqrs[1] < iqrs[2] < iqrs[3]

    def test_unhedged_risk_grows_over_time(self, study):
        u = study["unhedged"]
        i_mid = int(np.argmin(np.abs(u.times - 1.5)))
        assert u.profile.iqr[-1] > u.profile.iqr[i_mid] > 0.0

    def test_common_random_numbers(self, study):
        # All frequencies share the same path set: their P&L at time 0 agree
        # and the first rebalance leaves weekly/monthly identical until the
        # first monthly rebalance date.
        assert np.array_equal(study["weekly"].times, study["monthly"].times)


def test_unknown_frequency_rejected():
    cfg = SimConfig(n_paths=10, seed=1, steps_per_year=12)
    with pytest.raises(ConfigError):
        frequency_study(SPEC, MODEL, cfg, frequencies=("hourly",))


def test_forward_start_backtest_rejected():
    cfg = SimConfig(n_paths=10, seed=1, steps_per_year=12)
    fwd = CcbsSpec(tenor=(0.5, 1.0), notional_f=1.0)
    with pytest.raises(ConfigError):
        hedge_backtest(fwd, MODEL, "grid", cfg)
