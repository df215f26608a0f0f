"""Futures prices, volatility loadings, adjustments and state recovery."""

import math

import numpy as np
import pytest

import oracles
from conftest import make_model
from xccy import (
    AccrualPeriod,
    DomainError,
    SingularityError,
    StateError,
    aonia_futures,
    currency_futures,
    currency_futures_convexity,
    invert_market_vars,
    sofr_futures,
    theta_adjustments,
)
from xccy.simulation import SimConfig, simulate_paths


@pytest.fixture(scope="module")
def model():
    return make_model()


@pytest.fixture(scope="module")
def tenor_paths(model):
    cfg = SimConfig(n_paths=50_000, seed=404)
    grid = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    return simulate_paths(cfg, grid, model)


PERIOD = AccrualPeriod(0.5, 1.0)


class TestSettlement:
    def test_aonia_settles_on_realized_compound(self, model, tenor_paths):
        paths = tenor_paths
        acc = paths.compounding(paths.index_of(0.5), paths.index_of(1.0), "domestic")
        quote = aonia_futures(1.0, paths.r_d[:, -1], PERIOD, model, realized=acc)
        want = (acc - 1.0) / PERIOD.delta
        np.testing.assert_allclose(quote.value, want, rtol=1e-14)

    def test_sofr_settles_on_realized_compound(self, model, tenor_paths):
        paths = tenor_paths
        acc = paths.compounding(paths.index_of(0.5), paths.index_of(1.0), "foreign")
        quote = sofr_futures(1.0, paths.r_f[:, -1], PERIOD, model, realized=acc)
        np.testing.assert_allclose(quote.value, (acc - 1.0) / 0.5, rtol=1e-14)

    def test_currency_settles_on_spot(self, model, tenor_paths):
        q = tenor_paths.q[:, -1]
        quote = currency_futures(1.0, tenor_paths.r_d[:, -1], tenor_paths.r_f[:, -1], q, 1.0, model)
        np.testing.assert_allclose(quote.value, q, rtol=1e-14)

    def test_missing_accumulator_raises(self, model):
        with pytest.raises(StateError):
            aonia_futures(0.75, 0.02, PERIOD, model)

    def test_realized_compound_wrapper_accepted(self, model):
        from xccy import RealizedCompound

        plain = aonia_futures(0.75, 0.02, PERIOD, model, realized=1.01)
        wrapped = aonia_futures(0.75, 0.02, PERIOD, model, realized=RealizedCompound(1.01))
        assert float(plain.value) == float(wrapped.value)
        with pytest.raises(DomainError):
            RealizedCompound(-0.5)


class TestDegenerate:
    def test_zero_vol_aonia_deterministic_compounding(self):
        model = make_model(sigma=0.0)
        quote = aonia_futures(0.0, 0.02, PERIOD, model)
        # 1 + delta F = exp(mean of int_U^T r) along the deterministic ODE path.
        from scipy.integrate import quad

        def r_det(t):
            b, a = 5.0, 0.15
            return 0.02 * math.exp(-b * t) + a / b * (1 - math.exp(-b * t))

        want = (math.exp(quad(r_det, 0.5, 1.0, epsabs=1e-13)[0]) - 1.0) / 0.5
        assert quote.value == pytest.approx(want, rel=1e-10)

    def test_zero_vols_currency_forward(self):
        model = make_model(sigma=0.0, sigma_hat=0.0, fx_vol=0.0, alpha_d=0.002, alpha_f=0.0)
        quote = currency_futures(0.0, 0.02, 0.02, 1.5, 2.0, model)
        from scipy.integrate import quad

        def r_det(t, a):
            return 0.02 * math.exp(-5 * t) + a / 5.0 * (1 - math.exp(-5 * t))

        growth = quad(lambda t: r_det(t, 0.15) - r_det(t, 0.05), 0.0, 2.0, epsabs=1e-13)[0]
        want = 1.5 * math.exp(growth + 0.002 * 2.0)
        assert quote.value == pytest.approx(want, rel=1e-10)


class TestMonteCarloOracles:
    def test_aonia_price_is_expected_compounding(self, model, tenor_paths):
        paths = tenor_paths
        samples = paths.compounding(paths.index_of(0.5), paths.index_of(1.0), "domestic")
        mc, se = samples.mean(), samples.std(ddof=1) / math.sqrt(paths.n_paths)
        quote = aonia_futures(0.0, model.r_d0, PERIOD, model)
        assert abs(1.0 + 0.5 * quote.value - mc) < 3.0 * se

    def test_spot_period_aonia_vs_euler(self, model):
        # (U, T) = (0, 0.5): independent Euler oracle for E[exp(int r_d)].
        res = oracles.euler_paths(model, 0.5, 800, 120_000, seed=7)
        samples = np.exp(res["int_r_d"])
        mc, se = samples.mean(), samples.std(ddof=1) / math.sqrt(len(samples))
        quote = aonia_futures(0.0, model.r_d0, AccrualPeriod(0.0, 0.5), model)
        assert abs(1.0 + 0.5 * quote.value - mc) < 3.0 * se

    def test_sofr_price_under_foreign_measure(self, model):
        # SOFR futures is a foreign-measure expectation; simulate under it.
        res = oracles.euler_paths(model, 1.0, 1000, 120_000, seed=8, measure="foreign")
        half = oracles.euler_paths(model, 0.5, 500, 120_000, seed=8, measure="foreign")
        samples = np.exp(res["int_r_f"] - half["int_r_f"])
        mc, se = samples.mean(), samples.std(ddof=1) / math.sqrt(len(samples))
        quote = sofr_futures(0.0, model.r_f0, PERIOD, model)
        assert abs(1.0 + 0.5 * quote.value - mc) < 3.0 * se

    def test_currency_price_is_expected_spot(self, model):
        cfg = SimConfig(n_paths=100_000, seed=11)
        paths = simulate_paths(cfg, np.array([0.0, 3.0]), model)
        samples = paths.q[:, -1]
        mc, se = samples.mean(), samples.std(ddof=1) / math.sqrt(paths.n_paths)
        quote = currency_futures(0.0, model.r_d0, model.r_f0, model.q0, 3.0, model)
        assert abs(quote.value - mc) < 3.0 * se


class TestSpliceContinuity:
    def test_rate_futures_agree_at_window_start(self, model, tenor_paths):
        paths = tenor_paths
        k = paths.index_of(0.5)
        pre = aonia_futures(0.5, paths.r_d[:, k], PERIOD, model)
        # Force the pre-window branch by nudging the evaluation time.
        eps = 1e-9
        pre_quote = aonia_futures(0.5 - eps, paths.r_d[:, k], PERIOD, model)
        in_quote = aonia_futures(0.5, paths.r_d[:, k], PERIOD, model, realized=1.0)
        np.testing.assert_allclose(pre_quote.value, in_quote.value, rtol=1e-6)
        np.testing.assert_allclose(pre.value, in_quote.value, rtol=1e-12)

    def test_theta_splice_at_window_start(self, model):
        pre = theta_adjustments(0.5, PERIOD, model, realized_d=1.0, realized_f=1.0)
        lim = theta_adjustments(0.5 - 1e-10, PERIOD, model)
        for a, b in zip(pre, lim):
            assert a == pytest.approx(b, abs=1e-9)

    def test_pre_window_formula_at_window_start_exact(self, model):
        # The pre-window exponent evaluated exactly at the window start (its
        # inner integral empty) must equal the in-period exponent with unit
        # compounding; compare via the independent quadrature form.
        th_d, th_f, _ = theta_adjustments(0.5, PERIOD, model, realized_d=1.0, realized_f=1.0)
        assert th_d == pytest.approx(oracles.theta_pre_quad(0.5, 0.5, 1.0, 0.15, 5.0, 0.01), abs=1e-12)
        assert th_f == pytest.approx(oracles.theta_pre_quad(0.5, 0.5, 1.0, 0.05, 5.0, 0.01), abs=1e-12)


class TestThetaAdjustments:
    def test_zero_without_drift_and_vol(self):
        model = make_model(a=0.0, a_hat=0.0, sigma=0.0, sigma_hat=0.0, rho23=0.0, rho13=0.0)
        th_d, th_f, _ = theta_adjustments(0.0, PERIOD, model)
        assert th_d == 0.0 and th_f == 0.0

    def test_pre_window_vs_quadrature(self, model):
        th_d, th_f, th_q = theta_adjustments(0.0, PERIOD, model)
        assert th_d == pytest.approx(oracles.theta_pre_quad(0.0, 0.5, 1.0, 0.15, 5.0, 0.01), abs=1e-12)
        assert th_f == pytest.approx(oracles.theta_pre_quad(0.0, 0.5, 1.0, 0.05, 5.0, 0.01), abs=1e-12)

    def test_currency_convexity_vs_quadrature(self, model):
        got = currency_futures_convexity(0.0, 3.0, model)
        assert got == pytest.approx(oracles.currency_convexity_quad(0.0, 3.0, model), abs=1e-12)

    def test_in_window_requires_realized(self, model):
        with pytest.raises(StateError):
            theta_adjustments(0.75, PERIOD, model)


class TestInversion:
    def test_zeta_identity(self, model):
        from xccy.kernels import ou_weight

        for t in (0.0, 0.2, 0.49):
            n_window = math.exp(-5.0 * (0.5 - t)) * ou_weight(5.0, 0.5)
            zeta = ou_weight(5.0, 1.0 - t) / n_window
            zeta_tilde = ou_weight(5.0, 0.5 - t) / n_window
            assert zeta - zeta_tilde == pytest.approx(1.0, rel=1e-12)

    def test_round_trip_randomized(self, model):
        rng = np.random.default_rng(2718)
        dates = (0.25, 0.5, 1.0)
        for _ in range(1000):
            t = rng.uniform(0.0, 0.499)
            r_d = rng.normal(0.02, 0.015)
            r_f = rng.normal(0.02, 0.015)
            q = rng.lognormal(0.4, 0.15)
            fd = aonia_futures(t, r_d, PERIOD, model)
            ff = sofr_futures(t, r_f, PERIOD, model)
            fq = currency_futures(t, r_d, r_f, q, 1.0, model)
            got = invert_market_vars(fd, ff, fq, t, dates, model)
            assert got[0] == pytest.approx(r_d, rel=1e-10, abs=1e-12)
            assert got[1] == pytest.approx(r_f, rel=1e-10, abs=1e-12)
            assert got[2] == pytest.approx(q, rel=1e-10)

    def test_round_trip_in_window(self, model, tenor_paths):
        paths = tenor_paths
        t = 0.75
        k = paths.index_of(t)
        i_u = paths.index_of(0.5)
        acc_d = paths.compounding(i_u, k, "domestic")
        acc_f = paths.compounding(i_u, k, "foreign")
        r_d, r_f, q = paths.r_d[:, k], paths.r_f[:, k], paths.q[:, k]
        fd = aonia_futures(t, r_d, PERIOD, model, realized=acc_d)
        ff = sofr_futures(t, r_f, PERIOD, model, realized=acc_f)
        fq = currency_futures(t, r_d, r_f, q, 1.0, model)
        got = invert_market_vars(
            fd, ff, fq, t, (0.25, 0.5, 1.0), model, realized_d=acc_d, realized_f=acc_f
        )
        np.testing.assert_allclose(got[0], r_d, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(got[1], r_f, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(got[2], q, rtol=1e-10)

    def test_singular_at_settlement(self, model):
        fd = aonia_futures(0.0, 0.02, PERIOD, model)
        ff = sofr_futures(0.0, 0.02, PERIOD, model)
        fq = currency_futures(0.0, 0.02, 0.02, 1.5, 1.0, model)
        with pytest.raises(SingularityError):
            invert_market_vars(fd, ff, fq, 1.0, (0.25, 0.5, 1.0), model)


class TestMartingaleProperty:
    def test_futures_increments_drift_free(self, model):
        """Sample means of futures increments under the domestic measure are
        within 3 standard errors of zero over a fixed horizon."""
        cfg = SimConfig(n_paths=100_000, seed=31415)
        grid = np.linspace(0.0, 0.5, 26)
        paths = simulate_paths(cfg, grid, model)
        period = AccrualPeriod(0.5, 1.0)

        fd_vals, ff_vals, fq_vals = [], [], []
        for k, t in enumerate(grid):
            fd_vals.append(aonia_futures(float(t), paths.r_d[:, k], period, model).value)
            ff_vals.append(sofr_futures(float(t), paths.r_f[:, k], period, model).value)
            fq_vals.append(
                currency_futures(
                    float(t), paths.r_d[:, k], paths.r_f[:, k], paths.q[:, k], 1.0, model
                ).value
            )

        # AONIA and currency futures: plain increments over the horizon.
        for vals in (fd_vals, fq_vals):
            inc = vals[-1] - vals[0]
            se = inc.std(ddof=1) / math.sqrt(len(inc))
            assert abs(inc.mean()) < 3.0 * se

        # The domestically-valued SOFR futures gains process: sum of
        # q_{t+dt} * dF_f increments (spot-weighted settlement flows).
        gains = np.zeros(paths.n_paths)
        for k in range(len(grid) - 1):
            gains += paths.q[:, k + 1] * (ff_vals[k + 1] - ff_vals[k])
        se = gains.std(ddof=1) / math.sqrt(len(gains))
        assert abs(gains.mean()) < 3.0 * se
