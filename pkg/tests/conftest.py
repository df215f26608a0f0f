import numpy as np
import pytest

from xccy import (
    CcbsSpec,
    CorrelationSet,
    MarketModel,
    MarketState,
    SpreadCurves,
    VasicekParams,
)


def make_model(
    a=0.15,
    a_hat=0.05,
    b=5.0,
    b_hat=5.0,
    sigma=0.01,
    sigma_hat=0.01,
    fx_vol=0.10,
    rho12=0.3,
    rho13=0.1,
    rho23=0.1,
    alpha_h=0.02,
    alpha_c=0.02,
    alpha_d=0.0,
    alpha_f=0.0,
    beta=1.0,
    r_d0=0.02,
    r_f0=0.02,
    q0=1.5,
) -> MarketModel:
    return MarketModel(
        domestic=VasicekParams(a=a, b=b, sigma=sigma),
        foreign=VasicekParams(a=a_hat, b=b_hat, sigma=sigma_hat),
        corr=CorrelationSet(rho12=rho12, rho13=rho13, rho23=rho23),
        spreads=SpreadCurves(
            alpha_h=alpha_h, alpha_c=alpha_c, alpha_d=alpha_d, alpha_f=alpha_f, beta=beta
        ),
        fx_vol=fx_vol,
        r_d0=r_d0,
        r_f0=r_f0,
        q0=q0,
    )


@pytest.fixture(scope="session")
def model() -> MarketModel:
    """The stylized AUD/USD parameter set used throughout the studies."""
    return make_model()


@pytest.fixture(scope="session")
def swap_spec() -> CcbsSpec:
    """3-year semiannual swap, 10mm foreign notional, zero spread."""
    return CcbsSpec(
        tenor=(0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0),
        kappa=0.0,
        notional_f=1.0e7,
        q_at_inception=1.5,
    )


@pytest.fixture(scope="session")
def forward_spec() -> CcbsSpec:
    """The same swap deferred by one year (swaption underlying)."""
    return CcbsSpec(
        tenor=(1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0),
        kappa=0.0,
        notional_f=1.0e7,
    )


@pytest.fixture(scope="session")
def state0(model) -> MarketState:
    return MarketState(r_d=model.r_d0, r_f=model.r_f0, q=model.q0, q_start=model.q0)


def random_market_state(rng: np.random.Generator, regime: int) -> MarketState:
    """A fuzzed market state; regime 0 = before inception, 1 = before the
    accrual window, 2 = inside the accrual window."""
    return MarketState(
        r_d=rng.normal(0.02, 0.012),
        r_f=rng.normal(0.02, 0.012),
        q=rng.lognormal(0.4, 0.12),
        q_start=rng.lognormal(0.4, 0.12) if regime > 0 else None,
        acc_d=float(np.exp(rng.normal(0.008, 0.004))) if regime == 2 else None,
        acc_f=float(np.exp(rng.normal(0.008, 0.004))) if regime == 2 else None,
    )
