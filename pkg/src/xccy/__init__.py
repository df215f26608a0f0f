"""Cross-currency basis swap pricing and futures-hedging engine.

Closed-form prices for collateralized constant-notional cross-currency basis
swaps on backward-looking compound rates under a two-factor Vasicek model
with a lognormal exchange rate, the replicating futures strategies, an
exact-transition Monte Carlo engine, hedging backtests and swaption pricing.
"""

from .errors import (
    ConfigError,
    DomainError,
    NumericsError,
    SingularityError,
    StateError,
    XccyError,
)
from .futures import (
    AccrualPeriod,
    FuturesQuote,
    RealizedCompound,
    aonia_futures,
    currency_futures,
    currency_futures_convexity,
    invert_market_vars,
    sofr_futures,
    theta_adjustments,
)
from .hedging import (
    HedgePosition,
    PsiVector,
    hedge_ccbs,
    hedge_closed_form,
    hedge_component_pipeline,
    phi_from_psi,
    psi_interest,
    psi_principal,
)
from .model import (
    CorrelationSet,
    MarketModel,
    PiecewiseFlatCurve,
    SpreadCurves,
    VasicekParams,
    affine_coeffs,
    collateral_discount,
    forward_bond_convexity,
    forward_bond_price,
    fx_bond_covariance_factor,
    fx_spread_factor,
    zcb_price,
)
from .pricing import (
    CcbsSpec,
    MarketState,
    PriceBreakdown,
    SpreadQuote,
    fair_spread,
    price_ccbs,
    price_interest_leg,
    price_principal_exchange,
    swaption_payoff,
)
from .simulation import (
    PathGrid,
    SimConfig,
    SimResult,
    exact_step,
    mc_ccbs_price,
    mc_price,
    mc_swaption,
    simulate_paths,
)
from .backtest import (
    BacktestResult,
    PnLProfile,
    frequency_study,
    hedge_backtest,
    pnl_quantiles,
)

__version__ = "0.1.0"
