"""Command-line front end.

Subcommands: ``price``, ``spread``, ``swaption``, ``hedgesim``,
``sensitivity``.  Each reads a JSON config (or the built-in defaults),
applies flag overrides, and writes CSV/JSON outputs (and figures for the
report-style commands) into the output directory.  Numbers in CSV files are
serialized with 17 significant digits; identical config and seed produce
byte-identical files.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .backtest import FREQUENCY_INTERVALS, hedge_backtest
from .config import RunConfig, load_config
from .errors import ConfigError, DomainError, NumericsError, SingularityError, StateError
from .model import MarketModel, VasicekParams
from .pricing import MarketState, fair_spread, price_ccbs
from .simulation import mc_swaption

SWEEP_PARAMS = ("delta_alpha", "mean_reversion", "fx_drift")


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([c if isinstance(c, str) else _fmt(c) for c in row])


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _out_dir(cfg: RunConfig, override: str | None) -> Path:
    directory = Path(override) if override else Path(cfg.output.directory)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _initial_state(cfg: RunConfig) -> MarketState:
    m = cfg.model
    q_start = cfg.contract.q_at_inception
    if cfg.contract.inception == 0.0 and q_start is None:
        q_start = m.q0
    return MarketState(r_d=m.r_d0, r_f=m.r_f0, q=m.q0, q_start=q_start)


def cmd_price(cfg: RunConfig, out_dir: Path) -> int:
    spec, model = cfg.contract, cfg.model
    breakdown = price_ccbs(0.0, _initial_state(cfg), spec, model)
    rows = []
    cumulative = 0.0
    n = len(breakdown.periods)
    for i, j in enumerate(breakdown.periods):
        xf, xd = float(breakdown.x_f[i]), float(breakdown.x_d[i])
        cumulative += xf - xd
        principal = float(breakdown.principal) if i == n - 1 else 0.0
        rows.append([j, xf, xd, cumulative, principal, cumulative + principal])
    if "csv" in cfg.output.formats:
        _write_csv(
            out_dir / "price.csv",
            ["period_index", "X_f_beta", "X_d_beta", "cumulative", "principal", "total"],
            rows,
        )
    if "json" in cfg.output.formats:
        _write_json(
            out_dir / "price.json",
            {
                "per_period": [
                    {"period_index": int(r[0]), "X_f_beta": r[1], "X_d_beta": r[2]}
                    for r in rows
                ],
                "interest_total": float(breakdown.interest_total),
                "principal": float(breakdown.principal),
                "total": float(breakdown.total),
                "kappa": spec.kappa,
            },
        )
    print(f"total {float(breakdown.total):,.2f} AUD (interest {float(breakdown.interest_total):,.2f}, "
          f"principal {float(breakdown.principal):,.2f})")
    return 0


def cmd_spread(cfg: RunConfig, out_dir: Path) -> int:
    quote = fair_spread(0.0, _initial_state(cfg), cfg.contract, cfg.model)
    payload = {
        "value": float(quote.value),
        "value_bps": float(quote.value_bps),
        "components": {
            "I_f": float(quote.i_f),
            "I_d": float(quote.i_d),
            "I_p": float(quote.i_p),
            "K_d": float(quote.k_d),
        },
    }
    _write_json(out_dir / "spread.json", payload)
    print(f"fair basis spread {payload['value_bps']:.4f} bps")
    return 0


def cmd_swaption(cfg: RunConfig, out_dir: Path, strike: float | None, side: str) -> int:
    spec, model = cfg.contract, cfg.model
    if strike is None:
        strike = float(fair_spread(0.0, _initial_state(cfg), spec, model).value)
    if side == "both":
        res = mc_swaption(spec, strike, "both", cfg.simulation, model)
        payload = {
            "strike": strike,
            "payer": {"estimate": res.payer.estimate, "stderr": res.payer.stderr},
            "receiver": {"estimate": res.receiver.estimate, "stderr": res.receiver.stderr},
            "forward_value": res.forward_value,
            "parity_residual": res.parity_mean - res.forward_value,
            "parity_stderr": res.parity_stderr,
            "n_paths": res.payer.n_paths,
        }
        print(
            f"payer {res.payer.estimate:,.0f} +/- {res.payer.stderr:,.0f}; "
            f"receiver {res.receiver.estimate:,.0f} +/- {res.receiver.stderr:,.0f}"
        )
    else:
        res = mc_swaption(spec, strike, side, cfg.simulation, model)
        payload = {
            "strike": strike,
            side: {"estimate": res.estimate, "stderr": res.stderr},
            "n_paths": res.n_paths,
        }
        print(f"{side} {res.estimate:,.0f} +/- {res.stderr:,.0f}")
    _write_json(out_dir / "swaption.json", payload)
    return 0


def cmd_hedgesim(cfg: RunConfig, out_dir: Path, frequency: str, unhedged: bool) -> int:
    spec, model = cfg.contract, cfg.model
    if unhedged:
        result = hedge_backtest(spec, model, "grid", cfg.simulation, unhedged=True)
        tag = "unhedged"
    elif frequency == "grid":
        result = hedge_backtest(spec, model, "grid", cfg.simulation)
        tag = "grid"
    else:
        if frequency not in FREQUENCY_INTERVALS:
            raise ConfigError(f"unknown frequency {frequency!r}")
        result = hedge_backtest(spec, model, FREQUENCY_INTERVALS[frequency], cfg.simulation)
        tag = frequency
    profile = result.profile
    rows = [
        [t, q25, q50, q75, q75 - q25]
        for t, q25, q50, q75 in zip(profile.times, profile.q25, profile.q50, profile.q75)
    ]
    _write_csv(out_dir / f"hedgesim_{tag}.csv", ["time", "q25", "q50", "q75", "iqr"], rows)
    abs_err = np.abs(result.terminal_errors)
    summary = {
        "frequency": tag,
        "hedged": result.hedged,
        "n_paths": int(len(result.terminal_errors)),
        "terminal_median_abs_error": float(np.median(abs_err)),
        "terminal_p90_abs_error": float(np.quantile(abs_err, 0.9, method="linear")),
        "terminal_iqr": result.terminal_iqr,
    }
    _write_json(out_dir / f"hedgesim_{tag}_summary.json", summary)
    if cfg.output.figures:
        from .plotting import save_pnl_figure

        label = "unhedged position" if unhedged else f"hedged ({tag} rebalancing)"
        save_pnl_figure(result, out_dir / f"hedgesim_{tag}.png", f"P&L paths, {label}")
    print(
        f"{tag}: terminal median |error| {summary['terminal_median_abs_error']:,.1f} AUD, "
        f"IQR {summary['terminal_iqr']:,.1f} AUD"
    )
    return 0


def _sweep_model(model: MarketModel, param: str, value: float) -> MarketModel:
    """Model for one sweep point.

    ``delta_alpha`` shifts the domestic market funding spread;
    ``mean_reversion`` sets both reversion speeds holding the long-run mean
    levels fixed; ``fx_drift`` retargets the long-run exchange-rate drift by
    adjusting the foreign drift level (reversion speeds unchanged).
    """
    if param == "delta_alpha":
        spreads = replace(model.spreads, alpha_d=value, alpha_f=0.0)
        return replace(model, spreads=spreads)
    if param == "mean_reversion":
        if value <= 0.0:
            raise ConfigError("mean_reversion sweep needs positive speeds")
        theta_d = model.domestic.mean_level
        theta_f = model.foreign.mean_level
        return replace(
            model,
            domestic=VasicekParams(a=theta_d * value, b=value, sigma=model.domestic.sigma),
            foreign=VasicekParams(a=theta_f * value, b=value, sigma=model.foreign.sigma),
        )
    if param == "fx_drift":
        delta_alpha = model.spreads.lambda_q(0.0)
        theta_f = model.domestic.mean_level - (value - delta_alpha)
        b_f = model.foreign.b
        return replace(
            model, foreign=VasicekParams(a=theta_f * b_f, b=b_f, sigma=model.foreign.sigma)
        )
    raise ConfigError(f"unknown sweep parameter {param!r}; choose from {SWEEP_PARAMS}")


def cmd_sensitivity(cfg: RunConfig, out_dir: Path, sweep: str) -> int:
    try:
        param, _, values_str = sweep.partition("=")
        values = [float(v) for v in values_str.split(",") if v != ""]
    except ValueError as exc:
        raise ConfigError(f"cannot parse sweep spec {sweep!r}") from exc
    if not values:
        raise ConfigError("sweep needs at least one value, e.g. delta_alpha=-0.005,0,0.005")
    spec = cfg.contract
    rows = []
    spreads_bps = []
    for value in values:
        model = _sweep_model(cfg.model, param, value)
        state = MarketState(
            r_d=model.r_d0, r_f=model.r_f0, q=model.q0,
            q_start=spec.q_at_inception if spec.q_at_inception is not None else model.q0,
        )
        breakdown = price_ccbs(0.0, state, spec, model)
        quote = fair_spread(0.0, state, spec, model)
        spreads_bps.append(float(quote.value_bps))
        rows.append(
            [
                param,
                value,
                float(breakdown.interest_total),
                float(breakdown.principal),
                float(breakdown.total),
                float(quote.value_bps),
            ]
        )
    _write_csv(
        out_dir / f"sensitivity_{param}.csv",
        ["param", "value", "X_f", "X_p", "total", "spread_bps"],
        rows,
    )
    if cfg.output.figures:
        from .plotting import save_sensitivity_figure

        save_sensitivity_figure(param, values, spreads_bps, out_dir / f"sensitivity_{param}.png")
    for row in rows:
        print(f"{param}={row[1]:+g}: total {row[4]:,.0f} AUD, spread {row[5]:.2f} bps")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xccy",
        description="Cross-currency basis swap pricing, hedging and simulation engine",
    )
    parser.add_argument("--config", help="JSON config file (defaults used when omitted)")
    parser.add_argument("--seed", type=int, help="override the simulation seed")
    parser.add_argument("--paths", type=int, help="override the Monte Carlo path count")
    parser.add_argument("--workers", type=int, help="override the worker thread count")
    parser.add_argument("--out", help="override the output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("price", help="closed-form swap price breakdown")
    sub.add_parser("spread", help="fair basis spread")

    p_swn = sub.add_parser("swaption", help="Monte Carlo swaption pricing")
    p_swn.add_argument("--strike", type=float, help="strike spread, annualized decimal "
                       "(defaults to the fair forward spread)")
    p_swn.add_argument("--side", choices=("payer", "receiver", "both"), default="both")

    p_sim = sub.add_parser("hedgesim", help="hedging backtest with P&L quantiles")
    p_sim.add_argument(
        "--frequency",
        choices=tuple(FREQUENCY_INTERVALS) + ("grid",),
        default="grid",
        help="rebalancing frequency ('grid' rebalances at every simulation step)",
    )
    p_sim.add_argument("--unhedged", action="store_true", help="simulate the naked position")

    p_sens = sub.add_parser("sensitivity", help="parameter sweep of prices and fair spreads")
    p_sens.add_argument(
        "--sweep",
        required=True,
        help="PARAM=v1,v2,... with PARAM one of %s" % (SWEEP_PARAMS,),
    )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        overrides = {}
        if args.seed is not None:
            overrides["simulation.seed"] = args.seed
        if args.paths is not None:
            overrides["simulation.n_paths"] = args.paths
        if args.workers is not None:
            overrides["simulation.workers"] = args.workers
        cfg = load_config(args.config, overrides)
        out_dir = _out_dir(cfg, args.out)
        if args.command == "price":
            return cmd_price(cfg, out_dir)
        if args.command == "spread":
            return cmd_spread(cfg, out_dir)
        if args.command == "swaption":
            return cmd_swaption(cfg, out_dir, args.strike, args.side)
        if args.command == "hedgesim":
            return cmd_hedgesim(cfg, out_dir, args.frequency, args.unhedged)
        if args.command == "sensitivity":
            return cmd_sensitivity(cfg, out_dir, args.sweep)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, DomainError, StateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericsError, SingularityError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
