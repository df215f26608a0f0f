"""Run configuration: JSON schema, validation, defaults.

A run config is a single JSON document with four blocks (``model``,
``contract``, ``simulation``, ``output``).  Unknown keys are rejected at
every level and all domain invariants are checked before any computation.
The built-in defaults describe a 3-year semiannual AUD/USD swap on 10mm
foreign notional under a stylized parameter set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import ConfigError, DomainError
from .model import (
    CorrelationSet,
    MarketModel,
    PiecewiseFlatCurve,
    SpreadCurves,
    VasicekParams,
)
from .pricing import CcbsSpec
from .simulation import SimConfig


def default_config_dict() -> dict:
    return {
        "model": {
            "domestic": {"a": 0.15, "b": 5.0, "sigma": 0.01},
            "foreign": {"a": 0.05, "b": 5.0, "sigma": 0.01},
            "fx_vol": 0.10,
            "correlations": {"rho_df": 0.3, "rho_dq": 0.1, "rho_fq": 0.1},
            "spreads": {
                "alpha_h": 0.02,
                "alpha_c": 0.02,
                "alpha_d": 0.0,
                "alpha_f": 0.0,
                "beta": 1.0,
            },
            "r_d0": 0.02,
            "r_f0": 0.02,
            "q0": 1.5,
        },
        "contract": {
            "tenor": [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
            "kappa": 0.0,
            "notional_f": 1.0e7,
            "q_at_inception": 1.5,
        },
        "simulation": {
            "n_paths": 100_000,
            "seed": 20240001,
            "steps_per_year": 250,
            "measure": "domestic",
            "workers": None,
        },
        "output": {"directory": "out", "formats": ["csv", "json"], "figures": True},
    }


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    formats: tuple = ("csv", "json")
    figures: bool = True

    def __post_init__(self):
        object.__setattr__(self, "formats", tuple(self.formats))
        bad = [f for f in self.formats if f not in ("csv", "json")]
        if bad:
            raise ConfigError(f"unknown output formats {bad}")


@dataclass(frozen=True)
class RunConfig:
    model: MarketModel
    contract: CcbsSpec
    simulation: SimConfig
    output: OutputConfig


def _take(block: dict, context: str, known: dict) -> dict:
    """Pop known keys with defaults; reject anything left over."""
    if not isinstance(block, dict):
        raise ConfigError(f"{context} must be an object")
    block = dict(block)
    out = {}
    for key, default in known.items():
        out[key] = block.pop(key, default)
    if block:
        raise ConfigError(f"unknown keys in {context}: {sorted(block)}")
    return out


_MISSING = object()


def _require(value, context: str):
    if value is _MISSING:
        raise ConfigError(f"missing required key in {context}")
    return value


def _curve(value, context: str):
    if isinstance(value, (int, float)):
        return PiecewiseFlatCurve.flat(float(value))
    fields = _take(value, context, {"values": _MISSING, "breaks": ()})
    return PiecewiseFlatCurve(
        values=tuple(float(v) for v in _require(fields["values"], context)),
        breaks=tuple(float(b) for b in fields["breaks"]),
    )


def model_from_dict(block: dict) -> MarketModel:
    fields = _take(
        block,
        "model",
        {
            "domestic": _MISSING,
            "foreign": _MISSING,
            "fx_vol": _MISSING,
            "correlations": _MISSING,
            "spreads": {},
            "r_d0": _MISSING,
            "r_f0": _MISSING,
            "q0": _MISSING,
        },
    )

    def factor(sub, context):
        f = _take(_require(sub, context), context, {"a": _MISSING, "b": _MISSING, "sigma": _MISSING})
        return VasicekParams(
            a=float(_require(f["a"], context)),
            b=float(_require(f["b"], context)),
            sigma=float(_require(f["sigma"], context)),
        )

    corr_fields = _take(
        _require(fields["correlations"], "model.correlations"),
        "model.correlations",
        {"rho_df": _MISSING, "rho_dq": _MISSING, "rho_fq": _MISSING},
    )
    spread_fields = _take(
        fields["spreads"],
        "model.spreads",
        {"alpha_h": 0.0, "alpha_c": 0.0, "alpha_d": 0.0, "alpha_f": 0.0, "beta": 1.0},
    )
    return MarketModel(
        domestic=factor(fields["domestic"], "model.domestic"),
        foreign=factor(fields["foreign"], "model.foreign"),
        corr=CorrelationSet(
            rho12=float(_require(corr_fields["rho_df"], "model.correlations")),
            rho13=float(_require(corr_fields["rho_dq"], "model.correlations")),
            rho23=float(_require(corr_fields["rho_fq"], "model.correlations")),
        ),
        spreads=SpreadCurves(
            alpha_h=_curve(spread_fields["alpha_h"], "model.spreads.alpha_h"),
            alpha_c=_curve(spread_fields["alpha_c"], "model.spreads.alpha_c"),
            alpha_d=_curve(spread_fields["alpha_d"], "model.spreads.alpha_d"),
            alpha_f=_curve(spread_fields["alpha_f"], "model.spreads.alpha_f"),
            beta=float(spread_fields["beta"]),
        ),
        fx_vol=float(_require(fields["fx_vol"], "model")),
        r_d0=float(_require(fields["r_d0"], "model")),
        r_f0=float(_require(fields["r_f0"], "model")),
        q0=float(_require(fields["q0"], "model")),
    )


def contract_from_dict(block: dict) -> CcbsSpec:
    fields = _take(
        block,
        "contract",
        {"tenor": _MISSING, "kappa": 0.0, "notional_f": 1.0, "q_at_inception": None},
    )
    tenor = _require(fields["tenor"], "contract.tenor")
    if not isinstance(tenor, (list, tuple)) or len(tenor) < 2:
        raise ConfigError("contract.tenor must list the inception and payment dates")
    q_i = fields["q_at_inception"]
    return CcbsSpec(
        tenor=tuple(float(t) for t in tenor),
        kappa=float(fields["kappa"]),
        notional_f=float(fields["notional_f"]),
        q_at_inception=None if q_i is None else float(q_i),
    )


def simulation_from_dict(block: dict) -> SimConfig:
    fields = _take(
        block,
        "simulation",
        {
            "n_paths": 100_000,
            "seed": 20240001,
            "steps_per_year": 250,
            "measure": "domestic",
            "workers": None,
        },
    )
    workers = fields["workers"]
    return SimConfig(
        n_paths=int(fields["n_paths"]),
        seed=int(fields["seed"]),
        steps_per_year=int(fields["steps_per_year"]),
        measure=str(fields["measure"]),
        workers=None if workers is None else int(workers),
    )


def output_from_dict(block: dict) -> OutputConfig:
    fields = _take(
        block, "output", {"directory": "out", "formats": ["csv", "json"], "figures": True}
    )
    return OutputConfig(
        directory=str(fields["directory"]),
        formats=tuple(fields["formats"]),
        figures=bool(fields["figures"]),
    )


def config_from_dict(doc: dict) -> RunConfig:
    blocks = _take(
        doc, "config", {"model": _MISSING, "contract": _MISSING, "simulation": {}, "output": {}}
    )
    try:
        return RunConfig(
            model=model_from_dict(_require(blocks["model"], "config")),
            contract=contract_from_dict(_require(blocks["contract"], "config")),
            simulation=simulation_from_dict(blocks["simulation"]),
            output=output_from_dict(blocks["output"]),
        )
    except DomainError as exc:
        # Surface model invariant violations as configuration errors.
        raise ConfigError(str(exc)) from exc


def load_config(path: Optional[str], overrides: Optional[dict] = None) -> RunConfig:
    """Load a config file (or the defaults) and apply flag overrides.

    ``overrides`` maps dotted paths (e.g. ``"contract.kappa"``) to values
    that replace whatever the file specifies.
    """
    doc = default_config_dict()
    if path is not None:
        try:
            loaded = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config document must be a JSON object")
        for block, content in loaded.items():
            if block not in doc:
                raise ConfigError(f"unknown config block {block!r}")
            if not isinstance(content, dict):
                raise ConfigError(f"config block {block!r} must be an object")
            doc[block].update(content)
    for dotted, value in (overrides or {}).items():
        block, key = dotted.split(".", 1)
        doc[block][key] = value
    return config_from_dict(doc)
