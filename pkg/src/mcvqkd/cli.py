"""Command-line interface: keyrate, threshold, region, simulate.

Data goes to stdout (or --out); diagnostics go to stderr. Exit codes:
0 ok, 2 parameter/config error, 3 regime error, 4 internal consistency.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from dataclasses import dataclass, field, replace
from typing import Any, Optional, Sequence

import jsonschema
import numpy as np

from .channel_model import ChannelEnsemble, SubChannel
from .errors import ConfigurationError, ConsistencyError, McvqkdError, ParameterError, RegimeError
from .montecarlo_sim import simulate_block
from .multiuser_mqa import allocate, capacity_region, private_region, svd_private_capacities
from .protocol import DIRECTIONS, MEASUREMENTS, RECONCILIATIONS, ProtocolConfig, TwoWaySplits
from .rates import keyrate
from .threshold_solver import (
    CLOSED_FORM_VARIANTS,
    dr_single_carrier_condition,
    max_eve_variance,
    tolerable_excess_noise_closed_form,
    tolerable_excess_noise_multicarrier,
)

SCHEMA_VERSION = "1"
EXIT_OK, EXIT_PARAMETER, EXIT_REGIME, EXIT_CONSISTENCY = 0, 2, 3, 4

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA: dict = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "protocol": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "direction": {"enum": list(DIRECTIONS)},
                "measurement": {"enum": list(MEASUREMENTS)},
                "reconciliation": {"enum": list(RECONCILIATIONS)},
                "single_carrier_variance": _POS,
                "multicarrier_variance": _POS,
                "squeezing": _POS,
                "shot_noise": _POS,
                "beam_splitter": _POS,
                "vacuum_noise": _POS,
                "t_bar": _NUM,
                "w_bar": _NUM,
                "quadrature_convention": {"enum": ["real", "complex"]},
                "rr_het_form": {"enum": ["standard", "alternate"]},
                "twoway_rr_het_form": {"enum": ["literal", "linear"]},
                "strict_splits": {"type": "boolean"},
                "gamma_split": {"type": "array", "items": _POS, "minItems": 3, "maxItems": 3},
            },
        },
        "ensemble": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "slots": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["gain", "noise_variance"],
                        "properties": {"gain": _NUM, "noise_variance": _POS, "eve_variance": _NUM},
                    },
                },
                "n": {"type": "integer", "minimum": 1},
                "l": {"type": "integer", "minimum": 0},
                "gain": _NUM,
                "noise_variance": _POS,
                "eve_variance": _NUM,
                "nu_eve": _POS,
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["axis", "lo", "hi", "steps"],
            "properties": {
                "axis": {"type": "string"},
                "lo": _NUM,
                "hi": _NUM,
                "steps": {"type": "integer", "minimum": 0},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"format": {"enum": ["csv", "json"]}, "path": {"type": "string"}},
        },
        "threshold": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "variant": {"enum": list(CLOSED_FORM_VARIANTS)},
                "quantity": {"enum": ["excess_noise", "eve_variance"]},
                "single_carrier_gain": _POS,
                "all": {"type": "boolean"},
            },
        },
        "region": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "users": {"type": "integer", "minimum": 1},
                "eve_terms": {"type": "array", "items": _NUM},
                "alloc": {"enum": ["uniform", "waterfill"]},
                "svd_v": {"type": "array", "items": _NUM},
            },
        },
        "simulate": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "seed": {"type": "integer", "minimum": 0},
                "trials": {"type": "integer", "minimum": 1},
                "all_slots": {"type": "boolean"},
                "include_eve": {"type": "boolean"},
            },
        },
    },
}

SWEEP_AXES = (
    "t_bar",
    "w_bar",
    "single_carrier_variance",
    "multicarrier_variance",
    "squeezing",
    "beam_splitter",
    "vacuum_noise",
)


def format_number(x: Any) -> str:
    """Shortest round-trip text of x after rounding to 12 significant digits."""
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(f"{x:.12g}"))


def _json_ready(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return format_number(x)
        return float(f"{x:.12g}")
    return obj


@dataclass
class RunConfig:
    protocol: ProtocolConfig
    sweep: Optional[tuple] = None
    output_format: str = "csv"
    output_path: Optional[str] = None
    threshold: dict = field(default_factory=dict)
    region: dict = field(default_factory=dict)
    simulate: dict = field(default_factory=dict)


def _build_ensemble(desc: dict) -> ChannelEnsemble:
    nu_eve = desc.get("nu_eve", math.inf)
    if "slots" in desc:
        if any(k in desc for k in ("n", "l", "gain")):
            raise ConfigurationError("give either an explicit slot list or the (n, l, gain) shorthand")
        slots = [
            SubChannel.from_gain(s["gain"], s["noise_variance"], s.get("eve_variance", 1.0)) for s in desc["slots"]
        ]
        return ChannelEnsemble(tuple(slots), nu_eve)
    missing = [k for k in ("n", "gain") if k not in desc]
    if missing:
        raise ConfigurationError(f"ensemble shorthand missing {missing}")
    n = desc["n"]
    l = desc.get("l", n)
    if l > n:
        raise ConfigurationError("l cannot exceed n")
    noise = desc.get("noise_variance", 1.0)
    eve = desc.get("eve_variance", 1.0)
    slots = [SubChannel.from_gain(desc["gain"] if i < l else 0.0, noise, eve) for i in range(n)]
    return ChannelEnsemble(tuple(slots), nu_eve)


def _parse_sweep(text: str) -> tuple:
    parts = text.split(":")
    if len(parts) != 4:
        raise ConfigurationError("sweep must look like axis:lo:hi:steps")
    axis, lo, hi, steps = parts
    try:
        return axis, float(lo), float(hi), int(steps)
    except ValueError as exc:
        raise ConfigurationError(f"bad sweep {text!r}: {exc}") from exc


def load_run_config(args: argparse.Namespace) -> RunConfig:
    raw: dict = {"schema_version": SCHEMA_VERSION}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
        except OSError as exc:
            raise ConfigurationError(f"cannot read config: {exc}") from exc
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"config invalid at {where}: {exc.message}") from exc

    proto = dict(raw.get("protocol", {}))
    gamma = proto.pop("gamma_split", None)
    overrides = {
        "direction": args.protocol,
        "measurement": args.measurement,
        "reconciliation": args.reconciliation,
        "t_bar": args.tbar,
        "w_bar": args.eve_variance,
        "single_carrier_variance": args.mod_variance,
    }
    proto.update({k: v for k, v in overrides.items() if v is not None})

    ens_desc = dict(raw.get("ensemble", {}))
    if args.subchannels is not None:
        ens_desc.pop("slots", None)
        ens_desc["n"] = ens_desc["l"] = args.subchannels
        ens_desc.setdefault("gain", proto.get("t_bar"))
        if ens_desc["gain"] is None:
            raise ConfigurationError("--subchannels needs a gain (ensemble.gain or --tbar)")
    if args.nu_eve is not None:
        ens_desc["nu_eve"] = args.nu_eve
    ensemble = _build_ensemble(ens_desc) if ens_desc and set(ens_desc) != {"nu_eve"} else None

    protocol = ProtocolConfig(
        ensemble=ensemble,
        splits=TwoWaySplits(gamma=tuple(gamma) if gamma else None),
        **proto,
    )

    sweep = None
    if args.sweep:
        sweep = _parse_sweep(args.sweep)
    elif "sweep" in raw:
        s = raw["sweep"]
        sweep = (s["axis"], float(s["lo"]), float(s["hi"]), int(s["steps"]))
    if sweep is not None:
        if sweep[0] not in SWEEP_AXES:
            raise ConfigurationError(f"sweep axis {sweep[0]!r} is not one of {SWEEP_AXES}")
        if sweep[3] < 0:
            raise ConfigurationError("sweep steps must be non-negative")

    out = raw.get("output", {})
    region = dict(raw.get("region", {}))
    if args.alloc:
        region["alloc"] = args.alloc
    if args.svd_v:
        region["svd_v"] = _float_list(args.svd_v)
    if args.users is not None:
        region["users"] = args.users
    if args.eve_terms:
        region["eve_terms"] = _float_list(args.eve_terms)
    simulate = dict(raw.get("simulate", {}))
    if args.seed is not None:
        simulate["seed"] = args.seed
    if args.trials is not None:
        simulate["trials"] = args.trials
    threshold = dict(raw.get("threshold", {}))
    if args.variant:
        threshold["variant"] = args.variant
    if args.quantity:
        threshold["quantity"] = args.quantity
    if args.all:
        threshold["all"] = True
    if args.single_gain is not None:
        threshold["single_carrier_gain"] = args.single_gain
    return RunConfig(
        protocol=protocol,
        sweep=sweep,
        output_format=args.format or out.get("format", "csv"),
        output_path=args.out or out.get("path"),
        threshold=threshold,
        region=region,
        simulate=simulate,
    )


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"bad number list {text!r}") from exc


def sweep_values(sweep: Optional[tuple]) -> Optional[list[float]]:
    if sweep is None:
        return None
    _, lo, hi, steps = sweep
    if steps == 0:
        return []
    if steps == 1:
        return [lo]
    return [float(v) for v in np.linspace(lo, hi, steps)]


def _configs_for_sweep(run: RunConfig) -> list[ProtocolConfig]:
    values = sweep_values(run.sweep)
    if values is None:
        return [run.protocol]
    axis = run.sweep[0]
    return [replace(run.protocol, **{axis: v}) for v in values]


class Table:
    def __init__(self, columns: Sequence[str]):
        self.columns = list(columns)
        self.rows: list[dict] = []

    def add(self, **row: Any) -> None:
        self.rows.append(row)

    def render(self, fmt: str, meta: Optional[dict] = None) -> str:
        if fmt == "json":
            doc = {"schema_version": SCHEMA_VERSION, **(meta or {}), "columns": self.columns,
                   "rows": [{c: r.get(c) for c in self.columns} for r in self.rows]}
            return json.dumps(_json_ready(doc), indent=2, sort_keys=True) + "\n"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([format_number(r.get(c)) for c in self.columns])
        return buf.getvalue()


def cmd_keyrate(run: RunConfig) -> str:
    table = Table(["T_bar", "W_bar", "rate_bits", "rate_clamped", "info_term", "eve_term"])
    for cfg in _configs_for_sweep(run):
        res = keyrate(cfg)
        table.add(T_bar=res.t_bar, W_bar=res.w_bar, rate_bits=res.rate_bits, rate_clamped=res.rate_clamped,
                  info_term=res.mutual_info_term, eve_term=res.eve_term)
    return table.render(run.output_format, {"command": "keyrate", "variant": run.protocol.variant})


def _all_variants(cfg: ProtocolConfig) -> list[ProtocolConfig]:
    return [
        replace(cfg, direction=d, measurement=m, reconciliation=r)
        for d in DIRECTIONS for r in RECONCILIATIONS for m in MEASUREMENTS
    ]


def cmd_threshold(run: RunConfig) -> str:
    th = run.threshold
    variant = th.get("variant")
    if variant:
        value = tolerable_excess_noise_closed_form(variant)
        residual = abs(dr_single_carrier_condition(value) - math.e ** 2) if variant == "dr_one_way_single" else 0.0
        table = Table(["variant", "N_tol", "method", "residual", "status"])
        table.add(variant=variant, N_tol=value, method="closed_form", residual=residual, status="ok")
        return table.render(run.output_format, {"command": "threshold"})

    quantity = th.get("quantity", "excess_noise")
    value_col = "N_tol" if quantity == "excess_noise" else "W_max"
    with_variant = bool(th.get("all"))
    columns = (["variant"] if with_variant else []) + ["T_bar", value_col, "method", "residual", "status"]
    table = Table(columns)
    if run.sweep is not None and run.sweep[0] != "t_bar":
        raise ConfigurationError("threshold sweeps must run over t_bar")
    grid = sweep_values(run.sweep)
    if grid is None:
        grid = [run.protocol.resolved()[0]]
    grid = sorted(grid)
    variants = _all_variants(run.protocol) if with_variant else [run.protocol]
    for cfg in variants:
        for t in grid:
            if quantity == "eve_variance":
                res = max_eve_variance(cfg, [t])[0]
            else:
                res = tolerable_excess_noise_multicarrier(replace(cfg, t_bar=t, w_bar=None),
                                                          th.get("single_carrier_gain"))
            row = {"T_bar": t, value_col: res.value, "method": res.method, "residual": res.residual,
                   "status": res.status}
            if with_variant:
                row["variant"] = cfg.variant
            table.add(**row)
    return table.render(run.output_format, {"command": "threshold", "quantity": quantity})


def cmd_region(run: RunConfig) -> str:
    cfg = run.protocol
    ens = cfg.ensemble
    if ens is None:
        raise ConfigurationError("region needs an ensemble")
    reg = run.region
    users = int(reg.get("users", 2))
    alloc = allocate(ens, cfg.modulation_variance, reg.get("alloc", "uniform"))
    eve_terms = reg.get("eve_terms")
    if eve_terms is None:
        eve_terms = [max(0.0, keyrate(cfg).eve_term)] * users
    svd_v = reg.get("svd_v")
    if svd_v:
        if len(svd_v) == 1:
            svd_v = svd_v * ens.l
        c_reg = capacity_region(ens, users, alloc, gain_scale=svd_v)
        p_reg = svd_private_capacities(ens, users, svd_v, eve_terms, alloc, cfg.vacuum_noise)
    else:
        c_reg = capacity_region(ens, users, alloc)
        p_reg = private_region(ens, users, eve_terms, alloc, cfg.vacuum_noise)
    table = Table(["user_index", "corner_C", "corner_P", "sum_C", "sym_C", "sum_P", "sym_P"])
    for k in range(users):
        table.add(user_index=k, corner_C=c_reg.corner_points[k], corner_P=p_reg.corner_points[k],
                  sum_C=c_reg.sum_capacity, sym_C=c_reg.symmetric_capacity,
                  sum_P=p_reg.sum_capacity, sym_P=p_reg.symmetric_capacity)
    return table.render(run.output_format, {"command": "region", "noise_form_sum_P": p_reg.noise_form_sum})


def cmd_simulate(run: RunConfig) -> str:
    sim = run.simulate
    if "seed" not in sim or "trials" not in sim:
        raise ConfigurationError("simulate needs both seed and trials")
    if run.protocol.ensemble is None:
        raise ConfigurationError("simulate needs an ensemble")
    report = simulate_block(run.protocol, int(sim["trials"]), int(sim["seed"]),
                            all_slots=bool(sim.get("all_slots", False)),
                            include_eve=bool(sim.get("include_eve", False)))
    doc = {"schema_version": SCHEMA_VERSION, "command": "simulate", "report": report.to_dict()}
    return json.dumps(_json_ready(doc), indent=2, sort_keys=True) + "\n"


COMMANDS = {"keyrate": cmd_keyrate, "threshold": cmd_threshold, "region": cmd_region, "simulate": cmd_simulate}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcvqkd", description="Multicarrier CVQKD key rates, thresholds and regions.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--protocol", choices=DIRECTIONS)
        p.add_argument("--measurement", choices=MEASUREMENTS)
        p.add_argument("--reconciliation", choices=RECONCILIATIONS)
        p.add_argument("--tbar", type=float, help="averaged sub-channel gain")
        p.add_argument("--eve-variance", type=float, help="averaged Eve variance W")
        p.add_argument("--mod-variance", type=float, help="single-carrier modulation variance")
        p.add_argument("--subchannels", type=int, help="uniform ensemble with this many slots")
        p.add_argument("--nu-eve", type=float)
        p.add_argument("--sweep", help="axis:lo:hi:steps")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--alloc", choices=("uniform", "waterfill"))
        p.add_argument("--svd-v", help="comma-separated SVD gains")
        p.add_argument("--users", type=int)
        p.add_argument("--eve-terms", help="comma-separated Eve terms in bits")
        p.add_argument("--variant", choices=CLOSED_FORM_VARIANTS)
        p.add_argument("--quantity", choices=("excess_noise", "eve_variance"))
        p.add_argument("--all", action="store_true", help="all eight protocol variants")
        p.add_argument("--single-gain", type=float, help="single-carrier gain for threshold ratios")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARAMETER if exc.code else EXIT_OK
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            run = load_run_config(args)
            text = COMMANDS[args.command](run)
        except RegimeError as exc:
            print(f"error: regime: {exc}", file=sys.stderr)
            return EXIT_REGIME
        except ConsistencyError as exc:
            print(f"error: consistency: {exc}", file=sys.stderr)
            return EXIT_CONSISTENCY
        except ParameterError as exc:
            print(f"error: parameter: {exc}", file=sys.stderr)
            return EXIT_PARAMETER
        except McvqkdError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONSISTENCY
        finally:
            for msg in dict.fromkeys(str(w.message) for w in caught):
                print(f"warning: {msg}", file=sys.stderr)
    if run.output_path:
        with open(run.output_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
