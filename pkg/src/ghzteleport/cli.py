"""Command-line front end: ``ghzteleport {bases-check,teleport-single,teleport-entangled,sweep}``.

Exit codes: 0 success, 1 threshold failure, 2 validation error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .bases import check_basis, demonstrate_triple_basis_failure
from .config import ConfigError, RunConfig, load_config, parse_override
from .grid import GridError, make_grid
from .protocols import EntangledTeleporter, ProtocolError, SingleTeleporter, heisenberg_entangled
from .resources import IDEAL, InputSpec, ResourceError, ResourceQuality, input_profile_state, make_ghz_wavefunction, make_input_state

BASIS_TOLERANCE = 1e-9
IDEAL_FIDELITY_FLOOR = 1 - 1e-8

TELEPORT_COLUMNS = ["protocol", "seed", "basis", "resource_mode", "r", "p", "P", "Q", "density", "fidelity",
                    "var_x4_minus_x5", "var_p4_plus_p5"]
BASES_COLUMNS = ["family", "n_points", "gram_deviation", "completeness_deviation", "n_labels_checked"]
SWEEP_COLUMNS = ["parameter", "value", "protocol", "mean_fidelity", "std_error", "fidelity_exact",
                 "var_x4_minus_x5", "var_x4_minus_x5_grid", "var_sum_p", "n_samples"]
TRIPLE_COLUMNS = ["basis", "label", "density", "isometry_defect"]

_num = {"type": ["number", "null"]}
RECORD_SCHEMA = {
    "anyOf": [
        {
            "type": "object",
            "required": ["protocol", "seed", "outcome", "fidelity", "variances"],
            "properties": {
                "protocol": {"enum": ["single", "entangled"]},
                "seed": {"type": "integer", "minimum": 0},
                "basis": {"type": "string"},
                "resource": {"type": "object", "required": ["mode", "r"]},
                "outcome": {
                    "type": "object",
                    "required": ["p", "P", "Q"],
                    "properties": {"p": _num, "P": {"type": "number"}, "Q": {"type": "number"}},
                },
                "corrections": {"type": "array"},
                "fidelity": {"type": "number", "minimum": 0, "maximum": 1},
                "variances": {"type": "object", "additionalProperties": {"type": "number"}},
            },
        },
        {
            "type": "object",
            "required": ["family", "gram_deviation", "completeness_deviation"],
            "properties": {"family": {"enum": ["bell", "triple", "pi123"]},
                           "gram_deviation": {"type": "number"}, "completeness_deviation": {"type": "number"}},
        },
        {
            "type": "object",
            "required": ["parameter", "value", "mean_fidelity", "std_error", "var_x4_minus_x5", "var_sum_p"],
            "properties": {k: _num for k in SWEEP_COLUMNS[3:]},
        },
        {
            "type": "object",
            "required": ["basis", "label", "isometry_defect"],
            "properties": {"basis": {"enum": ["triple", "pi123"]}, "isometry_defect": {"type": "number"}},
        },
    ]
}
OUTPUT_SCHEMA = {
    "type": "object",
    "required": ["config", "records", "summary"],
    "properties": {
        "config": {"type": "object"},
        "records": {"type": "array", "items": RECORD_SCHEMA},
        "summary": {"type": "object"},
    },
}


class ValidationFailure(Exception):
    pass


# --- building blocks ----------------------------------------------------------------


def _grid(cfg: RunConfig, n_points: int | None = None):
    return make_grid(n_points or cfg["grid.n_points"], cfg["grid.extent"])


def _quality(cfg: RunConfig, r: float | None = None) -> ResourceQuality:
    if r is not None:
        return ResourceQuality.finite(r)
    return IDEAL if cfg["resource.mode"] == "ideal" else ResourceQuality.finite(cfg["resource.r"])


def _spec(cfg: RunConfig) -> InputSpec:
    return InputSpec(cfg["input.profile"], cfg["input.center"], cfg["input.width"], cfg["input.q"], cfg["input.seed"])


def _seeds(cfg: RunConfig) -> list[int]:
    return list(range(cfg["seeds.base"], cfg["seeds.base"] + cfg["seeds.count"]))


def _run_ordered(fn, seeds, workers: int) -> list:
    if workers <= 1:
        return [fn(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seeds))


def _summary(fids) -> dict:
    f = np.asarray(fids, dtype=float)
    se = float(f.std(ddof=1) / math.sqrt(f.size)) if f.size > 1 else 0.0
    return {"n_runs": int(f.size), "mean_fidelity": float(f.mean()), "std_error": se,
            "min_fidelity": float(f.min()), "max_fidelity": float(f.max())}


def _flat_teleport(rec: dict) -> dict:
    v = rec.get("variances", {})
    return {
        "protocol": rec["protocol"], "seed": rec["seed"], "basis": rec["basis"],
        "resource_mode": rec["resource"]["mode"], "r": rec["resource"]["r"],
        "p": rec["outcome"]["p"], "P": rec["outcome"]["P"], "Q": rec["outcome"]["Q"],
        "density": rec["outcome"]["density"], "fidelity": rec["fidelity"],
        "var_x4_minus_x5": v.get("var_x4_minus_x5"), "var_p4_plus_p5": v.get("var_p4_plus_p5"),
    }


# --- commands -------------------------------------------------------------------------


def cmd_bases_check(cfg: RunConfig):
    grid = _grid(cfg)
    records, failures = [], []
    for fam in ("bell", "triple", "pi123"):
        chk = check_basis(fam, grid, seed=cfg["seeds.base"])
        rec = {"family": fam, "n_points": grid.n_points, "gram_deviation": chk.gram_deviation,
               "completeness_deviation": chk.completeness_deviation, "n_labels_checked": chk.n_labels_checked}
        records.append(rec)
        if chk.max_deviation >= BASIS_TOLERANCE:
            failures.append({"family": fam, "max_deviation": chk.max_deviation})
    summary = {"tolerance": BASIS_TOLERANCE, "failures": failures}
    return records, summary, BASES_COLUMNS, 1 if failures else 0


def cmd_teleport_single(cfg: RunConfig):
    grid = _grid(cfg)
    quality = _quality(cfg)
    tel = SingleTeleporter(input_profile_state(_spec(cfg), grid), quality, grid)
    recs = _run_ordered(tel.run, _seeds(cfg), cfg["run.workers"])
    records = [r.as_dict() for r in recs]
    summary = _summary([r.fidelity for r in recs])
    summary["average_fidelity_exact"] = tel.average_fidelity()
    status = 0
    if quality.ideal and summary["min_fidelity"] < IDEAL_FIDELITY_FLOOR:
        status = 1
    return records, summary, TELEPORT_COLUMNS, status


def cmd_teleport_entangled(cfg: RunConfig):
    grid = _grid(cfg)
    quality = _quality(cfg)
    spec = _spec(cfg)
    if cfg["protocol.basis"] == "triple":
        return _triple_failure(cfg, grid, spec, quality)
    if not quality.ideal and grid.n_points > 256:
        raise ValidationFailure("finite-quality GHZ needs grid.n_points <= 256")
    tel = EntangledTeleporter(spec, quality, grid, "pi123", cfg["protocol.swap_receivers"])
    recs = _run_ordered(tel.run, _seeds(cfg), cfg["run.workers"])
    records = [r.as_dict() for r in recs]
    summary = _summary([r.fidelity for r in recs])
    summary["mean_var_x4_minus_x5"] = float(np.mean([r.variances["var_x4_minus_x5"] for r in recs]))
    summary["predicted_var_x4_minus_x5"] = heisenberg_entangled(math.inf if quality.ideal else quality.r).var_relative_position
    status = 0
    if quality.ideal and summary["min_fidelity"] < IDEAL_FIDELITY_FLOOR:
        status = 1
    return records, summary, TELEPORT_COLUMNS, status


def _triple_failure(cfg, grid, spec, quality):
    rep = demonstrate_triple_basis_failure(
        make_input_state(spec, grid), make_ghz_wavefunction(quality, grid), n_outcomes=cfg["seeds.count"],
        seed=cfg["seeds.base"],
    )
    records = [
        {"basis": o.basis, "label": {k: float(v) for k, v in vars(o.label).items()}, "density": o.density,
         "isometry_defect": o.isometry_defect}
        for o in rep.outcomes
    ]
    summary = {"max_defect_triple": rep.max_defect_triple, "max_defect_pi123": rep.max_defect_pi123,
               "operator_defects": rep.operator_defects, "test_offsets": rep.test_offsets, "q": rep.q}
    ok = rep.max_defect_triple > 0.1 and rep.max_defect_pi123 < BASIS_TOLERANCE
    return records, summary, TRIPLE_COLUMNS, 0 if ok else 1


def _sweep_row(cfg: RunConfig, value: float) -> dict:
    param, protocol = cfg["sweep.parameter"], cfg["sweep.protocol"]
    if param == "r":
        grid, quality = _grid(cfg), _quality(cfg, value)
    else:
        grid, quality = _grid(cfg, int(value)), _quality(cfg)
    r_eff = math.inf if quality.ideal else quality.r
    row = {"parameter": param, "value": float(value), "protocol": protocol, "mean_fidelity": None,
           "std_error": None, "fidelity_exact": None, "var_x4_minus_x5": None, "var_x4_minus_x5_grid": None,
           "var_sum_p": None, "n_samples": 0}
    if protocol == "entangled":
        heis = heisenberg_entangled(r_eff)
        row["var_x4_minus_x5"] = heis.var_relative_position
        row["var_sum_p"] = heis.var_total_momentum_noise
    try:
        if protocol == "single":
            tel = SingleTeleporter(input_profile_state(_spec(cfg), grid), quality, grid)
            row["fidelity_exact"] = tel.average_fidelity()
        else:
            if not quality.ideal and grid.n_points > 256:
                return row
            tel = EntangledTeleporter(_spec(cfg), quality, grid, "pi123", cfg["protocol.swap_receivers"])
    except ResourceError:
        # resource wider than the grid: keep the Gaussian-engine columns, no grid run
        return row
    recs = _run_ordered(tel.run, _seeds(cfg), cfg["run.workers"])
    s = _summary([r.fidelity for r in recs])
    row.update(mean_fidelity=s["mean_fidelity"], std_error=s["std_error"], n_samples=s["n_runs"])
    if protocol == "entangled":
        row["var_x4_minus_x5_grid"] = float(np.mean([r.variances["var_x4_minus_x5"] for r in recs]))
    return row


def cmd_sweep(cfg: RunConfig):
    records = [_sweep_row(cfg, v) for v in cfg["sweep.values"]]
    means = [r["mean_fidelity"] for r in records]
    summary = {"parameter": cfg["sweep.parameter"], "protocol": cfg["sweep.protocol"],
               "grid_runs": sum(m is not None for m in means)}
    known = [m for m in means if m is not None]
    summary["fidelity_increasing"] = bool(all(b > a for a, b in zip(known, known[1:])))
    return records, summary, SWEEP_COLUMNS, 0


COMMANDS = {
    "bases-check": cmd_bases_check,
    "teleport-single": cmd_teleport_single,
    "teleport-entangled": cmd_teleport_entangled,
    "sweep": cmd_sweep,
}


# --- output ---------------------------------------------------------------------------


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, dict):
        return json.dumps(v, sort_keys=True)
    return repr(v) if isinstance(v, float) else str(v)


def render(cfg: RunConfig, command: str, records: list, summary: dict, columns: list, fmt: str) -> str:
    if fmt == "json":
        doc = {"config": cfg.as_dict(), "command": command, "records": records, "summary": summary}
        return json.dumps(doc, indent=2) + "\n"
    rows = [_flat_teleport(r) for r in records] if columns is TELEPORT_COLUMNS else records
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_csv_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="K=V",
                        help="override one config key (repeatable)")
    common.add_argument("--out", help="output path (default: output.path or stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--seed", type=int, help="first seed (seeds.base)")
    common.add_argument("--runs", type=int, help="number of seeds (seeds.count)")
    common.add_argument("--basis", choices=("pi123", "triple"))
    parser = argparse.ArgumentParser(prog="ghzteleport", description="Continuous-variable teleportation simulator.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _config_from_args(args) -> RunConfig:
    pairs = [parse_override(item) for item in args.overrides]
    for flag, key in (("format", "output.format"), ("seed", "seeds.base"), ("runs", "seeds.count"),
                      ("basis", "protocol.basis"), ("out", "output.path")):
        val = getattr(args, flag)
        if val is not None:
            pairs.append((key, str(val)))
    return load_config(args.config, pairs)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        records, summary, columns, status = COMMANDS[args.command](cfg)
    except (ConfigError, GridError, ResourceError, ProtocolError, ValidationFailure, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    text = render(cfg, args.command, records, summary, columns, cfg["output.format"])
    if cfg["output.path"]:
        with open(cfg["output.path"], "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
