"""Batch front end: construct systems from recipes, profile, report, verify, export plot data.

Exit codes: 0 ok, 2 config error, 3 budget-limited (artifacts written, some rows missing).
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .constructions.digits import nonexistence_system
from .constructions.moran import moran_scales_from_class
from .constructions.prescribed import ifs_with_prescribed
from .constructions.sharpness import SharpnessParams, sharpness_system
from .covering import covering_profile, geometric_scales, write_profile_csv
from .errors import BudgetExceeded, CifsdimError
from .ifs.digits import DigitSet
from .ifs.maps import Similarity
from .ifs.system import CIFS, gauss_cifs, similarity_system, system_from_json
from .scaling import Constant, ScalingFunction, Toward, concatenate, from_json
from .scaling import to_json as scaling_to_json
from .verify import (POINT_BUDGET, WORD_BUDGET, dimension_report, empirical_vs_formula, fixed_point_cloud,
                     instrumented_scales, sample_envelope, write_report)

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET = 0, 2, 3


class ConfigError(CifsdimError):
    pass


# -- config ---------------------------------------------------------------------

def load_schema() -> dict:
    return json.loads(resources.files("cifsdim").joinpath("schema/config.schema.json").read_text())


def _line_of(text: str, path) -> int:
    """Line of the deepest key of ``path`` found in the raw text (1 if none)."""
    for key in reversed([p for p in path if isinstance(p, str)]):
        needle = json.dumps(key) + ":"
        idx = text.replace('" :', '":').find(needle)
        if idx >= 0:
            return text.count("\n", 0, idx) + 1
    return 1


def parse_config(text: str, source: str = "<config>") -> dict:
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    errors = sorted(jsonschema.Draft202012Validator(load_schema()).iter_errors(cfg),
                    key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.absolute_path) or "(root)"
        raise ConfigError(f"{source}:{_line_of(text, list(e.absolute_path))}: {where}: {e.message}")
    sc = cfg.get("scales")
    if sc and sc["kmin"] > sc["kmax"]:
        raise ConfigError(f"{source}:{_line_of(text, ['kmin'])}: scales: kmin exceeds kmax")
    return cfg


def parse_scales(spec: str) -> dict:
    try:
        base, kmin, kmax = spec.split(":")
        out = {"base": float(base), "kmin": int(kmin), "kmax": int(kmax)}
    except ValueError:
        raise ConfigError(f"--scales: expected base:kmin:kmax, got {spec!r}") from None
    if out["base"] <= 1 or out["kmin"] > out["kmax"] or out["kmin"] < 0:
        raise ConfigError(f"--scales: invalid range {spec!r}")
    return out


# -- recipes ----------------------------------------------------------------------

def scaling_from_param(obj) -> ScalingFunction:
    """A number (constant class), a serialized function, or a list of pieces."""
    if isinstance(obj, (int, float)):
        return Constant(float(obj), 64.0)
    if isinstance(obj, dict):
        return from_json(obj)
    pieces = []
    for p in obj:
        if "constant" in p:
            pieces.append(Constant(float(p["constant"]), float(p["length"])))
        else:
            pieces.append(Toward(float(p["toward"]), float(p["initial"]), float(p["length"])))
    return concatenate(pieces)


def build_recipe(name: str, params: dict):
    """Returns (system or None, extra artifact dict)."""
    if name == "cantor13":
        r = float(params.get("ratio", 1.0 / 3.0))
        system = similarity_system([Similarity(r, (0.0,)), Similarity(r, (1.0 - r,))],
                                   provenance={"construction": "cantor13", "ratio": r})
        return system, {}
    if name == "gauss":
        if "digits" in params:
            ds = DigitSet.of([int(b) for b in params["digits"]])
        else:
            ds = DigitSet(bands=tuple(tuple(int(v) for v in b) for b in params["bands"]),
                          squares=bool(params.get("squares", False)), cut=int(params.get("cut", 1)))
        system = gauss_cifs(ds, params.get("B"))
        system.provenance = {"construction": "gauss", **ds.to_json()}
        return system, {}
    if name == "cf-nonexistence":
        return nonexistence_system(int(params.get("stages", 3))), {}
    if name == "prescribed":
        g = scaling_from_param(params.get("g", 0.2))
        return ifs_with_prescribed(g, float(params["h"]), int(params.get("d", 1)),
                                   min_scale=float(params.get("min_scale", 1e-8))), {}
    if name == "sharpness":
        p = SharpnessParams(float(params["h"]), float(params["s"]), float(params["t"]), float(params["beta"]),
                            int(params.get("d", 1)), float(params.get("delta", 0.01)))
        res = sharpness_system(p, int(params.get("stages", 5)), min_scale=float(params.get("min_scale", 1e-8)))
        return res.system, {"target": res.target, "envelope": res.envelope}
    if name == "moran":
        g = scaling_from_param(params.get("g", 0.5))
        spec = moran_scales_from_class(g, int(params.get("d", 1)), int(params.get("depth", 12)))
        return None, {"moran": spec, "g": g}
    raise ConfigError(f"unknown recipe {name!r}")


def resolve_system(cfg: dict):
    if "recipe" in cfg:
        return build_recipe(cfg["recipe"]["name"], cfg["recipe"].get("params", {}))
    if "system_path" in cfg:
        obj = json.loads(Path(cfg["system_path"]).read_text())
    else:
        obj = cfg["system"]
    return system_from_json(obj), {}


def moran_report(spec, g: ScalingFunction) -> dict:
    """Exact-count exponents at the knots with the corridor bounds."""
    d = spec.dim
    out = {"kind": "moran", "spec": spec.to_json(), "scales": [], "x": [], "fixed_point_exponents": [],
           "envelope": [], "corridor_lo": []}
    for k in range(1, spec.depth + 1):
        x = spec.knots[k - 1]
        out["scales"].append(math.exp(-spec.log_inv_rho(k)))
        out["x"].append(math.log(spec.log_inv_rho(k)))
        out["fixed_point_exponents"].append(spec.upper_exponent(k))
        gx = float(g(x))
        out["envelope"].append(gx)
        out["corridor_lo"].append(gx - d * math.log(2.0) * math.exp(-x))
    return out


# -- plot data -----------------------------------------------------------------------

PLOT_COLUMNS = ("x", "s_F", "psi", "envelope", "measured")


def plotdata(report: dict) -> list[dict]:
    """Aligned series on x = log log(1/r): fixed-point exponent, psi, envelope, measured limit-set exponent."""
    if report.get("kind") == "moran":
        need = ("x", "fixed_point_exponents", "envelope")
        if any(k not in report for k in need):
            raise CifsdimError("incomplete report")
        return [{"x": x, "s_F": s, "psi": None, "envelope": e, "measured": s}
                for x, s, e in zip(report["x"], report["fixed_point_exponents"], report["envelope"])]
    need = ("scales", "fixed_point_exponents", "rows", "h")
    if any(k not in report for k in need):
        raise CifsdimError("incomplete report")
    rs = np.asarray(report["scales"], dtype=float)
    keep = rs < math.exp(-1.0)
    xs = np.log(np.log(1.0 / rs[keep]))
    sf = np.asarray(report["fixed_point_exponents"], dtype=float)[keep]
    if xs.size == 0:
        raise CifsdimError("incomplete report")
    env = sample_envelope(xs, sf, float(report["h"][0]))
    by_r = {float(row["r"]): row for row in report["rows"]}
    out = []
    for r, x, s in zip(rs[keep].tolist(), xs.tolist(), sf.tolist()):
        row = by_r.get(r, {})
        out.append({"x": x, "s_F": s, "psi": row.get("psi"), "envelope": float(env(x)),
                    "measured": row.get("direct")})
    return out


def write_series_csv(series: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PLOT_COLUMNS)
        for row in series:
            w.writerow(["" if row[k] is None else repr(float(row[k])) for k in PLOT_COLUMNS])


# -- main ------------------------------------------------------------------------------

def _merge_flags(cfg: dict, args) -> dict:
    cfg = dict(cfg)
    if args.scales:
        cfg["scales"] = parse_scales(args.scales)
    budgets = dict(cfg.get("budgets", {}))
    if args.budget_words is not None:
        if args.budget_words < 1:
            raise ConfigError("--budget-words must be positive")
        budgets["words"] = args.budget_words
    if args.precision_bits is not None:
        if args.precision_bits < 53:
            raise ConfigError("--precision-bits must be at least 53")
        budgets["precision_bits"] = args.precision_bits
    cfg["budgets"] = budgets
    return cfg


def _config_from_args(args) -> dict:
    if args.config:
        path = Path(args.config)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from None
        return parse_config(text, str(path))
    if args.recipe:
        params = {}
        for item in args.param or []:
            k, _, v = item.partition("=")
            try:
                params[k] = json.loads(v)
            except json.JSONDecodeError:
                params[k] = v
        return parse_config(json.dumps({"recipe": {"name": args.recipe, "params": params}}), "<flags>")
    raise ConfigError("either --config or --recipe is required")


def _scales(cfg: dict, system: CIFS) -> list[float]:
    sc = cfg.get("scales")
    if sc:
        return geometric_scales(sc["base"], sc["kmin"], sc["kmax"])
    return instrumented_scales(system)


def run(command: str, cfg: dict, out_dir: Path, stem: str | None = None) -> int:
    """Execute one experiment; returns the exit status."""
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = cfg.get("output", {}).get("stem") or stem or (cfg.get("recipe", {}).get("name") or "system")
    budgets = cfg.get("budgets", {})
    words = int(budgets.get("words", WORD_BUDGET))
    points = int(budgets.get("points", POINT_BUDGET))
    bits = int(budgets.get("precision_bits", 96))
    system, extra = resolve_system(cfg)

    if system is None:
        spec, g = extra["moran"], extra["g"]
        (out_dir / f"{stem}_moran.json").write_text(json.dumps(spec.to_json(), indent=2) + "\n")
        if command in ("report", "profile", "verify"):
            rep = moran_report(spec, g)
            (out_dir / f"{stem}_report.json").write_text(json.dumps(rep, indent=2, sort_keys=True) + "\n")
            print(f"moran: {spec.depth} knots, corridor at exact counts written to {stem}_report.json")
        else:
            print(f"moran: {spec.depth} ratios written to {stem}_moran.json")
        return EXIT_OK

    if command == "construct":
        (out_dir / f"{stem}_system.json").write_text(json.dumps(system.to_json(), indent=2, sort_keys=True,
                                                               default=_jsonable) + "\n")
        for key in ("target", "envelope"):
            if key in extra:
                (out_dir / f"{stem}_{key}.json").write_text(json.dumps(scaling_to_json(extra[key]), indent=2) + "\n")
        print(f"constructed {system.kind} system with {len(system.batch(None))} retained generators")
        return EXIT_OK

    scales = _scales(cfg, system)
    if command == "profile":
        prof = covering_profile(fixed_point_cloud(system, bits=bits), scales)
        write_profile_csv(prof, out_dir / f"{stem}_profile.csv")
        print(f"profile: {len(scales)} scales, finest exponent {prof.exponents[-1]:.6f}")
        return EXIT_OK

    if command == "verify":
        rows = empirical_vs_formula(system, scales, budget_words=words, budget_points=points)
        with open(out_dir / f"{stem}_rows.csv", "w") as fh:
            fh.write("r,direct,symbolic,psi,theta,residual,slack,flag,words\n")
            for row in rows:
                vals = [row.r, row.direct, row.symbolic, row.psi, row.theta, row.residual, row.slack]
                fh.write(",".join("" if v is None else repr(float(v)) for v in vals) + f",{row.flag},{row.words}\n")
        worst = max((abs(r.residual) for r in rows if r.residual is not None), default=float("nan"))
        print(f"verify: {len(rows)} scales, max |residual| {worst:.4f}")
        return _budget_status(rows)

    # report
    rep = dimension_report(system, scales=scales if cfg.get("scales") else None,
                           window_fraction=cfg.get("window_fraction"), budget_words=words,
                           budget_points=points, precision_bits=bits)
    write_report(rep, out_dir / f"{stem}_report")
    lo, hi = rep.interval
    d_text = f"{{{lo:.6f}}}" if hi - lo < 1e-12 else f"[{lo:.6f}, {hi:.6f}]"
    print(f"h in [{rep.h.lo:.6f}, {rep.h.hi:.6f}]  D = {d_text}  verdict: {rep.verdict}")
    return _budget_status(rep.rows)


def _budget_status(rows) -> int:
    missing = [r.r for r in rows if r.flag == "budget"]
    if missing:
        print(f"warning: {len(missing)} scale(s) not instrumentable at budget; rows flagged", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cifsdim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("construct", "profile", "report", "verify"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--recipe", help="recipe name (instead of --config)")
        p.add_argument("--param", action="append", help="recipe parameter key=value (JSON value)")
        p.add_argument("--out", default=None, help="output directory (default: config output.dir or ./out)")
        p.add_argument("--budget-words", type=int)
        p.add_argument("--precision-bits", type=int)
        p.add_argument("--scales", help="base:kmin:kmax, scales base^-k")
    p = sub.add_parser("plotdata")
    p.add_argument("report", help="report JSON written by `report`")
    p.add_argument("--out", default=None, help="CSV path or directory (default: next to the report)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "plotdata":
            path = Path(args.report)
            series = plotdata(json.loads(path.read_text()))
            dest = Path(args.out) if args.out else path.parent
            if dest.is_dir():
                dest = dest / (path.stem + "_plot.csv")
            write_series_csv(series, dest)
            print(f"plotdata: {len(series)} rows -> {dest}")
            return EXIT_OK
        cfg = _merge_flags(_config_from_args(args), args)
        return run(args.command, cfg, Path(args.out or cfg.get("output", {}).get("dir") or "out"))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except CifsdimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
