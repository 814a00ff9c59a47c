"""Command-line front end.

Each subcommand reads one experiment config (JSON, or TOML on a ``.toml``
path) and writes CSV/JSON reports, plus SVG plots where listed, into the
output directory.  Config keys::

    measure.type        "cantor" | "ifs" | "uniform" | "mixture"
    measure.ifs         [[ratio, offset, prob], ...]           (type "ifs")
    measure.lo/hi       interval ends                          (type "uniform")
    measure.components  [{"weight": w, <measure keys>}, ...]   (type "mixture")
    measure.depth       discretization depth
    measure.s0          dimension used by the AD profile (defaults from the model)
    r                   error order, 0 = geometric mean error
    n, n_max, n_range   codebook sizes; n_range is [first, last] inclusive
    packing.m, packing.k (int or list), packing.delta
    budgets.dp_cells, budgets.aux, budgets.oracle_grid, budgets.n_max
    slack.theorem       trend factor for verify-theorem
    seed_grid           seed count of the single-point search
    out                 output directory

Exit codes: 0 success (budget-exceeded auxiliary values are reported, not
errors), 2 config or usage error, 3 budget violation on a required path.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import analysis, covering, measure, quantizer, voronoi
from .measure import BudgetError, MeasureError
from .plots import line_plot

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET = 0, 2, 3
SIG = 12
COMMANDS = ("ad-check", "quantize", "sweep", "packing", "aux-constants", "verify-theorem",
            "gap-report", "local-counts")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


# --------------------------------------------------------------------------
# config


@dataclass
class ExperimentConfig:
    model: Any
    depth: int
    s0: float
    r: float = 0.0
    n: Optional[int] = None
    n_range: tuple = (1, 8)
    m: Optional[int] = None
    k: tuple = (1, 2, 3)
    delta: Optional[float] = None
    budget_cells: int = quantizer.DP_CELL_BUDGET
    budget_aux: int = 64
    budget_n: int = 512
    oracle_grid: int = 256
    slack: float = 2.0
    seed_grid: int = 64
    out: str = "out"
    raw: Dict[str, Any] = field(default_factory=dict)

    def dp_kw(self) -> dict:
        return {"seeds": self.seed_grid, "budget_cells": self.budget_cells}


def _get(d: dict, key: str, path: str, kind=None, default=Ellipsis):
    if key not in d:
        if default is Ellipsis:
            raise ConfigError(path, "missing")
        return default
    v = d[key]
    if kind is not None:
        try:
            if kind is int and (isinstance(v, bool) or float(v) != int(v)):
                raise ValueError
            v = kind(v)
        except (TypeError, ValueError):
            raise ConfigError(path, f"expected {kind.__name__}, got {v!r}") from None
    return v


def parse_model(spec: dict, path: str = "measure"):
    if not isinstance(spec, dict):
        raise ConfigError(path, "expected a table")
    kind = _get(spec, "type", f"{path}.type", str)
    try:
        if kind == "cantor":
            return measure.cantor()
        if kind == "uniform":
            return measure.UniformInterval(_get(spec, "lo", f"{path}.lo", float, 0.0),
                                           _get(spec, "hi", f"{path}.hi", float, 1.0))
        if kind == "ifs":
            maps = _get(spec, "ifs", f"{path}.ifs")
            try:
                triples = [measure.IfsMap(float(a), float(b), float(c)) for a, b, c in maps]
            except (TypeError, ValueError):
                raise ConfigError(f"{path}.ifs", "expected a list of [ratio, offset, prob]") from None
            feasible = tuple(_get(spec, "feasible", f"{path}.feasible", None, (0.0, 1.0)))
            return measure.IfsSelfSimilar(tuple(triples), feasible)
        if kind == "mixture":
            comps = _get(spec, "components", f"{path}.components")
            if not isinstance(comps, list) or not comps:
                raise ConfigError(f"{path}.components", "expected a non-empty list")
            parts = []
            for i, c in enumerate(comps):
                p = f"{path}.components[{i}]"
                parts.append((_get(c, "weight", f"{p}.weight", float), parse_model(c, p)))
            return measure.Mixture(tuple(parts))
    except MeasureError as exc:
        raise ConfigError(path, str(exc)) from None
    raise ConfigError(f"{path}.type", f"unknown measure type {kind!r}")


def _default_s0(model) -> Optional[float]:
    if isinstance(model, measure.UniformInterval):
        return 1.0
    if isinstance(model, measure.IfsSelfSimilar):
        return model.natural_dimension or model.similarity_dimension
    return None


def load_config(path: Optional[str], overrides: Optional[dict] = None) -> ExperimentConfig:
    raw: Dict[str, Any] = {}
    if path:
        try:
            with open(path, "rb") as fh:
                data = fh.read()
            raw = tomllib.loads(data.decode()) if path.endswith(".toml") else json.loads(data)
        except FileNotFoundError:
            raise ConfigError("--config", f"file not found: {path}") from None
        except (ValueError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError("--config", f"parse failure: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("--config", "top level must be a table")
    ov = {k: v for k, v in (overrides or {}).items() if v is not None}
    mspec = raw.get("measure")
    if mspec is None:
        raise ConfigError("measure.type", "missing")
    model = parse_model(mspec)
    depth = ov.get("depth", _get(mspec, "depth", "measure.depth", int, 8))
    if depth < 0:
        raise ConfigError("measure.depth", "must be non-negative")
    s0 = _get(mspec, "s0", "measure.s0", float, None)
    if s0 is None:
        s0 = _default_s0(model)
    if s0 is None or not s0 > 0:
        raise ConfigError("measure.s0", "required for this measure type")
    pk = raw.get("packing", {}) or {}
    bud = raw.get("budgets", {}) or {}
    cfg = ExperimentConfig(model=model, depth=depth, s0=float(s0), raw=raw)
    cfg.r = float(ov.get("r", _get(raw, "r", "r", float, 0.0)))
    if cfg.r < 0:
        raise ConfigError("r", "must be non-negative")
    cfg.n = ov.get("n", _get(raw, "n", "n", int, None))
    nr = raw.get("n_range")
    if nr is not None:
        if not (isinstance(nr, list) and len(nr) == 2):
            raise ConfigError("n_range", "expected [first, last]")
        cfg.n_range = (int(nr[0]), int(nr[1]))
    n_max = ov.get("n_max", _get(raw, "n_max", "n_max", int, None))
    if n_max is not None:
        cfg.n_range = (cfg.n_range[0], int(n_max))
    if cfg.n_range[0] < 1 or cfg.n_range[1] < cfg.n_range[0]:
        raise ConfigError("n_range", "must be a non-empty range of positive integers")
    cfg.m = ov.get("m", _get(pk, "m", "packing.m", int, None))
    k = ov.get("k", pk.get("k", [1, 2, 3]))
    ks = k if isinstance(k, list) else [k]
    try:
        cfg.k = tuple(int(v) for v in ks)
    except (TypeError, ValueError):
        raise ConfigError("packing.k", "expected an integer or list of integers") from None
    cfg.delta = ov.get("delta", _get(pk, "delta", "packing.delta", float, None))
    cfg.budget_cells = ov.get("budget_cells", _get(bud, "dp_cells", "budgets.dp_cells", int,
                                                   cfg.budget_cells))
    cfg.budget_aux = ov.get("budget_aux", _get(bud, "aux", "budgets.aux", int, cfg.budget_aux))
    cfg.budget_n = _get(bud, "n_max", "budgets.n_max", int, cfg.budget_n)
    cfg.oracle_grid = _get(bud, "oracle_grid", "budgets.oracle_grid", int, cfg.oracle_grid)
    for name, key in (("budget_cells", "budgets.dp_cells"), ("budget_aux", "budgets.aux"),
                      ("budget_n", "budgets.n_max"), ("oracle_grid", "budgets.oracle_grid")):
        if getattr(cfg, name) <= 0:
            raise ConfigError(key, "budgets must be positive")
    cfg.slack = _get(raw.get("slack", {}) or {}, "theorem", "slack.theorem", float, 2.0)
    cfg.seed_grid = ov.get("seed_grid", _get(raw, "seed_grid", "seed_grid", int, 64))
    if cfg.seed_grid < 3:
        raise ConfigError("seed_grid", "needs at least 3 seeds")
    cfg.out = ov.get("out", _get(raw, "out", "out", str, "out"))
    return cfg


# --------------------------------------------------------------------------
# output


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
        return v
    if isinstance(v, np.ndarray):
        return [_num(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {str(k): _num(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_num(x) for x in v]
    return v


def _atomic_write(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, obj):
    _atomic_write(path, json.dumps(_num(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n")


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.{SIG}g}"
    if v is None:
        return ""
    return str(v)


def write_csv(path: str, header: Sequence[str], rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    _atomic_write(path, buf.getvalue())


# --------------------------------------------------------------------------
# commands


def _dm(cfg: ExperimentConfig):
    return measure.discretize(cfg.model, cfg.depth)


def _profile(cfg, dm):
    return measure.ad_validate(dm, cfg.s0)


def _constants(cfg, prof, m=None):
    return covering.constants_from(prof.C1_hat, prof.C2_hat, prof.s0, 1, m=m, delta=cfg.delta)


def cmd_ad_check(cfg: ExperimentConfig) -> List[str]:
    dm = _dm(cfg)
    prof = _profile(cfg, dm)
    out = cfg.out
    write_json(os.path.join(out, "ad_profile.json"), {**prof.to_dict(), "depth": cfg.depth,
                                                      "cells": len(dm)})
    write_csv(os.path.join(out, "ad_profile.csv"), ["eps", "min_ratio", "max_ratio", "sup_ratio"],
              ([r["eps"], r["min_ratio"], r["max_ratio"], r["sup_ratio"]] for r in prof.rows()))
    return ["ad_profile.json", "ad_profile.csv"]


def cmd_quantize(cfg: ExperimentConfig) -> List[str]:
    if cfg.n is None or cfg.n < 1:
        raise ConfigError("n", "quantize needs n >= 1")
    dm = _dm(cfg)
    res = quantizer.dp_optimal_1d(dm, cfg.n, cfg.r, **cfg.dp_kw())
    stats = voronoi.cell_stats(voronoi.build_partition(dm, res.codebook), dm, cfg.r)
    write_json(os.path.join(cfg.out, "quantize.json"), {
        **res.to_dict(), "n_min_mass": stats.n_min_mass, "n_max_mass": stats.n_max_mass,
        "min_inradius_ratio": stats.min_inradius_ratio})
    write_csv(os.path.join(cfg.out, "cells.csv"),
              ["index", "point", "mass", "support_diameter", "inradius", "distortion"],
              ([c.index, c.point, c.mass, c.support_diameter, c.inradius, c.distortion]
               for c in stats.cells))
    return ["quantize.json", "cells.csv"]


def _n_max(cfg) -> int:
    n_max = cfg.n_range[1]
    if n_max > cfg.budget_n:
        raise BudgetError(f"n_max = {n_max} exceeds budgets.n_max = {cfg.budget_n}")
    return n_max


def cmd_sweep(cfg: ExperimentConfig) -> List[str]:
    dm = _dm(cfg)
    n_max = _n_max(cfg)
    curve = quantizer.error_curve(dm, n_max, cfg.r, budget=cfg.budget_n, **cfg.dp_kw())
    curve = [row for row in curve if row[0] >= cfg.n_range[0]]
    write_csv(os.path.join(cfg.out, "sweep.csv"), ["n", "objective", "error"], curve)
    write_json(os.path.join(cfg.out, "sweep.json"), {
        "r": cfg.r, "depth": cfg.depth,
        "rows": [{"n": n, "objective": o, "error": e} for n, o, e in curve]})
    ns = [row[0] for row in curve]
    svg = line_plot({"e_n": (ns, [row[2] for row in curve])}, title="quantization error",
                    ylabel="e_n")
    _atomic_write(os.path.join(cfg.out, "sweep.svg"), svg)
    return ["sweep.csv", "sweep.json", "sweep.svg"]


def _packing_m(cfg, prof) -> int:
    return cfg.m if cfg.m is not None else covering.packing_base(prof.C1_hat, prof.C2_hat, prof.s0)


def cmd_packing(cfg: ExperimentConfig) -> List[str]:
    dm = _dm(cfg)
    prof = _profile(cfg, dm)
    m = _packing_m(cfg, prof)
    K = _constants(cfg, prof, m)
    levels, rows = [], []
    for k in cfg.k:
        try:
            p = covering.build_packing(dm, prof, k, m=m)
        except MeasureError as exc:
            raise BudgetError(str(exc)) from None
        g = covering.neighbor_graph(p, K.delta)
        rep = covering.verify_packing_mass(p, dm, K)
        levels.append({**p.to_dict(), "M_sigma": g.M, "mass_values": rep.values,
                       "band": list(rep.band), "band_ok": rep.passed})
        rows.append([k, p.radius, p.phi, max(g.M), K.M0, p.disjoint(), p.covers_support(dm),
                     rep.passed, float(rep.values.min()), float(rep.values.max())])
    write_json(os.path.join(cfg.out, "packing.json"), {"m": m, "delta": K.delta, "levels": levels})
    write_csv(os.path.join(cfg.out, "packing.csv"),
              ["k", "radius", "phi_k", "max_M_sigma", "M0", "disjoint", "covered", "band_ok",
               "min_phi_mass", "max_phi_mass"], rows)
    write_json(os.path.join(cfg.out, "constants.json"), K.to_dict())
    return ["packing.json", "packing.csv", "constants.json"]


def cmd_aux(cfg: ExperimentConfig) -> List[str]:
    dm = _dm(cfg)
    prof = _profile(cfg, dm)
    m = _packing_m(cfg, prof)
    K = _constants(cfg, prof, m)
    k = cfg.k[0]
    try:
        p = covering.build_packing(dm, prof, k, m=m)
    except MeasureError as exc:
        raise BudgetError(str(exc)) from None
    g = covering.neighbor_graph(p, K.delta)
    est = analysis.estimate_aux_integers(dm, p, g, K, budget=cfg.budget_aux, seeds=cfg.seed_grid)
    write_json(os.path.join(cfg.out, "constants.json"), K.to_dict())
    write_json(os.path.join(cfg.out, "aux_integers.json"), {**est.to_dict(), "level": k, "m": m})
    return ["constants.json", "aux_integers.json"]


def cmd_verify_theorem(cfg: ExperimentConfig) -> List[str]:
    dm = _dm(cfg)
    n_max = _n_max(cfg)
    res = quantizer.dp_all(dm, n_max, cfg.r, **cfg.dp_kw())
    ns = list(range(cfg.n_range[0], n_max + 1))
    rep = analysis.theorem_report(dm, ns, cfg.r, slack=cfg.slack, results=res)
    write_csv(os.path.join(cfg.out, "theorem.csv"),
              ["n", "e_n", "n_min_mass", "n_max_mass", "min_inradius_ratio"],
              ([row.n, res[row.n].error, row.n_min_mass, row.n_max_mass, row.min_inradius_ratio]
               for row in rep.rows))
    summary = {k: v for k, v in rep.to_dict().items() if k != "rows"}
    write_json(os.path.join(cfg.out, "theorem.json"), summary)
    svg = line_plot({"n min mass": (ns, [r.n_min_mass for r in rep.rows]),
                     "n max mass": (ns, [r.n_max_mass for r in rep.rows]),
                     "inradius ratio": (ns, [r.min_inradius_ratio for r in rep.rows])},
                    title="cell mass band", ylabel="value")
    _atomic_write(os.path.join(cfg.out, "theorem.svg"), svg)
    return ["theorem.csv", "theorem.json", "theorem.svg"]


def cmd_gap_report(cfg: ExperimentConfig) -> List[str]:
    dm = _dm(cfg)
    scale = 1.0
    if dm.diameter > 1.0:
        scale = 1.0 / dm.diameter
        dm = measure.scale_translate(dm, scale, -dm.support_lo * scale)
    prof = _profile(cfg, dm)
    n_max = max(_n_max(cfg), 2)
    rep = analysis.gap_report(dm, n_max, prof, **cfg.dp_kw())
    write_csv(os.path.join(cfg.out, "gap.csv"),
              ["k", "gap", "zeta_k", "chi_k", "chi_k_minus_1", "d_low", "d_high", "lambda_k",
               "g_k_empirical"], rep.rows())
    write_json(os.path.join(cfg.out, "gap.json"), {**rep.to_dict(), "rescaled_by": scale})
    return ["gap.csv", "gap.json"]


def cmd_local_counts(cfg: ExperimentConfig) -> List[str]:
    if cfg.n is None or cfg.n < 1:
        raise ConfigError("n", "local-counts needs n >= 1")
    dm = _dm(cfg)
    prof = _profile(cfg, dm)
    m = _packing_m(cfg, prof)
    K = _constants(cfg, prof, m)
    try:
        p = covering.build_packing(dm, prof, cfg.k[0], m=m)
    except MeasureError as exc:
        raise BudgetError(str(exc)) from None
    g = covering.neighbor_graph(p, K.delta)
    res = quantizer.dp_optimal_1d(dm, cfg.n, cfg.r, **cfg.dp_kw())
    lc = analysis.local_count_report(dm, cfg.n, p, g, K, codebook=res, r=cfg.r)
    nb = analysis.neighborhood_report(dm, cfg.n, p, g, K, codebook=res)
    write_json(os.path.join(cfg.out, "local_counts.json"),
               {"local_counts": lc.to_dict(), "neighborhoods": [x.to_dict() for x in nb],
                "level": p.k, "m": m})
    write_csv(os.path.join(cfg.out, "local_counts.csv"),
              ["sigma", "center", "L_sigma", "sup_distance", "bound"],
              ([s, float(p.centers[s]), lc.L_sigma[s], lc.sup_distance[s], lc.bound]
               for s in range(p.phi)))
    return ["local_counts.json", "local_counts.csv"]


HANDLERS = {
    "ad-check": cmd_ad_check,
    "quantize": cmd_quantize,
    "sweep": cmd_sweep,
    "packing": cmd_packing,
    "aux-constants": cmd_aux,
    "verify-theorem": cmd_verify_theorem,
    "gap-report": cmd_gap_report,
    "local-counts": cmd_local_counts,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adquant", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out")
        p.add_argument("--n", type=int)
        p.add_argument("--n-max", dest="n_max", type=int)
        p.add_argument("--depth", type=int)
        p.add_argument("--r", type=float)
        p.add_argument("--m", type=int)
        p.add_argument("--k", type=int)
        p.add_argument("--delta", type=float)
        p.add_argument("--budget-cells", dest="budget_cells", type=int)
        p.add_argument("--budget-aux", dest="budget_aux", type=int)
        p.add_argument("--seed-grid", dest="seed_grid", type=int)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    overrides = {k: getattr(args, k) for k in ("out", "n", "n_max", "depth", "r", "m", "k",
                                               "delta", "budget_cells", "budget_aux", "seed_grid")}
    try:
        cfg = load_config(args.config, overrides)
        written = HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"adquant: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetError as exc:
        print(f"adquant: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (MeasureError, ValueError) as exc:
        print(f"adquant: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for name in written:
        print(os.path.join(cfg.out, name))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
