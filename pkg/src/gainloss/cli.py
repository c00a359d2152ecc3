"""Command-line interface.

    gainloss calibrate <csv>
    gainloss price --model {1|2} --eps <f> --y <f> [--cache <path>]
    gainloss solve-h --out <dir>
    gainloss simulate --model {1|2} [--sweep <param> --values a,b,c]
    gainloss reproduce <target> [--out <dir>]

Exit codes: 0 success, 1 argument/config/data error, 2 model or solver error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import model1, model2, reference
from .config import ConfigError, RunConfig, build_config, read_config_file
from .montecarlo import conditional_series, simulate_moments, sweep
from .numerics import (NonConvergenceError, NumericalError, default_grid, gauss_hermite,
                       load_grid_function, save_grid_function)
from .processes import (DataError, DomainError, MarketState, eps_moments, mle_calibrate,
                        read_series_csv, stationary_log_y)


class ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ArgError(message)


def _global_flags():
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--config", help="flat key = value settings file")
    g.add_argument("--seed", type=int)
    g.add_argument("--format", choices=("csv", "json"))
    g.add_argument("--quad-order", type=int)
    g.add_argument("--grid", help="<ne>x<ny>")
    g.add_argument("--law", choices=("ar1", "iid_ratio"),
                   help="transition law for log Y used in pricing")
    for k in ("beta", "theta", "b", "lambda", "gamma"):
        g.add_argument(f"--{k}", type=float)
    return g


def build_parser() -> argparse.ArgumentParser:
    glob = _global_flags()
    p = _Parser(prog="gainloss", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    c = sub.add_parser("calibrate", parents=[glob], help="MLE of the state processes from a CSV")
    c.add_argument("csv_path")

    pr = sub.add_parser("price", parents=[glob], help="conditional prices at one state")
    pr.add_argument("--model", type=int, choices=(1, 2))
    pr.add_argument("--eps", type=float, required=True)
    pr.add_argument("--y", type=float, required=True)
    pr.add_argument("--cache", help="solved h cache (Model I)")

    s = sub.add_parser("solve-h", parents=[glob], help="solve h and write the cache files")
    s.add_argument("--out", required=True)

    sm = sub.add_parser("simulate", parents=[glob], help="unconditional moments from a simulated panel")
    sm.add_argument("--model", type=int, choices=(1, 2))
    sm.add_argument("--sweep", choices=("lambda", "b", "gamma", "theta", "beta"))
    sm.add_argument("--values")
    sm.add_argument("--n-paths", type=int)
    sm.add_argument("--horizon", type=int)
    sm.add_argument("--burn-in", type=int)

    r = sub.add_parser("reproduce", parents=[glob], help="recompute a published table or figure series")
    r.add_argument("target", help="table2..table8, figure1, figure2 or a table key")
    r.add_argument("--out")
    r.add_argument("--n-paths", type=int)
    r.add_argument("--horizon", type=int)
    r.add_argument("--burn-in", type=int)
    return p


def _config(args) -> RunConfig:
    vals = read_config_file(args.config) if getattr(args, "config", None) else {}
    over = {"seed": args.seed, "format": args.format, "quad_order": args.quad_order,
            "grid": args.grid, "law": args.law, "beta": args.beta, "theta": args.theta,
            "b": args.b, "lambda": getattr(args, "lambda"), "gamma": args.gamma,
            "model": getattr(args, "model", None), "n_paths": getattr(args, "n_paths", None),
            "horizon": getattr(args, "horizon", None), "burn_in": getattr(args, "burn_in", None)}
    vals.update({k: v for k, v in over.items() if v is not None})
    return build_config(vals)


def _emit(obj, fmt, out):
    if fmt == "json":
        out.write(json.dumps(obj, indent=1, sort_keys=False) + "\n")
        return
    rows = obj if isinstance(obj, list) else [obj]
    flat = [{k: v for k, v in r.items() if not isinstance(v, (dict, list))} for r in rows]
    w = csv.DictWriter(out, fieldnames=list(flat[0]), lineterminator="\n")
    w.writeheader()
    for r in flat:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})


def _grid(cfg: RunConfig):
    return default_grid(cfg.params, *cfg.grid)


def _solve(cfg: RunConfig):
    return model1.solve_h(cfg.prefs, cfg.params, _grid(cfg), cfg.tol, cfg.max_iter,
                          gauss_hermite(cfg.quad_order), cfg.law or model1.DEFAULT_LAW)


def cmd_calibrate(args, cfg, out):
    try:
        _, c, d = read_series_csv(args.csv_path)
    except OSError as e:
        raise DataError(f"cannot read {args.csv_path}: {e}") from None
    rep = mle_calibrate(c, d).report()
    _emit(rep, cfg.fmt, out)


def cmd_price(args, cfg, out):
    state = MarketState(args.eps, args.y)
    if cfg.model == 2:
        p = model2.price2(cfg.prefs.replace(gamma=0.0), cfg.params, state,
                          gauss_hermite(cfg.quad_order), cfg.law or model2.DEFAULT_LAW)
    else:
        if args.cache:
            sol = load_solution(args.cache, cfg)
        else:
            sol = _solve(cfg)
        p = model1.price1(cfg.prefs, cfg.params, sol, state)
    _emit({"model": cfg.model, "eps_c": args.eps, "y": args.y, **p.as_dict()}, cfg.fmt, out)


def load_solution(path, cfg: RunConfig) -> model1.HSolution:
    gf = load_grid_function(path)
    meta = gf.meta
    sol = model1.HSolution(gf, int(meta["iterations"]), float(meta["final_residual"]),
                           float(meta.get("contraction_ratio_estimate", math.nan)),
                           int(gf.clamp_count), float(meta.get("clamp_share", 0.0)), [],
                           bool(meta.get("monotone", True)), float(meta["tol"]),
                           cfg.prefs, cfg.params, meta.get("law", model1.DEFAULT_LAW))
    stored_p = meta.get("prefs")
    if stored_p is not None and stored_p != dict(cfg.prefs.__dict__):
        raise model2.PricingError("cached h was solved for different preference parameters")
    stored_q = meta.get("params")
    if stored_q is not None and stored_q != dict(cfg.params.__dict__):
        raise model2.PricingError("cached h was solved for different process parameters")
    return sol


def cmd_solve_h(args, cfg, out):
    sol = _solve(cfg)
    meta = sol.metadata()
    sol.h.meta.update(meta)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    save_grid_function(sol.h, outdir / "h")
    _emit({**{k: v for k, v in meta.items() if not isinstance(v, dict)},
           "cache": str(outdir / "h")}, cfg.fmt, out)


def cmd_simulate(args, cfg, out):
    rule = gauss_hermite(cfg.quad_order)
    if args.sweep:
        if not args.values:
            raise ArgError("--sweep needs --values")
        try:
            values = [float(v) for v in args.values.split(",")]
        except ValueError:
            raise ArgError(f"--values: cannot parse {args.values!r}") from None
        res = sweep(cfg.prefs, cfg.params, cfg.model, args.sweep, values, cfg.sim,
                    cfg.law, _grid(cfg), rule)
        rows = [{args.sweep: v, **r.row()} for v, r in res]
    else:
        prefs = cfg.prefs if cfg.model == 1 else cfg.prefs.replace(gamma=0.0)
        sol = _solve(cfg) if cfg.model == 1 else None
        r = simulate_moments(prefs, cfg.params, cfg.model, cfg.sim, sol, cfg.law, rule)
        rows = [{"model": cfg.model, **r.row(), "n_paths": r.n_paths, "horizon": r.horizon,
                 "burn_in": r.burn_in, "seed": r.seed}]
    _emit(rows if cfg.fmt == "csv" or len(rows) > 1 else rows[0], cfg.fmt, out)


FIGURE_EPS = (0.906, 1.242, 25)     # about exp(mu_c -+ 3 sigma_c)
FIGURE_Y = (10.0, 31.0, 22)         # historical range of the consumption-dividend ratio
FIGURE_Y_FIXED = 21.07
FIGURE_EPS_FIXED = 1.05


def figure_series(target: str, cfg: RunConfig):
    """Rows for both models along eps_c (figure1) or Y (figure2)."""
    rule = gauss_hermite(cfg.quad_order)
    if target == "figure1":
        xs, axis, fixed = np.linspace(*FIGURE_EPS), "eps", FIGURE_Y_FIXED
    else:
        xs, axis, fixed = np.linspace(*FIGURE_Y), "y", FIGURE_EPS_FIXED
    sol = _solve(cfg)
    r1 = conditional_series(cfg.prefs, cfg.params, 1, axis, xs, fixed, sol, sol.law, rule)
    r2 = conditional_series(cfg.prefs.replace(gamma=0.0), cfg.params, 2, axis, xs, fixed,
                            None, cfg.law or reference.PUBLISHED_LAW[2], rule)
    rows = []
    for a, b in zip(r1, r2):
        rows.append({"x": a["x"], "rf_model1": a["rf"], "pd_model1": a["pd"], "erp_model1": a["erp"],
                     "rf_model2": b["rf"], "pd_model2": b["pd"], "erp_model2": b["erp"]})
    return rows


def figure_checks(target: str, rows) -> list:
    checks = [("model1_rf_below_model2", all(r["rf_model1"] < r["rf_model2"] for r in rows)),
              ("model1_pd_above_model2", all(r["pd_model1"] > r["pd_model2"] for r in rows))]
    rf1 = np.array([r["rf_model1"] for r in rows])
    if target == "figure1":
        pd1 = np.array([r["pd_model1"] for r in rows])
        checks.append(("model1_rf_decreasing", bool(np.all(np.diff(rf1) < 0))))
        checks.append(("model1_pd_increasing", bool(np.all(np.diff(pd1) > 0))))
    else:
        spread = float((rf1.max() - rf1.min()) / rf1.mean())
        checks.append((f"model1_rf_spread_below_1pct (spread {spread:.4%})", spread < 0.01))
    return checks


def cmd_reproduce(args, cfg, out):
    target = args.target
    if target in ("figure1", "figure2"):
        rows = figure_series(target, cfg)
        checks = figure_checks(target, rows)
        summary = {"target": target, "checks": [{"name": n, "pass": bool(ok)} for n, ok in checks],
                   "all_pass": all(ok for _, ok in checks)}
    else:
        try:
            key = reference.resolve(target)
        except KeyError as e:
            raise ArgError(str(e.args[0])) from None
        comp = reference.compute_table(key, cfg.params, cfg.sim, cfg.law, _grid(cfg),
                                       gauss_hermite(cfg.quad_order))
        cells = reference.compare(key, comp)
        rows = [{"column": c.column, "quantity": c.quantity, "computed": c.computed,
                 "reference": c.reference, "rel_dev": c.rel_dev, "tol": c.tol, "rule": c.rule,
                 "pass": c.passed} for c in cells]
        summary = {"target": target, "table": key, "cells": len(cells),
                   "passed": sum(c.passed for c in cells),
                   "failed": [f"{c.column}:{c.quantity}" for c in cells if not c.passed],
                   "all_pass": all(c.passed for c in cells)}
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        buf = io.StringIO()
        _emit(rows, "csv", buf)
        (d / f"{target}.csv").write_text(buf.getvalue())
        (d / f"{target}_summary.json").write_text(json.dumps(summary, indent=1) + "\n")
    _emit(rows if cfg.fmt == "csv" else {"summary": summary, "rows": rows}, cfg.fmt, out)


COMMANDS = {"calibrate": cmd_calibrate, "price": cmd_price, "solve-h": cmd_solve_h,
            "simulate": cmd_simulate, "reproduce": cmd_reproduce}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        cfg = _config(args)
        COMMANDS[args.cmd](args, cfg, out)
    except (ArgError, ConfigError, DataError, DomainError) as e:
        err.write(f"error: {e}\n")
        return 1
    except (model2.PricingError, NonConvergenceError, NumericalError) as e:
        err.write(f"model error: {e}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
