"""Command-line front end.

Subcommands ``metrics``, ``frontier``, ``ksbs`` and ``simulate`` read a
JSON study config; ``reproduce`` regenerates the reference tables.
Exit codes: 0 success, 1 reproduction outside tolerance, 2 invalid
config, 3 unstable parameters.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from .coc import mean_response_coc, mean_response_overall, mean_response_pair
from .cos import mixed_config_metrics, waiting_probabilities
from .desim import CSV_COLUMNS, SimScenario, simulate, simulate_mixed
from .erlang import erlang_c, provider_from_wait, standalone_delay
from .exceptions import ConfigError, DomainError, InstabilityError, NoFrontierError, PoolingError
from .pareto import (
    _cos_delay_corner,
    conjecture_check,
    config_grid,
    frontier_distance,
    ksbs,
    pareto_frontier,
    unit_frontier_closed_form,
)
from .params import ProviderParams, SharingConfig

log = logging.getLogger("redpool")

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_UNSTABLE = 0, 1, 2, 3

METRIC_COLUMNS = ("source",) + CSV_COLUMNS
FRONTIER_COLUMNS = ("k1", "k2", "B1", "B2", "undominated", "is_ksbs")
REPRODUCE_COLUMNS = ("target", "row", "quantity", "value", "reference", "abs_dev", "tol", "ok")

# reference values the reproduction is checked against
TABLE1 = {
    5: (0.3231, 1.0161, 0.3722, 1.0372, 0.1730, 1.0220),
    10: (0.2121, 1.0106, 0.2491, 1.0249, 0.1145, 1.0015),
    15: (0.1679, 1.0084, 0.1988, 1.0199, 0.0910, 1.0012),
    20: (0.1428, 1.0071, 0.1699, 1.0170, 0.0776, 1.0011),
}
TABLE1_COLUMNS = ("D1_coc", "D1_alone", "D2_coc", "D2_alone", "D_full_coc", "D_full_naive")
TABLE2 = {
    (10, 10): (1.82, 1.0, 1.0, 1.82, 1.82),
    (10, 30): (6.65, 0.69, 1.0, 5.54, 14.54),
    (10, 50): (13.85, 0.37, 1.0, 8.26, 37.30),
}
TABLE2_COLUMNS = ("C_full_pct", "k1", "k2", "C1_pct", "C2_pct")
INTRO = (((16, 20), 0.25), ((28, 30), 0.62), ((44, 50), 0.28))
TOL_TABLE1 = 1e-3
TOL_PCT = 0.05
TOL_K = 0.01
TOL_INTRO = 0.005


# ---------------------------------------------------------------------------
# config handling


def load_config(path: str) -> dict:
    """Parse a JSON config, turning syntax errors into ``path:line:col`` diagnostics."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}:1:1: top level must be an object")
    return cfg


def _number(d, key, where, required=True, default=None):
    if key not in d:
        if required:
            raise ConfigError(f"{where}: missing '{key}'")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: '{key}' must be a number, got {v!r}")
    return v


def parse_providers(cfg: dict) -> tuple[ProviderParams, ProviderParams]:
    provs = cfg.get("providers")
    if not isinstance(provs, list) or len(provs) != 2:
        raise ConfigError("'providers' must be a list of exactly two objects")
    out = []
    for i, p in enumerate(provs, start=1):
        where = f"providers[{i - 1}]"
        if not isinstance(p, dict):
            raise ConfigError(f"{where}: must be an object")
        unknown = set(p) - {"lambda", "nu", "n", "standalone_wait"}
        if unknown:
            raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
        n = _number(p, "n", where)
        if int(n) != n or n < 1:
            raise ConfigError(f"{where}: 'n' must be a positive integer")
        nu = _number(p, "nu", where, required=False, default=1.0)
        if ("lambda" in p) == ("standalone_wait" in p):
            raise ConfigError(f"{where}: give exactly one of 'lambda' and 'standalone_wait'")
        try:
            if "lambda" in p:
                out.append(ProviderParams(_number(p, "lambda", where), nu, int(n)))
            else:
                out.append(provider_from_wait(_number(p, "standalone_wait", where), int(n), nu))
        except InstabilityError:
            raise
        except DomainError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
    for p in out:
        p.check_stable()
    return out[0], out[1]


def parse_configs(cfg: dict, p1: ProviderParams, p2: ProviderParams) -> list[tuple[float, float]]:
    k = cfg.get("k", [0, 0])
    if isinstance(k, dict):
        if set(k) != {"grid"}:
            raise ConfigError("'k' object must be {\"grid\": step}")
        step = _number(k, "grid", "k")
        try:
            K = config_grid(p1.n_servers, p2.n_servers, step)
        except DomainError as exc:
            raise ConfigError(f"k: {exc}") from exc
        return [tuple(map(float, row)) for row in K]
    if isinstance(k, list) and len(k) == 2 and all(isinstance(v, (int, float)) for v in k):
        ks = [k]
    elif isinstance(k, list) and all(isinstance(v, list) and len(v) == 2 for v in k):
        ks = k
    else:
        raise ConfigError("'k' must be [k1, k2], a list of such pairs, or {\"grid\": step}")
    out = []
    for pair in ks:
        try:
            c = SharingConfig(float(pair[0]), float(pair[1])).check_within(p1.n_servers, p2.n_servers)
        except (DomainError, TypeError, ValueError) as exc:
            raise ConfigError(f"k: {exc}") from exc
        out.append(c.as_tuple())
    return out


def _choice(cfg, key, options, default):
    v = cfg.get(key, default)
    if v not in options:
        raise ConfigError(f"'{key}' must be one of {list(options)}, got {v!r}")
    return v


def _grid_step(cfg):
    k = cfg.get("k")
    if isinstance(k, dict) and "grid" in k:
        return _number(k, "grid", "k")
    return None


def _scenario(cfg, p1, p2, policy, k, seed) -> tuple[SimScenario, int]:
    sim = cfg.get("sim") or {}
    if not isinstance(sim, dict):
        raise ConfigError("'sim' must be an object")
    allowed = {"horizon", "warmup", "replications", "assignment", "switch_epochs", "batches", "seed"}
    unknown = set(sim) - allowed
    if unknown:
        raise ConfigError(f"sim: unknown keys {sorted(unknown)}")
    horizon = int(_number(sim, "horizon", "sim", required=False, default=1_100_000))
    warmup = sim.get("warmup")
    if seed is None:
        seed = int(_number(sim, "seed", "sim", required=False, default=0))
    try:
        scn = SimScenario(p1, p2, SharingConfig(0, 0), policy, horizon,
                          None if warmup is None else int(warmup), int(seed),
                          int(_number(sim, "replications", "sim", required=False, default=1)),
                          sim.get("assignment", "arc"),
                          int(_number(sim, "batches", "sim", required=False, default=30)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"sim: {exc}") from exc
    return scn, int(_number(sim, "switch_epochs", "sim", required=False, default=200))


def _run_sim(scn: SimScenario, k, epochs, jobs):
    if float(k[0]).is_integer() and float(k[1]).is_integer():
        return simulate(replace(scn, cfg=SharingConfig(int(k[0]), int(k[1]))), n_jobs=jobs)
    return simulate_mixed(scn, k[0], k[1], switch_epochs=epochs, n_jobs=jobs)


# ---------------------------------------------------------------------------
# commands


def _analytic_rows(policy, p1, p2, k) -> list[dict]:
    rows = []

    def row(metric, value):
        rows.append({"source": "analytic", "policy": policy, "k1": k[0], "k2": k[1], "metric": metric,
                     "estimate": value, "stderr": "", "ci_lo": "", "ci_hi": "", "jobs": "", "seed": ""})

    if policy == "coc":
        if not (float(k[0]).is_integer() and float(k[1]).is_integer()):
            raise ConfigError("cancel-on-complete pooling needs integer 'k'")
        d = mean_response_pair(p1, p2, (int(k[0]), int(k[1])))
        row("D1", d[0])
        row("D2", d[1])
    else:
        c = mixed_config_metrics(p1, p2, k[0], k[1])
        row("C1", c[0])
        row("C2", c[1])
        d = mixed_config_metrics(p1, p2, k[0], k[1], corner_metric=_cos_delay_corner)
        row("D1", d[0])
        row("D2", d[1])
    return rows


def cmd_metrics(cfg, args) -> tuple[list[dict], tuple]:
    p1, p2 = parse_providers(cfg)
    policy = _choice(cfg, "policy", ("coc", "cos"), "cos")
    rows = []
    for k in parse_configs(cfg, p1, p2):
        rows += _analytic_rows(policy, p1, p2, k)
        if cfg.get("sim") is not None:
            scn, epochs = _scenario(cfg, p1, p2, policy, k, args.seed)
            res = _run_sim(scn, k, epochs, args.jobs)
            rows += [dict(r, source="simulation") for r in res.rows()]
    return rows, METRIC_COLUMNS


def _frontier_rows(points):
    return [{"k1": p.k[0], "k2": p.k[1], "B1": p.metrics[0], "B2": p.metrics[1],
             "undominated": int(p.undominated), "is_ksbs": int(p.is_ksbs)} for p in points]


def cmd_frontier(cfg, args):
    p1, p2 = parse_providers(cfg)
    policy = _choice(cfg, "policy", ("coc", "cos"), "cos")
    metric = _choice(cfg, "metric", ("wait", "delay"), "wait" if policy == "cos" else "delay")
    step = _grid_step(cfg)
    front = pareto_frontier(p1, p2, policy, metric, step)
    points = list(front)
    if front:
        points.append(ksbs(p1, p2, policy, metric, step))
    return _frontier_rows(points), FRONTIER_COLUMNS


def cmd_ksbs(cfg, args):
    p1, p2 = parse_providers(cfg)
    policy = _choice(cfg, "policy", ("coc", "cos"), "cos")
    metric = _choice(cfg, "metric", ("wait", "delay"), "wait" if policy == "cos" else "delay")
    point = ksbs(p1, p2, policy, metric, _grid_step(cfg))
    return _frontier_rows([point]), FRONTIER_COLUMNS


def cmd_simulate(cfg, args):
    p1, p2 = parse_providers(cfg)
    policy = _choice(cfg, "policy", ("coc", "cos"), "cos")
    rows = []
    for k in parse_configs(cfg, p1, p2):
        scn, epochs = _scenario(cfg, p1, p2, policy, k, args.seed)
        rows += _run_sim(scn, k, epochs, args.jobs).rows()
    return rows, CSV_COLUMNS


def _check(target, row, quantity, value, reference, tol):
    if isinstance(reference, str):
        ok = value == reference
        dev = ""
    else:
        dev = abs(value - reference)
        ok = dev <= tol
    return {"target": target, "row": row, "quantity": quantity, "value": value, "reference": reference,
            "abs_dev": dev, "tol": tol, "ok": int(ok)}


def reproduce_intro():
    return [_check("intro", f"rho={rho},n={n}", "erlang_c", erlang_c(rho, n), ref, TOL_INTRO)
            for (rho, n), ref in INTRO]


def reproduce_table1():
    rows = []
    for n, refs in TABLE1.items():
        p1, p2 = provider_from_wait(0.05, n), provider_from_wait(0.10, n)
        pooled = ProviderParams(p1.lam + p2.lam, 1.0, 2 * n)
        values = (mean_response_coc(p1, p2, (0, 0), 1), standalone_delay(p1),
                  mean_response_coc(p1, p2, (0, 0), 2), standalone_delay(p2),
                  mean_response_overall(p1, p2, (n, n)), standalone_delay(pooled))
        rows += [_check("table1", f"N={n}", q, v, r, TOL_TABLE1) for q, v, r in zip(TABLE1_COLUMNS, values, refs)]
    return rows


def reproduce_table2():
    rows = []
    for (w1, w2), refs in TABLE2.items():
        p1, p2 = provider_from_wait(w1 / 100, 1), provider_from_wait(w2 / 100, 1)
        full = waiting_probabilities(p1, p2, (1, 1))[0]
        pt = ksbs(p1, p2, "cos", "wait", 0.01)
        values = (100 * full, pt.k[0], pt.k[1], 100 * pt.metrics[0], 100 * pt.metrics[1])
        tols = (TOL_PCT, TOL_K, TOL_K, TOL_PCT, TOL_PCT)
        rows += [_check("table2", f"{w1}|{w2}", q, v, r, t)
                 for q, v, r, t in zip(TABLE2_COLUMNS, values, refs, tols)]
    return rows


def reproduce_fig3():
    rows = []
    for (w1, w2), case in (((30, 10), "both-benefit"), ((50, 10), "one-benefits")):
        p1, p2 = provider_from_wait(w1 / 100, 1), provider_from_wait(w2 / 100, 1)
        fs = unit_frontier_closed_form(p1, p2)
        front = pareto_frontier(p1, p2, "cos", "wait", 0.01)
        tag = f"{w1}|{w2}"
        rows.append(_check("fig3", tag, "case", fs.case, case, ""))
        full_on = any(p.k == (1.0, 1.0) for p in front)
        rows.append(_check("fig3", tag, "full_pooling_on_frontier", str(full_on),
                           str(case == "both-benefit"), ""))
        dist = frontier_distance([p.k for p in front], fs)
        rows.append(_check("fig3", tag, "hausdorff_grid_vs_exact", dist, 0.0, 0.01 + 1e-12))
    return rows


def reproduce_fig4():
    rows = []
    for w1, w2 in ((10, 50), (20, 50)):
        p1, p2 = provider_from_wait(w1 / 100, 2), provider_from_wait(w2 / 100, 2)
        rep = conjecture_check(p1, p2, 0.05)
        tag = f"{w1}|{w2}"
        rows.append(_check("fig4", tag, "points_beyond_one_cell", len(rep.off_boundary), 0, 0))
        rows.append(_check("fig4", tag, "beyond_one_cell_undominated", len(rep.counterexamples), 0, 0))
    return rows


REPRODUCE = {"intro": reproduce_intro, "table1": reproduce_table1, "table2": reproduce_table2,
             "fig3": reproduce_fig3, "fig4": reproduce_fig4}


# ---------------------------------------------------------------------------
# output and entry point


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def emit(rows, columns, fmt: str, out: str | None):
    if fmt == "json":
        plain = [{c: (float(v) if isinstance(v, np.floating) else v) for c, v in ((c, r.get(c, "")) for c in columns)}
                 for r in rows]
        text = json.dumps(plain, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({c: _fmt(r.get(c, "")) for c in columns})
        text = buf.getvalue()
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, help="simulation seed (unsigned 64-bit)")
    common.add_argument("--jobs", type=int, default=1, help="parallel simulation replications")
    parser = argparse.ArgumentParser(prog="redpool", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, hlp in (("metrics", "waiting probabilities and mean response times"),
                      ("frontier", "grid Pareto frontier plus the bargaining point"),
                      ("ksbs", "Kalai-Smorodinsky bargaining point"),
                      ("simulate", "discrete-event simulation")):
        p = sub.add_parser(name, parents=[common], help=hlp)
        p.add_argument("--config", required=True, help="JSON study config")
    p = sub.add_parser("reproduce", parents=[common], help="regenerate a reference table")
    p.add_argument("target", choices=sorted(REPRODUCE))
    p.add_argument("--config", help="ignored; accepted for a uniform interface")
    return parser


COMMANDS = {"metrics": cmd_metrics, "frontier": cmd_frontier, "ksbs": cmd_ksbs, "simulate": cmd_simulate}


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("POOLING_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.seed is not None and not (0 <= args.seed < 1 << 64):
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "reproduce":
            rows = REPRODUCE[args.target]()
            emit(rows, REPRODUCE_COLUMNS, args.format, args.out)
            return EXIT_OK if all(r["ok"] for r in rows) else EXIT_MISMATCH
        cfg = load_config(args.config)
        out = args.out or cfg.get("out")
        rows, columns = COMMANDS[args.command](cfg, args)
        emit(rows, columns, args.format, out)
        return EXIT_OK
    except InstabilityError as exc:
        print(f"error: unstable parameters: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except (ConfigError, DomainError, NoFrontierError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PoolingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
