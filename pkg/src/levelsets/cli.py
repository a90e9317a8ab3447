"""Batch experiment runner: ``levelsets [COMMAND] --config PATH [options]``.

Every command reads a ``key = value`` config (see ``levelsets.config``),
validates all of it before computing anything, keeps results in memory
and writes them only once the run has succeeded, together with a
``manifest.json``. Exit codes: 0 success, 1 configuration error,
2 infeasible parameters, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
import scipy

from . import __version__, seeding
from .bounds import (
    UNBOUNDED_M,
    Ball,
    BoundParams,
    Sphere,
    alpha_interval,
    bound_breakdown,
    crofton_constant,
    feasible_p_max,
    is_feasible,
)
from .config import COMMANDS, REQUIRED, Config, build_distribution, build_field, build_kernel, build_process
from .config import moment_order, seed_value
from .diagnostics import (
    check_density_condition,
    check_density_condition_radial,
    check_shotnoise_H2,
    compare_bound,
    crossing_counts,
)
from .errors import ConfigError, InfeasibleError, NumericError
from .geometry import CroftonPlan, estimate_level_measure_ball, estimate_level_measure_sphere
from .kacrice import DEFAULT_DELTAS, estimate_R_profile, verify_kac_rice
from .simulate.sampling import draw_paths, sample_field
from .simulate.specs import DeterministicField
from .stats import MomentEstimate, moment_estimate

log = logging.getLogger("levelsets")

TOOL = "levelsets"
MANIFEST = "manifest.json"

MOMENTS_HEADER = ("spec_id", "u", "p", "n", "estimate", "stderr", "ci_low", "ci_high")
CROFTON_HEADER = ("spec_id", "u", "n_probes", "estimate", "stderr", "ci_low", "ci_high", "degenerate_probes")
KACRICE_HEADER = ("spec_id", "u", "delta", "mean", "stderr")
BOUNDS_HEADER = ("k", "h", "m", "p", "alpha", "E_value", "D_value", "bound")
COUNTS_HEADER = ("spec_id", "replicate", "seed", "u", "count", "undercount", "degenerate")
CONDITIONS_HEADER = ("condition_name", "value", "converged")
REPORT_HEADER = ("spec_id", "u", "p", "n", "estimate", "ci_low", "ci_high", "bound", "satisfied", "margin")


# ---------------------------------------------------------------------------
# output tables


def fmt(x) -> str:
    """CSV cell: reals with 17 significant digits, booleans lower case."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _json_cell(x):
    if isinstance(x, (np.generic,)):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return "+inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return x


@dataclass
class Table:
    name: str
    header: tuple
    rows: List[tuple] = field(default_factory=list)

    def render(self, fmt_name: str) -> tuple:
        if fmt_name == "json":
            body = [dict(zip(self.header, (_json_cell(c) for c in r))) for r in self.rows]
            return self.name + ".json", json.dumps(body, indent=2) + "\n"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow([fmt(c) for c in r])
        return self.name + ".csv", buf.getvalue()


@dataclass
class Result:
    tables: List[Table] = field(default_factory=list)
    documents: dict = field(default_factory=dict)  # file name -> JSON-ready object
    files: dict = field(default_factory=dict)  # file name -> text
    summary: List[str] = field(default_factory=list)


@dataclass
class Context:
    cfg: Config
    seed: Optional[int]
    threads: int
    executor: Optional[ThreadPoolExecutor]
    format: str = "csv"
    spec_id: str = ""


# ---------------------------------------------------------------------------
# commands: each planner consumes its config keys and returns a runner


def _bound_row(k, h, m, p, C, D_m, domain, length, alpha, tol):
    m_label = "inf" if m is UNBOUNDED_M else m
    if not is_feasible(k, h, m, p):
        if m is UNBOUNDED_M:
            raise InfeasibleError(f"p={p} violates p < (k - h/2)(h + 1) - 1 for k={k}, h={h}, m=inf")
        alpha_interval(k, h, m, p)  # raises with the violated inequality
    if m is UNBOUNDED_M:
        return (k, h, m_label, p, None, None, None, None)
    size = {"interval": length, "ball": 2 * getattr(domain, "a", 1.0), "sphere": 2 * math.pi}[_domain_name(domain)]
    bd = bound_breakdown(BoundParams(k, h, m, p, C, D_m, size, alpha), tol)
    scale = 1.0 if domain is None else crofton_constant(domain) ** p
    return (k, h, m_label, p, bd.alpha, bd.E.value + bd.E.tail_bound, bd.D.value + bd.D.tail_bound,
            scale * bd.bound)


def _domain_name(domain):
    if domain is None:
        return "interval"
    return "ball" if isinstance(domain, Ball) else "sphere"


def _read_bound_spec(cfg: Config, prefix: str = "bound."):
    k = cfg.get_int(prefix + "k", REQUIRED)
    h = cfg.get_int(prefix + "h", REQUIRED)
    m = moment_order(cfg, prefix + "m")
    C = cfg.get_float(prefix + "C", 0.0)
    D_m = cfg.get_float(prefix + "D_m", 0.0)
    length = cfg.get_float(prefix + "length", 2 * math.pi)
    alpha = cfg.get_float(prefix + "alpha", None)
    tol = cfg.get_float(prefix + "tol", 1e-10)
    kind = cfg.get_str(prefix + "domain", "interval", choices=("interval", "ball", "sphere"))
    domain = None
    if kind == "ball":
        domain = Ball(cfg.get_int(prefix + "d", 2), cfg.get_float(prefix + "a", 1.0))
    elif kind == "sphere":
        domain = Sphere(cfg.get_int(prefix + "d", 2))
    try:
        BoundParams(k, h, 1 if m is UNBOUNDED_M else m, 1, C, D_m, length)
    except ValueError as exc:
        raise ConfigError(f"bound parameters: {exc}", key=prefix + "k") from exc
    return dict(k=k, h=h, m=m, C=C, D_m=D_m, domain=domain, length=length, alpha=alpha, tol=tol)


def plan_bound(ctx: Context) -> Callable[[], Result]:
    cfg = ctx.cfg
    spec = _read_bound_spec(cfg)
    raw_p = cfg.get_str("bound.p", "max")
    p_list = None
    if raw_p != "max":
        p_list = cfg.get_ints("bound.p")
        cfg.require("bound.p", all(p >= 1 for p in p_list), "moment orders must be >= 1")

    def run():
        k, h, m = spec["k"], spec["h"], spec["m"]
        m_label = "inf" if m is UNBOUNDED_M else m
        res = Result()
        table = Table("bounds", BOUNDS_HEADER)
        if p_list is None:
            pmax = feasible_p_max(k, h, m)
            if pmax is None:
                raise InfeasibleError(f"no p >= 1 is feasible for k={k}, h={h}, m={m_label}")
            table.rows.append((k, h, m_label, pmax, None, None, None, None))
            res.summary.append(f"k={k} h={h} m={m_label}: max p = {pmax}")
        else:
            for p in p_list:
                row = _bound_row(k, h, m, p, spec["C"], spec["D_m"], spec["domain"], spec["length"],
                                 spec["alpha"], spec["tol"])
                table.rows.append(row)
                res.summary.append(f"k={k} h={h} m={m_label} p={p}: bound = {fmt(row[-1]) or 'finite'}")
        res.tables.append(table)
        return res

    return run


def _spec_id(cfg: Config, default: str) -> str:
    return cfg.get_str("spec_id", default)


def _levels(cfg: Config):
    return cfg.get_floats("u", [0.0])


def _require_seed(ctx: Context):
    if ctx.seed is None:
        ctx.seed = seed_value(ctx.cfg, None)
    return ctx.seed


def _counting(cfg: Config):
    base_step = cfg.get_float("base_step", 0.01)
    refine_tol = cfg.get_float("refine_tol", 1e-10)
    cfg.require("base_step", base_step > 0, "must be positive")
    cfg.require("refine_tol", refine_tol > 0, "must be positive")
    return base_step, refine_tol


def _process(ctx: Context):
    cfg = ctx.cfg
    spec = build_process(cfg)
    ctx.spec_id = _spec_id(cfg, spec.kind)
    interval = cfg.get_floats("interval", None)
    if interval is not None:
        cfg.require("interval", len(interval) == 2 and interval[1] > interval[0], "expected 'a, b' with a < b")
        interval = tuple(interval)
    return spec, interval


def plan_simulate(ctx: Context):
    cfg = ctx.cfg
    spec, interval = _process(ctx)
    seed = _require_seed(ctx)
    n = cfg.get_int("replicates", 1)
    order = cfg.get_int("order", 1)
    step = cfg.get_float("grid.step", 0.01)
    cfg.require("replicates", 1 <= n <= 10_000, "must lie in [1, 10000]")
    cfg.require("order", 0 <= order <= 8, "must lie in [0, 8]")
    cfg.require("grid.step", step > 0, "must be positive")

    def run():
        seeds = seeding.derive_seeds(seed, 0, n)
        batch = draw_paths(spec, seeds, interval, order=max(order, 1))
        lo, hi = batch.interval
        grid = np.linspace(lo, hi, int(math.ceil((hi - lo) / step)) + 1)
        res = Result()
        for i in range(n):
            sample = batch.path.sample(i, grid, order, int(seeds[i]), batch.truncation_error)
            if ctx.format == "json":
                res.documents[f"path_{i:05d}.json"] = {
                    "seed": int(seeds[i]), "truncation_error": batch.truncation_error,
                    "t": grid.tolist(), "derivatives": [d.tolist() for d in sample.derivatives]}
            else:
                res.files[f"path_{i:05d}.csv"] = sample.to_csv()
        res.summary.append(f"{n} path(s) of {ctx.spec_id} on [{lo:g}, {hi:g}] with {len(grid)} grid points")
        return res

    return run


def plan_count(ctx: Context):
    cfg = ctx.cfg
    spec, interval = _process(ctx)
    seed = _require_seed(ctx)
    n = cfg.get_int("replicates", 100)
    cfg.require("replicates", n >= 1, "must be >= 1")
    levels = _levels(cfg)
    base_step, refine_tol = _counting(cfg)

    def run():
        res = Result()
        table = Table("counts", COUNTS_HEADER)
        seeds = seeding.derive_seeds(seed, 0, n)
        for u in levels:
            counts, _ = crossing_counts(spec, u, n, seed, base_step, refine_tol, interval, ctx.executor)
            for i in range(n):
                table.rows.append((ctx.spec_id, i, int(seeds[i]), u, int(counts.counts[i]),
                                   bool(counts.undercount[i]), bool(counts.degenerate[i])))
            res.summary.append(f"u={u:g}: mean count {counts.counts.mean():.6g} over {n} replicates, "
                               f"{int(counts.undercount.sum())} flagged")
        res.tables.append(table)
        return res

    return run


def plan_moments(ctx: Context):
    cfg = ctx.cfg
    spec, interval = _process(ctx)
    seed = _require_seed(ctx)
    n = cfg.get_int("replicates", 1000)
    cfg.require("replicates", n >= 100, "must be >= 100")
    levels = _levels(cfg)
    p_list = cfg.get_floats("p_list", [1.0])
    cfg.require("p_list", all(p > 0 for p in p_list), "moment orders must be positive")
    base_step, refine_tol = _counting(cfg)
    bound_spec = _read_bound_spec(cfg) if "bound.k" in cfg else None
    if bound_spec is not None:
        cfg.require("p_list", all(p == int(p) and p >= 1 for p in p_list), "bounds need integer orders")

    def run():
        res = Result()
        table = Table("moments", MOMENTS_HEADER)
        for u in levels:
            counts, _ = crossing_counts(spec, u, n, seed, base_step, refine_tol, interval, ctx.executor)
            for p in p_list:
                e = moment_estimate(counts.counts.astype(float), p, seed=seed)
                table.rows.append((ctx.spec_id, u, p, e.n, e.point_estimate, e.std_error, e.ci_low, e.ci_high))
                res.summary.append(f"u={u:g} p={p:g}: {e.point_estimate:.6g} [{e.ci_low:.6g}, {e.ci_high:.6g}]")
        res.tables.append(table)
        if bound_spec is not None:
            bt = Table("bounds", BOUNDS_HEADER)
            for p in p_list:
                bt.rows.append(_bound_row(bound_spec["k"], bound_spec["h"], bound_spec["m"], int(p),
                                          bound_spec["C"], bound_spec["D_m"], bound_spec["domain"],
                                          bound_spec["length"], bound_spec["alpha"], bound_spec["tol"]))
            res.tables.append(bt)
        return res

    return run


def plan_crofton(ctx: Context):
    cfg = ctx.cfg
    spec, domain = build_field(cfg)
    ctx.spec_id = _spec_id(cfg, cfg.values.get("field.kind", spec.kind))
    seed = _require_seed(ctx)
    probes = cfg.get_int("probes", 100_000)
    cfg.require("probes", probes >= 1, "must be >= 1")
    levels = _levels(cfg)
    base_step, refine_tol = _counting(cfg)

    def run():
        res = Result()
        table = Table("crofton", CROFTON_HEADER)
        if isinstance(spec, DeterministicField):
            field_, probe_seed = spec.field, seed
        else:
            field_, probe_seed = sample_field(spec, seeding.derive_seed(seed, 0)), seeding.derive_seed(seed, 1)
        plan = CroftonPlan(probes, probe_seed, domain, base_step, refine_tol)
        estimate = estimate_level_measure_ball if isinstance(domain, Ball) else estimate_level_measure_sphere
        for u in levels:
            e = estimate(field_, u, plan, ctx.executor)
            table.rows.append((ctx.spec_id, u, probes, e.point_estimate, e.std_error, e.ci_low, e.ci_high,
                               e.degenerate_probes))
            res.summary.append(f"u={u:g}: measure {e.point_estimate:.6g} [{e.ci_low:.6g}, {e.ci_high:.6g}]")
        res.tables.append(table)
        return res

    return run


def plan_kacrice(ctx: Context):
    cfg = ctx.cfg
    spec, interval = _process(ctx)
    seed = _require_seed(ctx)
    n = cfg.get_int("replicates", 1000)
    cfg.require("replicates", n >= 2, "must be >= 2")
    levels = _levels(cfg)
    deltas = cfg.get_floats("deltas", list(DEFAULT_DELTAS))
    cfg.require("deltas", all(d > 0 for d in deltas) and all(b < a for a, b in zip(deltas, deltas[1:])),
                "must be positive and strictly decreasing")
    quad_step = cfg.get_float("quad_step", None)
    rule = cfg.get_str("rule", "exact", choices=("exact", "midpoint"))
    base_step, refine_tol = _counting(cfg)
    eps = cfg.get_float("profile.epsilon", None)
    n_levels = cfg.get_int("profile.levels", 5)
    p_delta = cfg.get_float("profile.delta", None)
    if eps is not None:
        cfg.require("profile.epsilon", eps > 0, "must be positive")
        if p_delta is None:
            p_delta = eps / (2 * n_levels)
        cfg.require("profile.delta", 0 < p_delta <= eps / (2 * n_levels), "must lie in (0, epsilon / (2 levels)]")

    def run():
        res = Result()
        table = Table("kacrice", KACRICE_HEADER)
        reports = []
        for u in levels:
            rep = verify_kac_rice(spec, u, deltas, n, seed, base_step, refine_tol, quad_step, rule, interval,
                                  ctx.executor)
            if eps is not None:
                prof = estimate_R_profile(spec, u, eps, n_levels, p_delta, n, seed, base_step, refine_tol,
                                          None, interval)
                rep = type(rep)(rep.deltas, rep.kac_estimates, rep.crossing_estimate, rep.closed_form,
                                prof.pairs(), rep.u)
            reports.append(rep.to_dict())
            for d, e in zip(rep.deltas, rep.kac_estimates):
                table.rows.append((ctx.spec_id, u, d, e.point_estimate, e.std_error))
            res.summary.append(f"u={u:g}: crossings {rep.crossing_estimate.point_estimate:.6g}, Kac "
                               + ", ".join(f"{e.point_estimate:.6g}" for e in rep.kac_estimates))
        res.tables.append(table)
        res.documents["kacrice_report.json"] = reports
        return res

    return run


DIAGNOSE_CHECKS = ("H2", "A", "B1", "B2", "radial")


def plan_diagnose(ctx: Context):
    cfg = ctx.cfg
    raw = cfg.get_str("diagnose.checks", "H2, A")
    checks = [c.strip() for c in raw.split(",")]
    for c in checks:
        cfg.require("diagnose.checks", c in DIAGNOSE_CHECKS, f"{c!r} is not one of {', '.join(DIAGNOSE_CHECKS)}")
    needs_kernel = any(c in ("H2", "A", "B1", "B2") for c in checks)
    kernel = build_kernel(cfg, "diagnose.kernel") if needs_kernel else None
    lam = cfg.get_float("diagnose.lambda", 1.0)
    cfg.require("diagnose.lambda", lam > 0, "must be positive")
    k = cfg.get_int("diagnose.k", 1) if "H2" in checks else None
    n_max = cfg.get_int("diagnose.n_max", 50) if "H2" in checks else None
    impulse = build_distribution(cfg, "diagnose.impulse") if "diagnose.impulse" in cfg else None
    d = cfg.get_int("diagnose.d", 2) if "radial" in checks else None
    q = cfg.get_int("diagnose.q", 1) if "radial" in checks else None
    if k is not None:
        cfg.require("diagnose.k", 0 <= k <= kernel.smoothness, f"must lie in [0, {kernel.smoothness}]")
        cfg.require("diagnose.n_max", n_max >= 3, "must be >= 3")
    if d is not None:
        cfg.require("diagnose.d", d >= 2, "must be >= 2")
        cfg.require("diagnose.q", q >= 1, "must be >= 1")

    def run():
        res = Result()
        table = Table("conditions", CONDITIONS_HEADER)
        reports = []
        for c in checks:
            if c == "H2":
                rep = check_shotnoise_H2(kernel, k, n_max)
            elif c == "radial":
                rep = check_density_condition_radial(d, q, lam)
            else:
                rep = check_density_condition(c, kernel, lam, impulse)
            reports.append(rep.to_dict())
            table.rows.append((rep.condition_name, rep.value, rep.converged))
            res.summary.append(f"{rep.condition_name}: value {fmt(rep.value)}, converged {fmt(rep.converged)}")
        res.tables.append(table)
        res.documents["conditions_report.json"] = reports
        return res

    return run


# ---------------------------------------------------------------------------
# report


def _read_table(directory, name):
    """Rows of ``name`` from a result directory as dicts of strings (csv or json)."""
    path = os.path.join(directory, name + ".csv")
    if os.path.exists(path):
        with open(path, newline="", encoding="utf-8") as fh:
            return list(csv.DictReader(fh))
    path = os.path.join(directory, name + ".json")
    if os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            return [{k: "" if v is None else str(v) for k, v in r.items()} for r in json.load(fh)]
    return []


def _load_manifest(directory):
    path = os.path.join(directory, MANIFEST)
    try:
        with open(path, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"manifest mismatch: cannot read {path}", key=directory) from exc
    if manifest.get("tool") != TOOL or manifest.get("version") != __version__:
        raise ConfigError(f"manifest mismatch in {directory}: produced by "
                          f"{manifest.get('tool')} {manifest.get('version')}", key=directory)
    return manifest


def _parse_float(s):
    return float(s.replace("+inf", "inf")) if s not in ("", None) else None


def report_rows(directories) -> List[tuple]:
    """One row per (spec, u, p): estimate, interval, bound and the satisfied flag."""
    rows = []
    for directory in directories:
        _load_manifest(directory)
        bounds = {}
        for b in _read_table(directory, "bounds"):
            bounds[int(b["p"])] = _parse_float(b["bound"])
        for r in _read_table(directory, "moments"):
            p = _parse_float(r["p"])
            est = MomentEstimate(_parse_float(r["estimate"]), _parse_float(r["stderr"]),
                                 _parse_float(r["ci_low"]), _parse_float(r["ci_high"]), int(r["n"]), p)
            bound = bounds.get(int(p)) if p == int(p) else None
            if bound is None:
                rows.append((r["spec_id"], _parse_float(r["u"]), p, est.n, est.point_estimate, est.ci_low,
                             est.ci_high, None, None, None))
                continue
            cmp = compare_bound(est, bound)
            rows.append((r["spec_id"], _parse_float(r["u"]), p, est.n, est.point_estimate, est.ci_low,
                         est.ci_high, bound, cmp.satisfied, cmp.margin))
    return rows


def plan_report(ctx: Context, inputs):
    for d in inputs:
        if not os.path.isdir(d):
            raise ConfigError(f"report input {d!r} is not a directory", key=d)

    def run():
        res = Result()
        res.tables.append(Table("report", REPORT_HEADER, report_rows(inputs)))
        res.summary.append(f"{len(res.tables[0].rows)} row(s) from {len(inputs)} input(s)")
        return res

    return run


PLANNERS = {
    "bound": plan_bound,
    "simulate": plan_simulate,
    "count": plan_count,
    "moments": plan_moments,
    "crofton": plan_crofton,
    "kacrice": plan_kacrice,
    "diagnose": plan_diagnose,
}

# ---------------------------------------------------------------------------
# driver


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="levelsets", description=__doc__.splitlines()[0])
    ap.add_argument("command", nargs="?", choices=COMMANDS, help="overrides the config's 'command' key")
    ap.add_argument("inputs", nargs="*", help="result directories (report only)")
    ap.add_argument("--config", metavar="PATH", help="key = value experiment file")
    ap.add_argument("--seed", type=int, metavar="N", help="master seed (overrides the config)")
    ap.add_argument("--threads", type=int, default=1, metavar="N", help="worker threads (results do not depend on it)")
    ap.add_argument("--out", default="results", metavar="DIR", help="output directory (default: results)")
    ap.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return ap


def _versions():
    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            TOOL: __version__}


def _write(out_dir, result: Result, fmt_name, manifest):
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for t in result.tables:
        name, text = t.render(fmt_name)
        written.append((name, text))
    for name, obj in result.documents.items():
        written.append((name, json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"))
    written.extend(result.files.items())
    for name, text in written:
        with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    manifest["outputs"] = sorted(name for name, _ in written)
    with open(os.path.join(out_dir, MANIFEST), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return _json_cell(obj)


def run(args) -> int:
    cfg = Config.from_file(args.config) if args.config else Config({})
    command = cfg.get_str("command", None, choices=COMMANDS)
    if args.command is not None:
        command = args.command
    if command is None:
        raise ConfigError("no command given (positional argument or 'command' key)", key="command")
    if args.inputs and command != "report":
        raise ConfigError(f"unexpected positional arguments {args.inputs}", key="command")
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1", key="--threads")
    seed = seed_value(cfg, args.seed) if (args.seed is not None or "seed" in cfg) else None
    executor = ThreadPoolExecutor(args.threads) if args.threads > 1 else None
    ctx = Context(cfg, seed, args.threads, executor, args.format)
    try:
        if command == "report":
            runner = plan_report(ctx, args.inputs)
        else:
            runner = PLANNERS[command](ctx)
        cfg.check_unused()
        start = time.perf_counter()
        result = runner()
        wall = time.perf_counter() - start
    finally:
        if executor is not None:
            executor.shutdown()
    manifest = {
        "tool": TOOL,
        "version": __version__,
        "command": command,
        "config_hash": cfg.digest(),
        "config": dict(sorted(cfg.values.items())),
        "seed": ctx.seed,
        "threads": args.threads,
        "format": args.format,
        "versions": _versions(),
        "wall_time_s": wall,
    }
    if command == "report":
        manifest["inputs"] = list(args.inputs)
    _write(args.out, result, args.format, manifest)
    for line in result.summary:
        print(line)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except ConfigError as exc:
        key = f" [{exc.key}]" if exc.key else ""
        print(f"levelsets: config error{key}: {exc}", file=sys.stderr)
        return 1
    except InfeasibleError as exc:
        print(f"levelsets: infeasible: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"levelsets: numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
