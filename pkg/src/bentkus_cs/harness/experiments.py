"""Experiment drivers producing tabular reports.

Each driver returns a :class:`Report`: per-replication rows, aggregate rows
(``replication == "all"``) recomputable from them, and a small summary.
Replications are independent and can be farmed out to worker processes;
rows are always merged in replication order.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..apps import adaptive_stop, best_arm, confseq_factory, hardness_h1
from ..bentkus import BentkusParams, bentkus_quantile, floor_std
from ..confseq import (
    adaptive_hoeffding_bound,
    bernstein_bound,
    hoeffding_bound,
    make_confseq,
)
from ..stitching import StitchConfig, adaptive_bentkus_bound
from . import rng as rngmod
from .config import ExperimentConfig

SUPPORT = (0.0, 1.0)

COLUMNS = {
    "coverage": ["kind", "method", "replication", "n", "lower", "upper", "width", "miscovered"],
    "stopping": ["kind", "method", "replication", "stopping_time", "estimate",
                 "rel_error", "accurate", "truncated"],
    "bestarm": ["kind", "method", "replication", "n_arms", "total_pulls", "winner",
                "winner_correct", "truncated", "h1"],
    "bound-table": ["kind", "method", "n", "eta", "power", "bound", "mean_scale"],
}
TRACE_COLUMNS = ["method", "replication", "iteration", "arm", "event"]


@dataclass
class Report:
    kind: str
    columns: list
    rows: list
    summary: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)


def checkpoint_grid(horizon: int, count: int) -> list[int]:
    """About ``count`` log-spaced step indices from 1 to horizon inclusive,
    always including the horizon and every power of ten up to it."""
    grid = np.unique(np.round(np.logspace(0.0, math.log10(horizon), count)).astype(int))
    decades = {10**j for j in range(len(str(horizon))) if 10**j <= horizon}
    return sorted(set(int(v) for v in grid if 1 <= v <= horizon) | decades | {horizon})


def draw(cfg: ExperimentConfig, gen: np.random.Generator, size: int) -> np.ndarray:
    if cfg.distribution == "bernoulli":
        return (gen.random(size) < cfg.p).astype(float)
    return gen.random((size, cfg.m)).mean(axis=1)


def stream(cfg: ExperimentConfig, gen: np.random.Generator, chunk: int = 1024):
    while True:
        yield from draw(cfg, gen, chunk).tolist()


def _mean(values):
    values = list(values)
    return math.fsum(values) / len(values)


def _map_reps(fn, cfg: ExperimentConfig):
    reps = range(cfg.replications)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(fn, itertools.repeat(cfg), reps))
    return [fn(cfg, r) for r in reps]


def _stitch(cfg: ExperimentConfig) -> StitchConfig:
    return StitchConfig.for_delta(cfg.delta, eta=cfg.eta, power=cfg.power)


# ---------------------------------------------------------------------------
# coverage and width


def coverage_replication(cfg: ExperimentConfig, r: int) -> list[dict]:
    y = draw(cfg, rngmod.rng_stream(cfg.seed, rngmod.COVERAGE, r), cfg.horizon)
    checkpoints = set(checkpoint_grid(cfg.horizon, cfg.checkpoints))
    mu = cfg.mean
    stitch = _stitch(cfg)
    rows = []
    for method in cfg.methods:
        seq = make_confseq(method, SUPPORT, cfg.delta, stitch, known_std=cfg.std)
        missed = False
        for n, v in enumerate(y.tolist(), start=1):
            ci = seq.update(v)
            missed = missed or not ci.contains(mu)
            if n in checkpoints:
                rows.append({"kind": "coverage", "method": method, "replication": r,
                             "n": n, "lower": ci.lower, "upper": ci.upper,
                             "width": ci.upper - ci.lower, "miscovered": int(missed)})
    return rows


def run_coverage(cfg: ExperimentConfig) -> Report:
    """Miscoverage (ever, up to each n) and interval width for every method
    on identical data per replication."""
    per_rep = _map_reps(coverage_replication, cfg)
    rows = [row for rep in per_rep for row in rep]
    agg = []
    summary = {}
    grid = checkpoint_grid(cfg.horizon, cfg.checkpoints)
    for method in cfg.methods:
        for n in grid:
            sel = [row for row in rows if row["method"] == method and row["n"] == n]
            agg.append({"kind": "coverage", "method": method, "replication": "all", "n": n,
                        "lower": _mean(s["lower"] for s in sel),
                        "upper": _mean(s["upper"] for s in sel),
                        "width": _mean(s["width"] for s in sel),
                        "miscovered": _mean(s["miscovered"] for s in sel)})
        last = agg[-1]
        summary[method] = {"miscoverage": last["miscovered"], "mean_width": last["width"]}
    return Report("coverage", COLUMNS["coverage"], rows + agg, summary)


# ---------------------------------------------------------------------------
# adaptive stopping


def stopping_replication(cfg: ExperimentConfig, r: int) -> list[dict]:
    mu = cfg.mean
    rows = []
    for method in cfg.methods:
        # a fresh generator with the same ids gives every method the same data
        data = stream(cfg, rngmod.rng_stream(cfg.seed, rngmod.STOPPING, r))
        fac = confseq_factory(method, SUPPORT, eta=cfg.eta, power=cfg.power)
        res = adaptive_stop(data, cfg.epsilon, cfg.delta, fac, max_n=cfg.max_pulls,
                            keep_trace=False)
        rel = abs(res.estimate / mu - 1.0) if mu != 0 else math.nan
        rows.append({"kind": "stopping", "method": method, "replication": r,
                     "stopping_time": res.stopping_time, "estimate": res.estimate,
                     "rel_error": rel, "accurate": int(rel <= cfg.epsilon),
                     "truncated": int(res.truncated)})
    return rows


def run_stopping(cfg: ExperimentConfig) -> Report:
    """Stopping time of the relative-accuracy stopping rule per method, on
    matched streams."""
    per_rep = _map_reps(stopping_replication, cfg)
    rows = [row for rep in per_rep for row in rep]
    agg = []
    summary = {}
    for method in cfg.methods:
        sel = [row for row in rows if row["method"] == method]
        a = {"kind": "stopping", "method": method, "replication": "all",
             "stopping_time": _mean(s["stopping_time"] for s in sel),
             "estimate": _mean(s["estimate"] for s in sel),
             "rel_error": _mean(s["rel_error"] for s in sel),
             "accurate": _mean(s["accurate"] for s in sel),
             "truncated": _mean(s["truncated"] for s in sel)}
        agg.append(a)
        summary[method] = {"mean_stopping_time": a["stopping_time"],
                           "accurate_fraction": a["accurate"]}
    return Report("stopping", COLUMNS["stopping"], rows + agg, summary)


# ---------------------------------------------------------------------------
# best arm


def arm_means(cfg: ExperimentConfig) -> list[float]:
    K = cfg.n_arms
    return [1.0 - (a / K) ** cfg.arm_exponent for a in range(K)]


def _bernoulli_arm(gen, mu):
    return lambda: float(gen.random() < mu)


def bestarm_replication(cfg: ExperimentConfig, r: int):
    means = arm_means(cfg)
    K = len(means)
    best = max(range(K), key=lambda a: (means[a], -a))
    h1 = hardness_h1(means) if K > 1 else 0.0
    rows, trace = [], []
    for method in cfg.methods:
        arms = [_bernoulli_arm(rngmod.rng_stream(cfg.seed, rngmod.BESTARM, r, a), means[a])
                for a in range(K)]
        fac = confseq_factory(method, SUPPORT, eta=cfg.eta, power=cfg.power)
        res = best_arm(arms, cfg.delta, fac, max_total_pulls=cfg.max_pulls,
                       radius=cfg.radius, keep_trace=cfg.trace)
        rows.append({"kind": "bestarm", "method": method, "replication": r, "n_arms": K,
                     "total_pulls": res.total_pulls, "winner": res.winner,
                     "winner_correct": int(res.winner == best),
                     "truncated": int(res.truncated), "h1": h1})
        if cfg.trace:
            trace += [{"method": method, "replication": r, "iteration": i, "arm": a,
                       "event": "pull"} for i, a in res.pull_trace]
            trace += [{"method": method, "replication": r, "iteration": i, "arm": a,
                       "event": "eliminate"} for i, a in res.elimination_trace]
    return rows, trace


def run_bestarm(cfg: ExperimentConfig) -> Report:
    """Total pulls and winner correctness of interval-elimination best-arm
    identification per method, on matched reward streams."""
    per_rep = _map_reps(bestarm_replication, cfg)
    rows = [row for rep, _ in per_rep for row in rep]
    trace = [t for _, tr in per_rep for t in tr]
    agg = []
    summary = {}
    for method in cfg.methods:
        sel = [row for row in rows if row["method"] == method]
        a = {"kind": "bestarm", "method": method, "replication": "all",
             "n_arms": cfg.n_arms,
             "total_pulls": _mean(s["total_pulls"] for s in sel),
             "winner": "", "winner_correct": _mean(s["winner_correct"] for s in sel),
             "truncated": _mean(s["truncated"] for s in sel), "h1": sel[0]["h1"]}
        agg.append(a)
        summary[method] = {"mean_pulls": a["total_pulls"],
                           "correct_fraction": a["winner_correct"]}
    return Report("bestarm", COLUMNS["bestarm"], rows + agg, summary, trace)


# ---------------------------------------------------------------------------
# boundary tables


def emit_bound_table(cfg: ExperimentConfig) -> Report:
    """One-sided sum-scale boundaries at level ``delta`` over a log n-grid.

    Fixed-n rows (Bentkus, Bernstein, Hoeffding) use the true standard
    deviation and upper deviation ``1 - mean`` of the configured law; stitched
    rows (A-Bentkus with known variance, A-Hoeffding) are repeated for every
    ``(eta, power)`` pair, which for ``kind == "sweep"`` ranges over the
    configured grids.
    """
    mean, std = cfg.mean, cfg.std
    B = 1.0 - mean
    params = BentkusParams(floor_std(std, B), B)
    if cfg.kind == "sweep":
        combos = list(itertools.product(cfg.eta_grid, cfg.power_grid))
    else:
        combos = [(cfg.eta, cfg.power)]
    d = cfg.delta
    rows = []
    for eta, power in combos:
        stitch = StitchConfig(eta=eta, power=power, delta1=d, delta2=1.0 - d)
        for n in checkpoint_grid(cfg.horizon, cfg.checkpoints):
            values = {
                "Bentkus-fixed": bentkus_quantile(d, n, params),
                "Bernstein-fixed": bernstein_bound(n, d, params.A, B),
                "Hoeffding-fixed": hoeffding_bound(n, d, SUPPORT),
                "A-Bentkus-known": adaptive_bentkus_bound(n, params, stitch),
                "A-Hoeffding": adaptive_hoeffding_bound(n, d, SUPPORT),
            }
            for method, bound in values.items():
                rows.append({"kind": cfg.kind, "method": method, "n": n, "eta": eta,
                             "power": power, "bound": bound, "mean_scale": bound / n})
    return Report(cfg.kind, COLUMNS["bound-table"], rows)


RUNNERS = {
    "coverage": run_coverage,
    "width": run_coverage,
    "stopping": run_stopping,
    "bestarm": run_bestarm,
    "bound-table": emit_bound_table,
    "sweep": emit_bound_table,
}


def run(cfg: ExperimentConfig) -> Report:
    return RUNNERS[cfg.kind](cfg)


# ---------------------------------------------------------------------------
# output


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return v


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\r\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: _cell(row[k]) for k in columns})
    return buf.getvalue()


def to_json(report: Report, cfg: ExperimentConfig) -> str:
    doc = {"kind": report.kind, "config": cfg.to_dict(), "summary": report.summary,
           "columns": report.columns, "rows": report.rows}
    if report.trace:
        doc["trace"] = report.trace
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_report(report: Report, cfg: ExperimentConfig, out: str | None, fmt: str) -> str:
    """Write the report to ``out`` (or return the text when ``out`` is None).

    CSV output also writes ``<out>.summary.json`` and, when traces were
    recorded, ``<out>.trace.csv``.
    """
    if fmt == "json":
        text = to_json(report, cfg)
    else:
        text = to_csv(report.columns, report.rows)
    if out is None:
        return text
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    if fmt == "csv":
        with open(out + ".summary.json", "w", encoding="utf-8") as fh:
            json.dump({"kind": report.kind, "config": cfg.to_dict(),
                       "summary": report.summary}, fh, indent=2, sort_keys=True)
            fh.write("\n")
        if report.trace:
            with open(out + ".trace.csv", "w", encoding="utf-8", newline="") as fh:
                fh.write(to_csv(TRACE_COLUMNS, report.trace))
    return text
