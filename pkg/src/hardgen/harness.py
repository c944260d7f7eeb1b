"""Hardening methods behind one name, evaluation, and batch hardness reports."""

from __future__ import annotations

import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .core import Instance, build_uncertainty, sample_ru
from .robust import TimeLimitError, robust_solve_exact

METHODS = ("ru", "mro-ex", "mro-cg", "mro-heu", "mro-ldr", "mro-lsheu", "mid")
MRO_VARIANTS = {
    "mro-ex": ("exact", "exact"),
    "mro-cg": ("colgen", "exact"),
    "mro-heu": ("alternating", "exact"),
    "mro-lsheu": ("alternating", "heuristic"),
}
DEFAULT_TIME_LIMIT = 3600.0
# fields that depend on the machine; excluded when comparing reports
WALL_FIELDS = ("time_before", "time_after", "generation_time", "mean_time_ratio",
               "max_time_ratio", "time_ratio", "total_wall_time")


class NoIncumbentError(RuntimeError):
    """A solver hit its time limit before finding any solution."""


def harden(instance: Instance, method: str, b: float,
           time_limit: float = DEFAULT_TIME_LIMIT) -> tuple[Instance, dict]:
    """Apply a named generator; returns the new instance and a run log."""
    if method in ("ru", "none"):
        return instance, {"method": "ru", "stop_reason": "none", "generation_time": 0.0}
    start = time.perf_counter()
    log = {"method": method, "budget": b}
    if method in MRO_VARIANTS:
        from .mro import mro_generate

        master, inner = MRO_VARIANTS[method]
        try:
            out, run = mro_generate(instance, b, master, inner, time_limit)
        except TimeLimitError as exc:
            raise NoIncumbentError(str(exc)) from exc
        log.update(stop_reason=run.stop_reason, iterations=len(run.iterations),
                   pool_size=len(run.pool), lower_bound=run.best_lower,
                   master_values=[it.master_value for it in run.iterations])
    elif method == "mro-ldr":
        from .ldr import ldr_solve

        out, t = ldr_solve(instance, b)
        log.update(stop_reason="converged", rule_value=t)
    elif method == "mid":
        from .midgen import mid_generate

        stats = {}
        try:
            out, value, x = mid_generate(instance, b, time_limit, stats=stats)
            log.update(stop_reason="converged", nodes=stats["nodes"])
        except TimeLimitError as exc:
            out, value, x = exc.incumbent
            log.update(stop_reason="time_limit")
        log.update(midpoint_value=value, midpoint_solution=[int(k) for k in np.flatnonzero(x)])
    else:
        raise ValueError(f"unknown method {method!r}")
    log["generation_time"] = time.perf_counter() - start
    check_hardened(instance, out, b)
    return out, log


def check_hardened(original: Instance, hardened: Instance, b: float) -> None:
    hardened.validate()
    for box, c in zip(build_uncertainty(original, b), hardened.costs):
        if not box.contains(c, tol=1e-6):
            raise AssertionError("hardened scenario left its uncertainty box")


def evaluate(instance: Instance, time_limit: float = DEFAULT_TIME_LIMIT) -> dict:
    """Exact robust solve; ``support`` lists the 0-based indices with x = 1."""
    try:
        r = robust_solve_exact(instance, time_limit=time_limit)
    except TimeLimitError as exc:
        rec = {"value": None, "nodes": None, "time": time_limit, "optimal": False, "support": None}
        inc = exc.incumbent
        if inc is not None and inc[0] is not None:
            rec["value"] = float(inc[1])
            rec["support"] = [int(k) for k in np.flatnonzero(inc[0])]
        return rec
    return {"value": r.value, "nodes": r.nodes, "time": r.wall_time, "optimal": True,
            "support": [int(k) for k in np.flatnonzero(r.x)]}


# --- batch -------------------------------------------------------------------

def _size_key(size: dict) -> dict:
    return {k: size[k] for k in ("n", "N", "p", "m") if k in size}


def load_config(path) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    return normalize_config(cfg)


def normalize_config(cfg: dict) -> dict:
    cfg = dict(cfg)
    cfg.setdefault("problem", "selection")
    cfg.setdefault("maxcost", 100)
    cfg.setdefault("seed", 0)
    cfg.setdefault("count", 10)
    cfg.setdefault("time_limit", DEFAULT_TIME_LIMIT)
    cfg.setdefault("eval_time_limit", cfg["time_limit"])
    if cfg["problem"] not in ("selection", "tsp"):
        raise ValueError(f"unknown problem {cfg['problem']!r}")
    for m in cfg.get("methods", []):
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    if not cfg.get("sizes") or not cfg.get("methods") or "budgets" not in cfg:
        raise ValueError("config needs sizes, budgets and methods")
    return cfg


def _sample(cfg, size, index) -> Instance:
    seed = int(cfg["seed"]) + index
    if cfg["problem"] == "selection":
        n = size["n"]
        return sample_ru("selection", n, size.get("N", n), cfg["maxcost"],
                         size.get("p", n // 2), seed)
    m = size["m"]
    return sample_ru("tsp", m * m, size.get("N", m), cfg["maxcost"], m, seed)


def _baseline_task(args):
    cfg, size, index = args
    inst = _sample(cfg, size, index)
    return evaluate(inst, cfg["eval_time_limit"])


def _harden_task(args):
    cfg, size, index, b, method = args
    inst = _sample(cfg, size, index)
    rec = {"method": method, "b": b, "instance": index, "seed": int(cfg["seed"]) + index}
    rec.update(_size_key(size))
    try:
        out, log = harden(inst, method, b, cfg["time_limit"])
    except Exception as exc:  # recorded per row; the batch continues
        rec.update(error=f"{type(exc).__name__}: {exc}", stop_reason="error")
        return rec
    ev = evaluate(out, cfg["eval_time_limit"])
    rec.update(stop_reason=log["stop_reason"], generation_time=log["generation_time"],
               value_after=ev["value"], nodes_after=ev["nodes"], time_after=ev["time"],
               solved_after=ev["optimal"], error=None)
    return rec


def _map(fn, tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def run_batch(cfg: dict, jobs: int = 1) -> dict:
    cfg = normalize_config(cfg)
    start = time.perf_counter()
    sizes = cfg["sizes"]
    base_tasks = [(cfg, s, i) for s in sizes for i in range(cfg["count"])]
    baselines = dict(zip(((json.dumps(_size_key(s), sort_keys=True), i) for _, s, i in base_tasks),
                         _map(_baseline_task, base_tasks, jobs)))
    tasks = [(cfg, s, i, b, m) for s, b, m in itertools.product(sizes, cfg["budgets"], cfg["methods"])
             for i in range(cfg["count"])]
    records = []
    for rec, (_, s, i, _, _) in zip(_map(_harden_task, tasks, jobs), tasks):
        ev = baselines[json.dumps(_size_key(s), sort_keys=True), i]
        rec.update(value_before=ev["value"], nodes_before=ev["nodes"], time_before=ev["time"],
                   solved_before=ev["optimal"])
        both = ev["optimal"] and rec.get("solved_after") is True
        rec["node_ratio"] = _ratio(rec.get("nodes_after"), ev["nodes"]) if both else None
        rec["time_ratio"] = _ratio(rec.get("time_after"), ev["time"]) if both else None
        records.append(rec)
    report = {
        "schema": "hardgen-report/1",
        "config": {k: cfg[k] for k in sorted(cfg)},
        "records": records,
        "aggregates": aggregate(records),
        "total_wall_time": time.perf_counter() - start,
    }
    return report


def _ratio(a, b):
    if a is None or b is None:
        return None
    if b == 0:
        return 1.0 if a == 0 else None
    return a / b


def aggregate(records: list[dict]) -> list[dict]:
    cells: dict[tuple, list[dict]] = {}
    for r in records:
        key = (r["method"], r["b"], r.get("n"), r.get("m"), r.get("N"))
        cells.setdefault(key, []).append(r)
    rows = []
    for (method, b, n, m, N), rs in cells.items():
        solved = [r for r in rs if r["node_ratio"] is not None]
        nr = [r["node_ratio"] for r in solved]
        tr = [r["time_ratio"] for r in solved if r["time_ratio"] is not None]
        larger = [r for r in solved if r["value_after"] > r["value_before"] + 1e-9]
        row = {"method": method, "b": b, "n": n, "N": N, "count": len(rs), "solved": len(solved),
               "errors": sum(1 for r in rs if r.get("error")),
               "mean_node_ratio": _mean(nr), "max_node_ratio": max(nr) if nr else None,
               "mean_time_ratio": _mean(tr), "max_time_ratio": max(tr) if tr else None,
               "larger_share": len(larger) / len(solved) if solved else None}
        if m is not None:
            row["m"] = m
        rows.append(row)
    return rows


def _mean(xs):
    return float(np.mean(xs)) if xs else None


def strip_wall_times(obj):
    """Copy of a report without the machine-dependent timing fields."""
    if isinstance(obj, dict):
        return {k: strip_wall_times(v) for k, v in obj.items() if k not in WALL_FIELDS}
    if isinstance(obj, list):
        return [strip_wall_times(v) for v in obj]
    return obj


def dumps_report(report: dict, timings: bool = True) -> str:
    if not timings:
        report = strip_wall_times(report)
    return json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not serializable: {type(o).__name__}")


def _fmt(v, digits=2):
    if v is None:
        return "-"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return f"{v:.{digits}f}"
    return str(v)


def format_table(report: dict) -> str:
    """Aligned text table, one row per (method, budget, size) cell.

    Ratio columns show mean (max) over instances solved to optimality both
    before and after hardening.
    """
    head = ["method", "b", "n", "N", "solved", "node ratio", "time ratio", "larger"]
    lines = [head]
    for a in report["aggregates"]:
        size = a["n"] if a.get("m") is None else f"m={a['m']}"
        lines.append([
            a["method"], _fmt(a["b"]), str(size), str(a["N"]), f"{a['solved']}/{a['count']}",
            f"{_fmt(a['mean_node_ratio'])} ({_fmt(a['max_node_ratio'])})",
            f"{_fmt(a['mean_time_ratio'])} ({_fmt(a['max_time_ratio'])})",
            _fmt(a["larger_share"]),
        ])
    widths = [max(len(row[c]) for row in lines) for c in range(len(head))]
    out = []
    for k, row in enumerate(lines):
        out.append("  ".join(cell.rjust(w) if c else cell.ljust(w)
                             for c, (cell, w) in enumerate(zip(row, widths))).rstrip())
        if k == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out) + "\n"
