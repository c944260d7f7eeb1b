"""Command line entry point: ``hardgen generate|evaluate|batch``.

Exit codes: 0 success, 1 unexpected failure, 2 bad flags or unreadable input,
3 a solver hit its time limit without any solution.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .core import InstanceError, ParseError, read_instance, dumps_instance, sample_ru, write_instance
from .harness import (DEFAULT_TIME_LIMIT, METHODS, NoIncumbentError, dumps_report, evaluate,
                      format_table, harden, load_config, run_batch)

EXIT_BAD_INPUT = 2
EXIT_NO_INCUMBENT = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hardgen", description="Hard instances for min-max robust selection and TSP")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="sample an RU instance and optionally harden it")
    gen.add_argument("--in", dest="input", help="start from this instance file instead of sampling")
    gen.add_argument("--problem", choices=("selection", "tsp"), default="selection")
    gen.add_argument("--n", type=int, help="items (selection) or m*m (tsp)")
    gen.add_argument("--m", type=int, help="tsp node count")
    gen.add_argument("--scenarios", type=int, help="N; defaults to n for selection and m for tsp")
    gen.add_argument("--p", type=int, help="items to select; defaults to n/2")
    gen.add_argument("--maxcost", type=int, default=100)
    gen.add_argument("--budget", type=float, default=0.0)
    gen.add_argument("--method", choices=METHODS + ("none",), default="none")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT)
    gen.add_argument("--out", help="instance path; the run log goes to <out>.json")

    ev = sub.add_parser("evaluate", help="solve an instance exactly and report hardness")
    ev.add_argument("--in", dest="input", required=True)
    ev.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT)
    ev.add_argument("--out", help="write the JSON here instead of stdout")

    bt = sub.add_parser("batch", help="run a batch config and write a hardness report")
    bt.add_argument("--config", required=True)
    bt.add_argument("--jobs", type=int, default=1)
    bt.add_argument("--out", help="report path (JSON); the table goes to <out>.txt")
    bt.add_argument("--time-limit", type=float, help="override the config's generation limit")
    return parser


def _initial_instance(args, parser):
    if args.input:
        return _read(args.input, parser)
    if args.problem == "selection":
        if args.n is None:
            parser.error("selection needs --n (or --in)")
        n = args.n
        N = args.scenarios if args.scenarios is not None else n
        p = args.p if args.p is not None else n // 2
        if n < 1 or N < 1 or not 1 <= p <= n:
            parser.error("need n >= 1, scenarios >= 1 and 1 <= p <= n")
        return sample_ru("selection", n, N, args.maxcost, p, args.seed)
    m = args.m
    if m is None and args.n is not None:
        m = math.isqrt(args.n)
        if m * m != args.n:
            parser.error("tsp --n must be a square (m*m)")
    if m is None or m < 3:
        parser.error("tsp needs --m >= 3")
    N = args.scenarios if args.scenarios is not None else m
    if N < 1:
        parser.error("need scenarios >= 1")
    return sample_ru("tsp", m * m, N, args.maxcost, m, args.seed)


def _read(path, parser):
    try:
        return read_instance(path)
    except (ParseError, InstanceError, OSError) as exc:
        parser.error(f"{path}: {exc}")


def cmd_generate(args, parser) -> int:
    if args.budget < 0 or args.maxcost < 0 or args.time_limit <= 0:
        parser.error("budget and maxcost must be nonnegative, time limit positive")
    inst = _initial_instance(args, parser)
    if args.method in ("mro-ldr", "mid") and inst.kind != "selection":
        parser.error(f"{args.method} supports selection only")
    try:
        out, log = harden(inst, args.method, args.budget, args.time_limit)
    except NoIncumbentError as exc:
        print(f"hardgen: {exc}", file=sys.stderr)
        return EXIT_NO_INCUMBENT
    log["seed"] = args.seed
    if args.out:
        write_instance(out, args.out)
        if args.method not in ("none", "ru"):
            Path(args.out + ".json").write_text(json.dumps(log, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(dumps_instance(out))
        if args.method not in ("none", "ru"):
            print(json.dumps(log, sort_keys=True), file=sys.stderr)
    return 0


def cmd_evaluate(args, parser) -> int:
    if args.time_limit <= 0:
        parser.error("time limit must be positive")
    inst = _read(args.input, parser)
    rec = evaluate(inst, args.time_limit)
    text = json.dumps(rec, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if not rec["optimal"] and rec["value"] is None:
        return EXIT_NO_INCUMBENT
    return 0


def cmd_batch(args, parser) -> int:
    if args.jobs < 1:
        parser.error("--jobs must be at least 1")
    try:
        cfg = load_config(args.config)
    except (OSError, ValueError) as exc:
        parser.error(f"{args.config}: {exc}")
    if args.time_limit is not None:
        cfg["time_limit"] = args.time_limit
    report = run_batch(cfg, jobs=args.jobs)
    table = format_table(report)
    if args.out:
        Path(args.out).write_text(dumps_report(report))
        Path(args.out + ".txt").write_text(table)
    else:
        sys.stdout.write(dumps_report(report))
    sys.stderr.write(table)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"generate": cmd_generate, "evaluate": cmd_evaluate, "batch": cmd_batch}[args.command]
    return handler(args, parser)


if __name__ == "__main__":
    sys.exit(main())
