"""Command-line entry point: ``anchorhash {run,bench,snapshot}``.

Exit codes: 0 success, 2 parse error, 3 execution error, 4 integrity error.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import evaluation as ev
from . import snapshot
from .baselines import smallest_prime_at_least
from .exceptions import (
    AnchorHashError,
    IntegrityError,
    ScriptExecutionError,
    ScriptParseError,
    TierMismatchError,
)
from .hashing import random_keys
from .scenario import ALGOS, make_mapper, parse_script, run_scenario

EXIT_OK, EXIT_PARSE, EXIT_EXEC, EXIT_INTEGRITY = 0, 2, 3, 4
SUITES = ("tau", "xi", "balance", "disruption", "update", "throughput", "all")


def _common(p):
    p.add_argument("--algo", choices=ALGOS, default="anchor")
    p.add_argument("--tier", choices=("minimal", "reduced", "naive"), default="minimal")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--keys", type=int, default=None,
                   help="keys sampled per measurement")
    p.add_argument("--copies", type=int, default=100, help="ring virtual nodes per resource")
    p.add_argument("--table-size", type=int, default=None, help="maglev table size (prime)")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="json")


def build_parser():
    parser = argparse.ArgumentParser(prog="anchorhash", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="replay a churn script")
    _common(run)
    run.add_argument("--script", required=True)

    bench = sub.add_parser("bench", help="run an evaluation suite")
    _common(bench)
    bench.add_argument("suite", choices=SUITES)
    bench.add_argument("--a", type=int, default=2000)
    bench.add_argument("--w", type=int, default=1000)
    bench.add_argument("--removal", choices=("random", "ascending"), default="random")
    bench.add_argument("--duration", type=float, default=0.5,
                       help="seconds per throughput measurement")

    snap = sub.add_parser("snapshot", help="save or verify state snapshots")
    snap_sub = snap.add_subparsers(dest="action", required=True)
    save = snap_sub.add_parser("save", help="build a state and write its snapshot")
    save.add_argument("--a", type=int, required=True)
    save.add_argument("--w", type=int, default=None)
    save.add_argument("--seed", type=int, default=0)
    save.add_argument("--tier", choices=("minimal", "reduced", "naive"), default="minimal")
    save.add_argument("--removal", choices=("random", "ascending", "init"), default="init")
    save.add_argument("--out", required=True)
    load = snap_sub.add_parser("load", help="verify a snapshot and print a summary")
    load.add_argument("path")
    load.add_argument("--tier", choices=("minimal", "reduced", "naive"), default=None)
    load.add_argument("--keys", type=int, default=0,
                      help="also print a digest of lookups over this many probe keys")
    return parser


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_run(args):
    try:
        with open(args.script, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScriptParseError(f"cannot read script: {exc}") from None
    script = parse_script(text)
    if args.seed:
        script.seed = args.seed
    kwargs = dict(copies=args.copies, table_size=args.table_size, tier=args.tier)
    if args.keys:
        kwargs["probe_keys"] = args.keys
        kwargs["tau_keys"] = max(args.keys, 10**4)
    report = run_scenario(script, algo=args.algo, **kwargs)
    text = report.to_json() if args.format == "json" else ev.write_csv(report.rows("script"))
    _emit(text, args.out)


def _bench_rows(args):
    suites = ("tau", "xi", "balance", "disruption", "update", "throughput") \
        if args.suite == "all" else (args.suite,)
    n = args.keys or 10**6
    rows = []
    a, w = args.a, args.w
    table_size = args.table_size or smallest_prime_at_least(100 * w)
    for suite in suites:
        if suite in ("tau", "xi"):
            if args.algo != "anchor":
                raise ScriptExecutionError(f"{suite} is only defined for anchor")
            anchor = ev.build_anchor(a, w, args.removal, seed=args.seed, tier=args.tier)
            rep = ev.ScenarioReport("anchor", a, w, args.removal, args.seed)
            rep.set_bounds(a, w)
            if suite == "tau":
                s = ev.tau_statistics(anchor, n, seed=args.seed + 1)
                rep.tau_mean, rep.tau_std, rep.tau_sem = s.mean, s.std, s.sem
                rep.tau_n, rep.tau_histogram = s.n, s.histogram
            else:
                s = ev.xi_statistics(anchor, n, seed=args.seed + 2)
                rep.xi_mean, rep.xi_sem, rep.xi_n = s.mean, s.sem, s.n
            rows += rep.rows(f"{suite}-{args.removal}")
        elif suite == "balance":
            mapper = _fitted(args, a, w, table_size)
            for exp in range(4, int(np.log10(n)) + 1):
                census = ev.KeyCensus.of(mapper, random_keys(10**exp, args.seed + 3))
                rep = ev.ScenarioReport(args.algo, a, w, args.removal, args.seed)
                rep.oversubscription_percent = ev.oversubscription(census)
                rep.keys_sampled = census.total
                rep.extra["chi_square_p"] = ev.chi_square_uniformity(census)[1]
                rows += rep.rows(f"balance-1e{exp}")
        elif suite == "disruption":
            mapper = _fitted(args, a, w, table_size)
            keys = random_keys(min(n, 10**5), args.seed + 4)
            rep = ev.ScenarioReport(args.algo, a, w, args.removal, args.seed)
            for i, r in enumerate(list(mapper.resources)[:5]):
                d = ev.disruption_census(mapper, "remove", keys, r)
                rep.disruption.append(_census(d))
            for i in range(5):
                d = ev.disruption_census(mapper, "add", keys, f"bench-add-{i}")
                rep.disruption.append(_census(d))
            rows += rep.rows("disruption")
        elif suite == "update":
            mapper = _fitted(args, a, w, table_size)
            target = mapper.anchor_ if args.algo == "anchor" else mapper
            rep = ev.ScenarioReport(args.algo, a, w, args.removal, args.seed)
            for event in ("remove", "add"):
                c = ev.update_cost(target, event, trials=100)
                rep.update_ops[event] = c.ops
                rep.wall_update_seconds[event] = c.wall_seconds
            rows += rep.rows("update")
        elif suite == "throughput":
            mapper = _fitted(args, a, w, table_size)
            target = mapper.anchor_ if args.algo == "anchor" else mapper
            rep = ev.ScenarioReport(args.algo, a, w, args.removal, args.seed)
            rep.wall_lookups_per_sec = ev.throughput(target, duration=args.duration)
            rows += rep.rows("throughput")
    return rows


def _census(d):
    return {"event": d.event, "resource": str(d.resource), "n": d.n,
            "unchanged": d.unchanged, "legitimate": d.legitimate, "wrongful": d.wrongful,
            "moved_fraction": d.moved_fraction, "wrongful_fraction": d.wrongful_fraction}


def _fitted(args, a, w, table_size):
    """Mapper with ``w`` live resources; AnchorHash reaches it from a full
    anchor of size ``a`` through the chosen removal pattern."""
    if args.algo != "anchor":
        mapper = make_mapper(args.algo, None, args.seed, args.copies, table_size)
        return mapper.fit([f"r{i}" for i in range(w)])
    mapper = make_mapper("anchor", a, args.seed, tier=args.tier)
    mapper.fit([f"r{i}" for i in range(a)])
    for b in ev.removal_order(a, a - w, args.removal, args.seed):
        mapper.remove_resource(f"r{b}")
    return mapper


def cmd_bench(args):
    rows = _bench_rows(args)
    if args.format == "csv":
        _emit(ev.write_csv(rows), args.out)
    else:
        _emit(json.dumps(rows, indent=2, sort_keys=True) + "\n", args.out)


def cmd_snapshot(args):
    if args.action == "save":
        w = args.a if args.w is None else args.w
        if args.removal == "init":
            anchor = ev.TIER_CLASSES[args.tier](args.a, w, seed=args.seed)
        else:
            anchor = ev.build_anchor(args.a, w, args.removal, seed=args.seed, tier=args.tier)
        snapshot.save(anchor, args.out)
        return
    obj = snapshot.load(args.path, tier=args.tier)
    anchor = getattr(obj, "anchor_", obj)
    summary = {"tier": anchor.tier, "capacity_a": anchor.capacity, "working": anchor.N,
               "removed": len(anchor.removed), "seed": anchor.seed}
    if args.keys:
        buckets = anchor.get_buckets(random_keys(args.keys, 0))
        summary["lookup_digest"] = int(np.bitwise_xor.reduce(
            buckets.astype(np.uint64) * np.arange(1, len(buckets) + 1, dtype=np.uint64)))
    sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    try:
        {"run": cmd_run, "bench": cmd_bench, "snapshot": cmd_snapshot}[args.command](args)
    except ScriptParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (IntegrityError, TierMismatchError) as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except (ScriptExecutionError, AnchorHashError) as exc:
        print(f"execution error: {exc}", file=sys.stderr)
        return EXIT_EXEC
    except OSError as exc:
        print(f"execution error: {exc}", file=sys.stderr)
        return EXIT_EXEC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
