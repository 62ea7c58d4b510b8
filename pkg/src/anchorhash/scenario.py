"""Line-oriented churn scripts and their deterministic execution.

One event per line; ``#`` starts a comment::

    seed 42
    init a=7 w=7                 # or: init a=7 resources=s0,s1,s2
    remove 6                     # a resource id, or: remove random
    add                          # or: add s9
    lookup_batch 100000
    measure tau xi oversubscription update
    dump-state

Without ``resources=``, ``init`` names resources "0" .. "w-1" so that for
AnchorHash resource "i" sits on bucket i.  A bare ``add`` names the new
resource after the bucket it lands on (AnchorHash) or after the smallest
unused integer (baselines).
"""
from __future__ import annotations

import shlex
from dataclasses import dataclass, field

import numpy as np

from . import evaluation as ev
from .baselines import HRWMapper, MaglevMapper, RingMapper
from .exceptions import AnchorHashError, ScriptExecutionError, ScriptParseError
from .hashing import MASK64
from .wrapper import AnchorHashMapper

ALGOS = ("anchor", "hrw", "ring", "maglev")
METRICS = ("tau", "xi", "oversubscription", "update", "throughput")


@dataclass
class Event:
    kind: str
    line: int
    args: dict = field(default_factory=dict)


@dataclass
class ScenarioScript:
    events: list
    seed: int = 0


def _parse_kv(tokens, line):
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ScriptParseError(f"expected key=value, got {tok!r}", line)
        k, v = tok.split("=", 1)
        out[k] = v
    return out


def _int(v, line, what):
    try:
        x = int(v, 0)
    except ValueError:
        raise ScriptParseError(f"{what} must be an integer, got {v!r}", line) from None
    if x < 0:
        raise ScriptParseError(f"{what} must be non-negative", line)
    return x


def parse_script(text: str) -> ScenarioScript:
    events = []
    seed = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        try:
            tokens = shlex.split(raw, comments=True)
        except ValueError as exc:
            raise ScriptParseError(str(exc), lineno) from None
        if not tokens:
            continue
        cmd, rest = tokens[0].lower().replace("_", "-"), tokens[1:]
        if cmd == "seed":
            if len(rest) != 1:
                raise ScriptParseError("seed takes one value", lineno)
            seed = _int(rest[0], lineno, "seed") & MASK64
            continue
        if cmd == "init":
            kv = _parse_kv(rest, lineno)
            unknown = set(kv) - {"a", "w", "resources"}
            if unknown:
                raise ScriptParseError(f"unknown init field(s) {sorted(unknown)}", lineno)
            args = {}
            if "a" in kv:
                args["a"] = _int(kv["a"], lineno, "a")
            if "resources" in kv:
                args["resources"] = [r for r in kv["resources"].split(",") if r]
                if "w" in kv:
                    raise ScriptParseError("give either w= or resources=, not both", lineno)
            elif "w" in kv:
                args["w"] = _int(kv["w"], lineno, "w")
            elif "a" in kv:
                args["w"] = args["a"]
            else:
                raise ScriptParseError("init needs a=, w= or resources=", lineno)
            events.append(Event("init", lineno, args))
        elif cmd == "remove":
            if len(rest) != 1:
                raise ScriptParseError("remove takes one resource id or 'random'", lineno)
            events.append(Event("remove", lineno, {"resource": rest[0]}))
        elif cmd == "add":
            if len(rest) > 1:
                raise ScriptParseError("add takes at most one resource id", lineno)
            events.append(Event("add", lineno, {"resource": rest[0] if rest else None}))
        elif cmd == "lookup-batch":
            if len(rest) != 1:
                raise ScriptParseError("lookup_batch takes a key count", lineno)
            n = _int(rest[0], lineno, "key count")
            if n == 0:
                raise ScriptParseError("key count must be positive", lineno)
            events.append(Event("lookup_batch", lineno, {"n": n}))
        elif cmd == "measure":
            bad = [m for m in rest if m not in METRICS]
            if not rest or bad:
                raise ScriptParseError(f"measure takes metrics from {METRICS}", lineno)
            events.append(Event("measure", lineno, {"metrics": rest}))
        elif cmd == "dump-state":
            if rest:
                raise ScriptParseError("dump-state takes no arguments", lineno)
            events.append(Event("dump_state", lineno))
        else:
            raise ScriptParseError(f"unknown event {tokens[0]!r}", lineno)
    if not events:
        raise ScriptParseError("script has no events")
    if events[0].kind != "init":
        raise ScriptParseError("first event must be init", events[0].line)
    if any(e.kind == "init" for e in events[1:]):
        e = next(e for e in events[1:] if e.kind == "init")
        raise ScriptParseError("init may appear only once", e.line)
    return ScenarioScript(events, seed)


def make_mapper(algo, capacity=None, seed=0, copies=100, table_size=None, tier="minimal"):
    if algo == "anchor":
        return AnchorHashMapper(capacity=capacity, seed=seed, tier=tier)
    if algo == "hrw":
        return HRWMapper(seed=seed)
    if algo == "ring":
        return RingMapper(copies=copies, seed=seed)
    if algo == "maglev":
        return MaglevMapper(table_size=table_size, seed=seed)
    raise ScriptExecutionError(f"unknown algorithm {algo!r}")


class ScenarioRunner:
    """Executes a parsed script against one algorithm."""

    def __init__(self, algo="anchor", copies=100, table_size=None, tier="minimal",
                 probe_keys=10_000, tau_keys=100_000):
        if algo not in ALGOS:
            raise ScriptExecutionError(f"unknown algorithm {algo!r}")
        self.algo = algo
        self.copies = copies
        self.table_size = table_size
        self.tier = tier
        self.probe_keys = probe_keys
        self.tau_keys = tau_keys

    def run(self, script: ScenarioScript) -> ev.ScenarioReport:
        seed = script.seed
        # Key streams and random choices come from generators seeded apart
        # from the hashing seed.
        choice_rng = np.random.Generator(np.random.PCG64([seed, 1]))
        key_stream = np.random.Generator(np.random.PCG64([seed, 2]))
        probe = ev.random_keys(self.probe_keys, (seed + 0x9E3779B97F4A7C15) & MASK64)
        mapper = None
        report = None
        removals = []
        for idx, e in enumerate(script.events):
            try:
                if e.kind == "init":
                    resources = e.args.get("resources") or [str(i) for i in range(e.args["w"])]
                    a = e.args.get("a")
                    mapper = make_mapper(self.algo, a, seed, self.copies, self.table_size, self.tier)
                    mapper.fit(resources)
                    if self.algo == "anchor":
                        a = mapper.anchor_.capacity
                    report = ev.ScenarioReport(self.algo, a, len(resources), "", seed)
                elif e.kind == "remove":
                    r = e.args["resource"]
                    if r == "random":
                        live = sorted(mapper.resources, key=str)
                        r = live[int(choice_rng.integers(len(live)))]
                    d = ev.disruption_census(mapper, "remove", probe, r)
                    removals.append(str(r))
                    report.disruption.append(_census_dict(d))
                elif e.kind == "add":
                    r = e.args["resource"] or self._fresh_name(mapper)
                    d = ev.disruption_census(mapper, "add", probe, r)
                    report.disruption.append(_census_dict(d))
                elif e.kind == "lookup_batch":
                    keys = key_stream.integers(0, MASK64, size=e.args["n"], dtype=np.uint64,
                                               endpoint=True)
                    census = ev.KeyCensus.of(mapper, keys)
                    report.keys_sampled = census.total
                    report.oversubscription_percent = ev.oversubscription(census)
                elif e.kind == "measure":
                    self._measure(mapper, report, e.args["metrics"], seed)
                elif e.kind == "dump_state":
                    if self.algo != "anchor":
                        raise ScriptExecutionError("dump-state is only defined for anchor")
                    state = mapper.anchor_.to_state()
                    state["resources"] = {str(b): str(r) for r, b in
                                          sorted(mapper.resource_to_bucket_.items(),
                                                 key=lambda x: x[1])}
                    report.snapshots.append(state)
            except ScriptExecutionError as exc:
                if exc.event_index is None:
                    raise ScriptExecutionError(f"{exc} (line {e.line})", idx) from None
                raise
            except AnchorHashError as exc:
                raise ScriptExecutionError(
                    f"{type(exc).__name__}: {exc} (line {e.line})", idx
                ) from None
        report.w = len(mapper)
        report.removal = ",".join(removals) if removals else "none"
        return report

    def _fresh_name(self, mapper):
        if self.algo == "anchor":
            stack = mapper.anchor_.removed
            if stack:
                name = str(stack[-1])
                if name not in mapper:
                    return name
        i = 0
        while str(i) in mapper:
            i += 1
        return str(i)

    def _measure(self, mapper, report, metrics, seed):
        for m in metrics:
            if m in ("tau", "xi") and self.algo != "anchor":
                raise ScriptExecutionError(f"{m} is only defined for anchor")
            if m == "tau":
                s = ev.tau_statistics(mapper, self.tau_keys, seed=seed ^ 0x7A)
                report.tau_mean, report.tau_std, report.tau_sem = s.mean, s.std, s.sem
                report.tau_n, report.tau_histogram = s.n, s.histogram
                report.set_bounds(mapper.anchor_.capacity, mapper.anchor_.N)
            elif m == "xi":
                if self.tier != "minimal":
                    raise ScriptExecutionError("xi is traced for the minimal tier only")
                s = ev.xi_statistics(mapper, self.tau_keys, seed=seed ^ 0x71)
                report.xi_mean, report.xi_sem, report.xi_n = s.mean, s.sem, s.n
                report.set_bounds(mapper.anchor_.capacity, mapper.anchor_.N)
            elif m == "oversubscription":
                census = ev.KeyCensus.of(mapper, ev.random_keys(self.tau_keys, seed ^ 0x05))
                report.keys_sampled = census.total
                report.oversubscription_percent = ev.oversubscription(census)
            elif m == "update":
                target = mapper.anchor_ if self.algo == "anchor" else mapper
                for event in ("remove", "add"):
                    if event == "add" and self.algo == "anchor" and not mapper.anchor_.removed:
                        continue
                    c = ev.update_cost(target, event, trials=100)
                    report.update_ops[event] = c.ops
                    report.wall_update_seconds[event] = c.wall_seconds
            elif m == "throughput":
                target = mapper.anchor_ if self.algo == "anchor" else mapper
                report.wall_lookups_per_sec = ev.throughput(target, duration=0.2)


def _census_dict(d: ev.DisruptionCensus) -> dict:
    return {
        "event": d.event, "resource": str(d.resource), "n": d.n,
        "unchanged": d.unchanged, "legitimate": d.legitimate, "wrongful": d.wrongful,
        "moved_fraction": d.moved_fraction, "wrongful_fraction": d.wrongful_fraction,
    }


def run_scenario(script, algo="anchor", out=None, fmt="json", **kwargs) -> ev.ScenarioReport:
    """Parse (if given text) and run a script; optionally write the report."""
    if isinstance(script, str):
        script = parse_script(script)
    report = ScenarioRunner(algo, **kwargs).run(script)
    if out is not None:
        text = report.to_json() if fmt == "json" else ev.write_csv(report.rows())
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return report
