"""Metrics for comparing consistent-hashing algorithms.

Every statistic carries its sample size and a standard error; bound checks
elsewhere use ``bound + 3 * std_error``.  Wall-clock numbers are reported in
fields prefixed ``wall_`` and never feed a pass/fail decision.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .base import ConsistentHashMapper
from .core import AnchorHash, _AnchorBase
from .exceptions import ContractViolation
from .hashing import random_keys
from .reference import NaiveAnchor, ReducedAnchor

CSV_COLUMNS = [
    "algorithm", "scenario", "a", "w", "metric", "n",
    "value", "std_error", "bound", "wall_seconds", "wall_mkps",
]

TIER_CLASSES = {"minimal": AnchorHash, "reduced": ReducedAnchor, "naive": NaiveAnchor}


# ---------------------------------------------------------------- state setup
def removal_order(a: int, count: int, pattern: str = "random", seed: int = 0) -> list[int]:
    """Bucket ids to remove from a full anchor of size ``a``.

    ``"random"`` is a uniformly random subset in random order; ``"ascending"``
    removes 0, 1, 2, ... which concentrates long successor chains.
    """
    if not 0 <= count < a:
        raise ContractViolation(f"can remove between 0 and {a - 1} buckets, got {count}")
    if pattern == "random":
        rng = np.random.Generator(np.random.PCG64(seed))
        return [int(b) for b in rng.permutation(a)[:count]]
    if pattern == "ascending":
        return list(range(count))
    raise ContractViolation(f"unknown removal pattern {pattern!r}")


def build_anchor(a: int, w: int, pattern: str = "random", seed: int = 0,
                 tier: str = "minimal", removal_seed: int | None = None, **kwargs):
    """Anchor of size ``a`` brought to ``w`` working buckets by removals."""
    anchor = TIER_CLASSES[tier](a, a, seed=seed, **kwargs)
    order = removal_order(a, a - w, pattern, seed if removal_seed is None else removal_seed)
    for b in order:
        anchor.remove_bucket(b)
    return anchor


# -------------------------------------------------------------------- census
@dataclass
class KeyCensus:
    """Key counts per live resource over one sampled key stream."""

    resources: list
    counts: np.ndarray
    total: int

    def __post_init__(self):
        if int(self.counts.sum()) != self.total:
            raise ContractViolation("census counts do not sum to total")

    @classmethod
    def of(cls, mapper, keys) -> "KeyCensus":
        """Census of a mapper (or bare anchor, counting buckets)."""
        keys = np.asarray(keys, dtype=np.uint64)
        if isinstance(mapper, _AnchorBase):
            codes = mapper.get_buckets(keys)
            live = sorted(mapper.working_set())
            full = np.bincount(codes, minlength=mapper.capacity)
            return cls(live, full[live], len(keys))
        codes = mapper.predict_codes(keys)
        table = mapper.code_table()
        full = np.bincount(codes, minlength=len(table))
        live = [i for i, r in enumerate(table) if r is not None]
        return cls([table[i] for i in live], full[live], len(keys))


def oversubscription(census: KeyCensus) -> float:
    """Percent by which the busiest resource exceeds the mean load."""
    if census.total <= 0 or len(census.counts) == 0:
        raise ContractViolation("census is empty")
    mean = census.total / len(census.counts)
    return 100.0 * (float(census.counts.max()) - mean) / mean


def chi_square_uniformity(census: KeyCensus) -> tuple[float, float]:
    """Chi-square goodness of fit against equal load; returns (stat, p)."""
    res = stats.chisquare(census.counts)
    return float(res.statistic), float(res.pvalue)


@dataclass
class DisruptionCensus:
    """Outcome of one churn event over a key sample."""

    event: str
    resource: object
    unchanged: int
    legitimate: int
    wrongful: int

    @property
    def n(self) -> int:
        return self.unchanged + self.legitimate + self.wrongful

    @property
    def wrongful_fraction(self) -> float:
        return self.wrongful / self.n

    @property
    def moved_fraction(self) -> float:
        return (self.legitimate + self.wrongful) / self.n


def _resource_ids(mapper, codes, ids):
    table = mapper.code_table()
    lut = np.array([ids.setdefault(r, len(ids)) if r is not None else -1 for r in table],
                   dtype=np.int64)
    return lut[codes]


def disruption_census(mapper: ConsistentHashMapper, event: str, key_sample,
                      resource=None) -> DisruptionCensus:
    """Apply ``event`` ("add" or "remove") to ``mapper`` and classify keys.

    A key is *legitimate* if it moved onto the added resource or off the
    removed one; any other change is *wrongful*.  The mapper is left in the
    post-event state.
    """
    return churn_census(mapper, [(event, resource)], key_sample)[0]


def churn_census(mapper: ConsistentHashMapper, events, key_sample) -> list[DisruptionCensus]:
    """Replay ``(event, resource)`` pairs, classifying keys after each one.

    Equivalent to calling :func:`disruption_census` per event, but the
    post-event lookup of one step is reused as the pre-event lookup of the
    next.
    """
    keys = np.asarray(key_sample, dtype=np.uint64)
    if keys.size == 0:
        raise ContractViolation("key sample is empty")
    ids: dict = {}
    before = _resource_ids(mapper, mapper.predict_codes(keys), ids)
    out = []
    for event, resource in events:
        after = _apply_event(mapper, event, resource, keys, ids)
        target = ids.setdefault(resource, len(ids))
        changed = before != after
        moved = after if event == "add" else before
        n_changed = int(changed.sum())
        n_legit = int((changed & (moved == target)).sum())
        out.append(DisruptionCensus(event, resource, len(keys) - n_changed, n_legit,
                                    n_changed - n_legit))
        before = after
    return out


def _apply_event(mapper, event, resource, keys, ids):
    if event == "add":
        if resource is None:
            raise ContractViolation("add needs a resource id")
        mapper.add_resource(resource)
    elif event == "remove":
        if resource is None:
            raise ContractViolation("remove needs a resource id")
        mapper.remove_resource(resource)
    else:
        raise ContractViolation(f"unknown event {event!r}")
    return _resource_ids(mapper, mapper.predict_codes(keys), ids)


# ------------------------------------------------------- lookup-cost stats
@dataclass
class TauStats:
    n: int
    mean: float
    std: float
    sem: float
    std_error_of_std: float
    histogram: dict
    ccdf: dict
    bound_mean: float
    bound_std: float

    def fraction_at(self, t: int) -> float:
        return self.histogram.get(t, 0) / self.n

    def fraction_above(self, t: int) -> float:
        return sum(c for k, c in self.histogram.items() if k > t) / self.n


def _std_error_of_std(x: np.ndarray) -> float:
    """Large-sample standard error of the sample standard deviation,
    sqrt((m4 - s^4) / (4 s^2 n)), valid for non-normal data."""
    n = len(x)
    s2 = float(x.var(ddof=1))
    if s2 == 0.0:
        return 0.0
    m4 = float(((x - x.mean()) ** 4).mean())
    return math.sqrt(max(m4 - s2 * s2, 0.0) / (4.0 * s2 * n))


def _anchor_of(obj):
    return obj.anchor_ if hasattr(obj, "anchor_") else obj


def tau_statistics(state, n_keys: int = 10**6, seed: int = 1, keys=None) -> TauStats:
    """Monte-Carlo distribution of hash operations per lookup."""
    anchor = _anchor_of(state)
    if keys is None:
        if n_keys < 10**4:
            raise ContractViolation("tau statistics need at least 10^4 keys")
        keys = random_keys(n_keys, seed)
    tau = np.asarray(anchor.trace_buckets(keys)[1], dtype=np.float64)
    n = len(tau)
    values, counts = np.unique(tau.astype(np.int64), return_counts=True)
    hist = {int(v): int(c) for v, c in zip(values, counts)}
    tail = np.cumsum(counts[::-1])[::-1]
    ccdf = {int(v): float(t) / n for v, t in zip(values, tail)}  # P(tau >= v)
    a, w = anchor.capacity, anchor.N
    std = float(tau.std(ddof=1)) if n > 1 else 0.0
    return TauStats(
        n=n, mean=float(tau.mean()), std=std, sem=std / math.sqrt(n),
        std_error_of_std=_std_error_of_std(tau), histogram=hist, ccdf=ccdf,
        bound_mean=1 + math.log(a / w), bound_std=math.sqrt(math.log(a / w)),
    )


@dataclass
class XiStats:
    n: int
    mean: float
    sem: float
    bound: float


def xi_bound(a: int, w: int) -> float:
    """1 + ln(a/w) + ln^2(a/w): the memory-access bound under random removals."""
    x = math.log(a / w)
    return 1 + x + x * x


def xi_statistics(state, n_keys: int = 10**6, seed: int = 2, keys=None) -> XiStats:
    """Mean A/K reads per lookup; only meaningful for the minimal tier."""
    anchor = _anchor_of(state)
    if not isinstance(anchor, AnchorHash):
        raise ContractViolation("memory accesses are traced for the minimal tier only")
    if keys is None:
        keys = random_keys(n_keys, seed)
    xi = np.asarray(anchor.trace_buckets(keys)[2], dtype=np.float64)
    n = len(xi)
    sem = float(xi.std(ddof=1)) / math.sqrt(n) if n > 1 else 0.0
    return XiStats(n, float(xi.mean()), sem, xi_bound(anchor.capacity, anchor.N))


# ---------------------------------------------------------------- updates
@dataclass
class UpdateCost:
    event: str
    ops: int
    trials: int
    wall_seconds: float


def update_cost(obj, event: str, trials: int = 100, bucket=None) -> UpdateCost:
    """Mutating primitive operations (and mean wall time) for one update.

    Each trial performs ``event`` and then undoes it, so the state is the same
    before every trial.  For "remove", ``bucket`` (or resource) defaults to the
    first working one.  Returns the op count of a single event; the count must
    be identical across trials or ``ContractViolation`` is raised.
    """
    if event not in ("add", "remove"):
        raise ContractViolation(f"unknown event {event!r}")
    anchor_like = isinstance(obj, _AnchorBase)
    ops_seen = set()
    elapsed = 0.0
    for t in range(trials):
        if anchor_like:
            if event == "remove":
                target = bucket if bucket is not None else int(obj.W[0])
                obj.update_ops = 0
                t0 = time.perf_counter()
                obj.remove_bucket(target)
                elapsed += time.perf_counter() - t0
                ops_seen.add(obj.update_ops)
                obj.add_bucket()
            else:
                obj.update_ops = 0
                t0 = time.perf_counter()
                b = obj.add_bucket()
                elapsed += time.perf_counter() - t0
                ops_seen.add(obj.update_ops)
                obj.remove_bucket(b)
        else:
            if event == "remove":
                target = bucket if bucket is not None else obj.resources[0]
                obj.update_ops = 0
                t0 = time.perf_counter()
                obj.remove_resource(target)
                elapsed += time.perf_counter() - t0
                ops_seen.add(obj.update_ops)
                obj.add_resource(target)
            else:
                name = f"__update_probe_{t}"
                obj.update_ops = 0
                t0 = time.perf_counter()
                obj.add_resource(name)
                elapsed += time.perf_counter() - t0
                ops_seen.add(obj.update_ops)
                obj.remove_resource(name)
    obj.update_ops = 0
    if len(ops_seen) != 1 and anchor_like:
        raise ContractViolation(f"op count varied across trials: {sorted(ops_seen)}")
    return UpdateCost(event, max(ops_seen), trials, elapsed / trials)


# -------------------------------------------------------------- throughput
def throughput(obj, duration: float = 0.5, n_keys: int = 10**5, seed: int = 3,
               keys=None) -> float:
    """Lookups per second over pre-generated keys (report-only)."""
    if keys is None:
        keys = random_keys(n_keys, seed)
    lookup = obj.get_buckets if isinstance(obj, _AnchorBase) else obj.predict_codes
    lookup(keys[:16])  # compile / warm up
    done = 0
    t0 = time.perf_counter()
    while True:
        lookup(keys)
        done += len(keys)
        elapsed = time.perf_counter() - t0
        if elapsed >= duration:
            return done / elapsed


# ---------------------------------------------------------------- reports
@dataclass
class ScenarioReport:
    algorithm: str
    a: int | None
    w: int | None
    removal: str
    seed: int
    oversubscription_percent: float | None = None
    keys_sampled: int | None = None
    disruption: list = field(default_factory=list)
    tau_histogram: dict | None = None
    tau_mean: float | None = None
    tau_std: float | None = None
    tau_sem: float | None = None
    tau_n: int | None = None
    xi_mean: float | None = None
    xi_sem: float | None = None
    xi_n: int | None = None
    bounds: dict = field(default_factory=dict)
    update_ops: dict = field(default_factory=dict)
    snapshots: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    wall_lookups_per_sec: float | None = None
    wall_update_seconds: dict = field(default_factory=dict)

    def set_bounds(self, a, w):
        x = math.log(a / w)
        self.bounds = {
            "tau_mean": 1 + x,
            "tau_std": math.sqrt(x),
            "xi_mean_random_removals": 1 + x + x * x,
            "xi_mean_order": (1 + x) ** 2,
        }

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["tau_histogram"] is not None:
            d["tau_histogram"] = {str(k): v for k, v in sorted(self.tau_histogram.items())}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def rows(self, scenario: str = "scenario") -> list[dict]:
        base = {"algorithm": self.algorithm, "scenario": scenario,
                "a": self.a, "w": self.w}
        out = []

        def row(metric, value, n=None, se=None, bound=None, wall_s=None, wall_mkps=None):
            out.append({**base, "metric": metric, "n": n, "value": value,
                        "std_error": se, "bound": bound,
                        "wall_seconds": wall_s, "wall_mkps": wall_mkps})

        if self.oversubscription_percent is not None:
            row("oversubscription_percent", self.oversubscription_percent, self.keys_sampled)
        for i, d in enumerate(self.disruption):
            row(f"event{i}_{d['event']}_moved_fraction", d["moved_fraction"], d["n"])
            row(f"event{i}_{d['event']}_wrongful_fraction", d["wrongful_fraction"], d["n"])
        if self.tau_mean is not None:
            row("tau_mean", self.tau_mean, self.tau_n, self.tau_sem, self.bounds.get("tau_mean"))
            row("tau_std", self.tau_std, self.tau_n, None, self.bounds.get("tau_std"))
            for t, c in sorted((self.tau_histogram or {}).items()):
                row(f"tau_count_{t}", c, self.tau_n)
        if self.xi_mean is not None:
            row("xi_mean", self.xi_mean, self.xi_n, self.xi_sem,
                self.bounds.get("xi_mean_random_removals"))
        for ev, ops in sorted(self.update_ops.items()):
            row(f"update_ops_{ev}", ops, None, None, None,
                wall_s=self.wall_update_seconds.get(ev))
        for k, v in sorted(self.extra.items()):
            row(k, v)
        if self.wall_lookups_per_sec is not None:
            row("lookup_rate", None, wall_mkps=self.wall_lookups_per_sec / 1e6)
        return out


def write_csv(rows, fh=None) -> str:
    """Write rows in the stable column order; returns the text."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: _fmt(r.get(k)) for k in CSV_COLUMNS})
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v
