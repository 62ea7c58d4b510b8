import math

import numpy as np
import pytest
from scipy import stats

from anchorhash import AnchorHash, AnchorHashMapper, HRWMapper, MaglevMapper, NaiveAnchor
from anchorhash.evaluation import (
    CSV_COLUMNS,
    KeyCensus,
    ScenarioReport,
    build_anchor,
    chi_square_uniformity,
    disruption_census,
    oversubscription,
    removal_order,
    tau_statistics,
    throughput,
    update_cost,
    write_csv,
    xi_bound,
    xi_statistics,
)
from anchorhash.exceptions import ContractViolation
from anchorhash.hashing import random_keys

from .oracle import tau_moments, tau_pmf


def census(counts):
    counts = np.array(counts)
    return KeyCensus(list(range(len(counts))), counts, int(counts.sum()))


def test_oversubscription_formula():
    assert oversubscription(census([100, 100, 100])) == 0.0
    assert oversubscription(census([110, 100, 90])) == pytest.approx(10.0)
    with pytest.raises(ContractViolation):
        oversubscription(census([]))


def test_census_totals_checked():
    with pytest.raises(ContractViolation):
        KeyCensus(["a"], np.array([3]), 4)


def test_census_includes_idle_resources():
    m = HRWMapper().fit(["a", "b", "c"])
    c = KeyCensus.of(m, random_keys(3, 1))
    assert len(c.counts) == 3 and c.total == 3


def test_disruption_census_partition():
    m = MaglevMapper(table_size=2003, seed=1).fit([f"r{i}" for i in range(15)])
    keys = random_keys(20_000, 2)
    d = disruption_census(m, "add", keys, "new")
    assert d.unchanged + d.legitimate + d.wrongful == d.n == 20_000
    d = disruption_census(m, "remove", keys, "r4")
    assert d.n == 20_000 and d.legitimate > 0


def test_disruption_census_anchor_is_clean():
    m = AnchorHashMapper(capacity=40, seed=2).fit([f"r{i}" for i in range(30)])
    keys = random_keys(20_000, 3)
    for ev, r in [("remove", "r1"), ("remove", "r29"), ("add", "x"), ("add", "y")]:
        assert disruption_census(m, ev, keys, r).wrongful == 0


def test_disruption_census_rejects_bad_input():
    m = HRWMapper().fit(["a", "b"])
    with pytest.raises(ContractViolation):
        disruption_census(m, "add", np.array([], dtype=np.uint64), "c")
    with pytest.raises(ContractViolation):
        disruption_census(m, "flip", random_keys(5, 1), "a")


def test_removal_orders():
    assert removal_order(10, 3, "ascending") == [0, 1, 2]
    r = removal_order(10, 9, "random", seed=4)
    assert len(set(r)) == 9 and removal_order(10, 9, "random", seed=4) == r
    with pytest.raises(ContractViolation):
        removal_order(10, 10)


def test_tau_fresh_anchor():
    s = tau_statistics(AnchorHash(64), 10**4)
    assert s.mean == 1.0 and s.std == 0.0 and s.histogram == {1: 10**4}


def test_tau_needs_enough_keys():
    with pytest.raises(ContractViolation):
        tau_statistics(AnchorHash(8), 100)


@pytest.mark.parametrize("a,w,pattern", [(200, 100, "random"), (300, 30, "ascending")])
def test_tau_distribution_matches_exact_pmf(a, w, pattern):
    """The hash-op count is 1 + a sum of independent Bernoulli(1/(w+j)) for
    any removal sequence; compare the empirical histogram to that pmf."""
    anchor = build_anchor(a, w, pattern, seed=11)
    s = tau_statistics(anchor, 200_000, seed=5)
    pmf = tau_pmf(a, w)
    mean, std = tau_moments(a, w)
    assert abs(s.mean - mean) < 4 * s.sem
    assert abs(s.std - std) < 4 * s.std_error_of_std + 1e-9
    # pool the tail so each expected bin is >= 5
    obs, exp = [], []
    tail_o = tail_e = 0.0
    for t, p in enumerate(pmf):
        e = p * s.n
        if t == 0:
            continue
        if e >= 5:
            obs.append(s.histogram.get(t, 0))
            exp.append(e)
        else:
            tail_o += s.histogram.get(t, 0)
            tail_e += e
    obs.append(tail_o)
    exp.append(tail_e)
    exp = np.array(exp) * sum(obs) / sum(exp)
    assert stats.chisquare(obs, exp).pvalue > 0.001


def test_ccdf_consistent_with_histogram():
    s = tau_statistics(build_anchor(110, 100, seed=1), 10**5)
    assert s.ccdf[1] == pytest.approx(1.0)
    assert s.ccdf.get(2, 0.0) == pytest.approx(s.fraction_above(1))


def test_xi_bound_expression():
    assert xi_bound(2, 1) == pytest.approx(1 + math.log(2) + math.log(2) ** 2)
    assert xi_bound(5, 5) == 1.0


def test_xi_fresh_anchor_single_read():
    s = xi_statistics(AnchorHash(50), 10**4)
    assert s.mean == 1.0


def test_xi_minimal_tier_only():
    with pytest.raises(ContractViolation):
        xi_statistics(NaiveAnchor(8, 4), 10**4)


def test_update_cost_constant_for_minimal_tier():
    small = update_cost(build_anchor(1000, 500, seed=1), "remove", trials=10)
    big = update_cost(build_anchor(10**5, 5 * 10**4, seed=1), "remove", trials=10)
    assert small.ops == big.ops == 5
    assert update_cost(build_anchor(1000, 500), "add", trials=10).ops == 4


def test_update_cost_naive_grows_with_working_set():
    x = NaiveAnchor(400, 400)
    c = update_cost(x, "remove", trials=5)
    assert 399 <= c.ops <= 2 * 399


def test_update_cost_mapper():
    c = update_cost(MaglevMapper(table_size=1009).fit(["a", "b", "c"]), "add", trials=3)
    assert c.ops >= 1009


def test_throughput_positive():
    assert throughput(AnchorHash(16), duration=0.05) > 0
    assert throughput(HRWMapper().fit(["a", "b"]), duration=0.05) > 0


def test_report_rows_and_csv():
    rep = ScenarioReport("anchor", 10, 5, "random", 0)
    rep.set_bounds(10, 5)
    rep.tau_mean, rep.tau_std, rep.tau_sem, rep.tau_n = 1.5, 0.7, 0.01, 100
    rep.tau_histogram = {1: 60, 2: 40}
    rep.update_ops = {"remove": 5}
    rep.wall_update_seconds = {"remove": 1e-6}
    rows = rep.rows("t")
    text = write_csv(rows)
    header = text.splitlines()[0].split(",")
    assert header == CSV_COLUMNS
    assert "tau_count_2" in text and "update_ops_remove" in text
    d = rep.to_dict()
    assert d["tau_histogram"] == {"1": 60, "2": 40}
    assert rep.bounds["tau_mean"] == pytest.approx(1 + math.log(2))


def test_chi_square_uniformity_flags_skew():
    assert chi_square_uniformity(census([1000, 1000, 1000]))[1] > 0.99
    assert chi_square_uniformity(census([1500, 1000, 500]))[1] < 1e-6


def test_churn_census_matches_stepwise():
    from anchorhash.evaluation import churn_census
    from anchorhash import RingMapper

    keys = random_keys(5000, 9)
    events = [("remove", "r2"), ("add", "n0"), ("remove", "r7"), ("add", "n1")]
    a = RingMapper(copies=20).fit([f"r{i}" for i in range(10)])
    b = RingMapper(copies=20).fit([f"r{i}" for i in range(10)])
    batch = churn_census(a, events, keys)
    single = [disruption_census(b, e, keys, r) for e, r in events]
    assert batch == single
