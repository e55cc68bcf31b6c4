from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from mlmc_reliability.distributions import make_rng
from mlmc_reliability.generator import GrowthConfig, grow
from mlmc_reliability.system import (
    CapacityError,
    Component,
    Network,
    StructureError,
    System,
    batch_lifetimes,
    brute_force_min_cutsets,
    canonical_cutsets,
    cut_failure_times,
    cut_index,
    enumerate_min_cutsets,
    eval_lifetime,
    is_failed,
    validate_system,
)


def test_bridge_cuts():
    net = Network(5, oracles.BRIDGE_EDGES)
    assert enumerate_min_cutsets(net) == [(1, 2), (4, 5), (1, 3, 5), (2, 3, 4)]


def test_series_and_parallel_cuts():
    assert oracles.series(4).require_cutsets() == [(1,), (2,), (3,), (4,)]
    assert oracles.parallel(3).require_cutsets() == [(1, 2, 3)]


def test_eval_lifetime_examples():
    assert eval_lifetime([(1,), (2,)], [3.0, 5.0]) == 3.0
    assert eval_lifetime([(1, 2)], [3.0, 5.0]) == 5.0
    assert eval_lifetime([(1, 2), (4, 5), (1, 3, 5), (2, 3, 4)], [1, 2, 3, 4, 5]) == 2.0


def test_eval_lifetime_rejects_bad_id():
    with pytest.raises(IndexError):
        eval_lifetime([(0,)], [1.0])


def test_is_failed_examples():
    cuts = [(1, 2), (4, 5), (1, 3, 5), (2, 3, 4)]
    assert is_failed(cuts, [0, 0, 1, 1, 1])
    assert not is_failed(cuts, [0, 1, 1, 0, 1])
    assert is_failed(cuts, [0, 1, 0, 1, 0])


def test_cycle_is_rejected():
    net = Network(2, ((0, 1), (1, 2), (2, 1), (2, 3)))
    with pytest.raises(StructureError):
        net.check()


def test_dangling_component_is_rejected():
    net = Network(2, ((0, 1), (1, 3), (0, 2)))
    with pytest.raises(StructureError, match="not on any"):
        net.check()


def test_terminal_clash():
    with pytest.raises(StructureError):
        Network(2, ((0, 1), (1, 3)), source=1)


def test_capacity_error():
    net = Network(5, oracles.BRIDGE_EDGES)
    with pytest.raises(CapacityError):
        enumerate_min_cutsets(net, cap=3)


def test_dualization_agrees_on_bridge():
    net = Network(5, oracles.BRIDGE_EDGES)
    assert enumerate_min_cutsets(net, method="dualization") == enumerate_min_cutsets(net)


@given(st.integers(0, 10_000), st.integers(2, 12))
@settings(max_examples=40, deadline=None)
def test_enumeration_matches_exhaustive_oracle(seed, n):
    s = grow(GrowthConfig(n, seed=seed))
    expected = oracles.brute_min_cuts(s.network)
    assert s.cutsets == expected
    assert enumerate_min_cutsets(s.network, method="dualization") == expected
    assert brute_force_min_cutsets(s.network) == expected


@given(st.integers(0, 10_000), st.integers(2, 10), st.integers(0, 2**31))
@settings(max_examples=40, deadline=None)
def test_cut_lifetime_equals_first_disconnection(seed, n, tseed):
    s = grow(GrowthConfig(n, seed=seed))
    t = make_rng(tseed).exponential(size=n)
    assert eval_lifetime(s.cutsets, t) == oracles.lifetime_by_search(s.network, t)


def test_vectorised_lifetimes_match_scalar():
    s = grow(GrowthConfig(25, seed=4))
    idx = cut_index(s.cutsets)
    times = make_rng(1).exponential(size=(300, 25))
    expect = [eval_lifetime(s.cutsets, row) for row in times]
    np.testing.assert_array_equal(batch_lifetimes(times, idx), expect)
    np.testing.assert_array_equal(batch_lifetimes(times, idx, chunk=50), expect)
    ct = cut_failure_times(times, idx, chunk=77)
    np.testing.assert_array_equal(ct.min(axis=1), expect)
    assert ct[5, 0] == max(times[5, c - 1] for c in s.cutsets[0])


def test_canonical_order():
    assert canonical_cutsets([(3, 1), (2,), (1, 2, 3), (1, 2)]) == [(2,), (1, 2), (1, 3), (1, 2, 3)]


def test_validation_accepts_enumerated_cuts():
    s = grow(GrowthConfig(12, seed=2))
    rep = validate_system(s)
    assert rep.exhaustive and rep.valid


def test_validation_reports_each_defect():
    net = Network(5, oracles.BRIDGE_EDGES)
    comps = [Component(None) for _ in range(5)]
    rep = validate_system(System(net, comps, [(1, 2), (1, 3, 5), (2, 3, 4)]))
    assert rep.uncovered == [(4, 5)]
    rep = validate_system(System(net, comps, [(1, 2), (4, 5), (1, 3, 5), (2, 3, 4), (1, 2, 3), (3,), (7,)]))
    assert (1, 2, 3) in rep.not_minimal
    assert (3,) in rep.not_a_cut
    assert (7,) in rep.invalid_ids
    assert not rep.valid


def test_validation_reports_structure():
    net = Network(2, ((0, 1), (1, 3), (0, 2)))
    rep = validate_system(System(net, [Component(None)] * 2, []))
    assert rep.structure and not rep.valid


@given(st.integers(0, 10_000), st.integers(2, 14), st.integers(0, 2**31))
@settings(max_examples=40, deadline=None)
def test_dropping_cuts_never_shortens_lifetime(seed, n, tseed):
    s = grow(GrowthConfig(n, seed=seed))
    rng = make_rng(tseed)
    t = rng.exponential(size=n)
    keep = [c for c in s.cutsets if rng.random() < 0.5]
    assert eval_lifetime(keep, t) >= eval_lifetime(s.cutsets, t)


@given(st.integers(0, 10_000), st.integers(2, 14), st.integers(0, 2**31), st.floats(0, 3))
@settings(max_examples=40, deadline=None)
def test_status_at_time_agrees_with_lifetime(seed, n, tseed, when):
    s = grow(GrowthConfig(n, seed=seed))
    t = make_rng(tseed).exponential(size=n)
    status = (t > when).astype(int)
    assert is_failed(s.cutsets, status) == (eval_lifetime(s.cutsets, t) <= when)


def test_empty_cut_list_never_fails():
    assert eval_lifetime([], [1.0, 2.0]) == float("inf")
    assert not is_failed([], [0, 0])
