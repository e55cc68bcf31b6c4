from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from mlmc_reliability.distributions import Exponential, Weibull, make_rng, sample_matrix, weibull_scale_arrays
from mlmc_reliability.generator import GrowthConfig, grow
from mlmc_reliability.levels import (
    LevelPartition,
    PilotData,
    build_partition,
    default_levels,
    delta_scores,
    level_sizes,
    pilot_from_times,
    pilot_scores,
)
from mlmc_reliability.simulator import ContractError
from mlmc_reliability.system import Component, Network, System


def test_eta_hand_example():
    # cut {a, b}; a-samples (1, 3), b-samples (2, 2)
    p = pilot_from_times(np.array([[1.0, 2.0], [3.0, 2.0]]), [(1, 2)])
    assert p.eta.tolist() == [2.5]
    assert p.n_pilot == 2 and p.cost_ops == 2


def test_delta_hand_example():
    d = delta_scores(np.array([[5.0], [2.0]]), np.array([4.0, 6.0]))
    assert d.tolist() == [2.0]


def test_delta_zero_when_candidate_never_earlier():
    d = delta_scores(np.array([[7.0, 1.0], [9.0, 1.0]]), np.array([4.0, 6.0]))
    assert d[0] == 0.0 and d[1] == 4.0


def test_level_sizes_example():
    assert level_sizes(100, 5) == [4, 7, 13, 25, 50, 100]


@given(st.integers(1, 5000), st.data())
def test_level_sizes_formula_and_distinct_up_to_default(m, data):
    L = data.draw(st.integers(0, default_levels(m)))
    sizes = level_sizes(m, L)
    assert sizes[-1] == m
    assert all(s == -(-m // 2 ** (L - l)) for l, s in enumerate(sizes))
    assert all(a < b for a, b in zip(sizes, sizes[1:]))


def test_default_levels():
    assert default_levels(1) == 0
    assert default_levels(100) == 6
    assert default_levels(128) == 7


def _pilot(m: int, seed: int, n: int = 30) -> PilotData:
    ct = make_rng(seed).exponential(size=(n, m))
    return PilotData(ct, ct.mean(axis=0))


@given(st.integers(1, 300), st.integers(0, 1000), st.data())
@settings(max_examples=60, deadline=None)
def test_partition_nesting(m, seed, data):
    L = data.draw(st.integers(0, default_levels(m) + 2))
    part = build_partition(_pilot(m, seed), L)
    assert part.L == min(L, default_levels(m))
    assert part.clamped == (L > default_levels(m))
    assert sorted(part.order) == list(range(m))
    for l in range(part.L):
        assert set(part.level(l)) < set(part.level(l + 1))
    assert len(part.level(part.L)) == m


def test_level_zero_holds_smallest_eta():
    p = _pilot(40, 3)
    part = build_partition(p, 3)
    expect = np.argsort(p.eta, kind="stable")[: part.sizes[0]]
    assert set(part.level(0)) == set(expect.tolist())


def test_each_level_adds_largest_delta():
    p = _pilot(64, 9)
    part = build_partition(p, 4)
    for l in range(1, part.L + 1):
        prev = list(part.level(l - 1))
        t_prev = p.cut_times[:, prev].min(axis=1)
        cand = [k for k in range(64) if k not in prev]
        d = delta_scores(p.cut_times[:, cand], t_prev)
        added = set(part.level(l)) - set(prev)
        threshold = np.sort(d)[::-1][len(added) - 1]
        assert all(d[cand.index(k)] >= threshold for k in added)


@given(st.integers(2, 100), st.integers(0, 1000), st.integers(0, 1000))
@settings(max_examples=60, deadline=None)
def test_selection_is_permutation_invariant(m, seed, pseed):
    p = _pilot(m, seed)
    perm = make_rng(pseed).permutation(m)
    q = PilotData(p.cut_times[:, perm], p.eta[perm])
    a = build_partition(p)
    b = build_partition(q)
    assert {int(perm[i]) for i in b.level(0)} == set(a.level(0))
    # compare until a selection boundary falls inside a block of tied scores
    for l in range(1, a.L + 1):
        prev = list(a.level(l - 1))
        cand = [k for k in range(m) if k not in prev]
        d = np.sort(delta_scores(p.cut_times[:, cand], p.cut_times[:, prev].min(axis=1)))[::-1]
        k = a.sizes[l] - a.sizes[l - 1]
        if k < len(d) and d[k - 1] == d[k]:
            break
        assert {int(perm[i]) for i in b.level(l)} == set(a.level(l))


def test_ties_follow_canonical_order():
    ct = np.ones((5, 6))
    part = build_partition(PilotData(ct, ct.mean(axis=0)), 2)
    assert part.order == tuple(range(6))


def test_single_cut_system():
    s = oracles.series(1)
    part = build_partition(pilot_scores(s, 10, make_rng(0)))
    assert part.L == 0 and part.order == (0,)


def test_dominant_cut_is_found():
    # one weak component in series with a robust parallel block
    net = Network(4, ((0, 1), (1, 2), (1, 3), (1, 4), (2, 5), (3, 5), (4, 5)))
    comps = [Component(Exponential(10.0))] + [Component(Exponential(0.01)) for _ in range(3)]
    s = System(net, comps)
    assert s.require_cutsets() == [(1,), (2, 3, 4)]
    hits = 0
    for seed in range(20):
        part = build_partition(pilot_scores(s, 200, make_rng(seed)), 1)
        hits += part.level(0) == (0,)
    assert hits == 20


def test_repairable_pilot_with_rate_zero_equals_static_pilot():
    s = grow(GrowthConfig(20, seed=5, shape=0.5, repair_rate=0.0))
    a = pilot_scores(s, 60, make_rng(3))
    b = pilot_scores(s, 60, make_rng(3), repairable=False)
    assert a.repairable and not b.repairable
    np.testing.assert_array_equal(a.cut_times, b.cut_times)
    assert build_partition(a) == build_partition(b)


def test_repairable_pilot_scores_are_nonnegative():
    s = grow(GrowthConfig(15, seed=2, shape=0.5, repair_rate=0.2))
    p = pilot_scores(s, 50, make_rng(1))
    assert np.all(p.eta >= 0) and p.cost_ops > 0
    part = build_partition(p)
    assert all(np.all(np.array(d) >= 0) for d in part.deltas)


def test_pilot_size_validation():
    with pytest.raises(ValueError):
        pilot_scores(oracles.bridge(), 0)


def test_partition_round_trip():
    part = build_partition(_pilot(37, 1), 4)
    assert LevelPartition.from_dict(part.to_dict()) == part


def test_partition_rejects_bad_levels():
    d = build_partition(_pilot(8, 1), 3).to_dict()
    d["levels"]["1"] = list(reversed(d["levels"]["1"]))
    with pytest.raises(ContractError):
        LevelPartition.from_dict(d)
    with pytest.raises(ContractError):
        LevelPartition((0, 1, 2, 3), (1, 3, 4))
    with pytest.raises(ContractError):
        LevelPartition((0, 1, 1), (2, 3))


def test_partition_cut_count_mismatch():
    part = build_partition(_pilot(4, 1))
    with pytest.raises(ContractError):
        part.ordered_cuts([(1,), (2,)])


def test_weibull_pilot_matches_direct_evaluation():
    s = grow(GrowthConfig(10, seed=7, shape=3.0))
    p = pilot_scores(s, 20, make_rng(4))
    inv, scale = weibull_scale_arrays([c.lifetime for c in s.components])
    t = sample_matrix(inv, scale, make_rng(4), 20)
    for k, cut in enumerate(s.cutsets):
        np.testing.assert_array_equal(p.cut_times[:, k], t[:, [c - 1 for c in cut]].max(axis=1))
    assert isinstance(s.components[0].lifetime, Weibull)
