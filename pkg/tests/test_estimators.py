from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from mlmc_reliability.distributions import Exponential, make_rng
from mlmc_reliability.estimators import (
    EstimateResult,
    LevelStats,
    McConfig,
    _BatchMoments,
    mc_sample_size,
    optimal_samples,
    run_levels,
    run_mc,
    run_mlmc,
    total_cost,
    trimmed_mean,
)
from mlmc_reliability.generator import GrowthConfig, grow
from mlmc_reliability.levels import LevelPartition, build_partition, pilot_scores
from mlmc_reliability.simulator import ContractError
from mlmc_reliability.system import Component, Network, System


def test_mc_sample_size_example():
    assert mc_sample_size(1.0, 0.1) == 385
    assert mc_sample_size(100.0, 1.0) == 385
    assert mc_sample_size(0.0, 0.1) == 0


def test_mc_sample_size_validation():
    with pytest.raises(ValueError):
        mc_sample_size(-1.0, 0.1)
    with pytest.raises(ValueError):
        McConfig(0.0)
    with pytest.raises(ValueError):
        McConfig(0.1, n_pilot=1)


@given(
    st.lists(st.floats(1e-6, 1e3), min_size=1, max_size=8),
    st.floats(1e-3, 1.0),
)
def test_optimal_samples_meet_variance_budget(var, eps):
    w = [2.0**l for l in range(len(var))]
    n = optimal_samples(var, w, eps)
    budget = sum(v / k for v, k in zip(var, n))
    assert budget <= eps * eps / 4 * (1 + 1e-9)


def test_optimal_samples_hand_example():
    # V = (4, 1), w = (1, 2): sum sqrt(V w) = 2 + sqrt 2
    n = optimal_samples([4.0, 1.0], [1.0, 2.0], 1.0)
    s = 2 + math.sqrt(2)
    assert n == [math.ceil(4 * 2 * s), math.ceil(4 * math.sqrt(0.5) * s)]


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=60), st.integers(1, 7))
def test_chan_merge_matches_numpy(x, k):
    x = np.asarray(x)
    st_ = LevelStats(0, 1)
    for part in np.array_split(x, k):
        if part.size:
            st_.merge(_BatchMoments(part.size, part.mean(), ((part - part.mean()) ** 2).sum(),
                                    part.mean(), ((part - part.mean()) ** 2).sum(), 0.0, 0.0, None))
    assert st_.N == x.size
    np.testing.assert_allclose(st_.mean, x.mean(), rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(st_.var, x.var(ddof=1), rtol=1e-7, atol=1e-7)
    np.testing.assert_allclose(st_.sum_y2, (x * x).sum(), rtol=1e-7, atol=1e-6)


def test_trimmed_mean():
    assert trimmed_mean(list(range(100)) + [10**9]) == pytest.approx(50.0)
    assert math.isnan(trimmed_mean([]))


def test_total_cost_example():
    a = LevelStats(0, 2, N=100, ops=200.0)
    b = LevelStats(1, 4, N=50, ops=200.0)
    r = EstimateResult("mlmc", 0.1, 0.0, 0.0, 0.0, [a, b], cost_proxy=400.0, pilot_cost=30.0)
    c = total_cost(r)
    assert r.cost_proxy == 400.0 and c.proxy == 430.0


def test_mc_two_series_exponentials():
    s = oracles.series(2, Exponential(1.0))
    r = run_mc(s, McConfig(0.01), seed=3)
    assert abs(r.estimate - 0.5) < 3 * math.sqrt(r.variance)
    # N is sized from the 100 pilot draws, so it only roughly tracks the final variance
    assert r.levels[0].N == pytest.approx(mc_sample_size(r.levels[0].var, 0.01), rel=0.3)
    assert r.cost_proxy == 2 * r.levels[0].N


def test_infinite_lifetimes_are_rejected():
    s = System(oracles.series(1).network, [Component(Exponential(0.0))], [(1,)])
    with pytest.raises(ContractError):
        run_mc(s, McConfig(0.1), seed=0)


def test_single_level_mlmc_is_plain_mc():
    s = oracles.series(2, Exponential(1.0))
    part = LevelPartition((0, 1), (2,))
    r = run_mlmc(s, part, 0.01, seed=4)
    assert r.L_used == 0 and r.bias == 0.0
    assert np.all(np.asarray([lv.level for lv in r.levels]) == 0)
    assert abs(r.estimate - 0.5) < 3 * math.sqrt(r.variance)
    assert r.variance <= 0.01**2 / 4 * 1.05


def test_telescoping_sum_is_unbiased_on_bridge():
    s = oracles.bridge(Exponential(1.0))
    exact = float(oracles.iid_exp_mean(s.require_cutsets()))
    part = build_partition(pilot_scores(s, 200, make_rng(1)))
    stats = run_levels(s, part, 20000, seed=2)
    est = sum(lv.mean for lv in stats)
    se = math.sqrt(sum(lv.var / lv.N for lv in stats))
    assert abs(est - exact) < 3 * se
    assert all(lv.mean <= 0 for lv in stats[1:])


def test_mlmc_meets_variance_target():
    s = grow(GrowthConfig(20, seed=0, shape=1.0))
    pilot = pilot_scores(s, 100, make_rng(0))
    r = run_mlmc(s, build_partition(pilot), 2**-4, seed=1, pilot=pilot)
    assert r.variance <= (2**-4) ** 2 / 4 * 1.05
    assert r.bias <= 2**-5
    assert r.pilot_cost == pilot.cost_ops
    assert r.total_cost_proxy == r.cost_proxy + pilot.cost_ops
    assert [lv.level for lv in r.levels] == list(range(r.L_used + 1))


def test_mlmc_results_do_not_depend_on_workers():
    s = oracles.bridge(Exponential(1.0))
    part = build_partition(pilot_scores(s, 100, make_rng(0)))
    a = run_mlmc(s, part, 0.05, seed=7, force_all_levels=True, batch_size=64)
    b = run_mlmc(s, part, 0.05, seed=7, force_all_levels=True, batch_size=64, workers=2)
    assert a.to_dict() == b.to_dict()


def test_mc_results_do_not_depend_on_workers():
    s = grow(GrowthConfig(10, seed=2, shape=0.5, repair_rate=0.5))
    a = run_mc(s, McConfig(0.5, n_pilot=40), seed=1)
    b = run_mc(s, McConfig(0.5, n_pilot=40), seed=1, workers=2)
    assert a.to_dict() == b.to_dict()


def test_level_values_vanish_when_added_cuts_never_fail_first():
    # component 1 is far weaker than the parallel pair (2, 3), so adding that cut changes nothing
    net = Network(3, ((0, 1), (1, 2), (1, 3), (2, 4), (3, 4)))
    comps = [Component(Exponential(1.0)), Component(Exponential(1e-12)), Component(Exponential(1e-12))]
    s = System(net, comps)
    assert s.require_cutsets() == [(1,), (2, 3)]
    stats = run_levels(s, LevelPartition((0, 1), (1, 2)), 500, seed=0)
    assert stats[1].mean == 0.0 and stats[1].var == 0.0
    assert stats[0].var > 0


def test_mlmc_cost_grows_as_eps_shrinks():
    s = grow(GrowthConfig(20, seed=0, shape=1.0))
    part = build_partition(pilot_scores(s, 100, make_rng(0)))
    costs = [run_mlmc(s, part, e, seed=3).cost_proxy for e in (2**-2, 2**-3, 2**-4, 2**-5)]
    assert all(a <= b for a, b in zip(costs, costs[1:]))


def test_repairable_mlmc_uses_measured_costs():
    s = grow(GrowthConfig(12, seed=1, shape=0.5, repair_rate=0.3))
    pilot = pilot_scores(s, 50, make_rng(0))
    part = build_partition(pilot)
    r = run_mlmc(s, part, 0.5, seed=2, pilot=pilot)
    assert r.repairable
    assert all(lv.kappa_ops > 0 for lv in r.levels)
    assert r.variance <= 0.5**2 / 4 * 1.05
    rs = run_mlmc(s, part, 0.5, seed=2, pilot=pilot, cost="seconds")
    assert rs.variance <= 0.5**2 / 4 * 1.05


def test_mlmc_argument_validation():
    s = oracles.bridge()
    part = build_partition(pilot_scores(s, 20, make_rng(0)))
    for kw in (dict(eps=0.0), dict(eps=0.1, cost="flops"), dict(eps=0.1, n_init=1)):
        with pytest.raises(ValueError):
            run_mlmc(s, part, **kw)
    with pytest.raises(ValueError):
        run_levels(s, part, 1)


def test_forced_telescope_is_unbiased_over_repetitions():
    s = grow(GrowthConfig(10, seed=4, shape=1.0))
    part = build_partition(pilot_scores(s, 100, make_rng(0)))
    assert part.L >= 2
    est = np.array([run_mlmc(s, part, 0.1, seed=r, force_all_levels=True).estimate for r in range(200)])
    ref = run_mc(s, McConfig(0.005), seed=999)
    se = math.sqrt(est.var(ddof=1) / est.size + ref.variance)
    assert abs(est.mean() - ref.estimate) < 3 * se


def test_single_level_paired_with_mc():
    s = grow(GrowthConfig(10, seed=4, shape=1.0))
    part = LevelPartition(tuple(range(len(s.cutsets))), (len(s.cutsets),))
    diffs = np.array([run_mlmc(s, part, 0.1, seed=r).estimate - run_mc(s, McConfig(0.1), seed=r).estimate
                      for r in range(60)])
    assert abs(diffs.mean()) < 3 * diffs.std(ddof=1) / math.sqrt(diffs.size)
    r = run_mlmc(s, part, 0.1, seed=0)
    assert r.cost_proxy == r.levels[0].N * len(s.cutsets)


def _rare_difference_system():
    # Y_1 is nonzero only when component 1 outlives both members of the pair
    net = Network(3, ((0, 1), (1, 2), (1, 3), (2, 4), (3, 4)))
    comps = [Component(Exponential(1.0)), Component(Exponential(0.1)), Component(Exponential(0.1))]
    return System(net, comps)


def test_sparse_guard_keeps_sampling_all_zero_levels():
    s = _rare_difference_system()
    part = LevelPartition((0, 1), (1, 2))
    # find a seed whose initial batch on level 1 misses the rare event
    for seed in range(50):
        plain = run_mlmc(s, part, 0.05, seed=seed, force_all_levels=True, n_init=20)
        if plain.levels[1].var == 0.0:
            break
    assert plain.levels[1].N == 20 and plain.levels[1].mean == 0.0
    guarded = run_mlmc(s, part, 0.05, seed=seed, force_all_levels=True, n_init=20, sparse_guard=True)
    assert guarded.levels[1].N > 20
    assert guarded.levels[1].mean < 0


def test_sparse_guard_on_identical_levels_only_costs_samples():
    net = Network(3, ((0, 1), (1, 2), (1, 3), (2, 4), (3, 4)))
    comps = [Component(Exponential(1.0)), Component(Exponential(1e-12)), Component(Exponential(1e-12))]
    s = System(net, comps)
    part = LevelPartition((0, 1), (1, 2))
    r = run_mlmc(s, part, 0.05, seed=0, force_all_levels=True, sparse_guard=True)
    assert r.levels[1].mean == 0.0 and r.levels[1].N > 100
    assert r.estimate == r.levels[0].mean
