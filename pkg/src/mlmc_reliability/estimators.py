"""Standard and multilevel Monte Carlo estimators of expected system lifetime.

Both estimators draw samples in fixed-size batches. Batch ``b`` of level
``l`` uses the random stream ``(seed, tag, l, b)``, and batch moments are
merged in batch order. The result therefore does not depend on how many
worker processes share the batches.

Cost is counted in elementary operations. A non-repairable sample on a level
with ``#C_l`` cut sets costs ``#C_l`` cut evaluations. A repairable sample
costs its number of events plus the cut-set tests performed after failure
events. Wall-clock seconds are recorded alongside but never feed back into
the algorithm unless ``cost="seconds"`` is requested.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .distributions import make_rng
from .levels import LevelPartition, PilotData
from .simulator import ContractError, LevelSampler
from .system import System

__all__ = [
    "McConfig",
    "LevelStats",
    "EstimateResult",
    "CostSummary",
    "mc_sample_size",
    "optimal_samples",
    "run_mc",
    "run_mlmc",
    "run_levels",
    "total_cost",
    "trimmed_mean",
]

TAG_MC = 1
TAG_MLMC = 2
TAG_LEVELS = 3
STATIC_BATCH = 4096
REPAIR_BATCH = 32


@dataclass(frozen=True)
class McConfig:
    eps: float
    z: float = 1.96
    n_pilot: int = 100

    def __post_init__(self):
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise ValueError(f"eps must be positive, got {self.eps!r}")
        if not self.z > 0:
            raise ValueError("z must be positive")
        if self.n_pilot < 2:
            raise ValueError("need at least 2 pilot samples to estimate a variance")


def trimmed_mean(x, frac: float = 0.01) -> float:
    """Mean after dropping the lowest and highest ``frac`` of the values."""
    x = np.sort(np.asarray(x, dtype=float))
    k = int(math.floor(frac * x.size))
    if x.size == 0:
        return math.nan
    return float(x[k: x.size - k].mean()) if x.size > 2 * k else float(x.mean())


@dataclass
class LevelStats:
    """Running moments of one level, merged batch by batch.

    ``mean``/``m2`` describe the level values ``Y_l`` and ``fine_mean``/
    ``fine_m2`` the fine lifetimes ``T_l`` of the same samples.
    """

    level: int
    n_cuts: int
    N: int = 0
    mean: float = 0.0
    m2: float = 0.0
    fine_mean: float = 0.0
    fine_m2: float = 0.0
    ops: float = 0.0
    seconds: float = 0.0
    sample_seconds: list = field(default_factory=list, repr=False)

    @property
    def var(self) -> float:
        return self.m2 / (self.N - 1) if self.N >= 2 else math.nan

    @property
    def fine_var(self) -> float:
        return self.fine_m2 / (self.N - 1) if self.N >= 2 else math.nan

    @property
    def sum_y(self) -> float:
        return self.mean * self.N

    @property
    def sum_y2(self) -> float:
        return self.m2 + self.N * self.mean**2

    @property
    def kappa_ops(self) -> float:
        return self.ops / self.N if self.N else math.nan

    @property
    def kappa_seconds(self) -> float:
        if self.sample_seconds:
            return trimmed_mean(self.sample_seconds)
        return self.seconds / self.N if self.N else math.nan

    def merge(self, part: "_BatchMoments") -> None:
        n = self.N + part.n
        if part.n == 0:
            return
        d = part.mean - self.mean
        df = part.fine_mean - self.fine_mean
        w = part.n / n
        self.m2 += part.m2 + d * d * self.N * w
        self.fine_m2 += part.fine_m2 + df * df * self.N * w
        self.mean += d * w
        self.fine_mean += df * w
        self.N = n
        self.ops += part.ops
        self.seconds += part.seconds
        if part.sample_seconds is not None:
            self.sample_seconds.extend(part.sample_seconds)

    def to_dict(self, timing: bool = False) -> dict:
        d = {
            "level": self.level,
            "n_cuts": self.n_cuts,
            "N": self.N,
            "mean": self.mean,
            "var": _num(self.var),
            "fine_mean": self.fine_mean,
            "fine_var": _num(self.fine_var),
            "kappa_ops": _num(self.kappa_ops),
            "cost": self.ops,
        }
        if timing:
            d["seconds"] = self.seconds
            d["kappa_seconds"] = _num(self.kappa_seconds)
        return d


def _num(x: float):
    return None if x is None or not math.isfinite(x) else float(x)


@dataclass
class EstimateResult:
    """Outcome of one estimator run.

    ``variance`` is the estimated variance of ``estimate`` and ``bias`` the
    estimated magnitude of the truncation bias; ``mse = variance + bias**2``.
    ``cost_proxy`` counts operations of the estimator itself and
    ``pilot_cost`` those of the level-selection pilot.
    """

    method: str
    eps: float
    estimate: float
    variance: float
    bias: float
    levels: list
    cost_proxy: float
    pilot_cost: float = 0.0
    wall_seconds: float = 0.0
    pilot_seconds: float = 0.0
    repairable: bool = False
    L_used: int = 0
    L_max: int = 0
    rounds: int = 0

    @property
    def mse(self) -> float:
        return self.variance + self.bias**2

    @property
    def total_cost_proxy(self) -> float:
        return self.cost_proxy + self.pilot_cost

    def to_dict(self, timing: bool = False) -> dict:
        d = {
            "method": self.method,
            "eps": self.eps,
            "repairable": self.repairable,
            "estimate": self.estimate,
            "variance": self.variance,
            "bias": self.bias,
            "mse": self.mse,
            "cost_proxy": self.total_cost_proxy,
            "estimator_cost": self.cost_proxy,
            "pilot_cost": self.pilot_cost,
            "L_used": self.L_used,
            "L_max": self.L_max,
            "rounds": self.rounds,
            "levels": [s.to_dict(timing) for s in self.levels],
        }
        if timing:
            d["wall_seconds"] = self.wall_seconds
            d["pilot_seconds"] = self.pilot_seconds
        return d


@dataclass(frozen=True)
class CostSummary:
    proxy: float
    proxy_seconds: float
    wall_seconds: float


def total_cost(result: EstimateResult) -> CostSummary:
    """Operation-count cost (pilot included) and two time-based costs.

    ``proxy_seconds`` substitutes the per-level mean sample time for the
    per-sample operation count; ``wall_seconds`` is the measured run time.
    """
    secs = sum(s.N * s.kappa_seconds for s in result.levels if s.N)
    return CostSummary(
        proxy=result.total_cost_proxy,
        proxy_seconds=secs + result.pilot_seconds,
        wall_seconds=result.wall_seconds + result.pilot_seconds,
    )


def mc_sample_size(var: float, eps: float, z: float = 1.96) -> int:
    """``ceil(z**2 * var / eps**2)`` samples for a confidence half-width ``eps``."""
    if var < 0 or eps <= 0:
        raise ValueError("need var >= 0 and eps > 0")
    # round away float noise before the ceiling, e.g. 1.96**2 * 100 = 384.16000000000003
    return int(math.ceil(round(z * z * var / (eps * eps), 9)))


def optimal_samples(var: Sequence[float], weight: Sequence[float], eps: float) -> list[int]:
    """``ceil(4 eps**-2 sqrt(V_l / w_l) sum_k sqrt(V_k w_k))`` per level.

    This allocation makes ``sum_l V_l / N_l = eps**2 / 4`` at minimal cost
    ``sum_l N_l w_l``.
    """
    v = np.maximum(np.asarray(var, dtype=float), 0.0)
    w = np.asarray(weight, dtype=float)
    s = float(np.sum(np.sqrt(v * w)))
    n = 4.0 / (eps * eps) * np.sqrt(v / w) * s
    return [int(math.ceil(round(x, 9))) for x in n]


# --- batch execution ---------------------------------------------------------


@dataclass
class _BatchMoments:
    n: int
    mean: float
    m2: float
    fine_mean: float
    fine_m2: float
    ops: float
    seconds: float
    sample_seconds: Optional[list]


def _moments(sampler: LevelSampler, level: int, n: int, rng) -> _BatchMoments:
    b = sampler.sample(level, n, rng)
    y = b.y
    f = b.t_fine
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(f))):
        raise ContractError("non-finite lifetime sample; set a horizon or check repair rates")
    return _BatchMoments(
        n=n,
        mean=float(y.mean()),
        m2=float(((y - y.mean()) ** 2).sum()),
        fine_mean=float(f.mean()),
        fine_m2=float(((f - f.mean()) ** 2).sum()),
        ops=float(b.ops.sum()),
        seconds=float(b.seconds.sum()),
        sample_seconds=b.seconds.tolist() if sampler.repairable else None,
    )


_WORKER: dict = {}


def _init_worker(sys, cuts, sizes, repairable, horizon):
    _WORKER["sampler"] = LevelSampler(sys, cuts, sizes, repairable, horizon)


def _run_batch(args):
    level, n, stream = args
    return _moments(_WORKER["sampler"], level, n, make_rng(*stream))


class _Runner:
    """Executes level top-ups as numbered batches, serially or in a pool."""

    def __init__(self, sys, cuts, sizes, repairable, horizon, seed, tag, workers, batch_size):
        self.sampler = LevelSampler(sys, cuts, sizes, repairable, horizon)
        self.seed = int(seed)
        self.tag = tag
        self.batch_size = batch_size or (REPAIR_BATCH if repairable else STATIC_BATCH)
        self.next_batch: dict[int, int] = {}
        self.pool = None
        if workers > 1:
            self.pool = ProcessPoolExecutor(
                max_workers=workers,
                initializer=_init_worker,
                initargs=(sys, list(cuts), list(sizes), repairable, horizon),
            )

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()

    def top_up(self, requests: dict[int, int], stats: dict[int, LevelStats]) -> None:
        """Draw ``requests[l]`` more samples on each level ``l``, cheapest level first."""
        jobs = []
        for level in sorted(requests):
            n = requests[level]
            while n > 0:
                k = min(n, self.batch_size)
                b = self.next_batch.get(level, 0)
                self.next_batch[level] = b + 1
                jobs.append((level, k, (self.seed, self.tag, level, b)))
                n -= k
        if self.pool is None:
            parts = [_moments(self.sampler, lv, k, make_rng(*st)) for lv, k, st in jobs]
        else:
            parts = list(self.pool.map(_run_batch, jobs))
        for (level, _, _), part in zip(jobs, parts):
            stats[level].merge(part)


def _repairable(sys: System, repairable: Optional[bool]) -> bool:
    return sys.repairable if repairable is None else bool(repairable)


# --- standard Monte Carlo --------------------------------------------------------


def run_mc(
    sys: System,
    cfg: McConfig,
    seed: int = 0,
    repairable: Optional[bool] = None,
    cuts: Optional[Sequence[Sequence[int]]] = None,
    workers: int = 1,
    horizon: Optional[float] = None,
    batch_size: Optional[int] = None,
) -> EstimateResult:
    """Two-stage standard Monte Carlo.

    ``cfg.n_pilot`` samples estimate the lifetime variance ``V``; the total
    sample size is then ``max(n_pilot, ceil(z**2 V / eps**2))`` with the
    pilot samples counted in it.
    """
    rep = _repairable(sys, repairable)
    cuts = list(cuts) if cuts is not None else sys.require_cutsets()
    start = time.perf_counter()
    runner = _Runner(sys, cuts, [len(cuts)], rep, horizon, seed, TAG_MC, workers, batch_size)
    stats = {0: LevelStats(0, len(cuts))}
    try:
        runner.top_up({0: cfg.n_pilot}, stats)
        n_total = max(cfg.n_pilot, mc_sample_size(stats[0].var, cfg.eps, cfg.z))
        runner.top_up({0: n_total - cfg.n_pilot}, stats)
    finally:
        runner.close()
    st = stats[0]
    return EstimateResult(
        method="mc",
        eps=cfg.eps,
        estimate=st.mean,
        variance=st.var / st.N,
        bias=0.0,
        levels=[st],
        cost_proxy=st.ops,
        wall_seconds=time.perf_counter() - start,
        repairable=rep,
    )


# --- multilevel Monte Carlo ------------------------------------------------------


def run_mlmc(
    sys: System,
    partition: LevelPartition,
    eps: float,
    seed: int = 0,
    repairable: Optional[bool] = None,
    pilot: Optional[PilotData] = None,
    workers: int = 1,
    n_init: int = 100,
    force_all_levels: bool = False,
    cost: str = "ops",
    horizon: Optional[float] = None,
    batch_size: Optional[int] = None,
    max_rounds: int = 1000,
    sparse_guard: bool = False,
) -> EstimateResult:
    """Adaptive MLMC over the nested levels of ``partition``.

    Starts with levels ``0..2`` at ``n_init`` samples each, tops up to the
    cost-optimal ``N_l`` until no level grows by 1% or more, then adds a
    level while the top level's mean exceeds ``eps / 2``. Reaching the
    partition's last level ends the run with zero truncation bias. With
    ``force_all_levels`` every level is active from the start.

    Cost weights are ``2**l`` without repair and the measured mean cost per
    sample with repair (operations, or seconds when ``cost="seconds"``).

    With ``sparse_guard`` a level ``l >= 1`` whose samples are all equal is
    treated as unresolved rather than exact: its variance is taken as half
    that of level ``l - 1``, as for a freshly added level. This protects
    against level differences that are nonzero only on rare samples, at the
    price of extra samples on levels that are truly identical.
    """
    if not (eps > 0 and math.isfinite(eps)):
        raise ValueError(f"eps must be positive, got {eps!r}")
    if cost not in ("ops", "seconds"):
        raise ValueError("cost must be 'ops' or 'seconds'")
    if n_init < 2:
        raise ValueError("n_init must be >= 2")
    cuts = sys.require_cutsets()
    rep = _repairable(sys, repairable)
    ordered = partition.ordered_cuts(cuts)
    L = partition.L
    start = time.perf_counter()
    runner = _Runner(sys, ordered, partition.sizes, rep, horizon, seed, TAG_MLMC, workers, batch_size)
    stats: dict[int, LevelStats] = {}
    guess_var: dict[int, float] = {}

    def weight(l: int) -> float:
        if not rep:
            return float(2**l)
        st = stats[l]
        if st.N:
            return st.kappa_ops if cost == "ops" else st.kappa_seconds
        return 2.0 * weight(l - 1) if l else 1.0

    def variance(l: int) -> float:
        st = stats[l]
        if st.N < n_init and l in guess_var:
            return guess_var[l]
        if sparse_guard and l >= 1 and st.var == 0.0:
            return variance(l - 1) / 2
        return st.var

    top = L if force_all_levels else min(2, L)
    for l in range(top + 1):
        stats[l] = LevelStats(l, partition.sizes[l])
    rounds = 0
    try:
        runner.top_up({l: n_init for l in stats}, stats)
        while True:
            while True:
                rounds += 1
                if rounds > max_rounds:
                    raise ContractError("sample-size refinement did not settle")
                levels = sorted(stats)
                opt = optimal_samples([variance(l) for l in levels], [weight(l) for l in levels], eps)
                want = {l: max(stats[l].N, n_init, n) for l, n in zip(levels, opt)}
                grew = any(want[l] > 1.01 * max(stats[l].N, 1) for l in levels)
                runner.top_up({l: want[l] - stats[l].N for l in levels if want[l] > stats[l].N}, stats)
                if not grew:
                    break
            if top == L or abs(stats[top].mean) <= eps / 2:
                break
            top += 1
            stats[top] = LevelStats(top, partition.sizes[top])
            guess_var[top] = variance(top - 1) / 2
    finally:
        runner.close()
    levels = [stats[l] for l in sorted(stats)]
    return EstimateResult(
        method="mlmc",
        eps=eps,
        estimate=float(sum(s.mean for s in levels)),
        variance=float(sum(s.var / s.N for s in levels)),
        bias=0.0 if top == L else abs(stats[top].mean),
        levels=levels,
        cost_proxy=float(sum(s.ops for s in levels)),
        pilot_cost=pilot.cost_ops if pilot is not None else 0.0,
        wall_seconds=time.perf_counter() - start,
        pilot_seconds=pilot.seconds if pilot is not None else 0.0,
        repairable=rep,
        L_used=top,
        L_max=L,
        rounds=rounds,
    )


def run_levels(
    sys: System,
    partition: LevelPartition,
    n: int | Sequence[int],
    seed: int = 0,
    repairable: Optional[bool] = None,
    workers: int = 1,
    horizon: Optional[float] = None,
    batch_size: Optional[int] = None,
) -> list[LevelStats]:
    """Fixed-size diagnostic run: ``n`` samples on every level of ``partition``."""
    L = partition.L
    counts = [int(n)] * (L + 1) if np.ndim(n) == 0 else [int(k) for k in n]
    if len(counts) != L + 1 or min(counts) < 2:
        raise ValueError("need at least 2 samples on each of the L + 1 levels")
    rep = _repairable(sys, repairable)
    ordered = partition.ordered_cuts(sys.require_cutsets())
    runner = _Runner(sys, ordered, partition.sizes, rep, horizon, seed, TAG_LEVELS, workers, batch_size)
    stats = {l: LevelStats(l, partition.sizes[l]) for l in range(L + 1)}
    try:
        runner.top_up(dict(enumerate(counts)), stats)
    finally:
        runner.close()
    return [stats[l] for l in range(L + 1)]
