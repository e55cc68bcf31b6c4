"""Nested cut-set levels chosen from a pilot simulation.

Level 0 holds the ``ceil(m / 2**L)`` cut sets with the smallest mean pilot
failure time ``eta_i``. Each further level keeps the previous one and adds
the cut sets that shorten the previous level's pilot lifetimes the most,
scored by

    delta_k = mean_j max(T_prev_j - t_kj, 0),

where ``t_kj`` is the failure time of cut ``k`` in pilot replicate ``j``.
Level ``l`` ends up with ``ceil(m / 2**(L - l))`` cut sets, so the top level
is the full collection. Ties are broken by the canonical cut order.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .distributions import make_rng, sample_matrix, weibull_scale_arrays
from .simulator import ContractError, RepairableProcess
from .system import System, cut_failure_times, cut_index

__all__ = [
    "PilotData",
    "LevelPartition",
    "level_sizes",
    "default_levels",
    "pilot_from_times",
    "pilot_scores",
    "delta_scores",
    "build_partition",
]


@dataclass
class PilotData:
    """Per-cut pilot failure times and their level-0 scores.

    ``cut_times`` has one row per pilot replicate and one column per cut set
    in canonical order.
    """

    cut_times: np.ndarray
    eta: np.ndarray
    cost_ops: float = 0.0
    seconds: float = 0.0
    repairable: bool = False

    @property
    def n_pilot(self) -> int:
        return int(self.cut_times.shape[0])

    @property
    def n_cuts(self) -> int:
        return int(self.cut_times.shape[1])


@dataclass(frozen=True)
class LevelPartition:
    """Nested levels as prefixes of one ordering of the cut sets.

    ``order`` lists canonical cut indices; level ``l`` is ``order[:sizes[l]]``.
    """

    order: tuple[int, ...]
    sizes: tuple[int, ...]
    clamped: bool = False
    deltas: tuple[tuple[float, ...], ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        m = len(self.order)
        if sorted(self.order) != list(range(m)):
            raise ContractError("partition order must be a permutation of the cut indices")
        if tuple(self.sizes) != tuple(level_sizes(m, len(self.sizes) - 1)):
            raise ContractError(f"level sizes {self.sizes} do not follow the halving rule for {m} cuts")

    @property
    def L(self) -> int:
        return len(self.sizes) - 1

    @property
    def n_cuts(self) -> int:
        return len(self.order)

    def level(self, l: int) -> tuple[int, ...]:
        return self.order[: self.sizes[l]]

    def ordered_cuts(self, cuts: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
        if len(cuts) != self.n_cuts:
            raise ContractError(f"partition covers {self.n_cuts} cuts, system has {len(cuts)}")
        return [tuple(cuts[i]) for i in self.order]

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "sizes": list(self.sizes),
            "clamped": self.clamped,
            "levels": {str(l): list(self.level(l)) for l in range(self.L + 1)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LevelPartition":
        levels = d["levels"]
        L = int(d["L"])
        prev: list[int] = []
        for l in range(L + 1):
            cur = [int(i) for i in levels[str(l)]]
            if cur[: len(prev)] != prev:
                raise ContractError(f"level {l} does not extend level {l - 1}")
            prev = cur
        sizes = tuple(len(levels[str(l)]) for l in range(L + 1))
        return cls(tuple(prev), sizes, bool(d.get("clamped", False)))


def level_sizes(m: int, L: int) -> list[int]:
    """``[ceil(m / 2**(L - l)) for l in 0..L]``."""
    if m < 1 or L < 0:
        raise ValueError("need at least one cut set and L >= 0")
    return [-(-m // 2 ** (L - l)) for l in range(L + 1)]


def default_levels(m: int) -> int:
    """Largest L for which every level is distinct: ``floor(log2 m)``."""
    return int(m).bit_length() - 1


def pilot_from_times(component_times: np.ndarray, cuts: Sequence[Sequence[int]]) -> PilotData:
    """Pilot scores from a given ``(N', n)`` matrix of component failure times."""
    times = np.atleast_2d(np.asarray(component_times, dtype=float))
    ct = cut_failure_times(times, cut_index(cuts))
    return PilotData(ct, ct.mean(axis=0), cost_ops=float(ct.size))


def pilot_scores(
    sys: System,
    n_pilot: int = 100,
    rng: Optional[np.random.Generator] = None,
    repairable: Optional[bool] = None,
) -> PilotData:
    """Run the pilot simulation on the canonical cut list of ``sys``.

    Without repair each replicate is one vector of component lifetimes. With
    repair the failure/repair process runs until the first cut set fails;
    from then on no repairs happen, so a failed component keeps its last
    failure time and a working one fails at its pending scheduled time,
    which is a draw from its lifetime law conditioned on its current age.
    """
    if n_pilot < 1:
        raise ValueError("pilot size must be >= 1")
    rng = make_rng(0) if rng is None else rng
    cuts = sys.require_cutsets()
    repairable = sys.repairable if repairable is None else repairable
    start = time.perf_counter()
    if not repairable:
        inv, scale = weibull_scale_arrays([c.lifetime for c in sys.components])
        pilot = pilot_from_times(sample_matrix(inv, scale, rng, n_pilot), cuts)
        pilot.seconds = time.perf_counter() - start
        return pilot
    proc = RepairableProcess(sys, cuts)
    rows = []
    ops = 0
    for _ in range(n_pilot):
        tr = proc.run(rng, record_state=True)
        if tr.fail_times is None:
            raise ContractError("repairable pilot trajectory never failed")
        rows.append(tr.fail_times)
        ops += tr.events + tr.scans
    pilot = pilot_from_times(np.array(rows), cuts)
    pilot.cost_ops = float(ops + pilot.cut_times.size)
    pilot.seconds = time.perf_counter() - start
    pilot.repairable = True
    return pilot


def delta_scores(cut_times: np.ndarray, t_prev: np.ndarray) -> np.ndarray:
    """Mean shortening ``mean_j max(t_prev_j - cut_times[j, k], 0)`` per cut."""
    t_prev = np.asarray(t_prev, dtype=float)[:, None]
    with np.errstate(invalid="ignore"):
        gap = t_prev - cut_times
    gap = np.where(np.isnan(gap) | (gap < 0), 0.0, gap)
    return gap.mean(axis=0)


def build_partition(pilot: PilotData, L: Optional[int] = None) -> LevelPartition:
    """Greedy nested levels from pilot scores.

    ``L`` defaults to ``floor(log2 m)`` and is clamped to it when larger,
    since beyond that the halving rule would repeat level sizes.
    """
    m = pilot.n_cuts
    lmax = default_levels(m)
    clamped = False
    if L is None:
        L = lmax
    elif L < 0:
        raise ValueError("L must be >= 0")
    elif L > lmax:
        L, clamped = lmax, True
    sizes = level_sizes(m, L)
    idx = np.arange(m)
    first = np.lexsort((idx, pilot.eta))[: sizes[0]]
    order = [int(i) for i in first]
    chosen = np.zeros(m, dtype=bool)
    chosen[first] = True
    t_prev = pilot.cut_times[:, first].min(axis=1)
    deltas = []
    for l in range(1, L + 1):
        cand = idx[~chosen]
        d = delta_scores(pilot.cut_times[:, cand], t_prev)
        pick = cand[np.lexsort((cand, -d))][: sizes[l] - sizes[l - 1]]
        deltas.append(tuple(float(x) for x in d))
        order.extend(int(i) for i in pick)
        chosen[pick] = True
        t_prev = np.minimum(t_prev, pilot.cut_times[:, pick].min(axis=1))
    return LevelPartition(tuple(order), tuple(sizes), clamped, tuple(deltas))

