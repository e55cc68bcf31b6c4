"""System lifetime samplers, single and coupled, with and without repair.

Non-repairable lifetimes are a pure function of one vector of component
lifetimes. Repairable lifetimes come from an alternating failure/repair event
process: a failed component enters repair at once, and on completion is as
good as new with a fresh lifetime. After every failure event the current
cut-set collection is scanned for a fully failed cut set. Repair events cannot
fail a coherent system, so they are not followed by a scan.

A coupled sample evaluates a coarse collection ``C_coarse`` and a fine
collection ``C_fine`` (a superset) on common randomness. Without repair both
are evaluated on one lifetime vector. With repair a single trajectory is run,
``T_fine`` is recorded at the first failure of a fine cut, and the trajectory
continues until a coarse cut fails. Either way ``T_fine <= T_coarse`` holds
on every path.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .distributions import sample_matrix, uniform_open, weibull_scale_arrays
from .system import System, cut_failure_times, cut_index, eval_lifetime

__all__ = [
    "ContractError",
    "CoupledSample",
    "RepairSample",
    "TrajectoryEvent",
    "sample_lifetime",
    "sample_coupled",
    "sample_lifetime_repairable",
    "sample_coupled_repairable",
    "RepairableProcess",
    "LevelSampler",
    "LevelBatch",
]

# above this many cut sets the scan uses packed numpy words instead of Python ints
NUMPY_SCAN_THRESHOLD = 512


class ContractError(ValueError):
    """A caller broke an interface precondition."""


class CoupledSample(NamedTuple):
    t_coarse: float
    t_fine: float


class RepairSample(NamedTuple):
    lifetime: float
    n_repairs: int
    truncated: bool


class TrajectoryEvent(NamedTuple):
    time: float
    component: int
    kind: str  # "fail" or "repair"


def _component_arrays(sys: System):
    return weibull_scale_arrays([c.lifetime for c in sys.components])


def _check_nested(cuts_coarse, cuts_fine) -> None:
    fine = set(map(tuple, cuts_fine))
    if not all(tuple(c) in fine for c in cuts_coarse):
        raise ContractError("coarse cut sets must be a subset of the fine cut sets")


def sample_lifetime(sys: System, cuts: Sequence[Sequence[int]], rng: np.random.Generator) -> float:
    """One non-repairable system lifetime; repair distributions are ignored."""
    inv_shape, scale = _component_arrays(sys)
    t = sample_matrix(inv_shape, scale, rng, 1)[0]
    return eval_lifetime(cuts, t)


def sample_coupled(sys: System, cuts_coarse, cuts_fine, rng: np.random.Generator) -> CoupledSample:
    """Coarse and fine lifetimes evaluated on one lifetime vector."""
    _check_nested(cuts_coarse, cuts_fine)
    inv_shape, scale = _component_arrays(sys)
    t = sample_matrix(inv_shape, scale, rng, 1)[0]
    return CoupledSample(eval_lifetime(cuts_coarse, t), eval_lifetime(cuts_fine, t))


# --- repairable process -------------------------------------------------------


class _Uniforms:
    """Lazily filled buffer of open-interval uniforms."""

    __slots__ = ("rng", "buf", "i")

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.buf: list[float] = []
        self.i = 0

    def next(self) -> float:
        if self.i >= len(self.buf):
            self.buf = uniform_open(self.rng, 256).tolist()
            self.i = 0
        u = self.buf[self.i]
        self.i += 1
        return u


class _CutScanner:
    """Finds the first fully failed cut set in an ordered collection."""

    def __init__(self, cuts: Sequence[Sequence[int]], n: int):
        self.m = len(cuts)
        self.int_masks = [sum(1 << (c - 1) for c in cut) for cut in cuts]
        self.use_numpy = self.m > NUMPY_SCAN_THRESHOLD
        if self.use_numpy:
            words = (n + 63) // 64
            packed = np.zeros((self.m, words), dtype=np.uint64)
            for k, mask in enumerate(self.int_masks):
                for w in range(words):
                    packed[k, w] = (mask >> (64 * w)) & 0xFFFFFFFFFFFFFFFF
            self.packed = packed

    def first_failed(self, down: int, down_words: Optional[np.ndarray], limit: int) -> int:
        """Index of the first failed cut among the first ``limit``; -1 if none."""
        if self.use_numpy and limit > NUMPY_SCAN_THRESHOLD:
            p = self.packed[:limit]
            hit = ((p & down_words) == p).all(axis=1)
            k = int(hit.argmax())
            return k if hit[k] else -1
        masks = self.int_masks
        for k in range(limit):
            m = masks[k]
            if down & m == m:
                return k
        return -1


class _Trajectory(NamedTuple):
    t_fine: float
    t_coarse: float
    n_repairs: int
    events: int
    scans: int
    truncated: bool
    fail_times: Optional[list]


class RepairableProcess:
    """Precomputed component parameters and cut scanners for one cut collection.

    ``cuts`` is ordered so that every coarser collection used with it is a
    prefix; ``run`` takes the prefix length of the coarse collection.
    """

    def __init__(self, sys: System, cuts: Sequence[Sequence[int]]):
        if not sys.repairable:
            raise ContractError("every component needs a repair distribution")
        self.n = sys.n
        inv, scale = _component_arrays(sys)
        self.inv_shape = inv
        self.scale = scale
        self.inv_list = inv.tolist()
        self.scale_list = scale.tolist()
        rinv, rscale = weibull_scale_arrays([c.repair for c in sys.components])
        self.rinv = rinv.tolist()
        self.rscale = rscale.tolist()
        self.cuts = [tuple(c) for c in cuts]
        self.scanner = _CutScanner(self.cuts, self.n)

    def run(
        self,
        rng: np.random.Generator,
        n_coarse: Optional[int] = None,
        horizon: Optional[float] = None,
        log: Optional[list] = None,
        record_state: bool = False,
    ) -> _Trajectory:
        """Simulate one trajectory.

        Stops at the first failure of any cut in ``self.cuts`` or, when
        ``n_coarse`` is given, continues until one of the first ``n_coarse``
        cuts fails as well. With ``record_state`` the per-component failure
        times at the fine stopping time are returned: the last failure time
        for failed components and the pending failure time for working ones.
        """
        n = self.n
        m = self.scanner.m
        limit_coarse = m if n_coarse is None else n_coarse
        first = self.scale * (-np.log(uniform_open(rng, (1, n))[0])) ** self.inv_shape
        heap = list(zip(first.tolist(), range(n)))
        heapq.heapify(heap)
        uni = _Uniforms(rng)
        use_words = self.scanner.use_numpy
        words = np.zeros((n + 63) // 64, dtype=np.uint64) if use_words else None
        last_fail = [0.0] * n if record_state else None
        down = 0
        n_rep = 0
        events = 0
        scans = 0
        t_fine = math.inf
        rep_at_fine = 0
        fine_state = None
        rinv, rscale, inv, scale = self.rinv, self.rscale, self.inv_list, self.scale_list
        while heap:
            t, i = heapq.heappop(heap)
            if t == math.inf or (horizon is not None and t > horizon):
                break
            events += 1
            bit = 1 << i
            if down & bit:
                down ^= bit
                n_rep += 1
                if use_words:
                    words[i >> 6] ^= np.uint64(1 << (i & 63))
                if log is not None:
                    log.append(TrajectoryEvent(t, i + 1, "repair"))
                heapq.heappush(heap, (t + scale[i] * (-math.log(uni.next())) ** inv[i], i))
                continue
            down |= bit
            if use_words:
                words[i >> 6] ^= np.uint64(1 << (i & 63))
            if last_fail is not None:
                last_fail[i] = t
            if log is not None:
                log.append(TrajectoryEvent(t, i + 1, "fail"))
            if t_fine == math.inf:
                scans += m
                k = self.scanner.first_failed(down, words, m)
                if k >= 0:
                    t_fine = t
                    rep_at_fine = n_rep
                    if record_state:
                        pending = dict((c, tt) for tt, c in heap)
                        fine_state = [
                            last_fail[c] if (down >> c) & 1 else pending[c] for c in range(n)
                        ]
                    if k < limit_coarse:
                        return _Trajectory(t, t, n_rep, events, scans, False, fine_state)
            else:
                scans += limit_coarse
                if self.scanner.first_failed(down, words, limit_coarse) >= 0:
                    return _Trajectory(t_fine, t, rep_at_fine, events, scans, False, fine_state)
            rate_inf = rscale[i] == math.inf
            dur = math.inf if rate_inf else rscale[i] * (-math.log(uni.next())) ** rinv[i]
            heapq.heappush(heap, (t + dur, i))
        reps = rep_at_fine if t_fine < math.inf else n_rep
        return _Trajectory(t_fine, math.inf, reps, events, scans, True, fine_state)


def sample_lifetime_repairable(
    sys: System,
    cuts: Sequence[Sequence[int]],
    rng: np.random.Generator,
    horizon: Optional[float] = None,
    log: Optional[list] = None,
) -> RepairSample:
    """First time some cut set in ``cuts`` is fully failed under repair.

    ``lifetime`` is ``inf`` with ``truncated=True`` when the horizon is hit
    first or no further event can occur.
    """
    if not cuts:
        return RepairSample(math.inf, 0, True)
    tr = RepairableProcess(sys, cuts).run(rng, horizon=horizon, log=log)
    return RepairSample(tr.t_fine, tr.n_repairs, tr.truncated and tr.t_fine == math.inf)


def sample_coupled_repairable(
    sys: System, cuts_coarse, cuts_fine, rng: np.random.Generator, horizon: Optional[float] = None
) -> CoupledSample:
    """Coarse and fine stopping times read off one repair trajectory."""
    _check_nested(cuts_coarse, cuts_fine)
    coarse = [tuple(c) for c in cuts_coarse]
    cs = set(coarse)
    ordered = coarse + [tuple(c) for c in cuts_fine if tuple(c) not in cs]
    tr = RepairableProcess(sys, ordered).run(rng, n_coarse=len(coarse), horizon=horizon)
    return CoupledSample(tr.t_coarse, tr.t_fine)


# --- batched level sampling ----------------------------------------------------


@dataclass
class LevelBatch:
    """Samples of one level: ``y`` are the level values (``T_0`` or ``T_l - T_{l-1}``)."""

    y: np.ndarray
    t_fine: np.ndarray
    t_coarse: Optional[np.ndarray]
    seconds: np.ndarray
    ops: np.ndarray
    n_repairs: Optional[np.ndarray] = None


class LevelSampler:
    """Draws level samples for a nested sequence of cut collections.

    ``ordered_cuts`` lists every cut set so that level ``l`` uses the prefix
    of length ``sizes[l]``.
    """

    def __init__(self, sys: System, ordered_cuts, sizes: Sequence[int], repairable: bool = False,
                 horizon: Optional[float] = None):
        sizes = [int(s) for s in sizes]
        if any(b <= a for a, b in zip(sizes, sizes[1:])) or sizes[-1] > len(ordered_cuts) or sizes[0] < 1:
            raise ContractError(f"level sizes must be strictly increasing prefixes, got {sizes}")
        self.sys = sys
        self.cuts = [tuple(c) for c in ordered_cuts]
        self.sizes = sizes
        self.repairable = repairable
        self.horizon = horizon
        self.inv_shape, self.scale = _component_arrays(sys)
        self._idx = cut_index(self.cuts[: sizes[-1]])
        self._procs: dict[int, RepairableProcess] = {}

    @property
    def n_levels(self) -> int:
        return len(self.sizes)

    def _process(self, level: int) -> RepairableProcess:
        if level not in self._procs:
            self._procs[level] = RepairableProcess(self.sys, self.cuts[: self.sizes[level]])
        return self._procs[level]

    def sample(self, level: int, n: int, rng: np.random.Generator) -> LevelBatch:
        if self.repairable:
            return self._sample_repairable(level, n, rng)
        return self._sample_static(level, n, rng)

    def _sample_static(self, level: int, n: int, rng: np.random.Generator) -> LevelBatch:
        start = time.perf_counter()
        times = sample_matrix(self.inv_shape, self.scale, rng, n)
        size = self.sizes[level]
        per_cut = cut_failure_times(times, self._idx[:size])
        if level == 0:
            fine = per_cut.min(axis=1)
            coarse = None
            y = fine
        else:
            lo = self.sizes[level - 1]
            coarse = per_cut[:, :lo].min(axis=1)
            fine = np.minimum(coarse, per_cut[:, lo:].min(axis=1))
            y = fine - coarse
        elapsed = time.perf_counter() - start
        return LevelBatch(
            y=y,
            t_fine=fine,
            t_coarse=coarse,
            seconds=np.full(n, elapsed / max(n, 1)),
            ops=np.full(n, float(size)),
        )

    def _sample_repairable(self, level: int, n: int, rng: np.random.Generator) -> LevelBatch:
        proc = self._process(level)
        n_coarse = None if level == 0 else self.sizes[level - 1]
        fine = np.empty(n)
        coarse = np.empty(n)
        secs = np.empty(n)
        ops = np.empty(n)
        reps = np.empty(n, dtype=np.int64)
        clock = time.perf_counter
        for j in range(n):
            t0 = clock()
            tr = proc.run(rng, n_coarse=n_coarse, horizon=self.horizon)
            secs[j] = clock() - t0
            fine[j] = tr.t_fine
            coarse[j] = tr.t_coarse
            ops[j] = tr.events + tr.scans
            reps[j] = tr.n_repairs
        if level == 0:
            return LevelBatch(fine, fine, None, secs, ops, reps)
        with np.errstate(invalid="ignore"):
            y = fine - coarse
        return LevelBatch(y, fine, coarse, secs, ops, reps)
