"""Random two-terminal systems grown by series, parallel and bridge moves.

Growth starts from the one-component system ``source -> 1 -> sink``. Each
step adds exactly one component:

* series: node ``v`` becomes ``v -> u``; ``v`` keeps its in-edges and the
  new node ``u`` takes over the out-edges.
* parallel: new node ``u`` copies every in- and out-edge of ``v``.
* bridge: two distinct edges ``(a, b)`` and ``(c, d)`` are picked and a new
  node ``w`` gets in-edges from ``{a, c}`` and out-edges to ``{b, d}``.
  Pairs that would close a cycle are excluded; if no pair is admissible the
  move type is drawn again.

Applied to the two-path system, the bridge move on its middle edges yields
the classic five-component bridge. In the move log the sink is written as
``-1`` and the source as ``0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .distributions import Exponential, Weibull, make_rng
from .system import DEFAULT_CUT_CAP, Component, Network, System, enumerate_min_cutsets

__all__ = ["GrowthConfig", "grow", "grow_nested"]

_SOURCE = 0
_SINK = -1
MOVES = ("series", "parallel", "bridge")


@dataclass(frozen=True)
class GrowthConfig:
    target: int
    p_series: float = 1 / 3
    p_parallel: float = 1 / 3
    p_bridge: float = 1 / 3
    shape: float = 1.0
    scale_lo: float = 2.0
    scale_hi: float = 10.0
    repair_rate: Optional[float] = None
    seed: int = 0
    cut_cap: int = DEFAULT_CUT_CAP

    def __post_init__(self):
        if self.target < 1:
            raise ValueError("target component count must be >= 1")
        probs = (self.p_series, self.p_parallel, self.p_bridge)
        if min(probs) < 0 or abs(sum(probs) - 1.0) > 1e-12:
            raise ValueError(f"move probabilities must be >= 0 and sum to 1, got {probs}")
        if not (0 < self.scale_lo <= self.scale_hi):
            raise ValueError("need 0 < scale_lo <= scale_hi")
        if self.shape <= 0:
            raise ValueError("shape must be positive")
        if self.repair_rate is not None and self.repair_rate < 0:
            raise ValueError("repair rate must be >= 0")


class _Graph:
    def __init__(self):
        self.succ: dict[int, set[int]] = {_SOURCE: {1}, 1: {_SINK}, _SINK: set()}
        self.pred: dict[int, set[int]] = {_SOURCE: set(), 1: {_SOURCE}, _SINK: {1}}
        self.n = 1

    def add_edge(self, a: int, b: int) -> None:
        self.succ[a].add(b)
        self.pred[b].add(a)

    def new_node(self) -> int:
        self.n += 1
        self.succ[self.n] = set()
        self.pred[self.n] = set()
        return self.n

    def edges(self) -> list[tuple[int, int]]:
        return sorted((a, b) for a, bs in self.succ.items() for b in bs)

    def series(self, v: int) -> int:
        u = self.new_node()
        for b in self.succ[v]:
            self.pred[b].discard(v)
            self.add_edge(u, b)
        self.succ[v] = set()
        self.add_edge(v, u)
        return u

    def parallel(self, v: int) -> int:
        u = self.new_node()
        for a in self.pred[v]:
            self.add_edge(a, u)
        for b in self.succ[v]:
            self.add_edge(u, b)
        return u

    def bridge(self, e1: tuple[int, int], e2: tuple[int, int]) -> int:
        w = self.new_node()
        for a in (e1[0], e2[0]):
            self.add_edge(a, w)
        for b in (e1[1], e2[1]):
            self.add_edge(w, b)
        return w

    def descendants(self) -> dict[int, set[int]]:
        memo: dict[int, set[int]] = {}

        def visit(v):
            if v not in memo:
                out = set()
                for w in self.succ[v]:
                    out.add(w)
                    out |= visit(w)
                memo[v] = out
            return memo[v]

        for v in self.succ:
            visit(v)
        return memo

    def bridge_pairs(self) -> list[tuple[tuple[int, int], tuple[int, int]]]:
        """Edge pairs whose bridge node would not close a cycle."""
        edges = self.edges()
        desc = self.descendants()
        pairs = []
        for i in range(len(edges)):
            a, b = edges[i]
            for j in range(i + 1, len(edges)):
                c, d = edges[j]
                ok = True
                for x in (b, d):
                    for y in (a, c):
                        if x == y or y in desc[x]:
                            ok = False
                if ok:
                    pairs.append((edges[i], edges[j]))
        return pairs

    def network(self) -> Network:
        sink = self.n + 1
        edges = [(a, sink if b == _SINK else b) for a, b in self.edges()]
        return Network(self.n, tuple(edges), source=_SOURCE, sink=sink)


def _snapshot(g: _Graph, cfg: GrowthConfig, scales: list[float], log: list[dict], cutsets: bool) -> System:
    net = g.network()
    repair = None if cfg.repair_rate is None else Exponential(cfg.repair_rate)
    comps = [Component(Weibull(cfg.shape, s), repair) for s in scales]
    cuts = enumerate_min_cutsets(net, cap=cfg.cut_cap) if cutsets else None
    return System(net, comps, cuts, move_log=[dict(m) for m in log])


def grow_nested(
    cfg: GrowthConfig,
    sizes: Sequence[int],
    rng: Optional[np.random.Generator] = None,
    cutsets: bool = True,
) -> list[System]:
    """Snapshots of one growth run at each of the strictly increasing ``sizes``.

    Each system is a continuation of the previous one: the first ``k - 1``
    moves of every snapshot with ``k`` components are shared.
    """
    sizes = [int(s) for s in sizes]
    if not sizes or sizes[0] < 1 or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError(f"sizes must be strictly increasing positive integers, got {sizes}")
    if rng is None:
        rng = make_rng(cfg.seed)
    probs = np.cumsum([cfg.p_series, cfg.p_parallel, cfg.p_bridge])
    g = _Graph()
    scales = [float(rng.uniform(cfg.scale_lo, cfg.scale_hi))]
    log: list[dict] = []
    out = []
    want = iter(sizes)
    nxt = next(want)
    while True:
        if g.n == nxt:
            out.append(_snapshot(g, cfg, scales, log, cutsets))
            nxt = next(want, None)
            if nxt is None:
                return out
        while True:
            move = MOVES[min(int(np.searchsorted(probs, rng.random(), side="right")), 2)]
            if move == "bridge":
                pairs = g.bridge_pairs()
                if not pairs:
                    if cfg.p_bridge >= 1.0:
                        raise ValueError("no admissible bridge pair and no other move has positive probability")
                    continue
                e1, e2 = pairs[int(rng.integers(len(pairs)))]
                w = g.bridge(e1, e2)
                log.append({"move": "bridge", "edges": [list(e1), list(e2)], "new": w})
            else:
                v = int(rng.integers(1, g.n + 1))
                u = g.series(v) if move == "series" else g.parallel(v)
                log.append({"move": move, "node": v, "new": u})
            break
        scales.append(float(rng.uniform(cfg.scale_lo, cfg.scale_hi)))


def grow(cfg: GrowthConfig, rng: Optional[np.random.Generator] = None, cutsets: bool = True) -> System:
    """Grow one random system with exactly ``cfg.target`` components.

    With ``cutsets=False`` the minimal cut sets are not enumerated.
    """
    return grow_nested(cfg, [cfg.target], rng, cutsets)[0]
