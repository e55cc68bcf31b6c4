"""Two-terminal networks, minimal cut sets and system lifetime evaluation.

Components are the network nodes ``1..n``; the source and sink terminals
and all edges are perfectly reliable. A component status of 1 means
working and 0 means failed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .distributions import LifetimeDist

__all__ = [
    "StructureError",
    "CapacityError",
    "Network",
    "Component",
    "System",
    "ValidationReport",
    "eval_lifetime",
    "is_failed",
    "enumerate_min_cutsets",
    "enumerate_paths",
    "canonical_cutsets",
    "connected_states",
    "validate_system",
    "cut_index",
    "cut_failure_times",
    "batch_lifetimes",
    "brute_force_min_cutsets",
    "DEFAULT_CUT_CAP",
]

DEFAULT_CUT_CAP = 10**6


class StructureError(ValueError):
    """Network is cyclic, disconnected or otherwise malformed."""


class CapacityError(RuntimeError):
    """Path or cut-set enumeration exceeded the configured cap."""


@dataclass(frozen=True)
class Network:
    """Directed two-terminal network whose nodes ``1..n`` are components."""

    n: int
    edges: tuple[tuple[int, int], ...]
    source: int = 0
    sink: Optional[int] = None

    def __post_init__(self):
        if self.n < 1:
            raise StructureError("network needs at least one component")
        if self.sink is None:
            object.__setattr__(self, "sink", self.n + 1)
        object.__setattr__(self, "edges", tuple(sorted({(int(a), int(b)) for a, b in self.edges})))
        nodes = self.nodes
        if self.source == self.sink or self.source in range(1, self.n + 1) or self.sink in range(1, self.n + 1):
            raise StructureError("terminals must be distinct and not component ids")
        for a, b in self.edges:
            if a not in nodes or b not in nodes:
                raise StructureError(f"edge ({a}, {b}) references an unknown node")

    @property
    def nodes(self) -> set[int]:
        return set(range(1, self.n + 1)) | {self.source, self.sink}

    def successors(self) -> dict[int, list[int]]:
        succ: dict[int, list[int]] = {v: [] for v in self.nodes}
        for a, b in self.edges:
            succ[a].append(b)
        return succ

    def predecessors(self) -> dict[int, list[int]]:
        pred: dict[int, list[int]] = {v: [] for v in self.nodes}
        for a, b in self.edges:
            pred[b].append(a)
        return pred

    def topological_order(self) -> list[int]:
        """Kahn order; raises ``StructureError`` on a cycle."""
        succ = self.successors()
        indeg = {v: 0 for v in self.nodes}
        for _, b in self.edges:
            indeg[b] += 1
        ready = sorted(v for v, d in indeg.items() if d == 0)
        order = []
        while ready:
            v = ready.pop(0)
            order.append(v)
            for w in succ[v]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    ready.append(w)
        if len(order) != len(indeg):
            raise StructureError("network contains a cycle")
        return order

    def check(self) -> None:
        """Raise ``StructureError`` unless acyclic with every component on a terminal path."""
        self.topological_order()
        fwd = _reach(self.source, self.successors())
        bwd = _reach(self.sink, self.predecessors())
        if self.sink not in fwd:
            raise StructureError("sink is not reachable from source")
        stray = sorted(v for v in range(1, self.n + 1) if v not in fwd or v not in bwd)
        if stray:
            raise StructureError(f"components not on any source-sink path: {stray}")


def _reach(start: int, adj: dict[int, list[int]]) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


@dataclass
class Component:
    lifetime: LifetimeDist
    repair: Optional[LifetimeDist] = None


@dataclass
class System:
    network: Network
    components: list[Component]
    cutsets: Optional[list[tuple[int, ...]]] = None
    move_log: Optional[list] = None

    def __post_init__(self):
        if len(self.components) != self.network.n:
            raise StructureError(
                f"{len(self.components)} components given for a network of {self.network.n}"
            )

    @property
    def n(self) -> int:
        return self.network.n

    @property
    def repairable(self) -> bool:
        return all(c.repair is not None for c in self.components)

    def require_cutsets(self) -> list[tuple[int, ...]]:
        if self.cutsets is None:
            self.cutsets = enumerate_min_cutsets(self.network)
        return self.cutsets


# --- evaluation -------------------------------------------------------------


def eval_lifetime(cuts: Sequence[Sequence[int]], failure_times: Sequence[float]) -> float:
    """System failure time: min over cut sets of the latest member failure.

    ``failure_times[i - 1]`` is the failure time of component ``i``.
    """
    best = np.inf
    for cut in cuts:
        worst = -np.inf
        for c in cut:
            if c < 1:
                raise IndexError(f"component id {c} out of range")
            t = failure_times[c - 1]
            if t > worst:
                worst = t
        if worst < best:
            best = worst
    return float(best)


def is_failed(cuts: Sequence[Sequence[int]], status: Sequence[int]) -> bool:
    """True iff every member of some cut set has status 0 (failed)."""
    for cut in cuts:
        for c in cut:
            if c < 1:
                raise IndexError(f"component id {c} out of range")
        if all(not status[c - 1] for c in cut):
            return True
    return False


def cut_index(cuts: Sequence[Sequence[int]]) -> np.ndarray:
    """Zero-based ``(m, w)`` member index; short rows repeat their first member.

    Repeating a member leaves both the row max and the row all() unchanged,
    so the padded matrix can be used directly for either.
    """
    if not cuts:
        return np.zeros((0, 1), dtype=np.intp)
    width = max(len(c) for c in cuts)
    idx = np.empty((len(cuts), width), dtype=np.intp)
    for i, cut in enumerate(cuts):
        row = [c - 1 for c in cut]
        idx[i] = row + [row[0]] * (width - len(row))
    return idx


def cut_failure_times(times: np.ndarray, idx: np.ndarray, chunk: int = 1 << 22) -> np.ndarray:
    """Per-cut failure times ``(N, m)`` from component times ``(N, n)``."""
    n_rows = times.shape[0]
    m, w = idx.shape
    out = np.empty((n_rows, m), dtype=float)
    step = max(1, chunk // max(1, m * w))
    for lo in range(0, n_rows, step):
        out[lo : lo + step] = times[lo : lo + step][:, idx].max(axis=2)
    return out


def batch_lifetimes(times: np.ndarray, idx: np.ndarray, chunk: int = 1 << 22) -> np.ndarray:
    """Vectorised ``eval_lifetime`` over the rows of ``times``."""
    n_rows = times.shape[0]
    m, w = idx.shape
    if m == 0:
        return np.full(n_rows, np.inf)
    out = np.empty(n_rows, dtype=float)
    step = max(1, chunk // (m * w))
    for lo in range(0, n_rows, step):
        out[lo : lo + step] = times[lo : lo + step][:, idx].max(axis=2).min(axis=1)
    return out


# --- enumeration ------------------------------------------------------------


def enumerate_paths(net: Network, cap: int = DEFAULT_CUT_CAP) -> list[int]:
    """All simple source-sink paths as component bitmasks (bit ``i`` = component ``i``)."""
    succ = net.successors()
    for v in succ:
        succ[v].sort()
    paths: list[int] = []
    stack = [(net.source, 0, iter(succ[net.source]))]
    while stack:
        node, mask, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            stack.pop()
            continue
        if nxt == net.sink:
            paths.append(mask)
            if len(paths) > cap:
                raise CapacityError(f"more than {cap} source-sink paths")
            continue
        stack.append((nxt, mask | (1 << nxt), iter(succ[nxt])))
    return paths


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _minimal_transversals(edges: list[int], cap: int) -> list[int]:
    """Minimal hitting sets of a hypergraph, by incremental (Berge) dualization."""
    edges = sorted(set(edges), key=lambda e: (bin(e).count("1"), e))
    if not edges:
        return []
    cuts = [1 << v for v in _bits(edges[0])]
    for edge in edges[1:]:
        hit, unhit = [], []
        for c in cuts:
            (hit if c & edge else unhit).append(c)
        if not unhit:
            continue
        new = hit
        for v in _bits(edge):
            bv = 1 << v
            blockers = [h for h in hit if h & bv]
            for c in unhit:
                x = c | bv
                for h in blockers:
                    if h & x == h:
                        break
                else:
                    new.append(x)
        cuts = new
        if len(cuts) > cap:
            raise CapacityError(f"more than {cap} minimal cut sets")
    return cuts


def canonical_cutsets(cuts) -> list[tuple[int, ...]]:
    """Sorted member tuples, ordered by size then lexicographically."""
    return sorted((tuple(sorted(int(c) for c in cut)) for cut in cuts), key=lambda t: (len(t), t))


def _separator_search(net: Network, cap: int) -> list[tuple[int, ...]]:
    """Minimal vertex cuts by branching on the source side of the cut.

    A state is a set ``S`` closed under reachability from the source plus a
    set ``X`` of boundary nodes committed to the cut. The lowest boundary
    node not yet in ``X`` either joins the cut or is absorbed into ``S``.

    A state can still be completed to a minimal cut iff every node of ``X``
    has a successor that reaches the sink while avoiding ``S`` and the whole
    out-boundary of ``S``. Only completable states are pushed, so the search
    has no dead ends and each minimal cut is emitted exactly once.
    """
    order = net.topological_order()
    pos = {v: i for i, v in enumerate(order)}
    succ = [0] * len(order)
    for a, b in net.edges:
        succ[pos[a]] |= 1 << pos[b]
    tbit = 1 << pos[net.sink]
    rev = [pos[v] for v in reversed(order) if v != net.sink]
    label = {pos[v]: v for v in order}

    def reach_sink(blocked: int) -> int:
        r = tbit
        for i in rev:
            if succ[i] & r and not (blocked >> i) & 1:
                r |= 1 << i
        return r

    def private_ok(members: int, r: int) -> bool:
        while members:
            low = members & -members
            if not succ[low.bit_length() - 1] & r:
                return False
            members ^= low
        return True

    found: list[tuple[int, ...]] = []
    src = pos[net.source]
    s0 = 1 << src
    if succ[src] & tbit:
        return found
    out0 = succ[src]
    stack = [(s0, out0, 0, reach_sink(s0 | out0))]
    while stack:
        S, out, X, r = stack.pop()
        free = out & ~S & ~X
        if not free:
            found.append(tuple(sorted(label[i] for i in _bits(X))))
            if len(found) > cap:
                raise CapacityError(f"more than {cap} minimal cut sets")
            continue
        vb = free & -free
        v = vb.bit_length() - 1
        if not succ[v] & tbit:
            S2 = S | vb
            out2 = out | succ[v]
            r2 = reach_sink(S2 | out2)
            if private_ok(X, r2):
                stack.append((S2, out2, X, r2))
        if succ[v] & r:
            stack.append((S, out, X | vb, r))
    return found


def enumerate_min_cutsets(
    net: Network, cap: int = DEFAULT_CUT_CAP, method: str = "separators"
) -> list[tuple[int, ...]]:
    """Minimal component cut sets separating source from sink, in canonical order.

    ``method="separators"`` (default) searches source-side sets directly and
    scales with the number of cuts. ``method="dualization"`` lists all
    source-sink paths and takes their minimal hitting sets; it is exact but
    the path count grows much faster than the cut count on bridged networks.
    """
    net.check()
    if method == "separators":
        return canonical_cutsets(_separator_search(net, cap))
    if method == "dualization":
        paths = enumerate_paths(net, cap)
        masks = _minimal_transversals(paths, cap)
        return canonical_cutsets(_bits(m) for m in masks)
    raise ValueError(f"unknown enumeration method {method!r}")


# --- brute force structure function and validation ---------------------------


def connected_states(net: Network, working: np.ndarray) -> np.ndarray:
    """Source-sink connectivity for each row of a ``(S, n)`` working-status matrix."""
    working = np.asarray(working, dtype=bool)
    pred = net.predecessors()
    reach: dict[int, np.ndarray] = {net.source: np.ones(working.shape[0], dtype=bool)}
    for v in net.topological_order():
        if v == net.source:
            continue
        r = np.zeros(working.shape[0], dtype=bool)
        for p in pred[v]:
            if p in reach:
                r |= reach[p]
        if v != net.sink:
            r &= working[:, v - 1]
        reach[v] = r
    return reach[net.sink]


def _all_states(n: int, lo: int, hi: int) -> np.ndarray:
    """Working-status rows for state codes ``lo..hi-1``; bit ``i`` set = component ``i+1`` failed."""
    codes = np.arange(lo, hi, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n)) & 1) == 0


@dataclass
class ValidationReport:
    exhaustive: bool
    invalid_ids: list[tuple[int, ...]] = field(default_factory=list)
    not_a_cut: list[tuple[int, ...]] = field(default_factory=list)
    not_minimal: list[tuple[int, ...]] = field(default_factory=list)
    uncovered: list[tuple[int, ...]] = field(default_factory=list)
    structure: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not (self.invalid_ids or self.not_a_cut or self.not_minimal or self.uncovered or self.structure)


def validate_system(sys: System, exhaustive_limit: int = 20, max_reports: int = 20) -> ValidationReport:
    """Check network structure and the listed minimal cut sets.

    For ``n <= exhaustive_limit`` every one of the ``2**n`` status vectors is
    compared against the cut-set structure function, which also proves
    completeness. Larger systems only get the per-cut checks.
    """
    net = sys.network
    n = net.n
    report = ValidationReport(exhaustive=n <= exhaustive_limit)
    try:
        net.check()
    except StructureError as exc:
        report.structure.append(str(exc))
        return report
    cuts = canonical_cutsets(sys.cutsets or [])
    good = []
    for cut in cuts:
        if not cut or len(set(cut)) != len(cut) or cut[0] < 1 or cut[-1] > n:
            report.invalid_ids.append(cut)
        else:
            good.append(cut)

    def disconnects(members) -> bool:
        w = np.ones((1, n), dtype=bool)
        w[0, [c - 1 for c in members]] = False
        return not connected_states(net, w)[0]

    for cut in good:
        if not disconnects(cut):
            report.not_a_cut.append(cut)
        elif len(cut) > 1 and any(disconnects(cut[:i] + cut[i + 1 :]) for i in range(len(cut))):
            report.not_minimal.append(cut)
    listed = set(good)
    for cut in good:
        if any(set(o) < set(cut) for o in listed if o != cut) and cut not in report.not_minimal:
            report.not_minimal.append(cut)

    if report.exhaustive and good:
        masks = [sum(1 << (c - 1) for c in cut) for cut in good]
        mask_arr = np.array(masks, dtype=np.int64)
        step = 1 << 16
        for lo in range(0, 1 << n, step):
            hi = min(1 << n, lo + step)
            states = _all_states(n, lo, hi)
            down = ~connected_states(net, states)
            codes = np.arange(lo, hi, dtype=np.int64)
            covered = np.zeros(hi - lo, dtype=bool)
            for mk in mask_arr:
                covered |= (codes & mk) == mk
            for code in codes[down & ~covered]:
                if len(report.uncovered) >= max_reports:
                    break
                report.uncovered.append(tuple(i + 1 for i in range(n) if (int(code) >> i) & 1))
    elif report.exhaustive and not good:
        report.uncovered.append(tuple(range(1, n + 1)))
    report.uncovered = _minimal_only(report.uncovered)
    return report


def _minimal_only(sets: list[tuple[int, ...]]) -> list[tuple[int, ...]]:
    keep = []
    for s in sorted(sets, key=len):
        if not any(set(k) <= set(s) for k in keep):
            keep.append(s)
    return keep


def brute_force_min_cutsets(net: Network) -> list[tuple[int, ...]]:
    """Exhaustive ``2**n`` minimal cut sets; only for small networks."""
    n = net.n
    states = _all_states(n, 0, 1 << n)
    down = ~connected_states(net, states)
    failing = [c for c in range(1 << n) if down[c]]
    cuts = []
    for code in sorted(failing, key=lambda c: bin(c).count("1")):
        if not any(code & k == k for k in cuts):
            cuts.append(code)
    return canonical_cutsets(tuple(i + 1 for i in range(n) if (k >> i) & 1) for k in cuts)

