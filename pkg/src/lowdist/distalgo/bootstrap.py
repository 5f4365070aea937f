"""Building the clustering at scale ``2^(j+1)`` from the one at scale ``2^j``.

Vertices gather graph records over ``M`` cluster hops with repeated
DOWNCAST, INTERCAST, UPCAST rounds, then each computes its own next-level
center, depth and parent from what it gathered. Records are static (id,
priority, neighbor ids), so knowledge is a set of vertex indices kept as a
Python integer bitmask.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from .._rng import vertex_priority
from ..clustering import Clustering, cluster_graph, singleton_clustering
from ..graph import Graph
from ..simkernel import LOCAL, ModelSpec, SimRun, combine_runs, run
from .clusterops import DOWNCAST, INTERCAST, UPCAST, ScheduleProgram, merge_plans, op_plan
from .views import BallMasks, ClusterLocalView, LocalView, clustering_from_views, views_from_clustering

__all__ = [
    "gather_entries",
    "measure_hops",
    "gather",
    "NextLevelSolver",
    "LevelResult",
    "build_next_level",
    "MultiScaleResult",
    "multi_scale",
]


def gather_entries(view: ClusterLocalView, d: int, t0: int, M: int) -> tuple[list, int]:
    """Awake plan of one vertex for the gathering schedule and its last round.

    DOWNCAST(t0), UPCAST(t0+d), then ``M`` times DOWNCAST(τ), INTERCAST(τ+d),
    UPCAST(τ+d+1) with τ advancing by ``2d+1``, then a closing DOWNCAST(τ).
    """
    entries = op_plan(view, DOWNCAST, t0, d) + op_plan(view, UPCAST, t0 + d, d)
    tau = t0 + 2 * d + 1
    for _ in range(M):
        entries += op_plan(view, DOWNCAST, tau, d)
        entries += op_plan(view, INTERCAST, tau + d, d)
        entries += op_plan(view, UPCAST, tau + d + 1, d)
        tau += 2 * d + 1
    entries += op_plan(view, DOWNCAST, tau, d)
    return entries, tau + d


def _or(a: int, b: int) -> int:
    return a | b


def measure_hops(g: Graph, c: Clustering, needed: dict[int, int]) -> dict[int, int]:
    """Cluster-graph hops each cluster needs so that its gathered records cover ``needed``.

    ``needed`` maps a center to the bitmask of records its members use. After
    ``k`` gathering iterations a cluster holds exactly the records of clusters
    within ``k`` hops of it in the cluster graph.
    """
    q, node = cluster_graph(g, c)
    centers = list(c.centers)
    member_mask = [0] * len(centers)
    for v in range(g.n):
        member_mask[node[v]] |= 1 << v
    out = {}
    for i, s in enumerate(centers):
        want = needed.get(s, 0)
        have = 0
        seen = {i}
        frontier = [i]
        hops = 0
        have |= member_mask[i]
        while want & ~have:
            nxt = []
            for x in frontier:
                for y in q.adj[x]:
                    if y not in seen:
                        seen.add(y)
                        nxt.append(y)
                        have |= member_mask[y]
            if not nxt:
                raise ValueError("records outside the graph were requested")
            frontier = nxt
            hops += 1
        out[s] = hops
    return out


def gather(
    g: Graph,
    views: Sequence[ClusterLocalView],
    d: int,
    M: int,
    finish: Callable,
    t0: int = 0,
    notify: bool = True,
    seed=None,
) -> SimRun:
    """Run the gathering schedule; ``finish(ctx, knowledge)`` runs at each vertex's last round."""
    plans, end = [], t0
    for w in views:
        entries, last = gather_entries(w, d, t0, M)
        plans.append(merge_plans(entries))
        end = max(end, last)
    prog = ScheduleProgram(
        plans,
        [w.center_id for w in views],
        [1 << v for v in range(g.n)],
        _or,
        finish=finish,
        notify_round=end + 1 if notify else None,
    )
    return run(g, prog, ModelSpec(LOCAL), seed=seed, keep_states=True)


class NextLevelSolver:
    """Local computation of the next-level clustering from gathered records.

    Centers form the greedy independent set of the power graph ``G^{<=R}``
    taken in key order: random priority then id (``'luby'``), or id alone
    (``'greedy-id'``). Each vertex joins its nearest center (ties to the
    smaller id) and takes as parent its smallest-id neighbor one step closer.
    """

    def __init__(self, g: Graph, R: int, mode: str = "luby", seed=None, masks: BallMasks | None = None):
        if mode not in ("luby", "greedy-id"):
            raise ValueError(f"unknown MIS strategy {mode!r}")
        self.g = g
        self.R = int(R)
        self.masks = masks or BallMasks(g)
        ids = g.ids
        if mode == "luby":
            self.key = [(vertex_priority(seed, ids[v]), ids[v]) for v in range(g.n)]
        else:
            self.key = [(ids[v],) for v in range(g.n)]
        self._lower: dict[int, list[int]] = {}

    def lower(self, x: int) -> list[int]:
        got = self._lower.get(x)
        if got is None:
            kx = self.key[x]
            near = self.masks.distances(x, self.R)
            got = sorted((y for y in near if self.key[y] < kx), key=self.key.__getitem__)
            self._lower[x] = got
        return got

    def member(self, view: LocalView, memo: dict, w: int) -> bool:
        """Whether ``w`` is a center, evaluated lazily over lower-key power neighbors."""
        if w in memo:
            return memo[w]
        stack = [w]
        progress: dict[int, int] = {}
        while stack:
            x = stack[-1]
            if x in memo:
                stack.pop()
                continue
            if x not in progress:
                view.require(self.masks.mask(x, self.R))
                progress[x] = 0
            low = self.lower(x)
            i = progress[x]
            result = True
            pending = False
            while i < len(low):
                y = low[i]
                val = memo.get(y)
                if val is None:
                    stack.append(y)
                    pending = True
                    break
                if val:
                    result = False
                    break
                i += 1
            progress[x] = i
            if pending:
                continue
            memo[x] = result
            stack.pop()
        return memo[w]

    def assign(self, view: LocalView, memo: dict, v: int) -> tuple[int, int, int]:
        """``(center, depth, parent)`` of ``v`` in the next-level clustering."""
        masks = self.masks
        view.require(masks.mask(v, self.R))
        near = masks.distances(v, self.R)
        ids = self.g.ids
        c = dv = None
        for x, dx in sorted(near.items(), key=lambda t: (t[1], ids[t[0]])):
            if self.member(view, memo, x):
                c, dv = x, dx
                break
        if dv == 0:
            return c, 0, v
        view.require(masks.mask(c, dv))
        dist_c = masks.distances(c, dv)
        parent = min((u for u in self.g.adj[v] if dist_c.get(u) == dv - 1), key=ids.__getitem__)
        return c, dv, parent


@dataclass
class LevelResult:
    clustering: Clustering
    views: list[ClusterLocalView]
    run: SimRun
    M: int
    needed_hops: dict[int, int]


def _depth_bound(c: Clustering) -> int:
    return int(c.scale) if c.scale > 1 else int(c.depth_of.max(initial=0))


def build_next_level(
    g: Graph,
    c: Clustering,
    views: Sequence[ClusterLocalView] | None = None,
    M: int | None = None,
    mode: str = "luby",
    seed=None,
    d: int | None = None,
    t0: int = 0,
    masks: BallMasks | None = None,
) -> LevelResult:
    """Distributed construction of the clustering at scale ``2 * c.scale``.

    ``M`` gathering iterations are used; by default ``M`` is measured as the
    largest number of cluster hops any cluster needs for its members' local
    computation. A smaller ``M`` makes some vertex raise ``InsufficientView``.
    The result equals ``mis_voronoi(g, 2 * c.scale, 'zero', mis=mode,
    mis_seed=seed)``.
    """
    R = int(round(2 * c.scale))
    d = _depth_bound(c) if d is None else d
    if views is None:
        views = views_from_clustering(g, c, d)
    masks = masks or BallMasks(g)
    solver = NextLevelSolver(g, R, mode, seed, masks)

    members = c.members()
    needed = {}
    for s, mem in members.items():
        lv = LocalView(None)
        memo: dict = {}
        for v in mem:
            solver.assign(lv, memo, v)
        needed[s] = lv.needed
    hops = measure_hops(g, c, needed)
    if M is None:
        M = max(hops.values(), default=0)

    memos: dict[int, dict] = {}
    adj = g.adj

    def finish(ctx, know):
        memo = memos.setdefault(know, {})
        center, depth, parent = solver.assign(LocalView(know), memo, ctx.index)
        port = None if parent == ctx.index else adj[ctx.index].index(parent)
        return (g.ids[center], depth), port

    sim = gather(g, views, d, M, finish, t0=t0, seed=seed)
    new_views = [
        ClusterLocalView(st.value[0], st.value[1], st.parent_port, tuple(st.children), R) for st in sim.states
    ]
    sim.states = None
    return LevelResult(clustering_from_views(g, new_views, R), new_views, sim, M, hops)


@dataclass
class MultiScaleResult:
    clusterings: list[Clustering]
    levels: list[LevelResult] = field(default_factory=list)

    @property
    def energy_by_level(self) -> list[int]:
        """Energy complexity of the whole construction after each level (0 for the singletons)."""
        out = [0]
        total = None
        for lv in self.levels:
            total = lv.run.energy.copy() if total is None else total + lv.run.energy
            out.append(int(total.max()))
        return out

    @property
    def rounds_by_level(self) -> list[int]:
        out = [0]
        for lv in self.levels:
            out.append(out[-1] + lv.run.rounds_used)
        return out

    @property
    def views(self) -> list[ClusterLocalView]:
        return self.levels[-1].views if self.levels else None

    def combined_run(self) -> SimRun | None:
        return combine_runs([lv.run for lv in self.levels]) if self.levels else None


def multi_scale(g: Graph, i_max: int, mode: str = "luby", seed=None, masks: BallMasks | None = None) -> MultiScaleResult:
    """Clusterings at scales ``1, 2, 4, ..., 2^i_max`` built level by level from singletons."""
    if i_max < 0:
        raise ValueError("i_max must be nonnegative")
    masks = masks or BallMasks(g)
    c = singleton_clustering(g, 1)
    views = views_from_clustering(g, c, 0)
    out = MultiScaleResult([c])
    for _ in range(i_max):
        lv = build_next_level(g, c, views, mode=mode, seed=seed, masks=masks)
        out.levels.append(lv)
        out.clusterings.append(lv.clustering)
        c, views = lv.clustering, lv.views
    return out
