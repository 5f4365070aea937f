"""Covers by overlapping balls and the low-energy simulation of LOCAL algorithms.

A cover takes the centers of a maximal independent set of ``G^{<=R}`` and
grows a ball of radius ``mult * R`` with a BFS tree around each. Every vertex
is within ``R`` of a center, so for ``mult >= 2`` each ball ``B_R(w)`` lies
inside the cover ball of ``w``'s nearest center.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..clustering import mis_power_graph
from ..errors import InsufficientView, InvalidClustering
from ..graph import Graph
from ..simkernel import (
    HALT,
    LOCAL,
    ModelSpec,
    SimRun,
    VertexProgram,
    _simulate,
    combine_runs,
    make_contexts,
    run,
)
from .bootstrap import MultiScaleResult, gather, measure_hops, multi_scale
from .clusterops import DOWNCAST, UPCAST, merge_plans, op_plan
from .views import BallMasks, ClusterLocalView, LocalView

__all__ = [
    "CoverMembership",
    "CoverView",
    "build_cover",
    "cover_memberships",
    "LocalSimResult",
    "simulate_local_algorithm",
    "write_cover",
]


@dataclass(frozen=True)
class CoverMembership:
    cover_id: int
    depth: int
    parent_port: int | None
    child_ports: tuple[int, ...]


@dataclass
class CoverView:
    R: int
    radius: int
    centers: list[int]
    memberships: list[list[CoverMembership]]
    fold_bound: int = 0

    @property
    def fold(self) -> int:
        return max((len(m) for m in self.memberships), default=0)

    def fold_counts(self) -> np.ndarray:
        return np.array([len(m) for m in self.memberships], dtype=np.int64)

    def members(self, cover_id: int) -> list[int]:
        return [v for v, ms in enumerate(self.memberships) if any(m.cover_id == cover_id for m in ms)]


def _ball_tree(g: Graph, dist: dict[int, int], v: int, radius: int) -> CoverMembership | None:
    dv = dist.get(v)
    if dv is None or dv > radius:
        return None
    ids = g.ids
    adj = g.adj

    def parent_of(x: int) -> int:
        dx = dist[x]
        return min((u for u in adj[x] if dist.get(u) == dx - 1), key=ids.__getitem__)

    pport = None if dv == 0 else adj[v].index(parent_of(v))
    kids = tuple(p for p, u in enumerate(adj[v]) if dist.get(u) == dv + 1 and dv + 1 <= radius and parent_of(u) == v)
    return CoverMembership(-1, dv, pport, kids)


def cover_memberships(
    g: Graph, centers: Sequence[int], radius: int, view: LocalView, masks: BallMasks, v: int, is_center
) -> list[CoverMembership]:
    """Memberships of ``v`` computed from gathered records only."""
    view.require(masks.mask(v, radius))
    out = []
    for s, _ in sorted(masks.distances(v, radius).items(), key=lambda t: g.ids[t[0]]):
        if not is_center[s]:
            continue
        view.require(masks.mask(s, radius))
        m = _ball_tree(g, masks.distances(s, radius + 1), v, radius)
        out.append(CoverMembership(g.ids[s], m.depth, m.parent_port, m.child_ports))
    return out


def _check_cover(g: Graph, R: int, centers: Sequence[int], radius: int, masks: BallMasks) -> None:
    balls = {s: masks.distances(s, radius) for s in centers}
    for w in range(g.n):
        inner = masks.distances(w, R)
        if not any(all(u in b for u in inner) for b in balls.values() if w in b):
            raise InvalidClustering(f"ball of radius {R} around vertex {w} is in no cover cluster")


def build_cover(
    g: Graph,
    R: int,
    ball_radius_mult: int = 2,
    strategy: str = "greedy-id",
    seed=None,
    centers: Sequence[int] | None = None,
    masks: BallMasks | None = None,
) -> CoverView:
    """Cover by balls of radius ``mult * R`` around a maximal independent set of ``G^{<=R}``.

    The containment of every ``B_R(w)`` in some cover cluster is checked.
    """
    if ball_radius_mult not in (2, 3):
        raise ValueError("ball radius multiplier must be 2 or 3")
    R = int(R)
    masks = masks or BallMasks(g)
    S = sorted(centers) if centers is not None else mis_power_graph(g, R, strategy, seed)
    radius = ball_radius_mult * R
    is_center = np.zeros(g.n, dtype=bool)
    is_center[S] = True
    view = LocalView(None)
    mems = [cover_memberships(g, S, radius, view, masks, v, is_center) for v in range(g.n)]
    _check_cover(g, R, S, radius, masks)
    cv = CoverView(R, radius, [g.ids[s] for s in S], mems)
    cv.fold_bound = cv.fold
    return cv


def write_cover(g: Graph, cover: CoverView, dest) -> None:
    """Clustering-style rows ``vertex center depth parent cover-id``, one per membership."""
    index = {vid: v for v, vid in enumerate(g.ids)}
    order = {cid: i for i, cid in enumerate(cover.centers)}
    lines = [f"cover {cover.radius} cover-id"]
    for v, ms in enumerate(cover.memberships):
        for m in ms:
            parent = v if m.parent_port is None else g.adj[v][m.parent_port]
            lines.append(f"{v} {index[m.cover_id]} {m.depth} {parent} {order[m.cover_id]}")
    text = "\n".join(lines) + "\n"
    if isinstance(dest, str):
        with open(dest, "w") as fh:
            fh.write(text)
    else:
        dest.write(text)


# low-energy simulation of a LOCAL program


class _SegmentProgram(VertexProgram):
    """Per segment: DOWNCAST, UPCAST, DOWNCAST in every cover tree of the vertex.

    Knowledge is the map ``vertex -> (target state, next wake)`` at the start of
    the segment. At its last round of a segment a vertex advances its own
    target state by re-running the target on its ``t``-ball.
    """

    def __init__(self, plans, last_round, advance, initial):
        self.plans = plans
        self.last_round = last_round
        self.advance = advance
        self.initial = initial

    def init(self, ctx):
        st = {"k": 0, "know": {ctx.index: self.initial[ctx.index]}, "rounds": sorted(self.plans[ctx.index]), "pos": 0}
        return st, st["rounds"][0] if st["rounds"] else HALT

    def send(self, ctx, st, rnd):
        ports = self.plans[ctx.index][rnd]
        if not ports:
            return None
        return {p: (st["k"], st["know"]) for p in ports}

    def on_wake(self, ctx, st, rnd, inbox):
        k = st["k"]
        know = st["know"]
        for k2, other in inbox.values():
            if k2 == k and not other.keys() <= know.keys():
                know = {**know, **other}
        st["know"] = know
        if rnd == self.last_round[ctx.index][k]:
            st["know"] = {ctx.index: self.advance(ctx.index, know, k)}
            st["k"] = k + 1
        st["pos"] += 1
        rounds = st["rounds"]
        return st, rounds[st["pos"]] if st["pos"] < len(rounds) else HALT

    def output(self, ctx, st):
        return st["know"][ctx.index]


@dataclass
class LocalSimResult:
    outputs: list
    run: SimRun
    cover: CoverView | None
    M: int = 0
    phases: dict = field(default_factory=dict)


def simulate_local_algorithm(
    g: Graph,
    program: VertexProgram,
    t: int,
    segments: int = 1,
    seed=None,
    inputs=None,
    mode: str = "luby",
    cover_seed=None,
    ball_radius_mult: int = 2,
    multiscale: MultiScaleResult | None = None,
) -> LocalSimResult:
    """Run ``t * segments`` rounds of a deterministic LOCAL ``program`` with little energy.

    The multi-scale construction provides centers at scale ``R = 2^j >= t``;
    gathering over the level-``j`` clusters tells every vertex its memberships
    in the cover by balls of radius ``mult * R``. Each segment then costs one
    DOWNCAST-UPCAST-DOWNCAST per cover tree, after which every vertex holds
    the states of its whole ``t``-ball and advances its own state by ``t``
    rounds locally. ``seed`` and ``inputs`` are those of the target program.
    """
    tctx = make_contexts(g, seed, inputs)
    init = []
    for ctx in tctx:
        st, w = program.init(ctx)
        init.append((st, w))
    if t == 0 or segments == 0:
        outs = [program.output(ctx, st) for ctx, (st, _) in zip(tctx, init)]
        zero = SimRun(outs, 0, np.zeros(g.n, dtype=np.int64))
        return LocalSimResult(outs, zero, None)

    j = max(1, math.ceil(math.log2(t)))
    R = 2**j
    masks = BallMasks(g)
    ms = multiscale if multiscale is not None else multi_scale(g, j, mode, cover_seed, masks)
    level = ms.clusterings[j]
    views = ms.levels[j - 1].views
    radius = ball_radius_mult * R
    is_center = np.zeros(g.n, dtype=bool)
    is_center[list(level.centers)] = True
    centers = list(level.centers)

    needed = {}
    for s, mem in level.members().items():
        lv = LocalView(None)
        for v in mem:
            lv.require(masks.mask(v, t))
            cover_memberships(g, centers, radius, lv, masks, v, is_center)
        needed[s] = lv.needed
    M = max(measure_hops(g, level, needed).values(), default=0)

    def finish(ctx, know):
        lv = LocalView(know)
        lv.require(masks.mask(ctx.index, t))
        return cover_memberships(g, centers, radius, lv, masks, ctx.index, is_center)

    cover_run = gather(g, views, R, M, finish, notify=False, seed=cover_seed)
    mems = [st.value for st in cover_run.states]
    cover_run.states = None
    cover = CoverView(R, radius, [g.ids[s] for s in centers], mems)
    cover.fold_bound = cover.fold

    d = radius
    seg_len = 3 * d + 2
    plans, last_round = [], []
    for v in range(g.n):
        entries = []
        for m in mems[v]:
            w = ClusterLocalView(m.cover_id, m.depth, m.parent_port, m.child_ports, d)
            for k in range(segments):
                tau = k * seg_len
                entries += op_plan(w, DOWNCAST, tau, d)
                entries += op_plan(w, UPCAST, tau + d + 1, d)
                entries += op_plan(w, DOWNCAST, tau + 2 * d + 1, d)
        plan = {r: ports for r, (ports, _) in merge_plans(entries).items()}
        plans.append(plan)
        lasts = [-1] * segments
        for r in plan:
            k = r // seg_len
            lasts[k] = max(lasts[k], r)
        last_round.append(lasts)

    rev = g.reverse_ports()

    def advance(v: int, know: dict, k: int):
        near = masks.distances(v, t)
        missing = [u for u in near if u not in know]
        if missing:
            raise InsufficientView(f"vertex {v} lacks the state of vertex {missing[0]} in segment {k}")
        order = sorted(near)
        loc = {u: i for i, u in enumerate(order)}
        adj = [[loc.get(u, -1) for u in g.adj[x]] for x in order]
        rv = [rev[x] for x in order]
        states = [copy.deepcopy(know[x][0]) for x in order]
        wake = [know[x][1] for x in order]
        energy = np.zeros(len(order), dtype=np.int64)
        _simulate(adj, rv, [tctx[x] for x in order], program, LOCAL, None, states, wake, (k + 1) * t, energy, None)
        i = loc[v]
        return states[i], wake[i]

    prog = _SegmentProgram(plans, last_round, advance, init)
    seg_run = run(g, prog, ModelSpec(LOCAL), keep_states=True)
    finals = [st["know"][v] for v, st in enumerate(seg_run.states)]
    outs = [program.output(ctx, st) for ctx, (st, _) in zip(tctx, finals)]
    phases = {"multi_scale": ms.combined_run(), "cover": cover_run, "segments": seg_run}
    total = combine_runs([p for p in phases.values() if p is not None], outputs=outs)
    return LocalSimResult(outs, total, cover, M, phases)
