"""Scheduled tree operations inside clusters: DOWNCAST, UPCAST and INTERCAST.

Every vertex derives its awake rounds from its own depth, its parent and child
ports and the shared depth bound ``d``. For a schedule that starts at ``t0``:

* DOWNCAST: the center sends at ``t0``; a vertex at depth ``δ`` listens at
  ``t0+δ-1`` and forwards at ``t0+δ``, so the center's state reaches depth
  ``d`` by round ``t0+d-1``.
* UPCAST: a leaf sends at ``t0+d-δ``; an inner vertex listens at
  ``t0+d-δ-1`` and sends at ``t0+d-δ``; the center only listens.
* INTERCAST: every vertex sends at ``t0`` and keeps what arrives from other
  clusters.

In LOCAL the payload is the sender's whole knowledge and the receiver merges
it, so a vertex whose roles overlap in one round is awake once.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Sequence

from ..clustering import Clustering, greedy_coloring
from ..graph import Graph, bounded_bfs
from ..simkernel import HALT, LOCAL, RADIO, ModelSpec, SimRun, VertexProgram, run
from .views import ClusterLocalView, views_from_clustering

__all__ = [
    "DOWNCAST",
    "UPCAST",
    "INTERCAST",
    "op_plan",
    "merge_plans",
    "ScheduleProgram",
    "ClusterOpResult",
    "dist_cluster_op",
    "radio_cluster_op",
]

DOWNCAST = "DOWNCAST"
UPCAST = "UPCAST"
INTERCAST = "INTERCAST"


def op_plan(view: ClusterLocalView, kind: str, t0: int, d: int | None = None) -> list[tuple[int, tuple[int, ...], bool]]:
    """Awake rounds of one vertex for one operation as ``(round, tree ports, intercast)``."""
    d = view.d if d is None else d
    delta = view.depth
    if kind == DOWNCAST:
        if view.is_center:
            return [(t0, view.child_ports, False)]
        return [(t0 + delta - 1, (), False), (t0 + delta, view.child_ports, False)]
    if kind == UPCAST:
        if view.is_leaf:
            return [] if view.is_center else [(t0 + d - delta, (view.parent_port,), False)]
        out = [(t0 + d - delta - 1, (), False)]
        if not view.is_center:
            out.append((t0 + d - delta, (view.parent_port,), False))
        return out
    if kind == INTERCAST:
        return [(t0, (), True)]
    raise ValueError(f"unknown cluster operation {kind!r}")


def merge_plans(entries) -> dict[int, tuple[frozenset, bool]]:
    plan: dict[int, list] = {}
    for r, ports, inter in entries:
        slot = plan.setdefault(r, [set(), False])
        slot[0].update(ports)
        slot[1] = slot[1] or inter
    return {r: (frozenset(p), i) for r, (p, i) in sorted(plan.items())}


class _VState:
    __slots__ = ("know", "rounds", "pos", "value", "parent_port", "children")

    def __init__(self, know, rounds):
        self.know = know
        self.rounds = rounds
        self.pos = 0
        self.value = None
        self.parent_port = None
        self.children: list[int] = []


class ScheduleProgram(VertexProgram):
    """Runs a fixed sequence of cluster operations and merges what it hears.

    ``plans`` gives each vertex its per-round ports. After its last planned
    round a vertex calls ``finish(ctx, knowledge)``; if that returns
    ``(value, parent_port)`` and ``notify_round`` is set, every vertex wakes once
    more at ``notify_round`` to tell its new parent that it is a child.
    """

    def __init__(
        self,
        plans: Sequence[dict[int, tuple[frozenset, bool]]],
        cluster_ids: Sequence[int],
        initial: Sequence[Any],
        merge: Callable[[Any, Any], Any],
        finish: Callable | None = None,
        notify_round: int | None = None,
    ):
        self.plans = plans
        self.cluster_ids = cluster_ids
        self.initial = initial
        self.merge = merge
        self.finish = finish
        self.notify_round = notify_round

    def init(self, ctx):
        rounds = list(self.plans[ctx.index])
        st = _VState(self.initial[ctx.index], rounds)
        if rounds:
            return st, rounds[0]
        self._complete(ctx, st)
        return st, self.notify_round

    def send(self, ctx, st, rnd):
        if rnd == self.notify_round and st.pos >= len(st.rounds):
            return {st.parent_port: 1} if st.parent_port is not None else None
        ports, inter = self.plans[ctx.index][rnd]
        cid = self.cluster_ids[ctx.index]
        out = {p: (cid, st.know, True) for p in ports}
        if inter:
            for p in range(ctx.degree):
                out.setdefault(p, (cid, st.know, False))
        return out

    def on_wake(self, ctx, st, rnd, inbox):
        if rnd == self.notify_round and st.pos >= len(st.rounds):
            st.children = sorted(inbox)
            return st, HALT
        cid = self.cluster_ids[ctx.index]
        for cid2, know, tree in inbox.values():
            if tree or cid2 != cid:
                st.know = self.merge(st.know, know)
        st.pos += 1
        if st.pos < len(st.rounds):
            return st, st.rounds[st.pos]
        self._complete(ctx, st)
        return st, self.notify_round

    def _complete(self, ctx, st):
        if self.finish is not None:
            res = self.finish(ctx, st.know)
            if self.notify_round is not None:
                st.value, st.parent_port = res
            else:
                st.value = res

    def output(self, ctx, st):
        return st


@dataclass
class ClusterOpResult:
    knowledge: list
    run: SimRun
    views: list[ClusterLocalView]


def _merge_dicts(a: dict, b: dict) -> dict:
    if b.keys() <= a.keys():
        return a
    out = dict(a)
    out.update(b)
    return out


def dist_cluster_op(
    kind: str,
    g: Graph,
    c: Clustering,
    t0: int = 0,
    d: int | None = None,
    values: Sequence | None = None,
    trace: bool = False,
) -> ClusterOpResult:
    """Run one cluster operation in LOCAL from round ``t0``.

    Each vertex starts knowing ``{own id: value}`` (values default to ids) and
    ends with the union of what reached it. ``run.awake_rounds`` lists the
    rounds each vertex was awake.
    """
    views = views_from_clustering(g, c, d)
    d = views[0].d if views else 0
    plans = [merge_plans(op_plan(w, kind, t0, d)) for w in views]
    vals = list(g.ids) if values is None else list(values)
    initial = [{g.ids[v]: vals[v]} for v in range(g.n)]
    prog = ScheduleProgram(plans, [w.center_id for w in views], initial, _merge_dicts)
    sim = run(g, prog, ModelSpec(LOCAL), trace=trace, keep_states=True, log_awake=True)
    return ClusterOpResult([st.know for st in sim.states], sim, views)


# radio versions


class _TdmaProgram(VertexProgram):
    """Wakes on a precomputed slot list; each slot either transmits or listens."""

    def __init__(self, slots, initial, combine, cluster_ids, send_initial=False):
        self.slots = slots
        self.initial = initial
        self.combine = combine
        self.cluster_ids = cluster_ids
        self.send_initial = send_initial

    def init(self, ctx):
        plan = self.slots[ctx.index]
        st = {"value": self.initial[ctx.index], "heard": [], "pos": 0}
        return st, plan[0][0] if plan else HALT

    def send(self, ctx, st, rnd):
        _, action = self.slots[ctx.index][st["pos"]]
        if action == "send":
            value = self.initial[ctx.index] if self.send_initial else st["value"]
            return (self.cluster_ids[ctx.index], value)
        return None

    def on_wake(self, ctx, st, rnd, heard):
        _, action = self.slots[ctx.index][st["pos"]]
        if action != "send" and heard is not None:
            st["heard"].append(heard)
            st["value"] = self.combine(ctx, st["value"], action, heard)
        st["pos"] += 1
        plan = self.slots[ctx.index]
        return st, plan[st["pos"]][0] if st["pos"] < len(plan) else HALT


def _slot_coloring(g: Graph, vertices: Sequence[int]) -> dict[int, int]:
    """Greedy coloring in which vertices within distance two get distinct colors."""
    vs = set(vertices)
    conflict = {v: sorted(u for u in bounded_bfs(g, v, 2) if u in vs and u != v) for v in vertices}
    return greedy_coloring(conflict, key=g.ids.__getitem__)


def radio_cluster_op(
    kind: str,
    g: Graph,
    c: Clustering,
    values: Sequence[int],
    t0: int = 0,
    aggregate: Callable[[int, int], int] = max,
    model: ModelSpec | None = None,
) -> tuple[list[int], SimRun, int]:
    """Collision-free cluster operation in RADIO-CONGEST by time-division slots.

    Transmitters of one tree level are colored so that any two within distance
    two use different slots, hence every intended receiver hears exactly one
    transmitter. DOWNCAST spreads the center's value; UPCAST folds the member
    values with ``aggregate`` up to the center; INTERCAST makes every vertex
    fold the values of neighbors in other clusters. Returns per-vertex values,
    the run and the number of rounds the schedule spans.
    """
    model = model or ModelSpec(RADIO)
    views = views_from_clustering(g, c)
    depth = c.depth_of.tolist()
    parent = c.parent_of.tolist()
    cid = [w.center_id for w in views]
    slots: list[list[tuple[int, str]]] = [[] for _ in range(g.n)]
    t = t0
    if kind in (DOWNCAST, UPCAST):
        levels: dict[int, list[int]] = {}
        for v in range(g.n):
            if kind == DOWNCAST and views[v].child_ports:
                levels.setdefault(depth[v], []).append(v)
            if kind == UPCAST and not views[v].is_center:
                levels.setdefault(depth[v], []).append(v)
        order = sorted(levels, reverse=(kind == UPCAST))
        for lev in order:
            col = _slot_coloring(g, levels[lev])
            width = max(col.values()) + 1
            for u in levels[lev]:
                r = t + col[u]
                slots[u].append((r, "send"))
                if kind == DOWNCAST:
                    for p in views[u].child_ports:
                        slots[g.adj[u][p]].append((r, "down"))
                else:
                    slots[parent[u]].append((r, "up"))
            t += width
    elif kind == INTERCAST:
        col = _slot_coloring(g, range(g.n))
        width = max(col.values()) + 1 if g.n else 0
        for v in range(g.n):
            slots[v].append((t + col[v], "send"))
            for u in g.adj[v]:
                slots[v].append((t + col[u], "inter"))
        t += width
    else:
        raise ValueError(f"unknown cluster operation {kind!r}")
    slots = [sorted(s) for s in slots]

    def combine(ctx, value, action, heard):
        sender_cid, x = heard
        if action == "down":
            return x
        if action == "up":
            return aggregate(value, x)
        return aggregate(value, x) if sender_cid != cid[ctx.index] else value

    prog = _TdmaProgram(slots, [int(x) for x in values], combine, cid, send_initial=(kind == INTERCAST))
    sim = run(g, prog, model, keep_states=True)
    return [st["value"] for st in sim.states], sim, t - t0
