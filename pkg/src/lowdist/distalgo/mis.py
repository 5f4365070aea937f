"""Distributed MIS-Voronoi clustering: Luby on the power graph, then shifted BFS."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .._rng import vertex_seed
from ..clustering import Clustering, max_shift, mis_power_graph, weighted_voronoi
from ..errors import LowDistError
from ..graph import Graph
from ..simkernel import HALT, LOCAL, ModelSpec, SimRun, VertexProgram, run

__all__ = ["DistVoronoiResult", "dist_mis_voronoi", "private_shifts", "luby_budget"]

_SHIFT_STREAM = 0x5417


def _draw_shift(private_seed: int, wmax: int) -> int:
    return int(np.random.default_rng([private_seed, _SHIFT_STREAM]).integers(0, wmax + 1))


def private_shifts(g: Graph, centers: Sequence[int], R: int, seed=None) -> dict[int, int]:
    """The shifts centers draw from their private seeds in :func:`dist_mis_voronoi`."""
    wmax = max_shift(R)
    return {s: _draw_shift(vertex_seed(seed, g.ids[s]), wmax) for s in centers}


def luby_budget(n: int) -> int:
    """Number of Luby iterations scheduled before recruitment starts."""
    return 4 * math.ceil(math.log2(n + 1)) + 4


class _VoronoiProgram(VertexProgram):
    """Phase one: fixed-priority Luby on ``G^{<=R}``; each iteration floods the
    smallest undecided key for ``R`` rounds and then the join signals for ``R``
    rounds. A vertex with no undecided vertex within ``R`` sleeps until
    recruitment. Phase two, from round ``T0``: a center starts its BFS wave at
    ``T0 + wmax - W``; an unclaimed vertex takes the smallest ``(center id,
    parent id)`` among the offers that reach it first.
    """

    def __init__(self, R: int, iterations: int, wmax: int, fixed_centers: set[int] | None):
        self.R = R
        self.iterations = iterations
        self.wmax = wmax
        self.fixed = fixed_centers
        self.T0 = 0 if fixed_centers is not None else 2 * R * iterations

    def init(self, ctx):
        st = {
            "status": "U",
            "best": None,
            "flag": False,
            "claim": None,
            "start": None,
            "sent": False,
        }
        if self.fixed is not None:
            st["status"] = "IN" if ctx.id in self.fixed else "OUT"
            return self._enter_phase_two(ctx, st), self.T0
        st["key"] = (ctx.priority, ctx.id)
        st["best"] = st["key"]
        return st, 0

    def _enter_phase_two(self, ctx, st):
        if st["status"] == "IN":
            st["start"] = self.T0 + self.wmax - _draw_shift(ctx.seed, self.wmax)
        return st

    def send(self, ctx, st, rnd):
        if rnd >= self.T0:
            if st["claim"] is not None and not st["sent"]:
                cid, depth, _ = st["claim"]
                return {p: (cid, ctx.id, depth + 1) for p in ctx.ports}
            return None
        offset = rnd % (2 * self.R)
        if offset < self.R:
            return {p: st["best"] for p in ctx.ports} if st["best"] is not None else None
        return {p: True for p in ctx.ports} if st["flag"] else None

    def on_wake(self, ctx, st, rnd, inbox):
        if rnd >= self.T0:
            return self._recruit(ctx, st, rnd, inbox)
        R = self.R
        offset = rnd % (2 * R)
        if offset < R:
            for key in inbox.values():
                if st["best"] is None or key < st["best"]:
                    st["best"] = key
            if offset == R - 1:
                if st["best"] is None:
                    return self._to_phase_two(ctx, st)
                if st["status"] == "U" and st["best"] == st["key"]:
                    st["status"] = "IN"
                    st["flag"] = True
                else:
                    st["flag"] = False
        else:
            if inbox:
                st["flag"] = True
            if offset == 2 * R - 1:
                if st["status"] == "U" and st["flag"]:
                    st["status"] = "OUT"
                st["flag"] = False
                st["best"] = st["key"] if st["status"] == "U" else None
        if rnd + 1 >= self.T0:
            return self._to_phase_two(ctx, st)
        return st, rnd + 1

    def _to_phase_two(self, ctx, st):
        if st["status"] == "U":
            raise LowDistError(f"vertex {ctx.id} undecided after {self.iterations} Luby iterations")
        self._enter_phase_two(ctx, st)
        return st, self.T0

    def _recruit(self, ctx, st, rnd, inbox):
        if st["claim"] is not None:
            st["sent"] = True
            return st, HALT
        offers = [(cid, pid, depth, port) for port, (cid, pid, depth) in inbox.items()]
        if st["start"] == rnd:
            offers.append((ctx.id, ctx.id, 0, None))
        if offers:
            cid, pid, depth, port = min(offers)
            st["claim"] = (cid, depth, port)
            return st, rnd + 1
        return st, rnd + 1


@dataclass
class DistVoronoiResult:
    clustering: Clustering
    run: SimRun
    centers: list[int]
    shifts: dict[int, int]


def dist_mis_voronoi(
    g: Graph,
    R: int,
    variant: str = "zero",
    seed=None,
    centers: str | Sequence[int] = "luby",
    iterations: int | None = None,
    trace: bool = False,
) -> DistVoronoiResult:
    """Simulated MIS-Voronoi clustering in LOCAL.

    ``centers='luby'`` elects centers by fixed-priority Luby with priorities
    from the vertices' private seeds; ``'greedy-id'`` or an explicit list hands
    the centers to the vertices instead. With ``variant='uniform'`` every
    center draws its shift privately. The clustering equals
    ``weighted_voronoi(g, centers, shifts, R)``.
    """
    R = int(R)
    if R < 1:
        raise ValueError("R must be at least 1")
    if variant not in ("zero", "uniform"):
        raise ValueError(f"unknown start-time variant {variant!r}")
    wmax = max_shift(R) if variant == "uniform" else 0
    if isinstance(centers, str):
        if centers == "luby":
            fixed = None
        elif centers == "greedy-id":
            fixed = set(g.ids[s] for s in mis_power_graph(g, R, "greedy-id"))
        else:
            raise ValueError(f"unknown center mode {centers!r}")
    else:
        fixed = set(g.ids[s] for s in centers)
    iterations = luby_budget(g.n) if iterations is None else iterations
    prog = _VoronoiProgram(R, iterations, wmax, fixed)
    sim = run(g, prog, ModelSpec(LOCAL), seed=seed, keep_states=True, trace=trace)
    index = {vid: v for v, vid in enumerate(g.ids)}
    cen, dep, par = [], [], []
    for v, st in enumerate(sim.states):
        cid, depth, port = st["claim"]
        cen.append(index[cid])
        dep.append(depth)
        par.append(v if port is None else g.adj[v][port])
    S = sorted(v for v, st in enumerate(sim.states) if st["status"] == "IN")
    shifts = {s: _draw_shift(vertex_seed(seed, g.ids[s]), wmax) for s in S} if wmax else {s: 0 for s in S}
    sim.states = None
    return DistVoronoiResult(Clustering(R, cen, dep, par), sim, S, shifts)
