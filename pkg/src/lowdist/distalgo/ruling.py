"""Hierarchy of ruling sets ``S_0 = V ⊇ S_1 ⊇ ...`` computed in CONGEST.

``S_{i+1}`` is the greedy independent subset of ``S_i`` in ``G^{<=2^i}`` taken
in order of a fresh random priority per level, which is what fixed-priority
Luby produces. One Luby iteration floods the smallest undecided key for
``2^i`` rounds (a running minimum, one packet per edge per round) and then the
join signals for ``2^i`` rounds. Each level ends with a BFS wave from the new
centers that gives every vertex its Voronoi cell. Pairwise distances in
``S_i`` exceed ``2^(i-1)`` and every vertex is within ``2^i - 1`` of ``S_i``.
"""
from __future__ import annotations

import bisect
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..clustering import Clustering, voronoi, write_clustering
from ..errors import RulingViolation
from ..graph import Graph, bounded_bfs
from ..simkernel import CONGEST, HALT, LOCAL, ModelSpec, Packet, SimRun, VertexProgram, run
from .._rng import vertex_seed
from .mis import luby_budget

__all__ = ["RulingHierarchy", "level_priority", "sequential_ruling_sets", "check_ruling", "ruling_hierarchy", "write_hierarchy"]

_MIN, _JOIN, _OFFER = 0, 1, 2


def level_priority(private_seed: int, level: int, bits: int) -> int:
    state = np.random.SeedSequence([private_seed, 0x5EED, level]).generate_state(2, np.uint32)
    return (int(state[0]) << 32 | int(state[1])) >> (64 - bits)


def _priority_bits(n: int) -> int:
    return 2 * max(1, math.ceil(math.log2(max(n, 2))))


@dataclass
class RulingHierarchy:
    levels: list[list[int]]
    clusterings: list[Clustering]
    run: SimRun | None = None
    iterations: list[int] = field(default_factory=list)

    @property
    def i_max(self) -> int:
        return len(self.levels) - 1


def sequential_ruling_sets(g: Graph, i_max: int, seed=None) -> list[list[int]]:
    """Greedy-by-priority reference for the ruling-set hierarchy."""
    bits = _priority_bits(g.n)
    ids = g.ids
    pseed = [vertex_seed(seed, ids[v]) for v in range(g.n)]
    levels = [list(range(g.n))]
    for i in range(i_max):
        r = 2**i
        cur = levels[-1]
        order = sorted(cur, key=lambda v: (level_priority(pseed[v], i, bits), ids[v]))
        inside = set(cur)
        blocked = set()
        chosen = []
        for v in order:
            if v in blocked:
                continue
            chosen.append(v)
            blocked.update(u for u in bounded_bfs(g, v, r) if u in inside)
        levels.append(sorted(chosen))
    return levels


def check_ruling(g: Graph, levels: Sequence[Sequence[int]]) -> None:
    """Raise ``RulingViolation`` unless each ``S_i`` is ``2^(i-1)``-separated, ``(2^i - 1)``-covering and nested."""
    for i, S in enumerate(levels):
        members = set(S)
        if i and not members <= set(levels[i - 1]):
            raise RulingViolation(f"level {i} is not a subset of level {i - 1}")
        if not members:
            raise RulingViolation(f"level {i} is empty")
        if i >= 1:
            sep = 2 ** (i - 1)
            for s in S:
                close = [u for u in bounded_bfs(g, s, sep) if u in members and u != s]
                if close:
                    raise RulingViolation(f"level {i}: vertices {s} and {close[0]} within distance {sep}")
        cover = 2**i - 1
        dist = _multi_source_distances(g, S)
        if max(dist) > cover:
            raise RulingViolation(f"level {i}: a vertex is {max(dist)} away from the set, bound {cover}")


def _multi_source_distances(g: Graph, S: Sequence[int]) -> list[int]:
    dist = [-1] * g.n
    frontier = list(S)
    for s in frontier:
        dist[s] = 0
    d = 0
    while frontier:
        d += 1
        nxt = []
        for x in frontier:
            for y in g.adj[x]:
                if dist[y] < 0:
                    dist[y] = d
                    nxt.append(y)
        frontier = nxt
    return dist


class _RulingProgram(VertexProgram):
    def __init__(self, n: int, i_max: int, iterations: int, id_bits: int):
        self.i_max = i_max
        self.iterations = iterations
        self.pb = _priority_bits(n)
        self.idb = id_bits
        self.starts, self.waves, self.ends = [], [], []
        t = 0
        for i in range(i_max):
            r = 2**i
            self.starts.append(t)
            t += 2 * r * iterations
            self.waves.append(t)
            t += 2 ** (i + 1) + 1
            self.ends.append(t)

    def _level(self, rnd: int) -> int:
        return bisect.bisect_right(self.starts, rnd) - 1

    def init(self, ctx):
        st = {
            "in": True,
            "status": "U",
            "best": None,
            "flag": False,
            "claim": None,
            "sent": False,
            "sets": [True],
            "cells": [],
        }
        if self.i_max == 0:
            return st, HALT
        self._begin_level(ctx, st, 0)
        return st, 0

    def _begin_level(self, ctx, st, i):
        st["status"] = "U" if st["in"] else "-"
        st["key"] = (level_priority(ctx.seed, i, self.pb), ctx.id) if st["in"] else None
        st["best"] = st["key"]
        st["flag"] = False
        st["claim"] = None
        st["sent"] = False

    def send(self, ctx, st, rnd):
        i = self._level(rnd)
        if rnd >= self.waves[i]:
            if st["claim"] is not None and not st["sent"]:
                cid, depth, _ = st["claim"]
                pkt = Packet((_OFFER, cid, ctx.id, depth + 1), (2, self.idb, self.idb, self.idb))
                return {p: pkt for p in ctx.ports}
            return None
        r = 2**i
        offset = (rnd - self.starts[i]) % (2 * r)
        if offset < r:
            if st["best"] is None:
                return None
            pkt = Packet((_MIN, *st["best"]), (2, self.pb, self.idb))
            return {p: pkt for p in ctx.ports}
        return {p: Packet((_JOIN,), (2,)) for p in ctx.ports} if st["flag"] else None

    def on_wake(self, ctx, st, rnd, inbox):
        i = self._level(rnd)
        if rnd >= self.waves[i]:
            return self._wave(ctx, st, rnd, inbox, i)
        r = 2**i
        offset = (rnd - self.starts[i]) % (2 * r)
        if offset < r:
            for pkt in inbox.values():
                key = (pkt[1], pkt[2])
                if st["best"] is None or key < st["best"]:
                    st["best"] = key
            if offset == r - 1:
                if st["best"] is None:
                    return self._to_wave(ctx, st, i)
                if st["status"] == "U" and st["best"] == st["key"]:
                    st["status"] = "IN"
                    st["flag"] = True
                else:
                    st["flag"] = False
        else:
            if inbox:
                st["flag"] = True
            if offset == 2 * r - 1:
                if st["status"] == "U" and st["flag"]:
                    st["status"] = "OUT"
                st["flag"] = False
                st["best"] = st["key"] if st["status"] == "U" else None
        if rnd + 1 >= self.waves[i]:
            return self._to_wave(ctx, st, i)
        return st, rnd + 1

    def _to_wave(self, ctx, st, i):
        if st["status"] == "U":
            raise RulingViolation(f"level {i + 1}: vertex {ctx.id} undecided after {self.iterations} iterations")
        return st, self.waves[i]

    def _wave(self, ctx, st, rnd, inbox, i):
        if st["claim"] is not None:
            st["sent"] = True
            return self._next_level(ctx, st, i)
        offers = [(pkt[1], pkt[2], pkt[3], port) for port, pkt in inbox.items()]
        if st["status"] == "IN" and rnd == self.waves[i]:
            offers.append((ctx.id, ctx.id, 0, None))
        if offers:
            cid, _, depth, port = min(offers)
            st["claim"] = (cid, depth, port)
        if rnd + 1 >= self.ends[i]:
            raise RulingViolation(f"level {i + 1}: vertex {ctx.id} not reached by the Voronoi wave")
        return st, rnd + 1

    def _next_level(self, ctx, st, i):
        st["in"] = st["status"] == "IN"
        st["sets"].append(st["in"])
        st["cells"].append(st["claim"])
        if i + 1 >= self.i_max:
            return st, HALT
        self._begin_level(ctx, st, i + 1)
        return st, self.starts[i + 1]


def ruling_hierarchy(
    g: Graph,
    i_max: int,
    model: str | ModelSpec = CONGEST,
    seed=None,
    iterations: int | None = None,
    verify: bool = True,
) -> RulingHierarchy:
    """Simulate the hierarchy up to level ``i_max`` and verify it.

    The result must equal :func:`sequential_ruling_sets` with the same seed,
    satisfy the ruling-set bounds, and its per-level cells must equal the
    sequential Voronoi clustering; otherwise ``RulingViolation`` is raised.
    """
    if i_max < 1:
        raise ValueError("i_max must be at least 1")
    spec = model if isinstance(model, ModelSpec) else ModelSpec(model)
    if spec.kind not in (LOCAL, CONGEST):
        raise ValueError("the ruling hierarchy runs in LOCAL or CONGEST")
    iterations = luby_budget(g.n) if iterations is None else iterations
    id_bits = max(1, max(g.ids).bit_length())
    prog = _RulingProgram(g.n, i_max, iterations, id_bits)
    sim = run(g, prog, spec, seed=seed, keep_states=True)
    index = {vid: v for v, vid in enumerate(g.ids)}
    levels = []
    for i in range(i_max + 1):
        levels.append(sorted(v for v, st in enumerate(sim.states) if st["sets"][i]))
    clusterings = [Clustering(1, range(g.n), np.zeros(g.n, dtype=np.int64), range(g.n))]
    for i in range(i_max):
        cen, dep, par = [], [], []
        for v, st in enumerate(sim.states):
            cid, depth, port = st["cells"][i]
            cen.append(index[cid])
            dep.append(depth)
            par.append(v if port is None else g.adj[v][port])
        clusterings.append(Clustering(2 ** (i + 1), cen, dep, par))
    sim.states = None
    if verify:
        ref = sequential_ruling_sets(g, i_max, seed)
        if ref != levels:
            first = next(i for i in range(len(ref)) if ref[i] != levels[i])
            raise RulingViolation(f"level {first} differs from the sequential greedy reference")
        check_ruling(g, levels)
        for i in range(1, i_max + 1):
            if clusterings[i] != voronoi(g, levels[i], clusterings[i].scale):
                raise RulingViolation(f"level {i} cells differ from the sequential Voronoi clustering")
    return RulingHierarchy(levels, clusterings, sim, [iterations] * i_max)


def write_hierarchy(h: RulingHierarchy, dest) -> None:
    """Concatenated clustering files, one per level, each with a ``level`` column."""
    buf = io.StringIO()
    for i, c in enumerate(h.clusterings):
        write_clustering(c, buf, {"level": [i] * c.n})
    text = buf.getvalue()
    if isinstance(dest, str):
        with open(dest, "w") as fh:
            fh.write(text)
    else:
        dest.write(text)
