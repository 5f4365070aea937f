"""Exact maximum independent set by branch and bound over bitsets.

Shared by the independence estimator in :mod:`lowdist.graph` and the exact
solvers in :mod:`lowdist.optimize`.
"""
from __future__ import annotations

from typing import Iterable, Mapping


def _clique_classes(cand: int, nbr: list[int]) -> tuple[list[int], list[int]]:
    # Greedy partition of the candidates into cliques of the graph. Returns
    # the vertices class by class with their 1-based class numbers; a vertex in
    # class k and everything before it admit no independent set above k.
    order, bounds = [], []
    rest = cand
    k = 0
    while rest:
        k += 1
        pool = rest
        while pool:
            lb = pool & -pool
            v = lb.bit_length() - 1
            order.append(v)
            bounds.append(k)
            rest ^= lb
            pool &= nbr[v] & rest
    return order, bounds


def max_independent_set(adj: Mapping[int, Iterable[int]]) -> set[int]:
    """Return a maximum independent set of the graph given as an adjacency map.

    Branch and bound in the style of coloring-bounded maximum clique search
    run on the complement: candidates are split into cliques, and a branch is
    cut when the chosen size plus the clique count left cannot beat the best.
    """
    verts = sorted(adj, key=lambda v: (len(adj[v]), v))
    index = {v: i for i, v in enumerate(verts)}
    k = len(verts)
    nbr = [0] * k
    for v in verts:
        i = index[v]
        for u in adj[v]:
            if u != v:
                nbr[i] |= 1 << index[u]
    best_size, best_mask = 0, 0

    def expand(cand: int, size: int, chosen: int) -> None:
        nonlocal best_size, best_mask
        order, bounds = _clique_classes(cand, nbr)
        for i in range(len(order) - 1, -1, -1):
            if size + bounds[i] <= best_size:
                return
            v = order[i]
            bit = 1 << v
            rest = cand & ~nbr[v] & ~bit
            if rest:
                expand(rest, size + 1, chosen | bit)
            elif size + 1 > best_size:
                best_size, best_mask = size + 1, chosen | bit
            cand &= ~bit

    if k:
        expand((1 << k) - 1, 0, 0)
    return {verts[i] for i in range(k) if best_mask >> i & 1}


def greedy_independent_set(adj: Mapping[int, Iterable[int]]) -> set[int]:
    """Minimum-degree greedy independent set (a lower bound)."""
    live = {v: set(u for u in adj[v] if u != v) for v in adj}
    out = set()
    while live:
        v = min(live, key=lambda x: (len(live[x]), x))
        out.add(v)
        gone = live[v] | {v}
        for u in gone:
            for w in live.pop(u, ()):
                if w in live:
                    live[w].discard(u)
    return out
