"""Maximum cardinality matching in general graphs by Edmonds' blossom algorithm.

Each phase grows an alternating BFS forest from one free vertex. An edge that
closes an odd cycle between two even vertices contracts the cycle into its
base (tracked through ``base``); reaching a free odd vertex yields an
augmenting path, which is flipped along the parent pointers.
"""
from __future__ import annotations

from collections import deque
from typing import Sequence


def max_matching(adj: Sequence[Sequence[int]]) -> list[int]:
    """Return ``mate`` with ``mate[v]`` the partner of ``v`` or ``-1``."""
    n = len(adj)
    mate = [-1] * n
    for v in range(n):
        if mate[v] < 0:
            for u in adj[v]:
                if mate[u] < 0:
                    mate[u], mate[v] = v, u
                    break

    def lca(a: int, b: int, base: list[int], parent: list[int]) -> int:
        seen = [False] * n
        while True:
            a = base[a]
            seen[a] = True
            if mate[a] < 0:
                break
            a = parent[mate[a]]
        while True:
            b = base[b]
            if seen[b]:
                return b
            b = parent[mate[b]]

    def mark(v: int, b: int, child: int, base, parent, blossom) -> None:
        while base[v] != b:
            blossom[base[v]] = blossom[base[mate[v]]] = True
            parent[v] = child
            child = mate[v]
            v = parent[mate[v]]

    def find_path(root: int) -> tuple[int, list[int]]:
        used = [False] * n
        parent = [-1] * n
        base = list(range(n))
        used[root] = True
        q = deque([root])
        while q:
            v = q.popleft()
            for to in adj[v]:
                if base[v] == base[to] or mate[v] == to:
                    continue
                if to == root or (mate[to] >= 0 and parent[mate[to]] >= 0):
                    b = lca(v, to, base, parent)
                    blossom = [False] * n
                    mark(v, b, to, base, parent, blossom)
                    mark(to, b, v, base, parent, blossom)
                    for i in range(n):
                        if blossom[base[i]]:
                            base[i] = b
                            if not used[i]:
                                used[i] = True
                                q.append(i)
                elif parent[to] < 0:
                    parent[to] = v
                    if mate[to] < 0:
                        return to, parent
                    used[mate[to]] = True
                    q.append(mate[to])
        return -1, parent

    for root in range(n):
        if mate[root] >= 0:
            continue
        end, parent = find_path(root)
        while end >= 0:
            pv = parent[end]
            nxt = mate[pv]
            mate[end], mate[pv] = pv, end
            end = nxt
    return mate
