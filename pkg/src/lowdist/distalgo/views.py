"""What a vertex knows about its cluster, and knowledge-checked local views."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..clustering import Clustering
from ..errors import InconsistentTreeView, InsufficientView
from ..graph import Graph, bounded_bfs

__all__ = ["ClusterLocalView", "views_from_clustering", "clustering_from_views", "BallMasks", "LocalView"]


@dataclass(frozen=True)
class ClusterLocalView:
    center_id: int
    depth: int
    parent_port: int | None
    child_ports: tuple[int, ...]
    d: int

    @property
    def is_center(self) -> bool:
        return self.parent_port is None

    @property
    def is_leaf(self) -> bool:
        return not self.child_ports


def views_from_clustering(g: Graph, c: Clustering, d: int | None = None) -> list[ClusterLocalView]:
    """Per-vertex tree views of a clustering; ``d`` defaults to the largest depth."""
    depth = c.depth_of.tolist()
    center = c.center_of.tolist()
    parent = c.parent_of.tolist()
    if d is None:
        d = max(depth) if depth else 0
    children: list[list[int]] = [[] for _ in range(g.n)]
    parent_port: list[int | None] = [None] * g.n
    for v in range(g.n):
        if depth[v] > d:
            raise InconsistentTreeView(f"vertex {v} has depth {depth[v]} beyond the bound {d}")
        p = parent[v]
        if center[v] == v:
            if depth[v] != 0 or p != v:
                raise InconsistentTreeView(f"center {v} must be its own parent at depth 0")
            continue
        if p == v or center[p] != center[v] or depth[p] != depth[v] - 1:
            raise InconsistentTreeView(f"vertex {v}: parent {p} is not one level closer in the same cluster")
        try:
            port = g.adj[v].index(p)
        except ValueError:
            raise InconsistentTreeView(f"vertex {v}: parent {p} is not a neighbor") from None
        parent_port[v] = port
        children[p].append(g.adj[p].index(v))
    ids = g.ids
    return [
        ClusterLocalView(ids[center[v]], depth[v], parent_port[v], tuple(sorted(children[v])), int(d))
        for v in range(g.n)
    ]


def clustering_from_views(g: Graph, views: Sequence[ClusterLocalView], scale) -> Clustering:
    index = {vid: v for v, vid in enumerate(g.ids)}
    center = [index[w.center_id] for w in views]
    depth = [w.depth for w in views]
    parent = [v if w.parent_port is None else g.adj[v][w.parent_port] for v, w in enumerate(views)]
    return Clustering(scale, center, depth, parent)


class BallMasks:
    """Cached bitmasks of hop balls; bit ``u`` stands for the record of vertex ``u``."""

    def __init__(self, g: Graph):
        self.g = g
        self._cache: dict[tuple[int, int], int] = {}
        self._dist: dict[tuple[int, int], dict[int, int]] = {}

    def distances(self, v: int, r: int) -> dict[int, int]:
        key = (v, r)
        got = self._dist.get(key)
        if got is None:
            got = self._dist[key] = bounded_bfs(self.g, v, r)
        return got

    def mask(self, v: int, r: int) -> int:
        key = (v, r)
        got = self._cache.get(key)
        if got is None:
            got = 0
            for u in self.distances(v, r):
                got |= 1 << u
            self._cache[key] = got
        return got


class LocalView:
    """Guards local computation with the set of records a vertex actually holds.

    With ``known=None`` nothing is checked and the union of requested records
    is accumulated in ``needed``; that mode sizes the gathering phase.
    """

    __slots__ = ("known", "needed")

    def __init__(self, known: int | None):
        self.known = known
        self.needed = 0

    def require(self, mask: int) -> None:
        if self.known is None:
            self.needed |= mask
        elif mask & ~self.known:
            missing = (mask & ~self.known).bit_length() - 1
            raise InsufficientView(f"record of vertex {missing} was not gathered")
