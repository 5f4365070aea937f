"""Graph representation, hop-distance machinery, power graphs and generators."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence, TextIO

import numpy as np
from scipy import sparse
from scipy.spatial import ConvexHull, cKDTree

from ._mis import greedy_independent_set, max_independent_set
from .errors import (
    CouldNotConnect,
    DisconnectedGraph,
    GenerationFailure,
    MissingCoordinates,
)

__all__ = [
    "Graph",
    "BoundedIndependenceProfile",
    "IndependenceEstimate",
    "PowerView",
    "bfs_distances",
    "bounded_bfs",
    "ball",
    "power_graph",
    "gen_cycle",
    "gen_path",
    "gen_grid",
    "gen_comb",
    "gen_random_geometric",
    "gen_random_regular",
    "girth",
    "check_density",
    "estimate_independence",
    "log_star",
    "read_edgelist",
    "write_edgelist",
]


class Graph:
    """Immutable undirected simple graph on vertices ``0..n-1``.

    Adjacency lists are sorted tuples. ``ids`` are the identifiers used for
    every tie-break; they default to the vertex indices. ``coords`` is an
    optional ``(n, k)`` array for geometric graphs.
    """

    __slots__ = ("n", "adj", "ids", "coords", "_cache")

    def __init__(
        self,
        n: int,
        adjacency: Sequence[Iterable[int]],
        ids: Sequence[int] | None = None,
        coords=None,
        check_connected: bool = True,
    ):
        if n < 1:
            raise ValueError("a graph needs at least one vertex")
        if len(adjacency) != n:
            raise ValueError("adjacency length differs from n")
        adj = tuple(tuple(sorted(set(a))) for a in adjacency)
        for v, nb in enumerate(adj):
            for u in nb:
                if u == v:
                    raise ValueError(f"self-loop at {v}")
                if not 0 <= u < n:
                    raise ValueError(f"neighbor {u} of {v} out of range")
        for v, nb in enumerate(adj):
            for u in nb:
                # binary search would do; lists are short in practice
                if v not in adj[u]:
                    raise ValueError(f"asymmetric adjacency between {v} and {u}")
        self.n = n
        self.adj = adj
        if ids is None:
            self.ids = tuple(range(n))
        else:
            ids = tuple(int(i) for i in ids)
            if len(ids) != n or len(set(ids)) != n:
                raise ValueError("ids must be n distinct integers")
            self.ids = ids
        if coords is not None:
            coords = np.asarray(coords, dtype=float)
            if coords.ndim == 1:
                coords = coords[:, None]
            if coords.shape[0] != n:
                raise ValueError("coords must have one row per vertex")
            coords.setflags(write=False)
        self.coords = coords
        self._cache = {}
        if check_connected and not self.is_connected():
            raise DisconnectedGraph("graph is not connected")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], **kw) -> "Graph":
        adj: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at {u}")
            adj[u].add(v)
            adj[v].add(u)
        return cls(n, adj, **kw)

    # basic quantities

    @property
    def m(self) -> int:
        return sum(len(a) for a in self.adj) // 2

    @property
    def max_degree(self) -> int:
        return max(len(a) for a in self.adj)

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adj[v]

    def edges(self) -> list[tuple[int, int]]:
        """Edges ``(u, v)`` with ``u < v`` in lexicographic order."""
        if "edges" not in self._cache:
            self._cache["edges"] = [(u, v) for u in range(self.n) for v in self.adj[u] if u < v]
        return self._cache["edges"]

    def edge_array(self) -> np.ndarray:
        if "edge_array" not in self._cache:
            e = self.edges()
            arr = np.array(e, dtype=np.int64).reshape(len(e), 2)
            arr.setflags(write=False)
            self._cache["edge_array"] = arr
        return self._cache["edge_array"]

    def csr(self) -> sparse.csr_matrix:
        """Symmetric 0/1 adjacency matrix (cached)."""
        if "csr" not in self._cache:
            indptr = np.zeros(self.n + 1, dtype=np.int64)
            indptr[1:] = np.cumsum([len(a) for a in self.adj])
            indices = np.fromiter((u for a in self.adj for u in a), dtype=np.int64, count=int(indptr[-1]))
            data = np.ones(len(indices), dtype=np.int8)
            self._cache["csr"] = sparse.csr_matrix((data, indices, indptr), shape=(self.n, self.n))
        return self._cache["csr"]

    def reverse_ports(self) -> tuple[tuple[int, ...], ...]:
        """``rev[v][i]`` is the port under which ``v`` appears at its ``i``-th neighbor."""
        if "rev" not in self._cache:
            pos = [{u: i for i, u in enumerate(a)} for a in self.adj]
            self._cache["rev"] = tuple(tuple(pos[u][v] for u in self.adj[v]) for v in range(self.n))
        return self._cache["rev"]

    def is_connected(self) -> bool:
        seen = bytearray(self.n)
        seen[0] = 1
        stack = [0]
        count = 1
        adj = self.adj
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if not seen[y]:
                    seen[y] = 1
                    count += 1
                    stack.append(y)
        return count == self.n

    def diameter(self) -> int:
        if "diameter" not in self._cache:
            self._cache["diameter"] = max(max(bfs_distances(self, v)) for v in range(self.n))
        return self._cache["diameter"]

    def subgraph(self, vertices: Iterable[int], check_connected: bool = True) -> tuple["Graph", list[int]]:
        """Induced subgraph; returns it with the list mapping new index to old index."""
        verts = sorted(set(vertices))
        where = {v: i for i, v in enumerate(verts)}
        adj = [[where[u] for u in self.adj[v] if u in where] for v in verts]
        coords = None if self.coords is None else self.coords[verts]
        sub = Graph(len(verts), adj, ids=[self.ids[v] for v in verts], coords=coords, check_connected=check_connected)
        return sub, verts

    def is_cycle(self) -> bool:
        return self.n >= 3 and all(len(a) == 2 for a in self.adj)

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        if self.n != other.n or self.adj != other.adj or self.ids != other.ids:
            return False
        if (self.coords is None) != (other.coords is None):
            return False
        return self.coords is None or np.array_equal(self.coords, other.coords)

    def __hash__(self) -> int:
        return hash((self.n, self.adj))


@dataclass(frozen=True)
class BoundedIndependenceProfile:
    """Constants of a bounded-independence or bounded-growth family."""

    gamma: float
    k: float
    mode: str = "independence"
    alpha: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.mode not in ("independence", "growth", "strong-growth"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.gamma <= 0 or self.k <= 0:
            raise ValueError("gamma and k must be positive")
        if self.beta is not None and self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.mode == "strong-growth" and (self.alpha is None or self.alpha <= 0):
            raise ValueError("strong growth needs alpha > 0")


# distances


def bfs_distances(g: Graph, source: int) -> list[int]:
    """Hop distance from ``source`` to every vertex, indexed by vertex."""
    if not 0 <= source < g.n:
        raise IndexError(f"source {source} out of range")
    dist = [-1] * g.n
    dist[source] = 0
    q = deque([source])
    adj = g.adj
    while q:
        x = q.popleft()
        dx = dist[x] + 1
        for y in adj[x]:
            if dist[y] < 0:
                dist[y] = dx
                q.append(y)
    if -1 in dist:
        raise DisconnectedGraph(f"some vertex is unreachable from {source}")
    return dist


def bounded_bfs(g: Graph, source: int, radius: int) -> dict[int, int]:
    """Distances to all vertices within ``radius`` of ``source``."""
    dist = {source: 0}
    frontier = [source]
    adj = g.adj
    for d in range(1, radius + 1):
        nxt = []
        for x in frontier:
            for y in adj[x]:
                if y not in dist:
                    dist[y] = d
                    nxt.append(y)
        if not nxt:
            break
        frontier = nxt
    return dist


def ball(g: Graph, v: int, r: int) -> set[int]:
    if r < 0:
        raise ValueError("radius must be nonnegative")
    return set(bounded_bfs(g, v, r))


class PowerView:
    """Implicit view of the power graph backed by bounded BFS.

    ``neighbors(v)`` lists every ``u != v`` with ``d(u, v) <= R``. Results are
    cached while the total cached size stays under ``budget`` entries.
    """

    def __init__(self, g: Graph, R: int, budget: int = 20_000_000):
        if R < 1:
            raise ValueError("R must be at least 1")
        self.g = g
        self.R = R
        self.budget = budget
        self._cached = 0
        self._nbrs: dict[int, tuple[int, ...]] = {}

    @property
    def n(self) -> int:
        return self.g.n

    def neighbors(self, v: int) -> tuple[int, ...]:
        hit = self._nbrs.get(v)
        if hit is not None:
            return hit
        nb = tuple(sorted(u for u in bounded_bfs(self.g, v, self.R) if u != v))
        if self._cached + len(nb) <= self.budget:
            self._nbrs[v] = nb
            self._cached += len(nb)
        return nb


def power_graph(g: Graph, R: int) -> Graph:
    """Materialized graph with an edge between every pair at distance ``1..R``."""
    view = PowerView(g, R, budget=0)
    return Graph(g.n, [view.neighbors(v) for v in range(g.n)], ids=g.ids, coords=g.coords)


# generators


def gen_path(n: int) -> Graph:
    if n < 1:
        raise ValueError("a path needs at least one vertex")
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)], coords=np.arange(n, dtype=float)[:, None])


def gen_cycle(n: int) -> Graph:
    if n < 3:
        raise ValueError("a cycle needs at least three vertices")
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def gen_grid(dims: Sequence[int], torus: bool = False) -> Graph:
    """Grid graph with row-major vertex numbering (last coordinate fastest).

    On a torus, a side of length 2 wraps onto the edge that already exists and
    a side of length 1 would wrap onto itself; both are dropped, so the result
    stays simple (the ``2 x 2 x 2`` torus is the 3-cube).
    """
    dims = [int(d) for d in dims]
    if not dims or any(d < 1 for d in dims):
        raise ValueError("every dimension must be at least 1")
    n = int(np.prod(dims))
    strides = [int(np.prod(dims[i + 1:])) for i in range(len(dims))]
    grid = np.indices(dims).reshape(len(dims), -1).T
    edges = set()
    for v, pos in enumerate(grid):
        for axis, side in enumerate(dims):
            p = pos[axis]
            if p + 1 < side:
                u = v + strides[axis]
            elif torus and side > 2:
                u = v - p * strides[axis]
            else:
                continue
            edges.add((min(u, v), max(u, v)))
    coords = None if torus else grid.astype(float)
    return Graph.from_edges(n, sorted(edges), coords=coords)


def gen_comb(rows: int, cols: int) -> Graph:
    """Comb: a spine path of ``cols`` vertices with a tooth path of ``rows``
    vertices hanging off every spine vertex.

    Spine vertices are ``0..cols-1``; tooth ``i`` holds vertices
    ``cols + i*rows .. cols + (i+1)*rows - 1`` ordered away from the spine.
    Coordinates realize the comb as a unit disk graph: the spine has spacing
    0.55 and consecutive teeth point in opposite directions, so tooth vertices
    of neighboring columns never come within distance 1.
    """
    if rows < 0 or cols < 1:
        raise ValueError("need rows >= 0 and cols >= 1")
    n = cols + rows * cols
    edges = [(i, i + 1) for i in range(cols - 1)]
    coords = np.zeros((n, 2))
    coords[:cols, 0] = 0.55 * np.arange(cols)
    for i in range(cols):
        side = 1.0 if i % 2 == 0 else -1.0
        prev = i
        for j in range(rows):
            v = cols + i * rows + j
            edges.append((prev, v))
            coords[v] = (0.55 * i, side * (j + 1))
            prev = v
    return Graph.from_edges(n, edges, coords=coords)


def gen_random_geometric(n: int, k_geo: int, radius: float, seed=None, max_retries: int = 100) -> Graph:
    """Random geometric graph: ``n`` uniform points in the cube of volume ``n``.

    Points are rescaled by ``1/radius`` so the stored coordinates use edge
    threshold 1. Sampling repeats from the same generator until the graph is
    connected, at most ``max_retries`` times.
    """
    if n < 1 or radius <= 0 or k_geo < 1:
        raise ValueError("need n >= 1, k_geo >= 1 and radius > 0")
    rng = np.random.default_rng(seed)
    side = n ** (1.0 / k_geo)
    for _ in range(max_retries):
        pts = rng.random((n, k_geo)) * side / radius
        pairs = cKDTree(pts).query_pairs(1.0, output_type="ndarray")
        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in pairs:
            adj[u].append(int(v))
            adj[v].append(int(u))
        try:
            return Graph(n, adj, coords=pts)
        except DisconnectedGraph:
            continue
    raise CouldNotConnect(f"no connected sample in {max_retries} attempts")


def gen_random_regular(n: int, d: int, seed=None, max_retries: int = 1000) -> Graph:
    """Uniform simple ``d``-regular graph by the pairing model with rejection.

    A sample is rejected if it has a loop, a repeated pair, or is disconnected.
    """
    if d < 3 or n <= d or (n * d) % 2:
        raise ValueError("need d >= 3, n > d and n*d even")
    rng = np.random.default_rng(seed)
    points = np.repeat(np.arange(n), d)
    for _ in range(max_retries):
        perm = rng.permutation(points).reshape(-1, 2)
        if np.any(perm[:, 0] == perm[:, 1]):
            continue
        lo = np.minimum(perm[:, 0], perm[:, 1])
        hi = np.maximum(perm[:, 0], perm[:, 1])
        keys = lo * n + hi
        if len(np.unique(keys)) != len(keys):
            continue
        try:
            return Graph.from_edges(n, zip(lo.tolist(), hi.tolist()))
        except DisconnectedGraph:
            continue
    raise GenerationFailure(f"no simple connected sample in {max_retries} attempts")


def girth(g: Graph) -> int | None:
    """Length of a shortest cycle, or ``None`` for a tree."""
    best = math.inf
    adj = g.adj
    for root in range(g.n):
        dist = {root: 0}
        parent = {root: -1}
        q = deque([root])
        while q:
            x = q.popleft()
            if 2 * dist[x] + 1 >= best:
                break
            for y in adj[x]:
                if y not in dist:
                    dist[y] = dist[x] + 1
                    parent[y] = x
                    q.append(y)
                elif y != parent[x]:
                    best = min(best, dist[x] + dist[y] + 1)
    return None if best == math.inf else int(best)


# density and independence


def check_density(g: Graph, alpha: float, spacing: float | None = None, max_refine: int = 5) -> bool:
    """Sufficient test that the point set is ``alpha``-dense.

    The claim is that every Euclidean ball of radius ``1/alpha`` centered in the
    convex hull contains a point. The hull is covered by grid cells of side
    ``spacing`` (default ``1/(2 alpha)``). A cell passes when its center's
    nearest point is close enough for the whole cell; a hull point with an
    empty ball is a definite counterexample; other cells are split up to
    ``max_refine`` times. Cells still undecided count as failures, so a
    ``True`` answer is never wrong.
    """
    if g.coords is None:
        raise MissingCoordinates("density needs vertex coordinates")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    radius = 1.0 / alpha
    pts = np.asarray(g.coords, dtype=float)
    centered = pts - pts.mean(axis=0)
    if len(pts) == 1 or np.allclose(centered, 0.0):
        return True
    _, sv, vt = np.linalg.svd(centered, full_matrices=False)
    rank = int(np.sum(sv > 1e-9 * sv[0]))
    y = centered @ vt[:rank].T
    if rank == 1:
        line = np.sort(y[:, 0])
        return bool(np.max(np.diff(line)) / 2.0 <= radius)
    hull = ConvexHull(y)
    normals, offsets = hull.equations[:, :-1], hull.equations[:, -1]
    tree = cKDTree(y)
    h = spacing if spacing is not None else radius / 2.0
    lo, hi = y.min(axis=0), y.max(axis=0)
    counts = np.maximum(1, np.ceil((hi - lo) / h).astype(int))
    axes = [lo[i] + (np.arange(counts[i]) + 0.5) * h for i in range(rank)]
    cells = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, rank)
    for level in range(max_refine + 1):
        half_diag = h * math.sqrt(rank) / 2.0
        slack = cells @ normals.T + offsets
        near = np.max(slack, axis=1) <= half_diag + 1e-12
        cells, slack = cells[near], slack[near]
        if len(cells) == 0:
            return True
        dist, _ = tree.query(cells)
        inside = np.max(slack, axis=1) <= 0.0
        if np.any(inside & (dist > radius)):
            return False
        todo = cells[dist + half_diag > radius]
        if len(todo) == 0:
            return True
        if level == max_refine:
            return False
        h /= 2.0
        shifts = np.stack(np.meshgrid(*([[-0.5, 0.5]] * rank), indexing="ij"), axis=-1).reshape(-1, rank) * h
        cells = (todo[:, None, :] + shifts[None, :, :]).reshape(-1, rank)
    return False


class IndependenceEstimate(NamedTuple):
    value: int
    exact: bool


def estimate_independence(g: Graph, R: int, r: int, v: int, exact_cap: int = 160) -> IndependenceEstimate:
    """Largest subset of the ball ``B_{rR}(v)`` with pairwise distance above ``R``.

    Exact by branch and bound when the ball has at most ``exact_cap``
    vertices, otherwise a greedy lower bound with ``exact=False``.
    """
    if R < 1 or r < 1:
        raise ValueError("R and r must be at least 1")
    region = bounded_bfs(g, v, r * R)
    conflict = {}
    for u in region:
        near = bounded_bfs(g, u, R)
        conflict[u] = [w for w in near if w != u and w in region]
    if len(region) <= exact_cap:
        return IndependenceEstimate(len(max_independent_set(conflict)), True)
    return IndependenceEstimate(len(greedy_independent_set(conflict)), False)


def log_star(n: float) -> int:
    """Number of base-2 logarithms needed to bring ``n`` down to at most 1."""
    if n < 1:
        raise ValueError("log* is defined for n >= 1")
    count = 0
    x = float(n)
    while x > 1.0:
        x = math.log2(x)
        count += 1
    return count


# edge-list files


def write_edgelist(g: Graph, dest: str | TextIO) -> None:
    lines = [f"{g.n} {g.m}"]
    lines += [f"{u} {v}" for u, v in g.edges()]
    if g.coords is not None:
        k = g.coords.shape[1]
        lines.append(f"coords {k}")
        lines += [" ".join(repr(float(x)) for x in row) for row in g.coords]
    text = "\n".join(lines) + "\n"
    if isinstance(dest, str):
        with open(dest, "w") as fh:
            fh.write(text)
    else:
        dest.write(text)


def read_edgelist(src: str | TextIO) -> Graph:
    if isinstance(src, str):
        with open(src) as fh:
            text = fh.read()
    else:
        text = src.read()
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty edge-list file")
    n, m = (int(x) for x in lines[0].split())
    edges = []
    for ln in lines[1:1 + m]:
        u, v = (int(x) for x in ln.split())
        edges.append((u, v))
    if len(edges) != m:
        raise ValueError(f"expected {m} edges, found {len(edges)}")
    coords = None
    rest = lines[1 + m:]
    if rest:
        head = rest[0].split()
        if head[0] != "coords" or len(head) != 2:
            raise ValueError(f"unexpected line {rest[0]!r}")
        k = int(head[1])
        rows = [[float(x) for x in ln.split()] for ln in rest[1:]]
        if len(rows) != n or any(len(r) != k for r in rows):
            raise ValueError("coordinate section does not match n and k")
        coords = np.array(rows, dtype=float).reshape(n, k)
    return Graph.from_edges(n, edges, coords=coords)
