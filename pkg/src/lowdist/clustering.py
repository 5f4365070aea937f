"""Clustering constructions: Voronoi, additively weighted Voronoi, MIS-based
Voronoi with start-time shifts, exponential-shift (MPX) clustering and the
conditional-expectation choice of start times.
"""
from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence, TextIO

import numpy as np

from ._rng import vertex_priority
from .errors import EmptyCenterSet, EnumerationTooLarge, InvalidClustering
from .graph import Graph, bounded_bfs

__all__ = [
    "Clustering",
    "WeightAssignment",
    "MpxParams",
    "DerandResult",
    "singleton_clustering",
    "voronoi",
    "weighted_voronoi",
    "mis_power_graph",
    "max_shift",
    "uniform_shifts",
    "mis_voronoi",
    "mpx_weights",
    "mpx",
    "competition_graph",
    "greedy_coloring",
    "derandomize",
    "derandomized_start_times",
    "expected_crossings",
    "cluster_graph",
    "write_clustering",
    "read_clustering",
]


class Clustering:
    """Partition into clusters, each with a center and a BFS tree.

    ``center_of[v]`` is the center vertex of ``v``'s cluster, ``depth_of[v]`` its
    depth in the cluster tree and ``parent_of[v]`` its tree parent (the vertex
    itself for a center). All three are read-only integer arrays.
    """

    __slots__ = ("scale", "center_of", "depth_of", "parent_of", "_centers", "_index")

    def __init__(self, scale: float, center_of, depth_of, parent_of):
        self.scale = scale
        arrays = []
        for a in (center_of, depth_of, parent_of):
            a = np.array(a, dtype=np.int64)
            a.setflags(write=False)
            arrays.append(a)
        self.center_of, self.depth_of, self.parent_of = arrays
        if not (len(self.center_of) == len(self.depth_of) == len(self.parent_of)):
            raise InvalidClustering("field lengths differ")
        self._centers = None
        self._index = None

    @property
    def n(self) -> int:
        return len(self.center_of)

    @property
    def centers(self) -> tuple[int, ...]:
        """Sorted distinct centers (by vertex index)."""
        if self._centers is None:
            self._centers = tuple(int(c) for c in np.unique(self.center_of))
        return self._centers

    @property
    def cluster_count(self) -> int:
        return len(self.centers)

    def cluster_index(self) -> np.ndarray:
        """Per-vertex position of its center in ``centers``."""
        if self._index is None:
            idx = np.searchsorted(np.array(self.centers), self.center_of)
            idx.setflags(write=False)
            self._index = idx
        return self._index

    def members(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {c: [] for c in self.centers}
        for v, c in enumerate(self.center_of.tolist()):
            out[c].append(v)
        return out

    def sizes(self) -> np.ndarray:
        return np.bincount(self.cluster_index(), minlength=self.cluster_count)

    def validate(self, g: Graph) -> None:
        """Check the tree invariants; raise :class:`InvalidClustering` on failure."""
        if self.n != g.n:
            raise InvalidClustering(f"clustering has {self.n} vertices, graph has {g.n}")
        cen, dep, par = self.center_of, self.depth_of, self.parent_of
        if cen.min() < 0 or cen.max() >= g.n or par.min() < 0 or par.max() >= g.n:
            raise InvalidClustering("center or parent index out of range")
        for c in self.centers:
            if cen[c] != c or dep[c] != 0 or par[c] != c:
                raise InvalidClustering(f"center {c} is not the root of its own cluster")
        for v in range(g.n):
            if cen[v] == v:
                continue
            p = int(par[v])
            if p not in g.adj[v]:
                raise InvalidClustering(f"parent {p} of {v} is not a neighbor")
            if cen[p] != cen[v]:
                raise InvalidClustering(f"parent {p} of {v} lies in another cluster")
            if dep[p] != dep[v] - 1:
                raise InvalidClustering(f"depth of {v} is not one more than its parent's")

    def same_partition_and_trees(self, other: "Clustering") -> bool:
        return (
            np.array_equal(self.center_of, other.center_of)
            and np.array_equal(self.depth_of, other.depth_of)
            and np.array_equal(self.parent_of, other.parent_of)
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Clustering):
            return NotImplemented
        return self.scale == other.scale and self.same_partition_and_trees(other)

    def __repr__(self) -> str:
        return f"Clustering(scale={self.scale}, n={self.n}, clusters={self.cluster_count})"


@dataclass(frozen=True)
class WeightAssignment:
    """Additive shifts ``W(s)`` for candidate centers."""

    weights: Mapping[int, float]
    kind: str = "deterministic"
    cutoff: float | None = None

    KINDS = ("zero", "uniform-start", "exponential", "exponential-truncated", "deterministic")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if any(w < 0 for w in self.weights.values()):
            raise ValueError("weights must be nonnegative")
        if self.kind == "exponential-truncated":
            if self.cutoff is None or any(w > self.cutoff for w in self.weights.values()):
                raise ValueError("truncated weights must not exceed the cutoff")


@dataclass(frozen=True)
class MpxParams:
    R: float
    cutoff_mode: str = "ln-n"
    C_cutoff: float | None = None
    growth_exponent: float | None = None

    def __post_init__(self):
        if self.R < 1:
            raise ValueError("R must be at least 1")
        if self.cutoff_mode not in ("ln-n", "ln-R", "none"):
            raise ValueError(f"unknown cutoff mode {self.cutoff_mode!r}")
        if self.C_cutoff is not None and self.C_cutoff <= 1:
            raise ValueError("the cutoff constant must exceed 1")

    @property
    def constant(self) -> float:
        if self.C_cutoff is not None:
            return self.C_cutoff
        if self.growth_exponent is not None:
            return self.growth_exponent + 1.001
        return 4.0

    def cutoff(self, n: int) -> float:
        if self.cutoff_mode == "ln-n":
            return self.constant * self.R * math.log(n)
        if self.cutoff_mode == "ln-R":
            return self.constant * self.R * math.log(self.R)
        return math.inf


def _require_integer_scale(R) -> int:
    if int(R) != R or R < 1:
        raise ValueError(f"this construction needs an integer R >= 1, got {R!r}")
    return int(R)


def singleton_clustering(g: Graph, scale: float = 1) -> Clustering:
    v = np.arange(g.n)
    return Clustering(scale, v, np.zeros(g.n, dtype=np.int64), v)


# Voronoi constructions


def weighted_voronoi(g: Graph, S: Iterable[int], weights=None, scale: float = 1) -> Clustering:
    """Additively weighted Voronoi clustering by a shifted multi-source BFS.

    Vertex ``v`` joins ``argmin_s d(s, v) - W(s)``; ties go to the smaller center
    id and then to the smaller parent id. ``weights`` may be a mapping from
    center to shift, an array indexed by vertex, a :class:`WeightAssignment`, or
    ``None`` for zero shifts. A center can lose itself to another center, in
    which case it heads no cluster.
    """
    centers = sorted(set(int(s) for s in S))
    if not centers:
        raise EmptyCenterSet("the center set is empty")
    if isinstance(weights, WeightAssignment):
        weights = weights.weights
    if weights is None:
        shift = {s: 0 for s in centers}
    elif isinstance(weights, Mapping):
        shift = {s: weights[s] for s in centers}
    else:
        arr = np.asarray(weights)
        shift = {s: arr[s].item() for s in centers}
    ids = g.ids
    adj = g.adj
    n = g.n
    center_of = [-1] * n
    depth_of = [0] * n
    parent_of = [0] * n
    heap = [(-shift[s], ids[s], ids[s], s, s, 0, s) for s in centers]
    heapq.heapify(heap)
    pop, push = heapq.heappop, heapq.heappush
    remaining = n
    while remaining:
        _, cid, _, v, c, d, p = pop(heap)
        if center_of[v] >= 0:
            continue
        center_of[v] = c
        depth_of[v] = d
        parent_of[v] = p
        remaining -= 1
        d1 = d + 1
        t = d1 - shift[c]
        vid = ids[v]
        for u in adj[v]:
            if center_of[u] < 0:
                push(heap, (t, cid, vid, u, c, d1, v))
    return Clustering(scale, center_of, depth_of, parent_of)


def voronoi(g: Graph, S: Iterable[int], scale: float = 1) -> Clustering:
    """Each vertex joins its nearest center, ties to the smaller id."""
    return weighted_voronoi(g, S, None, scale)


def mis_power_graph(g: Graph, R: int, strategy: str = "greedy-id", seed=None) -> list[int]:
    """Maximal set of vertices with pairwise distance above ``R``.

    ``greedy-id`` scans vertices by id. ``luby`` scans them by random priority
    (ties by id), which is exactly the output of Luby's algorithm run with one
    fixed priority per vertex; the priorities come from each vertex's private
    seed, so the simulated distributed version selects the same set.
    """
    if R < 1:
        raise ValueError("R must be at least 1")
    if strategy == "greedy-id":
        order = sorted(range(g.n), key=g.ids.__getitem__)
    elif strategy == "luby":
        order = sorted(range(g.n), key=lambda v: (vertex_priority(seed, g.ids[v]), g.ids[v]))
    else:
        raise ValueError(f"unknown MIS strategy {strategy!r}")
    covered = bytearray(g.n)
    chosen = []
    R = int(math.floor(R))
    for v in order:
        if covered[v]:
            continue
        chosen.append(v)
        for u in bounded_bfs(g, v, R):
            covered[u] = 1
    return sorted(chosen)


def max_shift(R: int) -> int:
    """Largest start-time shift ``floor(R/10)`` of the discretized uniform variant."""
    return int(R) // 10


def uniform_shifts(centers: Sequence[int], R: int, seed=None) -> dict[int, int]:
    """Independent uniform shifts on ``{0, ..., floor(R/10)}``.

    A shift ``W`` corresponds to starting the BFS wave at time ``floor(R/10) - W``.
    """
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, max_shift(R) + 1, size=len(centers))
    return {int(s): int(w) for s, w in zip(sorted(centers), draws)}


def mis_voronoi(
    g: Graph,
    R: int,
    start_times: str = "zero",
    seed=None,
    mis: str = "greedy-id",
    mis_seed=None,
    centers: Sequence[int] | None = None,
) -> Clustering:
    """Voronoi clustering around a maximal independent set of the power graph.

    ``start_times='zero'`` gives plain Voronoi cells; ``'uniform'`` shifts each
    center by an independent uniform integer in ``{0, ..., floor(R/10)}``.
    """
    R = _require_integer_scale(R)
    S = list(centers) if centers is not None else mis_power_graph(g, R, mis, mis_seed)
    if start_times == "zero":
        return weighted_voronoi(g, S, None, R)
    if start_times == "uniform":
        return weighted_voronoi(g, S, uniform_shifts(S, R, seed), R)
    raise ValueError(f"unknown start-time variant {start_times!r}")


def mpx_weights(n: int, params: MpxParams, seed=None) -> np.ndarray:
    """Exponential shifts of mean ``R`` by inverse CDF, truncated at the cutoff."""
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    delta = -params.R * np.log1p(-u)
    return np.minimum(delta, params.cutoff(n))


def mpx(g: Graph, params: MpxParams, seed=None, weights=None) -> Clustering:
    """Every vertex is a candidate center with an exponential shift."""
    if weights is None:
        weights = mpx_weights(g.n, params, seed)
    return weighted_voronoi(g, range(g.n), np.asarray(weights, dtype=float), params.R)


# conditional-expectation choice of shifts


def competition_threshold(R: int) -> int:
    """Largest integer distance ``<= 2.2 R + 1``."""
    return (22 * R + 10) // 10


def competition_graph(g: Graph, centers: Sequence[int], R: int) -> dict[int, list[int]]:
    """Centers are adjacent when their distance is at most ``2.2 R + 1``."""
    reach = competition_threshold(R)
    cs = set(centers)
    return {s: sorted(u for u in bounded_bfs(g, s, reach) if u in cs and u != s) for s in centers}


def greedy_coloring(graph: Mapping[int, Sequence[int]], key=None) -> dict[int, int]:
    """Greedy proper coloring in ``key`` order; uses at most max degree + 1 colors."""
    color: dict[int, int] = {}
    for v in sorted(graph, key=key):
        taken = {color[u] for u in graph[v] if u in color}
        c = 0
        while c in taken:
            c += 1
        color[v] = c
    return color


class _ShiftSpace:
    """Exact probabilities over independent integer shifts of a fixed center set.

    For every vertex only the centers that can still win it are kept: a center
    whose best key is worse than the nearest center's worst key never wins.
    """

    def __init__(self, g: Graph, centers: Sequence[int], wmax: int, R: int):
        self.g = g
        self.centers = sorted(centers)
        self.wmax = wmax
        self.values = list(range(wmax + 1))
        ids = g.ids
        reach: list[list[tuple[int, int]]] = [[] for _ in range(g.n)]
        for s in self.centers:
            for u, d in bounded_bfs(g, s, R + wmax).items():
                reach[u].append((s, d))
        self.cand: list[tuple[tuple[int, int], ...]] = []
        for u in range(g.n):
            opts = reach[u]
            if not opts:
                raise ValueError(f"vertex {u} is farther than R from every center")
            best = min(opts, key=lambda sd: (sd[1], ids[sd[0]]))
            keep = tuple(sorted((s, d) for s, d in opts if not (best[1], ids[best[0]]) < (d - wmax, ids[s])))
            self.cand.append(keep)
        self.reached: dict[int, list[int]] = {s: [] for s in self.centers}
        for u in range(g.n):
            for s, _ in self.cand[u]:
                self.reached[s].append(u)

    def _dist_at(self, u: int) -> dict[int, int]:
        return dict(self.cand[u])

    def _beats(self, s: int, ds: int, ws: int, t: int, dt: int, wt: int) -> bool:
        ids = self.g.ids
        return (ds - ws, ids[s]) < (dt - wt, ids[t])

    def _domain(self, s: int, fixed: Mapping[int, int]) -> list[int]:
        return [fixed[s]] if s in fixed else self.values

    def cross_probability(self, u: int, v: int, fixed: Mapping[int, int]) -> float:
        """Probability that ``u`` and ``v`` end in different clusters."""
        du, dv = self._dist_at(u), self._dist_at(v)
        if len(du) == 1 and du.keys() == dv.keys():
            return 0.0
        rivals = set(du) | set(dv)
        same = 0.0
        for s in set(du) & set(dv):
            dom = self._domain(s, fixed)
            ps = 1.0 / len(dom)
            total = 0.0
            for w in dom:
                prod = 1.0
                for t in rivals:
                    if t == s:
                        continue
                    tdom = self._domain(t, fixed)
                    ok = 0
                    for wt in tdom:
                        if t in du and not self._beats(s, du[s], w, t, du[t], wt):
                            continue
                        if t in dv and not self._beats(s, dv[s], w, t, dv[t], wt):
                            continue
                        ok += 1
                    prod *= ok / len(tdom)
                    if prod == 0.0:
                        break
                total += prod
            same += ps * total
        return 1.0 - same

    def dependencies(self, s: int) -> list[int]:
        deps = set()
        for u in self.reached[s]:
            deps.update(t for t, _ in self.cand[u])
        return sorted(deps)

    def cluster_expectation(
        self,
        s: int,
        fixed: Mapping[int, int],
        value: Callable[[frozenset], float],
        memo: dict,
        limit: int,
    ) -> float:
        """Expected ``value`` of the cluster headed by ``s`` (empty set if it loses itself)."""
        sure, contested = [], []
        for u in self.reached[s]:
            (sure if len(self.cand[u]) == 1 else contested).append(u)
        deps = set()
        for u in contested:
            deps.update(t for t, _ in self.cand[u])
        deps.add(s)
        free = sorted(t for t in deps if t not in fixed)
        combos = (self.wmax + 1) ** len(free)
        if combos > limit:
            raise EnumerationTooLarge(
                f"cluster of center {s} depends on {len(free)} free shifts ({combos} joint values)"
            )
        ids = self.g.ids
        checks = [(u, self.cand[u]) for u in contested]
        base = frozenset(sure)
        total = 0.0
        for combo in itertools.product(self.values, repeat=len(free)):
            w = dict(fixed)
            w.update(zip(free, combo))
            got = []
            for u, opts in checks:
                win = min(opts, key=lambda sd: (sd[1] - w[sd[0]], ids[sd[0]]))
                if win[0] == s:
                    got.append(u)
            members = base.union(got) if got else base
            hit = memo.get(members)
            if hit is None:
                hit = value(members) if members else 0.0
                memo[members] = hit
            total += hit
        return total / combos


@dataclass
class DerandResult:
    clustering: Clustering
    shifts: dict[int, int]
    initial_expectation: float
    final_value: float
    history: list[float] = field(default_factory=list)
    colors: dict[int, int] = field(default_factory=dict)


def derandomize(
    g: Graph,
    R: int,
    cluster_value: Callable[[frozenset], float] | None = None,
    crossing_weight: float = 1.0,
    centers: Sequence[int] | None = None,
    enumeration_limit: int = 200_000,
) -> DerandResult:
    """Pick every center's shift by the method of conditional expectations.

    The objective maximized is ``sum of cluster_value(C) - crossing_weight *
    (number of crossing edges)`` over the shifted Voronoi clustering of a greedy
    MIS of the power graph. Centers are fixed one at a time, color class by
    color class of the competition graph; each takes the shift with the best
    exact conditional expectation given the shifts fixed so far, with the rest
    uniform on ``{0, ..., floor(R/10)}``. ``history`` holds the expectation after
    each step and never decreases.
    """
    R = _require_integer_scale(R)
    S = sorted(centers) if centers is not None else mis_power_graph(g, R)
    wmax = max_shift(R)
    space = _ShiftSpace(g, S, wmax, R)
    ids = g.ids
    star = competition_graph(g, S, R)
    colors = greedy_coloring(star, key=ids.__getitem__)

    heads = [frozenset(t for t, _ in opts) for opts in space.cand]
    edge_terms = [(u, v) for u, v in g.edges() if not (len(heads[u]) == 1 and heads[u] == heads[v])]
    edges_of: dict[int, list[int]] = {s: [] for s in S}
    for i, (u, v) in enumerate(edge_terms):
        for t in heads[u] | heads[v]:
            edges_of[t].append(i)
    clusters_of: dict[int, list[int]] = {s: [] for s in S}
    if cluster_value is not None:
        for s in S:
            for t in space.dependencies(s):
                clusters_of[t].append(s)
    memo: dict = {}

    def local_value(s_terms_edges, s_terms_clusters, fixed) -> float:
        val = 0.0
        for s2 in s_terms_clusters:
            val += space.cluster_expectation(s2, fixed, cluster_value, memo, enumeration_limit)
        for i in s_terms_edges:
            val -= crossing_weight * space.cross_probability(*edge_terms[i], fixed)
        return val

    fixed: dict[int, int] = {}
    expectation = local_value(range(len(edge_terms)), S if cluster_value is not None else [], fixed)
    initial = expectation
    history = [expectation]
    order = sorted(S, key=lambda s: (colors[s], ids[s]))
    for s in order:
        scores = []
        for w in space.values:
            fixed[s] = w
            scores.append(local_value(edges_of[s], clusters_of[s], fixed))
        del fixed[s]
        best = max(range(len(scores)), key=lambda i: (scores[i], -i))
        fixed[s] = space.values[best]
        expectation += scores[best] - sum(scores) / len(scores)
        history.append(expectation)
    clustering = weighted_voronoi(g, S, fixed, R)
    final = -crossing_weight * _crossing_count(g, clustering)
    if cluster_value is not None:
        for members in clustering.members().values():
            final += cluster_value(frozenset(members))
    return DerandResult(clustering, dict(fixed), initial, final, history, colors)


def derandomized_start_times(g: Graph, R: int) -> Clustering:
    """Shifted MIS Voronoi clustering whose crossing count is at most its expectation."""
    return derandomize(g, R).clustering


def expected_crossings(g: Graph, R: int, centers: Sequence[int] | None = None, fixed: Mapping[int, int] | None = None) -> float:
    """Exact expected number of crossing edges under independent uniform shifts."""
    R = _require_integer_scale(R)
    S = sorted(centers) if centers is not None else mis_power_graph(g, R)
    space = _ShiftSpace(g, S, max_shift(R), R)
    return sum(space.cross_probability(u, v, fixed or {}) for u, v in g.edges())


def _crossing_count(g: Graph, c: Clustering) -> int:
    e = g.edge_array()
    if len(e) == 0:
        return 0
    return int(np.count_nonzero(c.center_of[e[:, 0]] != c.center_of[e[:, 1]]))


# quotient graph


def cluster_graph(g: Graph, c: Clustering) -> tuple[Graph, np.ndarray]:
    """Quotient graph with one node per cluster, plus the vertex-to-node map."""
    node = c.cluster_index()
    k = c.cluster_count
    adj: list[set[int]] = [set() for _ in range(k)]
    e = g.edge_array()
    if len(e):
        a, b = node[e[:, 0]], node[e[:, 1]]
        cross = a != b
        for x, y in zip(a[cross].tolist(), b[cross].tolist()):
            adj[x].add(y)
            adj[y].add(x)
    ids = [g.ids[s] for s in c.centers]
    return Graph(k, adj, ids=ids), node


# clustering files


def _fmt_scale(R) -> str:
    return str(int(R)) if float(R).is_integer() else repr(float(R))


def write_clustering(c: Clustering, dest: str | TextIO, extra: Mapping[str, Sequence[int]] | None = None) -> None:
    """Header ``clustering R [extra column names]`` then ``v center depth parent [extras]``."""
    extra = dict(extra or {})
    head = "clustering " + _fmt_scale(c.scale)
    if extra:
        head += " " + " ".join(extra)
    lines = [head]
    cols = list(extra.values())
    for v in range(c.n):
        row = [v, int(c.center_of[v]), int(c.depth_of[v]), int(c.parent_of[v])] + [int(col[v]) for col in cols]
        lines.append(" ".join(str(x) for x in row))
    text = "\n".join(lines) + "\n"
    if isinstance(dest, str):
        with open(dest, "w") as fh:
            fh.write(text)
    else:
        dest.write(text)


def read_clustering(src: str | TextIO, with_extra: bool = False):
    if isinstance(src, str):
        with open(src) as fh:
            text = fh.read()
    else:
        text = src.read()
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0][0] != "clustering" or len(lines[0]) < 2:
        raise InvalidClustering("missing 'clustering R' header")
    scale = float(lines[0][1])
    if scale.is_integer():
        scale = int(scale)
    names = lines[0][2:]
    rows = lines[1:]
    n = len(rows)
    cen, dep, par = [0] * n, [0] * n, [0] * n
    extra = {name: [0] * n for name in names}
    for row in rows:
        if len(row) != 4 + len(names):
            raise InvalidClustering(f"malformed row {' '.join(row)!r}")
        try:
            vals = [int(x) for x in row]
        except ValueError as exc:
            raise InvalidClustering(f"non-integer field in row {' '.join(row)!r}") from exc
        v = vals[0]
        if not 0 <= v < n:
            raise InvalidClustering(f"vertex {v} out of range")
        cen[v], dep[v], par[v] = vals[1:4]
        for name, x in zip(names, vals[4:]):
            extra[name][v] = x
    c = Clustering(scale, cen, dep, par)
    return (c, extra) if with_extra else c
