"""Clustering-based approximation of maximum matching, independent set and cut,
with the exact solvers used inside clusters and as references.

Every pipeline drops crossing edges, solves each cluster exactly and takes the
union. An independent set is repaired afterwards by removing the larger-id
endpoint of every crossing edge with both ends chosen. A cut keeps the crossing
edges whose endpoints happen to fall on different sides.
"""
from __future__ import annotations

import csv
import io
import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from ._matching import max_matching
from ._mis import max_independent_set
from .clustering import Clustering, MpxParams, derandomize, mis_voronoi, mpx
from .errors import InstanceTooLarge
from .graph import Graph

__all__ = [
    "ApproxResult",
    "exact_matching",
    "exact_mis",
    "exact_maxcut",
    "matching_size",
    "mis_size",
    "maxcut_value",
    "approx_solve",
    "approx_solve_mpx",
    "solve_on_clustering",
    "check_feasible",
    "scale_for",
    "RESULT_CSV_HEADER",
]

PROBLEMS = ("matching", "mis", "maxcut")


@dataclass
class ApproxResult:
    problem: str
    solution: list
    value: int
    epsilon: float
    mode: str
    seed: int | None = None
    R: int | None = None
    opt_reference: int | None = None
    cluster_count: int = 0
    crossing_edges: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["solution"] = [list(x) if isinstance(x, tuple) else x for x in self.solution]
        out["version"] = __version__
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ApproxResult":
        d = dict(d)
        d.pop("version", None)
        if d["problem"] in ("matching", "maxcut"):
            d["solution"] = [tuple(x) for x in d["solution"]]
        return cls(**d)

    def csv_row(self) -> dict:
        return {
            "version": __version__,
            "problem": self.problem,
            "epsilon": self.epsilon,
            "mode": self.mode,
            "seed": "" if self.seed is None else self.seed,
            "R": self.R,
            "value": self.value,
            "opt_reference": "" if self.opt_reference is None else self.opt_reference,
            "cluster_count": self.cluster_count,
            "crossing_edges": self.crossing_edges,
        }


RESULT_CSV_HEADER = (
    "version",
    "problem",
    "epsilon",
    "mode",
    "seed",
    "R",
    "value",
    "opt_reference",
    "cluster_count",
    "crossing_edges",
)


# structure helpers


def _components(adj: Sequence[Sequence[int]]) -> list[list[int]]:
    n = len(adj)
    seen = [False] * n
    comps = []
    for s in range(n):
        if seen[s]:
            continue
        seen[s] = True
        comp = [s]
        q = deque([s])
        while q:
            x = q.popleft()
            for y in adj[x]:
                if not seen[y]:
                    seen[y] = True
                    comp.append(y)
                    q.append(y)
        comps.append(comp)
    return comps


def _two_coloring(adj: Sequence[Sequence[int]], comp: Sequence[int]) -> dict[int, int] | None:
    color = {comp[0]: 0}
    q = deque([comp[0]])
    while q:
        x = q.popleft()
        for y in adj[x]:
            if y not in color:
                color[y] = 1 - color[x]
                q.append(y)
            elif color[y] == color[x]:
                return None
    return color


def _path_or_cycle_order(adj: Sequence[Sequence[int]], comp: Sequence[int]) -> tuple[list[int], bool] | None:
    """Vertex order along a path or cycle component, or ``None`` for other shapes."""
    degs = [len(adj[v]) for v in comp]
    if any(d > 2 for d in degs):
        return None
    ends = [v for v in comp if len(adj[v]) <= 1]
    if len(comp) == 1:
        return [comp[0]], False
    if ends:
        start, cyclic = min(ends), False
    else:
        start, cyclic = min(comp), True
    order = [start]
    prev, cur = -1, start
    while True:
        nxt = [u for u in adj[cur] if u != prev]
        if not nxt or nxt[0] == start:
            break
        prev, cur = cur, min(nxt) if cur == start else nxt[0]
        order.append(cur)
    return order, cyclic


# exact solvers


def exact_matching(g: Graph) -> set[tuple[int, int]]:
    """Maximum matching as a set of edges ``(u, v)`` with ``u < v``."""
    mate = max_matching(g.adj)
    return {(v, mate[v]) for v in range(g.n) if mate[v] > v}


def _mis_component(adj, comp: Sequence[int], cap: int) -> set[int]:
    shape = _path_or_cycle_order(adj, comp)
    if shape is not None:
        order, cyclic = shape
        k = len(order) // 2 if cyclic else (len(order) + 1) // 2
        return {order[2 * i] for i in range(k)}
    color = _two_coloring(adj, comp)
    if color is not None:
        return _konig_mis(adj, comp, color)
    if len(comp) > cap:
        raise InstanceTooLarge(f"independent set on {len(comp)} vertices exceeds the cap {cap}")
    sub = {v: [u for u in adj[v]] for v in comp}
    return max_independent_set(sub)


def _konig_mis(adj, comp: Sequence[int], color: dict[int, int]) -> set[int]:
    # complement of a minimum vertex cover built from a maximum matching
    local = {v: i for i, v in enumerate(comp)}
    sub = [[local[u] for u in adj[v]] for v in comp]
    mate = max_matching(sub)
    left = [i for i, v in enumerate(comp) if color[v] == 0]
    reach = set()
    q = deque(i for i in left if mate[i] < 0)
    reach.update(q)
    while q:
        x = q.popleft()
        for y in sub[x]:
            if y in reach or mate[x] == y:
                continue
            reach.add(y)
            z = mate[y]
            if z >= 0 and z not in reach:
                reach.add(z)
                q.append(z)
    out = set()
    for i, v in enumerate(comp):
        if (color[v] == 0) == (i in reach):
            out.add(v)
    return out


def exact_mis(g: Graph, cap: int = 64) -> set[int]:
    """Maximum independent set.

    Paths and cycles use their closed form and bipartite graphs the König
    construction, at any size; other graphs go through branch and bound and
    raise ``InstanceTooLarge`` above ``cap`` vertices.
    """
    out: set[int] = set()
    for comp in _components(g.adj):
        out |= _mis_component(g.adj, comp, cap)
    return out


def _maxcut_component(adj, comp: Sequence[int], cap: int) -> dict[int, int]:
    color = _two_coloring(adj, comp)
    if color is not None:
        return color
    shape = _path_or_cycle_order(adj, comp)
    if shape is not None:
        order, _ = shape
        return {v: i % 2 for i, v in enumerate(order)}
    if len(comp) > cap:
        raise InstanceTooLarge(f"max cut on {len(comp)} vertices exceeds the cap {cap}")
    side = _maxcut_frontier_dp(adj, comp)
    return side if side is not None else _maxcut_bnb(adj, comp)


def _maxcut_frontier_dp(adj, comp: Sequence[int], max_width: int = 15) -> dict[int, int] | None:
    """Dynamic program over a vertex order, keyed by the sides of the frontier
    (placed vertices with unplaced neighbors). ``None`` if the frontier of the
    greedy order grows beyond ``max_width``.
    """
    local = {v: i for i, v in enumerate(comp)}
    k = len(comp)
    nb = [0] * k
    for v in comp:
        for u in adj[v]:
            nb[local[v]] |= 1 << local[u]
    placed = 0
    order, masks = [], []
    for _ in range(k):
        best = None
        for x in range(k):
            if placed >> x & 1:
                continue
            after = placed | 1 << x
            width = sum(1 for y in _bits(after) if nb[y] & ~after)
            key = (width, -bin(nb[x] & placed).count("1"), x)
            if best is None or key < best:
                best = key
        x = best[2]
        if best[0] > max_width:
            return None
        placed |= 1 << x
        order.append(x)
        masks.append(sum(1 << y for y in _bits(placed) if nb[y] & ~placed))
    states = {0: (0, 0)}
    done = 0
    for step, x in enumerate(order):
        prev = nb[x] & done
        deg = bin(prev).count("1")
        nxt: dict[int, tuple[int, int]] = {}
        for cut, full in states.values():
            ones = bin(full & prev).count("1")
            for s in (0, 1) if step else (0,):
                f2 = full | (s << x)
                c2 = cut + (ones if s == 0 else deg - ones)
                key = f2 & masks[step]
                old = nxt.get(key)
                if old is None or c2 > old[0]:
                    nxt[key] = (c2, f2)
        states = nxt
        done |= 1 << x
    _, full = max(states.values())
    return {v: full >> i & 1 for i, v in enumerate(comp)}


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _local_search_cut(nbr: list[list[int]]) -> list[int]:
    side = [0] * len(nbr)
    for i in range(len(nbr)):
        earlier = [side[j] for j in nbr[i] if j < i]
        side[i] = 0 if 2 * sum(earlier) >= len(earlier) else 1
    improved = True
    while improved:
        improved = False
        for i in range(len(nbr)):
            same = sum(1 for j in nbr[i] if side[j] == side[i])
            if 2 * same > len(nbr[i]):
                side[i] = 1 - side[i]
                improved = True
    return side


def _maxcut_bnb(adj, comp: Sequence[int], node_limit: int = 2_000_000) -> dict[int, int]:
    order = []
    seen = {comp[0]}
    q = deque([comp[0]])
    while q:
        x = q.popleft()
        order.append(x)
        for y in sorted(adj[x]):
            if y not in seen:
                seen.add(y)
                q.append(y)
    pos = {v: i for i, v in enumerate(order)}
    k = len(order)
    nbr = [[pos[u] for u in adj[v]] for v in order]
    fwd = [[j for j in nbr[i] if j > i] for i in range(k)]
    # edges with both endpoints unassigned, capped by the Laplacian eigenvalue
    # bound |U| lambda_max / 4 on the max cut of the unassigned part
    inner = [0] * (k + 1)
    for i in range(k - 1, -1, -1):
        inner[i] = inner[i + 1] + len(fwd[i])
    lap = np.zeros((k, k))
    for i in range(k):
        for j in fwd[i]:
            lap[i, j] = lap[j, i] = -1.0
    for i in range(k - 1, -1, -1):
        sub = lap[i:, i:].copy()
        np.fill_diagonal(sub, -sub.sum(axis=1))
        lam = float(np.linalg.eigvalsh(sub)[-1]) if k - i > 1 else 0.0
        inner[i] = min(inner[i], math.floor((k - i) * lam / 4 + 1e-9))
    side = _local_search_cut(nbr)
    best = [sum(1 for i in range(k) for j in fwd[i] if side[i] != side[j]), side[:]]
    cnt = [[0] * k, [0] * k]
    nodes = [0]

    def rec(i: int, cut: int) -> None:
        nodes[0] += 1
        if nodes[0] > node_limit:
            raise InstanceTooLarge(f"max cut search on {k} vertices exceeded {node_limit} nodes")
        if i == k:
            if cut > best[0]:
                best[0], best[1] = cut, side[:]
            return
        bound = cut + inner[i]
        for j in range(i, k):
            bound += max(cnt[0][j], cnt[1][j])
        if bound <= best[0]:
            return
        first = 0 if cnt[1][i] >= cnt[0][i] else 1
        for s in (first, 1 - first):
            if i == 0 and s == 1:
                continue
            side[i] = s
            for j in fwd[i]:
                cnt[s][j] += 1
            rec(i + 1, cut + cnt[1 - s][i])
            for j in fwd[i]:
                cnt[s][j] -= 1

    rec(0, 0)
    return {v: best[1][pos[v]] for v in comp}


def exact_maxcut(g: Graph, cap: int = 64) -> tuple[set[int], int]:
    """Maximum cut as ``(one side, value)``.

    Bipartite graphs and cycles are solved at any size. Other components of
    at most ``cap`` vertices go through a frontier dynamic program when the
    frontier stays narrow and branch and bound otherwise; a search that
    exceeds its node budget raises ``InstanceTooLarge`` instead of running
    on for hours.
    """
    side: dict[int, int] = {}
    for comp in _components(g.adj):
        side.update(_maxcut_component(g.adj, comp, cap))
    part = {v for v, s in side.items() if s == 1}
    return part, maxcut_value(g, part)


def matching_size(solution) -> int:
    return len(solution)


def mis_size(solution) -> int:
    return len(solution)


def maxcut_value(g: Graph, part: Iterable[int]) -> int:
    inside = np.zeros(g.n, dtype=bool)
    inside[list(part)] = True
    e = g.edge_array()
    if len(e) == 0:
        return 0
    return int(np.count_nonzero(inside[e[:, 0]] != inside[e[:, 1]]))


def check_feasible(problem: str, g: Graph, solution) -> None:
    """Raise ``ValueError`` if ``solution`` is not feasible for ``problem`` on ``g``."""
    edges = set(g.edges())
    if problem == "matching":
        used = set()
        for u, v in solution:
            if (min(u, v), max(u, v)) not in edges:
                raise ValueError(f"({u}, {v}) is not an edge")
            if u in used or v in used:
                raise ValueError(f"vertex of ({u}, {v}) matched twice")
            used.update((u, v))
    elif problem == "mis":
        s = set(solution)
        for u, v in edges:
            if u in s and v in s:
                raise ValueError(f"edge ({u}, {v}) inside the independent set")
    elif problem == "maxcut":
        for u, v in solution:
            if (min(u, v), max(u, v)) not in edges:
                raise ValueError(f"({u}, {v}) is not an edge")
    else:
        raise ValueError(f"unknown problem {problem!r}")


# clustering-based pipeline


def _induced(g: Graph, members: Sequence[int]) -> tuple[list[list[int]], list[int]]:
    members = sorted(members)
    local = {v: i for i, v in enumerate(members)}
    adj = [[local[u] for u in g.adj[v] if u in local] for v in members]
    return adj, members


def _cluster_value(problem: str, g: Graph, cap: int):
    def value(members: frozenset) -> float:
        adj, _ = _induced(g, members)
        if problem == "matching":
            return float(sum(1 for v, m in enumerate(max_matching(adj)) if m > v))
        if problem == "mis":
            return float(sum(len(_mis_component(adj, comp, cap)) for comp in _components(adj)))
        side = {}
        for comp in _components(adj):
            side.update(_maxcut_component(adj, comp, cap))
        return float(sum(1 for v in range(len(adj)) for u in adj[v] if u > v and side[u] != side[v]))

    return value


def solve_on_clustering(problem: str, g: Graph, c: Clustering, cap: int = 64) -> tuple[list, int, int]:
    """Exact per-cluster solutions joined over the clustering; returns ``(solution, value, crossing)``."""
    if problem not in PROBLEMS:
        raise ValueError(f"unknown problem {problem!r}")
    center = c.center_of
    crossing = [(u, v) for u, v in g.edges() if center[u] != center[v]]
    chosen: set = set()
    side = np.zeros(g.n, dtype=np.int8)
    for s, members in c.members().items():
        adj, verts = _induced(g, members)
        try:
            if problem == "matching":
                mate = max_matching(adj)
                chosen.update((verts[v], verts[m]) for v, m in enumerate(mate) if m > v)
            elif problem == "mis":
                for comp in _components(adj):
                    chosen.update(verts[v] for v in _mis_component(adj, comp, cap))
            else:
                for comp in _components(adj):
                    for v, x in _maxcut_component(adj, comp, cap).items():
                        side[verts[v]] = x
        except InstanceTooLarge as exc:
            raise InstanceTooLarge(f"cluster of center {s}: {exc}", cluster=s) from None
    if problem == "matching":
        sol = sorted(chosen)
        return sol, len(sol), len(crossing)
    if problem == "mis":
        ids = g.ids
        for u, v in crossing:
            if u in chosen and v in chosen:
                chosen.discard(u if ids[u] > ids[v] else v)
        sol = sorted(chosen)
        return sol, len(sol), len(crossing)
    sol = [(u, v) for u, v in g.edges() if side[u] != side[v]]
    return sol, len(sol), len(crossing)


def scale_for(epsilon: float, c_R: float = 4.0) -> int:
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    return max(1, math.ceil(c_R / epsilon - 1e-12))


def _opt(problem: str, g: Graph, cap: int) -> int | None:
    try:
        if problem == "matching":
            return len(exact_matching(g))
        if problem == "mis":
            return len(exact_mis(g, cap))
        return exact_maxcut(g, cap)[1]
    except InstanceTooLarge:
        return None


def approx_solve(
    problem: str,
    g: Graph,
    epsilon: float,
    mode: str = "randomized",
    seed=None,
    c_R: float = 4.0,
    cap: int = 64,
    with_opt: bool = False,
) -> ApproxResult:
    """Cluster at ``R = ceil(c_R / epsilon)``, solve every cluster exactly, join.

    ``randomized`` uses uniformly shifted MIS-Voronoi clustering. In
    ``derandomized`` mode the shifts are fixed one center at a time so that
    the exact conditional expectation of the objective never decreases: the
    sum of per-cluster optima for matching and cut, and that sum minus the
    number of crossing edges for independent set (each crossing edge costs
    the repair at most one vertex).
    """
    if problem not in PROBLEMS:
        raise ValueError(f"unknown problem {problem!r}")
    R = scale_for(epsilon, c_R)
    extra = {}
    if mode == "randomized":
        c = mis_voronoi(g, R, "uniform", seed=seed)
    elif mode == "derandomized":
        weight = 1.0 if problem == "mis" else 0.0
        res = derandomize(g, R, cluster_value=_cluster_value(problem, g, cap), crossing_weight=weight)
        c = res.clustering
        extra = {"initial_expectation": res.initial_expectation, "final_objective": res.final_value}
        seed = None
    else:
        raise ValueError(f"unknown mode {mode!r}")
    sol, value, crossing = solve_on_clustering(problem, g, c, cap)
    check_feasible(problem, g, sol)
    opt = _opt(problem, g, cap) if with_opt else None
    return ApproxResult(problem, sol, value, epsilon, mode, seed, R, opt, c.cluster_count, crossing, extra)


def approx_solve_mpx(
    problem: str,
    g: Graph,
    epsilon: float,
    seed=None,
    c_R: float = 4.0,
    cap: int = 64,
    with_opt: bool = False,
) -> ApproxResult:
    """Same pipeline over exponential-shift clustering with the ``C ln R`` cutoff."""
    if problem not in PROBLEMS:
        raise ValueError(f"unknown problem {problem!r}")
    R = scale_for(epsilon, c_R)
    c = mpx(g, MpxParams(R, "ln-R"), seed=seed)
    sol, value, crossing = solve_on_clustering(problem, g, c, cap)
    check_feasible(problem, g, sol)
    opt = _opt(problem, g, cap) if with_opt else None
    return ApproxResult(problem, sol, value, epsilon, "randomized-mpx", seed, R, opt, c.cluster_count, crossing)


def write_results_csv(results: Iterable[ApproxResult], header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=RESULT_CSV_HEADER, lineterminator="\n")
    if header:
        w.writeheader()
    for r in results:
        w.writerow(r.csv_row())
    return buf.getvalue()
