"""Distance distortion, crossing edges, cluster diameters and the cycle
pathology statistics of exponential-shift clustering.
"""
from __future__ import annotations

import csv
import io
from collections import Counter, deque
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse.csgraph import shortest_path

from . import __version__
from .clustering import Clustering, MpxParams, cluster_graph, mpx
from .errors import NotACycle
from .graph import Graph, gen_cycle

__all__ = [
    "MetricsReport",
    "DistortionResult",
    "distortion",
    "cluster_diameters",
    "crossing_stats",
    "longest_singleton_run",
    "analyze",
    "mpx_pathology_cycle",
    "CSV_HEADER",
    "report_row",
    "write_metrics_csv",
]


@dataclass(frozen=True)
class DistortionResult:
    distortion: float
    cond1_value: float
    cond2_value: float
    max_cluster_diameter: int
    cond1_exact: bool


@dataclass(frozen=True)
class MetricsReport:
    scale: float
    distortion: float
    cond1_value: float
    cond1_exact: bool
    max_cluster_diameter: int
    cond2_value: float
    crossing_edges: int
    crossing_fraction: float
    cluster_count: int
    cluster_size_histogram: dict = field(default_factory=dict)
    longest_singleton_run: int | None = None


def _hop_matrix(g: Graph, rows: np.ndarray) -> np.ndarray:
    return shortest_path(g.csr(), method="D", unweighted=True, indices=rows)


def _cond1(g: Graph, c: Clustering, rows: np.ndarray, extra_pairs: np.ndarray | None, chunk: int) -> float:
    R = float(c.scale)
    q, node = cluster_graph(g, c)
    dq = shortest_path(q.csr(), method="D", unweighted=True)
    worst = 1.0
    for start in range(0, len(rows), chunk):
        block = rows[start:start + chunk]
        d = _hop_matrix(g, block)
        dp = dq[node[block]][:, node]
        ratio = (1.0 + d / R) / (1.0 + dp)
        worst = max(worst, float(ratio.max()), float((1.0 / ratio).max()))
    if extra_pairs is not None and len(extra_pairs):
        # adjacent pairs: d = 1, d' is 0 or 1
        dp = dq[node[extra_pairs[:, 0]], node[extra_pairs[:, 1]]]
        ratio = (1.0 + 1.0 / R) / (1.0 + dp)
        worst = max(worst, float(ratio.max()), float((1.0 / ratio).max()))
    return worst


def _tree_diameter(adj_sub: Mapping[int, list[int]], start: int) -> int:
    def far(src):
        dist = {src: 0}
        q = deque([src])
        last = src
        while q:
            x = q.popleft()
            last = x
            for y in adj_sub[x]:
                if y not in dist:
                    dist[y] = dist[x] + 1
                    q.append(y)
        return last, dist[last]

    x, _ = far(start)
    _, d = far(x)
    return d


def cluster_diameters(g: Graph, c: Clustering) -> np.ndarray:
    """Strong diameter (inside the induced subgraph) of every cluster, in ``centers`` order."""
    out = np.zeros(c.cluster_count, dtype=np.int64)
    members = c.members()
    A = g.csr()
    for i, s in enumerate(c.centers):
        mem = members[s]
        if len(mem) == 1:
            continue
        inside = set(mem)
        adj_sub = {v: [u for u in g.adj[v] if u in inside] for v in mem}
        edges = sum(len(a) for a in adj_sub.values()) // 2
        if edges == len(mem) - 1:
            out[i] = _tree_diameter(adj_sub, mem[0])
        else:
            sub = A[mem][:, mem]
            d = shortest_path(sub, method="D", unweighted=True)
            out[i] = int(d.max())
    return out


def distortion(g: Graph, c: Clustering, sample_rows: int | None = None, seed=None, chunk: int = 256) -> DistortionResult:
    """Distance distortion ``max(1, cond1, cond2)`` of a clustering at its scale.

    ``cond1`` is the worst of ``(1 + d/R) / (1 + d')`` and its inverse over all
    vertex pairs, ``d'`` being the distance between the clusters in the cluster
    graph. ``cond2`` is the largest strong cluster diameter divided by ``R``.
    With ``sample_rows`` set, ``cond1`` uses all pairs from that many random
    source vertices plus every adjacent pair and is only a lower bound.
    """
    if sample_rows is None or sample_rows >= g.n:
        rows = np.arange(g.n)
        extra = None
        exact = True
    else:
        rng = np.random.default_rng(seed)
        rows = np.sort(rng.choice(g.n, size=sample_rows, replace=False))
        extra = g.edge_array()
        exact = False
    c1 = _cond1(g, c, rows, extra, chunk)
    diam = cluster_diameters(g, c)
    max_diam = int(diam.max()) if len(diam) else 0
    c2 = max_diam / float(c.scale)
    return DistortionResult(max(1.0, c1, c2), c1, c2, max_diam, exact)


def crossing_stats(g: Graph, c: Clustering) -> tuple[int, float, np.ndarray]:
    """Number and fraction of crossing edges, plus a flag per edge of ``g.edges()``."""
    e = g.edge_array()
    if len(e) == 0:
        return 0, 0.0, np.zeros(0, dtype=bool)
    flags = c.center_of[e[:, 0]] != c.center_of[e[:, 1]]
    count = int(flags.sum())
    return count, count / len(e), flags


def _cycle_order(g: Graph) -> list[int]:
    if not g.is_cycle():
        raise NotACycle("the graph is not a cycle")
    order = [0]
    prev, cur = -1, 0
    for _ in range(g.n - 1):
        a, b = g.adj[cur]
        nxt = a if a != prev else b
        prev, cur = cur, nxt
        order.append(cur)
    return order


def longest_singleton_run(g: Graph, c: Clustering) -> int:
    """Longest run of consecutive single-vertex clusters around a cycle."""
    order = _cycle_order(g)
    sizes = c.sizes()[c.cluster_index()]
    single = [sizes[v] == 1 for v in order]
    if all(single):
        return g.n
    k = single.index(False)
    rotated = single[k + 1:] + single[:k + 1]
    best = run = 0
    for s in rotated:
        run = run + 1 if s else 0
        best = max(best, run)
    return best


def analyze(g: Graph, c: Clustering, sample_rows: int | None = None, seed=None) -> MetricsReport:
    dist = distortion(g, c, sample_rows, seed)
    count, frac, _ = crossing_stats(g, c)
    hist = dict(sorted(Counter(c.sizes().tolist()).items()))
    run = longest_singleton_run(g, c) if g.is_cycle() else None
    return MetricsReport(
        scale=c.scale,
        distortion=dist.distortion,
        cond1_value=dist.cond1_value,
        cond1_exact=dist.cond1_exact,
        max_cluster_diameter=dist.max_cluster_diameter,
        cond2_value=dist.cond2_value,
        crossing_edges=count,
        crossing_fraction=frac,
        cluster_count=c.cluster_count,
        cluster_size_histogram=hist,
        longest_singleton_run=run,
    )


def _cycle_arc_diameters(n: int, c: Clustering) -> int:
    # clusters of a cycle are arcs, so the diameter is the arc length minus one
    sizes = c.sizes()
    if len(sizes) == 1:
        return n // 2
    return int(sizes.max()) - 1


def mpx_pathology_cycle(n: int, R: float, trials: int, seed=None, weights=None, params: MpxParams | None = None) -> dict:
    """Per-trial largest cluster diameter over ``R`` and longest singleton run
    of ``ln n``-cutoff exponential-shift clustering on the cycle ``C_n``.

    ``weights`` fixes the shifts for every trial instead of sampling them.
    """
    g = gen_cycle(n)
    params = params or MpxParams(R, "ln-n")
    seeds = np.random.SeedSequence(seed).spawn(trials)
    diam = np.zeros(trials)
    runs = np.zeros(trials, dtype=np.int64)
    for t in range(trials):
        c = mpx(g, params, seed=seeds[t], weights=weights)
        diam[t] = _cycle_arc_diameters(n, c) / params.R
        runs[t] = longest_singleton_run(g, c)
    return {"max_diam_over_R": diam, "longest_singleton_run": runs}


CSV_HEADER = (
    "version",
    "graph",
    "algorithm",
    "R",
    "seed",
    "n",
    "m",
    "distortion",
    "cond1_value",
    "cond1_exact",
    "cond2_value",
    "max_cluster_diameter",
    "crossing_edges",
    "crossing_fraction",
    "cluster_count",
    "longest_singleton_run",
)


def report_row(report: MetricsReport, graph: str, algorithm: str, seed, n: int, m: int) -> dict:
    row = {k: v for k, v in asdict(report).items() if k in CSV_HEADER}
    row.update(version=__version__, graph=graph, algorithm=algorithm, R=report.scale, seed=seed, n=n, m=m)
    if row.get("longest_singleton_run") is None:
        row["longest_singleton_run"] = ""
    return {k: row[k] for k in CSV_HEADER}


def write_metrics_csv(rows: Iterable[Mapping], dest=None, header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_HEADER, lineterminator="\n")
    if header:
        w.writeheader()
    for row in rows:
        w.writerow({k: _fmt(row[k]) for k in CSV_HEADER})
    text = buf.getvalue()
    if dest is not None:
        with open(dest, "a" if not header else "w") as fh:
            fh.write(text)
    return text


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, (np.floating,)):
        return repr(float(x))
    return x
