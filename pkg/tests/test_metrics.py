from __future__ import annotations

import csv
import io
import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lowdist.clustering import Clustering, MpxParams, mis_voronoi, mpx, singleton_clustering, voronoi
from lowdist.errors import NotACycle
from lowdist.graph import Graph, gen_cycle, gen_grid, gen_path
from lowdist.metrics import (
    CSV_HEADER,
    analyze,
    cluster_diameters,
    crossing_stats,
    distortion,
    longest_singleton_run,
    mpx_pathology_cycle,
    report_row,
    write_metrics_csv,
)


def oracle_distortion(g: Graph, c: Clustering) -> tuple[float, float]:
    """cond1 and cond2 straight from the definition, using networkx distances."""
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges())
    d = dict(nx.all_pairs_shortest_path_length(h))
    q = nx.Graph()
    q.add_nodes_from(set(c.center_of.tolist()))
    q.add_edges_from((int(c.center_of[u]), int(c.center_of[v])) for u, v in g.edges() if c.center_of[u] != c.center_of[v])
    dq = dict(nx.all_pairs_shortest_path_length(q))
    R = c.scale
    cond1 = 1.0
    for v, w in itertools.product(range(g.n), repeat=2):
        ratio = (1 + d[v][w] / R) / (1 + dq[int(c.center_of[v])][int(c.center_of[w])])
        cond1 = max(cond1, ratio, 1 / ratio)
    diam = 0
    for s, mem in c.members().items():
        diam = max(diam, nx.diameter(h.subgraph(mem)))
    return cond1, diam / R


def p5_clustering() -> Clustering:
    # clusters {0,1}, {2,3}, {4} at scale 2
    return Clustering(2, [0, 0, 2, 2, 4], [0, 1, 0, 1, 0], [0, 0, 2, 2, 4])


def fan(n: int) -> tuple[Graph, Clustering]:
    """A path on n-1 vertices plus a hub adjacent to all of it; the path is one cluster."""
    p = n - 1
    edges = [(i, i + 1) for i in range(p - 1)] + [(i, p) for i in range(p)]
    g = Graph.from_edges(n, edges)
    c = Clustering(1, [0] * p + [p], list(range(p)) + [0], [0] + list(range(p - 1)) + [p])
    return g, c


def test_p5_distortion():
    res = distortion(gen_path(5), p5_clustering())
    assert res.cond1_value == pytest.approx(1.5)
    assert res.cond2_value == pytest.approx(0.5)
    assert res.distortion == pytest.approx(1.5)
    assert oracle_distortion(gen_path(5), p5_clustering()) == pytest.approx((1.5, 0.5))


def test_singleton_distortion_is_one_at_scale_one():
    g = gen_grid([5, 5])
    assert distortion(g, singleton_clustering(g, 1)).distortion == 1.0


def test_fan_needs_strong_diameter():
    n = 30
    g, c = fan(n)
    c.validate(g)
    res = distortion(g, c)
    assert res.cond1_value <= 3
    assert res.cond2_value == n - 2
    assert res.max_cluster_diameter == n - 2


@pytest.mark.parametrize("n,R", [(8, 4), (20, 5), (50, 10), (31, 3)])
def test_singleton_clustering_on_path_is_theta_R(n, R):
    res = distortion(gen_path(n), singleton_clustering(gen_path(n), R))
    expected = n / (1 + (n - 1) / R)
    assert res.distortion == pytest.approx(expected)
    assert R / 2 <= res.distortion <= R


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 40), st.integers(1, 6), st.sampled_from(["cycle", "path", "grid"]), st.integers(0, 5))
def test_distortion_matches_definition(n, R, family, seed):
    g = {"cycle": gen_cycle, "path": gen_path}.get(family, lambda k: gen_grid([k // 5 + 1, 5]))(n)
    c = mis_voronoi(g, R, "uniform", seed=seed)
    res = distortion(g, c)
    c1, c2 = oracle_distortion(g, c)
    assert res.cond1_value == pytest.approx(c1)
    assert res.cond2_value == pytest.approx(c2)
    assert res.distortion == pytest.approx(max(1.0, c1, c2)) and res.distortion >= 1


@settings(max_examples=15, deadline=None)
@given(st.integers(50, 300), st.integers(2, 12), st.integers(1, 40), st.integers(0, 100))
def test_sampled_cond1_is_a_lower_bound(n, R, rows, seed):
    g = gen_cycle(n)
    c = mis_voronoi(g, R)
    full = distortion(g, c)
    part = distortion(g, c, sample_rows=rows, seed=seed)
    assert full.cond1_exact and not part.cond1_exact
    assert part.cond1_value <= full.cond1_value + 1e-12


def test_cluster_diameters_match_networkx():
    g = gen_grid([12, 12])
    c = mis_voronoi(g, 4, "uniform", seed=3)
    h = nx.grid_2d_graph(12, 12)
    h = nx.convert_node_labels_to_integers(h, ordering="sorted")
    expected = [nx.diameter(h.subgraph(c.members()[s])) for s in c.centers]
    assert cluster_diameters(g, c).tolist() == expected


def test_crossing_stats_examples():
    g = gen_cycle(12)
    arcs = voronoi(g, [1, 5, 9])
    count, frac, flags = crossing_stats(g, arcs)
    assert (count, frac) == (3, 0.25) and flags.sum() == 3
    assert crossing_stats(g, voronoi(g, [0]))[0] == 0
    c = gen_cycle(1000)
    cl = mis_voronoi(c, 10)
    assert crossing_stats(c, cl)[1] == cl.cluster_count / 1000


def test_longest_singleton_run():
    g = gen_cycle(10)
    # singletons at 3, 4, 5 and at 9, 0; the run across the wrap point counts
    center = [0, 1, 1, 3, 4, 5, 6, 6, 6, 9]
    depth = [0, 0, 1, 0, 0, 0, 0, 1, 2, 0]
    parent = [0, 1, 1, 3, 4, 5, 6, 6, 7, 9]
    c = Clustering(1, center, depth, parent)
    c.validate(g)
    assert longest_singleton_run(g, c) == 3
    wrap = Clustering(1, [0, 1, 1, 1, 1, 5, 5, 7, 8, 9], [0, 0, 1, 2, 3, 0, 1, 0, 0, 0], [0, 1, 1, 2, 3, 5, 5, 7, 8, 9])
    wrap.validate(g)
    assert longest_singleton_run(g, wrap) == 4  # vertices 7, 8, 9, 0
    with pytest.raises(NotACycle):
        longest_singleton_run(gen_path(5), singleton_clustering(gen_path(5)))


def test_pathology_equal_weights_gives_singletons():
    r = mpx_pathology_cycle(50, 3, 2, seed=0, weights=np.full(50, 2.0))
    assert list(r["longest_singleton_run"]) == [50, 50]
    assert list(r["max_diam_over_R"]) == [0.0, 0.0]


def test_pathology_statistics_match_direct_computation():
    n, R = 2000, 4
    r = mpx_pathology_cycle(n, R, 3, seed=5)
    g = gen_cycle(n)
    seeds = np.random.SeedSequence(5).spawn(3)
    for t in range(3):
        c = mpx(g, MpxParams(R, "ln-n"), seed=seeds[t])
        assert r["longest_singleton_run"][t] == longest_singleton_run(g, c)
        assert r["max_diam_over_R"][t] == cluster_diameters(g, c).max() / R


def test_pathology_rejects_non_cycles():
    with pytest.raises(NotACycle):
        longest_singleton_run(gen_grid([3, 3]), singleton_clustering(gen_grid([3, 3])))


def test_analyze_report_and_csv():
    g = gen_cycle(300)
    c = mis_voronoi(g, 8, "uniform", seed=1)
    rep = analyze(g, c)
    assert rep.distortion == max(1.0, rep.cond1_value, rep.cond2_value)
    assert rep.crossing_fraction == rep.crossing_edges / g.m
    assert sum(k * v for k, v in rep.cluster_size_histogram.items()) == g.n
    assert rep.longest_singleton_run == 0
    assert analyze(gen_grid([5, 5]), mis_voronoi(gen_grid([5, 5]), 2)).longest_singleton_run is None
    row = report_row(rep, "cycle-300", "mis-voronoi-uniform", 1, g.n, g.m)
    text = write_metrics_csv([row])
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert tuple(parsed[0]) == CSV_HEADER
    assert float(parsed[0]["distortion"]) == rep.distortion
    assert parsed[0]["seed"] == "1" and parsed[0]["R"] == "8"
