from __future__ import annotations

import io
import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lowdist.clustering import (
    Clustering,
    MpxParams,
    WeightAssignment,
    cluster_graph,
    competition_graph,
    derandomize,
    derandomized_start_times,
    expected_crossings,
    greedy_coloring,
    mis_power_graph,
    mis_voronoi,
    mpx,
    mpx_weights,
    read_clustering,
    singleton_clustering,
    voronoi,
    weighted_voronoi,
    write_clustering,
)
from lowdist.errors import EmptyCenterSet, InvalidClustering
from lowdist.graph import Graph, bounded_bfs, gen_cycle, gen_grid, gen_path
from lowdist.metrics import cluster_diameters, crossing_stats


def all_pairs(g: Graph) -> list[list[int]]:
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges())
    lengths = dict(nx.all_pairs_shortest_path_length(h))
    return [[lengths[u][v] for v in range(g.n)] for u in range(g.n)]


def argmin_oracle(g: Graph, S, W) -> list[int]:
    """Center of every vertex by direct minimization of d(s, v) - W(s), ties to the smaller id."""
    d = all_pairs(g)
    return [min(S, key=lambda s: (d[s][v] - W.get(s, 0), s)) for v in range(g.n)]


def clusters(c: Clustering) -> dict[int, set[int]]:
    return {s: set(m) for s, m in c.members().items()}


@st.composite
def connected_graphs(draw, max_n=30):
    n = draw(st.integers(2, max_n))
    parents = [draw(st.integers(0, v - 1)) for v in range(1, n)]
    edges = {(p, v) for v, p in zip(range(1, n), parents)}
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=n))
    edges |= {(min(a, b), max(a, b)) for a, b in extra if a != b}
    return Graph.from_edges(n, sorted(edges))


# Voronoi


def test_voronoi_cycle_two_centers():
    c = voronoi(gen_cycle(12), [0, 6])
    assert clusters(c) == {0: {9, 10, 11, 0, 1, 2, 3}, 6: {4, 5, 6, 7, 8}}
    assert list(c.center_of) == argmin_oracle(gen_cycle(12), [0, 6], {})


def test_voronoi_identity_and_single_center():
    g = gen_grid([4, 4])
    assert voronoi(g, range(g.n)) == singleton_clustering(g)
    one = voronoi(g, [5])
    assert one.cluster_count == 1 and list(one.depth_of) == all_pairs(g)[5]


def test_voronoi_empty_centers():
    with pytest.raises(EmptyCenterSet):
        voronoi(gen_cycle(5), [])


def test_weighted_voronoi_cycle():
    c = weighted_voronoi(gen_cycle(12), [0, 6], {0: 0, 6: 2})
    assert c.center_of[2] == 0 and c.center_of[3] == 6
    assert list(c.center_of) == argmin_oracle(gen_cycle(12), [0, 6], {0: 0, 6: 2})


def test_weighted_voronoi_zero_weights_is_voronoi():
    g = gen_grid([5, 6])
    S = [0, 13, 29]
    assert weighted_voronoi(g, S, {s: 0 for s in S}) == voronoi(g, S)
    assert weighted_voronoi(g, S, WeightAssignment({s: 0 for s in S}, "zero")) == voronoi(g, S)


def test_weighted_voronoi_dominated_center_vanishes():
    c = weighted_voronoi(gen_path(2), [0, 1], {0: 0, 1: 5})
    assert c.centers == (1,) and list(c.center_of) == [1, 1]


def test_weighted_voronoi_equal_weights_gives_singletons():
    g = gen_grid([4, 4])
    c = weighted_voronoi(g, range(g.n), np.full(g.n, 3.0))
    assert c == singleton_clustering(g)


@settings(max_examples=60, deadline=None)
@given(connected_graphs(), st.data())
def test_weighted_voronoi_matches_argmin(g, data):
    S = sorted(data.draw(st.sets(st.integers(0, g.n - 1), min_size=1, max_size=g.n)))
    W = {s: data.draw(st.integers(0, 4)) for s in S}
    c = weighted_voronoi(g, S, W)
    c.validate(g)
    assert list(c.center_of) == argmin_oracle(g, S, W)
    d = all_pairs(g)
    assert [d[int(c.center_of[v])][v] for v in range(g.n)] == list(c.depth_of)


def test_weight_assignment_validation():
    with pytest.raises(ValueError):
        WeightAssignment({0: -1.0})
    with pytest.raises(ValueError):
        WeightAssignment({0: 5.0}, "exponential-truncated", cutoff=2.0)


# MIS of the power graph


def test_mis_power_graph_examples():
    assert mis_power_graph(gen_cycle(12), 3) == [0, 4, 8]
    g = gen_grid([3, 4])
    assert mis_power_graph(g, g.diameter()) == [0]
    assert mis_power_graph(gen_path(2), 1) == [0]


@settings(max_examples=40, deadline=None)
@given(connected_graphs(), st.integers(1, 5), st.sampled_from(["greedy-id", "luby"]), st.integers(0, 3))
def test_mis_power_graph_independent_and_maximal(g, R, strategy, seed):
    S = mis_power_graph(g, R, strategy, seed)
    d = all_pairs(g)
    assert all(d[a][b] > R for a, b in itertools.combinations(S, 2))
    assert all(min(d[s][v] for s in S) <= R for v in range(g.n))


def test_mis_luby_deterministic():
    g = gen_grid([10, 10])
    assert mis_power_graph(g, 3, "luby", 5) == mis_power_graph(g, 3, "luby", 5)


# MIS-Voronoi


def test_mis_voronoi_cycle():
    c = mis_voronoi(gen_cycle(12), 3, "zero")
    assert c.centers == (0, 4, 8)
    # ties at 2, 6 and 10 go to the smaller center id
    assert list(c.center_of) == argmin_oracle(gen_cycle(12), [0, 4, 8], {})
    assert list(c.sizes()) == [5, 4, 3]
    assert mis_voronoi(gen_cycle(12), 12).cluster_count == 1


def test_mis_voronoi_uniform_grid_diameter():
    g = gen_grid([20, 20])
    for seed in range(5):
        c = mis_voronoi(g, 4, "uniform", seed=seed)
        c.validate(g)
        assert cluster_diameters(g, c).max() <= 2.2 * 4


@pytest.mark.parametrize("R", [2, 3, 5, 8])
@pytest.mark.parametrize("g", [gen_cycle(101), gen_grid([13, 9]), gen_path(40)], ids=["cycle", "grid", "path"])
def test_mis_voronoi_cells(g, R):
    c = mis_voronoi(g, R, "zero")
    members = clusters(c)
    for s in c.centers:
        assert set(bounded_bfs(g, s, R // 2)) <= members[s] <= set(bounded_bfs(g, s, R))


def test_mis_voronoi_needs_integer_scale():
    with pytest.raises(ValueError):
        mis_voronoi(gen_cycle(12), 2.5)


# exponential shifts


def test_mpx_single_vertex():
    c = mpx(gen_path(1), MpxParams(3), seed=0)
    assert c.cluster_count == 1


def test_mpx_injected_weights():
    g = gen_cycle(12)
    w = np.zeros(12)
    w[0] = 5
    c = mpx(g, MpxParams(4), weights=w)
    assert list(c.center_of) == argmin_oracle(g, range(12), {0: 5})
    # at distance 5 vertex 5 ties between itself and center 0; the smaller id wins
    assert clusters(c)[0] == {7, 8, 9, 10, 11, 0, 1, 2, 3, 4, 5}


def test_mpx_deterministic_and_k2():
    g = gen_grid([8, 8])
    assert mpx(g, MpxParams(3), seed=9) == mpx(g, MpxParams(3), seed=9)
    k2 = gen_path(2)
    mpx(k2, MpxParams(1), seed=1).validate(k2)


def test_mpx_weights_are_exponential_and_truncated():
    p = MpxParams(10, "none")
    w = mpx_weights(200_000, p, seed=3)
    assert abs(w.mean() - 10) < 0.1
    assert abs(np.median(w) - 10 * math.log(2)) < 0.1
    cut = MpxParams(10, "ln-R")
    assert mpx_weights(10_000, cut, seed=3).max() <= cut.cutoff(10_000) == 4 * 10 * math.log(10)


def test_mpx_params_cutoffs():
    assert MpxParams(5, "ln-n").cutoff(100) == pytest.approx(4 * 5 * math.log(100))
    assert MpxParams(5, "ln-n", growth_exponent=1).cutoff(100) == pytest.approx(2.001 * 5 * math.log(100))
    assert MpxParams(1, "ln-R").cutoff(100) == 0.0
    with pytest.raises(ValueError):
        MpxParams(5, C_cutoff=1.0)


def test_mpx_edge_crossing_rate_small_sample():
    g = gen_cycle(10_000)
    fr = [crossing_stats(g, mpx(g, MpxParams(10), seed=s))[1] for s in range(20)]
    assert np.mean(fr) <= 1 - math.exp(-0.1) + 0.01


# conditional expectations


def brute_expected_crossings(g: Graph, R: int) -> float:
    S = mis_power_graph(g, R)
    wmax = R // 10
    total = 0.0
    combos = list(itertools.product(range(wmax + 1), repeat=len(S)))
    for ws in combos:
        c = weighted_voronoi(g, S, dict(zip(S, ws)), R)
        total += crossing_stats(g, c)[0]
    return total / len(combos)


@pytest.mark.parametrize("n,R", [(60, 20), (45, 20), (33, 10), (70, 30)])
def test_expected_crossings_matches_enumeration(n, R):
    g = gen_cycle(n)
    assert expected_crossings(g, R) == pytest.approx(brute_expected_crossings(g, R))


def test_expected_crossings_grid_matches_enumeration():
    g = gen_grid([9, 8])
    assert expected_crossings(g, 10) == pytest.approx(brute_expected_crossings(g, 10))


def test_derandomized_trivial_shift_space():
    g = gen_cycle(12)
    assert derandomized_start_times(g, 3) == mis_voronoi(g, 3, "zero")


def test_derandomized_dominates_expectation():
    g = gen_cycle(200)
    res = derandomize(g, 20)
    crossings = crossing_stats(g, res.clustering)[0]
    assert crossings <= expected_crossings(g, 20) + 1e-9
    assert res.initial_expectation == pytest.approx(-expected_crossings(g, 20))
    assert all(b >= a - 1e-9 for a, b in zip(res.history, res.history[1:]))
    assert res.final_value >= res.history[-1] - 1e-9


def test_derandomized_crossing_fraction_scale():
    g = gen_cycle(2000)
    frac = crossing_stats(g, derandomized_start_times(g, 50))[1]
    assert frac <= 4 / 50


def test_derandomized_grid_history_monotone():
    g = gen_grid([24, 24])
    res = derandomize(g, 20)
    assert all(b >= a - 1e-9 for a, b in zip(res.history, res.history[1:]))
    assert crossing_stats(g, res.clustering)[0] <= expected_crossings(g, 20) + 1e-9


def test_competition_graph_coloring_is_proper():
    g = gen_grid([30, 30])
    S = mis_power_graph(g, 4)
    star = competition_graph(g, S, 4)
    col = greedy_coloring(star)
    assert all(col[a] != col[b] for a in star for b in star[a])
    assert max(col.values()) <= max(len(v) for v in star.values())


# quotient graph and files


def test_cluster_graph_cases():
    g = gen_grid([3, 4])
    q, node = cluster_graph(g, singleton_clustering(g))
    assert sorted(map(sorted, q.edges())) == sorted(map(sorted, g.edges()))
    one = voronoi(g, [0])
    q1, _ = cluster_graph(g, one)
    assert (q1.n, q1.m) == (1, 0)
    q3, _ = cluster_graph(gen_cycle(12), mis_voronoi(gen_cycle(12), 3))
    assert (q3.n, q3.m) == (3, 3)


def test_clustering_file_round_trip():
    g = gen_grid([6, 7])
    c = mis_voronoi(g, 3, "uniform", seed=2)
    buf = io.StringIO()
    write_clustering(c, buf)
    assert buf.getvalue().startswith("clustering 3\n")
    assert read_clustering(io.StringIO(buf.getvalue())) == c


def test_corrupted_clustering_rejected():
    g = gen_cycle(12)
    c = mis_voronoi(g, 3)
    text = io.StringIO()
    write_clustering(c, text)
    lines = text.getvalue().splitlines()
    lines[2] = "1 4 1 0"  # vertex 1 claims center 4 with parent 0
    bad = read_clustering(io.StringIO("\n".join(lines)))
    with pytest.raises(InvalidClustering):
        bad.validate(g)
    with pytest.raises(InvalidClustering):
        read_clustering(io.StringIO("clusters 3\n0 0 0 0\n"))
