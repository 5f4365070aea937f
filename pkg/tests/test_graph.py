from __future__ import annotations

import io
import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lowdist.errors import CouldNotConnect, DisconnectedGraph, MissingCoordinates
from lowdist.graph import (
    Graph,
    ball,
    bfs_distances,
    check_density,
    estimate_independence,
    gen_comb,
    gen_cycle,
    gen_grid,
    gen_path,
    gen_random_geometric,
    gen_random_regular,
    girth,
    log_star,
    power_graph,
    read_edgelist,
    write_edgelist,
)


def to_nx(g: Graph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges())
    return h


def edge_set(g: Graph) -> set[tuple[int, int]]:
    return {tuple(sorted(e)) for e in g.edges()}


@st.composite
def connected_graphs(draw, max_n=40):
    n = draw(st.integers(1, max_n))
    # random spanning tree plus extra edges keeps every draw connected
    parents = [draw(st.integers(0, v - 1)) for v in range(1, n)]
    edges = {(p, v) for v, p in zip(range(1, n), parents)}
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=2 * n))
    edges |= {(min(a, b), max(a, b)) for a, b in extra if a != b}
    return Graph.from_edges(n, sorted(edges))


# distances and balls


def test_bfs_path():
    assert dict(enumerate(bfs_distances(gen_path(3), 0))) == {0: 0, 1: 1, 2: 2}


def test_bfs_cycle_antipode():
    assert bfs_distances(gen_cycle(12), 0)[6] == 6


def test_bfs_grid_corner_matches_all_pairs():
    g = gen_grid([3, 3])
    apsp = dict(nx.all_pairs_shortest_path_length(to_nx(g)))
    assert max(bfs_distances(g, 0)) == max(apsp[0].values()) == 4


def test_bfs_disconnected_raises():
    g = Graph.from_edges(3, [(0, 1)], check_connected=False)
    with pytest.raises(DisconnectedGraph):
        bfs_distances(g, 0)


def test_disconnected_graph_rejected_by_default():
    with pytest.raises(DisconnectedGraph):
        Graph.from_edges(3, [(0, 1)])


def test_ball_radius_zero():
    g = gen_grid([4, 5])
    assert all(ball(g, v, 0) == {v} for v in range(g.n))


def test_ball_cycle():
    assert ball(gen_cycle(12), 0, 2) == {10, 11, 0, 1, 2}


def test_ball_comb_tooth_tip_matches_bfs_oracle():
    g = gen_comb(3, 3)
    tip = 3 + 3 - 1  # last vertex of the first tooth
    lengths = nx.single_source_shortest_path_length(to_nx(g), tip, cutoff=2)
    assert ball(g, tip, 2) == set(lengths)
    assert ball(g, tip, 2) == {3, 4, 5}


@settings(max_examples=40, deadline=None)
@given(connected_graphs(), st.integers(0, 5))
def test_ball_matches_power_graph_neighborhood(g, r):
    if r == 0:
        return
    p = power_graph(g, r)
    for v in range(g.n):
        assert ball(g, v, r) == set(p.adj[v]) | {v}


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 60), st.integers(0, 40))
def test_cycle_ball_growth(n, r):
    g = gen_cycle(n)
    assert all(len(ball(g, v, r)) == min(2 * r + 1, n) for v in range(0, n, 7))


# power graphs


def test_power_graph_path():
    assert edge_set(power_graph(gen_path(4), 2)) == {(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)}


def test_power_graph_identity():
    g = gen_grid([3, 4])
    assert edge_set(power_graph(g, 1)) == edge_set(g)


def test_power_graph_cycle_six_regular():
    p = power_graph(gen_cycle(12), 3)
    h = nx.power(to_nx(gen_cycle(12)), 3)
    assert p.n == 12 and {len(a) for a in p.adj} == {6}
    assert edge_set(p) == {tuple(sorted(e)) for e in h.edges()}


@settings(max_examples=30, deadline=None)
@given(connected_graphs(30), st.integers(1, 4), st.integers(0, 3))
def test_power_graph_monotone(g, r1, extra):
    assert edge_set(power_graph(g, r1)) <= edge_set(power_graph(g, r1 + extra))


# generators


def test_small_generators():
    c = gen_cycle(4)
    assert (c.n, c.m) == (4, 4)
    grid = gen_grid([3, 3])
    assert (grid.n, grid.m) == (9, 12)
    assert grid.adj[0] and set(grid.adj[4]) == {1, 3, 5, 7}


def test_torus_side_two_collapses_to_cube():
    g = gen_grid([2, 2, 2], torus=True)
    assert (g.n, g.m) == (8, 12)
    assert {len(a) for a in g.adj} == {3}
    assert nx.is_isomorphic(to_nx(g), nx.hypercube_graph(3))


def test_torus_matches_networkx():
    g = gen_grid([4, 5], torus=True)
    assert nx.is_isomorphic(to_nx(g), nx.grid_2d_graph(4, 5, periodic=True))


def test_comb_counts():
    g = gen_comb(1, 3)
    assert (g.n, g.m) == (6, 5)
    assert (gen_comb(3, 3).n, gen_comb(3, 3).m) == (12, 11)
    assert nx.is_tree(to_nx(gen_comb(3, 3)))
    assert edge_set(gen_comb(0, 5)) == edge_set(gen_path(5))


def test_comb_coordinates_realize_unit_disk_graph():
    g = gen_comb(4, 6)
    d = np.linalg.norm(g.coords[:, None, :] - g.coords[None, :, :], axis=-1)
    close = {(u, v) for u, v in zip(*np.nonzero(d <= 1.0 + 1e-9)) if u < v}
    assert close == edge_set(g)


def test_rgg_forced_edge():
    g = gen_random_geometric(2, 2, 10.0, seed=0)
    assert g.m == 1


def test_rgg_deterministic_and_connected():
    r = 3 * np.sqrt(np.log(100))
    a = gen_random_geometric(100, 2, r, seed=7)
    b = gen_random_geometric(100, 2, r, seed=7)
    assert a.is_connected() and edge_set(a) == edge_set(b)


def test_rgg_tiny_radius_fails():
    with pytest.raises(CouldNotConnect):
        gen_random_geometric(50, 2, 1e-6, seed=1, max_retries=5)


def test_random_regular_k4():
    g = gen_random_regular(4, 3, seed=0)
    assert edge_set(g) == set(itertools.combinations(range(4), 2))
    assert girth(g) == 3


def test_random_regular_girth_matches_oracle():
    g = gen_random_regular(1000, 3, seed=11)
    assert {len(a) for a in g.adj} == {3}
    assert girth(g) == nx.girth(to_nx(g))
    assert girth(g) >= 3


def test_girth_simple_cases():
    assert girth(gen_cycle(12)) == 12
    assert girth(gen_grid([3, 3])) == 4
    assert girth(gen_path(4)) is None


@settings(max_examples=40, deadline=None)
@given(connected_graphs(25))
def test_girth_matches_networkx(g):
    expected = nx.girth(to_nx(g))
    assert girth(g) == (None if expected == float("inf") else expected)


# density and independence


def test_density_coincident_points():
    g = Graph.from_edges(2, [(0, 1)], coords=np.zeros((2, 2)))
    assert check_density(g, 100.0)


def test_density_far_points():
    g = Graph.from_edges(2, [(0, 1)], coords=np.array([[0.0, 0.0], [10.0, 0.0]]))
    assert not check_density(g, 4.0)


def test_density_unit_grid():
    pts = np.array([[x, y] for x in range(11) for y in range(11)], dtype=float)
    g = gen_grid([11, 11])
    g = Graph(g.n, g.adj, coords=pts)
    # the cell center is sqrt(2)/2 away from every grid point
    assert not check_density(g, 4.0)
    assert check_density(g, 1.0)
    assert not check_density(g, 1.5)


def test_density_needs_coordinates():
    with pytest.raises(MissingCoordinates):
        check_density(gen_cycle(5), 1.0)


def brute_independence(g: Graph, R: int, r: int, v: int) -> int:
    region = sorted(ball(g, v, r * R))
    far = {(a, b) for a, b in itertools.combinations(region, 2) if b not in ball(g, a, R)}
    best = 1
    for k in range(2, len(region) + 1):
        if not any(all((a, b) in far for a, b in itertools.combinations(s, 2)) for s in itertools.combinations(region, k)):
            break
        best = k
    return best


def test_independence_cycle():
    est = estimate_independence(gen_cycle(12), 3, 1, 0)
    assert est.exact and est.value == brute_independence(gen_cycle(12), 3, 1, 0) == 2


def test_independence_large_R_is_one():
    g = gen_grid([4, 4])
    assert estimate_independence(g, g.diameter(), 2, 5).value == 1


def clique_oracle(g: Graph, R: int, r: int, v: int) -> int:
    # independent sets of the conflict graph are cliques of its complement
    region = sorted(ball(g, v, r * R))
    h = nx.Graph()
    h.add_nodes_from(region)
    h.add_edges_from((a, b) for a, b in itertools.combinations(region, 2) if b not in ball(g, a, R))
    return len(nx.max_weight_clique(h, weight=None)[0])


def test_independence_comb_grows_with_R():
    g = gen_comb(20, 20)
    ests = {R: estimate_independence(g, R, 2, 10) for R in (2, 3, 5)}
    assert all(e.exact for e in ests.values())
    assert [ests[R].value for R in (2, 3, 5)] == [8, 14, 22]
    assert ests[2].value == clique_oracle(g, 2, 2, 10)
    assert ests[3].value == clique_oracle(g, 3, 2, 10)
    small = gen_comb(3, 5)
    assert estimate_independence(small, 2, 2, 2).value == brute_independence(small, 2, 2, 2)


def test_independence_greedy_flag():
    g = gen_comb(20, 20)
    est = estimate_independence(g, 8, 2, 10)
    exact = estimate_independence(g, 8, 2, 10, exact_cap=300)
    assert not est.exact and exact.exact
    assert est.value <= exact.value == 27


@settings(max_examples=20, deadline=None)
@given(st.integers(6, 40), st.integers(1, 6), st.integers(1, 3))
def test_independence_cycle_bound(n, R, r):
    assert estimate_independence(gen_cycle(n), R, r, 0).value <= 3 * r


def test_log_star():
    assert (log_star(1), log_star(2), log_star(65536)) == (0, 1, 4)
    assert log_star(16) == 3 and log_star(65537) == 5


# file format


def test_edgelist_round_trip():
    g = gen_random_geometric(30, 2, 2.0, seed=4)
    buf = io.StringIO()
    write_edgelist(g, buf)
    assert buf.getvalue().startswith(f"{g.n} {g.m}\n")
    h = read_edgelist(io.StringIO(buf.getvalue()))
    assert edge_set(h) == edge_set(g)
    assert np.array_equal(h.coords, g.coords)
