"""Distributed constructions run on the round-synchronous simulator."""
from .bootstrap import LevelResult, MultiScaleResult, NextLevelSolver, build_next_level, gather, measure_hops, multi_scale
from .clusterops import DOWNCAST, INTERCAST, UPCAST, ClusterOpResult, dist_cluster_op, op_plan, radio_cluster_op
from .cover import CoverMembership, CoverView, LocalSimResult, build_cover, simulate_local_algorithm, write_cover
from .mis import DistVoronoiResult, dist_mis_voronoi, luby_budget, private_shifts
from .ruling import RulingHierarchy, check_ruling, ruling_hierarchy, sequential_ruling_sets, write_hierarchy
from .views import BallMasks, ClusterLocalView, LocalView, clustering_from_views, views_from_clustering

__all__ = [
    "DOWNCAST",
    "UPCAST",
    "INTERCAST",
    "ClusterLocalView",
    "ClusterOpResult",
    "CoverMembership",
    "CoverView",
    "DistVoronoiResult",
    "LevelResult",
    "LocalSimResult",
    "MultiScaleResult",
    "RulingHierarchy",
    "BallMasks",
    "LocalView",
    "NextLevelSolver",
    "build_cover",
    "build_next_level",
    "check_ruling",
    "clustering_from_views",
    "dist_cluster_op",
    "dist_mis_voronoi",
    "gather",
    "luby_budget",
    "measure_hops",
    "multi_scale",
    "op_plan",
    "private_shifts",
    "radio_cluster_op",
    "ruling_hierarchy",
    "sequential_ruling_sets",
    "simulate_local_algorithm",
    "views_from_clustering",
    "write_cover",
    "write_hierarchy",
]
