"""Low-distortion graph clustering and an energy-aware distributed simulator."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .graph import (  # noqa: E402
    Graph,
    ball,
    bfs_distances,
    bounded_bfs,
    gen_comb,
    gen_cycle,
    gen_grid,
    gen_path,
    gen_random_geometric,
    gen_random_regular,
    power_graph,
    read_edgelist,
    write_edgelist,
)
from .clustering import (  # noqa: E402
    Clustering,
    MpxParams,
    cluster_graph,
    derandomize,
    derandomized_start_times,
    mis_power_graph,
    mis_voronoi,
    mpx,
    read_clustering,
    voronoi,
    weighted_voronoi,
    write_clustering,
)
from .metrics import analyze, crossing_stats, distortion, mpx_pathology_cycle  # noqa: E402
from .simkernel import CONGEST, LOCAL, RADIO, ModelSpec, Packet, VertexProgram, run  # noqa: E402
from .optimize import ApproxResult, approx_solve, approx_solve_mpx, exact_matching, exact_maxcut, exact_mis  # noqa: E402
