"""
Clustering a cycle and a grid at several scales
===============================================

Compare the MIS-Voronoi clustering (fixed start times) with the
exponential-shift clustering on the same graphs, and watch how the
distortion, the cluster diameters and the fraction of cut edges move
with the scale R.
"""
from __future__ import annotations

import numpy as np

from lowdist.clustering import MpxParams, derandomized_start_times, expected_crossings, mis_voronoi, mpx
from lowdist.graph import gen_cycle, gen_grid
from lowdist.metrics import analyze, mpx_pathology_cycle

graphs = {"cycle-2000": gen_cycle(2000), "grid-40x40": gen_grid([40, 40])}

# distortion stays bounded for MIS-Voronoi while the cut fraction halves with R
print(f"{'graph':12s} {'algo':12s} {'R':>3s} {'dist':>6s} {'diam/R':>7s} {'cut':>7s} {'clusters':>8s}")
for name, g in graphs.items():
    for R in (4, 8, 16):
        for algo, c in (("mis-voronoi", mis_voronoi(g, R, "uniform", seed=1)), ("mpx", mpx(g, MpxParams(R, "ln-n"), seed=1))):
            rep = analyze(g, c, sample_rows=200, seed=0)
            print(f"{name:12s} {algo:12s} {R:3d} {rep.distortion:6.2f} {rep.cond2_value:7.2f} {rep.crossing_fraction:7.4f} {rep.cluster_count:8d}")

# %%
# The exponential shifts leave long runs of singleton clusters and a few
# huge clusters on a long cycle; both grow with n.
for n in (2000, 20000):
    r = mpx_pathology_cycle(n, 8, 10, seed=3)
    print(f"n={n}: median longest singleton run {np.median(r['longest_singleton_run']):.0f}, "
          f"median max diam/R {np.median(r['max_diam_over_R']):.2f}")

# %%
# Fixing start times one vertex at a time never lets the expected number of
# cut edges go up, so the final clustering cuts at most the expectation.
g = gen_cycle(600)
R = 20
before = expected_crossings(g, R)
c = derandomized_start_times(g, R)
after = int(np.count_nonzero(c.center_of[g.edge_array()[:, 0]] != c.center_of[g.edge_array()[:, 1]]))
print(f"C600, R={R}: expected cut edges {before:.1f} -> fixed start times cut {after}")
