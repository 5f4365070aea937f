"""
Energy in the sleeping model
============================

Build the multi-scale hierarchy on a cycle and a grid with the distributed
simulator, and look at how the worst per-vertex energy grows with the level
count while the number of rounds grows much faster.
"""
from __future__ import annotations

from lowdist.distalgo import DOWNCAST, UPCAST, dist_cluster_op, multi_scale, ruling_hierarchy
from lowdist.clustering import mis_voronoi
from lowdist.graph import gen_cycle, gen_grid
from lowdist.simkernel import energy_report

for name, g in (("cycle-1024", gen_cycle(1024)), ("grid-24x24", gen_grid([24, 24]))):
    res = multi_scale(g, 5, "luby", seed=2)
    print(name)
    print("  energy after each level:", res.energy_by_level)
    print("  rounds after each level:", res.rounds_by_level)

# %%
# A single DOWNCAST or UPCAST over a depth-d cluster tree takes d rounds but
# wakes each vertex at most twice.
g = gen_grid([30, 30])
c = mis_voronoi(g, 6)
for kind in (DOWNCAST, UPCAST):
    sim = dist_cluster_op(kind, g, c, values=list(range(g.n))).run
    rep = energy_report(sim)
    print(f"{kind}: rounds {sim.rounds_used}, max energy {rep.max}, mean {rep.mean:.2f}")

# %%
# Ruling sets at scales 1, 2, 4, ... in CONGEST.
h = ruling_hierarchy(gen_grid([20, 20]), 3, "CONGEST", seed=0)
print("ruling level sizes:", [len(s) for s in h.levels], "max energy", energy_report(h.run).max)
