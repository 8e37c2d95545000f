"""Derive data/case118.m from the stock MATPOWER/PYPOWER IEEE 118-bus case.

The stock case ships with unlimited line ratings (9900 MW) and quadratic
costs. This script keeps topology, reactances, demands and generator limits
and replaces:

  * generator cost by the linear coefficient c1 + c2 * Pmax;
  * line ratings by 0.85 * |f| (rounded up to 10 MW, at least 50 MW), where
    f is the unconstrained DC-OPF flow at baseline demand; bridge lines get
    1.25 * |f| so that radial buses remain feasible under +10% demand.

Requires: pypower, numpy, scipy, networkx.
"""
import math
import sys

import networkx as nx
import numpy as np
from pypower.case118 import case118
from scipy.optimize import linprog
from scipy.sparse import lil_matrix


def main(out):
    c = case118()
    bus, gen, br, gc = c["bus"], c["gen"], c["branch"], c["gencost"]
    n_bus, n_br, n_gen = len(bus), len(br), len(gen)
    idx = {int(b): i for i, b in enumerate(bus[:, 0])}
    cost = gc[:, 5] + gc[:, 4] * gen[:, 8]
    base = c["baseMVA"]
    susc = base / br[:, 3]
    ref = [i for i in range(n_bus) if bus[i, 1] == 3][0]

    nv = n_gen + n_bus + n_br
    aeq = lil_matrix((n_bus + n_br + 1, nv))
    beq = np.zeros(n_bus + n_br + 1)
    for g in range(n_gen):
        aeq[idx[int(gen[g, 0])], g] = 1
    for l in range(n_br):
        i, j = idx[int(br[l, 0])], idx[int(br[l, 1])]
        aeq[i, n_gen + n_bus + l] -= 1
        aeq[j, n_gen + n_bus + l] += 1
        aeq[n_bus + l, n_gen + n_bus + l] = 1
        aeq[n_bus + l, n_gen + i] = -susc[l]
        aeq[n_bus + l, n_gen + j] = susc[l]
    beq[:n_bus] = bus[:, 2]
    aeq[n_bus + n_br, n_gen + ref] = 1
    bounds = [(gen[g, 9], gen[g, 8]) for g in range(n_gen)] + [(None, None)] * (n_bus + n_br)
    res = linprog(np.concatenate([cost, np.zeros(n_bus + n_br)]), A_eq=aeq.tocsr(), b_eq=beq,
                  bounds=bounds, method="highs")
    assert res.status == 0
    flow = res.x[n_gen + n_bus:]

    graph = nx.MultiGraph()
    for l in range(n_br):
        graph.add_edge(int(br[l, 0]), int(br[l, 1]), key=l)
    bridges = set()
    for u, v, k in list(graph.edges(keys=True)):
        h = graph.copy()
        h.remove_edge(u, v, k)
        if not nx.is_connected(h):
            bridges.add(k)

    rating = np.maximum(np.ceil(0.85 * np.abs(flow) / 10) * 10, 50)
    for l in bridges:
        rating[l] = max(math.ceil(1.25 * abs(flow[l]) / 10) * 10, 50)

    with open(out, "w") as fh:
        fh.write("function mpc = case118\n")
        fh.write("%CASE118  IEEE 118-bus system, DC switching variant.\n")
        fh.write("%   Topology, reactances, demands and generator limits from the IEEE\n")
        fh.write("%   118-bus case (MATPOWER). Linear costs and line ratings derived by\n")
        fh.write("%   data/derive_case118.py.\n\n")
        fh.write("mpc.version = '2';\n")
        fh.write(f"mpc.baseMVA = {base:g};\n\n")
        fh.write("%% bus data\n%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin\n")
        fh.write("mpc.bus = [\n")
        for row in bus:
            fh.write("\t" + "\t".join(f"{v:g}" for v in row) + ";\n")
        fh.write("];\n\n")
        fh.write("%% generator data\n%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin\n")
        fh.write("mpc.gen = [\n")
        for row in gen:
            fh.write("\t" + "\t".join(f"{v:g}" for v in row[:10]) + ";\n")
        fh.write("];\n\n")
        fh.write("%% branch data\n%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax\n")
        fh.write("mpc.branch = [\n")
        for l, row in enumerate(br):
            vals = list(row[:13])
            vals[5] = vals[6] = vals[7] = rating[l]
            fh.write("\t" + "\t".join(f"{v:g}" for v in vals) + ";\n")
        fh.write("];\n\n")
        fh.write("%% generator cost data\n%\t2\tstartup\tshutdown\tn\tc1\tc0\n")
        fh.write("mpc.gencost = [\n")
        for g in range(n_gen):
            fh.write(f"\t2\t0\t0\t2\t{cost[g]:.4f}\t0;\n")
        fh.write("];\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "case118.m")
