"""Regenerate the Sioux Falls TNTP fixtures used by the test suite.

The network and OD demand come from the Sioux Falls reference project bundled
with the `aequilibrae` wheel (aequilibrae/reference_files/sioux_falls.zip).
Link volumes are a user-equilibrium assignment of that demand under the BPR
cost function, solved with Frank-Wolfe to a relative gap below 1e-5.

    pip download --no-deps aequilibrae
    python3 tools/sioux_falls_fixture.py aequilibrae-*.whl crates/core/tests/data
"""
import io
import sqlite3
import sys
import tempfile
import zipfile
from pathlib import Path

import h5py
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra


def load(wheel):
    outer = zipfile.ZipFile(wheel)
    inner = zipfile.ZipFile(io.BytesIO(outer.read("aequilibrae/reference_files/sioux_falls.zip")))
    tmp = Path(tempfile.mkdtemp())
    inner.extractall(tmp)
    con = sqlite3.connect(tmp / "project_database.sqlite")
    links = list(con.execute(
        "select a_node, b_node, capacity_ab, free_flow_time, b, power from links order by link_id"))
    demand = np.array(h5py.File(tmp / "matrices/demand.omx", "r")["data/matrix"])
    return links, demand


def assign(links, demand, gap_target=1e-5, max_iter=20000):
    n = demand.shape[0]
    tail = np.array([l[0] - 1 for l in links])
    head = np.array([l[1] - 1 for l in links])
    cap = np.array([l[2] for l in links])
    t0 = np.array([l[3] for l in links], dtype=float)
    b = np.array([l[4] for l in links])
    power = np.array([l[5] for l in links])

    def cost(x):
        return t0 * (1.0 + b * (x / cap) ** power)

    def aon(c):
        g = csr_matrix((c, (tail, head)), shape=(n, n))
        _, pred = dijkstra(g, directed=True, return_predecessors=True)
        index = {(int(t), int(h)): k for k, (t, h) in enumerate(zip(tail, head))}
        y = np.zeros(len(links))
        for o in range(n):
            for d in range(n):
                q = demand[o, d]
                if q <= 0 or o == d:
                    continue
                v = d
                while v != o:
                    u = pred[o, v]
                    y[index[(int(u), int(v))]] += q
                    v = u
        return y

    x = aon(t0)
    for it in range(max_iter):
        c = cost(x)
        y = aon(c)
        gap = (c @ (x - y)) / (c @ x)
        if gap < gap_target:
            break
        d = y - x
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if cost(x + mid * d) @ d > 0:
                hi = mid
            else:
                lo = mid
        x = x + 0.5 * (lo + hi) * d
    return x, cost(x), gap, it


def main(wheel, out):
    out = Path(out)
    links, demand = load(wheel)
    volume, cost, gap, iters = assign(links, demand)
    net = [
        "<NUMBER OF ZONES> 24",
        "<NUMBER OF NODES> 24",
        "<FIRST THRU NODE> 1",
        f"<NUMBER OF LINKS> {len(links)}",
        "<ORIGINAL HEADER>~",
        "<END OF METADATA>",
        "",
        "",
        "~ \tinit_node\tterm_node\tcapacity\tlength\tfree_flow_time\tb\tpower\tspeed\ttoll\tlink_type\t;",
    ]
    for a, bn, cap, t0, b, p in links:
        net.append(f"\t{a}\t{bn}\t{cap}\t{t0:g}\t{t0:g}\t{b:g}\t{p:g}\t0\t0\t1\t;")
    (out / "SiouxFalls_net.tntp").write_text("\n".join(net) + "\n")
    flow = ["From \tTo \tVolume \tCost "]
    for (a, bn, *_), v, c in zip(links, volume, cost):
        flow.append(f"{a}\t{bn}\t{v:.10f}\t{c:.10f}")
    (out / "SiouxFalls_flow.tntp").write_text("\n".join(flow) + "\n")
    print(f"relative gap {gap:.3e} after {iters} iterations")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
