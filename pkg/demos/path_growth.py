"""Greedy coherence-minimizing growth of a 20-node path.

Adds ten edges of weight 0.2, printing coherence and diameter after each
step under both admissibility policies.
"""

from edgemod.graph_model import path_graph
from edgemod.laplacian import greedy_grow
from edgemod.errors import NoAdmissibleEdge


def show(policy):
    net = path_graph(20, 0.2)
    try:
        res = greedy_grow(net, 0.2, 10, policy=policy)
    except NoAdmissibleEdge as exc:
        print(f"[{policy}] stopped early: {exc}")
        return
    print(f"[{policy}] step  edge      coherence  C+1       diameter")
    print(f"          0     -         {res.trajectory[0]:9.4f}  "
          f"{res.trajectory_plus_one[0]:9.4f} {res.diameters[0]}")
    for i, (m, c, d) in enumerate(zip(res.mods, res.trajectory[1:],
                                      res.diameters[1:]), 1):
        print(f"          {i:<5d} ({m.s:2d},{m.t:2d})  {c:9.4f}  {c + 1:9.4f} {d}")


if __name__ == "__main__":
    show("stable")
    show("strict")
