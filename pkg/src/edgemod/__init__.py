"""Single-edge modifications of discrete-time linear networks.

Stability margins, delta-system norms and greedy design for positive stable
networks (:mod:`edgemod.stable`), coherence and H-infinity bounds for
Laplacian consensus networks (:mod:`edgemod.laplacian`), and brute-force
reference computations to check both against (:mod:`edgemod.oracle`).
"""

from . import errors
from .errors import *  # noqa: F401,F403
from .graph_model import (EdgeMod, Kind, Network, apply_mod, build_network,
                          check_network, complete_graph, diameter,
                          erdos_renyi, fig2_network, grid_graph, path_graph,
                          read_network, write_json)
from .laplacian import (batch_coherence_delta, build_laplacian_kernel,
                        coherence, coherence_delta, delta_hinf_upper_bound,
                        greedy_grow)
from .stable import (batch_scan, build_kernel, delta_h2_lower_bound,
                     delta_hinf, delta_realization, fragility_radius,
                     greedy_gramian_improve, stability_margin)
from .systems import LinearSystem

__version__ = "0.1.0"

__all__ = errors.__dict__.get("__all__", []) + [
    "EdgeMod", "Kind", "Network", "apply_mod", "build_network",
    "check_network", "complete_graph", "diameter", "erdos_renyi",
    "fig2_network", "grid_graph", "path_graph", "read_network", "write_json",
    "batch_coherence_delta", "build_laplacian_kernel", "coherence",
    "coherence_delta", "delta_hinf_upper_bound", "greedy_grow", "batch_scan",
    "build_kernel", "delta_h2_lower_bound", "delta_hinf", "delta_realization",
    "fragility_radius", "greedy_gramian_improve", "stability_margin",
    "LinearSystem",
]
