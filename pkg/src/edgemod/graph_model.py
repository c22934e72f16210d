"""Networks, single-edge modifications, generators and file formats.

Adjacency convention: entry ``adjacency[j, i]`` holds the weight of the edge
``i -> j``. Node indices are 0-based. An :class:`EdgeMod` ``(s, t, w)`` acts
on entry ``[t, s]`` of the state matrix.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import connected_components, shortest_path

from .errors import (Disconnected, DuplicateEdge, InvalidNodeSet,
                     NegativeResultingWeight, NetworkFormatError,
                     NonPositiveWeight, ParseError, SpectralConditionViolated,
                     UnstableNetwork, WeightOutOfRange, ZeroSpectralRadius)
from .systems import LinearSystem, spectral_radius

__all__ = [
    "Kind", "Network", "EdgeMod", "build_network", "check_network", "apply_mod",
    "erdos_renyi", "fig2_network", "path_graph", "complete_graph", "grid_graph",
    "diameter", "network_to_dict", "network_from_dict", "write_json",
    "read_json", "write_edgelist", "read_edgelist", "read_network",
]


class Kind(str, enum.Enum):
    DIRECT = "direct"
    LAPLACIAN = "laplacian"


@dataclass(frozen=True)
class EdgeMod:
    """Add ``w`` to the weight of edge ``s -> t`` (negative ``w`` removes)."""

    s: int
    t: int
    w: float

    def __post_init__(self):
        if self.s == self.t:
            raise ValueError("an edge modification needs s != t")
        object.__setattr__(self, "s", int(self.s))
        object.__setattr__(self, "t", int(self.t))
        object.__setattr__(self, "w", float(self.w))

    def scaled(self, w):
        return EdgeMod(self.s, self.t, w)


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _node_set(nodes, n, label):
    nodes = tuple(int(i) for i in nodes)
    if not nodes:
        raise InvalidNodeSet(f"{label} set must be nonempty")
    if len(set(nodes)) != len(nodes):
        raise InvalidNodeSet(f"{label} set contains duplicates")
    if any(i < 0 or i >= n for i in nodes):
        raise InvalidNodeSet(f"{label} set has nodes outside 0..{n - 1}")
    return nodes


@dataclass(frozen=True, eq=False)
class Network:
    """Weighted graph plus input/output node sets and a dynamics regime.

    For ``Kind.DIRECT`` the state matrix is the adjacency matrix itself. For
    ``Kind.LAPLACIAN`` the adjacency is symmetric with zero diagonal and the
    state matrix is ``I - L``.

    Only structural invariants are enforced on construction; stability
    assumptions are checked by :func:`check_network` (called from
    :func:`build_network` and :func:`apply_mod`).
    """

    adjacency: np.ndarray
    inputs: tuple
    outputs: tuple
    kind: Kind = Kind.DIRECT

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=float)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise NetworkFormatError("adjacency must be a square matrix")
        if not np.all(np.isfinite(adj)):
            raise NetworkFormatError("adjacency has non-finite entries")
        if np.any(adj < 0):
            raise NonPositiveWeight("adjacency entries must be nonnegative")
        kind = Kind(self.kind)
        n = adj.shape[0]
        if kind is Kind.LAPLACIAN:
            if np.any(np.diag(adj) != 0):
                raise NetworkFormatError("Laplacian networks have no self-loops")
            if not np.array_equal(adj, adj.T):
                raise NetworkFormatError("Laplacian adjacency must be symmetric")
        object.__setattr__(self, "adjacency", _readonly(adj))
        object.__setattr__(self, "inputs", _node_set(self.inputs, n, "input"))
        object.__setattr__(self, "outputs", _node_set(self.outputs, n, "output"))
        object.__setattr__(self, "kind", kind)

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (self.kind is other.kind and self.inputs == other.inputs
                and self.outputs == other.outputs
                and np.array_equal(self.adjacency, other.adjacency))

    __hash__ = None

    @property
    def n(self):
        return self.adjacency.shape[0]

    @cached_property
    def laplacian(self):
        if self.kind is not Kind.LAPLACIAN:
            raise TypeError("only Laplacian networks have a Laplacian")
        adj = self.adjacency
        return _readonly(np.diag(adj.sum(axis=1)) - adj)

    @cached_property
    def state_matrix(self):
        if self.kind is Kind.DIRECT:
            return self.adjacency
        return _readonly(np.eye(self.n) - self.laplacian)

    @property
    def A(self):
        return self.state_matrix

    @cached_property
    def input_matrix(self):
        B = np.zeros((self.n, len(self.inputs)))
        B[list(self.inputs), np.arange(len(self.inputs))] = 1.0
        return _readonly(B)

    @cached_property
    def output_matrix(self):
        C = np.zeros((len(self.outputs), self.n))
        C[np.arange(len(self.outputs)), list(self.outputs)] = 1.0
        return _readonly(C)

    def system(self):
        return LinearSystem(self.state_matrix, self.input_matrix,
                            self.output_matrix)

    @property
    def all_nodes_io(self):
        """True when every node is both an input and an output node."""
        full = set(range(self.n))
        return set(self.inputs) == full and set(self.outputs) == full

    def edges(self):
        """Edge list ``[(i, j, w), ...]`` meaning ``i -> j`` with weight ``w``.

        Laplacian networks list each undirected edge once with ``i < j``.
        """
        adj = self.adjacency
        if self.kind is Kind.LAPLACIAN:
            rows, cols = np.nonzero(np.triu(adj, 1))
            return [(int(i), int(j), float(adj[i, j]))
                    for i, j in zip(rows, cols)]
        targets, sources = np.nonzero(adj)
        order = np.lexsort((targets, sources))
        return [(int(sources[k]), int(targets[k]),
                 float(adj[targets[k], sources[k]])) for k in order]

    @property
    def n_edges(self):
        return len(self.edges())

    def has_edge(self, s, t):
        return self.adjacency[t, s] > 0

    def with_io(self, inputs=None, outputs=None):
        return Network(self.adjacency,
                       self.inputs if inputs is None else inputs,
                       self.outputs if outputs is None else outputs,
                       self.kind)

    def is_connected(self):
        n_comp, _ = connected_components(self.adjacency > 0, directed=True,
                                         connection="weak")
        return n_comp == 1

    def spectral_radius(self):
        """rho(A) for direct networks, rho(L) for Laplacian ones."""
        if self.kind is Kind.LAPLACIAN:
            return float(np.linalg.eigvalsh(self.laplacian)[-1])
        return spectral_radius(self.adjacency)


def check_network(net, require_rho_below_one=True):
    """Raise if *net* breaks the stability assumptions of its regime.

    Direct networks need ``rho(A) < 1``. Laplacian networks must be connected
    and satisfy ``rho(L) < 1``; with ``require_rho_below_one=False`` only
    ``rho(L) < 2`` is required, which is what keeps the displacement system
    stable.
    """
    if net.kind is Kind.DIRECT:
        rho = net.spectral_radius()
        if rho >= 1.0:
            raise UnstableNetwork(f"spectral radius {rho:.12g} >= 1")
        return
    if not net.is_connected():
        raise Disconnected("Laplacian network must be connected")
    rho = net.spectral_radius()
    limit = 1.0 if require_rho_below_one else 2.0
    if rho >= limit:
        raise SpectralConditionViolated(
            f"rho(L) = {rho:.12g} violates rho(L) < {limit:g}")


def build_network(n, edges, inputs, outputs, kind=Kind.DIRECT,
                  require_rho_below_one=True):
    """Validated network from an edge list of ``(i, j, w)`` triples.

    Each triple is the edge ``i -> j`` with weight ``w > 0``. For the
    Laplacian kind every undirected edge is listed once.
    """
    kind = Kind(kind)
    adj = np.zeros((n, n))
    seen = set()
    for entry in edges:
        try:
            i, j, w = entry
            i, j, w = int(i), int(j), float(w)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"bad edge entry {entry!r}") from exc
        if not (0 <= i < n and 0 <= j < n):
            raise NetworkFormatError(f"edge ({i}, {j}) outside 0..{n - 1}")
        if not w > 0 or not np.isfinite(w):
            raise NonPositiveWeight(f"edge ({i}, {j}) has weight {w!r}")
        key = (min(i, j), max(i, j)) if kind is Kind.LAPLACIAN else (i, j)
        if key in seen:
            raise DuplicateEdge(f"edge ({i}, {j}) listed twice")
        seen.add(key)
        if kind is Kind.LAPLACIAN:
            if i == j:
                raise NetworkFormatError(f"self-loop at node {i}")
            adj[i, j] = adj[j, i] = w
        else:
            adj[j, i] = w
    net = Network(adj, inputs, outputs, kind)
    check_network(net, require_rho_below_one=require_rho_below_one)
    return net


def apply_mod(net, mod, require_rho_below_one=True):
    """Network obtained by applying a single-edge modification.

    Direct networks change the single entry ``[t, s]``; the result is not
    required to be stable, so boundary weights can be examined. Laplacian
    networks add the undirected edge ``{s, t}`` (``w > 0``), which changes
    four entries of the state matrix.
    """
    s, t, w = mod.s, mod.t, mod.w
    adj = np.array(net.adjacency)
    if net.kind is Kind.DIRECT:
        new = adj[t, s] + w
        if new < 0:
            raise NegativeResultingWeight(
                f"w = {w!r} below -A[{t}][{s}] = {-adj[t, s]!r}")
        adj[t, s] = new
        return Network(adj, net.inputs, net.outputs, net.kind)
    if not w > 0:
        raise WeightOutOfRange("Laplacian modifications must add weight w > 0")
    adj[s, t] += w
    adj[t, s] = adj[s, t]
    out = Network(adj, net.inputs, net.outputs, net.kind)
    check_network(out, require_rho_below_one=require_rho_below_one)
    return out


# ---------------------------------------------------------------- generators

def erdos_renyi(n, p, target_rho, seed, directed=True, max_retries=10,
                inputs=None, outputs=None, rng=None):
    """Random positive stable network rescaled to a given spectral radius.

    Each ordered pair (or unordered pair when ``directed=False``) gets an edge
    with probability ``p``; weights are uniform on ``(0, 1]``.
    """
    if not 0 < p < 1:
        raise ValueError("edge probability must lie in (0, 1)")
    if not 0 < target_rho < 1:
        raise ValueError("target spectral radius must lie in (0, 1)")
    rng = np.random.default_rng(seed) if rng is None else rng
    for _ in range(max_retries):
        mask = rng.random((n, n)) < p
        weights = 1.0 - rng.random((n, n))
        if not directed:
            mask = np.triu(mask, 1)
            mask = mask | mask.T
            weights = np.triu(weights, 1)
            weights = weights + weights.T
        np.fill_diagonal(mask, False)
        W = np.where(mask, weights, 0.0)
        rho = spectral_radius(W)
        if rho > 1e-12:
            A = W * (target_rho / rho)
            nodes = tuple(range(n))
            return Network(A, nodes if inputs is None else inputs,
                           nodes if outputs is None else outputs, Kind.DIRECT)
    raise ZeroSpectralRadius(
        f"no draw with nonzero spectral radius after {max_retries} tries")


def fig2_network(seed, n=500, p=0.02, target_rho=0.9, n_inputs=50,
                 n_outputs=100):
    """ER network with randomly chosen input and output nodes (one RNG stream)."""
    rng = np.random.default_rng(seed)
    net = erdos_renyi(n, p, target_rho, seed=None, rng=rng)
    inputs = np.sort(rng.choice(n, size=n_inputs, replace=False))
    outputs = np.sort(rng.choice(n, size=n_outputs, replace=False))
    return net.with_io(inputs.tolist(), outputs.tolist())


def _laplacian_from_pairs(n, pairs, w, inputs, outputs):
    nodes = tuple(range(n))
    edges = [(i, j, w) for i, j in pairs]
    return build_network(n, edges, nodes if inputs is None else inputs,
                         nodes if outputs is None else outputs, Kind.LAPLACIAN)


def path_graph(n, w, inputs=None, outputs=None):
    """Undirected path ``0 - 1 - ... - (n-1)`` with uniform weight ``w``."""
    if n < 2 or not w > 0:
        raise ValueError("path graph needs n >= 2 and w > 0")
    return _laplacian_from_pairs(n, [(i, i + 1) for i in range(n - 1)], w,
                                 inputs, outputs)


def complete_graph(n, w, inputs=None, outputs=None):
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    return _laplacian_from_pairs(n, pairs, w, inputs, outputs)


def grid_graph(rows, cols, w, inputs=None, outputs=None):
    def idx(r, c):
        return r * cols + c
    pairs = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                pairs.append((idx(r, c), idx(r, c + 1)))
            if r + 1 < rows:
                pairs.append((idx(r, c), idx(r + 1, c)))
    return _laplacian_from_pairs(rows * cols, pairs, w, inputs, outputs)


def diameter(net):
    """Longest shortest path in hops, ignoring edge directions.

    ``inf`` for a disconnected graph.
    """
    dist = shortest_path(net.adjacency > 0, directed=False, unweighted=True)
    d = float(dist.max())
    return int(d) if np.isfinite(d) else d


# ------------------------------------------------------------------ file I/O

def network_to_dict(net):
    return {
        "n": net.n,
        "kind": net.kind.value,
        "edges": [[i, j, w] for i, j, w in net.edges()],
        "inputs": list(net.inputs),
        "outputs": list(net.outputs),
    }


def network_from_dict(data, check=True, require_rho_below_one=True):
    try:
        n = int(data["n"])
        kind = Kind(data.get("kind", "direct"))
        edges = data["edges"]
        inputs = data["inputs"]
        outputs = data["outputs"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed network description: {exc}") from exc
    if check:
        return build_network(n, edges, inputs, outputs, kind,
                             require_rho_below_one=require_rho_below_one)
    # structure only: parse errors still raise, stability is left unchecked
    adj = np.zeros((n, n))
    for entry in edges:
        try:
            i, j, w = int(entry[0]), int(entry[1]), float(entry[2])
        except (TypeError, ValueError, IndexError) as exc:
            raise ParseError(f"bad edge entry {entry!r}") from exc
        if not w > 0:
            raise NonPositiveWeight(f"edge ({i}, {j}) has weight {w!r}")
        if not (0 <= i < n and 0 <= j < n):
            raise NetworkFormatError(f"edge ({i}, {j}) outside 0..{n - 1}")
        if kind is Kind.LAPLACIAN:
            if i == j:
                raise NetworkFormatError(f"self-loop at node {i}")
            if adj[i, j] or adj[j, i]:
                raise DuplicateEdge(f"edge ({i}, {j}) listed twice")
            adj[i, j] = adj[j, i] = w
        else:
            if adj[j, i]:
                raise DuplicateEdge(f"edge ({i}, {j}) listed twice")
            adj[j, i] = w
    return Network(adj, inputs, outputs, kind)


def write_json(net, path):
    Path(path).write_text(json.dumps(network_to_dict(net)) + "\n")


def read_json(path, check=True, require_rho_below_one=True):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return network_from_dict(data, check=check,
                             require_rho_below_one=require_rho_below_one)


def write_edgelist(net, path, sidecar_path):
    lines = [f"{i} {j} {w!r}" for i, j, w in net.edges()]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))
    meta = {"n": net.n, "kind": net.kind.value, "inputs": list(net.inputs),
            "outputs": list(net.outputs)}
    Path(sidecar_path).write_text(json.dumps(meta) + "\n")


def read_edgelist(path, sidecar_path, check=True, require_rho_below_one=True):
    """Headerless ``i j w`` text file plus a JSON sidecar for the metadata."""
    edges = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"{path}:{lineno}: expected 'i j w'")
        try:
            edges.append([int(parts[0]), int(parts[1]), float(parts[2])])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
    try:
        meta = json.loads(Path(sidecar_path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{sidecar_path}: {exc}") from exc
    meta = dict(meta, edges=edges)
    return network_from_dict(meta, check=check,
                             require_rho_below_one=require_rho_below_one)


def read_network(path, sidecar=None, check=True, require_rho_below_one=True):
    """Read a JSON network, or an edge list when a sidecar is supplied."""
    path = Path(path)
    if sidecar is None and path.suffix.lower() != ".json":
        guess = path.with_suffix(".json")
        if guess.exists():
            sidecar = guess
    if sidecar is not None:
        return read_edgelist(path, sidecar, check=check,
                             require_rho_below_one=require_rho_below_one)
    return read_json(path, check=check,
                     require_rho_below_one=require_rho_below_one)
