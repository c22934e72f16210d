"""Single-edge modifications of positive, internally stable networks.

Everything here works off a :class:`SteadyStateKernel`, which holds the
quantities that are expensive to compute (the resolvent ``(I - A)^-1``, the
walk energies and the centralities) so that every candidate edge can be
scored with O(1) work afterwards.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (DestabilizingWeight, NoAdmissibleEdge, SingularResolvent,
                     TruncationNotConverged, WeightOutOfRange)
from .gramian import controllability_gramian, observability_gramian
from .graph_model import EdgeMod, Kind, apply_mod
from .systems import LinearSystem, spectral_radius

__all__ = [
    "SteadyStateKernel", "build_kernel", "walk_energies", "stability_margin",
    "margin_matrix", "delta_hinf", "delta_h2_lower_bound", "DeltaRealization",
    "delta_realization", "ScanReport", "batch_scan", "GramianGreedyResult",
    "greedy_gramian_improve", "fragility_radius", "output_gramian_trace",
]

ZERO_REL_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class SteadyStateKernel:
    """Precomputed steady-state data for a direct (positive, stable) network.

    Attributes
    ----------
    resolvent : ndarray
        ``R = (I - A)^-1``, with entries below ``1e-14 * max(R)`` set to 0.
    gain_to_outputs : ndarray
        ``sqrt(sum_{o in O} R[o, r]^2)`` for every node ``r``.
    gain_from_inputs : ndarray
        ``sqrt(sum_{k in K} R[r, k]^2)`` for every node ``r``.
    walk_energy : ndarray
        ``E[j, i]`` is the walk energy from ``i`` to ``j``,
        ``sum_tau ((A^tau)_{ji})^2``.
    q, p : ndarray
        Input-to-node and node-to-output centralities.
    truncation_error : float
        Estimated tail omitted from the walk-energy sums.
    """

    network: object
    A: np.ndarray
    resolvent: np.ndarray
    gain_to_outputs: np.ndarray
    gain_from_inputs: np.ndarray
    walk_energy: np.ndarray
    q: np.ndarray
    p: np.ndarray
    truncation_error: float
    horizon: int
    spectral_radius: float

    @property
    def n(self):
        return self.A.shape[0]

    def walk(self, i, j):
        """Walk energy from node ``i`` to node ``j``."""
        return float(self.walk_energy[j, i])


def walk_energies(A, rho=None, tol=1e-12, max_iter=100_000):
    """Truncated sum of ``A^tau ∘ A^tau`` with its estimated tail.

    Stops at the first ``T`` with ``||A^T||_F^2 / (1 - rho^2)`` below
    ``tol`` times the trace of the running sum.

    Returns ``(E, tail, T)``.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if rho is None:
        rho = spectral_radius(A)
    if rho >= 1:
        raise TruncationNotConverged("walk energies diverge for rho(A) >= 1")
    denom = 1.0 - rho * rho
    E = np.zeros((n, n))
    P = np.eye(n)
    for k in range(1, max_iter + 1):
        E += P * P
        P = P @ A
        tail = float(np.sum(P * P)) / denom
        if tail < tol * np.trace(E):
            return E, tail, k
    raise TruncationNotConverged(
        f"walk energies not converged after {max_iter} terms (rho = {rho:.6g})")


def build_kernel(net, tol=1e-12, max_iter=100_000):
    """Steady-state kernel of a direct network with ``rho(A) < 1``."""
    if net.kind is not Kind.DIRECT:
        raise TypeError("build_kernel needs a direct (positive stable) network")
    A = np.array(net.state_matrix)
    n = A.shape[0]
    rho = spectral_radius(A)
    if rho >= 1.0:
        raise SingularResolvent(f"rho(A) = {rho:.12g} >= 1")
    R = np.linalg.solve(np.eye(n) - A, np.eye(n))
    R[R < ZERO_REL_TOL * R.max()] = 0.0
    K, O = list(net.inputs), list(net.outputs)
    gain_out = np.sqrt(np.sum(R[O, :] ** 2, axis=0))
    gain_in = np.sqrt(np.sum(R[:, K] ** 2, axis=1))

    E, tail, horizon = walk_energies(A, rho=rho, tol=tol, max_iter=max_iter)

    # centralities from Gramian diagonals, cross-checked against the walks
    q = np.diag(controllability_gramian(A, net.input_matrix).W).copy()
    p = np.diag(observability_gramian(A, net.output_matrix).W).copy()
    q_walk = E[:, K].sum(axis=1)
    p_walk = E[O, :].sum(axis=0)
    slack = 1e-8 * max(1.0, float(np.max(np.abs(q)))) + tail
    if (np.max(np.abs(q - q_walk)) > slack
            or np.max(np.abs(p - p_walk)) > slack):
        warnings.warn("centralities from Gramians and walk energies disagree",
                      RuntimeWarning, stacklevel=2)

    def frozen(a):
        a = np.asarray(a, dtype=float)
        a.setflags(write=False)
        return a

    return SteadyStateKernel(
        network=net, A=frozen(A), resolvent=frozen(R),
        gain_to_outputs=frozen(gain_out), gain_from_inputs=frozen(gain_in),
        walk_energy=frozen(E), q=frozen(q), p=frozen(p),
        truncation_error=tail, horizon=horizon, spectral_radius=rho)


# ------------------------------------------------------------- single edges

def stability_margin(kernel, s, t):
    """Largest ``w`` (exclusive) keeping ``A + w e_t e_s^T`` stable.

    ``1 / R[s, t]``, or ``inf`` when no path ``t -> s`` exists.
    """
    if s == t:
        raise ValueError("stability margin needs s != t")
    r = kernel.resolvent[s, t]
    return 1.0 / r if r > 0 else np.inf


def margin_matrix(kernel):
    """``M[s, t]`` = stability margin of edge ``s -> t``; diagonal is NaN."""
    R = kernel.resolvent
    with np.errstate(divide="ignore"):
        M = np.where(R > 0, 1.0 / np.where(R > 0, R, 1.0), np.inf)
    np.fill_diagonal(M, np.nan)
    return M


def _check_weight(kernel, mod):
    s, t, w = mod.s, mod.t, mod.w
    if w < -kernel.A[t, s]:
        raise WeightOutOfRange(
            f"w = {w!r} below -A[{t}][{s}] = {-kernel.A[t, s]!r}")
    margin = stability_margin(kernel, s, t)
    if w >= margin:
        raise DestabilizingWeight(
            f"w = {w!r} reaches the stability margin {margin!r} of ({s}, {t})")


def delta_hinf(kernel, mod):
    """Exact H-infinity norm of the delta system of *mod*.

    The DC gain of the delta system is rank one, and for a positive network
    the norm is attained at DC.
    """
    _check_weight(kernel, mod)
    s, t, w = mod.s, mod.t, mod.w
    return float(kernel.gain_to_outputs[t] * abs(w) * kernel.gain_from_inputs[s]
                 / (1.0 - kernel.resolvent[s, t] * w))


def delta_h2_lower_bound(kernel, mod):
    """Lower bound on the squared H2 norm of the delta system.

    ``p_t w^2 q_s / (1 - eps(t -> s) w^2)``.
    """
    try:
        _check_weight(kernel, mod)
    except DestabilizingWeight as exc:
        raise WeightOutOfRange(str(exc)) from exc
    s, t, w = mod.s, mod.t, mod.w
    w2 = w * w
    return float(kernel.p[t] * w2 * kernel.q[s]
                 / (1.0 - kernel.walk_energy[s, t] * w2))


@dataclass(frozen=True)
class DeltaRealization(LinearSystem):
    """2n-state realization of the delta system.

    The state is ``[xbar - x; x]``: the first block is the deviation of the
    modified network from the original, the second the original state.
    """

    mod: EdgeMod = None


def delta_realization(net, mod):
    A = np.asarray(net.state_matrix, dtype=float)
    n = A.shape[0]
    Abar = np.array(A)
    Abar[mod.t, mod.s] += mod.w
    coupling = np.zeros((n, n))
    coupling[mod.t, mod.s] = mod.w
    B, C = net.input_matrix, net.output_matrix
    big_A = np.block([[Abar, coupling], [np.zeros((n, n)), A]])
    big_B = np.vstack([np.zeros_like(B), B])
    big_C = np.hstack([C, np.zeros_like(C)])
    return DeltaRealization(big_A, big_B, big_C, mod=mod)


# ------------------------------------------------------------------- batch

_SORT_KEYS = ("margin", "hinf", "h2_lower_bound")


@dataclass(frozen=True, eq=False)
class ScanReport:
    """Per-edge metrics for one probe weight, one row per ordered pair."""

    w: float
    s: np.ndarray
    t: np.ndarray
    margin: np.ndarray
    destabilizing: np.ndarray
    hinf: np.ndarray
    h2_lower_bound: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.s)

    def _take(self, idx):
        return ScanReport(self.w, self.s[idx], self.t[idx], self.margin[idx],
                          self.destabilizing[idx], self.hinf[idx],
                          self.h2_lower_bound[idx], dict(self.meta))

    def sorted(self, key="margin", descending=False):
        """Sort by *key*, ties broken by ``(s, t)`` ascending."""
        if key not in _SORT_KEYS:
            raise ValueError(f"sort key must be one of {_SORT_KEYS}")
        values = getattr(self, key)
        primary = -values if descending else values
        return self._take(np.lexsort((self.t, self.s, primary)))

    def head(self, k):
        return self._take(slice(0, k))

    def select(self, mask):
        """Rows where boolean *mask* holds, order preserved."""
        return self._take(np.flatnonzero(np.asarray(mask, dtype=bool)))

    @property
    def n_destabilizing(self):
        return int(np.count_nonzero(self.destabilizing))

    def rows(self):
        for k in range(len(self)):
            yield (int(self.s[k]), int(self.t[k]), float(self.margin[k]),
                   bool(self.destabilizing[k]), float(self.hinf[k]),
                   float(self.h2_lower_bound[k]))

    def to_csv(self, fh):
        fh.write("s,t,margin,destabilizing,hinf,h2_lower_bound\n")
        for s, t, m, d, h, h2 in self.rows():
            fh.write(f"{s},{t},{m:.12g},{str(d).lower()},{h:.12g},{h2:.12g}\n")


def _scan_rows(kernel, w, rows):
    n = kernel.n
    R = kernel.resolvent[rows, :]
    E = kernel.walk_energy[rows, :]
    s_idx = np.repeat(rows, n)
    t_idx = np.tile(np.arange(n), len(rows))
    keep = s_idx != t_idx
    with np.errstate(divide="ignore", invalid="ignore"):
        margin = np.where(R > 0, 1.0 / np.where(R > 0, R, 1.0), np.inf)
        destab = w >= margin
        gain_in = kernel.gain_from_inputs[rows][:, None]
        gain_out = kernel.gain_to_outputs[None, :]
        hinf = gain_out * abs(w) * gain_in / (1.0 - R * w)
        q_s = kernel.q[rows][:, None]
        p_t = kernel.p[None, :]
        h2 = p_t * (w * w) * q_s / (1.0 - E * (w * w))
    hinf = np.where(destab, np.inf, hinf)
    h2 = np.where(destab, np.inf, h2)
    return (s_idx[keep], t_idx[keep], margin.ravel()[keep],
            destab.ravel()[keep], hinf.ravel()[keep], h2.ravel()[keep])


def batch_scan(kernel, w, sort_by=None, descending=False, top_k=None, jobs=1):
    """Score every ordered pair ``(s, t)``, ``s != t``, for probe weight *w*.

    Destabilizing edges (``w >= margin``) get ``inf`` for both norms. With
    ``jobs > 1`` blocks of source nodes are evaluated in worker threads; the
    result does not depend on the number of workers.
    """
    if not w > 0:
        raise WeightOutOfRange("batch scan needs a probe weight w > 0")
    n = kernel.n
    blocks = [b for b in np.array_split(np.arange(n), max(1, int(jobs))) if len(b)]
    if jobs > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=int(jobs)) as pool:
            parts = list(pool.map(lambda b: _scan_rows(kernel, w, b), blocks))
    else:
        parts = [_scan_rows(kernel, w, b) for b in blocks]
    cols = [np.concatenate([p[i] for p in parts]) for i in range(6)]
    report = ScanReport(float(w), *cols)
    if sort_by is not None:
        report = report.sorted(sort_by, descending=descending)
    if top_k is not None:
        report = report.head(top_k)
    return report


# ------------------------------------------------------------ applications

def output_gramian_trace(net):
    """``Tr(C W C^T)`` with ``W`` the controllability Gramian of (A, B)."""
    W = controllability_gramian(net.state_matrix, net.input_matrix).W
    O = list(net.outputs)
    return float(np.trace(W[np.ix_(O, O)]))


@dataclass
class GramianGreedyResult:
    mods: list
    bounds: list
    traces: list
    network: object = None

    @property
    def initial_trace(self):
        return self.traces[0]

    @property
    def final_trace(self):
        return self.traces[-1]


def greedy_gramian_improve(net, budget, candidate_weight, safety=0.95,
                           tol=1e-12):
    """Greedily add edges with the largest H2 lower bound.

    Candidates are absent edges ``s -> t`` whose margin satisfies
    ``candidate_weight <= safety * margin``; the kernel is rebuilt after
    every accepted edge so margins always refer to the current network.
    """
    if not candidate_weight > 0:
        raise WeightOutOfRange("candidate weight must be positive")
    w = float(candidate_weight)
    current = net
    result = GramianGreedyResult([], [], [output_gramian_trace(net)])
    for _ in range(budget):
        kernel = build_kernel(current, tol=tol)
        A = kernel.A
        M = margin_matrix(kernel)
        with np.errstate(invalid="ignore"):
            ok = (A.T == 0) & (w <= safety * M)
        np.fill_diagonal(ok, False)
        if not ok.any():
            raise NoAdmissibleEdge("no absent edge admits the candidate weight")
        # bound[s, t] uses p_t, q_s and the walk energy t -> s, i.e. E[s, t]
        with np.errstate(divide="ignore", invalid="ignore"):
            bound = (kernel.q[:, None] * (w * w) * kernel.p[None, :]
                     / (1.0 - kernel.walk_energy * (w * w)))
        bound = np.where(ok, bound, -np.inf)
        best = bound.max()
        ties = np.argwhere(bound >= best - 1e-12 * abs(best))
        s, t = (int(v) for v in ties[np.lexsort((ties[:, 1], ties[:, 0]))[0]])
        mod = EdgeMod(s, t, w)
        current = apply_mod(current, mod)
        result.mods.append(mod)
        result.bounds.append(float(best))
        result.traces.append(output_gramian_trace(current))
    result.network = current
    return result


def fragility_radius(kernel):
    """Smallest single-entry perturbation that destabilizes the network.

    Returns ``(radius, EdgeMod)``; ``(inf, None)`` if no edge can destabilize.
    """
    M = margin_matrix(kernel)
    np.fill_diagonal(M, np.inf)
    radius = M.min()
    if not np.isfinite(radius):
        return np.inf, None
    s, t = (int(v) for v in np.argwhere(M == radius)[0])
    return float(radius), EdgeMod(s, t, radius)
