"""Edge additions in undirected consensus networks ``A = I - L``.

The consensus dynamics are only marginally stable, so all norms are taken on
the displacement system, i.e. the projection onto the disagreement subspace
orthogonal to the all-ones vector.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigvalsh

from .errors import (AllNodeInputRequired, DegenerateAlpha, Disconnected,
                     NoAdmissibleEdge, SpectralConditionViolated,
                     WeightOutOfRange)
from .gramian import Gramian, dlyap_doubling
from .graph_model import EdgeMod, Kind, apply_mod, diameter
from .systems import LinearSystem

__all__ = [
    "LaplacianKernel", "build_laplacian_kernel", "kernel_residuals",
    "DisplacementSystem", "displacement", "pseudo_gramian",
    "hinf_displacement", "effective_resistance", "delta_hinf_upper_bound",
    "delta_displacement_response", "coherence", "coherence_plus_one",
    "coherence_delta", "updated_pinv", "updated_inverse_plus",
    "pair_quadratic_forms", "CoherenceReport", "batch_coherence_delta",
    "GrowResult", "greedy_grow",
]

ALPHA_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class LaplacianKernel:
    """Spectral data of ``A = I - L`` reused by every edge-addition query.

    ``eigvals`` is sorted ascending and ends with the consensus eigenvalue 1,
    whose eigenvector (last column of ``eigvecs``) is pinned to
    ``1 / sqrt(n)``.
    """

    network: object
    A: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    J: np.ndarray
    Lpinv: np.ndarray
    Mplus: np.ndarray
    coherence_pinv: np.ndarray
    sandwich1: np.ndarray
    sandwich2: np.ndarray
    rho_below_one: bool

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def laplacian(self):
        return self.network.laplacian

    @property
    def rho_laplacian(self):
        return float(1.0 - self.eigvals[0])

    def synth(self, diag):
        """``U diag(d) U^T`` over the first ``n-1`` eigenpairs."""
        V = self.eigvecs[:, :-1]
        return (V * diag) @ V.T


def _sym(M):
    return 0.5 * (M + M.T)


def build_laplacian_kernel(net, require_rho_below_one=True):
    """Eigendecompose ``A`` and form the pseudoinverses used downstream.

    With ``require_rho_below_one=False`` networks with ``1 <= rho(L) < 2`` are
    accepted; ``A`` is then no longer nonnegative but the displacement system
    is still stable.
    """
    if net.kind is not Kind.LAPLACIAN:
        raise TypeError("expected a Laplacian-kind network")
    n = net.n
    A = np.array(net.state_matrix)
    mu, U = np.linalg.eigh(A)
    # pin the consensus eigenpair and re-project the rest off it
    ones = np.full(n, 1.0 / np.sqrt(n))
    mu[-1] = 1.0
    U[:, -1] = ones
    U[:, :-1] -= np.outer(ones, ones @ U[:, :-1])
    U[:, :-1] /= np.linalg.norm(U[:, :-1], axis=0)
    if n > 1 and mu[-2] >= 1.0 - 1e-12:
        raise Disconnected("eigenvalue 1 of A is not simple")
    if mu[0] <= -1.0 + 1e-12:
        raise SpectralConditionViolated(
            f"rho(L) = {1 - mu[0]:.12g} >= 2; displacement system unstable")
    below_one = bool(mu[0] > 0)
    if require_rho_below_one and not below_one:
        raise SpectralConditionViolated(f"rho(L) = {1 - mu[0]:.12g} >= 1")

    J = np.full((n, n), 1.0 / n)
    L = np.eye(n) - A
    Lpinv = _sym(np.linalg.inv(L + J) - J)
    V = U[:, :-1]
    m = mu[:-1]

    def synth(d):
        return _sym((V * d) @ V.T)

    Mplus = synth(1.0 / (1.0 + m)) + 0.5 * J
    coh = synth(1.0 / (1.0 - m * m))
    s1 = synth(1.0 / ((1.0 + m) ** 2 * (1.0 - m)))
    s2 = synth(1.0 / ((1.0 - m) ** 2 * (1.0 + m)))
    return LaplacianKernel(net, A, mu, U, J, Lpinv, Mplus, coh, s1, s2, below_one)


def kernel_residuals(kernel):
    """Max-abs residuals of the identities every kernel should satisfy."""
    n = kernel.n
    I = np.eye(n)
    A, J, U = kernel.A, kernel.J, kernel.eigvecs
    L = I - A
    one = np.ones(n)
    m = kernel.eigvals[:-1]
    coh_eigs = np.sort(np.linalg.eigvalsh(kernel.coherence_pinv))
    expected = np.sort(np.append(1.0 / (1.0 - m * m), 0.0))
    return {
        "orthogonality": np.abs(U @ U.T - I).max(),
        "consensus_vector": np.abs(np.abs(U[:, -1]) - 1 / np.sqrt(n)).max(),
        "pinv_nullspace": np.abs(kernel.Lpinv @ one).max(),
        "pinv_symmetry": np.abs(kernel.Lpinv - kernel.Lpinv.T).max(),
        "pinv_identity": np.abs((L + J) @ (kernel.Lpinv + J) - I).max(),
        "coherence_spectrum": np.abs(coh_eigs - expected).max(),
        "J_idempotent": np.abs(J @ J - J).max(),
        "AJ_equals_J": np.abs(A @ J - J).max(),
        "A_commutes_projection": np.abs(A @ (I - J) - (I - J) @ A).max(),
    }


# ---------------------------------------------------------- displacement

@dataclass(frozen=True)
class DisplacementSystem(LinearSystem):
    """``xi(t+1) = (I-J) A xi(t) + (I-J) B u(t)``, ``y = C xi``."""


def displacement(net):
    n = net.n
    P = np.eye(n) - np.full((n, n), 1.0 / n)
    return DisplacementSystem(P @ net.state_matrix, P @ net.input_matrix,
                              net.output_matrix)


def pseudo_gramian(dsys):
    """Gramian of the displacement system; ``span(1)`` lies in its kernel."""
    return Gramian(dlyap_doubling(dsys.A, dsys.B @ dsys.B.T))


def hinf_displacement(kernel, inputs=None, outputs=None):
    """H-infinity norm of the displacement system, i.e. its DC-gain norm.

    ``(I - A_J)^-1 = L^+ + J`` and ``J (I - J) = 0``, so with the projected
    input matrix ``B_J`` the DC gain is the submatrix ``L^+[O, K]``.
    """
    net = kernel.network
    K = list(net.inputs if inputs is None else inputs)
    O = list(net.outputs if outputs is None else outputs)
    G0 = kernel.Lpinv[np.ix_(O, K)]
    return float(np.linalg.norm(G0, 2))


def _pair_form(M, s, t):
    return float(M[s, s] + M[t, t] - M[s, t] - M[t, s])


def effective_resistance(kernel, s, t):
    return _pair_form(kernel.Lpinv, s, t)


def _lmax_after(kernel, s, t, w):
    Lbar = np.array(kernel.laplacian)
    Lbar[s, s] += w
    Lbar[t, t] += w
    Lbar[s, t] -= w
    Lbar[t, s] -= w
    n = kernel.n
    return float(eigvalsh(Lbar, subset_by_index=[n - 1, n - 1])[0])


def _check_addition(kernel, s, t, w, limit):
    if s == t:
        raise ValueError("edge addition needs s != t")
    if not w > 0:
        raise WeightOutOfRange("edge additions need w > 0")
    lmax = _lmax_after(kernel, s, t, w)
    if lmax >= limit:
        raise SpectralConditionViolated(
            f"adding ({s}, {t}, {w:g}) gives rho(L) = {lmax:.12g} >= {limit:g}")


def delta_hinf_upper_bound(kernel, s, t, w, inputs=None, outputs=None):
    """Upper bound on the H-infinity norm of the displacement delta system."""
    _check_addition(kernel, s, t, w, 1.0)
    net = kernel.network
    K = list(net.inputs if inputs is None else inputs)
    O = list(net.outputs if outputs is None else outputs)
    P = kernel.Lpinv + 1.0 / kernel.n
    g_Os = np.linalg.norm(P[O, s])
    g_Ot = np.linalg.norm(P[O, t])
    g_sK = np.linalg.norm(P[s, K])
    g_tK = np.linalg.norm(P[t, K])
    num = (g_Os * g_tK + g_Ot * g_sK + g_Ot * g_tK + g_Os * g_sK) * w
    Lp = kernel.Lpinv
    den = abs(1.0 - w * (Lp[s, t] + Lp[t, s] - Lp[s, s] - Lp[t, t]))
    return float(num / den)


def delta_displacement_response(kernel, s, t, w, theta, inputs=None,
                                outputs=None):
    """Frequency response of the displacement delta system, factored form.

    Evaluates ``(G_Os - G_Ot) (1 - w (G_st + G_ts - G_ss - G_tt))^-1 w
    (G_tK - G_sK)`` at ``z = exp(i theta)`` where every ``G`` is a transfer
    function of ``(A_J, e_., e_.^T)``.
    """
    net = kernel.network
    K = list(net.inputs if inputs is None else inputs)
    O = list(net.outputs if outputs is None else outputs)
    z = np.exp(1j * theta)
    V = kernel.eigvecs[:, :-1]
    u = kernel.eigvecs[:, -1]
    # A_J has eigenvalue 0 along the consensus direction
    P = (V / (z - kernel.eigvals[:-1])) @ V.T + np.outer(u, u) / z
    left = P[O, s] - P[O, t]
    right = P[t, K] - P[s, K]
    loop = 1.0 - w * (P[s, t] + P[t, s] - P[s, s] - P[t, t])
    return np.outer(left, right) * (w / loop)


# --------------------------------------------------------------- coherence

def _require_all_nodes(kernel):
    if not kernel.network.all_nodes_io:
        raise AllNodeInputRequired(
            "coherence is defined with inputs and outputs on every node")


def coherence(kernel):
    """Steady-state variance of the deviation from consensus.

    Sum of ``1 / (1 - lambda_i^2)`` over the non-consensus eigenvalues of
    ``A``, checked against the trace of ``(I - A^2)^+``.
    """
    _require_all_nodes(kernel)
    m = kernel.eigvals[:-1]
    value = float(np.sum(1.0 / (1.0 - m * m)))
    via_trace = float(np.trace(kernel.coherence_pinv))
    if abs(value - via_trace) > 1e-10 * abs(value):
        raise ArithmeticError(
            f"eigenvalue sum {value!r} and trace {via_trace!r} disagree")
    return value


def coherence_plus_one(kernel):
    """``Tr((I - A_J^2)^-1)``, which equals the coherence plus one."""
    _require_all_nodes(kernel)
    n = kernel.n
    AJ = (np.eye(n) - kernel.J) @ kernel.A
    return float(np.trace(np.linalg.inv(np.eye(n) - AJ @ AJ)))


def _alphas(kernel, s, t, w):
    a1 = 1.0 / w - _pair_form(kernel.Mplus, s, t)
    a2 = -1.0 / w - _pair_form(kernel.Lpinv, s, t)
    if abs(a1) < ALPHA_TOL or abs(a2) < ALPHA_TOL:
        raise DegenerateAlpha(f"alpha1 = {a1!r}, alpha2 = {a2!r}")
    return a1, a2


def coherence_delta(kernel, s, t, w, require_rho_below_one=True):
    """Exact change in coherence caused by adding edge ``{s, t}`` of weight w.

    Uses rank-one updates of ``(I + A)^-1`` and ``(I - A)^+``; no
    eigendecomposition of the modified network is needed.
    """
    _require_all_nodes(kernel)
    _check_addition(kernel, s, t, w, 1.0 if require_rho_below_one else 2.0)
    a1, a2 = _alphas(kernel, s, t, w)
    g = _pair_form(kernel.coherence_pinv, s, t)
    return (g * g / (a1 * a2) + _pair_form(kernel.sandwich1, s, t) / a1
            + _pair_form(kernel.sandwich2, s, t) / a2)


def _e(n, s, t):
    e = np.zeros(n)
    e[s], e[t] = 1.0, -1.0
    return e


def updated_pinv(kernel, s, t, w):
    """``(I - Abar)^+`` by the rank-one pseudoinverse update."""
    a1, a2 = _alphas(kernel, s, t, w)
    v = kernel.Lpinv @ _e(kernel.n, s, t)
    return kernel.Lpinv + np.outer(v, v) / a2


def updated_inverse_plus(kernel, s, t, w):
    """``(I + Abar)^-1`` by the matrix inversion lemma."""
    a1, a2 = _alphas(kernel, s, t, w)
    v = kernel.Mplus @ _e(kernel.n, s, t)
    return kernel.Mplus + np.outer(v, v) / a1


def pair_quadratic_forms(M):
    """``N`` with ``N[i, j] = e_ij^T M e_ij`` for a symmetric matrix ``M``."""
    d = np.diag(M)
    return d[None, :] + d[:, None] - 2.0 * M


def _admissible_mask(kernel, w, limit):
    """Boolean matrix: adding ``{s, t}`` keeps ``rho(L) < limit``."""
    n = kernel.n
    lmax0 = kernel.rho_laplacian
    ok = np.zeros((n, n), dtype=bool)
    if lmax0 + 2.0 * w < limit:
        ok[:] = True
    else:
        lower = np.maximum(lmax0, 0.5 * pair_quadratic_forms(kernel.laplacian)
                           + 2.0 * w)
        for s, t in zip(*np.triu_indices(n, 1)):
            if lower[s, t] >= limit:
                continue
            ok[s, t] = ok[t, s] = _lmax_after(kernel, s, t, w) < limit
    np.fill_diagonal(ok, False)
    return ok


@dataclass(frozen=True, eq=False)
class CoherenceReport:
    """Coherence changes for every single-edge addition of weight ``w``.

    ``Q[t, s]`` is the change for adding ``{s, t}`` (symmetric). Entries are
    NaN where the addition would destabilize the displacement system;
    ``admissible`` marks entries that also keep the selected spectral
    condition.
    """

    baseline: float
    Q: np.ndarray
    w: float
    admissible: np.ndarray
    meta: dict = field(default_factory=dict)

    def pairs(self, sort=True):
        """Rows ``(s, t, delta, admissible)`` over unordered pairs ``s < t``."""
        s_idx, t_idx = np.triu_indices(self.Q.shape[0], 1)
        vals = self.Q[t_idx, s_idx]
        adm = self.admissible[t_idx, s_idx]
        if sort:
            key = np.where(np.isnan(vals), np.inf, vals)
            order = np.lexsort((t_idx, s_idx, key))
            s_idx, t_idx, vals, adm = (s_idx[order], t_idx[order], vals[order],
                                       adm[order])
        return [(int(a), int(b), float(v), bool(ok))
                for a, b, v, ok in zip(s_idx, t_idx, vals, adm)]

    def to_csv(self, fh):
        fh.write("s,t,w,coherence_delta,admissible\n")
        for s, t, v, ok in self.pairs():
            fh.write(f"{s},{t},{self.w:.12g},{v:.12g},{str(ok).lower()}\n")


def _batch_rows(N, w, rows):
    g, a1, a2, s1, s2 = (M[rows] for M in N)
    a1 = 1.0 / w - a1
    a2 = -1.0 / w - a2
    with np.errstate(divide="ignore", invalid="ignore"):
        Q = g * g / (a1 * a2) + s1 / a1 + s2 / a2
    degenerate = (np.abs(a1) < ALPHA_TOL) | (np.abs(a2) < ALPHA_TOL)
    return np.where(degenerate, np.nan, Q)


def batch_coherence_delta(kernel, w, require_rho_below_one=True, jobs=1):
    """Coherence change for every possible addition, via pair forms."""
    _require_all_nodes(kernel)
    if not w > 0:
        raise WeightOutOfRange("edge additions need w > 0")
    n = kernel.n
    N = [pair_quadratic_forms(M) for M in
         (kernel.coherence_pinv, kernel.Mplus, kernel.Lpinv, kernel.sandwich1,
          kernel.sandwich2)]
    blocks = [b for b in np.array_split(np.arange(n), max(1, int(jobs))) if len(b)]
    if jobs > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=int(jobs)) as pool:
            parts = list(pool.map(lambda b: _batch_rows(N, w, b), blocks))
    else:
        parts = [_batch_rows(N, w, b) for b in blocks]
    Q = np.vstack(parts)
    stable = _admissible_mask(kernel, w, 2.0)
    Q = np.where(stable, Q, np.nan)
    np.fill_diagonal(Q, 0.0)
    if require_rho_below_one:
        admissible = _admissible_mask(kernel, w, 1.0) & stable
    else:
        admissible = stable.copy()
    admissible &= ~np.isnan(Q)
    return CoherenceReport(coherence(kernel), Q, float(w), admissible,
                           {"rho_below_one": require_rho_below_one})


@dataclass
class GrowResult:
    mods: list
    trajectory: list
    diameters: list
    network: object = None
    policy: str = "stable"

    @property
    def trajectory_plus_one(self):
        return [c + 1.0 for c in self.trajectory]

    def to_json_dict(self):
        return {
            "initial": self.trajectory[0],
            "steps": [{"s": m.s, "t": m.t, "w": m.w, "coherence": c}
                      for m, c in zip(self.mods, self.trajectory[1:])],
        }


_POLICIES = {"stable": False, "strict": True}


def greedy_grow(net, w, budget, policy="stable", tie_rtol=1e-9):
    """Add ``budget`` new edges one at a time, each minimizing coherence.

    ``policy="stable"`` only requires the displacement system to stay stable
    (``rho(L) < 2``); ``policy="strict"`` additionally keeps
    ``rho(L) < 1`` so that ``A`` stays nonnegative. Near-ties (within
    ``tie_rtol``) go to the lexicographically smallest pair.
    """
    if policy not in _POLICIES:
        raise ValueError(f"policy must be one of {sorted(_POLICIES)}")
    strict = _POLICIES[policy]
    kernel = build_laplacian_kernel(net, require_rho_below_one=False)
    result = GrowResult([], [coherence(kernel)], [diameter(net)], net, policy)
    current = net
    for _ in range(budget):
        report = batch_coherence_delta(kernel, w, require_rho_below_one=strict)
        cand = report.admissible & (current.adjacency == 0)
        cand = np.triu(cand, 1)
        if not cand.any():
            raise NoAdmissibleEdge("no admissible non-edge left to add")
        Q = np.where(cand, report.Q.T, np.inf)  # Q.T[s, t] = Q[t, s]
        best = Q.min()
        ties = np.argwhere(Q <= best + tie_rtol * abs(best))
        s, t = (int(v) for v in ties[np.lexsort((ties[:, 1], ties[:, 0]))[0]])
        mod = EdgeMod(s, t, w)
        current = apply_mod(current, mod, require_rho_below_one=strict)
        kernel = build_laplacian_kernel(current, require_rho_below_one=False)
        result.mods.append(mod)
        result.trajectory.append(coherence(kernel))
        result.diameters.append(diameter(current))
    result.network = current
    return result
