"""Brute-force reference computations.

Nothing in here calls the closed-form code in :mod:`edgemod.stable` or
:mod:`edgemod.laplacian`: norms come from frequency sweeps and truncated
impulse-response sums, Gramians from SciPy's Lyapunov solver, and modified
networks are rebuilt from scratch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_discrete_lyapunov

from .errors import DimensionMismatch, HorizonTooShort, UnstableSystem
from .graph_model import Kind, apply_mod
from .systems import LinearSystem, parallel

__all__ = [
    "SweepConfig", "TruncationConfig", "SweepResult", "H2Result",
    "frequency_response", "hinf_sweep", "dc_gain_norm", "h2_truncated", "simulate",
    "coherence_monte_carlo", "coherence_direct", "MeasureResult",
    "rebuild_and_measure", "difference_system",
]


@dataclass(frozen=True)
class SweepConfig:
    grid_points: int = 4096
    refinement: int = 16

    def __post_init__(self):
        if self.grid_points < 64:
            raise ValueError("grid_points must be at least 64")
        if self.refinement < 1:
            raise ValueError("refinement must be at least 1")


@dataclass(frozen=True)
class TruncationConfig:
    """``horizon=None`` picks the horizon from the decay of the response."""

    horizon: int = None
    rtol: float = 1e-15
    max_horizon: int = 200_000
    gramian: bool = True


@dataclass(frozen=True)
class SweepResult:
    value: float
    theta: float
    spacing: float


@dataclass(frozen=True)
class H2Result:
    """Squared H2 norm from a truncated impulse-response sum.

    ``value <= true <= value + tail_bound`` (up to round-off).
    ``gramian_value`` is the same quantity from a Lyapunov solve, if computed.
    """

    value: float
    tail_bound: float
    horizon: int
    gramian_value: float = None

    @property
    def consistent(self):
        if self.gramian_value is None:
            return True
        slack = 1e-8 * max(1.0, abs(self.gramian_value)) + self.tail_bound
        return abs(self.gramian_value - self.value) <= slack

    def __iter__(self):
        yield self.value
        yield self.tail_bound


def _rho(A):
    return float(np.max(np.abs(np.linalg.eigvals(A)))) if A.size else 0.0


def frequency_response(sys, thetas):
    """``G(e^{i theta}) = C (e^{i theta} I - A)^-1 B`` for each theta."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    n = sys.n_states
    out = np.empty((len(thetas), sys.n_outputs, sys.n_inputs), dtype=complex)
    I = np.eye(n)
    # bound the batch so that the stacked complex matrices stay near 128 MB
    chunk = int(max(1, min(256, 2 ** 23 // max(n * n, 1))))
    for start in range(0, len(thetas), chunk):
        z = np.exp(1j * thetas[start:start + chunk])
        M = z[:, None, None] * I[None] - sys.A[None]
        rhs = np.broadcast_to(sys.B, (len(z),) + sys.B.shape)
        X = np.linalg.solve(M, rhs)
        out[start:start + len(z)] = sys.C[None] @ X
    return out


def _sigma_max(G):
    if G.shape[1] == 0 or G.shape[2] == 0:
        return np.zeros(G.shape[0])
    return np.linalg.svd(G, compute_uv=False)[:, 0]


def hinf_sweep(sys, cfg=SweepConfig()):
    """Largest singular value of the frequency response over a theta grid.

    The global grid includes theta = 0; a second, denser grid is laid over
    the two coarse cells around the best point.
    """
    if sys.n_states and _rho(sys.A) >= 1.0:
        raise UnstableSystem("H-infinity sweep needs a stable system")
    N = cfg.grid_points + (cfg.grid_points % 2)
    thetas = -np.pi + 2 * np.pi * np.arange(N + 1) / N
    thetas[N // 2] = 0.0
    sig = _sigma_max(frequency_response(sys, thetas))
    k = int(np.argmax(sig))
    best, theta = float(sig[k]), float(thetas[k])
    spacing = 2 * np.pi / N
    if cfg.refinement > 1:
        fine = theta + np.linspace(-spacing, spacing, 2 * cfg.refinement + 1)
        sig_f = _sigma_max(frequency_response(sys, fine))
        j = int(np.argmax(sig_f))
        if sig_f[j] > best:
            best, theta = float(sig_f[j]), float(fine[j])
        spacing /= cfg.refinement
    return SweepResult(best, theta, spacing)


def dc_gain_norm(sys):
    """Largest singular value of the frequency response at theta = 0 only."""
    if sys.n_states and _rho(sys.A) >= 1.0:
        raise UnstableSystem("DC gain needs a stable system")
    return float(_sigma_max(frequency_response(sys, [0.0]))[0])


def h2_truncated(sys, cfg=TruncationConfig()):
    """Squared H2 norm by summing ``||C A^(t-1) B||_F^2`` over t.

    The tail after horizon ``T`` is bounded by
    ``||C||_2^2 ||A^T B||_F^2 / (1 - rho(A))``.
    """
    A, B, C = sys.A, sys.B, sys.C
    rho = _rho(A)
    if rho >= 1.0:
        raise UnstableSystem("H2 norm needs a stable system")
    c2 = float(np.linalg.norm(C, 2)) ** 2 if C.size else 0.0
    factor = c2 / (1.0 - rho)
    X = B.copy()
    total = 0.0
    limit = cfg.horizon if cfg.horizon is not None else cfg.max_horizon
    T = 0
    tail = factor * float(np.sum(X * X))
    floor = 1e-30 * (1.0 + tail)
    while T < limit:
        g = C @ X
        total += float(np.sum(g * g))
        X = A @ X
        T += 1
        tail = factor * float(np.sum(X * X))
        if cfg.horizon is None and tail <= cfg.rtol * total + floor:
            break
        if tail == 0.0:
            break
    gram = None
    if cfg.gramian and sys.n_states:
        W = solve_discrete_lyapunov(A, B @ B.T)
        gram = float(np.trace(C @ W @ C.T))
    return H2Result(total, tail, T, gram)


def simulate(sys, inputs, x0=None):
    """Outputs ``y(0..T-1)`` for the input sequence ``inputs`` of shape (T, m)."""
    u = np.asarray(inputs, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    if u.shape[1] != sys.n_inputs:
        raise DimensionMismatch(
            f"input has {u.shape[1]} channels, system expects {sys.n_inputs}")
    x = np.zeros(sys.n_states) if x0 is None else np.array(x0, dtype=float)
    y = np.empty((u.shape[0], sys.n_outputs))
    for k in range(u.shape[0]):
        y[k] = sys.C @ x
        x = sys.A @ x + sys.B @ u[k]
    return y


def _displacement_rho(A):
    n = A.shape[0]
    AJ = (np.eye(n) - np.full((n, n), 1.0 / n)) @ A
    return _rho(AJ)


def coherence_monte_carlo(net, trials, seed, horizon=None):
    """Sample-mean estimate of the steady-state disagreement variance.

    Simulates ``x(t+1) = A x(t) + noise`` from ``x(0) = 0`` with unit-variance
    Gaussian noise on every node and returns ``(estimate, standard_error)``
    of ``sum_i (x_i(T) - mean(x(T)))^2``.
    """
    if net.kind is not Kind.LAPLACIAN:
        raise TypeError("coherence is defined for Laplacian networks")
    A = np.asarray(net.state_matrix)
    n = A.shape[0]
    rho = _displacement_rho(A)
    needed = int(np.ceil(np.log(1e-3) / np.log(rho))) if rho > 0 else 1
    if horizon is None:
        horizon = needed
    elif rho ** horizon >= 1e-3:
        raise HorizonTooShort(
            f"horizon {horizon} too short: rho^T = {rho ** horizon:.3g}")
    rng = np.random.default_rng(seed)
    X = np.zeros((n, trials))
    for _ in range(horizon):
        X = A @ X + rng.standard_normal((n, trials))
    dev = X - X.mean(axis=0, keepdims=True)
    samples = np.sum(dev * dev, axis=0)
    return float(samples.mean()), float(samples.std(ddof=1) / np.sqrt(trials))


def coherence_direct(net):
    """``Tr((I - A_J^2)^-1) - 1`` from a plain matrix inverse."""
    A = np.asarray(net.state_matrix)
    n = A.shape[0]
    AJ = (np.eye(n) - np.full((n, n), 1.0 / n)) @ A
    return float(np.trace(np.linalg.inv(np.eye(n) - AJ @ AJ))) - 1.0


def difference_system(sys_new, sys_old):
    """``G_new - G_old`` realized as a parallel connection."""
    return parallel(sys_new, sys_old, sign=-1.0)


@dataclass(frozen=True)
class MeasureResult:
    spectral_radius: float
    stable: bool
    hinf: float = None
    h2: H2Result = None
    coherence_before: float = None
    coherence_after: float = None

    @property
    def coherence_delta(self):
        if self.coherence_before is None:
            return None
        return self.coherence_after - self.coherence_before


def _hinf(delta, sweep, hinf_mode):
    if hinf_mode == "sweep":
        return hinf_sweep(delta, sweep).value
    if hinf_mode == "dc":
        return dc_gain_norm(delta)
    if hinf_mode is None:
        return None
    raise ValueError("hinf_mode must be 'sweep', 'dc' or None")


def rebuild_and_measure(net, mod, sweep=SweepConfig(),
                        trunc=TruncationConfig(), norms=True,
                        hinf_mode="sweep"):
    """Apply *mod*, rebuild the network and measure everything directly.

    For direct networks: spectral radius of the modified matrix and, when it
    is stable, the H-infinity and squared H2 norms of the delta system. For
    Laplacian networks: the same for the displacement delta system plus the
    coherence before and after.

    ``hinf_mode="dc"`` replaces the full sweep by the single point
    ``theta = 0``, which keeps large systems affordable; ``None`` skips it.
    """
    if net.kind is Kind.DIRECT:
        new = apply_mod(net, mod)
        A_new = np.asarray(new.state_matrix)
        rho = _rho(A_new)
        stable = rho < 1.0
        hinf = h2 = None
        if stable and norms:
            delta = difference_system(new.system(), net.system())
            hinf = _hinf(delta, sweep, hinf_mode)
            h2 = h2_truncated(delta, trunc)
        return MeasureResult(rho, stable, hinf, h2)

    new = apply_mod(net, mod, require_rho_below_one=False)
    rho = _displacement_rho(np.asarray(new.state_matrix))
    stable = rho < 1.0
    hinf = h2 = c_after = None
    c_before = coherence_direct(net) if net.all_nodes_io else None
    if stable:
        if c_before is not None:
            c_after = coherence_direct(new)
        if norms:
            n = net.n
            P = np.eye(n) - np.full((n, n), 1.0 / n)
            old_sys = LinearSystem(P @ net.state_matrix, net.input_matrix,
                                   net.output_matrix)
            new_sys = LinearSystem(P @ new.state_matrix, net.input_matrix,
                                   net.output_matrix)
            delta = difference_system(new_sys, old_sys)
            hinf = _hinf(delta, sweep, hinf_mode)
            h2 = h2_truncated(delta, trunc)
    return MeasureResult(rho, stable, hinf, h2, c_before, c_after)
