"""Discrete-time state-space triples ``(A, B, C)`` with zero feedthrough."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch

__all__ = ["LinearSystem", "series", "parallel", "spectral_radius"]


def spectral_radius(M):
    """Largest eigenvalue modulus of a square matrix (dense eigensolver)."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


@dataclass(frozen=True)
class LinearSystem:
    """``x(t+1) = A x(t) + B u(t)``, ``y(t) = C x(t)``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float)
        C = np.asarray(self.C, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        if C.ndim == 1:
            C = C[None, :]
        if A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"state matrix must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise DimensionMismatch(
                f"input matrix has {B.shape[0]} rows, expected {A.shape[0]}")
        if C.shape[1] != A.shape[0]:
            raise DimensionMismatch(
                f"output matrix has {C.shape[1]} columns, expected {A.shape[0]}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def n_states(self):
        return self.A.shape[0]

    @property
    def n_inputs(self):
        return self.B.shape[1]

    @property
    def n_outputs(self):
        return self.C.shape[0]

    def impulse_response(self, horizon):
        """Markov parameters ``g(t) = C A^(t-1) B`` for ``t = 1..horizon``.

        Returns an array of shape ``(horizon, n_outputs, n_inputs)``; the
        ``t = 0`` term is identically zero and omitted.
        """
        out = np.empty((horizon, self.n_outputs, self.n_inputs))
        X = self.B.copy()
        for k in range(horizon):
            out[k] = self.C @ X
            X = self.A @ X
        return out

    def dc_gain(self):
        n = self.n_states
        return self.C @ np.linalg.solve(np.eye(n) - self.A, self.B)


def series(first, second):
    """Cascade ``second ∘ first``: the output of *first* drives *second*."""
    if first.n_outputs != second.n_inputs:
        raise DimensionMismatch("series connection needs matching dimensions")
    n1, n2 = first.n_states, second.n_states
    A = np.block([[first.A, np.zeros((n1, n2))],
                  [second.B @ first.C, second.A]])
    B = np.vstack([first.B, np.zeros((n2, first.n_inputs))])
    C = np.hstack([np.zeros((second.n_outputs, n1)), second.C])
    return LinearSystem(A, B, C)


def parallel(a, b, sign=1.0):
    """Sum ``a + sign * b`` of two systems sharing input and output spaces."""
    if a.n_inputs != b.n_inputs or a.n_outputs != b.n_outputs:
        raise DimensionMismatch("parallel connection needs matching dimensions")
    n1, n2 = a.n_states, b.n_states
    A = np.block([[a.A, np.zeros((n1, n2))], [np.zeros((n2, n1)), b.A]])
    B = np.vstack([a.B, b.B])
    C = np.hstack([a.C, sign * b.C])
    return LinearSystem(A, B, C)
