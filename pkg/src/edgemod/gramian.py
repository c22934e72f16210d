"""Controllability Gramians by Smith doubling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LyapunovNotConverged

__all__ = ["Gramian", "dlyap_doubling", "controllability_gramian",
           "observability_gramian"]


@dataclass(frozen=True)
class Gramian:
    W: np.ndarray

    @property
    def trace(self):
        return float(np.trace(self.W))

    def residual(self, A, B):
        """Relative Frobenius residual of ``A W A^T - W + B B^T``."""
        R = A @ self.W @ A.T - self.W + B @ B.T
        return float(np.linalg.norm(R) / max(np.linalg.norm(self.W), 1.0))


def dlyap_doubling(A, Q, rtol=1e-13, max_iter=64):
    """Solve ``A X A^T - X + Q = 0`` for stable ``A``.

    Iterates ``X <- X + A_k X A_k^T``, ``A_k <- A_k^2``, which after ``k``
    steps sums the first ``2^k`` terms of ``sum_t A^t Q (A^T)^t``.
    """
    A = np.asarray(A, dtype=float)
    X = np.array(Q, dtype=float)
    X = 0.5 * (X + X.T)
    Ak = A.copy()
    for _ in range(max_iter):
        inc = Ak @ X @ Ak.T
        X = X + inc
        X = 0.5 * (X + X.T)
        inc_norm = np.linalg.norm(inc)
        if not np.isfinite(inc_norm):
            break
        if inc_norm <= rtol * np.linalg.norm(X):
            return X
        Ak = Ak @ Ak
    raise LyapunovNotConverged(
        "doubling iteration did not converge; is the state matrix stable?")


def controllability_gramian(A, B, rtol=1e-13):
    B = np.asarray(B, dtype=float)
    return Gramian(dlyap_doubling(A, B @ B.T, rtol=rtol))


def observability_gramian(A, C, rtol=1e-13):
    C = np.asarray(C, dtype=float)
    return Gramian(dlyap_doubling(np.asarray(A).T, C.T @ C, rtol=rtol))
