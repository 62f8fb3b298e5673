"""Norms and proximal operators shared by the IALM solvers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ProxTolerance",
    "soft_threshold",
    "svt",
    "nuclear_norm",
    "matrix_rank",
    "l1",
    "l2",
    "linf",
    "frobenius",
]


@dataclass(frozen=True)
class ProxTolerance:
    """Relative cutoff below which singular values count as zero."""

    svd_cutoff: float = 1e-12

    def __post_init__(self):
        if not self.svd_cutoff >= 0:
            raise ValueError("svd_cutoff must be non-negative")


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not tau >= 0:
        raise ValueError(f"threshold must be non-negative, got {tau}")
    return tau


def _finite_matrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise np.linalg.LinAlgError("SVD of a matrix with non-finite entries")
    return M


def soft_threshold(v, tau: float) -> np.ndarray:
    """Entry-wise shrinkage ``sign(v) * max(|v| - tau, 0)``.

    This is the minimiser of ``tau * ||z||_1 + 0.5 * ||z - v||_2^2``.
    """
    tau = _check_tau(tau)
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def svt(M, tau: float) -> np.ndarray:
    """Singular value thresholding, the prox of ``tau * ||.||_*``.

    Parameters
    ----------
    M : array_like, shape (m, n)
    tau : float
        Non-negative threshold applied to the singular values.

    Returns
    -------
    ndarray, shape (m, n)
        ``U @ diag(max(s - tau, 0)) @ Vt`` from a thin SVD of ``M``.
    """
    tau = _check_tau(tau)
    M = _finite_matrix(M)
    if tau == 0:
        return M.copy()
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    keep = s > 0
    return (U[:, keep] * s[keep]) @ Vt[keep]


def nuclear_norm(M) -> float:
    M = _finite_matrix(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False).sum())


def matrix_rank(M, tol: ProxTolerance = ProxTolerance()) -> int:
    """Number of singular values above ``svd_cutoff * sigma_max``."""
    M = _finite_matrix(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.count_nonzero(s > tol.svd_cutoff * s[0]))


def l1(v) -> float:
    return float(np.abs(np.asarray(v, dtype=float)).sum())


def l2(v) -> float:
    return float(np.linalg.norm(np.asarray(v, dtype=float).ravel()))


def linf(v) -> float:
    v = np.asarray(v, dtype=float)
    return float(np.abs(v).max()) if v.size else 0.0


def frobenius(M) -> float:
    return float(np.linalg.norm(np.asarray(M, dtype=float), "fro"))
