"""High-dimension QAR: the QAR iteration driven by a kernel Gram matrix.

With ``K`` the Gram matrix of the training samples and ``k`` the kernel
vector of a test sample, HD-QAR solves

    min  lam ||S||_* + ||s||_1   s.t.  s = k - K g,  S = K Diag(g)

by the same IALM scheme as :mod:`quatrep.qar` and classifies with the
coefficient-normalised residual ``||k - K_c g_c|| / ||g_c||``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ClassificationError
from .kernel import GramMatrix
from .qar import SolverConfig, ialm_trace_lasso, nearest_class, normal_matrix_factor

__all__ = ["HdqarState", "HdqarCoder", "solve_hdqar", "classify_hdqar"]


@dataclass
class HdqarState:
    """IALM iterate in kernel space; mirrors :class:`quatrep.qar.QarState`."""

    S: np.ndarray
    s: np.ndarray
    gamma: np.ndarray
    m1: np.ndarray
    M2: np.ndarray
    u: float


def _gram_factor(K: GramMatrix):
    if "ialm_factor" not in K._cache:
        K._cache["ialm_factor"] = normal_matrix_factor(K.K.T @ K.K)
    return K._cache["ialm_factor"]


def solve_hdqar(K: GramMatrix, k, cfg: SolverConfig | None = None):
    """Kernel-space code of one test sample; returns ``(gamma, trace)``."""
    cfg = cfg or SolverConfig()
    if not isinstance(K, GramMatrix):
        K = GramMatrix(K)
    k = np.asarray(k, dtype=float).ravel()
    if k.shape != (K.L,):
        raise ValueError(f"kernel vector length {k.size} does not match L={K.L}")
    return ialm_trace_lasso(K.K, k, cfg, _gram_factor(K))


def classify_hdqar(K: GramMatrix, k, gamma):
    """Per-class distance ``||k - K_c g_c||_2 / ||g_c||_2``.

    Classes whose coefficient block is zero get an infinite distance; if
    every class is in that state a :class:`ClassificationError` is raised.

    Returns
    -------
    label, dict
    """
    if K.labels is None:
        raise ValueError("Gram matrix carries no class labels")
    k = np.asarray(k, dtype=float).ravel()
    gamma = np.asarray(gamma, dtype=float).ravel()
    if gamma.shape != (K.L,):
        raise ValueError(f"gamma length {gamma.size} does not match L={K.L}")
    distances = {}
    for c in np.unique(K.labels):
        idx = np.flatnonzero(K.labels == c)
        gc = gamma[idx]
        n = float(np.linalg.norm(gc))
        if n == 0:
            d = np.inf
        else:
            d = float(np.linalg.norm(k - K.K[:, idx] @ gc)) / n
        distances[c.item() if hasattr(c, "item") else c] = d
    if not distances:
        raise ClassificationError("empty class set")
    if all(np.isinf(d) for d in distances.values()):
        raise ClassificationError("every class has an all-zero coefficient block")
    return nearest_class(distances), distances


class HdqarCoder:
    """HD-QAR classifier bound to one training Gram matrix."""

    def __init__(self, K: GramMatrix, cfg: SolverConfig | None = None):
        self.K = K
        self.cfg = cfg or SolverConfig()
        self._factor = _gram_factor(K)

    def solve(self, k):
        return ialm_trace_lasso(self.K.K, np.asarray(k, dtype=float).ravel(), self.cfg, self._factor)

    def predict(self, k):
        gamma, trace = self.solve(k)
        label, distances = classify_hdqar(self.K, k, gamma)
        return label, distances, trace
