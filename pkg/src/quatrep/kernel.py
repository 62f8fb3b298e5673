"""RBF kernel over stacked quaternion samples.

Every kernel argument is the real stacked vector ``[v0; v1; v2; v3]`` of a
sample, so ``K[i, j] = exp(-||x_i - x_j||^2 / delta)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .quat_core import QuaternionVector

__all__ = ["KernelParams", "GramMatrix", "rbf", "gram", "kvec", "median_bandwidth", "stack_samples"]


@dataclass(frozen=True)
class KernelParams:
    delta: float

    def __post_init__(self):
        if not (np.isfinite(self.delta) and self.delta > 0):
            raise ValueError(f"RBF bandwidth must be positive, got {self.delta}")


@dataclass(frozen=True)
class GramMatrix:
    """L x L kernel matrix with one class label per row/column."""

    K: np.ndarray
    labels: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        K = np.array(self.K, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ValueError(f"Gram matrix must be square, got {K.shape}")
        K.setflags(write=False)
        object.__setattr__(self, "K", K)
        if self.labels is not None:
            labels = np.array(self.labels)
            if labels.shape != (K.shape[0],):
                raise ValueError("need one label per Gram row")
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

    @property
    def L(self) -> int:
        return self.K.shape[0]

    def validate(self, sym_tol: float = 1e-12, psd_tol: float = 1e-8) -> None:
        """Raise ``ValueError`` unless K is symmetric, unit-diagonal and PSD."""
        K = self.K
        if np.abs(K - K.T).max() > sym_tol:
            raise ValueError("Gram matrix is not symmetric")
        if np.abs(np.diag(K) - 1.0).max() > sym_tol:
            raise ValueError("RBF Gram matrix must have unit diagonal")
        if np.linalg.eigvalsh(K).min() < -psd_tol:
            raise ValueError("Gram matrix is not positive semidefinite")

    def __array__(self, dtype=None, copy=None):
        return self.K if dtype is None else self.K.astype(dtype)


def stack_samples(samples) -> np.ndarray:
    """``(n, 4q)`` array of stacked sample vectors.

    Accepts a sequence of :class:`QuaternionVector` or an array whose rows
    are already stacked vectors.
    """
    if isinstance(samples, np.ndarray):
        X = np.asarray(samples, dtype=float)
        return X.reshape(X.shape[0], -1)
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one sample")
    lengths = {s.q for s in samples}
    if len(lengths) != 1:
        raise ValueError(f"inconsistent sample lengths {sorted(lengths)}")
    return np.stack([s.parts.reshape(-1) for s in samples])


def _stacked(x) -> np.ndarray:
    if isinstance(x, QuaternionVector):
        return x.parts.reshape(-1)
    return np.asarray(x, dtype=float).ravel()


def rbf(a, b, params: KernelParams) -> float:
    a, b = _stacked(a), _stacked(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch {a.size} vs {b.size}")
    d = a - b
    return float(np.exp(-np.dot(d, d) / params.delta))


def gram(samples: Sequence[QuaternionVector], params: KernelParams, labels=None) -> GramMatrix:
    X = stack_samples(samples)
    K = np.exp(-cdist(X, X, "sqeuclidean") / params.delta)
    return GramMatrix(K, labels)


def kvec(samples: Sequence[QuaternionVector], x, params: KernelParams) -> np.ndarray:
    X = stack_samples(samples)
    x = _stacked(x)
    if x.size != X.shape[1]:
        raise ValueError(f"sample length {x.size} does not match training length {X.shape[1]}")
    return np.exp(-cdist(X, x[None, :], "sqeuclidean")[:, 0] / params.delta)


def median_bandwidth(samples) -> KernelParams:
    """Median of the nonzero pairwise squared distances.

    Zero distances (duplicated samples) are dropped before the median so a
    dataset with repeated images does not collapse the bandwidth.
    """
    X = stack_samples(samples)
    if X.shape[0] < 2:
        raise ValueError("median bandwidth needs at least two samples")
    d = pdist(X, "sqeuclidean")
    d = d[d > 0]
    if d.size == 0:
        raise ValueError("all samples are identical; bandwidth undefined")
    return KernelParams(float(np.median(d)))
