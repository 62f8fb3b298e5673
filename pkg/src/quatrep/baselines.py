"""Reference coders: ridge (CRC/QCRC) and basis pursuit (QSRC).

Both operate on any real design matrix.  Passed a :class:`RealBlockMatrix`
they are the quaternion variants; passed a plain matrix of stacked colour
channels (or grey levels) they are ordinary CRC.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import NumericalError
from .prox import soft_threshold
from .qar import SolverConfig, SolverTrace, TraceRow, _as_vector, nearest_class
from .quat_core import RealBlockMatrix, gather_class

__all__ = [
    "RidgeConfig",
    "SingularSystemWarning",
    "qcrc_solve",
    "crc_solve",
    "qsrc_solve",
    "classify_baseline",
    "RidgeCoder",
    "QsrcCoder",
]


class SingularSystemWarning(RuntimeWarning):
    """Ridge system was singular; a pseudo-inverse solution was returned."""


@dataclass(frozen=True)
class RidgeConfig:
    mu: float = 1e-3

    def __post_init__(self):
        if not self.mu >= 0:
            raise ValueError("ridge weight mu must be non-negative")


def _ridge_factor(J: np.ndarray, mu: float):
    if mu == 0 and np.linalg.matrix_rank(J) < J.shape[1]:
        return None
    A = J.T @ J + mu * np.eye(J.shape[1])
    try:
        return cho_factor(A)
    except LinAlgError:
        return None


def _ridge(J: np.ndarray, y: np.ndarray, mu: float, factor=None) -> np.ndarray:
    if y.shape != (J.shape[0],):
        raise ValueError(f"sample length {y.size} does not match dictionary rows {J.shape[0]}")
    if factor is None:
        factor = _ridge_factor(J, mu)
    if factor is None:
        warnings.warn("singular ridge system; falling back to pseudo-inverse", SingularSystemWarning,
                      stacklevel=3)
        return np.linalg.pinv(J) @ y
    return cho_solve(factor, J.T @ y)


def qcrc_solve(D, y, cfg: RidgeConfig | None = None) -> np.ndarray:
    """Ridge code ``(D^T D + mu I)^{-1} D^T y``.

    With ``mu = 0`` and a rank-deficient ``D`` the minimum-norm least
    squares solution is returned and a :class:`SingularSystemWarning` is
    issued.
    """
    cfg = cfg or RidgeConfig()
    return _ridge(np.asarray(D, dtype=float), _as_vector(y), cfg.mu)


crc_solve = qcrc_solve


def qsrc_solve(D, y, cfg: SolverConfig | None = None):
    """Basis pursuit ``min ||c||_1 s.t. D c = y`` by augmented Lagrangian splitting.

    ``y`` is first projected onto the range of ``D``.  A representable ``y``
    is unchanged; otherwise the result is the minimum-l1 code among the
    least-squares fits, so the constraint is always feasible.  With the
    split ``w = c`` and ``c`` confined to the affine set ``{c : D c = P y}``
    the loop iterates

    * ``c <- proj(w + m/u)`` (exact projection through a cached thin SVD)
    * ``w <- soft_threshold(c - m/u, 1/u)``
    * ``m <- m + u (w - c)``

    from a zero start.  The penalty starts at ``u0`` and is rebalanced each
    iteration for the first 200 iterations (doubled while the primal
    residual dominates, halved while the dual residual
    ``u ||w - w_prev||_inf`` dominates, kept within ``[u0 / u_max, u_max]``)
    and then held fixed; a geometric schedule can freeze the iterates at a
    feasible but suboptimal point.  The loop stops once the primal,
    split and dual residuals are all below ``eps``.  Runs that exhaust
    ``max_iter`` return ``trace.converged = False`` and issue a
    ``RuntimeWarning``.

    Returns
    -------
    code : ndarray
        The feasible iterate ``c``.
    trace : SolverTrace
        ``data_residual`` holds ``||P y - D c||_inf`` and ``split_residual``
        holds ``||w - c||_inf``; the Z-objective columns are unused (nan).
    """
    cfg = cfg or SolverConfig()
    code, trace = _qsrc(np.asarray(D, dtype=float), _as_vector(y), cfg, _thin_svd(D))
    if not trace.converged:
        warnings.warn(f"basis pursuit stopped unconverged after {trace.iterations} iterations",
                      RuntimeWarning, stacklevel=2)
    return code, trace


def _thin_svd(D):
    """``(U_r, s_r, V_r)`` for the numerically nonzero singular values."""
    if isinstance(D, RealBlockMatrix) and "thin_svd" in D._cache:
        return D._cache["thin_svd"]
    J = np.asarray(D, dtype=float)
    U, s, Vt = np.linalg.svd(J, full_matrices=False)
    r = int(np.count_nonzero(s > max(J.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)))
    parts = (U[:, :r], s[:r], Vt[:r].T)
    if isinstance(D, RealBlockMatrix):
        D._cache["thin_svd"] = parts
    return parts


# Residual balancing: grow or shrink u by BALANCE_STEP whenever one residual
# exceeds the other by more than BALANCE_RATIO.  After BALANCE_ITERS the
# penalty is frozen so the fixed-penalty convergence guarantee applies.
BALANCE_RATIO = 10.0
BALANCE_STEP = 2.0
BALANCE_ITERS = 200


def _qsrc(J, y, cfg, svd_parts):
    m, n = J.shape
    if y.shape != (m,):
        raise ValueError(f"sample length {y.size} does not match dictionary rows {m}")
    U, s, V = svd_parts
    c_ls = V @ ((U.T @ y) / s)
    target = J @ c_ls

    def project(v):
        return c_ls + v - V @ (V.T @ v)

    c = c_ls
    w = np.zeros(n)
    mult = np.zeros(n)
    u = cfg.u0
    u_min = cfg.u0 / cfg.u_max
    trace = SolverTrace()
    for it in range(1, cfg.max_iter + 1):
        c = project(w + mult / u)
        w_old = w
        w = soft_threshold(c - mult / u, 1.0 / u)
        r2 = w - c
        mult = mult + u * r2
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(mult))):
            raise NumericalError(f"non-finite iterate at iteration {it}")
        d1 = float(np.abs(target - J @ c).max())
        d2 = float(np.abs(r2).max())
        dual = u * float(np.abs(w - w_old).max())
        trace.rows.append(TraceRow(it, d1, d2, u, np.nan, np.nan))
        if d1 <= cfg.eps and d2 <= cfg.eps and dual <= cfg.eps:
            trace.converged = True
            break
        if it > BALANCE_ITERS:
            continue
        if d2 > BALANCE_RATIO * dual:
            u = min(u * BALANCE_STEP, cfg.u_max)
        elif dual > BALANCE_RATIO * d2:
            u = max(u / BALANCE_STEP, u_min)
    return c, trace


def classify_baseline(D, y, code, normalized: bool = False, labels=None):
    """Minimum per-class residual rule shared by all baseline coders.

    ``D`` is a :class:`RealBlockMatrix` with a 4L code, or a plain matrix
    whose column ``labels`` must be given.  With ``normalized`` the residual
    is divided by ``||code_c||_2``.

    Returns
    -------
    label, dict
    """
    y = _as_vector(y)
    code = np.asarray(code, dtype=float)
    if isinstance(D, RealBlockMatrix):
        parts = ((c, *gather_class(D, code, c)) for c in D.classes)
        blocks = ((c, Dc.data, cc) for c, Dc, cc in parts)
    else:
        if labels is None:
            raise ValueError("plain design matrices need column labels")
        J = np.asarray(D, dtype=float)
        labels = np.asarray(labels)
        blocks = ((c, J[:, labels == c], code[labels == c]) for c in np.unique(labels))
    distances = {}
    for c, Dc, cc in blocks:
        d = float(np.linalg.norm(y - Dc @ cc))
        if normalized:
            n = float(np.linalg.norm(cc))
            d = d / n if n > 0 else np.inf
        distances[c.item() if hasattr(c, "item") else c] = d
    return nearest_class(distances), distances


class RidgeCoder:
    """CRC/QCRC classifier with the ridge system factored once."""

    def __init__(self, D, cfg: RidgeConfig | None = None, labels=None, normalized: bool = True):
        self.D = D
        self.cfg = cfg or RidgeConfig()
        self.labels = labels
        self.normalized = normalized
        self._J = np.asarray(D, dtype=float)
        self._factor = _ridge_factor(self._J, self.cfg.mu)

    def solve(self, y):
        return _ridge(self._J, _as_vector(y), self.cfg.mu, self._factor)

    def predict(self, y):
        code = self.solve(y)
        label, distances = classify_baseline(self.D, y, code, self.normalized, self.labels)
        return label, distances, None


class QsrcCoder:
    def __init__(self, D, cfg: SolverConfig | None = None, normalized: bool = False):
        self.D = D
        self.cfg = cfg or SolverConfig()
        self.normalized = normalized
        self._J = np.asarray(D, dtype=float)
        self._svd = _thin_svd(D)

    def solve(self, y):
        return _qsrc(self._J, _as_vector(y), self.cfg, self._svd)

    def predict(self, y):
        code, trace = self.solve(y)
        label, distances = classify_baseline(self.D, y, code, self.normalized)
        return label, distances, trace
