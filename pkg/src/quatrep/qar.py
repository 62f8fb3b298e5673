"""Quaternion adaptive representation (QAR) coder and classifier.

The coder solves

    min_c  ||y - J c||_1 + lam * ||J Diag(c)||_*

with ``J`` the real block embedding of the training dictionary and ``y`` the
stacked test sample, by inexact augmented Lagrange multipliers (IALM) on the
split problem

    min  lam ||Z||_* + ||z||_1   s.t.  z = y - J c,  Z = J Diag(c).

The trace norm of ``J Diag(c)`` behaves like ``||c||_1`` when the atoms are
orthogonal and like ``||c||_2`` when they coincide, so the penalty adapts to
the correlation of the dictionary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ClassificationError, NumericalError
from .prox import soft_threshold
from .quat_core import RealBlockMatrix, RealStackVector, gather_class

__all__ = [
    "SolverConfig",
    "TraceRow",
    "SolverTrace",
    "QarState",
    "normal_matrix_factor",
    "code_update",
    "ialm_trace_lasso",
    "QarCoder",
    "solve_qar",
    "classify_qar",
    "nearest_class",
]

# Added to the normal matrix before factoring to guard rank deficiency.
NORMAL_RIDGE = 1e-10


@dataclass(frozen=True)
class SolverConfig:
    """IALM hyperparameters.

    Attributes
    ----------
    lam : float
        Weight of the trace-norm term.
    u0 : float
        Initial penalty.
    rho : float
        Penalty growth factor, ``1 < rho <= 2``.
    u_max : float
        Penalty cap.
    eps : float
        Tolerance on both infinity-norm feasibility residuals.
    max_iter : int
    """

    lam: float = 1e-3
    u0: float = 1e-2
    rho: float = 1.1
    u_max: float = 1e8
    eps: float = 1e-6
    max_iter: int = 2000

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if not self.u0 > 0:
            raise ValueError("u0 must be positive")
        if not 1 < self.rho <= 2:
            raise ValueError("rho must lie in (1, 2]")
        if not self.u0 <= self.u_max:
            raise ValueError("u0 must not exceed u_max")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")


@dataclass(frozen=True)
class TraceRow:
    iter: int
    data_residual: float
    """``||y - J c - z||_inf`` after the iteration."""
    split_residual: float
    """``||Z - J Diag(c)||_inf`` after the iteration."""
    u: float
    """Penalty used during the iteration."""
    z_obj_before: float
    z_obj_after: float
    """Z-subproblem objective at the previous and the updated Z."""


@dataclass
class SolverTrace:
    rows: list[TraceRow] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.rows)

    @property
    def last(self) -> TraceRow | None:
        return self.rows[-1] if self.rows else None


@dataclass
class QarState:
    """Mutable IALM iterate: surrogates, code, multipliers and penalty."""

    Z: np.ndarray
    z: np.ndarray
    code: np.ndarray
    m1: np.ndarray
    M2: np.ndarray
    u: float

    @classmethod
    def cold_start(cls, m: int, n: int, u0: float) -> "QarState":
        return cls(np.zeros((m, n)), np.zeros(m), np.zeros(n), np.zeros(m), np.zeros((m, n)), u0)


def normal_matrix_factor(G: np.ndarray):
    """Cholesky factor of ``G + Diag(diag(G)) + NORMAL_RIDGE * I``."""
    A = G + np.diag(np.diag(G)) + NORMAL_RIDGE * np.eye(G.shape[0])
    return cho_factor(A, lower=False, check_finite=True)


def _svt_with_norm(W: np.ndarray, tau: float):
    U, s, Vt = np.linalg.svd(W, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    keep = s > 0
    return (U[:, keep] * s[keep]) @ Vt[keep], float(s.sum())


def code_update(J, factor, y, z, m1, Z, M2, u):
    """Minimiser of the code subproblem of the augmented Lagrangian.

    Setting the gradient of
    ``0.5 ||y - J c - z + m1/u||^2 + 0.5 ||Z - J Diag(c) + M2/u||^2``
    to zero gives

        (J^T J + Diag(diag(J^T J))) c = J^T (m1/u + y - z) + diag(J^T (M2/u + Z)),

    solved with the cached ``factor`` of the left-hand matrix.
    """
    rhs = J.T @ (m1 / u + y - z) + np.einsum("ij,ij->j", J, M2 / u + Z)
    return cho_solve(factor, rhs)


def ialm_trace_lasso(J: np.ndarray, y: np.ndarray, cfg: SolverConfig, factor=None):
    """Run the IALM loop for ``min ||y - J c||_1 + lam ||J Diag(c)||_*``.

    Shared by the QAR coder (``J`` = block embedding) and the HD-QAR coder
    (``J`` = Gram matrix).  ``factor`` is a :func:`normal_matrix_factor` of
    ``J.T @ J`` and is recomputed when omitted.

    Returns
    -------
    code : ndarray
    trace : SolverTrace
    """
    J = np.asarray(J, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    m, n = J.shape
    if y.shape != (m,):
        raise ValueError(f"sample length {y.size} does not match dictionary rows {m}")
    if not np.all(np.isfinite(y)):
        raise ValueError("sample contains non-finite values")
    if factor is None:
        factor = normal_matrix_factor(J.T @ J)

    st = QarState.cold_start(m, n, cfg.u0)
    trace = SolverTrace()
    nuc_Z = 0.0
    for it in range(1, cfg.max_iter + 1):
        u = st.u
        tau = cfg.lam / u
        JD = J * st.code
        W = JD - st.M2 / u
        z_obj_before = tau * nuc_Z + 0.5 * float(np.sum((st.Z - W) ** 2))
        st.Z, nuc_Z = _svt_with_norm(W, tau)
        z_obj_after = tau * nuc_Z + 0.5 * float(np.sum((st.Z - W) ** 2))

        st.code = code_update(J, factor, y, st.z, st.m1, st.Z, st.M2, u)

        Jc = J @ st.code
        st.z = soft_threshold(y - Jc + st.m1 / u, 1.0 / u)

        r1 = y - Jc - st.z
        R2 = st.Z - J * st.code
        st.m1 = st.m1 + u * r1
        st.M2 = st.M2 + u * R2
        st.u = min(cfg.rho * u, cfg.u_max)

        if not (np.all(np.isfinite(st.code)) and np.all(np.isfinite(st.M2))
                and np.all(np.isfinite(st.m1))):
            raise NumericalError(f"non-finite iterate at iteration {it} (u={u:.3g})")

        d1 = float(np.abs(r1).max())
        d2 = float(np.abs(R2).max())
        trace.rows.append(TraceRow(it, d1, d2, u, z_obj_before, z_obj_after))
        if d1 <= cfg.eps and d2 <= cfg.eps:
            trace.converged = True
            break
    return st.code, trace


def nearest_class(distances: dict) -> object:
    """Label with the smallest distance; ties go to the lowest label."""
    if not distances:
        raise ClassificationError("empty class set")
    best, best_d = None, np.inf
    for label in sorted(distances):
        d = distances[label]
        if best is None or d < best_d:
            best, best_d = label, d
    if not np.isfinite(best_d):
        raise ClassificationError("no class has a finite distance")
    return best


def _as_vector(y) -> np.ndarray:
    if isinstance(y, RealStackVector):
        return y.data
    return np.asarray(y, dtype=float).ravel()


def _dictionary_factor(D):
    if isinstance(D, RealBlockMatrix):
        if "ialm_factor" not in D._cache:
            D._cache["ialm_factor"] = normal_matrix_factor(D.gram())
        return D._cache["ialm_factor"]
    J = np.asarray(D, dtype=float)
    return normal_matrix_factor(J.T @ J)


def solve_qar(D, y, cfg: SolverConfig | None = None):
    """Code ``y`` over dictionary ``D`` with the QAR objective.

    ``D`` is a :class:`RealBlockMatrix` (its normal-matrix factor is cached
    on the object) or any real matrix.  Returns ``(code, trace)``.
    """
    cfg = cfg or SolverConfig()
    return ialm_trace_lasso(np.asarray(D), _as_vector(y), cfg, _dictionary_factor(D))


def classify_qar(D: RealBlockMatrix, y, code, normalize: bool = False):
    """Assign ``y`` to the class with the smallest reconstruction residual.

    The per-class distance is ``||y - D_c code_c||_2``; with ``normalize``
    it is divided by ``||code_c||_2`` (classes with a zero block get inf).

    Returns
    -------
    label, dict
        Winning label and the distance of every class.
    """
    y = _as_vector(y)
    code = np.asarray(code, dtype=float)
    if code.shape != (4 * D.L,):
        raise ValueError(f"QAR code must have length {4 * D.L}")
    distances = {}
    for c in D.classes:
        Dc, cc = gather_class(D, code, c)
        d = float(np.linalg.norm(y - Dc.data @ cc))
        if normalize:
            n = float(np.linalg.norm(cc))
            d = d / n if n > 0 else np.inf
        distances[c.item() if hasattr(c, "item") else c] = d
    return nearest_class(distances), distances


class QarCoder:
    """QAR classifier bound to one training dictionary.

    The dictionary and its normal-matrix factor are read-only after
    construction, so :meth:`predict` may be called from several threads.
    """

    def __init__(self, D: RealBlockMatrix, cfg: SolverConfig | None = None,
                 normalize: bool = False):
        self.D = D
        self.cfg = cfg or SolverConfig()
        self.normalize = normalize
        self._J = np.asarray(D)
        self._factor = _dictionary_factor(D)

    def solve(self, y):
        return ialm_trace_lasso(self._J, _as_vector(y), self.cfg, self._factor)

    def predict(self, y):
        """Return ``(label, distances, trace)`` for one stacked sample."""
        code, trace = self.solve(y)
        label, distances = classify_qar(self.D, y, code, self.normalize)
        return label, distances, trace
