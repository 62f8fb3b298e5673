"""Randomized invariant suite behind ``quatrep check``.

Each check draws its own instances from a seeded generator and returns
``(name, passed, detail)``.  The suite is cheap enough to run as a smoke
test on a fresh install.
"""

from __future__ import annotations

import numpy as np

from .kernel import gram, kvec, median_bandwidth
from .prox import frobenius, l1, l2, matrix_rank, nuclear_norm, soft_threshold, svt
from .qar import SolverConfig, solve_qar
from .quat_core import (
    QuaternionMatrix,
    QuaternionVector,
    embed_matrix,
    embed_vector,
    qmatmul,
    qmatvec,
)

__all__ = ["random_qmatrix", "random_qvector", "run_all"]


def random_qmatrix(rng, q: int, L: int, labels=None) -> QuaternionMatrix:
    return QuaternionMatrix(rng.standard_normal((4, q, L)), labels)


def random_qvector(rng, q: int) -> QuaternionVector:
    return QuaternionVector(rng.standard_normal((4, q)))


def check_homomorphism(rng, n):
    worst = 0.0
    for _ in range(n):
        q, L, p = rng.integers(1, 6, size=3)
        X = random_qmatrix(rng, q, L)
        a = random_qvector(rng, L)
        lhs = embed_vector(qmatvec(X, a)).data
        rhs = embed_matrix(X).data @ embed_vector(a).data
        worst = max(worst, float(np.abs(lhs - rhs).max()))
        Y = random_qmatrix(rng, L, p)
        prod = embed_matrix(qmatmul(X, Y)).data - embed_matrix(X).data @ embed_matrix(Y).data
        worst = max(worst, float(np.abs(prod).max()))
    return "embedding homomorphism", worst <= 1e-12, f"max error {worst:.2e} over {n} instances"


def check_trace_norm_limits(rng, n):
    worst = 0.0
    for _ in range(n):
        m, k = sorted(rng.integers(2, 21, size=2))[::-1]
        Q, _ = np.linalg.qr(rng.standard_normal((2 * m, k)))
        v = rng.standard_normal(k)
        worst = max(worst, abs(nuclear_norm(Q * v) - l1(v)))
        d = rng.standard_normal(m)
        d /= np.linalg.norm(d)
        worst = max(worst, abs(nuclear_norm(np.outer(d, v)) - l2(v)))
    return "trace-norm l1/l2 limits", worst <= 1e-10, f"max error {worst:.2e}"


def check_sandwich(rng, n):
    bad = 0
    for _ in range(n):
        r, c = rng.integers(1, 9, size=2)
        M = rng.standard_normal((r, c))
        f, nuc = frobenius(M), nuclear_norm(M)
        if not (f <= nuc * (1 + 1e-12) and nuc <= np.sqrt(matrix_rank(M)) * f * (1 + 1e-12)):
            bad += 1
    return "norm sandwich", bad == 0, f"{bad} violations in {n}"


def check_prox(rng, n):
    worst = 0.0
    for _ in range(n):
        A, B = rng.standard_normal((2, 5, 4))
        tau = float(rng.uniform(0, 2))
        gap = frobenius(svt(A, tau) - svt(B, tau)) - frobenius(A - B)
        worst = max(worst, gap)
        v = rng.standard_normal(6)
        diag_err = float(np.abs(np.diag(svt(np.diag(v), tau)) - soft_threshold(v, tau)).max())
        worst = max(worst, diag_err - 1e-12)
    return "svt non-expansive, diagonal consistency", worst <= 1e-12, f"worst slack {worst:.2e}"


def check_gram(rng, n):
    worst_sym, worst_eig, worst_col = 0.0, 0.0, 0.0
    for _ in range(n):
        L, q = int(rng.integers(2, 30)), int(rng.integers(1, 8))
        samples = [random_qvector(rng, q) for _ in range(L)]
        params = median_bandwidth(samples)
        K = gram(samples, params).K
        worst_sym = max(worst_sym, float(np.abs(K - K.T).max()), float(np.abs(np.diag(K) - 1).max()))
        worst_eig = min(worst_eig, float(np.linalg.eigvalsh(K).min()))
        i = int(rng.integers(L))
        worst_col = max(worst_col, float(np.abs(K[:, i] - kvec(samples, samples[i], params)).max()))
    ok = worst_sym <= 1e-12 and worst_eig >= -1e-8 and worst_col <= 1e-12
    return "Gram invariants", ok, f"sym/diag {worst_sym:.1e}, min eig {worst_eig:.1e}, kvec {worst_col:.1e}"


def check_qar_feasibility(rng, n):
    cfg = SolverConfig()
    worst, unconverged = 0.0, 0
    for _ in range(n):
        q, L = int(rng.integers(2, 6)), int(rng.integers(2, 6))
        D = embed_matrix(random_qmatrix(rng, q, L, labels=np.arange(L) % 2))
        y = D.data @ rng.standard_normal(4 * L) * 0.3
        _, trace = solve_qar(D, y, cfg)
        if not trace.converged:
            unconverged += 1
            continue
        worst = max(worst, trace.last.data_residual, trace.last.split_residual)
    ok = worst <= cfg.eps and unconverged < n
    return "QAR feasibility at convergence", ok, f"max residual {worst:.1e}, {unconverged}/{n} unconverged"


CHECKS = (
    (check_homomorphism, 1.0),
    (check_trace_norm_limits, 1.0),
    (check_sandwich, 1.0),
    (check_prox, 1.0),
    (check_gram, 0.5),
    (check_qar_feasibility, 0.1),
)


def run_all(instances: int = 100, seed: int = 0):
    """Run every check on ``instances`` draws (scaled down for the costly ones)."""
    out = []
    for i, (fn, scale) in enumerate(CHECKS):
        rng = np.random.default_rng([seed, i])
        out.append(fn(rng, max(1, int(instances * scale))))
    return out
