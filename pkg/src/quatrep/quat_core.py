"""Quaternion algebra and the real embeddings used by every coder.

A quaternion matrix ``V = V0 + V1 i + V2 j + V3 k`` is stored as its four
real parts.  Coding problems over quaternions are linearised through two
operators:

* :func:`embed_matrix` -- the 4q x 4L left-regular block matrix, and
* :func:`embed_vector` -- the vertical stack ``[v0; v1; v2; v3]``,

which satisfy ``embed_vector(X a) == embed_matrix(X) @ embed_vector(a)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "Quaternion",
    "QuaternionVector",
    "QuaternionMatrix",
    "RealBlockMatrix",
    "RealStackVector",
    "qmul",
    "qconj",
    "qmod",
    "qadd",
    "embed_matrix",
    "embed_vector",
    "unembed_vector",
    "unembed_matrix",
    "qmatvec",
    "qmatmul",
    "gather_class",
    "encode_rgb",
]


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Quaternion:
    """Quaternion ``q0 + q1 i + q2 j + q3 k``."""

    q0: float
    q1: float = 0.0
    q2: float = 0.0
    q3: float = 0.0

    def __post_init__(self):
        for name in ("q0", "q1", "q2", "q3"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"quaternion component {name} is not finite")
            object.__setattr__(self, name, value)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.q0, self.q1, self.q2, self.q3)

    def __mul__(self, other: "Quaternion") -> "Quaternion":
        return qmul(self, other)

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return qadd(self, other)

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.q0, -self.q1, -self.q2, -self.q3)

    def __abs__(self) -> float:
        return qmod(self)


def qmul(p: Quaternion, q: Quaternion) -> Quaternion:
    """Hamilton product ``p * q`` (``p`` on the left)."""
    p0, p1, p2, p3 = p.as_tuple()
    q0, q1, q2, q3 = q.as_tuple()
    return Quaternion(
        p0 * q0 - p1 * q1 - p2 * q2 - p3 * q3,
        p0 * q1 + p1 * q0 + p2 * q3 - p3 * q2,
        p0 * q2 - p1 * q3 + p2 * q0 + p3 * q1,
        p0 * q3 + p1 * q2 - p2 * q1 + p3 * q0,
    )


def qconj(q: Quaternion) -> Quaternion:
    return Quaternion(q.q0, -q.q1, -q.q2, -q.q3)


def qmod(q: Quaternion) -> float:
    return math.sqrt(q.q0 * q.q0 + q.q1 * q.q1 + q.q2 * q.q2 + q.q3 * q.q3)


def qadd(p: Quaternion, q: Quaternion) -> Quaternion:
    return Quaternion(p.q0 + q.q0, p.q1 + q.q1, p.q2 + q.q2, p.q3 + q.q3)


@dataclass(frozen=True)
class QuaternionVector:
    """Length-q quaternion signal held as a read-only ``(4, q)`` array."""

    parts: np.ndarray

    def __post_init__(self):
        parts = _frozen(self.parts)
        if parts.ndim != 2 or parts.shape[0] != 4 or parts.shape[1] < 1:
            raise ValueError(f"expected parts of shape (4, q>=1), got {parts.shape}")
        object.__setattr__(self, "parts", parts)

    @classmethod
    def from_parts(cls, v0, v1, v2, v3) -> "QuaternionVector":
        arrays = [np.asarray(v, dtype=float).ravel() for v in (v0, v1, v2, v3)]
        if len({a.size for a in arrays}) != 1:
            raise ValueError("quaternion vector parts differ in length")
        return cls(np.stack(arrays))

    @property
    def q(self) -> int:
        return self.parts.shape[1]

    def __len__(self) -> int:
        return self.q

    def __getitem__(self, i: int) -> Quaternion:
        return Quaternion(*self.parts[:, i])

    v0 = property(lambda self: self.parts[0])
    v1 = property(lambda self: self.parts[1])
    v2 = property(lambda self: self.parts[2])
    v3 = property(lambda self: self.parts[3])


@dataclass(frozen=True)
class QuaternionMatrix:
    """q x L quaternion matrix held as a read-only ``(4, q, L)`` array.

    ``labels`` optionally tags each of the L columns with a class.
    """

    parts: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        parts = _frozen(self.parts)
        if parts.ndim != 3 or parts.shape[0] != 4:
            raise ValueError(f"expected parts of shape (4, q, L), got {parts.shape}")
        object.__setattr__(self, "parts", parts)
        if self.labels is not None:
            labels = np.array(self.labels)
            if labels.shape != (parts.shape[2],):
                raise ValueError("need exactly one label per column")
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

    @classmethod
    def from_parts(cls, V0, V1, V2, V3, labels=None) -> "QuaternionMatrix":
        arrays = [np.atleast_2d(np.asarray(V, dtype=float)) for V in (V0, V1, V2, V3)]
        if len({a.shape for a in arrays}) != 1:
            raise ValueError("quaternion matrix parts differ in shape")
        return cls(np.stack(arrays), labels)

    @classmethod
    def from_columns(cls, columns: Sequence[QuaternionVector], labels=None) -> "QuaternionMatrix":
        if not columns:
            raise ValueError("need at least one column")
        lengths = {c.q for c in columns}
        if len(lengths) != 1:
            raise ValueError(f"inconsistent column lengths {sorted(lengths)}")
        return cls(np.stack([c.parts for c in columns], axis=2), labels)

    @property
    def shape(self) -> tuple[int, int]:
        return self.parts.shape[1], self.parts.shape[2]

    def column(self, j: int) -> QuaternionVector:
        return QuaternionVector(self.parts[:, :, j])

    def __getitem__(self, idx: tuple[int, int]) -> Quaternion:
        r, c = idx
        return Quaternion(*self.parts[:, r, c])


@dataclass(frozen=True)
class RealBlockMatrix:
    """Real 4q x 4L embedding of a quaternion matrix.

    Column ``b * L + l`` of ``data`` belongs to quaternion column ``l`` in
    block-column ``b``; ``labels`` has one entry per quaternion column.
    """

    data: np.ndarray
    q: int
    L: int
    labels: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        data = _frozen(self.data)
        if data.shape != (4 * self.q, 4 * self.L):
            raise ValueError(f"data shape {data.shape} does not match q={self.q}, L={self.L}")
        object.__setattr__(self, "data", data)
        if self.labels is not None:
            labels = np.array(self.labels)
            if labels.shape != (self.L,):
                raise ValueError("need exactly one label per quaternion column")
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def column_labels(self) -> np.ndarray:
        """Labels of all 4L real columns (replicated across block-columns)."""
        if self.labels is None:
            raise ValueError("dictionary carries no class labels")
        return np.tile(self.labels, 4)

    @property
    def classes(self) -> np.ndarray:
        if self.labels is None:
            raise ValueError("dictionary carries no class labels")
        return np.unique(self.labels)

    def gram(self) -> np.ndarray:
        """``J.T @ J``, computed once per dictionary."""
        if "gram" not in self._cache:
            G = self.data.T @ self.data
            G.setflags(write=False)
            self._cache["gram"] = G
        return self._cache["gram"]

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


@dataclass(frozen=True)
class RealStackVector:
    """Stacked real vector ``[v0; v1; v2; v3]`` of length 4q."""

    data: np.ndarray
    q: int

    def __post_init__(self):
        data = _frozen(self.data).ravel()
        if data.shape != (4 * self.q,):
            raise ValueError(f"expected length {4 * self.q}, got {data.size}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


def embed_matrix(V: QuaternionMatrix) -> RealBlockMatrix:
    """Left-regular real representation of a quaternion matrix."""
    V0, V1, V2, V3 = V.parts
    data = np.block([
        [V0, -V1, -V2, -V3],
        [V1, V0, -V3, V2],
        [V2, V3, V0, -V1],
        [V3, -V2, V1, V0],
    ])
    q, L = V.shape
    return RealBlockMatrix(data, q, L, V.labels)


def embed_vector(v: QuaternionVector) -> RealStackVector:
    return RealStackVector(v.parts.reshape(-1), v.q)


def unembed_vector(x) -> QuaternionVector:
    data = np.asarray(x, dtype=float).ravel()
    if data.size % 4:
        raise ValueError("stacked vector length must be divisible by 4")
    return QuaternionVector(data.reshape(4, -1))


def unembed_matrix(D) -> QuaternionMatrix:
    """Recover the quaternion matrix from the first block-column of an embedding."""
    data = np.asarray(D, dtype=float)
    rows, cols = data.shape
    if rows % 4 or cols % 4:
        raise ValueError("embedded matrix dimensions must be divisible by 4")
    q, L = rows // 4, cols // 4
    labels = D.labels if isinstance(D, RealBlockMatrix) else None
    return QuaternionMatrix(data[:, :L].reshape(4, q, L), labels)


def qmatvec(X: QuaternionMatrix, a: QuaternionVector) -> QuaternionVector:
    """Quaternion matrix-vector product by explicit Hamilton products.

    Deliberately scalar and slow: it is the reference against which the
    embedded product ``embed_matrix(X) @ embed_vector(a)`` is checked.
    """
    q, L = X.shape
    if a.q != L:
        raise ValueError(f"matrix has {L} columns but vector has length {a.q}")
    out = np.zeros((4, q))
    for r in range(q):
        acc = Quaternion(0.0)
        for c in range(L):
            acc = qadd(acc, qmul(X[r, c], a[c]))
        out[:, r] = acc.as_tuple()
    return QuaternionVector(out)


def qmatmul(X: QuaternionMatrix, Y: QuaternionMatrix) -> QuaternionMatrix:
    """Quaternion matrix product by explicit Hamilton products."""
    m, n = X.shape
    n2, p = Y.shape
    if n != n2:
        raise ValueError(f"cannot multiply {m}x{n} by {n2}x{p}")
    out = np.zeros((4, m, p))
    for r in range(m):
        for c in range(p):
            acc = Quaternion(0.0)
            for t in range(n):
                acc = qadd(acc, qmul(X[r, t], Y[t, c]))
            out[:, r, c] = acc.as_tuple()
    return QuaternionMatrix(out)


def gather_class(D: RealBlockMatrix, code, c):
    """Restrict a dictionary and a code to the columns of class ``c``.

    For a 4L-long code the c-labelled columns are taken from each of the
    four block-columns, so the result is again a block embedding.  For an
    L-long code the matching entries are selected once.

    Returns
    -------
    (RealBlockMatrix, ndarray)
    """
    if D.labels is None:
        raise ValueError("dictionary carries no class labels")
    code = np.asarray(code, dtype=float)
    idx = np.flatnonzero(D.labels == c)
    if idx.size == 0:
        raise KeyError(f"unknown class label {c!r}")
    cols = np.concatenate([idx + b * D.L for b in range(4)])
    Dc = RealBlockMatrix(D.data[:, cols], D.q, idx.size, D.labels[idx])
    if code.shape == (4 * D.L,):
        return Dc, code[cols]
    if code.shape == (D.L,):
        return Dc, code[idx]
    raise ValueError(f"code length {code.size} fits neither 4L={4 * D.L} nor L={D.L}")


def encode_rgb(r, g, b) -> QuaternionVector:
    """Pure quaternion ``0 + r i + g j + b k`` from three colour channels."""
    r, g, b = (np.asarray(x, dtype=float).ravel() for x in (r, g, b))
    if not r.size == g.size == b.size:
        raise ValueError("colour channels differ in length")
    return QuaternionVector(np.stack([np.zeros_like(r), r, g, b]))
