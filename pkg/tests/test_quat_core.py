from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from families import random_qmatrix
from quatrep.quat_core import (
    Quaternion,
    QuaternionMatrix,
    QuaternionVector,
    RealBlockMatrix,
    RealStackVector,
    embed_matrix,
    embed_vector,
    encode_rgb,
    gather_class,
    qadd,
    qconj,
    qmatmul,
    qmatvec,
    qmod,
    qmul,
    unembed_matrix,
    unembed_vector,
)

finite = st.floats(-10, 10, allow_nan=False)
quats = st.builds(Quaternion, finite, finite, finite, finite)

I, J, K, ONE = Quaternion(0, 1), Quaternion(0, 0, 1), Quaternion(0, 0, 0, 1), Quaternion(1)


def close(p, q, tol=1e-12):
    return np.allclose(p.as_tuple(), q.as_tuple(), atol=tol, rtol=0)


# -- scalar algebra ---------------------------------------------------------

def test_i_times_j_is_k():
    assert qmul(I, J) == K


def test_unit_axes_square_to_minus_one():
    for u in (I, J, K):
        assert qmul(u, u) == Quaternion(-1)
    assert qmul(qmul(I, J), K) == Quaternion(-1)


def test_right_identity():
    q = Quaternion(0.3, -1, 2, 5)
    assert qmul(q, ONE) == q


def test_expanded_product():
    # (1 + i)(1 + j) = 1 + j + i + ij = 1 + i + j + k
    assert qmul(Quaternion(1, 1), Quaternion(1, 0, 1)) == Quaternion(1, 1, 1, 1)


def test_non_commutative_witness():
    assert qmul(I, J) == -qmul(J, I)


def test_conjugate_examples():
    assert qconj(Quaternion(1, 2, 3, 4)) == Quaternion(1, -2, -3, -4)
    assert qconj(Quaternion(5)) == Quaternion(5)


def test_modulus_examples():
    assert qmod(Quaternion(1, 1, 1, 1)) == 2.0
    assert qmod(Quaternion(0)) == 0.0


def test_addition_examples():
    assert qadd(Quaternion(1), Quaternion(0, 1)) == Quaternion(1, 1)
    q = Quaternion(1, -2, 3.5, 0)
    assert qadd(q, Quaternion(0)) == q


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        Quaternion(math.nan)
    with pytest.raises(ValueError):
        Quaternion(0, math.inf)


@given(quats)
def test_conjugate_involution(q):
    assert qconj(qconj(q)) == q


@given(quats, quats)
def test_addition_commutes(p, q):
    assert qadd(p, q) == qadd(q, p)


@given(quats, quats)
def test_modulus_multiplicative(p, q):
    assert abs(qmod(qmul(p, q)) - qmod(p) * qmod(q)) <= 1e-12 * max(1.0, qmod(p) * qmod(q))


@given(quats)
def test_modulus_identity(q):
    prod = qmul(q, qconj(q))
    scale = max(1.0, qmod(q) ** 2)
    assert abs(prod.q0 - qmod(q) ** 2) <= 1e-12 * scale
    assert max(abs(prod.q1), abs(prod.q2), abs(prod.q3)) <= 1e-12 * scale


@given(quats, quats, quats)
def test_associative(a, b, c):
    lhs, rhs = qmul(qmul(a, b), c), qmul(a, qmul(b, c))
    assert close(lhs, rhs, 1e-9)


def test_operators_delegate():
    p, q = Quaternion(1, 2, 3, 4), Quaternion(-1, 0.5, 0, 2)
    assert p * q == qmul(p, q)
    assert p + q == qadd(p, q)
    assert abs(p) == qmod(p)


# -- containers -------------------------------------------------------------

def test_vector_shape_validation():
    with pytest.raises(ValueError):
        QuaternionVector(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        QuaternionVector.from_parts([1, 2], [1], [1], [1])


def test_matrix_shape_validation():
    with pytest.raises(ValueError):
        QuaternionMatrix.from_parts(np.zeros((2, 2)), np.zeros((2, 3)), np.zeros((2, 2)), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        QuaternionMatrix(np.zeros((4, 2, 3)), labels=[0, 1])


def test_containers_are_read_only():
    v = QuaternionVector(np.zeros((4, 2)))
    with pytest.raises(ValueError):
        v.parts[0, 0] = 1.0


def test_stack_vector_length_check():
    with pytest.raises(ValueError):
        RealStackVector(np.zeros(7), 2)


def test_from_columns_roundtrip(rng):
    X = random_qmatrix(rng, 3, 4)
    Y = QuaternionMatrix.from_columns([X.column(j) for j in range(4)])
    np.testing.assert_array_equal(X.parts, Y.parts)
    assert X[1, 2] == Quaternion(*X.parts[:, 1, 2])


# -- embedding --------------------------------------------------------------

def test_embed_scalar_one_is_identity():
    D = embed_matrix(QuaternionMatrix.from_parts([[1.0]], [[0.0]], [[0.0]], [[0.0]]))
    np.testing.assert_array_equal(D.data, np.eye(4))


def test_embed_i_squares_to_minus_identity():
    D = embed_matrix(QuaternionMatrix.from_parts([[0.0]], [[1.0]], [[0.0]], [[0.0]]))
    expected = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], dtype=float)
    np.testing.assert_array_equal(D.data, expected)
    np.testing.assert_array_equal(D.data @ D.data, -np.eye(4))


def test_embed_block_layout(rng):
    X = random_qmatrix(rng, 2, 3)
    D = embed_matrix(X)
    V0, V1, V2, V3 = X.parts
    assert D.shape == (8, 12)

    def block(r, c):
        return D.data[2 * r:2 * r + 2, 3 * c:3 * c + 3]

    layout = [[V0, -V1, -V2, -V3], [V1, V0, -V3, V2], [V2, V3, V0, -V1], [V3, -V2, V1, V0]]
    for r in range(4):
        for c in range(4):
            np.testing.assert_array_equal(block(r, c), layout[r][c])


def test_embed_labels_replicated():
    X = QuaternionMatrix(np.zeros((4, 2, 3)), labels=[0, 1, 1])
    D = embed_matrix(X)
    np.testing.assert_array_equal(D.column_labels, [0, 1, 1] * 4)
    np.testing.assert_array_equal(D.classes, [0, 1])


def test_embed_vector_real_part_only():
    v = QuaternionVector.from_parts([1, 2], [0, 0], [0, 0], [0, 0])
    np.testing.assert_array_equal(embed_vector(v).data, [1, 2, 0, 0, 0, 0, 0, 0])


def test_unit_quaternion_block_is_orthogonal(rng):
    for _ in range(20):
        p = rng.standard_normal(4)
        p /= np.linalg.norm(p)
        R = embed_matrix(QuaternionMatrix(p.reshape(4, 1, 1))).data
        np.testing.assert_allclose(R.T @ R, np.eye(4), atol=1e-12)


@given(st.integers(1, 5), st.integers(0, 2**31))
def test_vector_roundtrip_and_norm(q, seed):
    rng = np.random.default_rng(seed)
    v = QuaternionVector(rng.standard_normal((4, q)))
    np.testing.assert_array_equal(unembed_vector(embed_vector(v)).parts, v.parts)
    per_entry = math.sqrt(sum(qmod(v[i]) ** 2 for i in range(q)))
    assert abs(np.linalg.norm(embed_vector(v).data) - per_entry) <= 1e-12 * max(1, per_entry)


@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**31))
def test_embedding_homomorphism(q, L, seed):
    rng = np.random.default_rng(seed)
    X = random_qmatrix(rng, q, L)
    a = QuaternionVector(rng.standard_normal((4, L)))
    lhs = embed_vector(qmatvec(X, a)).data
    rhs = embed_matrix(X).data @ embed_vector(a).data
    np.testing.assert_allclose(lhs, rhs, atol=1e-12, rtol=0)
    np.testing.assert_allclose(unembed_vector(rhs).parts, qmatvec(X, a).parts, atol=1e-12, rtol=0)


@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**31))
def test_representation_property(m, n, p, seed):
    rng = np.random.default_rng(seed)
    X, Y = random_qmatrix(rng, m, n), random_qmatrix(rng, n, p)
    np.testing.assert_allclose(embed_matrix(qmatmul(X, Y)).data,
                               embed_matrix(X).data @ embed_matrix(Y).data, atol=1e-12, rtol=0)


@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**31))
def test_unembed_matrix_roundtrip(q, L, seed):
    X = random_qmatrix(np.random.default_rng(seed), q, L)
    np.testing.assert_array_equal(unembed_matrix(embed_matrix(X)).parts, X.parts)


def test_qmatvec_identity(rng):
    X = QuaternionMatrix.from_parts(np.eye(3), np.zeros((3, 3)), np.zeros((3, 3)), np.zeros((3, 3)))
    a = QuaternionVector(rng.standard_normal((4, 3)))
    np.testing.assert_allclose(qmatvec(X, a).parts, a.parts, atol=0)


def test_qmatvec_i_times_j_is_k():
    X = QuaternionMatrix.from_parts(np.zeros((2, 2)), np.eye(2), np.zeros((2, 2)), np.zeros((2, 2)))
    a = QuaternionVector.from_parts([0, 0], [0, 0], [1, 1], [0, 0])
    out = qmatvec(X, a)
    np.testing.assert_array_equal(out.parts, [[0, 0], [0, 0], [0, 0], [1, 1]])


def test_qmatvec_dimension_mismatch(rng):
    with pytest.raises(ValueError):
        qmatvec(random_qmatrix(rng, 2, 3), QuaternionVector(np.zeros((4, 2))))
    with pytest.raises(ValueError):
        qmatmul(random_qmatrix(rng, 2, 3), random_qmatrix(rng, 2, 3))


def test_block_matrix_shape_validation():
    with pytest.raises(ValueError):
        RealBlockMatrix(np.zeros((8, 8)), 2, 3)


# -- class restriction ------------------------------------------------------

def test_gather_single_class_returns_everything(rng):
    D = embed_matrix(random_qmatrix(rng, 2, 3, labels=[7, 7, 7]))
    code = rng.standard_normal(12)
    Dc, cc = gather_class(D, code, 7)
    np.testing.assert_array_equal(Dc.data, D.data)
    np.testing.assert_array_equal(cc, code)


def test_gather_two_singleton_classes(rng):
    X = random_qmatrix(rng, 3, 2, labels=[1, 2])
    D = embed_matrix(X)
    Dc, cc = gather_class(D, np.arange(8.0), 2)
    assert Dc.shape == (12, 4)
    np.testing.assert_array_equal(Dc.data, embed_matrix(QuaternionMatrix(X.parts[:, :, 1:])).data)
    np.testing.assert_array_equal(cc, [1, 3, 5, 7])


def test_gather_partition_identity(rng):
    labels = np.array([0, 1, 2, 0, 2, 1, 1])
    D = embed_matrix(random_qmatrix(rng, 4, labels.size, labels=labels))
    code = rng.standard_normal(4 * labels.size)
    total = sum(Dc.data @ cc for Dc, cc in (gather_class(D, code, c) for c in (0, 1, 2)))
    np.testing.assert_allclose(total, D.data @ code, atol=1e-12)


def test_gather_short_code_and_errors(rng):
    D = embed_matrix(random_qmatrix(rng, 2, 3, labels=[0, 1, 0]))
    _, cc = gather_class(D, np.array([5.0, 6.0, 7.0]), 0)
    np.testing.assert_array_equal(cc, [5, 7])
    with pytest.raises(KeyError):
        gather_class(D, np.zeros(12), 9)
    with pytest.raises(ValueError):
        gather_class(D, np.zeros(5), 0)


# -- colour encoding --------------------------------------------------------

def test_encode_black_is_zero():
    v = encode_rgb([0, 0], [0, 0], [0, 0])
    np.testing.assert_array_equal(v.parts, np.zeros((4, 2)))


def test_encode_red():
    v = encode_rgb([1.0], [0.0], [0.0])
    np.testing.assert_array_equal(v.v0, [0])
    np.testing.assert_array_equal(v.v1, [1])
    np.testing.assert_array_equal(v.v2, [0])
    np.testing.assert_array_equal(v.v3, [0])


@given(st.lists(st.tuples(*(st.floats(0, 1),) * 3), min_size=1, max_size=8))
def test_encode_modulus_is_colour_norm(pixels):
    r, g, b = (np.array(c) for c in zip(*pixels))
    v = encode_rgb(r, g, b)
    for i in range(len(pixels)):
        assert abs(qmod(v[i]) - math.sqrt(r[i] ** 2 + g[i] ** 2 + b[i] ** 2)) <= 1e-12


def test_encode_length_mismatch():
    with pytest.raises(ValueError):
        encode_rgb([1, 2], [1], [1, 2])
