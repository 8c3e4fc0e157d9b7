import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrdyn import operators as ops
from corrdyn.errors import DimensionMismatch, NotAState, NotHermitian

from conftest import random_hermitian

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def rand_op(d, rng):
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))


def test_partial_traces_of_product(rng):
    A, B = rand_op(2, rng), rand_op(3, rng)
    AB = ops.tensor(A, B)
    np.testing.assert_allclose(ops.partial_trace_env(AB, 2, 3), A * np.trace(B), atol=1e-13)
    np.testing.assert_allclose(ops.partial_trace_sys(AB, 2, 3), B * np.trace(A), atol=1e-13)


def test_partial_trace_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        ops.partial_trace_env(np.eye(6), 2, 2)
    with pytest.raises(DimensionMismatch):
        ops.partial_trace_sys(np.eye(5), 2, 3)


def test_row_major_vectorization(rng):
    A, X, B = rand_op(3, rng), rand_op(3, rng), rand_op(3, rng)
    np.testing.assert_allclose(ops.vectorize(A @ X @ B), np.kron(A, B.T) @ ops.vectorize(X), atol=1e-12)
    np.testing.assert_allclose(ops.left_right_superop(A, B), np.kron(A, B.T), atol=1e-14)
    np.testing.assert_array_equal(ops.devectorize(ops.vectorize(X)), X)
    # entry (i, j) sits at i*d + j
    assert ops.vectorize(X)[1 * 3 + 2] == X[1, 2]


def test_superop_from_action_matches_kraus(rng):
    Ks = [rand_op(2, rng) for _ in range(3)]
    M = ops.superop_from_action(lambda X: sum(K @ X @ K.conj().T for K in Ks), 2)
    np.testing.assert_allclose(M, ops.superop_from_kraus(Ks), atol=1e-12)
    X = rand_op(2, rng)
    np.testing.assert_allclose(ops.apply_superop(M, X), sum(K @ X @ K.conj().T for K in Ks), atol=1e-12)


def test_choi_of_identity_is_maximally_entangled():
    d = 3
    C = ops.choi_from_superop(np.eye(d * d))
    omega = np.eye(d).reshape(-1)
    np.testing.assert_allclose(C, np.outer(omega, omega), atol=0)


def test_choi_roundtrip(rng):
    M = rand_op(9, rng)
    np.testing.assert_array_equal(ops.superop_from_choi(ops.choi_from_superop(M)), M)
    np.testing.assert_array_equal(ops.choi_from_superop(ops.superop_from_choi(M)), M)


def test_choi_definition_blockwise(rng):
    d = 2
    M = rand_op(d * d, rng)
    C = ops.choi_from_superop(M)
    ref = np.zeros_like(C)
    for i in range(d):
        for j in range(d):
            E = np.zeros((d, d))
            E[i, j] = 1
            ref += np.kron(E, ops.apply_superop(M, E))
    np.testing.assert_allclose(C, ref, atol=1e-14)


def test_kraus_vector_roundtrip(rng):
    K = rand_op(3, rng)
    v = ops.choi_vector_from_operator(K)
    np.testing.assert_allclose(ops.kraus_from_choi_vector(v), K, atol=0)
    # the Choi matrix of a single Kraus operator is |v><v|
    np.testing.assert_allclose(ops.choi_from_superop(ops.superop_from_kraus([K])), np.outer(v, v.conj()),
                               atol=1e-12)


def test_hermitian_basis_orthonormal():
    for d in (2, 3, 4):
        G = ops.hermitian_basis(d)
        assert G.shape == (d * d, d, d)
        gram = np.einsum("aij,bji->ab", G, G)
        np.testing.assert_allclose(gram, np.eye(d * d), atol=1e-13)
        for g in G:
            assert ops.is_hermitian(g, 1e-14)
        np.testing.assert_allclose(G[0], np.eye(d) / np.sqrt(d), atol=1e-15)
        assert np.allclose([np.trace(g) for g in G[1:]], 0)


def test_eig_hermitian_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        ops.eig_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))


def test_check_state():
    ops.check_state(np.diag([0.3, 0.7]))
    with pytest.raises(NotAState):
        ops.check_state(np.diag([1.2, -0.2]))
    with pytest.raises(NotAState):
        ops.check_state(np.diag([0.3, 0.3]))


def test_commutator_and_trace_functional(rng):
    H = random_hermitian(3, rng)
    X = rand_op(3, rng)
    np.testing.assert_allclose(ops.apply_superop(ops.commutator_superop(H), X), -1j * (H @ X - X @ H), atol=1e-12)
    assert np.isclose(ops.trace_functional(3) @ ops.vectorize(X), np.trace(X))
    C = rand_op(3, rng)
    np.testing.assert_allclose(ops.apply_superop(ops.rank_one_superop(C), X), C * np.trace(X), atol=1e-12)


def test_hermiticity_preserving_detection(rng):
    K = [rand_op(2, rng) for _ in range(2)]
    assert ops.is_hermiticity_preserving(ops.superop_from_kraus(K, [1.0, -0.5]))
    assert not ops.is_hermiticity_preserving(ops.left_right_superop(K[0], K[1]))


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(2, 3), st.integers(2, 3))
def test_partial_trace_consistency(seed, d_s, d_e):
    rng = np.random.default_rng(seed)
    M = rand_op(d_s * d_e, rng)
    assert np.isclose(np.trace(ops.partial_trace_env(M, d_s, d_e)), np.trace(M))
    assert np.isclose(np.trace(ops.partial_trace_sys(M, d_s, d_e)), np.trace(M))
    # Tr_E{(A x 1) M} = A Tr_E{M}
    A = rand_op(d_s, rng)
    lhs = ops.partial_trace_env(ops.tensor(A, np.eye(d_e)) @ M, d_s, d_e)
    np.testing.assert_allclose(lhs, A @ ops.partial_trace_env(M, d_s, d_e), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_choi_psd_for_random_kraus(seed):
    rng = np.random.default_rng(seed)
    M = ops.superop_from_kraus([rand_op(2, rng) for _ in range(3)])
    ev = np.linalg.eigvalsh(ops.hermitian_part(ops.choi_from_superop(M)))
    assert ev[0] > -1e-10
