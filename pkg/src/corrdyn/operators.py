"""Dense operator algebra on finite-dimensional Hilbert spaces.

Operators are plain complex ``numpy`` arrays. Superoperators act on
row-major vectorized operators: component ``i*d + j`` of ``vec(X)`` holds
``X[i, j]``, so ``vec(A X B) = kron(A, B.T) @ vec(X)`` and
``Tr X = vec(I) . vec(X)``.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionMismatch, NotAState, NotHermitian

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# basis order (|e>, |g>) == (|0>, |1>): sigma_plus = |e><g|
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()


@dataclass(frozen=True)
class Tolerances:
    herm: float = 1e-10
    psd: float = 1e-9
    trace: float = 1e-10


DEFAULT_TOL = Tolerances()


def as_operator(A, dim=None):
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    if dim is not None and A.shape[0] != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {A.shape[0]}")
    return A


def dagger(A):
    return np.conj(A).T


def hermiticity_error(A):
    A = np.asarray(A)
    return float(np.max(np.abs(A - dagger(A)))) if A.size else 0.0


def is_hermitian(A, tol=DEFAULT_TOL.herm):
    return hermiticity_error(A) <= tol


def hermitian_part(A):
    return 0.5 * (A + dagger(A))


def traceless_part(A):
    A = np.asarray(A, dtype=complex)
    return A - np.trace(A) / A.shape[0] * np.eye(A.shape[0])


def check_state(rho, tol=DEFAULT_TOL, name="operator"):
    """Raise :class:`NotAState` unless ``rho`` is a density matrix within ``tol``."""
    rho = as_operator(rho)
    if not is_hermitian(rho, tol.herm):
        raise NotAState(f"{name} is not Hermitian (error {hermiticity_error(rho):.2e})")
    tr = np.trace(rho)
    if abs(tr - 1) > tol.trace:
        raise NotAState(f"{name} has trace {tr.real:.12g}, expected 1")
    lam_min = float(np.linalg.eigvalsh(hermitian_part(rho))[0])
    if lam_min < -tol.psd:
        raise NotAState(f"{name} has negative eigenvalue {lam_min:.3e}")
    return rho


def tensor(A, B):
    """Kronecker product; entry ``(i*dB + k, j*dB + l)`` equals ``A[i,j] B[k,l]``."""
    return np.kron(np.asarray(A, dtype=complex), np.asarray(B, dtype=complex))


def _check_joint(M, d_s, d_e):
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape != (d_s * d_e, d_s * d_e):
        raise DimensionMismatch(f"operator of shape {M.shape} is not on a {d_s}x{d_e} space")
    return M


def partial_trace_env(M, d_s, d_e):
    """Trace out the environment (second factor)."""
    return kernels.ptrace_env(_check_joint(M, d_s, d_e), d_s, d_e)


def partial_trace_sys(M, d_s, d_e):
    """Trace out the system (first factor)."""
    return kernels.ptrace_sys(_check_joint(M, d_s, d_e), d_s, d_e)


def eig_hermitian(A, herm_tol=DEFAULT_TOL.herm):
    """Eigenvalues in ascending order and orthonormal eigenvectors (as columns).

    Raises
    ------
    NotHermitian
        If ``max|A - A^dagger|`` exceeds ``herm_tol``.
    """
    A = as_operator(A)
    err = hermiticity_error(A)
    if err > herm_tol:
        raise NotHermitian(f"matrix is not Hermitian (error {err:.2e} > {herm_tol:.1e})")
    return np.linalg.eigh(hermitian_part(A))


def hermitian_basis(d):
    """Generalized Gell-Mann basis, Hilbert-Schmidt orthonormal.

    Returns an array of shape ``(d*d, d, d)``. Element 0 is ``I/sqrt(d)``;
    then, for each ``i < j``, the symmetric and antisymmetric off-diagonal
    elements; then the ``d-1`` traceless diagonal elements.
    """
    if d < 2:
        raise ValueError("basis dimension must be at least 2")
    out = [np.eye(d, dtype=complex) / np.sqrt(d)]
    s = 1 / np.sqrt(2)
    for i in range(d):
        for j in range(i + 1, d):
            G = np.zeros((d, d), dtype=complex)
            G[i, j] = G[j, i] = s
            out.append(G)
            G = np.zeros((d, d), dtype=complex)
            G[i, j] = -1j * s
            G[j, i] = 1j * s
            out.append(G)
    for k in range(1, d):
        diag = np.zeros(d)
        diag[:k] = 1.0
        diag[k] = -k
        out.append(np.diag(diag / np.sqrt(k * (k + 1))).astype(complex))
    return np.array(out)


def vectorize(X):
    X = as_operator(X)
    return X.reshape(-1).copy()


def devectorize(v):
    v = np.asarray(v, dtype=complex)
    d = int(round(np.sqrt(v.size)))
    if v.ndim != 1 or d * d != v.size:
        raise DimensionMismatch(f"vector of length {v.size} is not a vectorized square matrix")
    return v.reshape(d, d).copy()


def superop_dim(M):
    M = np.asarray(M)
    D = M.shape[0]
    d = int(round(np.sqrt(D)))
    if M.ndim != 2 or M.shape[1] != D or d * d != D:
        raise DimensionMismatch(f"shape {M.shape} is not a superoperator matrix")
    return d


def apply_superop(M, X):
    X = as_operator(X, superop_dim(M))
    return (M @ X.reshape(-1)).reshape(X.shape)


def superop_from_action(f, d):
    """Matrix of a linear map given as a Python callable, one column per matrix unit."""
    D = d * d
    M = np.empty((D, D), dtype=complex)
    for i in range(d):
        for j in range(d):
            E = np.zeros((d, d), dtype=complex)
            E[i, j] = 1.0
            M[:, i * d + j] = np.asarray(f(E), dtype=complex).reshape(-1)
    return M


def superop_from_kraus(ops, weights=None):
    """``X -> sum_i w_i A_i X A_i^dagger`` as a superoperator matrix."""
    ops = [np.asarray(A, dtype=complex) for A in ops]
    if weights is None:
        weights = np.ones(len(ops))
    d = ops[0].shape[0] if ops else 0
    M = np.zeros((d * d, d * d), dtype=complex)
    for w, A in zip(weights, ops):
        M += w * np.kron(A, A.conj())
    return M


def left_right_superop(A, B):
    """Matrix of ``X -> A X B``."""
    return np.kron(np.asarray(A, dtype=complex), np.asarray(B, dtype=complex).T)


def commutator_superop(H):
    """Matrix of ``X -> -i[H, X]``."""
    H = np.asarray(H, dtype=complex)
    eye = np.eye(H.shape[0])
    return -1j * (left_right_superop(H, eye) - left_right_superop(eye, H))


def trace_functional(d):
    """Row vector ``vec(I)^dagger``; ``trace_functional(d) @ M`` is the trace of each column."""
    return np.eye(d, dtype=complex).reshape(-1)


def rank_one_superop(C, d=None):
    """Matrix of ``X -> C Tr{X}``."""
    C = as_operator(C, d)
    return np.outer(C.reshape(-1), trace_functional(C.shape[0]))


def choi_from_superop(M):
    """``C = sum_ij E_ij (x) M[E_ij]`` (index permutation of ``M``)."""
    return kernels.reshuffle(M, superop_dim(M))


def superop_from_choi(C):
    """Inverse of :func:`choi_from_superop`."""
    C = np.asarray(C, dtype=complex)
    d = superop_dim(C)
    return C.reshape(d, d, d, d).transpose(1, 3, 0, 2).reshape(d * d, d * d)


def is_hermiticity_preserving(M, tol=1e-12):
    C = choi_from_superop(M)
    return hermiticity_error(C) <= tol


def kraus_from_choi_vector(v):
    """Kraus operator whose Choi matrix is ``v v^dagger``.

    Under the row-major Choi layout the eigenvector stacks columns of the
    Kraus operator, hence the transpose.
    """
    return devectorize(v).T


def choi_vector_from_operator(A):
    return np.asarray(A, dtype=complex).T.reshape(-1)


def frobenius(A):
    return float(np.linalg.norm(A))
