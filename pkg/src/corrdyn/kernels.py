"""Inner loops for partial traces and reduced-map assembly.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy
version with the same signature. The active implementation is picked once
at import time; set ``CORRDYN_DISABLE_NUMBA=1`` (or run without numba
installed) to force the numpy path. Both paths stay importable as
``numba_kernels`` / ``numpy_kernels`` so they can be cross-checked and
benchmarked against each other.
"""

import os
from types import SimpleNamespace

import numpy as np

_DISABLE = os.environ.get("CORRDYN_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


# --- numpy path -------------------------------------------------------------

def _np_ptrace_env(M, d_s, d_e):
    return np.einsum("ikjk->ij", M.reshape(d_s, d_e, d_s, d_e))


def _np_ptrace_sys(M, d_s, d_e):
    return np.einsum("kikj->ij", M.reshape(d_s, d_e, d_s, d_e))


def _np_traced_sandwich(P, S, Q, d_s, d_e):
    return _np_ptrace_env(P @ S @ Q.conj().T, d_s, d_e)


def _np_reduced_superop(P, Q, rho_e, d_s, d_e):
    P4 = P.reshape(d_s, d_e, d_s, d_e)
    Q4 = Q.reshape(d_s, d_e, d_s, d_e)
    out = np.einsum("mkia,ab,nkjb->mnij", P4, rho_e, Q4.conj(), optimize=True)
    return out.reshape(d_s * d_s, d_s * d_s)


def _np_reshuffle(A, d):
    # A[(k,l),(i,j)] -> B[(i,k),(j,l)]
    return A.reshape(d, d, d, d).transpose(2, 0, 3, 1).reshape(d * d, d * d)


def _np_lindblad_superop(K, rates, lindblads):
    d = K.shape[0]
    A = np.einsum("k,kba,kbc->ac", rates, lindblads.conj(), lindblads)
    B = -1j * K - 0.5 * A
    eye = np.eye(d)
    out = np.einsum("k,kac,kbd->abcd", rates, lindblads, lindblads.conj()).reshape(d * d, d * d)
    out += (B[:, None, :, None] * eye[None, :, None, :]).reshape(d * d, d * d)
    out += (eye[:, None, :, None] * B.conj()[None, :, None, :]).reshape(d * d, d * d)
    return out


numpy_kernels = SimpleNamespace(
    lindblad_superop=_np_lindblad_superop,
    ptrace_env=_np_ptrace_env,
    ptrace_sys=_np_ptrace_sys,
    traced_sandwich=_np_traced_sandwich,
    reduced_superop=_np_reduced_superop,
    reshuffle=_np_reshuffle,
)


# --- numba path -------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _nb_ptrace_env(M, d_s, d_e):
        out = np.zeros((d_s, d_s), dtype=np.complex128)
        for i in range(d_s):
            for j in range(d_s):
                acc = 0j
                for k in range(d_e):
                    acc += M[i * d_e + k, j * d_e + k]
                out[i, j] = acc
        return out

    @njit(cache=True)
    def _nb_ptrace_sys(M, d_s, d_e):
        out = np.zeros((d_e, d_e), dtype=np.complex128)
        for i in range(d_e):
            for j in range(d_e):
                acc = 0j
                for k in range(d_s):
                    acc += M[k * d_e + i, k * d_e + j]
                out[i, j] = acc
        return out

    @njit(cache=True)
    def _nb_traced_sandwich(P, S, Q, d_s, d_e):
        d = d_s * d_e
        PS = P @ S
        out = np.zeros((d_s, d_s), dtype=np.complex128)
        for m in range(d_s):
            for n in range(d_s):
                acc = 0j
                for k in range(d_e):
                    r = m * d_e + k
                    c = n * d_e + k
                    for b in range(d):
                        acc += PS[r, b] * np.conj(Q[c, b])
                out[m, n] = acc
        return out

    @njit(cache=True)
    def _nb_reduced_superop(P, Q, rho_e, d_s, d_e):
        d = d_s * d_e
        D = d_s * d_s
        out = np.zeros((D, D), dtype=np.complex128)
        B = np.empty((d, d_e), dtype=np.complex128)
        for i in range(d_s):
            # B = P[:, block i] @ rho_e
            for r in range(d):
                for b in range(d_e):
                    acc = 0j
                    for a in range(d_e):
                        acc += P[r, i * d_e + a] * rho_e[a, b]
                    B[r, b] = acc
            for j in range(d_s):
                col = i * d_s + j
                for m in range(d_s):
                    for n in range(d_s):
                        acc = 0j
                        for k in range(d_e):
                            r = m * d_e + k
                            c = n * d_e + k
                            for b in range(d_e):
                                acc += B[r, b] * np.conj(Q[c, j * d_e + b])
                        out[m * d_s + n, col] = acc
        return out

    @njit(cache=True)
    def _nb_reshuffle(A, d):
        D = d * d
        out = np.empty((D, D), dtype=A.dtype)
        for k in range(d):
            for l in range(d):
                for i in range(d):
                    for j in range(d):
                        out[i * d + k, j * d + l] = A[k * d + l, i * d + j]
        return out

    @njit(cache=True)
    def _nb_lindblad_superop(K, rates, lindblads):
        d = K.shape[0]
        n = rates.shape[0]
        B = -1j * K
        for k in range(n):
            L = lindblads[k]
            for a in range(d):
                for c in range(d):
                    acc = 0j
                    for b in range(d):
                        acc += np.conj(L[b, a]) * L[b, c]
                    B[a, c] -= 0.5 * rates[k] * acc
        out = np.zeros((d * d, d * d), dtype=np.complex128)
        for a in range(d):
            for b in range(d):
                for c in range(d):
                    for e in range(d):
                        acc = 0j
                        for k in range(n):
                            acc += rates[k] * lindblads[k, a, c] * np.conj(lindblads[k, b, e])
                        if b == e:
                            acc += B[a, c]
                        if a == c:
                            acc += np.conj(B[b, e])
                        out[a * d + b, c * d + e] = acc
        return out

    numba_kernels = SimpleNamespace(
        lindblad_superop=_nb_lindblad_superop,
        ptrace_env=_nb_ptrace_env,
        ptrace_sys=_nb_ptrace_sys,
        traced_sandwich=_nb_traced_sandwich,
        reduced_superop=_nb_reduced_superop,
        reshuffle=_nb_reshuffle,
    )
else:  # pragma: no cover
    numba_kernels = None


USING_NUMBA = HAVE_NUMBA and not _DISABLE
_active = numba_kernels if USING_NUMBA else numpy_kernels


def _c(a):
    return np.ascontiguousarray(a, dtype=np.complex128)


def ptrace_env(M, d_s, d_e):
    """Trace out the second tensor factor of an operator on ``d_s * d_e``."""
    return _active.ptrace_env(_c(M), int(d_s), int(d_e))


def ptrace_sys(M, d_s, d_e):
    return _active.ptrace_sys(_c(M), int(d_s), int(d_e))


def traced_sandwich(P, S, Q, d_s, d_e):
    """``Tr_E{P S Q^dagger}`` for square operators on the joint space."""
    return _active.traced_sandwich(_c(P), _c(S), _c(Q), int(d_s), int(d_e))


def reduced_superop(P, Q, rho_e, d_s, d_e):
    """Row-major superoperator matrix of ``X -> Tr_E{P (X (x) rho_e) Q^dagger}``.

    With ``P = Q = U`` this is the uncorrelated dynamical map; with
    ``P = -iHU, Q = U`` plus its adjoint counterpart it gives the time
    derivative.
    """
    return _active.reduced_superop(_c(P), _c(Q), _c(rho_e), int(d_s), int(d_e))


def lindblad_superop(K, rates, lindblads):
    """Matrix of ``X -> -i[K,X] + sum_k r_k (L_k X L_k^+ - {L_k^+ L_k, X}/2)``."""
    K = _c(K)
    lindblads = _c(lindblads).reshape(-1, K.shape[0], K.shape[0])
    return _active.lindblad_superop(K, np.ascontiguousarray(rates, dtype=np.float64), lindblads)


def reshuffle(A, d):
    """Superoperator matrix to Choi matrix: ``A[(k,l),(i,j)] -> C[(i,k),(j,l)]``."""
    return _active.reshuffle(_c(A), int(d))
