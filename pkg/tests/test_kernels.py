import os
import subprocess
import sys

import numpy as np
import pytest

from corrdyn import kernels

pytestmark = pytest.mark.skipif(kernels.numba_kernels is None, reason="numba not installed")


def cplx(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


@pytest.mark.parametrize("d_s,d_e", [(2, 2), (2, 5), (3, 2)])
def test_partial_traces_agree(rng, d_s, d_e):
    M = cplx(rng, d_s * d_e, d_s * d_e)
    for name in ("ptrace_env", "ptrace_sys"):
        a = getattr(kernels.numba_kernels, name)(M, d_s, d_e)
        b = getattr(kernels.numpy_kernels, name)(M, d_s, d_e)
        np.testing.assert_allclose(a, b, atol=1e-13)


@pytest.mark.parametrize("d_s,d_e", [(2, 2), (2, 5), (3, 2)])
def test_sandwich_and_reduced_superop_agree(rng, d_s, d_e):
    d = d_s * d_e
    P, S, Q = cplx(rng, d, d), cplx(rng, d, d), cplx(rng, d, d)
    rho_e = cplx(rng, d_e, d_e)
    np.testing.assert_allclose(kernels.numba_kernels.traced_sandwich(P, S, Q, d_s, d_e),
                               kernels.numpy_kernels.traced_sandwich(P, S, Q, d_s, d_e), atol=1e-12)
    np.testing.assert_allclose(kernels.numba_kernels.reduced_superop(P, Q, rho_e, d_s, d_e),
                               kernels.numpy_kernels.reduced_superop(P, Q, rho_e, d_s, d_e), atol=1e-12)


def test_reduced_superop_definition(rng):
    # column (i, j) of the matrix is Tr_E{P (E_ij x rho_e) Q^+}
    d_s, d_e = 2, 3
    d = d_s * d_e
    P, Q, rho_e = cplx(rng, d, d), cplx(rng, d, d), cplx(rng, d_e, d_e)
    M = kernels.reduced_superop(P, Q, rho_e, d_s, d_e)
    for i in range(d_s):
        for j in range(d_s):
            E = np.zeros((d_s, d_s))
            E[i, j] = 1
            ref = kernels.numpy_kernels.ptrace_env(P @ np.kron(E, rho_e) @ Q.conj().T, d_s, d_e)
            np.testing.assert_allclose(M[:, i * d_s + j], ref.reshape(-1), atol=1e-12)


def test_reshuffle_and_lindblad_agree(rng):
    d = 3
    A = cplx(rng, d * d, d * d)
    np.testing.assert_array_equal(kernels.numba_kernels.reshuffle(A, d), kernels.numpy_kernels.reshuffle(A, d))
    K = cplx(rng, d, d)
    K = K + K.conj().T
    rates = rng.normal(size=4)
    Ls = cplx(rng, 4, d, d)
    np.testing.assert_allclose(kernels.numba_kernels.lindblad_superop(K, rates, Ls),
                               kernels.numpy_kernels.lindblad_superop(K, rates, Ls), atol=1e-12)


def test_lindblad_superop_action(rng):
    d = 2
    K = np.array([[0.3, 0.1j], [-0.1j, -0.3]])
    rates = np.array([0.7, -0.2])
    Ls = cplx(rng, 2, d, d)
    X = cplx(rng, d, d)
    ref = -1j * (K @ X - X @ K)
    for r, L in zip(rates, Ls):
        LdL = L.conj().T @ L
        ref += r * (L @ X @ L.conj().T - 0.5 * (LdL @ X + X @ LdL))
    out = (kernels.lindblad_superop(K, rates, Ls) @ X.reshape(-1)).reshape(d, d)
    np.testing.assert_allclose(out, ref, atol=1e-12)


def test_env_flag_selects_numpy():
    env = dict(os.environ, CORRDYN_DISABLE_NUMBA="1")
    code = "import corrdyn.kernels as k; print(k.USING_NUMBA, k._active is k.numpy_kernels)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "True"]
