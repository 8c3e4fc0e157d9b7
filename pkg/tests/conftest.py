import numpy as np
import pytest
from scipy.linalg import expm

from corrdyn.models import JCParams, SwapParams, jc_model, swap_model

FIG3 = JCParams(a=0.6, p0=0.4, omega0=1.0, delta=0.1, g=0.1)


def oracle_reduced(H, rho_s, rho_e, chi, t):
    """Reference reduced state: matrix exponential plus an explicit partial-trace loop."""
    d_s, d_e = rho_s.shape[0], rho_e.shape[0]
    U = expm(-1j * np.asarray(H) * t)
    total = U @ (np.kron(rho_s, rho_e) + chi) @ U.conj().T
    out = np.zeros((d_s, d_s), dtype=complex)
    for i in range(d_s):
        for j in range(d_s):
            for k in range(d_e):
                out[i, j] += total[i * d_e + k, j * d_e + k]
    return out


def oracle_for(model):
    ctx = model.context
    return lambda rho, t: oracle_reduced(model.hamiltonian, rho, ctx.rho_e, ctx.chi, t)


def random_hermitian(d, rng):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (A + A.conj().T)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=[0.3, 0.5, 0.875], ids=lambda p: f"p={p}")
def swap(request):
    return swap_model(SwapParams(request.param))


@pytest.fixture
def jc():
    return jc_model(FIG3)
