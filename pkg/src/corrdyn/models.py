"""Built-in scenarios with closed-form references.

* Two qubits coupled by a swap gate, starting from a classically
  correlated state (system = first qubit).
* A two-level atom coupled to a single cavity mode (Jaynes-Cummings),
  starting from a correlated mixture of Fock states 0 and 1.

System basis order is ``(|0>, |1>)`` for the swap model and
``(|e>, |g>)`` for the Jaynes-Cummings model, so ``sigma_z = diag(1, -1)``
in both and ``rho_eg = rho[0, 1]``.
"""

from dataclasses import dataclass

import numpy as np

from . import operators as ops
from .dynamics import TotalModel, decompose_total
from .errors import InvalidParams, SingularTime

# -- swap gate ----------------------------------------------------------------

H_SWAP = 0.5 * (np.eye(4) + ops.tensor(ops.SIGMA_X, ops.SIGMA_X)
                + ops.tensor(ops.SIGMA_Y, ops.SIGMA_Y) + ops.tensor(ops.SIGMA_Z, ops.SIGMA_Z))


@dataclass(frozen=True)
class SwapParams:
    p: float

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise InvalidParams(f"p must lie in (0, 1), got {self.p}")


def swap_reference_state(p):
    rho0 = 0.5 * (np.eye(2) - 0.5 * ops.SIGMA_X)
    rho1 = 0.5 * (np.eye(2) + 0.5 * ops.SIGMA_X)
    P0 = np.diag([1.0, 0.0]).astype(complex)
    P1 = np.diag([0.0, 1.0]).astype(complex)
    return p * ops.tensor(P0, rho0) + (1 - p) * ops.tensor(P1, rho1)


def swap_model(params, tol=ops.DEFAULT_TOL):
    """Total model and reference reduced state for the swap-gate example."""
    if not isinstance(params, SwapParams):
        params = SwapParams(float(params))
    rho_s, ctx = decompose_total(swap_reference_state(params.p), 2, 2, tol)
    return TotalModel(ctx, H_SWAP), rho_s


def _fill_qubit(rho00, rho01):
    return np.array([[rho00, rho01], [np.conj(rho01), 1 - rho00]], dtype=complex)


def swap_correlated_map_closed_form(p, t, rho_s0):
    """Closed-form correlated swap dynamics for fixed ``rho_E`` and ``chi`` at parameter ``p``."""
    rho_s0 = np.asarray(rho_s0, dtype=complex)
    r00, r01 = rho_s0[0, 0].real, rho_s0[0, 1]
    s, c = np.sin(t), np.cos(t)
    q = 2 * p - 1
    # cross term sign: + (derived from Tr_E{SWAP (A x B)} = B A)
    rho00 = 0.5 * s**2 + c**2 * r00 + 0.5 * s * c * q * r01.imag
    rho01 = (0.25 * (s**2 - 1j * s * c) - 0.5 * s**2 * p
             + 0.5j * s * c * q * (p - r00) + c**2 * r01)
    return _fill_qubit(rho00, rho01)


def swap_zero_discord_map(t, rho_s0):
    """Comparison map built for zero-discord initial states; independent of ``p``.

    Only ``rho_00`` and ``rho_01`` are defined by the construction; the
    remaining entries follow from Hermiticity and unit trace.
    """
    rho_s0 = np.asarray(rho_s0, dtype=complex)
    r00, r01 = rho_s0[0, 0].real, rho_s0[0, 1]
    s, c = np.sin(t), np.cos(t)
    rho00 = 0.5 * s**2 + c**2 * r00
    rho01 = 0.25 * (s**2 - 1j * s * c) - 0.5 * s**2 * r00 + np.sqrt(3) / 2 * c**2 * r01
    return _fill_qubit(rho00, rho01)


# -- Jaynes-Cummings ----------------------------------------------------------

@dataclass(frozen=True)
class JCParams:
    a: float = 0.6
    p0: float = 0.4
    omega0: float = 1.0
    delta: float = 0.1
    g: float = 0.1
    fock_cutoff: int = 4

    def __post_init__(self):
        if not 0 <= self.a <= 1:
            raise InvalidParams(f"a must lie in [0, 1], got {self.a}")
        if not 0 < self.p0 < 1:
            raise InvalidParams(f"p0 must lie in (0, 1), got {self.p0}")
        if int(self.fock_cutoff) != self.fock_cutoff or self.fock_cutoff < 2:
            raise InvalidParams(f"fock_cutoff must be an integer >= 2, got {self.fock_cutoff}")

    @property
    def omega(self):
        return self.omega0 - self.delta


def jc_reference_state(params):
    d_e = params.fock_cutoff + 1
    sz = ops.SIGMA_Z
    rho0 = 0.5 * (np.eye(2) + params.a * sz)
    rho1 = 0.5 * (np.eye(2) - params.a * sz)
    n0 = np.zeros((d_e, d_e), dtype=complex)
    n0[0, 0] = 1
    n1 = np.zeros((d_e, d_e), dtype=complex)
    n1[1, 1] = 1
    return params.p0 * ops.tensor(rho0, n0) + (1 - params.p0) * ops.tensor(rho1, n1)


def jc_hamiltonian(params):
    d_e = params.fock_cutoff + 1
    b = np.diag(np.sqrt(np.arange(1, d_e)), 1).astype(complex)
    sp, sm = ops.SIGMA_PLUS, ops.SIGMA_MINUS
    return (params.omega0 * ops.tensor(sp @ sm, np.eye(d_e))
            + params.omega * ops.tensor(np.eye(2), b.conj().T @ b)
            + params.g * (ops.tensor(sp, b) + ops.tensor(sm, b.conj().T)))


def jc_excitation_number(params):
    d_e = params.fock_cutoff + 1
    b = np.diag(np.sqrt(np.arange(1, d_e)), 1).astype(complex)
    return ops.tensor(ops.SIGMA_PLUS @ ops.SIGMA_MINUS, np.eye(d_e)) + ops.tensor(np.eye(2), b.conj().T @ b)


def jc_model(params=None, tol=ops.DEFAULT_TOL):
    """Total model and reference reduced state ``(I + a(2p0-1) sigma_z)/2``."""
    params = params or JCParams()
    if not isinstance(params, JCParams):
        raise InvalidParams("jc_model expects JCParams")
    rho_s, ctx = decompose_total(jc_reference_state(params), 2, params.fock_cutoff + 1, tol)
    return TotalModel(ctx, jc_hamiltonian(params)), rho_s


@dataclass(frozen=True)
class JCCoefficients:
    t: float
    alpha: float
    beta: float
    gamma: complex
    f: float
    c: tuple
    d_sq: tuple
    # time derivatives
    alpha_dot: float
    beta_dot: float
    gamma_dot: complex
    f_dot: float


def _cn(params, n, t):
    Om = np.sqrt(params.delta**2 + 4 * params.g**2 * n)
    D = params.delta
    ph = np.exp(0.5j * D * t)
    s, c = np.sin(0.5 * Om * t), np.cos(0.5 * Om * t)
    val = ph * (c - 1j * D / Om * s)
    dval = 0.5j * D * val - 0.5 * ph * (Om * s + 1j * D * c)
    amp = n * (2 * params.g / Om) ** 2
    return val, dval, amp * s**2, amp * 0.5 * Om * np.sin(Om * t)


def jc_coefficients(params, t):
    p0, a = params.p0, params.a
    c1, dc1, d1, dd1 = _cn(params, 1, t)
    c2, dc2, d2, dd2 = _cn(params, 2, t)
    inner = p0 + (1 - p0) * c2
    return JCCoefficients(
        t=float(t),
        alpha=1 - (1 - p0) * d1,
        beta=1 - p0 * d1 - (1 - p0) * d2,
        gamma=c1 * inner,
        f=a * p0 * (1 - p0) * d2,
        c=(c1, c2),
        d_sq=(d1, d2),
        alpha_dot=-(1 - p0) * dd1,
        beta_dot=-p0 * dd1 - (1 - p0) * dd2,
        gamma_dot=dc1 * inner + c1 * (1 - p0) * dc2,
        f_dot=a * p0 * (1 - p0) * dd2,
    )


def jc_map_closed_form(params, t, rho_s0, correlated=True):
    """Closed-form affine map in the Schroedinger picture.

    With ``correlated=False`` the correlation offset ``f`` is dropped,
    giving the map for a factorized initial state with the same ``rho_E``.
    """
    k = jc_coefficients(params, t)
    rho_s0 = np.asarray(rho_s0, dtype=complex)
    f = k.f if correlated else 0.0
    rgg = rho_s0[1, 1].real * (k.alpha + k.beta - 1) + 1 - k.beta - f
    reg = rho_s0[0, 1] * np.exp(-1j * params.omega0 * t) * k.gamma
    return np.array([[1 - rgg, reg], [np.conj(reg), rgg]], dtype=complex)


def jc_domain(params, bloch_v):
    """Membership test via the two-sphere characterization of the physical domain."""
    v = np.asarray(bloch_v, dtype=float)
    c0 = np.array([0.0, 0.0, -2 * params.a * (1 - params.p0)])
    c1 = np.array([0.0, 0.0, 2 * params.a * params.p0])
    return bool(np.sum((v - c0) ** 2) <= 1 and np.sum((v - c1) ** 2) <= 1)


def jc_domain_margin(params, bloch_v):
    """Signed slack ``1 - max_i |v - c_i|^2`` of the sphere inequalities."""
    v = np.asarray(bloch_v, dtype=float)
    c0 = np.array([0.0, 0.0, -2 * params.a * (1 - params.p0)])
    c1 = np.array([0.0, 0.0, 2 * params.a * params.p0])
    return 1.0 - max(np.sum((v - c0) ** 2), np.sum((v - c1) ** 2))


@dataclass(frozen=True)
class JCRates:
    K_S: np.ndarray
    lambda_plus: float
    lambda_minus: float
    lambda_z: float


def jc_rates_closed_form(params, t, singular_tol=1e-12):
    """Effective Hamiltonian and rates of the sigma_+, sigma_-, sigma_z channels.

    Raises
    ------
    SingularTime
        When ``alpha + beta - 1`` or ``gamma`` vanishes.
    """
    k = jc_coefficients(params, t)
    den = k.alpha + k.beta - 1
    if abs(den) < singular_tol or abs(k.gamma) < singular_tol:
        raise SingularTime(t)
    al, be, f = k.alpha, k.beta, k.f
    ad, bd, fd = k.alpha_dot, k.beta_dot, k.f_dot
    lam_plus = ((al - f - 1) * bd - (be + f) * ad + den * fd) / den
    lam_minus = ((be + f - 1) * ad - (al - f) * bd - den * fd) / den
    ratio = k.gamma_dot / k.gamma
    lam_z = 0.25 * ((ad + bd) / den - 2 * ratio.real)
    K = (params.omega0 - ratio.imag) * (ops.SIGMA_PLUS @ ops.SIGMA_MINUS)
    return JCRates(K, float(lam_plus), float(lam_minus), float(lam_z))
