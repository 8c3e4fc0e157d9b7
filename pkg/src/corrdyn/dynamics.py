"""Reduced dynamics from a correlated initial state with fixed ``rho_E`` and ``chi``.

The total initial state is ``rho_S (x) rho_E + chi`` with ``chi`` Hermitian
and traceless on both factors. Everything here is computed from exact
unitary propagation of the total system; the reduced maps are returned as
row-major superoperator matrices (see :mod:`corrdyn.operators`).
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from . import operators as ops
from .errors import DimensionMismatch, NotAState, NotCP, NotHermitian, NotTraceless, SingularMap

DEFAULT_COND_THRESHOLD = 1e8


class PhysicalDomainWarning(UserWarning):
    """An initial reduced state lies outside the physical domain."""


@dataclass(frozen=True, eq=False)
class AssignmentContext:
    """Fixed environment state and correlation operator.

    ``rho_e`` must be a density matrix on the environment; ``chi`` must be
    Hermitian with vanishing partial traces over either factor.
    """

    d_s: int
    d_e: int
    rho_e: np.ndarray
    chi: np.ndarray
    tol: ops.Tolerances = ops.DEFAULT_TOL

    def __post_init__(self):
        rho_e = ops.check_state(ops.as_operator(self.rho_e, self.d_e), self.tol, "rho_E")
        chi = ops.as_operator(self.chi, self.d_s * self.d_e)
        if not ops.is_hermitian(chi, self.tol.herm):
            raise NotHermitian(f"chi is not Hermitian (error {ops.hermiticity_error(chi):.2e})")
        for name, red in (("Tr_E", ops.partial_trace_env(chi, self.d_s, self.d_e)),
                          ("Tr_S", ops.partial_trace_sys(chi, self.d_s, self.d_e))):
            if np.max(np.abs(red)) > 1e-10:
                raise NotTraceless(f"{name}{{chi}} does not vanish (max entry {np.max(np.abs(red)):.2e})")
        object.__setattr__(self, "rho_e", rho_e)
        object.__setattr__(self, "chi", chi)

    @property
    def uncorrelated(self):
        return bool(np.max(np.abs(self.chi)) == 0)


@dataclass(frozen=True, eq=False)
class TotalModel:
    context: AssignmentContext
    hamiltonian: np.ndarray
    _eig: tuple = field(init=False, repr=False)

    def __post_init__(self):
        d = self.context.d_s * self.context.d_e
        H = ops.as_operator(self.hamiltonian, d)
        evals, evecs = ops.eig_hermitian(H, self.context.tol.herm)
        object.__setattr__(self, "hamiltonian", ops.hermitian_part(H))
        object.__setattr__(self, "_eig", (evals, evecs))

    @property
    def d_s(self):
        return self.context.d_s

    @property
    def d_e(self):
        return self.context.d_e

    def evolution(self, t):
        """Return ``(U_t, H U_t)`` from the cached spectral decomposition."""
        evals, V = self._eig
        phase = np.exp(-1j * evals * t)
        U = (V * phase) @ V.conj().T
        HU = (V * (evals * phase)) @ V.conj().T
        return U, HU


@dataclass(frozen=True, eq=False)
class MapSnapshot:
    t: float
    M_phi: np.ndarray
    I_chi: np.ndarray
    M_psi: np.ndarray

    def apply(self, X):
        return ops.apply_superop(self.M_psi, X)


@dataclass(frozen=True, eq=False)
class PseudoKraus:
    """Operator-sum ``X -> sum_i w_i F_i X F_i^dagger`` with real, possibly negative weights."""

    weights: np.ndarray
    operators: np.ndarray

    def __len__(self):
        return len(self.weights)

    def apply(self, X):
        X = np.asarray(X, dtype=complex)
        out = np.zeros_like(X)
        for w, F in zip(self.weights, self.operators):
            out += w * (F @ X @ F.conj().T)
        return out

    def superop(self):
        return ops.superop_from_kraus(self.operators, self.weights)

    def normalization(self):
        """``sum_i w_i F_i^dagger F_i``: zero for a pure inhomogeneity, identity for a CPT map."""
        d = self.operators.shape[-1] if len(self.operators) else 0
        out = np.zeros((d, d), dtype=complex)
        for w, F in zip(self.weights, self.operators):
            out += w * (F.conj().T @ F)
        return out


# -- state decomposition and assignment ---------------------------------------

def decompose_total(rho_se, d_s, d_e, tol=ops.DEFAULT_TOL):
    """Split a joint state into ``rho_S``, ``rho_E`` and the correlation operator."""
    rho_se = ops.as_operator(rho_se)
    if rho_se.shape[0] != d_s * d_e:
        raise DimensionMismatch(f"joint state has dimension {rho_se.shape[0]}, expected {d_s * d_e}")
    ops.check_state(rho_se, tol, "rho_SE")
    rho_se = ops.hermitian_part(rho_se)
    rho_s = ops.partial_trace_env(rho_se, d_s, d_e)
    rho_e = ops.partial_trace_sys(rho_se, d_s, d_e)
    chi = rho_se - ops.tensor(rho_s, rho_e)
    return rho_s, AssignmentContext(d_s, d_e, rho_e, chi, tol)


def assign(ctx, X):
    """Linear assignment ``X -> X (x) rho_E + chi Tr{X}``."""
    X = ops.as_operator(X, ctx.d_s)
    return ops.tensor(X, ctx.rho_e) + ctx.chi * np.trace(X)


def in_physical_domain(ctx, rho_s, tol=None):
    """Whether ``rho_S (x) rho_E + chi >= -tol``; also returns the minimum eigenvalue."""
    if tol is None:
        tol = ctx.tol.psd
    rho_s = ops.check_state(ops.as_operator(rho_s, ctx.d_s), ctx.tol, "rho_S")
    lam = float(np.linalg.eigvalsh(ops.hermitian_part(assign(ctx, rho_s)))[0])
    return lam >= -tol, lam


# -- exact propagation --------------------------------------------------------

def propagator(H, t):
    """``exp(-i H t)`` via the Hermitian eigendecomposition of ``H``."""
    evals, V = ops.eig_hermitian(H)
    return (V * np.exp(-1j * evals * t)) @ V.conj().T


def reduced_exact(model, rho_s0, t):
    """Reduced state at ``t`` by propagating the assigned joint state; the ground truth."""
    ctx = model.context
    rho_s0 = ops.as_operator(rho_s0, ctx.d_s)
    try:
        ok, lam = in_physical_domain(ctx, rho_s0)
    except NotAState:
        ok, lam = False, float("nan")
    if not ok:
        warnings.warn(f"initial state outside the physical domain (min eigenvalue {lam:.3e})",
                      PhysicalDomainWarning, stacklevel=2)
    U, _ = model.evolution(t)
    return kernels.traced_sandwich(U, assign(ctx, rho_s0), U, ctx.d_s, ctx.d_e)


def uncorrelated_map(model, t):
    """Superoperator of ``X -> Tr_E{U_t (X (x) rho_E) U_t^dagger}``."""
    U, _ = model.evolution(t)
    return kernels.reduced_superop(U, U, model.context.rho_e, model.d_s, model.d_e)


def inhomogeneity(model, t):
    """``Tr_E{U_t chi U_t^dagger}`` (traceless, Hermitian)."""
    U, _ = model.evolution(t)
    return ops.hermitian_part(kernels.traced_sandwich(U, model.context.chi, U, model.d_s, model.d_e))


def linear_map(model, t):
    U, _ = model.evolution(t)
    ctx = model.context
    M_phi = kernels.reduced_superop(U, U, ctx.rho_e, ctx.d_s, ctx.d_e)
    I_chi = ops.hermitian_part(kernels.traced_sandwich(U, ctx.chi, U, ctx.d_s, ctx.d_e))
    M_psi = M_phi + ops.rank_one_superop(I_chi)
    return MapSnapshot(float(t), M_phi, I_chi, M_psi)


def condition_number(M):
    s = np.linalg.svd(M, compute_uv=False)
    return float(s[0] / s[-1]) if s[-1] > 0 else float("inf")


def inverse_map(snapshot, cond_threshold=DEFAULT_COND_THRESHOLD):
    """Inverse of the correlated linear map, built from the uncorrelated inverse.

    ``Psi^{-1}[X] = Phi^{-1}[X] - Phi^{-1}[I_chi] Tr{X}``

    Raises
    ------
    SingularMap
        If the condition number of ``M_phi`` exceeds ``cond_threshold``.
    """
    M_phi = snapshot.M_phi
    cond = condition_number(M_phi)
    if not cond < cond_threshold:
        raise SingularMap(snapshot.t, cond)
    D = M_phi.shape[0]
    d = ops.superop_dim(M_phi)
    phi_inv = np.linalg.solve(M_phi, np.eye(D, dtype=complex))
    offset = np.linalg.solve(M_phi, snapshot.I_chi.reshape(-1))
    return phi_inv - np.outer(offset, ops.trace_functional(d))


# -- operator-sum representations ---------------------------------------------

def pseudo_kraus_inhomogeneity(I_chi, tol=ops.DEFAULT_TOL):
    """Pseudo-Kraus form of ``X -> I_chi Tr{X}`` from the spectrum of ``I_chi``.

    Weights ``a_j`` go with operators ``|phi_j><phi_j'|`` for all pairs
    ``(j, j')``; the weights sum to zero, so ``sum w F^dagger F = 0``.
    """
    I_chi = ops.as_operator(I_chi)
    a, V = ops.eig_hermitian(I_chi, tol.herm)
    if abs(np.sum(a)) > tol.trace:
        raise NotTraceless(f"inhomogeneity has trace {np.sum(a):.3e}")
    d = I_chi.shape[0]
    weights = np.repeat(a, d)
    F = np.einsum("aj,bk->jkab", V, V.conj()).reshape(d * d, d, d)
    return PseudoKraus(weights, F)


def kraus_uncorrelated(M_phi, psd_tol=ops.DEFAULT_TOL.psd):
    """Kraus operators of a completely positive map from its Choi eigendecomposition."""
    C = ops.hermitian_part(ops.choi_from_superop(M_phi))
    c, V = np.linalg.eigh(C)
    if c[0] < -psd_tol:
        raise NotCP(f"Choi matrix has eigenvalue {c[0]:.3e}")
    keep = c > max(psd_tol, 1e-14) * 1e-3
    Kr = np.array([np.sqrt(ci) * ops.kraus_from_choi_vector(v) for ci, v in zip(c[keep], V[:, keep].T)])
    Kr = Kr[::-1]  # largest weight first
    return PseudoKraus(np.ones(len(Kr)), Kr)


def epsilon_matrix(M_psi):
    """Coefficient matrix of the map in the Hermitian operator basis.

    ``Psi[X] = sum_kk' eps[k, k'] G_k X G_k'^dagger``; unitarily similar to
    the Choi matrix.
    """
    d = ops.superop_dim(M_psi)
    G = ops.hermitian_basis(d)
    W = np.array([ops.choi_vector_from_operator(g) for g in G]).T
    return W.conj().T @ ops.choi_from_superop(M_psi) @ W


def cp_spectra(M_psi):
    C = ops.hermitian_part(ops.choi_from_superop(M_psi))
    eps = ops.hermitian_part(epsilon_matrix(M_psi))
    return np.linalg.eigvalsh(C), np.linalg.eigvalsh(eps)


def cp_check(M_psi):
    """Minimum eigenvalues of the Choi matrix and of the basis coefficient matrix."""
    choi_ev, eps_ev = cp_spectra(M_psi)
    return float(choi_ev[0]), float(eps_ev[0])


# -- sampling -----------------------------------------------------------------

def random_state(d, rng):
    """Density matrix ``G G^dagger / Tr`` with complex Gaussian ``G``."""
    G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_bloch_vector(rng):
    """Uniform point in the unit ball."""
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    return v * rng.uniform() ** (1 / 3)


def bloch_to_state(v):
    v = np.asarray(v, dtype=float)
    return 0.5 * (np.eye(2) + v[0] * ops.SIGMA_X + v[1] * ops.SIGMA_Y + v[2] * ops.SIGMA_Z)


def state_to_bloch(rho):
    rho = np.asarray(rho)
    return np.array([np.trace(rho @ s).real for s in (ops.SIGMA_X, ops.SIGMA_Y, ops.SIGMA_Z)])


def sample_physical_domain(ctx, n, rng, max_tries=200_000):
    """Rejection-sample ``n`` states from the physical domain of ``ctx``."""
    out = []
    for _ in range(max_tries):
        rho = bloch_to_state(random_bloch_vector(rng)) if ctx.d_s == 2 else random_state(ctx.d_s, rng)
        if in_physical_domain(ctx, rho)[0]:
            out.append(rho)
            if len(out) == n:
                return out
    raise RuntimeError(f"physical domain too small: {len(out)} of {n} samples after {max_tries} draws")
