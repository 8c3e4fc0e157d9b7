"""Time-local generators, canonical Lindblad forms and master-equation integration.

The uncorrelated generator is ``L_t = dPhi/dt o Phi^{-1}``; the correlated
generator adds the rank-one term ``X -> J_t Tr{X}`` with
``J_t = dI/dt - L_t[I_t]``. All derivatives are analytic, obtained from
``dU/dt = -iHU``.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import kernels
from . import operators as ops
from .dynamics import (DEFAULT_COND_THRESHOLD, PhysicalDomainWarning, condition_number, linear_map,
                       reduced_exact)
from .errors import ReconstructionFailure, SingularMap

CHANNEL_CUTOFF = 1e-12
RECONSTRUCTION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MapDerivatives:
    t: float
    M_phi: np.ndarray
    dM_phi: np.ndarray
    I_chi: np.ndarray
    dI_chi: np.ndarray

    @property
    def M_psi(self):
        return self.M_phi + ops.rank_one_superop(self.I_chi)

    @property
    def dM_psi(self):
        return self.dM_phi + ops.rank_one_superop(self.dI_chi)


def map_and_derivative(model, t):
    U, HU = model.evolution(t)
    dU = -1j * HU
    ctx = model.context
    d_s, d_e = ctx.d_s, ctx.d_e
    M_phi = kernels.reduced_superop(U, U, ctx.rho_e, d_s, d_e)
    dM_phi = (kernels.reduced_superop(dU, U, ctx.rho_e, d_s, d_e)
              + kernels.reduced_superop(U, dU, ctx.rho_e, d_s, d_e))
    I_chi = kernels.traced_sandwich(U, ctx.chi, U, d_s, d_e)
    dI_chi = (kernels.traced_sandwich(dU, ctx.chi, U, d_s, d_e)
              + kernels.traced_sandwich(U, ctx.chi, dU, d_s, d_e))
    return MapDerivatives(float(t), M_phi, dM_phi, ops.hermitian_part(I_chi), ops.hermitian_part(dI_chi))


def map_derivative(model, t):
    """Analytic ``(d/dt M_psi, d/dt I_chi)`` at time ``t``."""
    md = map_and_derivative(model, t)
    return md.dM_psi, md.dI_chi


@dataclass(frozen=True, eq=False)
class GeneratorSnapshot:
    t: float
    M_L: np.ndarray
    J_chi: np.ndarray
    M_Lchi: np.ndarray
    condition_number: float = float("nan")
    det_phi: float = float("nan")

    def apply(self, X):
        return ops.apply_superop(self.M_Lchi, X)


def _right_divide(A, B):
    # A @ inv(B) via a pivoted solve
    return np.linalg.solve(B.T, A.T).T


def generator_from_derivatives(md, cond_threshold=DEFAULT_COND_THRESHOLD, verify=False):
    cond = condition_number(md.M_phi)
    if not cond < cond_threshold:
        raise SingularMap(md.t, cond)
    M_L = _right_divide(md.dM_phi, md.M_phi)
    J = ops.hermitian_part(md.dI_chi - ops.apply_superop(M_L, md.I_chi))
    M_Lchi = M_L + ops.rank_one_superop(J)
    if verify:
        direct = _right_divide(md.dM_psi, md.M_psi)
        scale = max(1.0, np.max(np.abs(M_Lchi)))
        err = np.max(np.abs(direct - M_Lchi))
        if err > 1e-8 * scale:
            raise ReconstructionFailure(
                f"generator constructions disagree at t={md.t:.6g}: {err:.2e}")
    det = float(np.linalg.det(md.M_phi).real)
    return GeneratorSnapshot(md.t, M_L, J, M_Lchi, cond, det)


def generator(model, t, cond_threshold=DEFAULT_COND_THRESHOLD, verify=True):
    """Uncorrelated generator, correlation inhomogeneity and correlated generator at ``t``.

    With ``verify`` the correlated generator is cross-checked against
    ``dPsi/dt o Psi^{-1}`` computed directly.

    Raises
    ------
    SingularMap
        If the uncorrelated map is not invertible within ``cond_threshold``.
    """
    return generator_from_derivatives(map_and_derivative(model, t), cond_threshold, verify)


# -- canonical form -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CanonicalForm:
    """``X -> -i[K, X] + sum_k rate_k (L_k X L_k^+ - {L_k^+ L_k, X}/2)``."""

    K_S: np.ndarray
    rates: np.ndarray
    lindblads: np.ndarray = field(repr=False)

    @property
    def dim(self):
        return self.K_S.shape[0]

    @property
    def channels(self):
        return list(zip(self.rates, self.lindblads))

    def dissipator_superop(self):
        return kernels.lindblad_superop(np.zeros_like(self.K_S), self.rates, self.lindblads)

    def superop(self):
        return kernels.lindblad_superop(self.K_S, self.rates, self.lindblads)

    def apply(self, X):
        X = np.asarray(X, dtype=complex)
        out = -1j * (self.K_S @ X - X @ self.K_S)
        for rate, L in self.channels:
            LdL = L.conj().T @ L
            out += rate * (L @ X @ L.conj().T - 0.5 * (LdL @ X + X @ LdL))
        return out

    def kossakowski(self, basis):
        """Coefficient matrix ``a`` of the dissipator in an orthonormal traceless ``basis``."""
        basis = np.asarray(basis, dtype=complex)
        coef = np.einsum("aij,kij->ak", basis.conj(), self.lindblads) if len(self.rates) else \
            np.zeros((len(basis), 0), dtype=complex)
        return (coef * self.rates) @ coef.conj().T

    def __add__(self, other):
        return CanonicalForm(self.K_S + other.K_S,
                             np.concatenate([self.rates, other.rates]),
                             np.concatenate([self.lindblads, other.lindblads]))


def _fix_phases(Ls):
    # largest-modulus entry (first on ties) made real positive, for deterministic output
    flat = Ls.reshape(len(Ls), -1)
    mags = np.abs(flat)
    k = np.argmax(mags > mags.max(axis=1, keepdims=True) * (1 - 1e-9), axis=1)
    pivot = flat[np.arange(len(Ls)), k]
    return Ls * (np.abs(pivot) / pivot)[:, None, None]


def _canonical_parts(C, d):
    g, V = np.linalg.eigh(ops.hermitian_part(C))
    G = V.T.reshape(-1, d, d).transpose(0, 2, 1)
    tr = np.einsum("kii->k", G)
    K = np.einsum("k,k,kji->ij", g, tr, G.conj()) - np.einsum("k,k,kij->ij", g, tr.conj(), G)
    K = ops.hermitian_part(K / (2j * d))
    J = (G - (tr / d)[:, None, None] * np.eye(d)).reshape(len(g), d * d)
    # the traceless parts need not be orthogonal; rediagonalize their coefficient
    # matrix so redundant or cancelling channels collapse
    rates, V = np.linalg.eigh(np.einsum("k,ka,kb->ab", g, J, J.conj()))
    keep = np.abs(rates) >= max(CHANNEL_CUTOFF, 1e-14 * float(np.max(np.abs(g))))
    return K, rates[keep], V[:, keep].T.reshape(-1, d, d)


def canonical_decompose(M, check=True):
    """Split a Hermiticity-preserving, trace-annihilating generator into ``K_S`` and channels.

    The Choi matrix is diagonalized into a pseudo-Kraus set ``(g_i, G_i)``;
    the effective Hamiltonian is
    ``K = (1/2i d) sum_i g_i (Tr{G_i} G_i^+ - Tr{G_i}^* G_i)`` and the
    Lindblad operators are the traceless parts of the ``G_i``, normalized to
    unit Hilbert-Schmidt norm with the rates rescaled accordingly. Channels
    are sorted by decreasing ``|rate|``, ties broken lexicographically on the
    operator entries.

    Raises
    ------
    ReconstructionFailure
        If the form does not reproduce ``M`` to ``1e-9`` (relative to
        ``max(1, max|M|)``).
    """
    M = np.asarray(M, dtype=complex)
    d = ops.superop_dim(M)
    scale = max(1.0, float(np.max(np.abs(M))))
    C = ops.choi_from_superop(M)
    if check:
        leak = np.max(np.abs(ops.trace_functional(d) @ M))
        if leak > 1e-9 * scale:
            raise ValueError(f"superoperator does not annihilate the trace (error {leak:.2e})")
        if ops.hermiticity_error(C) > 1e-9 * scale:
            raise ValueError("superoperator is not Hermiticity preserving")
    K, rates, L = _canonical_parts(C, d)
    L = _fix_phases(L) if len(L) else L
    flat = L.reshape(len(L), d * d)
    keys = [x for i in range(d * d - 1, -1, -1) for x in (np.round(flat.imag[:, i], 12),
                                                          np.round(flat.real[:, i], 12))]
    order = np.lexsort(keys + [-np.abs(rates)]) if len(rates) else np.array([], dtype=int)
    form = CanonicalForm(K, rates[order].astype(float), L[order])
    residual = float(np.max(np.abs(form.superop() - M)))
    if residual > RECONSTRUCTION_TOL * scale:
        raise ReconstructionFailure(f"canonical form does not reproduce the generator (residual {residual:.2e})")
    return form


@dataclass(frozen=True, eq=False)
class CorrelatedCanonical:
    t: float
    uncorrelated: CanonicalForm
    correlation: CanonicalForm
    merged: CanonicalForm
    snapshot: GeneratorSnapshot


def correlated_canonical(model, t, cond_threshold=DEFAULT_COND_THRESHOLD):
    """Canonical forms of ``L_t``, of ``X -> J_t Tr{X}``, and of their sum."""
    snap = generator(model, t, cond_threshold)
    unc = canonical_decompose(snap.M_L)
    corr = canonical_decompose(ops.rank_one_superop(snap.J_chi))
    merged = canonical_decompose(snap.M_Lchi)
    return CorrelatedCanonical(float(t), unc, corr, merged, snap)


# -- integration ----------------------------------------------------------------

@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    valid: np.ndarray
    singular_times: list = field(default_factory=list)
    restarts: list = field(default_factory=list)

    @property
    def traces(self):
        return np.einsum("nii->n", self.states)

    def max_trace_drift(self):
        tr = self.traces[self.valid]
        return float(np.max(np.abs(tr - 1))) if tr.size else 0.0


class _GeneratorCache:
    def __init__(self, model, cond_threshold, form):
        self.model = model
        self.cond_threshold = cond_threshold
        self.form = form
        self._cache = {}

    def __call__(self, t):
        key = float(t)
        hit = self._cache.get(key)
        if hit is None:
            snap = generator_from_derivatives(map_and_derivative(self.model, key), self.cond_threshold)
            if self.form == "superop":
                M = snap.M_Lchi
            else:
                d = self.model.d_s
                M = kernels.lindblad_superop(*_canonical_parts(ops.choi_from_superop(snap.M_Lchi), d))
            if len(self._cache) > 8:
                self._cache.clear()
            hit = self._cache[key] = (snap, M)
        return hit


def _det_phi(model, t):
    return float(np.linalg.det(linear_map(model, t).M_phi).real)


def _sign_change_root(model, lo, hi):
    return float(brentq(lambda t: _det_phi(model, t), lo, hi, xtol=1e-15, maxiter=200))


def _even_zero(model, lo, hi, cond_threshold):
    """Refine a local minimum of ``|det Phi|`` in ``[lo, hi]``; return its time if singular there."""
    res = minimize_scalar(lambda t: np.log(abs(_det_phi(model, t)) + 1e-300), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-13})
    ts = float(res.x)
    cond = condition_number(linear_map(model, ts).M_phi)
    return (ts, cond) if not cond < cond_threshold else None


def _rk4(model, rho_s0, t_grid, cond_threshold, form):
    # returns (states, n_filled, SingularMap or None)
    gen = _GeneratorCache(model, cond_threshold, form)
    d = model.d_s
    rho = ops.as_operator(rho_s0, d).reshape(-1).copy()
    states = np.empty((len(t_grid), d, d), dtype=complex)
    states[0] = rho.reshape(d, d)
    prev = None  # (time, |det|) of the previous midpoint
    for n in range(len(t_grid) - 1):
        t0, t1 = t_grid[n], t_grid[n + 1]
        h = t1 - t0
        tm = t0 + 0.5 * h
        try:
            s0, M0 = gen(t0)
            sh, Mh = gen(tm)
            s1, M1 = gen(t1)
        except SingularMap as exc:
            return states, n + 1, exc
        dets = (s0.det_phi, sh.det_phi, s1.det_phi)
        if np.sign(dets[0]) != np.sign(dets[1]) or np.sign(dets[1]) != np.sign(dets[2]):
            lo, hi = (t0, tm) if np.sign(dets[0]) != np.sign(dets[1]) else (tm, t1)
            ts = _sign_change_root(model, lo, hi)
            return states, n + 1, SingularMap(
                ts, float("inf"), f"dynamical map singular at t={ts:.12g} (det Phi changes sign)")
        # zeros of even order leave the sign alone; look at local minima of |det|
        ad = np.abs(dets)
        hit, filled = None, n + 1
        if prev is not None and ad[0] < prev[1] and ad[0] < ad[1]:
            hit = _even_zero(model, prev[0], tm, cond_threshold)
            if hit is not None and hit[0] < t0:
                filled = n  # the previous step already crossed it
        if hit is None and ad[1] < ad[0] and ad[1] < ad[2]:
            hit = _even_zero(model, t0, t1, cond_threshold)
        if hit is not None:
            return states, filled, SingularMap(hit[0], hit[1], f"dynamical map singular at t={hit[0]:.12g}")
        prev = (tm, ad[1])
        k1 = M0 @ rho
        k2 = Mh @ (rho + 0.5 * h * k1)
        k3 = Mh @ (rho + 0.5 * h * k2)
        k4 = M1 @ (rho + h * k3)
        rho = rho + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        states[n + 1] = rho.reshape(d, d)
    return states, len(t_grid), None


def integrate_master_equation(model, rho_s0, t_grid, cond_threshold=DEFAULT_COND_THRESHOLD,
                              form="superop"):
    """Fixed-step RK4 integration of the correlated master equation on ``t_grid``.

    The generator is rebuilt at every stage time (midpoint evaluations are
    shared by the two middle stages). ``form="superop"`` applies the
    generator matrix directly; ``form="canonical"`` rebuilds it from its
    canonical Lindblad form.

    Raises
    ------
    SingularMap
        If a stage time has condition number above ``cond_threshold`` or
        ``det Phi_t`` changes sign within a step. The exception's ``t`` is
        the offending (bisected) time; nothing past it is integrated.
    """
    if form not in ("superop", "canonical"):
        raise ValueError(f"unknown generator form {form!r}")
    t_grid = np.asarray(t_grid, dtype=float)
    states, _, exc = _rk4(model, rho_s0, t_grid, cond_threshold, form)
    if exc is not None:
        raise exc
    return Trajectory(t_grid.copy(), states, np.ones(len(t_grid), dtype=bool))


def integrate_piecewise(model, rho_s0, t_grid, margin, cond_threshold=DEFAULT_COND_THRESHOLD,
                        form="superop"):
    """Integrate across singular times by restarting from the exact state.

    Whenever the integrator meets a singular time ``t*``, grid points in
    ``(t*, t* + margin)`` are marked invalid and integration resumes at the
    first grid point at or past ``t* + margin``, from the exact reduced
    state there. Points before ``t*`` keep their integrated values.
    """
    if form not in ("superop", "canonical"):
        raise ValueError(f"unknown generator form {form!r}")
    t_grid = np.asarray(t_grid, dtype=float)
    d = model.d_s
    states = np.full((len(t_grid), d, d), np.nan, dtype=complex)
    valid = np.zeros(len(t_grid), dtype=bool)
    singular, restarts = [], []
    start, rho = 0, ops.as_operator(rho_s0, d)
    while start < len(t_grid):
        part, filled, exc = _rk4(model, rho, t_grid[start:], cond_threshold, form)
        states[start:start + filled] = part[:filled]
        valid[start:start + filled] = True
        if exc is None:
            break
        singular.append(exc.t)
        start = max(int(np.searchsorted(t_grid, exc.t + margin, side="left")), start + filled)
        if start >= len(t_grid):
            break
        rho = exact_trajectory(model, rho_s0, [t_grid[start]])[0]
        restarts.append(float(t_grid[start]))
    return Trajectory(t_grid.copy(), states, valid, singular, restarts)


def exact_trajectory(model, rho_s0, t_grid):
    """Reduced states from exact total-system propagation, one per grid time."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PhysicalDomainWarning)
        return np.array([reduced_exact(model, rho_s0, t) for t in t_grid])


def trajectory_residual(model, rho_s0, t, h=1e-3, cond_threshold=DEFAULT_COND_THRESHOLD):
    """``d/dt rho_exact(t) - L_t[rho_exact(t)]`` with a five-point derivative of the exact trajectory."""
    pts = exact_trajectory(model, rho_s0, [t - 2 * h, t - h, t, t + h, t + 2 * h])
    drho = (pts[0] - 8 * pts[1] + 8 * pts[3] - pts[4]) / (12 * h)
    snap = generator(model, t, cond_threshold, verify=False)
    return drho - ops.apply_superop(snap.M_L, pts[2])
