import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrdyn import kernels
from corrdyn import operators as ops
from corrdyn.dynamics import AssignmentContext, TotalModel, linear_map
from corrdyn.errors import SingularMap
from corrdyn.generators import (CanonicalForm, canonical_decompose, correlated_canonical, exact_trajectory,
                                generator, integrate_master_equation, integrate_piecewise, map_and_derivative,
                                map_derivative, trajectory_residual)
from corrdyn.models import SwapParams, jc_model, swap_model

from conftest import FIG3, random_hermitian

XX = np.kron(ops.SIGMA_X, ops.SIGMA_X)


def qubit_model(c=0.5, seed=3):
    rng = np.random.default_rng(seed)
    return TotalModel(AssignmentContext(2, 2, np.eye(2) / 2, c * XX / 4), random_hermitian(4, rng))


def test_map_derivative_matches_finite_difference():
    model = qubit_model()
    h = 1e-5
    for t in (0.3, 1.7):
        dM, dI = map_derivative(model, t)
        p, m = linear_map(model, t + h), linear_map(model, t - h)
        np.testing.assert_allclose(dM, (p.M_psi - m.M_psi) / (2 * h), atol=1e-8)
        np.testing.assert_allclose(dI, (p.I_chi - m.I_chi) / (2 * h), atol=1e-8)
        md = map_and_derivative(model, t)
        np.testing.assert_allclose(md.M_psi, linear_map(model, t).M_psi, atol=1e-14)


def test_generator_propagates_map():
    model = qubit_model()
    t = 0.8
    snap = generator(model, t)
    md = map_and_derivative(model, t)
    np.testing.assert_allclose(snap.M_Lchi @ md.M_psi, md.dM_psi, atol=1e-10)
    # L annihilates the trace; J is traceless and Hermitian
    np.testing.assert_allclose(ops.trace_functional(2) @ snap.M_L, 0, atol=1e-12)
    assert abs(np.trace(snap.J_chi)) < 1e-12
    assert ops.hermiticity_error(snap.J_chi) < 1e-12


def test_generator_raises_near_singularity():
    model, _ = swap_model(SwapParams(0.5))
    with pytest.raises(SingularMap):
        generator(model, np.pi / 2)


def test_canonical_decompose_recovers_known_generator():
    K = 0.4 * ops.SIGMA_Z + 0.1 * ops.SIGMA_X
    rates = np.array([0.3, -0.05])
    Ls = np.array([ops.SIGMA_MINUS, ops.SIGMA_Z / np.sqrt(2)])
    M = CanonicalForm(K, rates, Ls).superop()
    form = canonical_decompose(M)
    np.testing.assert_allclose(form.K_S, K, atol=1e-12)
    np.testing.assert_allclose(form.rates, rates, atol=1e-12)
    np.testing.assert_allclose(np.abs(form.lindblads), np.abs(Ls), atol=1e-12)
    np.testing.assert_allclose(form.superop(), M, atol=1e-12)


def test_pure_hamiltonian_has_no_channels():
    H = np.array([[1.0, 0.3 - 0.2j], [0.3 + 0.2j, -0.4]])
    form = canonical_decompose(ops.commutator_superop(H))
    assert len(form.rates) == 0
    np.testing.assert_allclose(form.K_S, ops.traceless_part(H), atol=1e-13)


def test_correlation_form_vanishes_without_chi():
    cc = correlated_canonical(qubit_model(c=0.0), 0.7)
    assert len(cc.correlation.rates) == 0
    assert np.linalg.norm(cc.correlation.K_S) == 0


def test_canonical_lindblads_traceless_unit_norm():
    model, _ = jc_model(FIG3)
    form = correlated_canonical(model, 7.0).merged
    for L in form.lindblads:
        assert abs(np.trace(L)) < 1e-12
        assert np.linalg.norm(L) == pytest.approx(1.0)
    assert np.all(np.diff(np.abs(form.rates)) <= 1e-15)
    np.testing.assert_allclose(ops.traceless_part(form.K_S), form.K_S, atol=1e-13)


def test_canonical_decompose_is_deterministic():
    model = qubit_model()
    M = generator(model, 1.1).M_Lchi
    a, b = canonical_decompose(M), canonical_decompose(M.copy())
    np.testing.assert_array_equal(a.rates, b.rates)
    np.testing.assert_array_equal(a.lindblads, b.lindblads)


def test_canonical_decompose_rejects_trace_leak():
    with pytest.raises(ValueError):
        canonical_decompose(np.eye(4))


def test_correlation_part_has_no_hamiltonian():
    model = qubit_model()
    for t in (0.4, 1.9, 3.3):
        cc = correlated_canonical(model, t)
        assert np.linalg.norm(cc.correlation.K_S) < 1e-12
        np.testing.assert_allclose(cc.merged.K_S, cc.uncorrelated.K_S, atol=1e-10)
        np.testing.assert_allclose((cc.uncorrelated + cc.correlation).superop(), cc.merged.superop(), atol=1e-10)


def test_uncorrelated_generator_unchanged_by_chi():
    base = qubit_model(c=0.0)
    corr = qubit_model(c=0.5)
    np.testing.assert_allclose(generator(base, 1.2).M_L, generator(corr, 1.2).M_L, atol=1e-12)
    np.testing.assert_allclose(generator(base, 1.2).J_chi, 0, atol=1e-14)


def test_integration_matches_exact():
    model = qubit_model()
    rho0 = np.diag([0.6, 0.4]).astype(complex)
    ts = np.linspace(0, 1.0, 201)
    exact = exact_trajectory(model, rho0, ts)
    for form in ("superop", "canonical"):
        tr = integrate_master_equation(model, rho0, ts, form=form)
        assert np.max(np.abs(tr.states - exact)) < 1e-8
        assert tr.max_trace_drift() < 1e-12


def test_integration_stops_at_singular_time():
    model, rho = swap_model(SwapParams(0.875))
    ts = np.linspace(0, 3.0, 301)
    with pytest.raises(SingularMap) as info:
        integrate_master_equation(model, rho, ts)
    assert info.value.t == pytest.approx(np.pi / 2, abs=1e-6)


def test_piecewise_integration_restarts():
    model, rho = swap_model(SwapParams(0.875))
    ts = np.linspace(0, 3.0, 3001)
    tr = integrate_piecewise(model, rho, ts, margin=0.01)
    assert len(tr.singular_times) == 1
    assert tr.singular_times[0] == pytest.approx(np.pi / 2, abs=1e-6)
    assert tr.restarts[0] >= np.pi / 2 + 0.01
    exact = exact_trajectory(model, rho, ts)
    dev = np.max(np.abs(tr.states[tr.valid] - exact[tr.valid]))
    assert dev < 1e-6
    assert not tr.valid[(ts > np.pi / 2) & (ts < np.pi / 2 + 0.01)].any()


def test_trajectory_residual_is_j():
    model = qubit_model()
    snap = generator(model, 0.9, verify=False)
    for rho0 in (np.eye(2) / 2, np.diag([0.55, 0.45])):
        np.testing.assert_allclose(trajectory_residual(model, rho0, 0.9), snap.J_chi, atol=1e-9)


def test_canonical_path_uses_both_kernels():
    form = CanonicalForm(np.zeros((2, 2)), np.array([0.2]), np.array([ops.SIGMA_MINUS]))
    X = np.array([[0.3, 0.1], [0.1, 0.7]], dtype=complex)
    np.testing.assert_allclose(form.apply(X), (form.superop() @ X.reshape(-1)).reshape(2, 2), atol=1e-15)
    np.testing.assert_allclose(kernels.numpy_kernels.lindblad_superop(form.K_S.astype(complex), form.rates,
                                                                      form.lindblads.astype(complex)),
                               form.superop(), atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_lindblad_roundtrip(seed):
    rng = np.random.default_rng(seed)
    d = 3
    K = ops.traceless_part(random_hermitian(d, rng))
    n = rng.integers(1, 5)
    Ls = np.array([ops.traceless_part(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) for _ in range(n)])
    rates = rng.normal(size=n)
    M = CanonicalForm(K, rates, Ls).superop()
    form = canonical_decompose(M)
    np.testing.assert_allclose(form.superop(), M, atol=1e-9)
    np.testing.assert_allclose(form.K_S, K, atol=1e-9)
