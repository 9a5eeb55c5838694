import numpy as np
import pytest
from hypothesis import given, strategies as st

from cgmd.basis import BasisSet, build_hybrid_basis, identity_basis
from cgmd.errors import DependentBasisError
from cgmd.lattice import linearize, uniform_chain
from cgmd.projection import (forcing_g, fundamental_solutions, memory_kernel,
                             memory_kernel_diagonal, orthogonal_projector, qaq_spectrum,
                             ritz_projector)

from conftest import random_psd, random_spd

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _random_instance(seed, psd_rank=None):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(6, 33))
    m = int(rng.integers(1, n // 2 + 1))
    A = random_spd(rng, n) if psd_rank is None else random_psd(rng, n, psd_rank)
    basis = BasisSet.from_matrix(rng.standard_normal((n, m)))
    return rng, A, basis


@given(seeds)
def test_projector_algebra(seed):
    _, _, basis = _random_instance(seed)
    pair = orthogonal_projector(basis)
    P, Q, phi = pair.P, pair.Q, basis.phi
    tol = 1e-10
    assert np.abs(P @ P - P).max() < tol
    assert np.abs(P - P.T).max() < tol
    assert np.abs(P @ phi - phi).max() < tol * max(1, np.abs(phi).max())
    assert np.abs(Q @ phi).max() < tol * max(1, np.abs(phi).max())
    assert np.abs(P @ Q).max() < tol
    np.testing.assert_allclose(P + Q, np.eye(len(P)), atol=1e-15)
    assert np.trace(P) == pytest.approx(basis.m, abs=1e-10)


def test_identity_and_five_atom_projectors(five_atom):
    model, basis, _ = five_atom
    pair = orthogonal_projector(identity_basis(model))
    np.testing.assert_allclose(pair.P, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(pair.Q, 0, atol=1e-15)
    P = orthogonal_projector(basis).P
    assert P[1, 1] == pytest.approx(2 / 3, abs=1e-15)
    np.testing.assert_allclose(P, np.outer([.5, 1, .5], [.5, 1, .5]) / 1.5, atol=1e-15)


@given(seeds)
def test_ritz_projector_properties(seed):
    rng, A, basis = _random_instance(seed)
    R = ritz_projector(basis, A)
    phi = basis.phi
    assert np.abs(R.P @ R.P - R.P).max() < 1e-9 * max(1, np.abs(R.P).max())
    assert np.abs(R.P @ phi - phi).max() < 1e-9
    assert np.abs(phi.T @ A @ R.Q).max() < 1e-9 * np.abs(A).max() * np.abs(phi).max()
    u = phi @ rng.standard_normal(basis.m)
    np.testing.assert_allclose(R.P @ u, u, atol=1e-9)
    u = rng.standard_normal(len(A))
    theta, eta = R.error_split(phi @ rng.standard_normal(basis.m), u)
    assert np.abs(R.Q @ theta).max() < 1e-9 * max(1, np.abs(theta).max())


def test_ritz_a_orthogonality_on_chain(harmonic16):
    model, basis, A = harmonic16
    R = ritz_projector(basis, A)
    u = np.random.default_rng(5).standard_normal(model.n_free)
    assert np.abs(basis.phi.T @ A @ (R.Q @ u)).max() < 1e-12
    np.testing.assert_allclose(ritz_projector(identity_basis(model), A).P, np.eye(model.n_free),
                               atol=1e-12)


def test_ritz_rejects_kernel_meeting_subspace():
    A = np.diag([0.0, 1.0, 2.0])
    with pytest.raises(DependentBasisError):
        ritz_projector(BasisSet.from_matrix(np.array([[1.0], [0.0], [0.0]])), A)


@given(seeds)
def test_qaq_spectral_reconstructions(seed):
    _, A, basis = _random_instance(seed)
    pair = orthogonal_projector(basis)
    sp = qaq_spectrum(A, pair)
    lam, eta = sp.eigenvalues, sp.eigenvectors
    qaq = pair.Q @ A @ pair.Q
    assert np.abs(qaq @ eta - eta * lam).max() < 1e-8 * np.abs(A).max()
    assert np.abs(eta.T @ eta - np.eye(len(A))).max() < 1e-10
    act = sp.active_vectors
    la = lam[sp.active]
    np.testing.assert_allclose((act * la) @ act.T, qaq, atol=1e-8 * np.abs(A).max())
    np.testing.assert_allclose(act @ act.T, pair.Q, atol=1e-8)
    xi = (A @ act) / la
    np.testing.assert_allclose((xi * la) @ act.T, A @ pair.Q, atol=1e-8 * np.abs(A).max())
    assert sp.kernel_dimension >= basis.m
    aq = np.linalg.eigvals(A @ pair.Q)
    nonzero = np.sort(aq.real[np.abs(aq) > sp.zero_tolerance])
    np.testing.assert_allclose(nonzero, np.sort(la), rtol=1e-8, atol=1e-8)


@given(seeds)
def test_kernel_dimension_counts_kernel_of_a_outside_y(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(8, 25))
    rank = int(rng.integers(n // 2, n))
    _, A, basis = _random_instance(seed, psd_rank=rank)
    A = random_psd(rng, n, rank)
    basis = BasisSet.from_matrix(rng.standard_normal((n, int(rng.integers(1, n - rank + 1)))))
    pair = orthogonal_projector(basis)
    sp = qaq_spectrum(A, pair)
    # brute force: dim(ker A intersect Y-perp) = dim ker([A; Phi^T])
    stacked = np.vstack([A, basis.phi.T])
    sv = np.linalg.svd(stacked, compute_uv=False)
    null_dim = n - int(np.sum(sv > 1e-9 * sv[0]))
    assert sp.kernel_dimension == basis.m + null_dim
    assert np.abs(pair.Q @ A @ pair.Q @ basis.phi).max() < 1e-10 * np.abs(A).max()


def test_five_atom_spectrum(five_atom):
    model, basis, A = five_atom
    pair = orthogonal_projector(basis)
    sp = qaq_spectrum(A, pair)
    assert sp.kernel_dimension == 1
    aq = np.sort(np.linalg.eigvals(A @ pair.Q).real)
    np.testing.assert_allclose(np.sort(sp.eigenvalues[sp.active]), aq[np.abs(aq) > 1e-12],
                               atol=1e-12)
    trivial = qaq_spectrum(A, orthogonal_projector(identity_basis(model)))
    assert np.max(np.abs(trivial.eigenvalues)) < 1e-15


def test_memory_kernel_basic(harmonic32):
    _, basis, A = harmonic32
    pair = orthogonal_projector(basis)
    sp = qaq_spectrum(A, pair)
    np.testing.assert_array_equal(memory_kernel(sp, 0.0), 0.0)
    ts = np.linspace(0, 10, 17)
    th = memory_kernel(sp, ts)
    assert th.shape == (17, basis.m, basis.m)
    np.testing.assert_allclose(th, th.transpose(0, 2, 1), atol=1e-14)
    h = 1e-5
    deriv = (memory_kernel(sp, h) - memory_kernel(sp, -h)) / (2 * h)
    k2t = basis.phi.T @ A @ pair.Q @ A @ basis.phi
    np.testing.assert_allclose(deriv, k2t, atol=1e-6)
    diag = memory_kernel_diagonal(sp, ts)
    np.testing.assert_allclose(diag, np.diagonal(th, axis1=1, axis2=2), atol=1e-14)


def test_forcing_cases(harmonic16):
    model, basis, A = harmonic16
    pair = orthogonal_projector(basis)
    sp = qaq_spectrum(A, pair)
    rng = np.random.default_rng(2)
    y0 = basis.phi @ rng.standard_normal(basis.m)
    y1 = basis.phi @ rng.standard_normal(basis.m)
    assert np.abs(forcing_g(sp, y0, y1, np.linspace(0, 5, 11))).max() < 1e-12
    u0, v0 = rng.standard_normal((2, model.n_free))
    np.testing.assert_allclose(forcing_g(sp, u0, np.zeros_like(u0), 0.0),
                               -basis.phi.T @ A @ pair.Q @ u0, atol=1e-12)
    aq = A @ pair.Q
    for t in (0.3, 1.7, 4.0):
        C, S = fundamental_solutions(sp, t)
        oracle = -basis.phi.T @ (C @ aq @ u0 + S @ aq @ v0)
        np.testing.assert_allclose(forcing_g(sp, u0, v0, t), oracle, atol=1e-10)


def test_fundamental_solutions(harmonic16):
    _, basis, A = harmonic16
    pair = orthogonal_projector(basis)
    sp = qaq_spectrum(A, pair)
    n = len(A)
    C0, S0 = fundamental_solutions(sp, 0.0)
    np.testing.assert_allclose(C0, np.eye(n), atol=1e-12)
    np.testing.assert_allclose(S0, 0.0, atol=1e-12)
    aq = A @ pair.Q
    h = 1e-4
    for t in (0.5, 1.0, 2.0):
        Sp, Sm = fundamental_solutions(sp, t + h)[1], fundamental_solutions(sp, t - h)[1]
        C = fundamental_solutions(sp, t)[0]
        assert np.abs((Sp - Sm) / (2 * h) - C).max() < 1e-6
        Cp, Cm = fundamental_solutions(sp, t + h)[0], fundamental_solutions(sp, t - h)[0]
        resid = (Cp - 2 * C + Cm) / h**2 + aq @ C
        assert np.abs(resid).max() < 1e-6 * max(1.0, np.abs(aq).max()) * 1e1
    with pytest.raises(ValueError):
        fundamental_solutions(sp, 1.0, max_n=4)


def test_kernel_locality_on_lennard_jones_chain():
    model = uniform_chain(256)
    basis = build_hybrid_basis(model, 8, 128)
    sp = qaq_spectrum(linearize(model), orthogonal_projector(basis))
    times = np.linspace(0, 50, 501)
    peaks = np.abs(memory_kernel_diagonal(sp, times)).max(axis=0)
    iface = basis.interface_index
    assert int(np.argmax(peaks)) == iface
    deep = basis.node_atoms >= basis.atomistic_start + 10
    assert peaks[deep].max() < 1e-10
