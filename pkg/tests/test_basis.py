import numpy as np
import pytest

from cgmd.basis import (BasisSet, Region, build_basis_from_nodes, build_hybrid_basis,
                        identity_basis, mass_matrix, stiffness_family)
from cgmd.errors import DependentBasisError
from cgmd.lattice import Harmonic, linearize, uniform_chain


def test_identity_when_H_is_one():
    m = uniform_chain(10, Harmonic(1.0))
    b = build_hybrid_basis(m, 1, 4)
    np.testing.assert_array_equal(b.phi, np.eye(8))
    np.testing.assert_array_equal(identity_basis(m).phi, np.eye(8))
    np.testing.assert_array_equal(mass_matrix(identity_basis(m)), np.eye(8))


def test_thousand_atom_hybrid_layout():
    m = uniform_chain(1024)
    b = build_hybrid_basis(m, 8, 512)
    assert b.m == 63 + 511
    assert b.interface_index == 63
    assert b.node_atoms[b.interface_index] == 512
    assert b.regions[0] is Region.COARSE
    assert all(r is Region.ATOMISTIC for r in b.regions[64:])
    # atomistic columns are unit vectors
    cols = b.phi[:, 64:]
    assert np.all(cols.sum(axis=0) == 1) and np.all(np.count_nonzero(cols, axis=0) == 1)


def test_interior_hat_column():
    m = uniform_chain(1024)
    b = build_hybrid_basis(m, 8, 512)
    col = b.phi[:, 10]
    nz = col[col != 0]
    expected = np.r_[np.arange(1, 8), 8, np.arange(7, 0, -1)] / 8
    np.testing.assert_allclose(nz, expected, rtol=0, atol=1e-15)


def test_partition_of_unity_on_coarse_interior():
    m = uniform_chain(129, Harmonic(1.0))
    b = build_hybrid_basis(m, 8, 64)
    rows = b.phi.sum(axis=1)
    atoms = b.atoms
    inside = (atoms >= 8) & (atoms <= 64)
    np.testing.assert_allclose(rows[inside], 1.0, atol=1e-14)


def test_mass_entries_H8():
    m = uniform_chain(129, Harmonic(1.0))
    b = build_hybrid_basis(m, 8, 64)
    M = mass_matrix(b)
    assert M[3, 3] == pytest.approx(43 / 8, abs=1e-14)
    assert M[3, 4] == pytest.approx(21 / 16, abs=1e-14)
    assert np.linalg.eigvalsh(M).min() > 0


def test_stiffness_family_five_atom(five_atom):
    _, basis, A = five_atom
    fam = stiffness_family(basis, A, 3)
    assert fam[0][0, 0] == pytest.approx(1.5, abs=1e-12)
    assert fam[1][0, 0] == pytest.approx(1.0, abs=1e-12)
    assert fam[2][0, 0] == pytest.approx(1.0, abs=1e-12)
    assert fam.lmax == 3
    np.testing.assert_array_equal(fam[0], mass_matrix(basis))


def test_stiffness_family_identity_and_hat_values():
    m = uniform_chain(12, Harmonic(1.0))
    A = linearize(m)
    fam = stiffness_family(identity_basis(m), A, 3)
    np.testing.assert_allclose(fam[3], A @ A @ A, atol=1e-12)
    big = uniform_chain(129, Harmonic(1.0))
    b = build_hybrid_basis(big, 8, 64)
    k1 = stiffness_family(b, linearize(big), 1)[1]
    assert k1[3, 3] == pytest.approx(0.25, abs=1e-14)
    assert k1[3, 4] == pytest.approx(-0.125, abs=1e-14)
    assert np.linalg.eigvalsh(k1).min() > -1e-12
    for k in fam.K:
        assert np.allclose(k, k.T, rtol=0, atol=1e-12 * np.abs(k).max())


def test_linear_field_reproduced():
    m = uniform_chain(65, Harmonic(1.0))
    b = build_hybrid_basis(m, 8, 32)
    u = 0.3 * b.atoms.astype(float)
    P = b.phi @ np.linalg.solve(mass_matrix(b), b.phi.T)
    np.testing.assert_allclose(P @ u, u, atol=1e-10)


def test_explicit_node_list_and_validation():
    m = uniform_chain(40, Harmonic(1.0))
    nodes = [0, 6, 11, 15, 18, 20, 21, 22, 23] + list(range(24, 40))
    b = build_basis_from_nodes(m, nodes)
    assert b.atomistic_start == 20
    assert b.regions[b.interface_index] is Region.INTERFACE
    assert b.left_width[0] == 6 and b.right_width[0] == 5
    np.testing.assert_allclose(b.phi.sum(axis=1)[5:], 1.0)
    with pytest.raises(ValueError):
        build_basis_from_nodes(m, [2, 10, 39])
    with pytest.raises(ValueError):
        build_hybrid_basis(m, 3, 20)


def test_dependent_columns_rejected():
    phi = np.array([[1.0, 2.0], [1.0, 2.0], [0.0, 0.0]])
    with pytest.raises(DependentBasisError):
        BasisSet.from_matrix(phi)
