"""Nodal bases for hybrid coarse/atomistic chains.

Every node carries the piecewise-linear hat over its neighboring nodes,
sampled at the atoms.  In the atomistic region consecutive atoms are all
nodes, so there the hats collapse to canonical unit vectors; the node at the
start of the atomistic region (the interface) is a one-sided hat that is 1
on its own atom and decays linearly over the last coarse element.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DependentBasisError
from .lattice import LatticeModel

__all__ = [
    "Region",
    "BasisSet",
    "StiffnessFamily",
    "build_basis_from_nodes",
    "build_hybrid_basis",
    "identity_basis",
    "mass_matrix",
    "stiffness_family",
]


class Region(enum.Enum):
    COARSE = "coarse"
    INTERFACE = "interface"
    ATOMISTIC = "atomistic"


@dataclass(frozen=True, eq=False)
class BasisSet:
    """Interpolation matrix and node metadata.

    Attributes
    ----------
    phi : ndarray, shape (n_free, m)
        Column i is basis vector i sampled at the free atoms.
    atoms : ndarray, shape (n_free,)
        Atom index of each row.
    node_atoms : ndarray, shape (m,)
        Atom index at which each node sits.
    node_positions : ndarray, shape (m,)
    regions : tuple of Region
    left_width, right_width : ndarray, shape (m,)
        Element lengths on either side of each node (0 at the chain ends).
    atomistic_start : int
        First atom of the atomistic region (its node is the interface).
    """

    phi: np.ndarray
    atoms: np.ndarray
    node_atoms: np.ndarray
    node_positions: np.ndarray
    regions: tuple
    left_width: np.ndarray
    right_width: np.ndarray
    atomistic_start: int

    @property
    def m(self) -> int:
        return self.phi.shape[1]

    @property
    def n(self) -> int:
        return self.phi.shape[0]

    @property
    def interface_index(self):
        """Column index of the interface node, or None."""
        for i, r in enumerate(self.regions):
            if r is Region.INTERFACE:
                return i
        return None

    def nodes_in(self, region: Region) -> np.ndarray:
        return np.array([i for i, r in enumerate(self.regions) if r is region],
                        dtype=int)

    @classmethod
    def from_matrix(cls, phi, positions=None) -> "BasisSet":
        """Wrap an arbitrary full-column-rank matrix (regions unknown, all
        tagged atomistic).  Used for matrix-level experiments."""
        phi = np.asarray(phi, dtype=float)
        n, m = phi.shape
        _check_independent(phi.T @ phi)
        pos = np.arange(n, dtype=float) if positions is None else np.asarray(positions, float)
        node_atoms = np.argmax(np.abs(phi), axis=0)
        return cls(phi=phi, atoms=np.arange(n), node_atoms=node_atoms,
                   node_positions=pos[node_atoms],
                   regions=(Region.ATOMISTIC,) * m,
                   left_width=np.zeros(m), right_width=np.zeros(m),
                   atomistic_start=0)


@dataclass(frozen=True)
class StiffnessFamily:
    """K[l] = Phi^T A^l Phi for l = 0..lmax."""

    K: tuple

    def __getitem__(self, l):
        return self.K[l]

    def __len__(self):
        return len(self.K)

    @property
    def lmax(self) -> int:
        return len(self.K) - 1


def _check_independent(mass, rel_tol=1e-10):
    # sigma_min(Phi) / sigma_max(Phi) = sqrt(lambda_min(M) / lambda_max(M))
    ev = np.linalg.eigvalsh(mass)
    if ev[-1] <= 0 or ev[0] <= (rel_tol**2) * ev[-1]:
        raise DependentBasisError("basis columns are linearly dependent")


def build_basis_from_nodes(model: LatticeModel, nodes, atomistic_start=None) -> BasisSet:
    """Piecewise-linear nodal basis over an explicit, increasing node list.

    Parameters
    ----------
    model : LatticeModel
    nodes : sequence of int
        Atom indices of the nodes.  Must start at atom 0 and end at the last
        atom so the interpolant covers the chain.
    atomistic_start : int, optional
        First atom of the atomistic region.  Inferred as the start of the
        trailing run of consecutive nodes when omitted.

    Columns of clamped nodes, and rows of clamped atoms, are dropped.
    """
    nodes = np.asarray(sorted(set(int(p) for p in nodes)), dtype=int)
    n_atoms = model.n_atoms
    if nodes[0] != 0 or nodes[-1] != n_atoms - 1:
        raise ValueError("nodes must include the first and last atom")
    if atomistic_start is None:
        k = len(nodes) - 1
        while k > 0 and nodes[k] - nodes[k - 1] == 1:
            k -= 1
        atomistic_start = int(nodes[k])
    if atomistic_start not in set(nodes.tolist()):
        raise ValueError("atomistic_start must be a node")
    y = model.reference_positions
    yn = y[nodes]
    n_nodes = len(nodes)
    full = np.zeros((n_atoms, n_nodes))
    lw = np.zeros(n_nodes)
    rw = np.zeros(n_nodes)
    for k in range(n_nodes):
        col = np.zeros(n_atoms)
        col[nodes[k]] = 1.0
        if k > 0:
            a, b = nodes[k - 1], nodes[k]
            col[a:b] = (y[a:b] - yn[k - 1]) / (yn[k] - yn[k - 1])
            lw[k] = yn[k] - yn[k - 1]
        if k < n_nodes - 1:
            a, b = nodes[k], nodes[k + 1]
            col[a + 1:b + 1] = (yn[k + 1] - y[a + 1:b + 1]) / (yn[k + 1] - yn[k])
            rw[k] = yn[k + 1] - yn[k]
        full[:, k] = col

    regions = []
    has_atomistic = atomistic_start < n_atoms - 1
    for k, p in enumerate(nodes):
        if p > atomistic_start:
            regions.append(Region.ATOMISTIC)
        elif p < atomistic_start:
            regions.append(Region.COARSE)
        elif lw[k] <= 1.0 + 1e-12:
            regions.append(Region.ATOMISTIC)
        else:
            regions.append(Region.INTERFACE if has_atomistic else Region.COARSE)

    clamped = set(model.clamped)
    keep = np.array([p not in clamped for p in nodes])
    phi = full[np.ix_(model.free, np.flatnonzero(keep))]
    if np.any(~phi.any(axis=0)):
        raise DependentBasisError("a basis column vanishes on the free atoms")
    _check_independent(phi.T @ phi)
    return BasisSet(
        phi=phi,
        atoms=model.free.copy(),
        node_atoms=nodes[keep],
        node_positions=yn[keep],
        regions=tuple(r for r, kp in zip(regions, keep) if kp),
        left_width=lw[keep],
        right_width=rw[keep],
        atomistic_start=int(atomistic_start),
    )


def build_hybrid_basis(model: LatticeModel, coarse_mesh_size: int,
                       atomistic_start: int) -> BasisSet:
    """Uniform coarse mesh on atoms [0, atomistic_start] with a node every
    ``coarse_mesh_size`` atoms, one node per atom beyond."""
    h = int(coarse_mesh_size)
    if h < 1:
        raise ValueError("coarse_mesh_size must be >= 1")
    if not 0 <= atomistic_start < model.n_atoms:
        raise ValueError("atomistic_start must lie inside the chain")
    if atomistic_start % h:
        raise ValueError("coarse_mesh_size must divide the coarse-region length")
    nodes = list(range(0, atomistic_start + 1, h))
    nodes += list(range(atomistic_start + 1, model.n_atoms))
    return build_basis_from_nodes(model, nodes, atomistic_start)


def identity_basis(model: LatticeModel) -> BasisSet:
    """Every atom a node: Phi = I, the full model."""
    return build_basis_from_nodes(model, range(model.n_atoms), 0)


def mass_matrix(basis: BasisSet) -> np.ndarray:
    """M = Phi^T Phi (unit atomic masses)."""
    phi = basis.phi
    mass = phi.T @ phi
    try:
        scipy.linalg.cho_factor(mass)
    except np.linalg.LinAlgError as exc:
        raise DependentBasisError("mass matrix is singular") from exc
    return mass


def stiffness_family(basis: BasisSet, A, lmax: int) -> StiffnessFamily:
    """K_l = Phi^T A^l Phi for l = 0..lmax by repeated application of A."""
    if lmax < 1:
        raise ValueError("lmax must be >= 1")
    phi = basis.phi
    ks = [mass_matrix(basis)]
    w = phi
    for _ in range(lmax):
        w = A @ w
        k = phi.T @ w
        ks.append(0.5 * (k + k.T))
    return StiffnessFamily(tuple(ks))
