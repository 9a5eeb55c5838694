"""Pair-force decomposition, local virial stress and the summation rules
that replace atom sums by integrals over the coarse mesh.

Everything here is the 1D form of a dimension-generic construction: the
outer product f_ij (x) (y_i - y_j) is a scalar product, and the gradient of
a hat is its piecewise slope.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .basis import BasisSet, Region, mass_matrix
from .lattice import LatticeModel, force, pair_potential

__all__ = [
    "LocalStressField",
    "pair_forces",
    "virial_stress",
    "hat_gradient",
    "sampled_force",
    "projected_force",
    "quadrature_mass",
]


@dataclass(frozen=True, eq=False)
class LocalStressField:
    """Per-atom virial stress.

    Attributes
    ----------
    sigma : ndarray, shape (n_atoms,)
        Scalar stress of every atom (clamped atoms included, since they sit
        inside the support of the boundary hats).
    cell_volume : float
        Reference volume per atom (the lattice spacing in 1D).
    atoms : ndarray
        Atom index of each entry of ``sigma``.
    """

    sigma: np.ndarray
    cell_volume: float
    atoms: np.ndarray

    def rows(self):
        """(atom_index, sigma) pairs for CSV export."""
        return list(zip(self.atoms.tolist(), self.sigma.tolist()))


def pair_forces(model: LatticeModel, u) -> dict:
    """Decompose the interatomic force into pair contributions.

    Returns
    -------
    dict
        ``(i, j) -> f_ij``, the force on atom i exerted by atom j.  Both
        orientations are stored and ``f_ji = -f_ij`` holds exactly.  On each
        free atom, ``sum_j f_ij`` equals :func:`lattice.force`.
    """
    u = np.asarray(u, dtype=float)
    out = {}
    for k, r, _ in model.shells(u):
        if np.any(r <= 0):
            force(model, u)  # raises with a descriptive message
        _, dv = pair_potential(model.potential, r)
        dv = np.atleast_1d(dv)
        for i, f in enumerate(dv.tolist()):
            out[(i, i + k)] = f
            out[(i + k, i)] = -f
    return out


def virial_stress(model: LatticeModel, u, cell_volume: float | None = None) -> LocalStressField:
    """sigma_i = -1/(2 V0) sum_j f_ij (y_i - y_j), with reference positions y."""
    if cell_volume is None:
        cell_volume = model.spacing
    y = model.reference_positions
    sigma = np.zeros(model.n_atoms)
    for (i, j), f in pair_forces(model, u).items():
        sigma[i] += f * (y[i] - y[j])
    sigma *= -0.5 / cell_volume
    return LocalStressField(sigma=sigma, cell_volume=float(cell_volume),
                            atoms=np.arange(model.n_atoms))


def _full_column(basis: BasisSet, node: int, n_atoms: int):
    col = np.zeros(n_atoms)
    col[basis.atoms] = basis.phi[:, node]
    return col


def hat_gradient(basis: BasisSet, node: int, model: LatticeModel) -> np.ndarray:
    """Slope of hat ``node`` at every atom.

    Central differences of the sampled hat: inside an element this is the
    element slope, at a kink the mean of the two one-sided slopes.
    """
    y = model.reference_positions
    col = _full_column(basis, node, model.n_atoms)
    return np.gradient(col, y)


def sampled_force(basis: BasisSet, node: int, stress: LocalStressField,
                  model: LatticeModel) -> float:
    """Stress-form approximation of (phi_n, f).

    Returns ``-sum_i sigma_i phi_n'(y_i) V0`` over the support of the hat;
    the boundary term of the summation by parts is neglected.
    """
    grad = hat_gradient(basis, node, model)
    support = np.flatnonzero(grad)
    return float(-np.sum(stress.sigma[support] * grad[support]) * stress.cell_volume)


def projected_force(basis: BasisSet, node: int, model: LatticeModel, u) -> float:
    """The exact atom sum (phi_n, f(u)) that :func:`sampled_force` approximates."""
    f = force(model, np.asarray(u, dtype=float))
    return float(_full_column(basis, node, model.n_atoms) @ f)


def _integral_entries(basis: BasisSet, cell_volume: float):
    # closed-form (1/V0) int phi_i phi_j for piecewise-linear hats
    lw = basis.left_width
    rw = basis.right_width
    diag = (lw + rw) / (3.0 * cell_volume)
    off = rw[:-1] / (6.0 * cell_volume)
    return diag, off


def quadrature_mass(basis: BasisSet, rule: str = "exact", cell_volume: float = 1.0,
                    min_width: float = 4.0) -> np.ndarray:
    """Mass matrix by exact summation or by integration over the mesh.

    Parameters
    ----------
    basis : BasisSet
    rule : {"exact", "integral"}
        ``"exact"`` is ``basis.mass_matrix``.  ``"integral"`` replaces each
        coarse-coarse entry by the integral of the hat product (diagonal
        (h_l + h_r)/3, neighbors h/6); atomistic and interface rows keep the
        exact sum, since there the hats are unit vectors.
    cell_volume : float
    min_width : float
        Coarse elements narrower than this trigger a warning: the integral
        rule is only accurate for H >> 1.
    """
    mass = mass_matrix(basis)
    if rule == "exact":
        return mass
    if rule != "integral":
        raise ValueError(f"unknown quadrature rule {rule!r}")
    coarse = np.array([r is Region.COARSE for r in basis.regions])
    if not coarse.any():
        return mass
    widths = np.concatenate([basis.left_width[coarse], basis.right_width[coarse]])
    widths = widths[widths > 0]
    if widths.size and widths.min() < min_width:
        warnings.warn(f"integral mass rule used with element width {widths.min():g}; "
                      "it is only accurate for wide elements", stacklevel=2)
    diag, off = _integral_entries(basis, cell_volume)
    out = mass.copy()
    idx = np.flatnonzero(coarse)
    out[idx, idx] = diag[idx]
    for i in idx:
        j = i + 1
        if j < basis.m and coarse[j]:
            out[i, j] = out[j, i] = off[i]
    return out
