"""One-dimensional atomistic chains: pair potentials, forces, energies and
the force-constant matrix of the linearized model.

Displacements are handled in two layouts.  *Full* vectors have one entry
per atom (clamped entries are zero); *free* vectors carry only the unclamped
degrees of freedom and are what the reduction machinery works with.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DomainError, SimulationBlowup

__all__ = [
    "LennardJones",
    "Harmonic",
    "PotentialKind",
    "LatticeModel",
    "uniform_chain",
    "pair_potential",
    "pair_second_derivative",
    "force",
    "force_free",
    "potential_energy",
    "bond_energies",
    "linearize",
    "effective_stiffness",
    "dispersion",
]


@dataclass(frozen=True)
class LennardJones:
    """V(r) = r**-12 - r**-6 (no prefactor, no cutoff)."""


@dataclass(frozen=True)
class Harmonic:
    """V(r) = 0.5 * k * (r - a0)**2."""

    spring_constant: float = 1.0
    rest_length: float = 1.0

    def __post_init__(self):
        if not self.spring_constant > 0:
            raise DomainError("spring_constant must be positive")


PotentialKind = Union[LennardJones, Harmonic]


def pair_potential(kind: PotentialKind, r):
    """Pair energy and its first derivative.

    Parameters
    ----------
    kind : LennardJones or Harmonic
    r : float or ndarray
        Pair separation(s), strictly positive.

    Returns
    -------
    energy, derivative : float or ndarray
    """
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise DomainError("pair separation must be positive")
    if isinstance(kind, LennardJones):
        inv6 = r ** -6
        energy = inv6 * inv6 - inv6
        derivative = (-12.0 * inv6 * inv6 + 6.0 * inv6) / r
    elif isinstance(kind, Harmonic):
        stretch = r - kind.rest_length
        energy = 0.5 * kind.spring_constant * stretch**2
        derivative = kind.spring_constant * stretch
    else:
        raise TypeError(f"unknown potential {kind!r}")
    if energy.ndim == 0:
        return float(energy), float(derivative)
    return energy, derivative


def pair_second_derivative(kind: PotentialKind, r):
    """V''(r), evaluated analytically."""
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise DomainError("pair separation must be positive")
    if isinstance(kind, LennardJones):
        out = 156.0 * r**-14 - 42.0 * r**-8
    elif isinstance(kind, Harmonic):
        out = np.full_like(r, kind.spring_constant)
    else:
        raise TypeError(f"unknown potential {kind!r}")
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class LatticeModel:
    """An atomistic chain with Dirichlet clamps.

    Attributes
    ----------
    n_atoms : int
    potential : LennardJones or Harmonic
    reference_positions : ndarray, shape (n_atoms,)
        Strictly increasing, in units of the lattice spacing.
    masses : ndarray, shape (n_atoms,)
    clamped : tuple of int
        Atoms held at zero displacement.
    interaction_range : int
        Number of neighbor shells that interact (1 = nearest neighbor).
    """

    n_atoms: int
    potential: PotentialKind
    reference_positions: np.ndarray
    masses: np.ndarray
    clamped: tuple = ()
    interaction_range: int = 1
    free: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        y = np.asarray(self.reference_positions, dtype=float)
        m = np.asarray(self.masses, dtype=float)
        if y.shape != (self.n_atoms,) or m.shape != (self.n_atoms,):
            raise ValueError("positions and masses must have length n_atoms")
        if self.n_atoms < 2:
            raise ValueError("a chain needs at least two atoms")
        if np.any(np.diff(y) <= 0):
            raise ValueError("reference positions must be strictly increasing")
        if np.any(m <= 0):
            raise ValueError("masses must be positive")
        clamped = tuple(sorted(set(int(i) for i in self.clamped)))
        if clamped and (clamped[0] < 0 or clamped[-1] >= self.n_atoms):
            raise ValueError("clamped atoms must be valid atom indices")
        if not 1 <= self.interaction_range < self.n_atoms:
            raise ValueError("interaction_range must be in [1, n_atoms)")
        y.setflags(write=False)
        m.setflags(write=False)
        free = np.setdiff1d(np.arange(self.n_atoms), clamped)
        free.setflags(write=False)
        object.__setattr__(self, "reference_positions", y)
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "clamped", clamped)
        object.__setattr__(self, "free", free)

    @property
    def n_free(self) -> int:
        return len(self.free)

    @property
    def spacing(self) -> float:
        """Mean nearest-neighbor spacing of the reference configuration."""
        y = self.reference_positions
        return float((y[-1] - y[0]) / (self.n_atoms - 1))

    def restrict(self, u):
        """Full vector -> free-DOF vector."""
        return np.asarray(u, dtype=float)[..., self.free]

    def embed(self, u_free):
        """Free-DOF vector -> full vector with zeros at the clamps."""
        u_free = np.asarray(u_free, dtype=float)
        out = np.zeros(u_free.shape[:-1] + (self.n_atoms,))
        out[..., self.free] = u_free
        return out

    def shells(self, u):
        """Yield ``(k, r, r0)``: shell index, current and reference pair
        separations for all pairs (i, i + k)."""
        y = self.reference_positions
        x = y + u
        for k in range(1, self.interaction_range + 1):
            yield k, x[k:] - x[:-k], y[k:] - y[:-k]


def uniform_chain(n_atoms: int, potential: PotentialKind | None = None,
                  spacing: float = 1.0, mass: float = 1.0,
                  clamp_ends: bool = True,
                  interaction_range: int = 1) -> LatticeModel:
    """Uniform chain, by default Lennard-Jones with both end atoms clamped."""
    if potential is None:
        potential = LennardJones()
    clamped = (0, n_atoms - 1) if clamp_ends else ()
    return LatticeModel(
        n_atoms=n_atoms,
        potential=potential,
        reference_positions=spacing * np.arange(n_atoms, dtype=float),
        masses=np.full(n_atoms, float(mass)),
        clamped=clamped,
        interaction_range=interaction_range,
    )


def _check_displacement(model: LatticeModel, u):
    u = np.asarray(u, dtype=float)
    if u.shape != (model.n_atoms,):
        raise ValueError(f"displacement must have shape ({model.n_atoms},)")
    if not np.all(np.isfinite(u)):
        raise SimulationBlowup("non-finite displacement")
    return u


def _separations(model, u):
    out = []
    for k, r, r0 in model.shells(u):
        if np.any(r <= 0):
            bad = int(np.argmax(r <= 0))
            raise SimulationBlowup(f"atoms {bad} and {bad + k} crossed")
        out.append((k, r, r0))
    return out


def force(model: LatticeModel, u) -> np.ndarray:
    """Total force on every atom (zero on clamped atoms).

    f = -grad of the total pair energy; each pair contributes +V'(r) to the
    left atom and -V'(r) to the right atom.
    """
    u = _check_displacement(model, u)
    f = np.zeros(model.n_atoms)
    for k, r, _ in _separations(model, u):
        _, dv = pair_potential(model.potential, r)
        f[:-k] += dv
        f[k:] -= dv
    if model.clamped:
        f[list(model.clamped)] = 0.0
    return f


def force_free(model: LatticeModel, u_free) -> np.ndarray:
    """:func:`force` in the free-DOF layout."""
    return force(model, model.embed(u_free))[model.free]


def potential_energy(model: LatticeModel, u) -> float:
    """Sum of pair energies relative to the reference configuration."""
    u = _check_displacement(model, u)
    total = 0.0
    for _, r, r0 in _separations(model, u):
        e, _ = pair_potential(model.potential, r)
        e0, _ = pair_potential(model.potential, r0)
        total += float(np.sum(e - e0))
    return total


def bond_energies(model: LatticeModel, u):
    """Local (excess) energy of every pair.

    The tangent at the reference separation is subtracted:
    ``V(r) - V(r0) - V'(r0) (r - r0)``.  For a nearest-neighbor chain clamped
    at both ends the subtracted terms telescope to zero, so these sum to
    :func:`potential_energy`, while staying local under the tension of a
    Lennard-Jones chain at unit spacing.

    Returns
    -------
    list of (k, energies) per neighbor shell; ``energies[i]`` belongs to the
    pair (i, i + k).
    """
    u = _check_displacement(model, u)
    out = []
    for k, r, r0 in _separations(model, u):
        e, _ = pair_potential(model.potential, r)
        e0, d0 = pair_potential(model.potential, r0)
        out.append((k, e - e0 - d0 * (r - r0)))
    return out


def linearize(model: LatticeModel, step: float = 1e-5) -> np.ndarray:
    """Force-constant matrix A = -df/du at u = 0 over the free DOFs.

    Harmonic chains are assembled analytically; other potentials use central
    differences of :func:`force` with the given step, then symmetrization.
    """
    n = model.n_free
    if isinstance(model.potential, Harmonic):
        full = np.zeros((model.n_atoms, model.n_atoms))
        for k, _, r0 in model.shells(np.zeros(model.n_atoms)):
            kk = pair_second_derivative(model.potential, r0)
            i = np.arange(model.n_atoms - k)
            np.add.at(full, (i, i), kk)
            np.add.at(full, (i + k, i + k), kk)
            np.add.at(full, (i, i + k), -kk)
            np.add.at(full, (i + k, i), -kk)
        a = full[np.ix_(model.free, model.free)]
    else:
        a = np.empty((n, n))
        e = np.zeros(n)
        for col in range(n):
            e[col] = step
            fplus = force_free(model, e)
            e[col] = -step
            fminus = force_free(model, e)
            e[col] = 0.0
            a[:, col] = -(fplus - fminus) / (2.0 * step)
    return 0.5 * (a + a.T)


def effective_stiffness(model: LatticeModel) -> float:
    """V''(a0) at the mean reference spacing."""
    return pair_second_derivative(model.potential, model.spacing)


def dispersion(model: LatticeModel, xi, stiffness: float | None = None,
               mass: float | None = None):
    """Nearest-neighbor acoustic branch, omega = 2 sqrt(k/m) |sin(xi/2)|.

    ``stiffness`` defaults to :func:`effective_stiffness` and ``mass`` to the
    mean atomic mass.
    """
    if stiffness is None:
        stiffness = effective_stiffness(model)
    if mass is None:
        mass = float(np.mean(model.masses))
    if stiffness <= 0:
        raise DomainError("effective stiffness must be positive")
    return 2.0 * np.sqrt(stiffness / mass) * np.abs(np.sin(0.5 * np.asarray(xi)))
