"""Coarse-grained molecular dynamics of 1D chains: Galerkin reductions,
exact memory-kernel equations, moment expansions and Krylov-enriched
extended Galerkin models."""

from .basis import (BasisSet, Region, StiffnessFamily, build_basis_from_nodes,
                    build_hybrid_basis, identity_basis, mass_matrix, stiffness_family)
from .dynamics import (IntegratorConfig, Trajectory, energy, modal_solution,
                       verlet_integrate, volterra_integrate)
from .errors import (AbortedTrajectory, CGMDError, ConfigError, DependentBasisError,
                     DomainError, EnrichmentEmptyError, PoleError, SimulationBlowup)
from .lattice import (Harmonic, LatticeModel, LennardJones, dispersion, force,
                      linearize, pair_potential, potential_energy, uniform_chain)
from .projection import (KernelSpectrum, ProjectorPair, RitzProjector, forcing_g,
                         fundamental_solutions, memory_kernel, orthogonal_projector,
                         qaq_spectrum, ritz_projector)
from .reduction import (EnrichedBasis, Pencil, ReducedSystem, ReductionKind,
                        conventional_galerkin, direct_expansion, extended_galerkin,
                        full_system, interface_nodes, krylov_enrich, stability_audit)

__all__ = [
    "BasisSet",
    "Region",
    "StiffnessFamily",
    "build_basis_from_nodes",
    "build_hybrid_basis",
    "identity_basis",
    "mass_matrix",
    "stiffness_family",
    "IntegratorConfig",
    "Trajectory",
    "energy",
    "modal_solution",
    "verlet_integrate",
    "volterra_integrate",
    "AbortedTrajectory",
    "CGMDError",
    "ConfigError",
    "DependentBasisError",
    "DomainError",
    "EnrichmentEmptyError",
    "PoleError",
    "SimulationBlowup",
    "Harmonic",
    "LatticeModel",
    "LennardJones",
    "dispersion",
    "force",
    "linearize",
    "pair_potential",
    "potential_energy",
    "uniform_chain",
    "KernelSpectrum",
    "ProjectorPair",
    "RitzProjector",
    "forcing_g",
    "fundamental_solutions",
    "memory_kernel",
    "orthogonal_projector",
    "qaq_spectrum",
    "ritz_projector",
    "EnrichedBasis",
    "Pencil",
    "ReducedSystem",
    "ReductionKind",
    "conventional_galerkin",
    "direct_expansion",
    "extended_galerkin",
    "full_system",
    "interface_nodes",
    "krylov_enrich",
    "stability_audit",
]

__version__ = "0.1.0"
