"""Config-driven construction of models and reductions, and the numerical
experiments run on them: wave-packet reflection at the coarse/atomistic
interface, error norms against a reference, memory-kernel traces and
pencil stability.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.interpolate

from .basis import (BasisSet, build_basis_from_nodes, build_hybrid_basis, identity_basis,
                    mass_matrix, stiffness_family)
from .config import ExperimentConfig
from .dynamics import IntegratorConfig, Trajectory, verlet_integrate
from .errors import AbortedTrajectory, ConfigError
from .lattice import (Harmonic, LatticeModel, LennardJones, dispersion, effective_stiffness,
                      linearize, uniform_chain)
from .projection import ProjectorPair, memory_kernel_diagonal, orthogonal_projector, qaq_spectrum
from .reduction import (EnrichedBasis, Pencil, ReducedSystem, conventional_galerkin,
                        direct_expansion, direct_expansion_system, extended_galerkin,
                        full_system, interface_nodes, krylov_enrich, stability_audit)

__all__ = [
    "ReflectionReport",
    "build_model",
    "build_basis",
    "select_enriched_nodes",
    "build_system",
    "initial_state",
    "packet_modes",
    "build_wave_packet",
    "first_transit_time",
    "SimulationResult",
    "run_simulation",
    "run_reflection_experiment",
    "error_norms",
    "theorem_terms",
    "theorem_constant",
    "kernel_report",
    "stability_report",
]

INSTABILITY_GROWTH = 10.0


# -- construction ------------------------------------------------------------

def build_model(cfg: ExperimentConfig) -> LatticeModel:
    spec = cfg.model
    if spec["potential"] == "harmonic":
        pot = Harmonic(spring_constant=spec["spring_constant"], rest_length=spec["rest_length"])
    else:
        pot = LennardJones()
    n = spec["n_atoms"]
    model = uniform_chain(n, pot, spacing=spec["spacing"], clamp_ends=True,
                          interaction_range=spec["interaction_range"])
    if spec["clamped"] != "ends":
        model = LatticeModel(n_atoms=n, potential=pot,
                             reference_positions=model.reference_positions,
                             masses=model.masses, clamped=tuple(spec["clamped"]),
                             interaction_range=spec["interaction_range"])
    return model


def build_basis(cfg: ExperimentConfig, model: LatticeModel) -> BasisSet:
    spec = cfg.basis
    if spec["kind"] == "identity":
        return identity_basis(model)
    if spec["kind"] == "nodes":
        return build_basis_from_nodes(model, spec["nodes"], spec["atomistic_start"])
    return build_hybrid_basis(model, spec["coarse_mesh_size"], spec["atomistic_start"])


def select_enriched_nodes(cfg: ExperimentConfig, basis: BasisSet) -> tuple:
    """Node set J: explicit, or the configured counts on each side of the
    interface (every node when the basis has no interface)."""
    red = cfg.reduction
    if red["enriched_nodes"] is not None:
        nodes = tuple(red["enriched_nodes"])
        if any(j >= basis.m for j in nodes):
            raise ConfigError("reduction.enriched_nodes: node index out of range")
        return nodes
    if basis.interface_index is None:
        return tuple(range(basis.m))
    try:
        return interface_nodes(basis, red["n_coarse_enriched"], red["n_atomistic_enriched"])
    except ValueError as exc:
        raise ConfigError(f"reduction.n_coarse_enriched / n_atomistic_enriched: {exc}") from exc


def build_system(cfg: ExperimentConfig, model: LatticeModel, basis: BasisSet,
                 A=None, krylov_depth: int | None = None):
    """Reduced system for the configured reduction.

    Returns
    -------
    system : ReducedSystem
    enriched : EnrichedBasis or None
    """
    red = cfg.reduction
    kind = red["kind"]
    linear = red["linear"]
    need_a = linear or kind == "direct"
    if need_a and A is None:
        A = linearize(model)
    enriched = None
    if kind == "full":
        system = full_system(model, linear=linear, A=A if linear else None)
    elif kind == "conventional":
        system = conventional_galerkin(basis, model, linear=linear, A=A if linear else None)
    elif kind == "direct":
        system = direct_expansion_system(basis, A, red["depth"])
    else:
        L = red["krylov_depth"] if krylov_depth is None else krylov_depth
        if L == 0:
            system = conventional_galerkin(basis, model, linear=linear, A=A if linear else None)
        else:
            nodes = select_enriched_nodes(cfg, basis)
            enriched = krylov_enrich(basis, model, nodes, L, eps=red["fd_step"])
            system = extended_galerkin(basis, enriched, model, linear=linear,
                                       A=A if linear else None)
    return system, enriched


def packet_modes(first: float = 0.5, step: float = 0.02, count: int = 21) -> np.ndarray:
    return first + step * np.arange(count)


def build_wave_packet(n_atoms: int, center: float = 640.0, width: float = 20.0,
                      amplitude: float = 0.00025, modes=None, omega=None):
    """Gaussian-windowed superposition of left-moving plane waves.

    u_j = F(j) sum_k cos(xi_k j),  v_j = -F(j) sum_k omega(xi_k) sin(xi_k j),
    F(x) = amplitude exp(-(x - center)^2 / (2 width^2)).

    Parameters
    ----------
    n_atoms : int
    center, width, amplitude : float
    modes : array_like, optional
        Wavenumbers in (0, pi); defaults to 0.5 + 0.02 k, k = 0..20.
    omega : callable, optional
        Dispersion relation; defaults to the unit-stiffness branch
        2 sin(xi / 2).  Pass the model's relation for a packet that
        actually travels in one direction.

    Returns
    -------
    u0, v0 : ndarray, shape (n_atoms,)
        Full-layout vectors (indexed by atom).
    """
    xi = packet_modes() if modes is None else np.asarray(modes, dtype=float)
    if np.any((xi <= 0) | (xi >= np.pi)):
        raise ValueError("wavenumbers must lie in (0, pi)")
    w = 2.0 * np.sin(0.5 * xi) if omega is None else np.asarray(omega(xi), dtype=float)
    x = np.arange(n_atoms, dtype=float)
    env = amplitude * np.exp(-(x - center) ** 2 / (2.0 * width**2))
    edge = amplitude * np.exp(-np.minimum(center, n_atoms - 1 - center) ** 2 / (2.0 * width**2))
    if amplitude and (center < 0 or center > n_atoms - 1 or abs(edge) > 1e-3 * abs(amplitude)):
        warnings.warn("wave packet has significant amplitude at the chain ends", stacklevel=2)
    phase = np.outer(x, xi)
    u0 = env * np.cos(phase).sum(axis=1)
    v0 = -env * (np.sin(phase) * w).sum(axis=1)
    return u0, v0


def first_transit_time(model: LatticeModel, center: float, width: float, interface: float,
                       modes) -> float:
    """Time for the packet's trailing edge (center + 4 width) to pass the
    interface at the slowest group velocity of its modes."""
    xi = np.asarray(modes, dtype=float)
    c = np.sqrt(effective_stiffness(model) / float(np.mean(model.masses)))
    v_min = float(np.min(c * np.cos(0.5 * xi)))
    return max(center + 4.0 * width - interface, 0.0) / v_min


def initial_state(cfg: ExperimentConfig, model: LatticeModel, seed: int | None = None):
    """Full-layout (u0, v0) for the configured initial condition."""
    init = cfg.initial
    n = model.n_atoms
    kind = init["kind"]
    if kind == "wave_packet":
        modes = packet_modes(**init["modes"])
        omega = (lambda xi: dispersion(model, xi)) if init["dispersion"] == "model" else None
        u0, v0 = build_wave_packet(n, init["center"], init["width"], init["amplitude"],
                                   modes, omega)
    elif kind == "gaussian":
        x = np.arange(n, dtype=float)
        u0 = init["amplitude"] * np.exp(-(x - init["center"]) ** 2 / (2.0 * init["width"] ** 2))
        v0 = np.zeros(n)
    elif kind == "explicit":
        u0 = np.array(init["u0"], dtype=float)
        v0 = np.array(init["v0"], dtype=float)
    else:
        rng = np.random.default_rng(seed)
        u0 = init["scale"] * rng.standard_normal(n)
        v0 = init["scale"] * rng.standard_normal(n)
    u0[list(model.clamped)] = 0.0
    v0[list(model.clamped)] = 0.0
    return u0, v0


# -- runs --------------------------------------------------------------------

@dataclass
class SimulationResult:
    trajectory: Trajectory
    system: ReducedSystem
    model: LatticeModel
    basis: BasisSet
    enriched: EnrichedBasis | None
    split_atom: int | None
    aborted: str | None = None


def _split_atom(cfg, basis):
    if cfg.report["split_atom"] is not None:
        return cfg.report["split_atom"]
    return basis.atomistic_start if basis.atomistic_start > 0 else None


def _integrator(cfg):
    spec = cfg.integrator
    dt = spec["dt"]
    n_steps = int(round(spec["t_final"] / dt))
    return IntegratorConfig(dt=dt, n_steps=n_steps, record_every=spec["record_every"])


def run_simulation(cfg: ExperimentConfig, seed: int | None = None,
                   krylov_depth: int | None = None) -> SimulationResult:
    """Build everything from ``cfg`` and integrate with velocity Verlet.

    An aborted integration is returned with the partial trajectory and the
    reason in ``aborted`` instead of raising.
    """
    model = build_model(cfg)
    basis = build_basis(cfg, model)
    system, enriched = build_system(cfg, model, basis, krylov_depth=krylov_depth)
    u0, v0 = initial_state(cfg, model, seed)
    c0 = system.project(model.restrict(u0))
    cv0 = system.project(model.restrict(v0))
    split = _split_atom(cfg, basis)
    aborted = None
    try:
        traj = verlet_integrate(system, c0, cv0, _integrator(cfg), split_atom=split)
    except AbortedTrajectory as exc:
        traj, aborted = exc.trajectory, str(exc)
    return SimulationResult(traj, system, model, basis, enriched, split, aborted)


@dataclass
class ReflectionReport:
    """Energy bookkeeping of one reflection run.

    ``reflection_fraction`` is E_atomistic(t_final) / E_initial, the share of
    the packet energy still (or again) on the atomistic side after the packet
    has had time to cross the interface once.
    """

    kind: str
    krylov_depth: int
    dim: int
    E_initial: float
    t_final: float
    reflection_fraction: float
    transmission_fraction: float
    unstable: bool
    times: np.ndarray = field(repr=False)
    E_atomistic: np.ndarray = field(repr=False)
    E_coarse: np.ndarray = field(repr=False)
    E_total: np.ndarray = field(repr=False)
    message: str = ""

    def summary(self) -> dict:
        return {
            "kind": self.kind,
            "krylov_depth": self.krylov_depth,
            "dim": self.dim,
            "E_initial": self.E_initial,
            "t_final": self.t_final,
            "reflection_fraction": self.reflection_fraction,
            "transmission_fraction": self.transmission_fraction,
            "unstable": self.unstable,
            "metric": "E_atomistic(t_final) / E_initial; atoms >= split atom are atomistic",
            "message": self.message,
        }


def _report_time(cfg, model, split):
    t_int = cfg.integrator["t_final"]
    spec = cfg.report["t_final"]
    if spec != "auto":
        return float(spec)
    init = cfg.initial
    if init["kind"] != "wave_packet" or split is None:
        return t_int
    t = first_transit_time(model, init["center"], init["width"], split,
                           packet_modes(**init["modes"]))
    return min(t, t_int)


def run_reflection_experiment(cfg: ExperimentConfig, seed: int | None = None,
                              krylov_depth: int | None = None):
    """Integrate the configured reduction from a packet on the atomistic
    side and measure how much energy stays there.

    Returns
    -------
    report : ReflectionReport
    result : SimulationResult
    """
    result = run_simulation(cfg, seed=seed, krylov_depth=krylov_depth)
    split = result.split_atom
    if split is None:
        raise ConfigError("reflection needs a region split (report.split_atom or an interface)")
    traj = result.trajectory
    d = traj.diagnostics
    e_total = d["E_total"]
    e0 = float(e_total[0])
    t_final = _report_time(cfg, result.model, split)
    unstable = result.aborted is not None
    message = result.aborted or ""
    if e0 > 0 and np.nanmax(np.abs(e_total)) > INSTABILITY_GROWTH * e0:
        unstable = True
        message = message or "energy grew by more than a factor of ten"
    if traj.times[-1] < t_final - 1e-9:
        unstable = True
        message = message or "trajectory ended before t_final"
    i = int(np.argmin(np.abs(traj.times - t_final)))
    refl = float(d["E_right"][i] / e0) if e0 > 0 else 0.0
    trans = float(d["E_left"][i] / e0) if e0 > 0 else 0.0
    depth = result.enriched.depth if result.enriched is not None else 0
    report = ReflectionReport(
        kind=result.system.kind.value,
        krylov_depth=depth,
        dim=result.system.dim,
        E_initial=e0,
        t_final=float(traj.times[i]),
        reflection_fraction=refl,
        transmission_fraction=trans,
        unstable=unstable,
        times=traj.times,
        E_atomistic=d["E_right"],
        E_coarse=d["E_left"],
        E_total=e_total,
        message=message,
    )
    return report, result


# -- error norms -------------------------------------------------------------

def _times_and_values(obj):
    if isinstance(obj, Trajectory):
        return obj.times, obj.displacements()
    times, values = obj
    return np.asarray(times, dtype=float), np.asarray(values, dtype=float)


def error_norms(trajectory, reference):
    """L-infinity and L2 in time of the l2 displacement error.

    Parameters
    ----------
    trajectory, reference : Trajectory or (times, displacements)
        Displacement arrays have shape (n_times, n).  The reference is
        linearly interpolated onto the trajectory's times if the grids
        differ.

    Returns
    -------
    linf : float
        max_t ||u_hat(t) - u(t)||.
    l2 : float
        (int_0^T ||u_hat - u||^2 dt)^(1/2), trapezoidal in t.
    """
    t, u_hat = _times_and_values(trajectory)
    tr, u = _times_and_values(reference)
    if u_hat.shape[1:] != u.shape[1:]:
        raise ValueError("trajectory and reference have different dimensions")
    if t.shape != tr.shape or not np.array_equal(t, tr):
        if t[0] < tr[0] - 1e-12 or t[-1] > tr[-1] + 1e-12:
            raise ValueError("reference does not cover the trajectory's time span")
        u = scipy.interpolate.interp1d(tr, u, axis=0)(t)
    err = np.linalg.norm(u_hat - u, axis=1)
    linf = float(np.max(err)) if err.size else 0.0
    l2 = float(np.sqrt(np.trapezoid(err**2, t))) if len(t) > 1 else 0.0
    return linf, l2


def theorem_terms(pair: ProjectorPair, times, u, v):
    """(||Qu||_Linf, sqrt(T) ||Qv||_L2) of a reference solution."""
    times = np.asarray(times, dtype=float)
    qu = np.linalg.norm(np.asarray(u) @ pair.Q.T, axis=1)
    qv = np.linalg.norm(np.asarray(v) @ pair.Q.T, axis=1)
    T = times[-1] - times[0]
    return float(qu.max()), float(np.sqrt(T) * np.sqrt(np.trapezoid(qv**2, times)))


def theorem_constant(linf_error: float, terms) -> float:
    """Smallest C with linf_error <= C (||Qu||_Linf + sqrt(T) ||Qv||_L2)."""
    bound = terms[0] + terms[1]
    if bound == 0:
        return 0.0 if linf_error == 0 else np.inf
    return linf_error / bound


# -- kernel and stability reports --------------------------------------------

def kernel_report(cfg: ExperimentConfig):
    """Diagonal memory-kernel traces for nodes around the interface.

    Returns
    -------
    times : ndarray
    nodes : ndarray of int
        Basis column indices.
    theta : ndarray, shape (len(times), len(nodes))
    basis : BasisSet
    """
    model = build_model(cfg)
    basis = build_basis(cfg, model)
    A = linearize(model)
    spec = qaq_spectrum(A, orthogonal_projector(basis))
    kc = cfg.kernel
    iface = basis.interface_index
    center = iface if iface is not None else basis.m // 2
    nodes = np.arange(max(center - kc["nodes_before"], 0),
                      min(center + kc["nodes_after"] + 1, basis.m))
    times = kc["dt"] * np.arange(int(round(kc["t_max"] / kc["dt"])) + 1)
    theta = memory_kernel_diagonal(spec, times, nodes)
    return times, nodes, theta, basis


def _audit_dict(pencil: Pencil, **extra):
    ev, stable = stability_audit(pencil)
    out = dict(extra)
    out["eigenvalues"] = [[float(z.real), float(z.imag)] for z in ev]
    out["stable"] = stable
    return out


def stability_report(cfg: ExperimentConfig) -> dict:
    """Eigenvalues and stability of the direct-expansion, conventional and
    extended Galerkin pencils of the configured (linearized) setup."""
    model = build_model(cfg)
    basis = build_basis(cfg, model)
    A = linearize(model)
    depth = cfg.stability["direct_depth"]
    L = cfg.stability["krylov_depth"]
    family = stiffness_family(basis, A, depth + 1)
    direct = direct_expansion(family, depth)
    conv = Pencil(M=mass_matrix(basis), K=family[1])
    nodes = select_enriched_nodes(cfg, basis)
    enriched = krylov_enrich(basis, model, nodes, L, eps=cfg.reduction["fd_step"], A=A)
    ext = extended_galerkin(basis, enriched, model, linear=True, A=A)
    return {
        "name": cfg.name,
        "basis_size": basis.m,
        "direct": _audit_dict(direct, depth=depth),
        "conventional": _audit_dict(conv),
        "extended": _audit_dict(Pencil(M=ext.mass, K=ext.stiffness), krylov_depth=L,
                                enriched_nodes=list(nodes), enrichment_size=enriched.k),
    }
