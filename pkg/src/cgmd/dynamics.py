"""Time integration of full and reduced second-order systems."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import AbortedTrajectory, SimulationBlowup
from .lattice import LatticeModel, bond_energies, pair_second_derivative
from .reduction import ReducedSystem, ReductionKind, full_system

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "verlet_integrate",
    "volterra_integrate",
    "atom_energies",
    "energy",
    "modal_solution",
]


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 0.01
    n_steps: int = 1000
    record_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_steps < 0:
            raise ValueError("n_steps must be non-negative")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    @classmethod
    def for_duration(cls, t_final: float, dt: float, record_every: int = 1):
        return cls(dt=dt, n_steps=int(round(t_final / dt)), record_every=record_every)


@dataclass
class Trajectory:
    """Recorded states.

    ``coords`` and ``velocities`` have shape (n_records, dim).  ``diagnostics``
    maps names (``E_total``, ``E_left``, ``E_right``) to arrays aligned with
    ``times``.
    """

    times: np.ndarray
    coords: np.ndarray
    velocities: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    system: ReducedSystem | None = None

    def __len__(self):
        return len(self.times)

    def displacements(self):
        """Reconstructed free-atom displacements, shape (n_records, n_free)."""
        if self.system is None:
            return self.coords
        return self.system.reconstruct(self.coords)

    def atom_velocities(self):
        if self.system is None:
            return self.velocities
        return self.system.reconstruct(self.velocities)

    def final_state(self):
        return self.coords[-1].copy(), self.velocities[-1].copy()


def _as_system(system):
    if isinstance(system, LatticeModel):
        return full_system(system)
    return system


class _Recorder:
    def __init__(self, system, n_records, dim, diagnose):
        self.times = np.empty(n_records)
        self.coords = np.empty((n_records, dim))
        self.velocities = np.empty((n_records, dim))
        self.diagnose = diagnose
        self.diag = {}
        self.count = 0
        self.system = system

    def record(self, t, x, v):
        i = self.count
        self.times[i] = t
        self.coords[i] = x
        self.velocities[i] = v
        if self.diagnose is not None:
            for name, val in self.diagnose(x, v).items():
                self.diag.setdefault(name, np.full(len(self.times), np.nan))[i] = val
        self.count += 1

    def trajectory(self):
        c = self.count
        return Trajectory(
            times=self.times[:c].copy(),
            coords=self.coords[:c].copy(),
            velocities=self.velocities[:c].copy(),
            diagnostics={k: v[:c].copy() for k, v in self.diag.items()},
            system=self.system,
        )


def _diagnostics_fn(system, split_atom):
    if split_atom is None and system.model is None and system.stiffness is None:
        return None

    def diagnose(x, v):
        total, regions = energy(system, x, v, split_atom=split_atom)
        out = {"E_total": total}
        for name, val in regions.items():
            out[f"E_{name}"] = val
        return out

    return diagnose


def verlet_integrate(system, x0, v0, config: IntegratorConfig,
                     split_atom: int | None = None, diagnostics: bool = True,
                     t0: float = 0.0) -> Trajectory:
    """Velocity Verlet for ``mass @ x'' = force(x)``.

    Parameters
    ----------
    system : ReducedSystem or LatticeModel
        A lattice model is integrated as the full atomistic system in the
        free-DOF layout.
    x0, v0 : ndarray
        Initial coordinates and velocities.
    config : IntegratorConfig
    split_atom : int, optional
        Atoms with index >= split_atom count as the right region in the
        energy diagnostics.
    diagnostics : bool
        Record energies at every recorded step.

    Raises
    ------
    AbortedTrajectory
        When a force evaluation fails; carries the states recorded so far
        plus the last valid state.
    """
    system = _as_system(system)
    x = np.array(x0, dtype=float)
    v = np.array(v0, dtype=float)
    if x.shape != (system.dim,) or v.shape != (system.dim,):
        raise ValueError(f"initial state must have shape ({system.dim},)")
    dt = config.dt
    n_records = config.n_steps // config.record_every + 1
    if config.n_steps % config.record_every:
        n_records += 1
    diagnose = _diagnostics_fn(system, split_atom) if diagnostics else None
    rec = _Recorder(system, n_records, system.dim, diagnose)
    rec.record(t0, x, v)
    last_recorded = 0
    step = 0
    try:
        a = system.solve_mass(system.force(x))
        for step in range(1, config.n_steps + 1):
            v_half = v + 0.5 * dt * a
            x_new = x + dt * v_half
            a_new = system.solve_mass(system.force(x_new))
            v_new = v_half + 0.5 * dt * a_new
            if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(v_new))):
                raise SimulationBlowup("non-finite state")
            x, v, a = x_new, v_new, a_new
            if step % config.record_every == 0 or step == config.n_steps:
                rec.record(t0 + step * dt, x, v)
                last_recorded = step
    except SimulationBlowup as exc:
        if last_recorded != step - 1 and step > 0:
            rec.record(t0 + (step - 1) * dt, x, v)
        raise AbortedTrajectory(f"integration aborted at step {step}: {exc}",
                                rec.trajectory()) from exc
    return rec.trajectory()


def volterra_integrate(mass, stiffness, kernel, forcing, q0, v0,
                       config: IntegratorConfig) -> Trajectory:
    """Integrate ``M q'' = -K q + int_0^t Theta(t - s) q(s) ds + G(t)``.

    The memory integral uses the composite trapezoidal rule on the step
    grid.  Velocity Verlet places q_{n+1} before the acceleration at
    t_{n+1} is needed, so the trapezoid endpoint Theta(0) q_{n+1} is
    explicit and the scheme is second order without iteration.  The whole
    history is kept: cost O(n_steps^2 m^2).

    Parameters
    ----------
    mass, stiffness : ndarray, shape (m, m)
    kernel : callable or None
        ``kernel(times) -> (len(times), m, m)``; e.g.
        ``functools.partial(projection.memory_kernel, spectrum)``.
    forcing : callable or None
        ``forcing(times) -> (len(times), m)``.
    q0, v0 : ndarray, shape (m,)
    """
    mass = np.asarray(mass, dtype=float)
    stiffness = np.asarray(stiffness, dtype=float)
    m = mass.shape[0]
    dt = config.dt
    N = config.n_steps
    times = dt * np.arange(N + 1)
    mfac = scipy.linalg.cho_factor(mass)
    if kernel is not None:
        theta = np.asarray(kernel(times), dtype=float)
        # rev[:, k, :] = Theta(t_{N-k}); a trailing slice is the
        # reversed history needed at step n, reshaped as a view.
        rev = np.ascontiguousarray(theta[::-1].transpose(1, 0, 2))
        theta0 = theta[0]
    else:
        rev = None
    g = np.zeros((N + 1, m)) if forcing is None else np.asarray(forcing(times), dtype=float)

    hist = np.empty((N + 1, m))
    hist[0] = q0

    def accel(n):
        rhs = -stiffness @ hist[n] + g[n]
        if rev is not None and n > 0:
            block = rev[:, N - n:, :].reshape(m, (n + 1) * m)
            mem = block @ hist[:n + 1].ravel()
            mem -= 0.5 * (theta[n] @ hist[0] + theta0 @ hist[n])
            rhs = rhs + dt * mem
        return scipy.linalg.cho_solve(mfac, rhs)

    n_records = N // config.record_every + 1 + (1 if N % config.record_every else 0)
    rec = _Recorder(None, n_records, m, None)
    v = np.array(v0, dtype=float)
    rec.record(0.0, hist[0], v)
    a = accel(0)
    for n in range(N):
        v_half = v + 0.5 * dt * a
        hist[n + 1] = hist[n] + dt * v_half
        a = accel(n + 1)
        v = v_half + 0.5 * dt * a
        if (n + 1) % config.record_every == 0 or n + 1 == N:
            rec.record(times[n + 1], hist[n + 1], v)
    return rec.trajectory()


def atom_energies(model: LatticeModel, u_full, v_full, linearized: bool = False):
    """Per-atom energy: kinetic plus half of every incident pair energy.

    ``linearized`` replaces each pair energy by 0.5 V''(r0) (du)^2, the
    bond form of 0.5 u.A u.
    """
    u_full = np.asarray(u_full, dtype=float)
    v_full = np.asarray(v_full, dtype=float)
    e = 0.5 * model.masses * v_full**2
    if linearized:
        y = model.reference_positions
        for k in range(1, model.interaction_range + 1):
            r0 = y[k:] - y[:-k]
            kk = pair_second_derivative(model.potential, r0)
            du = u_full[k:] - u_full[:-k]
            eb = 0.5 * kk * du * du
            e[:-k] += 0.5 * eb
            e[k:] += 0.5 * eb
    else:
        for k, eb in bond_energies(model, u_full):
            e[:-k] += 0.5 * eb
            e[k:] += 0.5 * eb
    return e


def energy(system, coords, velocities, split_atom: int | None = None):
    """Total energy and its split between left and right regions.

    Linear systems report the reduced quadratic 0.5 v.Mv + 0.5 c.Kc as the
    total; nonlinear ones the pair-sum energy of the reconstructed state.
    Region energies always come from the reconstructed atoms with each bond
    split half-and-half between its endpoints (atoms >= ``split_atom`` are
    "right").

    Returns
    -------
    total : float
    regions : dict
        ``{"left": ..., "right": ...}`` if ``split_atom`` is given, else
        empty.
    """
    system = _as_system(system)
    coords = np.asarray(coords, dtype=float)
    velocities = np.asarray(velocities, dtype=float)
    model = system.model
    regions = {}
    per_atom = None
    if model is not None and system.kind is not ReductionKind.DIRECT:
        u = model.embed(system.reconstruct(coords))
        vv = model.embed(system.reconstruct(velocities))
        per_atom = atom_energies(model, u, vv, linearized=system.linear)
    if system.linear:
        total = system.reduced_energy(coords, velocities)
    else:
        total = float(np.sum(per_atom))
    if split_atom is not None and per_atom is not None:
        right = float(np.sum(per_atom[split_atom:]))
        left = float(np.sum(per_atom[:split_atom]))
        regions = {"left": left, "right": right}
    return total, regions


def modal_solution(mass, stiffness, x0, v0, times):
    """Exact solution of ``M x'' = -K x`` (K symmetric PSD) by modes.

    Returns
    -------
    x, v : ndarray, shape (len(times), dim)
    """
    w2, vecs = scipy.linalg.eigh(stiffness, mass)
    w2 = np.clip(w2, 0.0, None)
    w = np.sqrt(w2)
    a = vecs.T @ (mass @ np.asarray(x0, dtype=float))
    b = vecs.T @ (mass @ np.asarray(v0, dtype=float))
    t = np.asarray(times, dtype=float)[:, None]
    wt = t * w
    safe = np.where(w > 0, w, 1.0)
    sinc = np.where(w > 0, np.sin(wt) / safe, t)
    modal_x = np.cos(wt) * a + sinc * b
    modal_v = -w * np.sin(wt) * a + np.cos(wt) * b
    return modal_x @ vecs.T, modal_v @ vecs.T
