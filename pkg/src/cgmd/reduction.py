"""Reduced second-order systems.

Three routes are provided:

* conventional Galerkin projection onto Range(Phi);
* the truncated direct moment expansion (a non-variational pencil that can
  be unstable, see :func:`stability_audit`);
* the extended Galerkin method, which enlarges the space with Krylov
  vectors A^l phi_j of selected interface nodes and projects again, so the
  reduced model stays variational.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from .basis import BasisSet, Region, StiffnessFamily, mass_matrix, stiffness_family
from .errors import DependentBasisError, EnrichmentEmptyError, PoleError
from .lattice import LatticeModel, force_free, linearize

__all__ = [
    "ReductionKind",
    "ReducedSystem",
    "Pencil",
    "EnrichedBasis",
    "full_system",
    "conventional_galerkin",
    "direct_expansion",
    "direct_expansion_system",
    "stability_audit",
    "interface_nodes",
    "krylov_enrich",
    "extended_galerkin",
    "TildeBlocks",
    "tilde_blocks",
    "tilde_from_family",
    "rational_kernel",
    "rational_kernel_time",
]


class ReductionKind(enum.Enum):
    FULL = "full"
    CONVENTIONAL = "conventional"
    DIRECT = "direct"
    EXTENDED = "extended"


@dataclass(frozen=True, eq=False)
class ReducedSystem:
    """A second-order system ``mass @ c'' = force(c)``.

    Attributes
    ----------
    mass : ndarray, shape (d, d)
    reconstruction : ndarray, shape (n_free, d) or None
        Maps coordinates to free-atom displacements; None means identity.
    kind : ReductionKind
    blocks : tuple of int
        Sizes of the coordinate blocks (q, then enrichment/moment blocks).
    stiffness : ndarray or None
        Linear stiffness; when ``linear`` is true the force is -stiffness @ c.
    model : LatticeModel or None
        Used to sample atomistic forces when the system is nonlinear.
    linear : bool
    depth : int
        Moment depth (direct) or Krylov depth L (extended); 0 otherwise.
    lift : ndarray or None
        Maps free-atom displacements to coordinates; None means the
        orthogonal (least squares) projection onto the reconstruction.
    """

    mass: np.ndarray
    reconstruction: np.ndarray | None
    kind: ReductionKind
    blocks: tuple
    stiffness: np.ndarray | None = None
    model: LatticeModel | None = None
    linear: bool = True
    depth: int = 0
    lift: np.ndarray | None = None
    _diag_mass: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.linear and self.stiffness is None:
            raise ValueError("a linear system needs a stiffness matrix")
        if not self.linear and self.model is None:
            raise ValueError("a nonlinear system needs a lattice model")
        m = self.mass
        if np.count_nonzero(m - np.diag(np.diag(m))) == 0:
            object.__setattr__(self, "_diag_mass", np.diag(m).copy())

    @property
    def dim(self) -> int:
        return self.mass.shape[0]

    @cached_property
    def _mass_factor(self):
        return scipy.linalg.cho_factor(self.mass)

    def solve_mass(self, rhs):
        if self._diag_mass is not None:
            return rhs / self._diag_mass
        return scipy.linalg.cho_solve(self._mass_factor, rhs)

    def reconstruct(self, coords):
        """Free-atom displacements for coordinates (last axis)."""
        coords = np.asarray(coords, dtype=float)
        if self.reconstruction is None:
            return coords
        return coords @ self.reconstruction.T

    def force(self, coords):
        if self.linear:
            return -(self.stiffness @ coords)
        u = self.reconstruct(coords)
        f = force_free(self.model, u)
        if self.reconstruction is None:
            return f
        return self.reconstruction.T @ f

    def project(self, u_free):
        """Coordinates of an atomistic state (initial-data map)."""
        u_free = np.asarray(u_free, dtype=float)
        if self.lift is not None:
            return self.lift @ u_free
        if self.reconstruction is None:
            return u_free.copy()
        r = self.reconstruction
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(r.T @ r), r.T @ u_free)

    def reduced_energy(self, coords, velocities) -> float:
        """0.5 v.M v + 0.5 c.K c for linear systems."""
        if self.stiffness is None:
            raise ValueError("reduced quadratic energy needs a stiffness")
        k = 0.5 * (self.stiffness + self.stiffness.T)
        return float(0.5 * velocities @ self.mass @ velocities + 0.5 * coords @ k @ coords)


@dataclass(frozen=True, eq=False)
class Pencil:
    """Generalized mass and stiffness (M_tilde, K_tilde)."""

    M: np.ndarray
    K: np.ndarray


@dataclass(frozen=True, eq=False)
class EnrichedBasis:
    """Orthonormal enrichment Psi with Psi^T Phi = 0.

    Attributes
    ----------
    psi : ndarray, shape (n_free, k)
    selected_nodes : tuple of int
        Basis columns J whose Krylov spaces were added.
    depth : int
        Krylov depth L.
    halo : ndarray of int
        Atom indices covered by the supports of all A^l phi_j, l <= L.
    dropped : int
        Candidates discarded as numerically dependent.
    """

    psi: np.ndarray
    selected_nodes: tuple
    depth: int
    halo: np.ndarray
    dropped: int = 0

    @property
    def k(self) -> int:
        return self.psi.shape[1]


def _check_unit_masses(model):
    if model is not None and not np.allclose(model.masses, 1.0):
        raise ValueError("reductions assume unit atomic masses")


def full_system(model: LatticeModel, linear: bool = False, A=None) -> ReducedSystem:
    """The atomistic model itself as a :class:`ReducedSystem` (Phi = I)."""
    stiffness = None
    if linear:
        stiffness = linearize(model) if A is None else np.asarray(A, float)
    return ReducedSystem(
        mass=np.diag(model.masses[model.free]),
        reconstruction=None,
        kind=ReductionKind.FULL,
        blocks=(model.n_free,),
        stiffness=stiffness,
        model=model,
        linear=linear,
    )


def conventional_galerkin(basis: BasisSet, model: LatticeModel | None = None,
                          linear: bool = False, A=None) -> ReducedSystem:
    """M q'' = Phi^T f(Phi q), or M q'' = -K q with K = Phi^T A Phi."""
    _check_unit_masses(model)
    phi = basis.phi
    stiffness = None
    if linear or A is not None:
        if A is None:
            A = linearize(model)
        stiffness = phi.T @ A @ phi
        stiffness = 0.5 * (stiffness + stiffness.T)
    return ReducedSystem(
        mass=mass_matrix(basis),
        reconstruction=phi,
        kind=ReductionKind.CONVENTIONAL,
        blocks=(basis.m,),
        stiffness=stiffness,
        model=model,
        linear=linear,
    )


def direct_expansion(family: StiffnessFamily, depth: int) -> Pencil:
    """Truncated moment hierarchy in the variables (q, xi_0[, xi_1]).

    depth 1 drops xi_1 from the xi_0 equation; depth 2 keeps xi_1 and drops
    the next moment.
    """
    if depth not in (1, 2):
        raise ValueError("depth must be 1 or 2")
    if family.lmax < depth + 1:
        raise ValueError(f"depth {depth} needs K_0..K_{depth + 1}")
    k0, k1, k2 = family[0], family[1], family[2]
    m = k0.shape[0]
    eye = np.eye(m)
    zero = np.zeros((m, m))
    k1_k0inv = np.linalg.solve(k0.T, k1.T).T      # K1 K0^-1
    k2_k0inv = np.linalg.solve(k0.T, k2.T).T
    if depth == 1:
        M = scipy.linalg.block_diag(k0, eye)
        K = np.block([[k1, eye],
                      [k2 - k1_k0inv @ k1, -k1_k0inv]])
    else:
        k3 = family[3]
        M = scipy.linalg.block_diag(k0, eye, eye)
        K = np.block([[k1, eye, zero],
                      [k2 - k1_k0inv @ k1, -k1_k0inv, eye],
                      [k3 - k2_k0inv @ k1, -k2_k0inv, k1_k0inv]])
    return Pencil(M=M, K=K)


def direct_expansion_system(basis: BasisSet, A, depth: int) -> ReducedSystem:
    """Direct-expansion pencil packaged for time integration.

    Only the q block reconstructs displacements; the moment variables start
    from xi_0 = Phi^T A Q u and xi_1 = Phi^T A^2 Q u.
    """
    A = np.asarray(A, dtype=float)
    family = stiffness_family(basis, A, depth + 1)
    pencil = direct_expansion(family, depth)
    phi = basis.phi
    m = basis.m
    n = phi.shape[0]
    to_q = scipy.linalg.cho_solve(scipy.linalg.cho_factor(family[0]), phi.T)
    q_proj = np.eye(n) - phi @ to_q
    rows = [to_q, phi.T @ A @ q_proj]
    if depth == 2:
        rows.append(phi.T @ A @ A @ q_proj)
    recon = np.hstack([phi, np.zeros((n, depth * m))])
    return ReducedSystem(
        mass=pencil.M,
        reconstruction=recon,
        kind=ReductionKind.DIRECT,
        blocks=(m,) * (depth + 1),
        stiffness=pencil.K,
        linear=True,
        depth=depth,
        lift=np.vstack(rows),
    )


def stability_audit(pencil: Pencil, rel_tol: float = 1e-8):
    """Eigenvalues of M^-1 K and whether q'' = -M^-1 K q stays bounded.

    Stable means every eigenvalue is real and non-negative, both up to
    ``rel_tol`` times the spectral scale.

    Returns
    -------
    eigenvalues : ndarray of complex, sorted by (real, imag)
    stable : bool
    """
    try:
        op = np.linalg.solve(pencil.M, pencil.K)
    except np.linalg.LinAlgError as exc:
        raise DependentBasisError("pencil mass matrix is singular") from exc
    ev = np.linalg.eigvals(op).astype(complex)
    ev = ev[np.lexsort((ev.imag, ev.real))]
    scale = max(float(np.max(np.abs(ev))) if ev.size else 0.0, np.finfo(float).tiny)
    tol = rel_tol * scale
    stable = bool(np.all(np.abs(ev.imag) < tol) and np.all(ev.real >= -tol))
    return ev, stable


def interface_nodes(basis: BasisSet, n_coarse: int, n_atomistic: int) -> tuple:
    """The ``n_coarse`` coarse-side nodes ending at the interface node and the
    first ``n_atomistic`` atomistic nodes after it."""
    iface = basis.interface_index
    if iface is None:
        raise ValueError("basis has no interface node")
    coarse_side = [i for i in range(iface + 1)
                   if basis.regions[i] in (Region.COARSE, Region.INTERFACE)]
    atomistic = [i for i in range(iface + 1, basis.m)
                 if basis.regions[i] is Region.ATOMISTIC]
    if n_coarse > len(coarse_side) or n_atomistic > len(atomistic):
        raise ValueError("not enough nodes on one side of the interface")
    picked = coarse_side[len(coarse_side) - n_coarse:] + atomistic[:n_atomistic]
    return tuple(picked)


def _force_difference_operator(model, eps):
    def apply(psi):
        return -(force_free(model, eps * psi) - force_free(model, -eps * psi)) / (2.0 * eps)
    return apply


def krylov_enrich(basis: BasisSet, model: LatticeModel | None, selected, L: int,
                  eps: float = 1e-5, drop_tol: float = 1e-10, A=None) -> EnrichedBasis:
    """Enrich Range(Phi) with K_L(A, phi_j) for j in ``selected``.

    A is applied by central force differences at the reference
    configuration (or as a matrix if ``A`` is given).  Each chain is
    generated Arnoldi-style, so its span equals the Krylov space; the pooled
    vectors are then orthogonalized against Phi and among themselves by
    modified Gram-Schmidt with one reorthogonalization pass.  Candidates
    whose residual falls below ``drop_tol`` (relative) are dropped.
    """
    if L < 1:
        raise ValueError("Krylov depth L must be >= 1")
    selected = tuple(int(j) for j in selected)
    if not selected:
        raise EnrichmentEmptyError("no nodes selected for enrichment")
    if A is not None:
        A = np.asarray(A, dtype=float)
        apply_a = A.__matmul__
    else:
        apply_a = _force_difference_operator(model, eps)

    phi = basis.phi
    n = phi.shape[0]
    mfac = scipy.linalg.cho_factor(mass_matrix(basis))
    support = np.zeros(n, dtype=bool)

    candidates = []
    for j in selected:
        v = phi[:, j] / np.linalg.norm(phi[:, j])
        support |= v != 0
        chain = [v]
        for _ in range(L):
            w = apply_a(chain[-1])
            support |= w != 0
            ref = np.linalg.norm(w)
            for _ in range(2):
                for c in chain:
                    w = w - (c @ w) * c
            nw = np.linalg.norm(w)
            if ref == 0 or nw < drop_tol * ref:
                break
            chain.append(w / nw)
        candidates.extend(chain[1:])

    psi = []
    dropped = 0
    for v in candidates:
        ref = np.linalg.norm(v)
        w = v
        for _ in range(2):
            w = w - phi @ scipy.linalg.cho_solve(mfac, phi.T @ w)
            for p in psi:
                w = w - (p @ w) * p
        nw = np.linalg.norm(w)
        if nw < drop_tol * ref:
            dropped += 1
            continue
        psi.append(w / nw)
    if not psi:
        raise EnrichmentEmptyError("all Krylov candidates were dependent on Phi")
    psi = np.column_stack(psi)
    halo = np.asarray(basis.atoms)[support]
    return EnrichedBasis(psi=psi, selected_nodes=selected, depth=L,
                         halo=halo, dropped=dropped)


def extended_galerkin(basis: BasisSet, enriched: EnrichedBasis,
                      model: LatticeModel | None = None, linear: bool = False,
                      A=None) -> ReducedSystem:
    """Galerkin projection onto Range([Phi | Psi]).

    Mass is blockdiag(Phi^T Phi, I); the force is [Phi | Psi]^T f(Phi q +
    Psi xi), or -[Phi | Psi]^T A [Phi | Psi] c in the linear variant.
    """
    _check_unit_masses(model)
    phi = basis.phi
    psi = enriched.psi
    recon = np.hstack([phi, psi])
    stiffness = None
    if linear or A is not None:
        if A is None:
            A = linearize(model)
        stiffness = recon.T @ A @ recon
        stiffness = 0.5 * (stiffness + stiffness.T)
    mass = scipy.linalg.block_diag(mass_matrix(basis), np.eye(psi.shape[1]))
    return ReducedSystem(
        mass=mass,
        reconstruction=recon,
        kind=ReductionKind.EXTENDED if psi.shape[1] else ReductionKind.CONVENTIONAL,
        blocks=(basis.m, psi.shape[1]) if psi.shape[1] else (basis.m,),
        stiffness=stiffness,
        model=model,
        linear=linear,
        depth=enriched.depth,
    )


@dataclass(frozen=True, eq=False)
class TildeBlocks:
    """Schur-complement stiffness blocks K2~..K5~ (K4~, K5~ may be None)."""

    K2: np.ndarray
    K3: np.ndarray
    K4: np.ndarray | None = None
    K5: np.ndarray | None = None


def tilde_from_family(family: StiffnessFamily) -> TildeBlocks:
    """K2~ = K2 - K1 K0^-1 K1 and
    K3~ = K3 - K2 K0^-1 K1 - K1 K0^-1 K2 + K1 K0^-1 K1 K0^-1 K1."""
    if family.lmax < 3:
        raise ValueError("need K_0..K_3")
    k0, k1, k2, k3 = family[0], family[1], family[2], family[3]
    inv_k1 = np.linalg.solve(k0, k1)   # K0^-1 K1
    inv_k2 = np.linalg.solve(k0, k2)
    k2t = k2 - k1 @ inv_k1
    k3t = k3 - k2 @ inv_k1 - k1 @ inv_k2 + k1 @ inv_k1 @ inv_k1
    return TildeBlocks(K2=0.5 * (k2t + k2t.T), K3=0.5 * (k3t + k3t.T))


def tilde_blocks(basis: BasisSet, A) -> TildeBlocks:
    """K2~..K5~ from the nested projectors Q and Q1.

    K2~ = Phi^T AQA Phi, K3~ = Phi^T AQAQA Phi,
    K4~ = Phi^T AQAQQ1AQA Phi, K5~ = Phi^T AQAQ1QAQQ1AQA Phi,
    with P1 the orthogonal projector onto Range(QA Phi).
    """
    A = np.asarray(A, dtype=float)
    phi = basis.phi
    n = phi.shape[0]
    p = phi @ np.linalg.solve(phi.T @ phi, phi.T)
    q = np.eye(n) - p
    w1 = q @ A @ phi
    k2t = w1.T @ w1
    try:
        p1 = w1 @ np.linalg.solve(k2t, w1.T)
    except np.linalg.LinAlgError as exc:
        raise DependentBasisError("Range(QA Phi) is rank deficient") from exc
    q1 = np.eye(n) - p1
    k3t = w1.T @ A @ w1
    k4t = w1.T @ A @ q @ q1 @ A @ w1
    k5t = w1.T @ A @ q1 @ q @ A @ q @ q1 @ A @ w1
    sym = lambda x: 0.5 * (x + x.T)  # noqa: E731
    return TildeBlocks(K2=sym(k2t), K3=sym(k3t), K4=sym(k4t), K5=sym(k5t))


def _solve_shifted(block, rhs, s):
    cond = np.linalg.cond(block)
    if not np.isfinite(cond) or cond > 1e13:
        raise PoleError(f"shifted block singular at s = {s}")
    return np.linalg.solve(block, rhs)


def rational_kernel(tilde: TildeBlocks, s, order: int = 1):
    """Laplace-domain kernel approximants.

    order 1: K2~ (s^2 K2~ + K3~)^-1 K2~
    order 2: K2~ [(s^2 K2~ + K3~) - K4~ (s^2 K4~ + K5~)^-1 K4~]^-1 K2~
    """
    s2 = s * s
    k2, k3 = tilde.K2, tilde.K3
    shifted = s2 * k2 + k3
    if order == 2:
        if tilde.K4 is None or tilde.K5 is None:
            raise ValueError("order 2 needs K4~ and K5~")
        inner = s2 * tilde.K4 + tilde.K5
        shifted = shifted - tilde.K4 @ _solve_shifted(inner, tilde.K4, s)
    elif order != 1:
        raise ValueError("order must be 1 or 2")
    return k2 @ _solve_shifted(shifted, k2.astype(shifted.dtype), s)


def rational_kernel_time(tilde: TildeBlocks, t):
    """Inverse Laplace transform of the order-1 approximant.

    With K3~ v = mu K2~ v and v^T K2~ v = 1,
    Theta_1(t) = sum_k sin(sqrt(mu_k) t)/sqrt(mu_k) (K2~ v_k)(K2~ v_k)^T.
    Requires K2~ positive definite.
    """
    mu, v = scipy.linalg.eigh(tilde.K3, tilde.K2)
    mu = np.clip(mu, 0.0, None)
    w = np.sqrt(mu)
    kv = tilde.K2 @ v
    tt = np.atleast_1d(t)
    wt = np.multiply.outer(tt, w)
    with np.errstate(invalid="ignore", divide="ignore"):
        weights = np.where(w > 0, np.sin(wt) / np.where(w > 0, w, 1.0), tt[:, None])
    out = np.einsum("ik,tk,jk->tij", kv, weights, kv)
    return out[0] if np.ndim(t) == 0 else out
