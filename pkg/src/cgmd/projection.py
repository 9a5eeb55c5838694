"""Projectors onto the coarse space and the spectral form of the exact
memory equation for the linearized chain.

For a linear model u'' = -A u and a coarse space Y = Range(Phi), the coarse
coordinates q = M^-1 Phi^T u obey

    M q'' = -K q + int_0^t Theta(t - s) q(s) ds + G(t),

with Theta and G assembled from the eigenpairs (lambda_i, eta_i) of QAQ
that have lambda_i > 0.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .basis import BasisSet, mass_matrix
from .errors import DependentBasisError

__all__ = [
    "ProjectorPair",
    "RitzProjector",
    "KernelSpectrum",
    "orthogonal_projector",
    "ritz_projector",
    "qaq_spectrum",
    "memory_kernel",
    "memory_kernel_diagonal",
    "forcing_g",
    "fundamental_solutions",
]


@dataclass(frozen=True, eq=False)
class ProjectorPair:
    """P = Phi M^-1 Phi^T and its complement Q = I - P."""

    P: np.ndarray
    Q: np.ndarray
    phi: np.ndarray

    def apply_Q(self, u):
        return u - self.P @ u


@dataclass(frozen=True, eq=False)
class RitzProjector:
    """A-orthogonal projector P_hat = Phi (Phi^T A Phi)^-1 Phi^T A."""

    P: np.ndarray
    Q: np.ndarray

    def error_split(self, u_hat, u):
        """theta = u_hat - P_hat u (in Y) and eta = -Q_hat u, so that
        theta + eta = u_hat - u."""
        u_hat = np.asarray(u_hat, dtype=float)
        u = np.asarray(u, dtype=float)
        theta = u_hat - u @ self.P.T
        eta = -(u @ self.Q.T)
        return theta, eta


@dataclass(frozen=True, eq=False)
class KernelSpectrum:
    """Eigen-decomposition of QAQ.

    Attributes
    ----------
    eigenvalues : ndarray, shape (n,)
        Ascending.
    eigenvectors : ndarray, shape (n, n)
        Orthonormal columns eta_i.
    active : ndarray of bool, shape (n,)
        lambda_i > zero_tolerance.
    b : ndarray, shape (m, n_active)
        Phi^T A eta_i for the active modes.
    zero_tolerance : float
    A, phi : ndarray
        Inputs, kept for the fundamental solutions.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    active: np.ndarray
    b: np.ndarray
    zero_tolerance: float
    A: np.ndarray
    phi: np.ndarray

    @property
    def omega(self) -> np.ndarray:
        """sqrt(lambda_i) for the active modes."""
        return np.sqrt(self.eigenvalues[self.active])

    @property
    def active_vectors(self) -> np.ndarray:
        return self.eigenvectors[:, self.active]

    @property
    def kernel_dimension(self) -> int:
        return int(np.count_nonzero(~self.active))


def orthogonal_projector(basis: BasisSet) -> ProjectorPair:
    phi = basis.phi
    factor = scipy.linalg.cho_factor(mass_matrix(basis))
    p = phi @ scipy.linalg.cho_solve(factor, phi.T)
    p = 0.5 * (p + p.T)
    return ProjectorPair(P=p, Q=np.eye(len(p)) - p, phi=phi)


def ritz_projector(basis: BasisSet, A) -> RitzProjector:
    phi = basis.phi
    k = phi.T @ A @ phi
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu = scipy.linalg.lu_factor(k, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise DependentBasisError("Phi^T A Phi is singular") from exc
    if np.min(np.abs(np.diag(lu[0]))) <= 1e-13 * np.max(np.abs(np.diag(lu[0]))):
        raise DependentBasisError("Phi^T A Phi is singular: ker(A) meets Y")
    p = phi @ scipy.linalg.lu_solve(lu, phi.T @ A)
    return RitzProjector(P=p, Q=np.eye(len(p)) - p)


def qaq_spectrum(A, pair: ProjectorPair, rel_tol: float = 1e-10) -> KernelSpectrum:
    """Full symmetric eigen-decomposition of QAQ.

    Eigenvalues below ``rel_tol * max|lambda|`` are treated as the
    structural kernel (which contains Y).
    """
    A = np.asarray(A, dtype=float)
    q = pair.Q
    qaq = q @ A @ q
    qaq = 0.5 * (qaq + qaq.T)
    lam, eta = scipy.linalg.eigh(qaq)
    scale = float(np.max(np.abs(lam))) if lam.size else 0.0
    tol = rel_tol * scale
    active = lam > tol
    b = pair.phi.T @ (A @ eta[:, active])
    return KernelSpectrum(eigenvalues=lam, eigenvectors=eta, active=active,
                          b=b, zero_tolerance=tol, A=A, phi=pair.phi)


def _sinc_weights(omega, t):
    # sin(w t) / w, per mode and time
    wt = np.multiply.outer(np.atleast_1d(t), omega)
    return np.sin(wt) / omega


def memory_kernel(spec: KernelSpectrum, t):
    """Theta(t) = sum_i sin(sqrt(l_i) t) / sqrt(l_i) * b_i b_i^T.

    Returns shape (m, m) for scalar t, (len(t), m, m) for an array.
    """
    scalar = np.ndim(t) == 0
    w = _sinc_weights(spec.omega, t)
    theta = np.einsum("ik,tk,jk->tij", spec.b, w, spec.b, optimize=True)
    return theta[0] if scalar else theta


def memory_kernel_diagonal(spec: KernelSpectrum, t, nodes=None):
    """Diagonal entries Theta_nn(t) without forming the full matrix.

    Returns shape (len(t), len(nodes)).
    """
    b = spec.b if nodes is None else spec.b[np.asarray(nodes)]
    w = _sinc_weights(spec.omega, t)
    return w @ (b * b).T


def forcing_g(spec: KernelSpectrum, u0, v0, t):
    """Projected initial-data force Phi^T g(t).

    Phi^T g(t) = -sum_i b_i [cos(w_i t) eta_i.u0 + sin(w_i t)/w_i eta_i.v0].
    It vanishes identically when u0 and v0 lie in the coarse space.
    Returns shape (m,) for scalar t, (len(t), m) otherwise.
    """
    scalar = np.ndim(t) == 0
    eta = spec.active_vectors
    cu = eta.T @ np.asarray(u0, dtype=float)
    cv = eta.T @ np.asarray(v0, dtype=float)
    wt = np.multiply.outer(np.atleast_1d(t), spec.omega)
    coeff = np.cos(wt) * cu + np.sin(wt) / spec.omega * cv
    g = -coeff @ spec.b.T
    return g[0] if scalar else g


def fundamental_solutions(spec: KernelSpectrum, t: float, max_n: int = 64):
    """C(t) = cos(sqrt(AQ) t) and S(t) = sin(sqrt(AQ) t) / sqrt(AQ).

    Built from the eigenstructure AQ = sum_i l_i xi_i eta_i^T with
    xi_i = A eta_i / l_i; on the kernel of AQ, C acts as I and S as t I.
    Dense n x n output, so guarded by ``max_n``.
    """
    eta = spec.active_vectors
    n = eta.shape[0]
    if n > max_n:
        raise ValueError(f"dense C/S assembly limited to n <= {max_n}")
    lam = spec.eigenvalues[spec.active]
    w = np.sqrt(lam)
    xi = (spec.A @ eta) / lam
    kernel_part = np.eye(n) - xi @ eta.T
    c = (xi * np.cos(w * t)) @ eta.T + kernel_part
    s = (xi * (np.sin(w * t) / w)) @ eta.T + t * kernel_part
    return c, s
