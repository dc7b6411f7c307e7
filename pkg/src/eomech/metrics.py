"""Entanglement and teleportation figures of merit for the two-mode output state."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cubature

NO_CLONING = 2.0 / 3.0
Z = np.diag([1.0, -1.0])
V_COH = 0.5 * np.eye(2)

_DISC_TOL = 1e-10
_FID_ATOL = 1e-8
_GAUSS_FLOOR = 1e-16


class UnphysicalError(ValueError):
    """Input covariance data violate a physicality bound."""


@dataclass(frozen=True)
class TeleportationReport:
    e_n: float
    eta_minus: float
    gamma: np.ndarray
    fidelity_fock: float
    fidelity_superposition: float
    beats_no_cloning_fock: bool
    beats_no_cloning_superposition: bool


def log_negativity(v_reduced, B, B_prime, C) -> tuple[float, float]:
    """Logarithmic negativity and the smallest partially transposed symplectic eigenvalue."""
    sigma = np.linalg.det(B) + np.linalg.det(B_prime) - 2.0 * np.linalg.det(C)
    det_v = np.linalg.det(v_reduced)
    disc = sigma * sigma - 4.0 * det_v
    if disc < -_DISC_TOL * max(1.0, sigma * sigma):
        raise UnphysicalError(f"negative discriminant {disc:.3e}: V' is not physical")
    root = math.sqrt(max(disc, 0.0))
    # (sigma - root)/2 written without cancellation
    denom = sigma + root
    if denom <= 0:
        raise UnphysicalError("non-positive symplectic invariant")
    eta2 = 2.0 * det_v / denom
    if eta2 <= 0:
        raise UnphysicalError(f"det V' = {det_v:.3e} is not positive")
    eta = math.sqrt(eta2)
    return max(0.0, -math.log(2.0 * eta)), eta


def gamma_matrix(B, B_prime, C) -> np.ndarray:
    """Gaussian kernel of the unity-gain teleportation output."""
    B, B_prime, C = (np.asarray(x, dtype=float) for x in (B, B_prime, C))
    g = 2.0 * V_COH + Z @ B @ Z + Z @ C + C.T @ Z + B_prime
    g = 0.5 * (g + g.T)
    if g[0, 0] <= 0 or np.linalg.det(g) <= 0:
        raise UnphysicalError(f"Gamma is not positive definite: {g.tolist()}")
    return g


def _gamma_invariants(gamma):
    g = np.asarray(gamma, dtype=float)
    det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
    if det <= 0 or g[0, 0] <= 0:
        raise UnphysicalError(f"det Gamma = {det:.3e} must be positive")
    quad = g[0, 0]**2 + g[1, 1]**2 + 2.0 * g[0, 1]**2
    return g, det, quad


def _check_unit(f, what):
    if not 0.0 <= f <= 1.0:
        raise UnphysicalError(f"{what} fidelity {f!r} outside [0, 1]")
    return f


def fidelity_fock1(gamma) -> float:
    """Teleportation fidelity of the single-photon state."""
    g, det, quad = _gamma_invariants(gamma)
    f = (1.0 + (0.5 - (g[0, 0] + g[1, 1])) / det + 3.0 * quad / (4.0 * det**2)) / math.sqrt(det)
    return _check_unit(f, "Fock-state")


def fidelity_superposition(gamma) -> float:
    """Teleportation fidelity of ``(|0> + |1>)/sqrt(2)``."""
    g, det, quad = _gamma_invariants(gamma)
    f = (4.0 + (0.5 - 2.0 * g[1, 1]) / det + 3.0 * quad / (4.0 * det**2)) / (4.0 * math.sqrt(det))
    return _check_unit(f, "superposition")


# characteristic functions chi(eta) = Tr[rho exp(eta a^+ - eta^* a)]
def charfn_vacuum(eta):
    return np.exp(-np.abs(eta)**2 / 2.0)


def charfn_fock1(eta):
    x = np.abs(eta)**2
    return (1.0 - x) * np.exp(-x / 2.0)


def charfn_superposition(eta):
    x = np.abs(eta)**2
    return 0.5 * (2.0 - x + 2.0 * np.real(eta)) * np.exp(-x / 2.0)


def fidelity_numeric(gamma, input_charfn, atol=_FID_ATOL, max_subdivisions=20_000) -> float:
    """Fidelity by direct 2-D quadrature over the complex plane.

    The channel contributes ``exp(-mu^T (Gamma - I) mu)`` with
    ``mu = (Im eta, -Re eta)``; the domain is cut where ``exp(-mu^T Gamma mu)``
    drops below 1e-16.
    """
    g, det, _ = _gamma_invariants(gamma)
    lam_min = float(np.min(np.linalg.eigvalsh(g)))
    radius = math.sqrt(-math.log(_GAUSS_FLOOR) / lam_min)
    kernel = g - 2.0 * V_COH

    def integrand(x):
        er, ei = x[:, 0], x[:, 1]
        mu = np.stack([ei, -er], axis=1)
        q = np.einsum("ni,ij,nj->n", mu, kernel, mu)
        chi = input_charfn(er + 1j * ei)
        return (np.abs(chi)**2 * np.exp(-q)) / math.pi

    res = cubature(integrand, [-radius, -radius], [radius, radius], rule="gk21",
                   atol=atol, rtol=0.0, max_subdivisions=max_subdivisions)
    if res.status != "converged":
        raise RuntimeError(f"fidelity quadrature did not converge (error estimate {res.error:.3e})")
    return float(res.estimate)


def no_cloning_pass(F: float) -> bool:
    if not 0.0 <= F <= 1.0:
        raise ValueError(f"fidelity {F!r} outside [0, 1]")
    return F > NO_CLONING


def teleportation_report(v_reduced, B, B_prime, C) -> TeleportationReport:
    e_n, eta = log_negativity(v_reduced, B, B_prime, C)
    g = gamma_matrix(B, B_prime, C)
    ff = fidelity_fock1(g)
    fs = fidelity_superposition(g)
    return TeleportationReport(e_n, eta, g, ff, fs, no_cloning_pass(ff), no_cloning_pass(fs))
