"""Linearized fluctuation dynamics: fixed points, drift/diffusion, stability.

State ordering is ``(dq, dp, dXc, dYc, dXw, dYw)``.  Matrices are expressed in
units of the mechanical frequency; ``StateSpaceModel.omega_m`` carries the
scale back to rad/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import DerivedParams, PhysicalParams

STAB_EPS = 1e-12

# structurally nonzero entries of the drift matrix
DRIFT_PATTERN = (
    (0, 1),
    (1, 0), (1, 1), (1, 2), (1, 4),
    (2, 2), (2, 3),
    (3, 0), (3, 2), (3, 3),
    (4, 4), (4, 5),
    (5, 0), (5, 4), (5, 5),
)


class UnstableModelError(ValueError):
    """The linearized dynamics has no stationary state."""


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")


@dataclass(frozen=True)
class FixedPoint:
    q_s: float
    alpha_s: float
    beta_s: float
    effective_detunings: tuple[float, float]
    iterations: int = 0


def fixed_point(p: PhysicalParams, d: DerivedParams, mode: str = "effective",
                tol: float = 1e-12, max_iter: int = 10_000,
                damping: float = 0.5) -> FixedPoint:
    """Semiclassical steady state around which the dynamics is linearized.

    In ``"effective"`` mode ``p.delta_c``/``p.delta_w`` are the shifted
    detunings and the amplitudes follow directly.  In ``"bare"`` mode they are
    the bare detunings and ``Delta = Delta_0 - G0 * q_s`` is solved self-
    consistently by damped iteration on ``q_s``.
    """
    if mode not in ("effective", "bare"):
        raise ValueError(f"unknown mode {mode!r}")

    def amplitudes(dc, dw):
        a2 = d.drive_amp_c**2 / (p.kappa_c**2 + dc**2)
        b2 = d.drive_amp_w**2 / (p.kappa_w**2 + dw**2)
        return a2, b2

    def displacement(a2, b2):
        return (d.g0c * a2 + d.g0w * b2) / p.omega_m

    if mode == "effective":
        a2, b2 = amplitudes(p.delta_c, p.delta_w)
        return FixedPoint(displacement(a2, b2), math.sqrt(a2), math.sqrt(b2),
                          (p.delta_c, p.delta_w))

    q = 0.0
    residual = math.inf
    for it in range(1, max_iter + 1):
        dc = p.delta_c - d.g0c * q
        dw = p.delta_w - d.g0w * q
        q_new = displacement(*amplitudes(dc, dw))
        residual = abs(q_new - q) / max(abs(q_new), 1e-300)
        if residual <= tol or q_new == q:
            q = q_new
            break
        q = (1.0 - damping) * q + damping * q_new
    else:
        raise ConvergenceError("fixed-point iteration did not converge", residual)
    dc = p.delta_c - d.g0c * q
    dw = p.delta_w - d.g0w * q
    a2, b2 = amplitudes(dc, dw)
    return FixedPoint(q, math.sqrt(a2), math.sqrt(b2), (dc, dw), it)


@dataclass(frozen=True)
class StateSpaceModel:
    """Drift ``A`` and diffusion ``D`` of ``du/dt = A u + noise`` (units of omega_m)."""

    drift: np.ndarray
    diffusion: np.ndarray
    stable: bool
    max_real_eig: float
    omega_m: float = 1.0
    kappa_c: float = 0.0
    kappa_w: float = 0.0

    @property
    def decoupled(self) -> bool:
        return self.drift[1, 2] == 0 and self.drift[1, 4] == 0


def drift_matrix(gc, gw, kappa_c, kappa_w, delta_c, delta_w, gamma_m) -> np.ndarray:
    """Drift matrix in units of omega_m (all arguments already normalized)."""
    return np.array([
        [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        [-1.0, -gamma_m, gc, 0.0, gw, 0.0],
        [0.0, 0.0, -kappa_c, delta_c, 0.0, 0.0],
        [gc, 0.0, -delta_c, -kappa_c, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, -kappa_w, delta_w],
        [gw, 0.0, 0.0, 0.0, -delta_w, -kappa_w],
    ])


def diffusion_matrix(kappa_c, kappa_w, gamma_m, nbar_m, n_c=0.0, n_w=0.0) -> np.ndarray:
    """Diagonal noise intensity for vacuum quadrature variance 1/2."""
    return np.diag([
        0.0,
        gamma_m * (2.0 * nbar_m + 1.0),
        kappa_c * (2.0 * n_c + 1.0),
        kappa_c * (2.0 * n_c + 1.0),
        kappa_w * (2.0 * n_w + 1.0),
        kappa_w * (2.0 * n_w + 1.0),
    ])


def model_from_arrays(drift, diffusion, omega_m=1.0) -> StateSpaceModel:
    drift = np.asarray(drift, dtype=float)
    diffusion = np.asarray(diffusion, dtype=float)
    if not (np.all(np.isfinite(drift)) and np.all(np.isfinite(diffusion))):
        raise ValueError("drift and diffusion must be finite")
    stable, max_re = is_stable(drift)
    return StateSpaceModel(drift, diffusion, stable, max_re, omega_m,
                           kappa_c=-drift[2, 2], kappa_w=-drift[4, 4])


def build_model(d: DerivedParams, p: PhysicalParams) -> StateSpaceModel:
    w = p.omega_m
    A = drift_matrix(d.gc / w, d.gw / w, p.kappa_c / w, p.kappa_w / w,
                     p.delta_c / w, p.delta_w / w, d.gamma_m / w)
    D = diffusion_matrix(p.kappa_c / w, p.kappa_w / w, d.gamma_m / w,
                         d.nbar_m, d.n_c, d.n_w)
    return model_from_arrays(A, D, omega_m=w)


def is_stable(A) -> tuple[bool, float]:
    """Eigenvalue test: stable iff every real part is below ``-STAB_EPS``."""
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise ValueError("drift matrix is not finite")
    try:
        eig = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigenvalue solver failed: {exc}") from exc
    max_re = float(np.max(eig.real))
    return max_re < -STAB_EPS, max_re


def _sym_basis(n):
    return [(i, j) for i in range(n) for j in range(i, n)]


def lyapunov_cm(model: StateSpaceModel) -> np.ndarray:
    """Stationary covariance: solve ``A V + V A^T = -D`` for symmetric ``V``.

    Direct dense solve over the n(n+1)/2 independent entries.
    """
    if not model.stable:
        raise UnstableModelError(
            f"no stationary state: max Re(eig) = {model.max_real_eig:.3e}")
    A = model.drift
    D = model.diffusion
    n = A.shape[0]
    basis = _sym_basis(n)
    M = np.empty((len(basis), len(basis)))
    for k, (i, j) in enumerate(basis):
        E = np.zeros((n, n))
        E[i, j] = E[j, i] = 1.0
        L = A @ E + E @ A.T
        M[:, k] = [L[a, b] for a, b in basis]
    rhs = -np.array([D[a, b] for a, b in basis])
    x = np.linalg.solve(M, rhs)
    V = np.zeros((n, n))
    for k, (i, j) in enumerate(basis):
        V[i, j] = V[j, i] = x[k]
    return V
