"""Filtered output modes and their stationary covariance matrix.

Fourier convention: ``f(w) = integral f(t) exp(+i w t) dt``, so the intracavity
response is ``(i w I + A)^-1``.  The output covariance is

    V_out = 1/(2 pi) * integral T(w) (M(w) + P) D (M(w) + P)^H T(w)^H dw

evaluated by adaptive quadrature over the whole frequency axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import quadrature
from .dynamics import StateSpaceModel, UnstableModelError

CUTOFF = 50.0               # core integration window, units of omega_m
ATOL = 1e-9                 # per-entry absolute tolerance
MAX_QUAD_ERROR = 1e-7
MAX_EVALUATIONS = 2_000_000
IMAG_TOL = 1e-9
ASYM_TOL = 1e-8

J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


def symplectic_form(modes: int) -> np.ndarray:
    return np.kron(np.eye(modes), J2)


@dataclass(frozen=True)
class FilterSpec:
    """Causal exponential filters ``sqrt(2/tau) exp(-(1/tau + i Omega) t)``.

    Time constants in seconds and central frequencies in rad/s; the central
    frequencies live in the rotating frame of the respective drive.
    """

    tau_c: float
    tau_w: float
    omega_center_c: float
    omega_center_w: float

    def __post_init__(self):
        if not (self.tau_c > 0 and self.tau_w > 0):
            raise ValueError("filter time constants must be > 0")
        for v in (self.tau_c, self.tau_w, self.omega_center_c, self.omega_center_w):
            if not math.isfinite(v):
                raise ValueError("filter parameters must be finite")

    @classmethod
    def from_normalized(cls, epsilon, omega_c_norm, omega_w_norm, omega_m, epsilon_w=None):
        """Build from ``epsilon = tau*omega_m`` and ``Omega/omega_m``."""
        epsilon_w = epsilon if epsilon_w is None else epsilon_w
        return cls(epsilon / omega_m, epsilon_w / omega_m,
                   omega_c_norm * omega_m, omega_w_norm * omega_m)

    def epsilon(self, omega_m: float) -> tuple[float, float]:
        return self.tau_c * omega_m, self.tau_w * omega_m

    def normalized(self, omega_m: float) -> tuple[float, float, float, float]:
        """(tau_c, tau_w, Omega_c, Omega_w) in units where omega_m == 1."""
        return (self.tau_c * omega_m, self.tau_w * omega_m,
                self.omega_center_c / omega_m, self.omega_center_w / omega_m)


@dataclass
class CovarianceSet:
    v_out: np.ndarray
    v_reduced: np.ndarray
    B: np.ndarray
    B_prime: np.ndarray
    C: np.ndarray
    quad_error: float = 0.0
    evaluations: int = 0
    diagnostics: dict = field(default_factory=dict)


def filter_ft(tau, omega_center, omega):
    """Fourier image of the normalized causal filter; a Lorentzian peak at ``omega_center``."""
    return math.sqrt(2.0 / tau) / (1.0 / tau + 1j * (omega_center - np.asarray(omega)))


def transfer_ft(omega, filters, kappas, omega_m=1.0):
    """Fourier image of the output transfer matrix, shape ``omega.shape + (6, 6)``.

    Mechanical rows pass through; each cavity block is the rotation-structured
    image of ``sqrt(2 kappa) Re g(t)`` and ``sqrt(2 kappa) Im g(t)``.
    ``kappas`` is ``(kappa_c, kappa_w)`` in the same units as ``omega``.
    """
    omega = np.asarray(omega, dtype=float)
    tau_c, tau_w, om_c, om_w = filters.normalized(omega_m)
    T = np.zeros(omega.shape + (6, 6), dtype=complex)
    T[..., 0, 0] = 1.0
    T[..., 1, 1] = 1.0
    for (i, tau, om, kappa) in ((2, tau_c, om_c, kappas[0]), (4, tau_w, om_w, kappas[1])):
        gp = filter_ft(tau, om, omega)
        gm = np.conj(filter_ft(tau, om, -omega))
        r = math.sqrt(kappa / 2.0) * (gp + gm)
        im = -1j * math.sqrt(kappa / 2.0) * (gp - gm)
        T[..., i, i] = r
        T[..., i, i + 1] = -im
        T[..., i + 1, i] = im
        T[..., i + 1, i + 1] = r
    return T


def _resolvent(A, omega):
    n = A.shape[0]
    return np.linalg.inv(1j * omega[:, None, None] * np.eye(n) + A[None, :, :])


def spectral_breakpoints(model: StateSpaceModel, filters: FilterSpec | None = None) -> np.ndarray:
    """Initial panel edges: a graded mesh around every spectral peak.

    Peaks sit at the normal-mode frequencies (imaginary parts of the drift
    eigenvalues) and at the filter centres, mirrored to negative frequency.
    """
    eig = np.linalg.eigvals(model.drift)
    peaks = [(abs(ev.imag), max(abs(ev.real), 1e-12)) for ev in eig]
    if filters is not None:
        tau_c, tau_w, om_c, om_w = filters.normalized(model.omega_m)
        kap = min(model.kappa_c, model.kappa_w) if model.kappa_c > 0 else 1.0
        peaks.append((abs(om_c), min(1.0 / tau_c, kap)))
        peaks.append((abs(om_w), min(1.0 / tau_w, kap)))
    offsets = np.array([0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 8.0, 16.0, 64.0])
    pts = [np.array([0.0])]
    for centre, width in peaks:
        for sign in (1.0, -1.0):
            c = sign * centre
            pts.append(c + width * offsets)
            pts.append(c - width * offsets)
    pts = np.unique(np.round(np.concatenate(pts), 13))
    return pts


def integrate_spectrum(model: StateSpaceModel, filters: FilterSpec | None = None, *,
                       atol=ATOL, cutoff=CUTOFF, max_evaluations=MAX_EVALUATIONS,
                       resolvent=None) -> quadrature.QuadResult:
    """Raw (complex) frequency integral, including the 1/(2 pi) prefactor.

    Without ``filters`` this is the intracavity spectrum ``M D M^H``; with
    them it is the filtered output spectrum.  ``resolvent`` overrides the
    response function ``(omega_array, A) -> (n, 6, 6)``; tests use it to check
    that a broken convention is caught.
    """
    A = model.drift
    sqrtD = np.sqrt(np.diag(model.diffusion))
    resolvent = resolvent or (lambda w, A: _resolvent(A, w))
    if filters is not None:
        p_out = np.zeros(6)
        p_out[2:4] = 1.0 / (2.0 * model.kappa_c)
        p_out[4:6] = 1.0 / (2.0 * model.kappa_w)
        p_out = np.diag(p_out)

    def integrand(w):
        K = resolvent(w, A)
        if filters is not None:
            K = transfer_ft(w, filters, (model.kappa_c, model.kappa_w), model.omega_m) @ (K + p_out)
        K = K * sqrtD[None, None, :]
        return (K @ np.conj(np.swapaxes(K, -1, -2))) / (2.0 * math.pi)

    return quadrature.integrate_real_line(integrand, spectral_breakpoints(model, filters),
                                          cutoff, atol=atol, max_evaluations=max_evaluations)


def _realify(res: quadrature.QuadResult) -> np.ndarray:
    M = res.value
    herm = 0.5 * (M + np.conj(M.T))
    asym = float(np.max(np.abs(M - np.conj(M.T))))
    if asym > ASYM_TOL * max(1.0, float(np.max(np.abs(M)))):
        raise RuntimeError(f"integrated spectrum is not Hermitian (deviation {asym:.3e})")
    imag = float(np.max(np.abs(herm.imag)))
    if imag >= max(IMAG_TOL, 10.0 * res.max_error):
        raise RuntimeError(f"imaginary residue {imag:.3e} exceeds tolerance")
    return np.ascontiguousarray(herm.real)


def spectral_cm(model: StateSpaceModel, **kw) -> tuple[np.ndarray, float]:
    """Intracavity covariance from the frequency integral (oracle for the Lyapunov solve)."""
    if not model.stable:
        raise UnstableModelError(f"no stationary state: max Re(eig) = {model.max_real_eig:.3e}")
    res = integrate_spectrum(model, None, **kw)
    return _realify(res), res.max_error


def reduce(v_out):
    """Optical/microwave block ``V'`` of the 6x6 output matrix and its 2x2 blocks."""
    v = np.asarray(v_out, dtype=float)
    vr = v[2:6, 2:6].copy()
    return vr, vr[:2, :2].copy(), vr[2:, 2:].copy(), vr[:2, 2:].copy()


def assemble(B, B_prime, C) -> np.ndarray:
    return np.block([[B, C], [np.asarray(C).T, B_prime]])


def output_cm(model: StateSpaceModel, filters: FilterSpec, *, atol=ATOL,
              cutoff=CUTOFF, max_evaluations=MAX_EVALUATIONS) -> CovarianceSet:
    """Stationary covariance of the filtered output modes by spectral quadrature."""
    if not model.stable:
        raise UnstableModelError(f"no stationary state: max Re(eig) = {model.max_real_eig:.3e}")
    res = integrate_spectrum(model, filters, atol=atol, cutoff=cutoff,
                             max_evaluations=max_evaluations)
    if res.max_error > MAX_QUAD_ERROR:
        raise quadrature.QuadratureError("output covariance not converged",
                                         res.value, res.max_error)
    v = _realify(res)
    vr, B, Bp, C = reduce(v)
    return CovarianceSet(v, vr, B, Bp, C, quad_error=res.max_error,
                         evaluations=res.evaluations)


def output_cm_lyapunov(model: StateSpaceModel, filters: FilterSpec) -> CovarianceSet:
    """Same covariance from a time-domain route: the filters as extra linear modes.

    Each filtered mode obeys ``da_k/dt = -(1/tau + i Omega) a_k + sqrt(2/tau) a_out``
    with ``a_out = sqrt(2 kappa) da - a_in``; the 10-dimensional augmented
    system has correlated noise and is solved as one Lyapunov equation.
    """
    if not model.stable:
        raise UnstableModelError(f"no stationary state: max Re(eig) = {model.max_real_eig:.3e}")
    tau_c, tau_w, om_c, om_w = filters.normalized(model.omega_m)
    Aa = np.zeros((10, 10))
    Aa[:6, :6] = model.drift
    Bn = np.zeros((10, 6))
    Bn[:6, :6] = np.eye(6)
    for (i, f, tau, om, kappa) in ((2, 6, tau_c, om_c, model.kappa_c),
                                   (4, 8, tau_w, om_w, model.kappa_w)):
        Aa[f:f + 2, f:f + 2] = [[-1.0 / tau, om], [-om, -1.0 / tau]]
        s = math.sqrt(2.0 / tau)
        Aa[f, i] = Aa[f + 1, i + 1] = s * math.sqrt(2.0 * kappa)
        Bn[f, i] = Bn[f + 1, i + 1] = -s / math.sqrt(2.0 * kappa)
    V = scipy.linalg.solve_continuous_lyapunov(Aa, -Bn @ model.diffusion @ Bn.T)
    V = 0.5 * (V + V.T)
    v_out = np.empty((6, 6))
    idx = [0, 1, 6, 7, 8, 9]
    v_out[:] = V[np.ix_(idx, idx)]
    vr, B, Bp, C = reduce(v_out)
    return CovarianceSet(v_out, vr, B, Bp, C)


def physicality_margin(v, modes=None) -> float:
    """Smallest eigenvalue of ``V + (i/2) J`` (non-negative for a physical state)."""
    v = np.asarray(v, dtype=float)
    modes = modes or v.shape[0] // 2
    return float(np.min(np.linalg.eigvalsh(v + 0.5j * symplectic_form(modes))))


def check_physical(cov: CovarianceSet, tol: float = 1e-8) -> None:
    """Raise if the reduced matrix violates the uncertainty or vacuum bounds."""
    margin = physicality_margin(cov.v_reduced)
    if margin < -tol:
        raise ValueError(f"V' + iJ/2 has eigenvalue {margin:.3e} < 0")
    dmin = float(np.min(np.diag(cov.v_reduced)))
    if dmin < 0.5 - tol:
        raise ValueError(f"filtered-mode variance {dmin:.6g} below the vacuum level")
