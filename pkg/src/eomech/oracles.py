"""Independent validators: each compares a production path against a route that
shares none of its numerics."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass

import numpy as np

from . import metrics, spectra
from .dynamics import (StateSpaceModel, diffusion_matrix, drift_matrix, lyapunov_cm,
                       model_from_arrays)
from .spectra import FilterSpec

TOL_ENV = "EOMECH_ORACLE_TOL"

LYAPUNOV_TOL = 1e-6
DECOUPLED_TOL = 1e-6
FIDELITY_TOL = 1e-6


def oracle_tolerance(default: float) -> float:
    """Per-oracle tolerance, unless overridden through ``EOMECH_ORACLE_TOL``."""
    raw = os.environ.get(TOL_ENV)
    return float(raw) if raw else default


@dataclass
class OracleReport:
    name: str
    max_abs_err: float
    max_rel_err: float
    passed: bool
    budget: int
    tolerance: float = 0.0
    samples: int = 1

    def __post_init__(self):
        self.max_abs_err = float(self.max_abs_err)
        self.max_rel_err = float(self.max_rel_err)
        self.passed = bool(self.passed)

    def as_dict(self):
        return asdict(self)


def random_stable_model(rng: np.random.Generator, margin: float = 1e-3) -> StateSpaceModel:
    """Draw a stable model: couplings in [0, 0.2], detunings in [-2, 2] (units of omega_m).

    Draws closer than ``margin`` to the stability boundary are rejected along
    with unstable ones, since their mechanical peaks become arbitrarily narrow.
    """
    while True:
        gc, gw = rng.uniform(0.0, 0.2, size=2)
        dc, dw = rng.uniform(-2.0, 2.0, size=2)
        kc, kw = np.exp(rng.uniform(np.log(0.02), np.log(0.5), size=2))
        gamma_m = 10.0 ** rng.uniform(-6.0, -3.0)
        nbar = rng.uniform(0.0, 50.0)
        n_w = rng.uniform(0.0, 2.0)
        A = drift_matrix(gc, gw, kc, kw, dc, dw, gamma_m)
        D = diffusion_matrix(kc, kw, gamma_m, nbar, 0.0, n_w)
        model = model_from_arrays(A, D)
        if model.stable and model.max_real_eig < -margin:
            return model


def random_filters(rng: np.random.Generator) -> FilterSpec:
    eps_c, eps_w = np.exp(rng.uniform(0.0, np.log(100.0), size=2))
    om_c, om_w = rng.uniform(-2.0, 2.0, size=2)
    return FilterSpec(eps_c, eps_w, om_c, om_w)


def _errors(got, ref, floor=0.5):
    diff = np.abs(np.asarray(got) - np.asarray(ref))
    rel = diff / np.maximum(np.abs(ref), floor)
    return float(np.max(diff)), float(np.max(rel))


def check_lyapunov_vs_spectrum(model: StateSpaceModel, tol: float | None = None,
                               resolvent=None, name="lyapunov_vs_spectrum") -> OracleReport:
    """Spectral integral of the intracavity response against the algebraic Lyapunov solve.

    Relative errors are taken entrywise against ``max(|V_ij|, 1/2)``.
    """
    tol = oracle_tolerance(LYAPUNOV_TOL) if tol is None else tol
    ref = lyapunov_cm(model)
    res = spectra.integrate_spectrum(model, None, resolvent=resolvent)
    got = np.real(0.5 * (res.value + np.conj(res.value.T)))
    abs_err, rel_err = _errors(got, ref)
    return OracleReport(name, abs_err, rel_err, rel_err <= tol, res.evaluations, tol)


def decoupled_model(kappa: float, occupancy: float, detunings=(-1.0, 1.0),
                    gamma_m: float = 1e-4, nbar_m: float = 10.0) -> StateSpaceModel:
    A = drift_matrix(0.0, 0.0, kappa, kappa, detunings[0], detunings[1], gamma_m)
    D = diffusion_matrix(kappa, kappa, gamma_m, nbar_m, 0.0, occupancy)
    return model_from_arrays(A, D)


def check_decoupled_output(filters: FilterSpec, kappa: float, occupancy: float,
                           detunings=(-1.0, 1.0), tol: float | None = None) -> OracleReport:
    """Uncoupled cavities emit their input noise: optical ``I/2``, microwave ``(N + 1/2) I``.

    ``filters`` is in units where omega_m == 1.
    """
    tol = oracle_tolerance(DECOUPLED_TOL) if tol is None else tol
    model = decoupled_model(kappa, occupancy, detunings)
    cov = spectra.output_cm(model, filters)
    expect = np.zeros((4, 4))
    expect[:2, :2] = 0.5 * np.eye(2)
    expect[2:, 2:] = (occupancy + 0.5) * np.eye(2)
    abs_err, rel_err = _errors(cov.v_reduced, expect)
    return OracleReport("decoupled_output", abs_err, rel_err, abs_err <= tol,
                        cov.evaluations, tol)


def random_gammas(seed: int, n_samples: int) -> list[np.ndarray]:
    """``Gamma`` matrices from random stable models and filters.

    The reduced covariance comes from the time-domain Lyapunov route, which is
    exact and cheap; the channel data only need to be physical.
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_samples):
        cov = spectra.output_cm_lyapunov(random_stable_model(rng), random_filters(rng))
        out.append(metrics.gamma_matrix(cov.B, cov.B_prime, cov.C))
    return out


def check_fidelity_closed_forms(seed: int = 42, n_samples: int = 200,
                                tol: float | None = None) -> OracleReport:
    """Both closed-form fidelities against direct 2-D quadrature, including
    the forced anchors ``Gamma = I`` and ``Gamma = 2I``."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    tol = oracle_tolerance(FIDELITY_TOL) if tol is None else tol
    gammas = [np.eye(2), 2.0 * np.eye(2)] + random_gammas(seed, n_samples)
    abs_err = rel_err = 0.0
    for g in gammas:
        for closed, chi in ((metrics.fidelity_fock1, metrics.charfn_fock1),
                            (metrics.fidelity_superposition, metrics.charfn_superposition)):
            f_closed = closed(g)
            f_num = metrics.fidelity_numeric(g, chi)
            d = abs(f_closed - f_num)
            abs_err = max(abs_err, d)
            rel_err = max(rel_err, d / abs(f_num))
    return OracleReport("fidelity_closed_forms", abs_err, rel_err, rel_err <= tol,
                        2 * len(gammas), tol, samples=len(gammas))


def run_all(seed: int = 42, budget: int = 200) -> list[OracleReport]:
    """Full validation suite.

    ``budget`` is the number of random samples for the fidelity check; the
    spectral checks use ``budget // 4`` random models.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    from .params import derive_couplings, default_params
    from .dynamics import build_model

    rng = np.random.default_rng(seed)
    reports = []
    p = default_params()
    r = check_lyapunov_vs_spectrum(build_model(derive_couplings(p), p))
    r.name = "lyapunov_vs_spectrum[working_point]"
    reports.append(r)

    n_models = max(1, budget // 4)
    worst = None
    evals = 0
    for _ in range(n_models):
        r = check_lyapunov_vs_spectrum(random_stable_model(rng))
        evals += r.budget
        if worst is None or r.max_rel_err > worst.max_rel_err:
            worst = r
    reports.append(OracleReport("lyapunov_vs_spectrum[random]", worst.max_abs_err,
                                worst.max_rel_err, worst.max_rel_err <= worst.tolerance,
                                evals, worst.tolerance, n_models))

    worst = None
    evals = 0
    for _ in range(max(1, budget // 20)):
        f = random_filters(rng)
        r = check_decoupled_output(f, float(np.exp(rng.uniform(np.log(0.02), np.log(0.5)))),
                                   float(rng.uniform(0.0, 3.0)))
        evals += r.budget
        if worst is None or r.max_abs_err > worst.max_abs_err:
            worst = r
    worst.budget = evals
    worst.samples = max(1, budget // 20)
    reports.append(worst)

    reports.append(check_fidelity_closed_forms(seed, budget))
    return reports
