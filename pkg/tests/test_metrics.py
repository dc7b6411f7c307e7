import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eomech.metrics import (NO_CLONING, UnphysicalError, charfn_fock1, charfn_superposition,
                            charfn_vacuum, fidelity_fock1, fidelity_numeric,
                            fidelity_superposition, gamma_matrix, log_negativity,
                            no_cloning_pass, teleportation_report)
from eomech.spectra import assemble, reduce


def tmsv_blocks(r, sign=1.0):
    c, s = math.cosh(2 * r) / 2, math.sinh(2 * r) / 2
    B = c * np.eye(2)
    C = sign * s * np.diag([1.0, -1.0])
    return B, B.copy(), C


def en(B, Bp, C):
    return log_negativity(assemble(B, Bp, C), B, Bp, C)


def test_vacuum_separable():
    e, eta = en(0.5 * np.eye(2), 0.5 * np.eye(2), np.zeros((2, 2)))
    assert e == 0.0 and eta == 0.5


@pytest.mark.parametrize("r", [0.1, 0.25, 0.5, 1.0, 2.0])
def test_two_mode_squeezed(r):
    e, eta = en(*tmsv_blocks(r))
    assert e == pytest.approx(2 * r, abs=1e-9)
    assert eta == pytest.approx(math.exp(-2 * r) / 2, rel=1e-9)


@given(a=st.floats(0.5, 50.0), b=st.floats(0.5, 50.0))
def test_thermal_product_not_entangled(a, b):
    e, eta = en(a * np.eye(2), b * np.eye(2), np.zeros((2, 2)))
    assert e <= 1e-12
    # degenerate symplectic spectra (a == b) lose half the digits in the square root
    assert eta == pytest.approx(min(a, b), rel=1e-6)


def test_unphysical_rejected():
    # correlations stronger than the local variances allow
    with pytest.raises(UnphysicalError):
        en(0.5 * np.eye(2), 0.5 * np.eye(2), 0.6 * np.eye(2))


def test_gamma_examples():
    np.testing.assert_allclose(gamma_matrix(0.5 * np.eye(2), 0.5 * np.eye(2), np.zeros((2, 2))),
                               2 * np.eye(2))
    r = 0.8
    G = gamma_matrix(*tmsv_blocks(r, sign=-1.0))
    np.testing.assert_allclose(G, (1 + math.exp(-2 * r)) * np.eye(2), atol=1e-12)
    G = gamma_matrix(*tmsv_blocks(12.0, sign=-1.0))
    np.testing.assert_allclose(G, np.eye(2), atol=1e-9)


def test_gamma_not_positive_rejected():
    with pytest.raises(UnphysicalError):
        gamma_matrix(np.zeros((2, 2)), -2 * np.eye(2), np.zeros((2, 2)))


def test_fidelity_anchors():
    assert fidelity_fock1(np.eye(2)) == pytest.approx(1.0, abs=1e-12)
    assert fidelity_superposition(np.eye(2)) == pytest.approx(1.0, abs=1e-12)
    assert fidelity_fock1(2 * np.eye(2)) == pytest.approx(0.25, abs=1e-14)
    assert fidelity_superposition(2 * np.eye(2)) == pytest.approx(0.4375, abs=1e-14)


def test_numeric_anchors():
    assert fidelity_numeric(2 * np.eye(2), charfn_vacuum) == pytest.approx(0.5, abs=1e-9)
    assert fidelity_numeric(2 * np.eye(2), charfn_fock1) == pytest.approx(0.25, abs=1e-9)
    assert fidelity_numeric(2 * np.eye(2), charfn_superposition) == pytest.approx(0.4375, abs=1e-9)
    assert fidelity_numeric(np.eye(2), charfn_fock1) == pytest.approx(1.0, abs=1e-9)


def test_closed_form_vs_quadrature_squeezed_channel():
    G = (1 + math.exp(-2.0)) * np.eye(2)
    assert fidelity_fock1(G) == pytest.approx(fidelity_numeric(G, charfn_fock1), rel=1e-6)
    assert fidelity_superposition(G) == pytest.approx(
        fidelity_numeric(G, charfn_superposition), rel=1e-6)


def test_mu_pairing_is_not_transposed():
    # asymmetric Gamma: the superposition result depends on which diagonal entry is which
    G = np.array([[1.3, 0.0], [0.0, 2.5]])
    Gt = G[::-1, ::-1].copy()
    assert fidelity_superposition(G) != pytest.approx(fidelity_superposition(Gt), rel=1e-3)
    assert fidelity_superposition(G) == pytest.approx(
        fidelity_numeric(G, charfn_superposition), rel=1e-8)
    assert fidelity_superposition(Gt) == pytest.approx(
        fidelity_numeric(Gt, charfn_superposition), rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(l1=st.floats(1.0, 30.0), cond=st.floats(1.0, 1e3), theta=st.floats(0.0, math.pi))
def test_closed_forms_match_quadrature(l1, cond, theta):
    c, s = math.cos(theta), math.sin(theta)
    R = np.array([[c, -s], [s, c]])
    G = R @ np.diag([l1, min(l1 * cond, 1e3)]) @ R.T
    for closed, chi in ((fidelity_fock1, charfn_fock1),
                        (fidelity_superposition, charfn_superposition)):
        assert closed(G) == pytest.approx(fidelity_numeric(G, chi), rel=1e-6, abs=1e-12)


def test_fidelity_increasing_with_squeezing():
    rs = np.linspace(0.0, 3.0, 31)
    ff = [fidelity_fock1((1 + math.exp(-2 * r)) * np.eye(2)) for r in rs]
    fs = [fidelity_superposition((1 + math.exp(-2 * r)) * np.eye(2)) for r in rs]
    assert np.all(np.diff(ff) > 0) and np.all(np.diff(fs) > 0)


def test_fidelity_bad_gamma():
    with pytest.raises(UnphysicalError):
        fidelity_fock1(np.diag([1.0, -1.0]))
    with pytest.raises(UnphysicalError):
        fidelity_superposition(np.zeros((2, 2)))
    # a sub-vacuum kernel gives a "fidelity" above one, which is an error
    with pytest.raises(UnphysicalError):
        fidelity_fock1(0.5 * np.eye(2))


def test_no_cloning():
    assert no_cloning_pass(1.0)
    assert not no_cloning_pass(NO_CLONING)
    assert not no_cloning_pass(0.4375)
    with pytest.raises(ValueError):
        no_cloning_pass(1.5)


def test_report_from_squeezed_state():
    B, Bp, C = tmsv_blocks(1.0, sign=-1.0)
    rep = teleportation_report(assemble(B, Bp, C), B, Bp, C)
    assert rep.e_n == pytest.approx(2.0, abs=1e-9)
    assert rep.beats_no_cloning_superposition == (rep.fidelity_superposition > 2 / 3)
    assert 0 <= rep.fidelity_fock <= 1


def test_en_continuity_at_working_point():
    from eomech.dynamics import build_model
    from eomech.params import derive_couplings, default_params
    from eomech.spectra import FilterSpec, output_cm_lyapunov
    p = default_params()
    m = build_model(derive_couplings(p), p)
    cov = output_cm_lyapunov(m, FilterSpec.from_normalized(20.0, -1.0, 1.0, 1.0))
    base, _ = log_negativity(cov.v_reduced, cov.B, cov.B_prime, cov.C)
    rng = np.random.default_rng(3)
    for _ in range(20):
        X = rng.normal(size=(4, 4))
        v = cov.v_reduced + 1e-8 * (X + X.T) / 2
        vr, B, Bp, C = reduce(np.pad(v, ((2, 0), (2, 0))))
        assert abs(log_negativity(vr, B, Bp, C)[0] - base) < 1e-6
