import math

import numpy as np
import pytest
from scipy.integrate import quad

from eomech.dynamics import UnstableModelError, build_model, lyapunov_cm
from eomech.oracles import decoupled_model, random_filters, random_stable_model
from eomech.params import derive_couplings, default_params
from eomech.spectra import (FilterSpec, assemble, check_physical, filter_ft, output_cm,
                            output_cm_lyapunov, physicality_margin, reduce, spectral_cm,
                            transfer_ft)


@pytest.fixture(scope="module")
def working_model():
    p = default_params()
    return build_model(derive_couplings(p), p)


def unit_filters(eps=20.0, om_c=-1.0, om_w=1.0):
    return FilterSpec.from_normalized(eps, om_c, om_w, 1.0)


class TestFilter:
    def test_on_resonance(self):
        assert filter_ft(3.0, 0.4, 0.4) == pytest.approx(math.sqrt(6.0), abs=1e-15)

    @pytest.mark.parametrize("tau,om", [(1.0, 0.0), (20.0, -1.0), (0.05, 2.0)])
    def test_parseval(self, tau, om):
        f = lambda w: abs(filter_ft(tau, om, w))**2 / (2 * math.pi)
        val, _ = quad(f, -np.inf, np.inf, points=None, epsabs=1e-12, limit=500)
        assert val == pytest.approx(1.0, abs=1e-8)

    def test_asymptotic(self):
        tau, om = 2.0, 1.0
        for w in (1e6, -1e6):
            assert abs(filter_ft(tau, om, w)) * abs(w - om) == pytest.approx(math.sqrt(2 / tau), rel=1e-9)

    def test_matches_time_domain_transform(self):
        tau, om, w = 2.0, -0.7, 0.3
        g = lambda t: math.sqrt(2 / tau) * np.exp(-(1 / tau + 1j * om) * t) * np.exp(1j * w * t)
        re, _ = quad(lambda t: g(t).real, 0, 80 * tau, limit=400)
        im, _ = quad(lambda t: g(t).imag, 0, 80 * tau, limit=400)
        assert filter_ft(tau, om, w) == pytest.approx(re + 1j * im, abs=1e-9)


class TestTransfer:
    def test_mechanical_block_identity(self):
        T = transfer_ft(np.linspace(-3, 3, 7), unit_filters(), (0.04, 0.04))
        assert np.all(T[:, :2, :2] == np.eye(2))

    def test_reality(self):
        w = np.linspace(0.1, 3.0, 9)
        T = transfer_ft(w, unit_filters(5.0), (0.04, 0.1))
        Tm = transfer_ft(-w, unit_filters(5.0), (0.04, 0.1))
        np.testing.assert_allclose(Tm, np.conj(T), atol=1e-15)

    def test_sparsity(self):
        T = transfer_ft(np.array([0.37]), unit_filters(), (0.04, 0.04))[0]
        mask = np.zeros((6, 6), bool)
        mask[:2, :2] = np.eye(2, dtype=bool)
        mask[2:4, 2:4] = True
        mask[4:, 4:] = True
        assert np.all(T[~mask] == 0)
        assert np.all(T[mask] != 0)

    def test_entries_are_transforms_of_real_and_imaginary_filter(self):
        # independent route: numerical Fourier transform of sqrt(2k) Re/Im g(t)
        tau, om, kappa, w = 3.0, -1.0, 0.04, 0.8
        T = transfer_ft(np.array([w]), unit_filters(tau, om, 0.5), (kappa, 0.04))[0]
        g = lambda t: math.sqrt(2 / tau) * np.exp(-(1 / tau + 1j * om) * t)

        def ft(h):
            re, _ = quad(lambda t: h(t) * math.cos(w * t), 0, 60 * tau, limit=500)
            im, _ = quad(lambda t: h(t) * math.sin(w * t), 0, 60 * tau, limit=500)
            return re + 1j * im

        R = ft(lambda t: math.sqrt(2 * kappa) * g(t).real)
        I = ft(lambda t: math.sqrt(2 * kappa) * g(t).imag)
        assert T[2, 2] == pytest.approx(R, abs=1e-9)
        assert T[3, 3] == pytest.approx(R, abs=1e-9)
        assert T[3, 2] == pytest.approx(I, abs=1e-9)
        assert T[2, 3] == pytest.approx(-I, abs=1e-9)


class TestOutputCM:
    @pytest.mark.parametrize("eps,om_c,om_w", [(1.0, -1.0, 1.0), (30.0, 0.5, -1.7), (0.2, 2.0, 0.0)])
    def test_decoupled_vacuum(self, eps, om_c, om_w):
        cov = output_cm(decoupled_model(0.04, 0.0), unit_filters(eps, om_c, om_w))
        np.testing.assert_allclose(cov.v_reduced, 0.5 * np.eye(4), atol=1e-9)

    def test_decoupled_thermal_microwave(self):
        cov = output_cm(decoupled_model(0.1, 3.0), unit_filters(7.0, -0.3, 1.2))
        np.testing.assert_allclose(cov.B_prime, 3.5 * np.eye(2), atol=1e-8)
        np.testing.assert_allclose(cov.C, 0.0, atol=1e-9)

    @pytest.mark.parametrize("eps", [10.0, 1.0, 0.1, 0.01])
    def test_wideband_limit(self, eps):
        cov = output_cm(decoupled_model(0.05, 1.5), unit_filters(eps, 0.0, 0.0))
        np.testing.assert_allclose(np.diag(cov.B_prime), 2.0, atol=1e-8)

    def test_matches_time_domain_route(self, working_model):
        for eps, om_c in [(1.0, -1.0), (20.0, -0.6), (100.0, -1.0), (5.0, 0.0)]:
            f = FilterSpec.from_normalized(eps, om_c, 1.0, 1.0)
            a = output_cm(working_model, f)
            b = output_cm_lyapunov(working_model, f)
            np.testing.assert_allclose(a.v_out, b.v_out, atol=1e-8)
            assert a.quad_error <= 1e-7

    @pytest.mark.parametrize("seed", range(6))
    def test_random_models_match_time_domain_route(self, seed):
        rng = np.random.default_rng(100 + seed)
        m, f = random_stable_model(rng), random_filters(rng)
        a = output_cm(m, f)
        np.testing.assert_allclose(a.v_out, output_cm_lyapunov(m, f).v_out, atol=1e-7)
        check_physical(a)
        assert np.min(np.diag(a.v_reduced)) >= 0.5 - 1e-8

    def test_entangling_cross_block(self, working_model):
        cov = output_cm(working_model, FilterSpec.from_normalized(100.0, -1.0, 1.0, 1.0))
        assert np.linalg.det(cov.C) < 0
        assert np.linalg.det(cov.B) > 0 and np.linalg.det(cov.B_prime) > 0

    def test_symmetric_and_physical(self, working_model):
        cov = output_cm(working_model, unit_filters())
        assert np.array_equal(cov.v_out, cov.v_out.T)
        assert physicality_margin(cov.v_reduced) >= -1e-8

    def test_deterministic(self, working_model):
        a = output_cm(working_model, unit_filters())
        b = output_cm(working_model, unit_filters())
        assert a.v_out.tobytes() == b.v_out.tobytes()

    def test_unstable_rejected(self):
        p = default_params()
        p = p.replace(delta_c=-p.delta_c, delta_w=-p.delta_w)
        m = build_model(derive_couplings(p), p)
        with pytest.raises(UnstableModelError):
            output_cm(m, unit_filters())


def test_spectral_cm_matches_lyapunov(working_model):
    V, err = spectral_cm(working_model)
    np.testing.assert_allclose(V, lyapunov_cm(working_model), rtol=1e-8, atol=1e-10)


def test_reduce_identity():
    vr, B, Bp, C = reduce(np.eye(6))
    assert np.array_equal(vr, np.eye(4)) and np.array_equal(B, np.eye(2))
    assert np.array_equal(Bp, np.eye(2)) and np.array_equal(C, np.zeros((2, 2)))


def test_reduce_roundtrip():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(6, 6))
    v = X @ X.T
    vr, B, Bp, C = reduce(v)
    assert np.array_equal(assemble(B, Bp, C), vr)
    assert np.array_equal(C, v[2:4, 4:6])


def test_filter_spec_epsilon():
    f = FilterSpec.from_normalized(20.0, -1.0, 1.0, 2 * math.pi * 1e7)
    assert f.epsilon(2 * math.pi * 1e7) == pytest.approx((20.0, 20.0))
    with pytest.raises(ValueError):
        FilterSpec(0.0, 1.0, 0.0, 0.0)
