import math

import numpy as np
import pytest

from eomech import quadrature
from eomech.quadrature import QuadratureError, integrate, integrate_real_line


def test_rule_weights():
    assert quadrature.KRONROD_W.sum() == pytest.approx(2.0, abs=1e-15)
    assert quadrature.GAUSS_W.sum() == pytest.approx(2.0, abs=1e-15)
    np.testing.assert_allclose(quadrature.NODES, -quadrature.NODES[::-1])


@pytest.mark.parametrize("deg", [0, 5, 19, 31])
def test_polynomials_exact(deg):
    r = integrate(lambda x: x**deg, [-1.0, 2.0])
    assert r.value == pytest.approx((2.0**(deg + 1) - (-1.0)**(deg + 1)) / (deg + 1), rel=1e-13)


def test_array_valued():
    r = integrate(lambda x: np.stack([np.sin(x), np.cos(x) * 1j], axis=1), [0.0, 1.0, math.pi])
    np.testing.assert_allclose(r.value, [2.0, 0.0], atol=1e-13)


def test_narrow_lorentzian_whole_line():
    w = 1e-4
    r = integrate_real_line(lambda x: (w / ((x - 0.7)**2 + w**2))[:, None], [0.7], 50.0)
    assert r.value[0] == pytest.approx(math.pi, abs=1e-9)
    assert r.max_error <= 1e-9


def test_budget_exhaustion_reports_estimate():
    with pytest.raises(QuadratureError) as err:
        integrate(lambda x: 1.0 / (x**2 + 1e-12), [-1.0, 1.0], atol=1e-12, max_evaluations=500)
    assert err.value.error > 1e-12


def test_bad_breakpoints():
    with pytest.raises(ValueError):
        integrate(lambda x: x, [1.0, 0.0])
