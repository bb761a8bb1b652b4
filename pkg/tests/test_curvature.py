import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncrpg.curvature import (
    Backtracking,
    ConstantStep,
    LevelSetBounds,
    backtracking_lambda_bounds,
    complexity_iterations,
    decrease_constant_M,
    lambda_delta,
    max_constant_step,
    pi_kappa,
    sigma_interval,
    sigma_kmax,
    stepsize_constants,
    zeta1,
    zeta2,
    zeta_delta,
)
from ncrpg.errors import DomainError, InvalidConfigError


def test_zeta1_examples():
    assert zeta1(0.5, 3.0) == 1.0
    assert zeta1(-1.0, 0.0) == 1.0
    assert zeta1(-1.0, 2.0) == pytest.approx(2.0 / math.tanh(2.0), rel=1e-14)
    assert zeta1(-1.0, 2.0) == pytest.approx(2.0746, abs=1e-4)


def test_zeta2_examples():
    assert zeta2(-3.0, 10.0) == 1.0
    assert zeta2(1.0, math.pi / 2) == pytest.approx(0.0, abs=1e-15)
    assert zeta2(1.0, math.pi / 4) == pytest.approx(math.pi / 4, rel=1e-14)
    with pytest.raises(DomainError):
        zeta2(1.0, math.pi)


def test_sigma_interval_examples():
    assert sigma_interval(0.0, 0.0, 1.3) == 1.0
    assert sigma_interval(-1.0, 1.0, math.pi / 2) == pytest.approx((math.pi / 2) / math.tanh(math.pi / 2), rel=1e-14)
    # (pi/2) coth(pi/2) = 1.712689...
    assert sigma_interval(-1.0, 1.0, math.pi / 2) == pytest.approx(1.712689, abs=1e-6)
    assert sigma_interval(-2.0, 3.0, 0.0) == 1.0


def test_pi_kappa_examples():
    assert pi_kappa(-2.0) == math.inf
    assert pi_kappa(0.0) == math.inf
    assert pi_kappa(4.0) == pytest.approx(math.pi / 2)
    assert pi_kappa(1.0) == pytest.approx(math.pi)


def _bounds(dh=1.0, G=1.0, L=1.0, diam=1.0):
    return LevelSetBounds(h_lower=0.0, h_upper=dh, grad_g_upper=G, L_g=L, diameter=diam)


def test_lambda_delta_examples():
    assert lambda_delta(0.01, _bounds(), 0.0) == math.inf
    assert lambda_delta(0.01, _bounds(G=0.0), 1.0) == math.inf
    G = 1.7
    lam = lambda_delta(0.01, _bounds(dh=0.0, G=G), 1.0)
    assert lam == pytest.approx(math.pi / (2 * 2.01 * G), rel=1e-14)


def test_lambda_delta_defining_equality():
    lam = lambda_delta(0.01, _bounds(), 1.0)
    rhs = (math.pi / (2 * 2.01)) ** 2
    assert 2 * lam * 1.0 + lam * lam == pytest.approx(rhs, rel=1e-12)


def test_zeta_delta_examples():
    assert zeta_delta(0.01, -5.0) == 1.0
    assert zeta_delta(1e9, 1.0) == pytest.approx(1.0, abs=1e-12)
    z = zeta_delta(0.01, 1.0)
    assert z > 0
    assert z == pytest.approx(zeta2(1.0, math.pi / 2.01), rel=1e-12)
    x = math.pi / 2.01
    assert z == pytest.approx(x / math.tan(x), rel=1e-12)


def test_decrease_constant_examples():
    assert decrease_constant_M(ConstantStep(0.5), math.inf, 1.0, 1.0) == pytest.approx(1 / 8)
    bt = Backtracking(1e-6, beta=0.1, eta=0.5)
    assert decrease_constant_M(bt, 10.0, 1.0, 1.0) == pytest.approx(0.1 * 1e-6)
    small = [decrease_constant_M(ConstantStep(lam), math.inf, 1.0, 1.0) for lam in (1e-2, 1e-4, 1e-8)]
    assert small[0] > small[1] > small[2] > 0
    assert small[2] < 1e-8


def test_decrease_constant_rejects_inadmissible():
    with pytest.raises(InvalidConfigError):
        decrease_constant_M(ConstantStep(1.0), math.inf, 1.0, 1.0)
    with pytest.raises(InvalidConfigError):
        decrease_constant_M(Backtracking(1.0, beta=0.5, eta=0.5), math.inf, 1.0, 1.0)
    with pytest.raises(InvalidConfigError):
        Backtracking(1.0, beta=0.1, eta=1.0)
    with pytest.raises(InvalidConfigError):
        ConstantStep(0.0)


def test_sigma_kmax_examples():
    flat = LevelSetBounds(0.0, 1.0, 1.0, 1.0, diameter=1.0)
    assert sigma_kmax(0.0, 0.0, 0.01, 1.0, flat) == 1.0
    s = 2 * math.pi / 2.01
    assert sigma_kmax(0.0, 1.0, 0.01, 1.0, flat) == pytest.approx(sigma_interval(0.0, 1.0, s))
    assert sigma_kmax(-1.0, -1.0, 0.01, 1.0, flat) == pytest.approx(2.0 / math.tanh(2.0), rel=1e-14)


def test_complexity_examples():
    assert complexity_iterations(1.0, 1.0, 1.0, 1.0, f0=2.0, f_opt=2.0, t=1.0) == 0
    assert complexity_iterations(1.0, 1.0, 1.0, 1.0, f0=1.0, f_opt=0.0, t=1.0) == 3
    a = complexity_iterations(1e-2, 1.0, 1.0, 1.0, f0=1.0, f_opt=0.0, t=1.0)
    b = complexity_iterations(5e-3, 1.0, 1.0, 1.0, f0=1.0, f_opt=0.0, t=1.0)
    assert (b + 1) == pytest.approx(4 * (a + 1), rel=1e-3)


def test_stepsize_constants_and_max_step():
    bounds = _bounds(dh=0.2, G=0.5, L=1.0)
    lam = max_constant_step(bounds, 1.0)
    c = stepsize_constants(ConstantStep(lam), bounds, 0.0, 1.0)
    assert c.M > 0 and 0 < c.zeta_delta <= 1
    with pytest.raises(InvalidConfigError):
        stepsize_constants(ConstantStep(lam / 0.98), bounds, 0.0, 1.0)


def test_backtracking_bounds_order():
    bt = Backtracking(1.0, beta=0.1, eta=0.5)
    lo, hi = backtracking_lambda_bounds(bt, 2.0, 1.0, 4.0)
    assert lo == pytest.approx(0.5 * 0.8 / 4.0)
    assert hi == pytest.approx(0.8 / 4.0)
    assert lo <= hi


def test_level_set_bounds_validation():
    with pytest.raises(InvalidConfigError):
        LevelSetBounds(1.0, 0.0, 1.0, 1.0)
    with pytest.raises(InvalidConfigError):
        LevelSetBounds(0.0, 1.0, -1.0, 1.0)
    with pytest.raises(InvalidConfigError):
        LevelSetBounds(0.0, 1.0, 1.0, 0.0)


# -- properties ----------------------------------------------------------------------

kappas = st.floats(min_value=-10, max_value=10, allow_nan=False)


@given(kappas, st.floats(min_value=0, max_value=20))
def test_property_zeta1_at_least_one(k, s):
    assert zeta1(k, s) >= 1.0 - 1e-15


@given(st.floats(min_value=-10, max_value=10), st.floats(min_value=0, max_value=0.999))
def test_property_zeta2_at_most_one(k, frac):
    s = frac * pi_kappa(k) if k > 0 else frac * 20
    assert zeta2(k, s) <= 1.0 + 1e-15


@given(kappas, kappas, st.floats(min_value=0, max_value=0.999))
def test_property_sigma_at_least_one(k1, k2, frac):
    s = frac * pi_kappa(k2) if k2 > 0 else frac * 20
    assert sigma_interval(k1, k2, s) >= 1.0 - 1e-15


@pytest.mark.parametrize("kappa", [-3.0, -1.0, 1.0, 2.0])
def test_continuity_dense_sampling(kappa):
    hi = 0.99 * pi_kappa(kappa) if kappa > 0 else 5.0
    s = np.linspace(0.0, hi, 20_001)
    f = zeta1 if kappa < 0 else zeta2
    jumps = [abs(f(kappa, x + 1e-10) - f(kappa, x)) for x in s]
    assert max(jumps) < 1e-6
    # across the series cutoff the two branches agree
    eps = np.array([9.99e-5, 1.0001e-4]) / math.sqrt(abs(kappa))
    a, b = (f(kappa, e) for e in eps)
    assert abs(a - b) < 1e-6


@given(
    st.floats(min_value=1e-3, max_value=1.0),
    st.floats(min_value=0.0, max_value=5.0),
    st.floats(min_value=1e-3, max_value=5.0),
    st.floats(min_value=0.1, max_value=4.0),
)
def test_property_lambda_delta_equality(delta, dh, G, kmax):
    lam = lambda_delta(delta, _bounds(dh=dh, G=G), kmax)
    lhs = 2 * lam * dh + lam * lam * G * G
    rhs = (pi_kappa(kmax) / (2 * (2 + delta))) ** 2
    assert lhs == pytest.approx(rhs, rel=1e-10)


@given(st.floats(min_value=0.01, max_value=0.99), st.floats(min_value=0.1, max_value=10.0))
def test_property_M_positive_constant(frac, L):
    zd = zeta_delta(0.01, 1.0)
    lam = frac * zd / L
    assert decrease_constant_M(ConstantStep(lam), math.inf, zd, L) > 0


@given(st.floats(min_value=1e-4, max_value=10.0), st.floats(min_value=0.01, max_value=0.99),
       st.floats(min_value=0.01, max_value=0.99))
def test_property_M_positive_backtracking(s, beta_frac, eta):
    zd = zeta_delta(0.01, 1.0)
    bt = Backtracking(s, beta=beta_frac * zd / 2, eta=eta)
    assert decrease_constant_M(bt, 1.0, zd, 2.0) > 0
