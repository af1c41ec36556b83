import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opgen.errors import ConvergenceError, DomainError
from opgen.special import (SeriesControl, bessel_i, bessel_j_sequence, dirichlet_kernel,
                           hermite_abs_at_zero, hyp1f1, ln_gamma, log_hyp1f1, sinc)

mp.mp.dps = 50


def test_ln_gamma_values():
    assert ln_gamma(1.0) == 0.0
    assert ln_gamma(5.0) == pytest.approx(math.log(24), rel=1e-14)
    assert ln_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), rel=1e-14)


@pytest.mark.parametrize("x", [0.0, -1.0, -0.5])
def test_ln_gamma_domain(x):
    with pytest.raises(DomainError):
        ln_gamma(x)


@given(st.floats(0.01, 300))
def test_ln_gamma_recurrence(x):
    assert ln_gamma(x + 1) == pytest.approx(ln_gamma(x) + math.log(x), rel=1e-12, abs=1e-12)


def test_hyp1f1_identities():
    assert hyp1f1(3.5, 2.0, 0.0) == 1.0
    assert hyp1f1(1.0, 1.0, 2.0) == pytest.approx(math.e**2, rel=1e-14)


def test_hyp1f1_against_high_precision_series():
    ref = float(mp.nsum(lambda k: mp.rf(2, k) / mp.rf(3, k) * mp.mpf(1.5) ** k / mp.factorial(k), [0, mp.inf]))
    assert hyp1f1(2.0, 3.0, 1.5) == pytest.approx(ref, rel=1e-13)


@pytest.mark.parametrize("a,b,z", [(400.0, 1.5, 0.5), (250.25, 11.0, 9.3), (3.0, 0.5, 80.0), (0.75, 2.0, 400.0)])
def test_log_hyp1f1_large_parameters(a, b, z):
    ref = float(mp.log(mp.hyp1f1(a, b, z)))
    assert log_hyp1f1(a, b, z) == pytest.approx(ref, rel=1e-11)


@settings(max_examples=40)
@given(st.floats(0.1, 20), st.floats(0.5, 20), st.floats(0.0, 8))
def test_kummer_transformation(a, b, z):
    lhs = hyp1f1(a, b, z)
    rhs = math.exp(z) * hyp1f1(b - a, b, -z)
    assert lhs == pytest.approx(rhs, rel=1e-9)


def test_hyp1f1_bad_b_and_budget():
    with pytest.raises(DomainError):
        hyp1f1(1.0, -2.0, 1.0)
    with pytest.raises(ConvergenceError) as info:
        hyp1f1(1.0, 1.0, 50.0, SeriesControl(max_terms=5))
    assert info.value.best is not None


def test_bessel_i_values():
    assert bessel_i(0, 0.0) == 1.0
    assert bessel_i(3, 0.0) == 0.0
    assert bessel_i(0.5, 1.0) == pytest.approx(math.sqrt(2 / math.pi) * math.sinh(1.0), rel=1e-14)
    ref = float(mp.nsum(lambda k: 1 / (mp.factorial(k) * mp.factorial(k + 3)), [0, mp.inf]))  # (z/2)=1
    assert bessel_i(3, 2.0) == pytest.approx(ref, rel=1e-13)


def test_bessel_i_overflow_safe():
    v = bessel_i(2, 800.0)
    assert math.isfinite(v)
    assert v == pytest.approx(float(mp.besseli(2, 800) * mp.exp(-800)), rel=1e-10)
    with pytest.raises(DomainError):
        bessel_i(1, -1.0)
    with pytest.raises(DomainError):
        bessel_i(0.3, 1.0)


@given(st.integers(1, 30), st.floats(0.05, 60))
def test_bessel_i_recurrence(nu, z):
    lhs = bessel_i(nu - 1, z, scaled=True) - bessel_i(nu + 1, z, scaled=True)
    rhs = 2 * nu / z * bessel_i(nu, z, scaled=True)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-300)


def test_bessel_j_sequence_matches_mpmath():
    z = np.array([0.0, 0.3, 5.0, 47.5, 120.0])
    seq = bessel_j_sequence(60, z)
    for n in (0, 1, 7, 33, 60):
        for i, zi in enumerate(z):
            assert seq[n, i] == pytest.approx(float(mp.besselj(n, zi)), abs=1e-13)


def test_hermite_abs_at_zero():
    assert hermite_abs_at_zero(0) == 1
    assert hermite_abs_at_zero(1) == 0
    assert hermite_abs_at_zero(4) == 12
    for n in range(12):
        assert hermite_abs_at_zero(n) == abs(float(mp.hermite(n, 0)))


def test_dirichlet_kernel():
    assert dirichlet_kernel(3, 0.0) == 7
    assert dirichlet_kernel(3, 2 * math.pi) == pytest.approx(7)
    x = np.linspace(-7, 7, 101)
    assert np.allclose(dirichlet_kernel(0, x), 1.0)
    n = 4096
    grid = 2 * math.pi * (np.arange(n) + 0.5) / n
    assert np.sum(dirichlet_kernel(5, grid)) * 2 * math.pi / n == pytest.approx(2 * math.pi, abs=1e-9)


@given(st.integers(0, 40), st.floats(-20, 20))
def test_dirichlet_kernel_is_cosine_sum(k, x):
    ref = 1 + 2 * sum(math.cos(j * x) for j in range(1, k + 1))
    assert dirichlet_kernel(k, x) == pytest.approx(ref, abs=1e-8 * (2 * k + 1))


def test_sinc():
    assert sinc(0.0) == 1.0
    assert abs(sinc(math.pi)) < 1e-16
    assert sinc(0.5) == pytest.approx(float(mp.sin(0.5) / 0.5), rel=1e-15)
