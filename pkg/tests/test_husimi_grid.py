import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm
from scipy.special import ive

from opgen.errors import DomainError, PreconditionError
from opgen.grid import GridSpec, PolarGrid
from opgen.husimi import (HusimiHarmonics, band_moment, displaced_thermal_band,
                          fock_cutoff_displaced_thermal, kerr_rotate_band)

DIM = 90


def dense_displaced_thermal(a, phi, nbar, dim=DIM):
    """D(alpha) rho_th D(alpha)^+ built by matrix exponentials in a large space."""
    big = dim + 60
    ann = np.diag(np.sqrt(np.arange(1, big)), 1)
    alpha = a * np.exp(1j * phi)
    d = expm(alpha * ann.conj().T - np.conj(alpha) * ann)
    q = nbar / (nbar + 1)
    th = np.diag(q ** np.arange(big) / (nbar + 1))
    return (d @ th @ d.conj().T)[:dim, :dim]


def to_band(rho, dmax):
    n = rho.shape[0]
    band = np.zeros((dmax + 1, n), dtype=complex)
    for d in range(dmax + 1):
        band[d, : n - d] = np.diagonal(rho, d)
    return band


@pytest.mark.parametrize("a,phi,nbar", [(2.0, 0.3, 0.5), (3.5, -1.2, 2.0), (0.0, 0.0, 1.0)])
def test_band_matches_dense_construction(a, phi, nbar):
    band = displaced_thermal_band(a, phi, nbar, 40)
    ref = to_band(dense_displaced_thermal(a, phi, nbar), band.shape[0] - 1)[:, :41]
    for d in range(band.shape[0]):
        assert np.allclose(band[d, : 41 - d], ref[d, : 41 - d], atol=1e-11)


def test_band_trace_and_moments():
    a, phi, nbar = 4.0, 0.8, 1.5
    band = displaced_thermal_band(a, phi, nbar, fock_cutoff_displaced_thermal(a, nbar))
    assert band[0].real.sum() == pytest.approx(1.0, abs=1e-12)
    alpha = a * np.exp(1j * phi)
    assert band_moment(band, 0, 0) == pytest.approx(1.0, abs=1e-12)
    assert band_moment(band, 1, 1) == pytest.approx(a * a + nbar, rel=1e-12)
    assert band_moment(band, 1, 0) == pytest.approx(alpha, rel=1e-12)
    assert band_moment(band, 0, 1) == pytest.approx(np.conj(alpha), rel=1e-12)
    assert band_moment(band, 2, 1) == pytest.approx(alpha * (a * a + 2 * nbar), rel=1e-11)


def test_band_rejects_bad_input():
    with pytest.raises(DomainError):
        displaced_thermal_band(1.0, 0.0, 0.0, 10)
    with pytest.raises(DomainError):
        displaced_thermal_band(-1.0, 0.0, 1.0, 10)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 0.05), st.floats(0.5, 3.0))
def test_kerr_rotation_matches_dense_unitary(gk, a):
    rho = dense_displaced_thermal(a, 0.2, 0.7, 50)
    n = np.arange(50)
    u = np.diag(np.exp(-1j * gk * n * (n - 1)))
    ref = u @ rho @ u.conj().T
    band = kerr_rotate_band(to_band(rho, 49), gk)
    for d in (0, 1, 3):
        assert np.allclose(band[d, : 50 - d], np.diagonal(ref, d), atol=1e-13)
    assert np.allclose(band[0], to_band(rho, 0)[0])


def test_husimi_harmonics_reproduce_gaussian_p():
    a, phi, nbar = 3.0, 0.6, 1.2
    band = displaced_thermal_band(a, phi, nbar, fock_cutoff_displaced_thermal(a, nbar))
    h = HusimiHarmonics.from_band(band, nbar, 8.0, a)
    r = np.linspace(0.2, 7.5, 23)
    got = h.at(r, 6)
    x = 2 * r * a / nbar
    for j in range(7):
        ref = (2 / nbar) * np.exp(-((r - a) ** 2) / nbar) * ive(j, x) * np.exp(1j * j * phi)
        assert np.allclose(got[:, j], ref, atol=1e-7), j


def test_husimi_needs_noise():
    band = displaced_thermal_band(1.0, 0.0, 1.0, 20)
    with pytest.raises(PreconditionError):
        HusimiHarmonics.from_band(band, 0.0, 5.0, 1.0)
    with pytest.raises(DomainError):
        HusimiHarmonics.from_band(band, 1.0, 5.0, 1.0, smoothing=-0.1)


def test_smoothing_convolves_with_gaussian():
    # smoothing s on a displaced thermal P adds s to nbar
    a, phi, nbar, s = 2.0, 0.0, 0.8, 0.5
    band = displaced_thermal_band(a, phi, nbar, fock_cutoff_displaced_thermal(a, nbar))
    h = HusimiHarmonics.from_band(band, nbar, 7.0, a, smoothing=s)
    r = np.linspace(0.3, 6.0, 12)
    n2 = nbar + s
    ref = (2 / n2) * np.exp(-((r - a) ** 2) / n2) * ive(1, 2 * r * a / n2)
    assert np.allclose(h.at(r, 1)[:, 1], ref, atol=1e-7)


def test_cutoff_grows_with_noise_and_amplitude():
    base = fock_cutoff_displaced_thermal(5.0, 1.0)
    assert fock_cutoff_displaced_thermal(10.0, 1.0) > base
    assert fock_cutoff_displaced_thermal(5.0, 10.0) > base


def test_grid_quadrature_and_harmonics():
    spec = GridSpec(300, 64, 10.0)
    nbar = 2.0
    g = PolarGrid.from_function(lambda r, t: np.exp(-r * r / nbar) / (math.pi * nbar) * (1 + 0.3 * np.cos(2 * t - 0.4)), spec)
    assert g.total() == pytest.approx(1.0, abs=1e-4)
    # midpoint rule: second order in the radial step
    f = lambda r, t: np.exp(-r * r / nbar) / (math.pi * nbar) + 0 * t
    e1 = abs(PolarGrid.from_function(f, GridSpec(150, 8, 10.0)).total() - 1)
    e2 = abs(PolarGrid.from_function(f, GridSpec(300, 8, 10.0)).total() - 1)
    assert e1 / e2 == pytest.approx(4.0, rel=0.05)
    h = g.harmonics(3)
    p0 = np.exp(-g.radii**2 / nbar) / (math.pi * nbar)
    assert np.allclose(h[:, 0], 2 * math.pi * p0, atol=1e-12)
    assert np.allclose(h[:, 2], math.pi * 0.3 * p0 * np.exp(0.4j), atol=1e-12)
    assert np.allclose(h[:, 1], 0, atol=1e-12)
    with pytest.raises(DomainError):
        g.harmonics(32)


def test_grid_interpolation_and_validation():
    spec = GridSpec(50, 40, 5.0)
    g = PolarGrid.from_function(lambda r, t: r + np.cos(t), spec)
    assert g.interpolate(g.radii[3], g.angles[5]) == pytest.approx(g.values[3, 5])
    # linear in r, periodic in theta
    assert g.interpolate(2.0, 0.0) == pytest.approx(g.interpolate(2.0, 2 * math.pi))
    assert g.interpolate(2.02, g.angles[0]) == pytest.approx(3.02, abs=1e-12)
    with pytest.raises(DomainError):
        g.interpolate(6.0, 0.0)
    with pytest.raises(DomainError):
        PolarGrid(np.array([1.0, 0.5]), np.array([0.0, math.pi]), np.ones((2, 2)))
    with pytest.raises(DomainError):
        PolarGrid(np.array([0.5, 1.0]), np.array([0.0, 1.0]), np.ones((2, 2)))
    with pytest.raises(DomainError):
        GridSpec(1, 10, 1.0)
