import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import dblquad

from oracles import coherent_table, dephased_table, thermal_diagonal
from opgen.engine import (OpgParams, PerturbativeCoefficients, TwoModeState, auto_cutoff,
                          gpa_displaced_thermal_correction, gpa_phase_sensitive_correction, gpa_state,
                          perturbative_state, validity_report)
from opgen.errors import DomainError, PreconditionError
from opgen.measures import negativity
from opgen.pumps import (Coherent, DephasedCoherent, DisplacedThermal, PhaseAveragedCoherent,
                         PhaseSensitiveNoisyCoherent, Thermal)


def brute_entry(pump, gt, n, m, reach):
    """rho^{nm} by a Cartesian 2-D integral of the point-wise GPA kernel."""
    def kern(y, x, part):
        r = math.hypot(x, y)
        t = math.tanh(gt * r)
        v = pump.p_value(np.array(r), np.array(math.atan2(y, x)))
        z = float(v) * (1 - t * t) * t ** (n + m) * (-1j * complex(x, y) / r if r else 0) ** (n - m)
        return z.real if part == 0 else z.imag
    cx, cy = pump.amplitude * math.cos(pump.theta0), pump.amplitude * math.sin(pump.theta0)
    re = dblquad(kern, cx - reach, cx + reach, cy - reach, cy + reach, args=(0,), epsabs=1e-11)[0]
    im = dblquad(kern, cx - reach, cx + reach, cy - reach, cy + reach, args=(1,), epsabs=1e-11)[0]
    return complex(re, im)


# --- perturbative ----------------------------------------------------------

def test_perturbative_coherent():
    a, t0, gt = 3.0, 0.4, 0.02
    rho = perturbative_state(Coherent(a, t0), OpgParams(gt)).coefficients
    alpha = a * np.exp(1j * t0)
    assert rho[0, 0] == pytest.approx(1 - (gt * a) ** 2)
    assert rho[1, 1] == pytest.approx((gt * a) ** 2)
    assert rho[0, 1] == pytest.approx(1j * gt * np.conj(alpha))
    assert rho[0, 2] == pytest.approx(-(gt**2) * np.conj(alpha) ** 2)
    assert rho[2, 2] == 0 and rho[1, 2] == 0
    assert np.trace(rho).real == 1.0


def test_perturbative_thermal_and_vacuum():
    rho = perturbative_state(Thermal(2.0), OpgParams(0.05)).coefficients
    assert np.count_nonzero(rho - np.diag(np.diag(rho))) == 0
    assert rho[1, 1].real == pytest.approx(0.05**2 * 2.0)
    vac = perturbative_state(Coherent(5.0), OpgParams(0.0)).coefficients
    assert vac[0, 0] == 1 and np.count_nonzero(vac) == 1


def test_perturbative_warns_outside_regime():
    with pytest.warns(UserWarning, match="perturbative"):
        perturbative_state(Coherent(10.0), OpgParams(0.05))


def test_cauchy_schwarz_guard():
    with pytest.raises(PreconditionError):
        PerturbativeCoefficients(1.0 + 0j, 0.5, 0j)
    PerturbativeCoefficients(1.0 + 0j, 0.5, 0j, signed=True)


def test_params_validation():
    with pytest.raises(DomainError):
        OpgParams(-0.1)
    with pytest.raises(DomainError):
        OpgParams(0.1, 0)
    with pytest.raises(DomainError):
        OpgParams(float("nan"))


# --- GPA ---------------------------------------------------------------------

def test_gpa_coherent_example():
    s = gpa_state(Coherent(2.0, 0.9), OpgParams(0.1))
    assert np.allclose(s.coefficients, coherent_table(2.0, 0.9, 0.1, s.cutoff), atol=1e-15)
    assert s.coefficients[1, 0] == pytest.approx(-1j * np.exp(0.9j) * math.tanh(0.2) / math.cosh(0.2) ** 2)
    assert s.tail_bound < 1e-9


def test_gpa_thermal_is_diagonal_and_matches_quadrature():
    s = gpa_state(Thermal(3.0), OpgParams(0.1))
    off = s.coefficients - np.diag(np.diag(s.coefficients))
    assert np.all(off == 0)
    for n in range(6):
        assert s.coefficients[n, n].real == pytest.approx(thermal_diagonal(3.0, 0.1, n), abs=1e-12)


def test_gpa_dephased_closed_form():
    s = gpa_state(DephasedCoherent(4.0, 1.1, 0.35), OpgParams(0.05))
    assert np.allclose(s.coefficients, dephased_table(4.0, 1.1, 0.35, 0.05, s.cutoff), atol=1e-14)


def test_gpa_phase_averaged_is_dephasing_limit():
    s = gpa_state(PhaseAveragedCoherent(3.0), OpgParams(0.05))
    ref = np.diag(np.diag(coherent_table(3.0, 0.0, 0.05, s.cutoff)))
    assert np.allclose(s.coefficients, ref, atol=1e-15)


@pytest.mark.parametrize("n,m", [(0, 0), (1, 0), (2, 0), (2, 1)])
def test_gpa_quadrature_route_against_cartesian_integral(n, m):
    pump = DisplacedThermal(2.0, 0.5, 0.4)
    s = gpa_state(pump, OpgParams(0.15))
    assert s.coefficients[n, m] == pytest.approx(brute_entry(pump, 0.15, n, m, 5.0), abs=1e-8)


def test_gpa_phase_sensitive_route_against_cartesian_integral():
    pump = PhaseSensitiveNoisyCoherent(2.0, 0.3, 0.6, 0.2, 1.0)
    s = gpa_state(pump, OpgParams(0.15))
    for n, m in [(1, 0), (2, 0)]:
        assert s.coefficients[n, m] == pytest.approx(brute_entry(pump, 0.15, n, m, 5.0), abs=1e-8)


PUMPS = [Coherent(3.0, 0.2), Thermal(4.0), DisplacedThermal(3.0, 0.8, 1.0),
         DephasedCoherent(3.0, 0.5, 0.4), PhaseAveragedCoherent(2.5),
         PhaseSensitiveNoisyCoherent(3.0, 0.1, 0.8, 0.3, 0.6)]


@pytest.mark.parametrize("pump", PUMPS, ids=lambda p: type(p).__name__)
def test_state_invariants(pump):
    s = gpa_state(pump, OpgParams(0.08))
    assert s.check(trace_tol=1e-8) == []
    rho = s.coefficients
    assert np.allclose(rho, rho.conj().T, atol=0)
    assert abs(s.trace() + s.tail_bound - 1) < 1e-8
    assert s.tail_bound < 1e-9


@pytest.mark.parametrize("pump", PUMPS, ids=lambda p: type(p).__name__)
def test_perturbative_and_gpa_agree_in_the_corner(pump):
    c11 = pump.moment(1, 1).real
    gt = 0.05 / math.sqrt(c11)
    pert = perturbative_state(pump, OpgParams(gt)).coefficients
    full = gpa_state(pump, OpgParams(gt)).coefficients[:3, :3]
    # the o(g^2 t^2) entries were set to zero; compare the rest
    mask = np.ones((3, 3), bool)
    mask[1, 2] = mask[2, 1] = mask[2, 2] = False
    assert np.max(np.abs(pert - full)[mask]) <= 5 * 0.05**3


@settings(max_examples=12, deadline=None)
@given(st.floats(0.5, 4.0), st.floats(0, 2 * math.pi), st.floats(0.1, 2.0), st.floats(-3, 3))
def test_phase_covariance(a, t0, nbar, delta):
    gt = 0.1
    s1 = gpa_state(DisplacedThermal(a, t0, nbar), OpgParams(gt, 8)).coefficients
    s2 = gpa_state(DisplacedThermal(a, t0 + delta, nbar), OpgParams(gt, 8)).coefficients
    n = np.arange(9)
    rot = np.exp(1j * delta * (n[:, None] - n[None, :]))
    assert np.allclose(s2, s1 * rot, atol=1e-8)


def test_cutoff_only_moves_the_tail():
    pump = DisplacedThermal(3.0, 0.4, 0.8)
    small = gpa_state(pump, OpgParams(0.1, 6))
    big = gpa_state(pump, OpgParams(0.1, 12))
    assert np.allclose(big.coefficients[:7, :7], small.coefficients, atol=1e-11)
    assert big.tail_bound < small.tail_bound
    assert small.trace() + small.tail_bound == pytest.approx(1.0, abs=1e-9)


def test_auto_cutoff_and_cap():
    n = auto_cutoff(Coherent(5.0), 0.1)
    t = math.tanh(0.5)
    neg = lambda k: (1 + t) * t ** (k + 1) / (1 - t)
    # smallest N bounding both the population and the negativity tails
    assert t ** (2 * n + 2) < 1e-9 and neg(n) < 1e-9 <= neg(n - 1)
    nt = auto_cutoff(Thermal(25.0), 0.1)
    tail = thermal_diagonal(25.0, 0.1, nt + 1) * (1 + 1 / 0.2)
    assert tail < 1e-8
    with pytest.warns(UserWarning, match="capped"):
        assert auto_cutoff(Coherent(50.0), 0.2, cap=50) == 50
    assert gpa_state(Coherent(1.0), OpgParams(0.0)).coefficients[0, 0] == 1


def test_serialisation_round_trip(tmp_path):
    s = gpa_state(DisplacedThermal(2.0, 0.3, 0.5), OpgParams(0.1, 5))
    s.write(tmp_path / "st")
    back = TwoModeState.read(tmp_path / "st")
    assert np.array_equal(back.coefficients, s.coefficients)
    assert back.tail_bound == s.tail_bound and back.form_tag == "GPA" and back.gt == 0.1
    assert back.pump == s.pump
    head = (tmp_path / "st.csv").read_text().splitlines()[0]
    assert head == "n,m,re,im"


# --- validity ---------------------------------------------------------------

def test_validity_examples():
    rep = validity_report(Coherent(20.0), OpgParams(0.01))
    assert rep.all_pass
    assert rep.exp_condition == pytest.approx(0.01 * math.exp(0.8))
    assert round(rep.exp_condition, 4) == 0.0223
    assert rep.trace_distance_estimate == pytest.approx(1e-4 * (math.exp(0.8) - 1))
    assert rep.downconverted_photons == pytest.approx(2 * math.sinh(0.2) ** 2)
    bad = validity_report(Coherent(20.0), OpgParams(0.3))
    assert bad.exp_condition > 10 and not bad.slowly_varying and not bad.all_pass
    vac = validity_report(Coherent(0.0), OpgParams(0.01))
    assert not vac.high_intensity
    assert set(rep.flags()) == {"high_intensity", "no_depletion", "small_gt", "slowly_varying"}


# --- expansions ------------------------------------------------------------

def test_displaced_thermal_correction_limits():
    s0 = gpa_displaced_thermal_correction(5.0, 0.3, 0.0, OpgParams(0.06))
    ref = gpa_state(Coherent(5.0, 0.3), OpgParams(0.06, s0.cutoff))
    assert np.allclose(s0.coefficients, ref.coefficients, atol=1e-15)
    with pytest.raises(PreconditionError):
        gpa_displaced_thermal_correction(2.0, 0.0, 1.0, OpgParams(0.1))
    with pytest.raises(DomainError):
        gpa_displaced_thermal_correction(2.0, 0.0, -0.1, OpgParams(0.1))


def test_displaced_thermal_correction_against_quadrature():
    a, nbar, gt = 10.0, 10.0, 0.03  # nbar / a^2 = 0.1
    corr = gpa_displaced_thermal_correction(a, 0.7, nbar, OpgParams(gt, 20))
    full = gpa_state(DisplacedThermal(a, 0.7, nbar), OpgParams(gt, 20))
    assert np.max(np.abs(corr.coefficients - full.coefficients)) <= 1e-3


def test_correction_error_shrinks_with_noise():
    a, gt = 10.0, 0.03
    errs = []
    for nbar in (20.0, 10.0, 5.0):
        corr = gpa_displaced_thermal_correction(a, 0.0, nbar, OpgParams(gt, 20)).coefficients
        full = gpa_state(DisplacedThermal(a, 0.0, nbar), OpgParams(gt, 20)).coefficients
        errs.append(np.max(np.abs(corr - full)))
    assert errs[0] > errs[1] > errs[2]
    # second-order remainder: halving the noise roughly quarters the error
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.3)


def test_phase_sensitive_isotropic_reduction():
    ps = gpa_phase_sensitive_correction(6.0, 0.4, 1.5, 1.5, 2.1, OpgParams(0.05))
    dt = gpa_displaced_thermal_correction(6.0, 0.4, 1.5, OpgParams(0.05))
    assert np.max(np.abs(ps.coefficients - dt.coefficients)) <= 1e-12


def test_phase_sensitive_against_quadrature():
    a, gt = 10.0, 0.03
    corr = gpa_phase_sensitive_correction(a, 0.2, 8.0, 2.0, 0.9, OpgParams(gt, 20))
    full = gpa_state(PhaseSensitiveNoisyCoherent(a, 0.2, 8.0, 2.0, 0.9), OpgParams(gt, 20))
    assert np.max(np.abs(corr.coefficients - full.coefficients)) <= 1e-3


def test_phase_sensitive_orientation():
    a, t0, gt = 6.0, 0.3, 0.05
    along = negativity(gpa_phase_sensitive_correction(a, t0, 3.0, 0.5, t0, OpgParams(gt)))
    across = negativity(gpa_phase_sensitive_correction(a, t0, 3.0, 0.5, t0 + math.pi / 2, OpgParams(gt)))
    assert along > across


@pytest.mark.parametrize("phi_off", [0.0, 0.5, 1.2])
def test_phase_sensitive_second_order_factor(phi_off):
    # |c02| under the corrected table: second-order negativity term
    a, n1, n2, t0 = 5.0, 2.0, 0.5, 0.4
    gt = 1e-4
    s = gpa_phase_sensitive_correction(a, t0, n1, n2, t0 + phi_off, OpgParams(gt, 4))
    c02 = abs(s.coefficients[2, 0]) / gt**2
    root = math.sqrt(1 + (n1 - n2) * math.cos(2 * phi_off) / a**2 + ((n1 - n2) / (2 * a**2)) ** 2)
    assert c02 == pytest.approx(a * a * root, rel=1e-3)


def test_kerr_husimi_route_matches_exact_moments_at_small_gt():
    # N -> gt |c01| + gt^2 |c02| with c_mn the exact normally ordered moments
    from opgen.husimi import band_moment, displaced_thermal_band, fock_cutoff_displaced_thermal, kerr_rotate_band
    from opgen.pumps import KerrModulated
    a, nbar, gk, gt = 19.0, 39.0, 0.009, 5e-4
    band = kerr_rotate_band(displaced_thermal_band(a, 0.0, nbar, fock_cutoff_displaced_thermal(a, nbar)), gk)
    ref = gt * abs(band_moment(band, 0, 1)) + gt * gt * abs(band_moment(band, 0, 2))
    pump = KerrModulated(DisplacedThermal(a, 0.0, nbar), gk, route="husimi")
    assert negativity(gpa_state(pump, OpgParams(gt))) == pytest.approx(ref, rel=2e-3)
