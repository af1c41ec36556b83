import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import (coherent_linear_entropy_phase_averaged, coherent_negativity, coherent_variance,
                     dephased_variance, noisy_variance)
from opgen.engine import (OpgParams, PerturbativeCoefficients, TwoModeState,
                          gpa_displaced_thermal_correction, gpa_state, perturbative_state)
from opgen.errors import DomainError, PreconditionError
from opgen.measures import (REPORT_HEADER, EntanglementReport, linear_entropy, linear_entropy_perturbative,
                            negativity, negativity_perturbative, negativity_with_uncertainty,
                            noisy_quadrature_correction, quadrature_variance, squeezing_db,
                            thermal_entropy_bounds)
from opgen.phase import HistogramPhase
from opgen.pumps import (Coherent, DephasedCoherent, DisplacedThermal, PhaseAveragedCoherent, Ring,
                         Thermal)


def state(rho):
    return TwoModeState(np.asarray(rho, dtype=complex), 0.0, "GPA", 0.1)


def test_negativity_examples():
    assert negativity(gpa_state(Thermal(5.0), OpgParams(0.1))) == 0
    assert negativity(state(np.diag([0.5, 0.3, 0.2]))) == 0
    s = gpa_state(Coherent(2.0), OpgParams(0.1))
    assert negativity(s) == pytest.approx(0.245912, abs=5e-7)
    n, dn = negativity_with_uncertainty(s)
    assert abs(n - coherent_negativity(0.2)) <= dn + 1e-15 and dn < 1e-9


def test_negativity_is_lower_triangle_sum():
    rho = np.array([[0.5, 0.1j, 0.05], [-0.1j, 0.3, 0.02], [0.05, 0.02, 0.2]])
    assert negativity(state(rho)) == pytest.approx(0.1 + 0.05 + 0.02)
    # partial transpose of sum rho^{nm}|nn><mm| has -|rho^{nm}| on each off-diagonal pair
    dim = 3
    big = np.zeros((dim * dim, dim * dim), complex)
    for n in range(dim):
        for m in range(dim):
            big[n * dim + m, m * dim + n] += rho[n, m]  # |n m><m n| after transposing the idler
    ev = np.linalg.eigvalsh(big)
    assert -ev[ev < 0].sum() == pytest.approx(negativity(state(rho)))


def test_uncertainty_without_tail_info():
    rho = np.array([[0.9, 0.1], [0.1, 0.1]])
    assert negativity_with_uncertainty(state(rho))[1] == math.inf
    assert negativity_with_uncertainty(state(np.diag([0.9, 0.1])))[1] == 0.0


def test_perturbative_negativity_examples():
    a, gt = 4.0, 0.01
    c = PerturbativeCoefficients.from_pump(Coherent(a, 0.3))
    assert negativity_perturbative(c, gt) == pytest.approx(gt * a + (gt * a) ** 2)
    tp, tpp = 0.3, 1.4
    two = Ring(a, HistogramPhase([tp, tpp], [1e-9, 1e-9], [0.5, 0.5]))
    c2 = PerturbativeCoefficients(a * np.exp(-1j * tp) * 0.5 + a * np.exp(-1j * tpp) * 0.5, a * a,
                                  0.5 * a * a * (np.exp(-2j * tp) + np.exp(-2j * tpp)))
    ref = gt * a * abs(math.cos((tp - tpp) / 2)) + (gt * a) ** 2 * abs(math.cos(tp - tpp))
    assert negativity_perturbative(c2, gt) == pytest.approx(ref, rel=1e-12)
    assert negativity_perturbative(PerturbativeCoefficients(0j, 3.0, 0j), gt) == 0


def test_linear_entropy_examples():
    assert linear_entropy(gpa_state(Coherent(3.0), OpgParams(0.1))) <= 1e-9
    pa = gpa_state(PhaseAveragedCoherent(3.0), OpgParams(0.1))
    # 1 - 1/cosh(0.6) = 0.156449 (the often-quoted 0.15726 is a rounding slip)
    assert linear_entropy(pa) == pytest.approx(0.156449, abs=5e-7)
    assert linear_entropy(pa) == pytest.approx(coherent_linear_entropy_phase_averaged(0.3), abs=1e-9)
    c = PerturbativeCoefficients.from_pump(Thermal(1.0))
    assert linear_entropy_perturbative(c, 0.1) == pytest.approx(0.02)
    assert linear_entropy(perturbative_state(Thermal(1.0), OpgParams(0.1))) == pytest.approx(0.02, rel=0.02)


def test_linear_entropy_clamps_with_warning():
    with pytest.warns(UserWarning, match="clamped"):
        assert linear_entropy(state(np.diag([1.1, 0.0]))) == 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        linear_entropy(state(np.diag([1.0 + 1e-10, 0.0])))


def test_thermal_bounds():
    nbar, gt = 100.0, 0.05
    s = gpa_state(Thermal(nbar), OpgParams(gt))
    lower, upper = thermal_entropy_bounds(nbar, gt, s.cutoff)
    assert np.all(np.diag(s.coefficients).real >= lower)
    assert linear_entropy(s) <= upper
    low0, _ = thermal_entropy_bounds(1e-6, 1e-4, 0)
    assert low0[0] == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DomainError):
        thermal_entropy_bounds(0.0, 0.1, 3)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 50.0), st.floats(0.01, 0.2))
def test_thermal_bound_property(nbar, gt):
    s = gpa_state(Thermal(nbar), OpgParams(gt, 40))
    lower, upper = thermal_entropy_bounds(nbar, gt, 40)
    diag = np.diag(s.coefficients).real
    resolved = diag > 1e-13  # adaptive quadrature is absolute-accurate only
    assert np.all(diag[resolved] >= lower[resolved] * (1 - 1e-9))
    assert linear_entropy(s) <= upper + 1e-12


@pytest.mark.parametrize("nbar,gt", [(1.0, 0.03125), (10.0, 0.1)])
def test_thermal_bound_against_precise_diagonal(nbar, gt):
    from oracles import thermal_diagonal
    lower, _ = thermal_entropy_bounds(nbar, gt, 40)
    for m in range(0, 41, 4):
        assert thermal_diagonal(nbar, gt, m, dps=40) >= lower[m]


def test_quadrature_variance_closed_forms():
    assert quadrature_variance(gpa_state(Coherent(1.0), OpgParams(0.0))) == 1.0
    a = 5.0
    gt = 0.5 / a
    s = gpa_state(Coherent(a, math.pi / 2), OpgParams(gt))
    assert quadrature_variance(s) == pytest.approx(0.36788, abs=5e-6)
    assert quadrature_variance(s) == pytest.approx(coherent_variance(0.5), abs=1e-9)
    for dth in (0.1, 0.3, 0.8):
        d = gpa_state(DephasedCoherent(a, math.pi / 2, dth), OpgParams(gt))
        assert quadrature_variance(d) == pytest.approx(dephased_variance(0.5, dth), abs=1e-9)


def test_squeezing_db():
    assert squeezing_db(1.0) == 0.0 and str(squeezing_db(1.0)) == "0.0"
    assert squeezing_db(10 ** -0.8) == pytest.approx(8.0)
    x = 0.4 * math.log(10)
    assert x == pytest.approx(0.9210, abs=5e-5)
    s = gpa_state(Coherent(10.0, math.pi / 2), OpgParams(x / 10))
    assert squeezing_db(quadrature_variance(s)) == pytest.approx(8.0, abs=1e-7)
    for r in (0.714, 0.967):  # experimental 6.2 to 8.4 dB
        assert 6.2 - 0.01 < squeezing_db(math.exp(-2 * r)) < 8.4 + 0.01
    with pytest.raises(DomainError):
        squeezing_db(0.0)


def test_noisy_quadrature_correction():
    a = 10.0
    assert noisy_quadrature_correction(a, 0.0, 0.03) == pytest.approx(math.exp(-0.6))
    nbar = 10.0
    for x in np.linspace(0.05, 1.2, 8):
        v = noisy_quadrature_correction(a, nbar, x / a)
        assert v == pytest.approx(noisy_variance(a, nbar, x / a), rel=1e-14)
        assert v > coherent_variance(x)
    s = gpa_displaced_thermal_correction(a, math.pi / 2, nbar, OpgParams(0.05))
    assert quadrature_variance(s) == pytest.approx(noisy_quadrature_correction(a, nbar, 0.05), abs=1e-6)
    with pytest.raises(PreconditionError):
        noisy_quadrature_correction(2.0, 1.0, 0.1)


def test_invariants_over_dephasing():
    a, gt = 4.0, 0.1
    values = [linear_entropy(gpa_state(DephasedCoherent(a, 0.2, d), OpgParams(gt)))
              for d in np.round(np.arange(0, 1.01, 0.1), 1)]
    assert all(b >= a_ - 1e-12 for a_, b in zip(values, values[1:]))
    assert negativity(gpa_state(PhaseAveragedCoherent(4.0), OpgParams(0.1))) <= 1e-7


def test_report_row():
    s = gpa_state(DisplacedThermal(3.0, 0.2, 1.0), OpgParams(0.05))
    rep = EntanglementReport.from_state(s)
    assert rep.squeezing_db == -10 * math.log10(rep.quadrature_variance_2dX)
    row = rep.csv_row(s.pump, 0.05).split(",")
    assert len(row) == len(REPORT_HEADER.split(",")) and row[0] == "DisplacedThermal"
    assert rep.truncation_warning is None
