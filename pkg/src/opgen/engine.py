"""Signal-idler two-mode state for a given pump.

Coefficients rho^{nm} multiply |n_i n_s><m_i m_s|.  In the generalised
parametric approximation

    rho^{nm} = (-i)^{n-m} int r dr (1 - tau^2) tau^{n+m} P_{n-m}(r),
    tau = tanh(gt r),

with P_j the angular harmonics of the pump P-function.  Rings reduce this
to a closed form; everything else goes through one vector-valued radial
quadrature over all needed (n - m, m) pairs at once.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PreconditionError
from .numerics import QuadratureSpec, integrate_radial
from .pumps import Coherent, PumpModel

__all__ = [
    "OpgParams",
    "PerturbativeCoefficients",
    "TwoModeState",
    "ValidityReport",
    "perturbative_state",
    "gpa_state",
    "auto_cutoff",
    "validity_report",
    "gpa_displaced_thermal_correction",
    "gpa_phase_sensitive_correction",
    "MAX_CUTOFF",
]

MAX_CUTOFF = 4000
TAIL_TOL = 1e-9
INTENSE = 10.0  # "much greater than" as a ratio
SMALL = 0.1  # "much less than" as a ratio


@dataclass(frozen=True)
class OpgParams:
    """gt and the Fock cutoff N (n, m <= N).  ``fock_cutoff=None`` picks N automatically."""

    gt: float
    fock_cutoff: int | None = None

    def __post_init__(self):
        if not (self.gt >= 0) or not math.isfinite(self.gt):
            raise DomainError("gt must be finite and non-negative")
        if self.fock_cutoff is not None and self.fock_cutoff < 1:
            raise DomainError("fock_cutoff must be at least 1")


@dataclass(frozen=True)
class PerturbativeCoefficients:
    c01: complex
    c11: float
    c02: complex
    signed: bool = False

    def __post_init__(self):
        if self.c11 < 0 and not self.signed:
            raise DomainError("c11 must be non-negative")
        gap = self.c11 - abs(self.c01) ** 2
        if not self.signed and gap < -1e-9 * max(1.0, self.c11):
            raise PreconditionError(f"c11 < |c01|^2 by {-gap:.3g}; P cannot be non-negative")

    @classmethod
    def from_pump(cls, pump: PumpModel, spec: QuadratureSpec = QuadratureSpec()):
        return cls(c01=complex(pump.moment(0, 1, spec)),
                   c11=float(pump.moment(1, 1, spec).real),
                   c02=complex(pump.moment(0, 2, spec)),
                   signed=bool(pump.signed))


@dataclass
class TwoModeState:
    """Coefficient table rho[n, m] for n, m = 0..cutoff."""

    coefficients: np.ndarray
    tail_bound: float
    form_tag: str
    gt: float
    pump: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def cutoff(self) -> int:
        return self.coefficients.shape[0] - 1

    def trace(self) -> float:
        return float(np.trace(self.coefficients).real)

    def check(self, signed: bool = False, trace_tol: float = 1e-6) -> list[str]:
        """Invariant violations, as messages (empty when all hold)."""
        rho = self.coefficients
        out = []
        herm = float(np.max(np.abs(rho - rho.conj().T)))
        if herm > 1e-12 * max(1.0, float(np.max(np.abs(rho)))):
            out.append(f"not Hermitian ({herm:.3g})")
        tot = self.trace() + self.tail_bound
        if abs(tot - 1) > trace_tol:
            out.append(f"trace + tail = {tot!r}")
        dmin = float(np.min(np.diag(rho).real))
        if dmin < -1e-10 and not signed:
            out.append(f"negative population {dmin:.3g}")
        return out

    def to_csv(self, path=None) -> str:
        n = self.cutoff + 1
        lines = ["n,m,re,im"]
        for i in range(n):
            for j in range(n):
                v = self.coefficients[i, j]
                lines.append(f"{i},{j},{v.real:.17g},{v.imag:.17g}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def sidecar(self) -> dict:
        return {"gt": self.gt, "cutoff": self.cutoff, "tail_bound": self.tail_bound,
                "form_tag": self.form_tag, "pump": self.pump}

    def write(self, stem) -> None:
        """``stem.csv`` plus ``stem.json``."""
        self.to_csv(f"{stem}.csv")
        with open(f"{stem}.json", "w") as fh:
            json.dump(self.sidecar(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def read(cls, stem) -> "TwoModeState":
        with open(f"{stem}.json") as fh:
            side = json.load(fh)
        n = side["cutoff"] + 1
        rho = np.zeros((n, n), dtype=complex)
        with open(f"{stem}.csv") as fh:
            next(fh)
            for line in fh:
                i, j, re, im = line.strip().split(",")
                rho[int(i), int(j)] = complex(float(re), float(im))
        return cls(rho, side["tail_bound"], side["form_tag"], side["gt"], side["pump"])


@dataclass(frozen=True)
class ValidityReport:
    mean_pump_photons: float
    downconverted_photons: float
    gt: float
    exp_condition: float
    trace_distance_estimate: float
    high_intensity: bool
    no_depletion: bool
    small_gt: bool
    slowly_varying: bool

    @property
    def all_pass(self) -> bool:
        return self.high_intensity and self.no_depletion and self.small_gt and self.slowly_varying

    def flags(self) -> dict:
        return {"high_intensity": self.high_intensity, "no_depletion": self.no_depletion,
                "small_gt": self.small_gt, "slowly_varying": self.slowly_varying}


def _vacuum(n=1):
    rho = np.zeros((n + 1, n + 1), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def perturbative_state(pump: PumpModel, params: OpgParams,
                       spec: QuadratureSpec = QuadratureSpec()) -> TwoModeState:
    """Second-order state on |00>, |11>, |22>.

    Entries that are o(g^2 t^2) in the expansion are set to zero.
    """
    c = PerturbativeCoefficients.from_pump(pump, spec)
    gt = params.gt
    if gt * math.sqrt(max(c.c11, 0.0)) > 0.3:
        warnings.warn(f"gt*sqrt(c11) = {gt * math.sqrt(c.c11):.3g} is outside the perturbative regime",
                      stacklevel=2)
    g2 = gt * gt
    rho = np.zeros((3, 3), dtype=complex)
    rho[0, 0] = 1 - g2 * c.c11
    rho[1, 1] = g2 * c.c11
    rho[0, 1] = 1j * gt * c.c01
    rho[1, 0] = np.conj(rho[0, 1])
    rho[0, 2] = -g2 * c.c02
    rho[2, 0] = np.conj(rho[0, 2])
    return TwoModeState(rho, 0.0, "Perturbative", gt, pump.descriptor(),
                        {"coefficients": {"c01": [c.c01.real, c.c01.imag], "c11": c.c11,
                                          "c02": [c.c02.real, c.c02.imag]}})


# --- cutoff selection ------------------------------------------------------

def _first_below(f, cap):
    """Smallest N in [1, cap] with f(N) < TAIL_TOL (f decreasing); cap if none."""
    if f(1) < TAIL_TOL:
        return 1
    lo, hi = 1, 2
    while hi < cap and f(hi) >= TAIL_TOL:
        lo, hi = hi, min(2 * hi, cap)
    if f(hi) >= TAIL_TOL:
        return None
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if f(mid) < TAIL_TOL:
            hi = mid
        else:
            lo = mid
    return hi


def auto_cutoff(pump: PumpModel, gt: float, cap: int = MAX_CUTOFF) -> int:
    """Smallest N making the neglected tails smaller than 1e-9.

    Two tails are controlled: the population beyond N, int P tau^{2N+2},
    and, for phase-asymmetric pumps, the negativity carried by entries
    with n > N, bounded by int |P| (1 + tau) tau^{N+1} / (1 - tau).
    """
    if gt == 0:
        return 1
    ring = pump.ring
    if ring is not None:
        tau = np.array([math.tanh(gt * ring.radius)])
        weight = np.array([1.0])
    else:
        r, w = pump._probe_nodes()
        tau = np.tanh(gt * r)
        weight = w * r * pump.abs_harmonic_bound(r)
    check_neg = not pump.phase_symmetric

    def tail(n):
        with np.errstate(divide="ignore", invalid="ignore"):
            diag = np.sum(weight * tau ** (2 * n + 2))
            if not check_neg:
                return diag
            neg = np.sum(np.where(tau < 1, weight * (1 + tau) * tau ** (n + 1) / (1 - tau), np.inf))
        return max(diag, neg)

    n = _first_below(tail, cap)
    if n is None:
        warnings.warn(f"Fock cutoff capped at {cap}; the neglected tail is {tail(cap):.3g}", stacklevel=2)
        return cap
    return n


# --- generalised parametric approximation ----------------------------------

def _pairs(cutoff, dmax):
    """(j, m) index lists with j = n - m in 0..dmax and n = m + j <= cutoff."""
    js, ms = [], []
    for j in range(dmax + 1):
        m = np.arange(cutoff - j + 1)
        js.append(np.full(m.size, j))
        ms.append(m)
    return np.concatenate(js), np.concatenate(ms)


def _assemble(cutoff, js, ms, vals):
    rho = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
    v = vals * (-1j) ** (js % 4)
    rho[ms + js, ms] = v
    off = js > 0
    rho[ms[off], ms[off] + js[off]] = np.conj(v[off])
    return rho


def gpa_state(pump: PumpModel, params: OpgParams,
              spec: QuadratureSpec = QuadratureSpec()) -> TwoModeState:
    """Coefficient table in the generalised parametric approximation."""
    gt = params.gt
    n_cut = params.fock_cutoff if params.fock_cutoff is not None else auto_cutoff(pump, gt)
    meta = {"auto_cutoff": params.fock_cutoff is None}
    if gt == 0:
        return TwoModeState(_vacuum(n_cut), 0.0, "GPA", gt, pump.descriptor(), meta)
    ring = pump.ring
    if ring is not None:
        return _ring_state(pump, ring, gt, n_cut, meta)

    dmax = 0 if pump.phase_symmetric else min(pump.harmonic_extent(), n_cut)
    js, ms = _pairs(n_cut, dmax)
    powers = js + 2 * ms

    def integrand(r):
        tau = np.tanh(gt * r)
        sech2 = 1.0 / np.cosh(gt * r) ** 2
        h = pump.harmonics(r, dmax)  # (nr, dmax+1)
        pw = tau[:, None] ** powers[None, :]
        body = (r * sech2)[:, None] * pw * h[:, js]
        tail = r * h[:, 0].real * tau ** (2 * n_cut + 2)
        return np.concatenate([body, tail[:, None]], axis=1)

    nodes = pump.radial_nodes()
    if nodes is not None:
        r, w = nodes
        vals = np.tensordot(w, integrand(r), axes=(0, 0))
        meta["quadrature"] = {"kind": "raster", "nodes": int(r.size)}
    else:
        spec_r = spec.with_cutoff(pump.radial_bound())
        res = integrate_radial(integrand, 0.0, spec_r.radial_cutoff, spec_r)
        vals = res.value
        meta["quadrature"] = {"kind": "adaptive", "error": res.error_estimate,
                              "evaluations": res.evaluations, "converged": res.converged}
        if not res.converged:
            warnings.warn(f"radial quadrature did not converge (error {res.error_estimate:.3g})",
                          stacklevel=2)
    rho = _assemble(n_cut, js, ms, vals[:-1])
    tail = float(vals[-1].real)
    meta["harmonics"] = int(dmax)
    meta["negativity_tail"] = _negativity_tail(pump, gt, n_cut)
    return TwoModeState(rho, max(tail, 0.0), "GPA", gt, pump.descriptor(), meta)


def _negativity_tail(pump, gt, n_cut):
    if pump.phase_symmetric:
        return 0.0
    ring = pump.ring
    if ring is not None:
        tau = math.tanh(gt * ring.radius)
        return (1 + tau) * tau ** (n_cut + 1) / (1 - tau) if tau < 1 else math.inf
    r, w = pump._probe_nodes()
    tau = np.tanh(gt * r)
    return float(np.sum(w * r * pump.abs_harmonic_bound(r) * (1 + tau) * tau ** (n_cut + 1) / (1 - tau)))


def _ring_state(pump, ring, gt, n_cut, meta):
    tau = math.tanh(gt * ring.radius)
    f = ring.phase.fourier(n_cut)
    js, ms = _pairs(n_cut, n_cut)
    vals = (1 - tau * tau) * tau ** (js + 2 * ms).astype(float) * f[js]
    rho = _assemble(n_cut, js, ms, vals)
    tail = tau ** (2 * n_cut + 2) * float(f[0].real)
    meta = dict(meta, negativity_tail=_negativity_tail(pump, gt, n_cut), harmonics=n_cut)
    return TwoModeState(rho, tail, "GPA", gt, pump.descriptor(), meta)


# --- validity --------------------------------------------------------------

def validity_report(pump: PumpModel, params: OpgParams,
                    spec: QuadratureSpec = QuadratureSpec()) -> ValidityReport:
    gt = params.gt
    n_p = float(pump.moment(1, 1, spec).real)
    down = float(np.real(pump.radial_integral(lambda r: 2 * np.sinh(gt * r) ** 2, spec)))
    root = math.sqrt(max(n_p, 0.0))
    growth = math.exp(4 * gt * root)
    exp_cond = gt * growth
    return ValidityReport(
        mean_pump_photons=n_p,
        downconverted_photons=down,
        gt=gt,
        exp_condition=exp_cond,
        trace_distance_estimate=gt * gt * (growth - 1),
        high_intensity=n_p >= INTENSE,
        no_depletion=n_p > 0 and down <= SMALL * n_p,
        small_gt=gt <= SMALL,
        slowly_varying=exp_cond <= SMALL,
    )


# --- expansions around a coherent amplitude ---------------------------------

def _radial_derivatives(s, kappa, r):
    """g, g', g'' for g(r) = tau^s (1 - tau^2), tau = tanh(kappa r)."""
    t = math.tanh(kappa * r)
    sech2 = 1 - t * t
    g = t**s * sech2
    h1 = (s * t ** (s - 1) if s else 0.0) - (s + 2) * t ** (s + 1)
    h2 = (s * (s - 1) * t ** (s - 2) if s > 1 else 0.0) - (s + 2) * (s + 1) * t**s
    g1 = kappa * sech2 * h1
    g2 = kappa * kappa * (sech2 * sech2 * h2 - 2 * t * sech2 * h1)
    return g, g1, g2


def _corrected_table(amplitude, theta0, gt, n_cut, second):
    """rho^{nm} = f(alpha0) + second(g, g', g'', j) e^{i j theta0} (-i)^j."""
    rho = np.zeros((n_cut + 1, n_cut + 1), dtype=complex)
    for j in range(n_cut + 1):
        phase = (-1j) ** (j % 4) * complex(math.cos(j * theta0), math.sin(j * theta0))
        for m in range(n_cut - j + 1):
            g, g1, g2 = _radial_derivatives(j + 2 * m, gt, amplitude)
            v = (g + second(g, g1, g2, j)) * phase
            rho[m + j, m] = v
            if j:
                rho[m, m + j] = np.conj(v)
    return rho


def _check_expansion(amplitude, noise):
    if not amplitude > 0:
        raise PreconditionError("the expansion needs a non-zero coherent amplitude")
    if noise / amplitude**2 > 0.2:
        raise PreconditionError(f"noise/|alpha0|^2 = {noise / amplitude**2:.3g} exceeds 0.2")


def _expansion_state(amplitude, theta0, params, second, descriptor):
    gt = params.gt
    n_cut = params.fock_cutoff or auto_cutoff(Coherent(amplitude, theta0), gt)
    if gt == 0:
        return TwoModeState(_vacuum(n_cut), 0.0, "GPA", gt, descriptor, {"expansion": True})
    rho = _corrected_table(amplitude, theta0, gt, n_cut, second)
    # the correction preserves the full trace, so the tail is what is missing
    tail = 1.0 - float(np.trace(rho).real)
    meta = {"expansion": True, "negativity_tail": _negativity_tail(Coherent(amplitude, theta0), gt, n_cut)}
    return TwoModeState(rho, tail, "GPA", gt, descriptor, meta)


def gpa_displaced_thermal_correction(amplitude: float, theta0: float, nbar: float,
                                     params: OpgParams) -> TwoModeState:
    """Coherent table plus (nbar/4) times its Laplacian at alpha0."""
    _check_nonneg_nbar(nbar)
    if nbar:
        _check_expansion(amplitude, nbar)
    r = amplitude

    def second(g, g1, g2, j):
        if nbar == 0:
            return 0.0
        return 0.25 * nbar * (g2 + g1 / r - j * j * g / (r * r))

    desc = {"kind": "DisplacedThermal", "amplitude": amplitude, "theta0": theta0, "nbar": nbar,
            "expansion": "laplacian"}
    return _expansion_state(amplitude, theta0, params, second, desc)


def gpa_phase_sensitive_correction(amplitude: float, theta0: float, nbar1: float, nbar2: float,
                                   phi: float, params: OpgParams) -> TwoModeState:
    """Coherent table plus (1/4)(nbar1 d_u^2 + nbar2 d_v^2) at alpha0.

    u and v are the real and imaginary parts of alpha e^{-i phi}.  The
    directional second derivatives use the Hessian in the local radial /
    tangential frame at alpha0, where the u axis makes the angle
    beta = phi - theta0 with the radial direction.
    """
    _check_nonneg_nbar(nbar1)
    _check_nonneg_nbar(nbar2)
    _check_expansion(amplitude, nbar1 + nbar2)
    r = amplitude
    beta = phi - theta0
    c, s = math.cos(beta), math.sin(beta)

    def second(g, g1, g2, j):
        h_rr = g2
        h_rt = 1j * j * (g1 / r - g / (r * r))
        h_tt = g1 / r - j * j * g / (r * r)
        d_u = c * c * h_rr + 2 * s * c * h_rt + s * s * h_tt
        d_v = s * s * h_rr - 2 * s * c * h_rt + c * c * h_tt
        return 0.25 * (nbar1 * d_u + nbar2 * d_v)

    desc = {"kind": "PhaseSensitiveNoisyCoherent", "amplitude": amplitude, "theta0": theta0,
            "nbar1": nbar1, "nbar2": nbar2, "phi": phi, "expansion": "hessian"}
    return _expansion_state(amplitude, theta0, params, second, desc)


def _check_nonneg_nbar(n):
    if not (n >= 0):
        raise DomainError("noise photon numbers must be non-negative")
