"""Pump states described by their Glauber-Sudarshan P-function.

A model exposes P through its angular harmonics
P_j(r) = int_0^{2pi} P(r e^{i theta}) e^{i j theta} dtheta, which is the form
every downstream integral uses.  States whose P contains a radial Dirac
delta are described by a :class:`Ring` instead (radius plus phase
distribution) and never rasterised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import gammaln, ive

from .errors import ConvergenceError, DomainError, PreconditionError
from .grid import GridSpec, PolarGrid
from .husimi import (HusimiHarmonics, band_moment, displaced_thermal_band,
                     fock_cutoff_displaced_thermal, kerr_rotate_band)
from .numerics import QuadratureSpec, gauss_legendre, integrate_radial
from .phase import (GaussianPhase, KerrCoherentPhase, KerrDisplacedThermalPhase,
                    PhaseDistribution, PointPhase, UniformPhase)

__all__ = [
    "Ring",
    "PumpModel",
    "Coherent",
    "Thermal",
    "DisplacedThermal",
    "PhaseSensitiveNoisyCoherent",
    "DephasedCoherent",
    "PhaseAveragedCoherent",
    "KerrModulated",
    "Gridded",
    "p_value",
    "p_moment",
    "kerr_modulate",
    "p_from_husimi",
    "resolvable_smoothing",
    "rasterize",
    "phase_spread_estimate",
    "pump_from_descriptor",
]

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class Ring:
    """P = delta(|alpha| - radius) L(theta) / radius."""

    radius: float
    phase: PhaseDistribution


class PumpModel:
    """Base class.  Subclasses set ``kind`` and implement the hooks they need."""

    kind = "abstract"
    phase_symmetric = False
    signed = False

    # --- hooks -----------------------------------------------------------
    @property
    def ring(self) -> Ring | None:
        return None

    def params(self) -> dict:
        return {}

    def mean_photon_number(self) -> float:
        return float(self.moment(1, 1).real)

    def radial_bound(self) -> float:
        raise NotImplementedError

    def harmonics(self, r, jmax: int) -> np.ndarray:
        """P_j(r), j = 0..jmax, shape (len(r), jmax + 1)."""
        raise NotImplementedError

    def p_value(self, r, theta):
        raise NotImplementedError

    def radial_nodes(self):
        """Fixed (r, w) quadrature nodes if the model is tabulated, else None."""
        return None

    # --- derived -----------------------------------------------------------
    def descriptor(self) -> dict:
        return {"kind": self.kind, **self.params()}

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({inner})"

    def __eq__(self, other):
        return type(self) is type(other) and self.descriptor() == other.descriptor()

    def __hash__(self):
        return hash(repr(self.descriptor()))

    def abs_harmonic_bound(self, r) -> np.ndarray:
        """An upper bound on int |P(r, theta)| dtheta."""
        if not self.signed:
            return np.abs(self.harmonics(r, 0)[:, 0])
        jb = self.harmonic_extent()
        h = np.abs(self.harmonics(r, jb))
        return h[:, 0] + 2 * h[:, 1:].sum(axis=1)

    def radial_integral(self, g, spec: QuadratureSpec = QuadratureSpec(), j: int = 0,
                        absolute: bool = False):
        """int r g(r) P_j(r) dr (or with the |P| bound when ``absolute``)."""
        ring = self.ring
        if ring is not None:
            val = np.asarray(g(np.array([ring.radius])))[0]
            f = 1.0 if absolute else ring.phase.coefficient(j)
            return val * f
        nodes = self.radial_nodes()

        def integrand(r):
            base = self.abs_harmonic_bound(r) if absolute else self.harmonics(r, abs(j))[:, abs(j)]
            if j < 0 and not absolute:
                base = np.conj(base)
            gr = np.asarray(g(r))
            return (r * base).reshape((-1,) + (1,) * (gr.ndim - 1)) * gr

        if nodes is not None:
            r, w = nodes
            return np.tensordot(w, integrand(r), axes=(0, 0))
        spec = spec.with_cutoff(self.radial_bound())
        res = integrate_radial(integrand, 0.0, spec.radial_cutoff, spec)
        return res.value

    def moment(self, m: int, n: int, spec: QuadratureSpec = QuadratureSpec()) -> complex:
        """c_mn = int P alpha^m conj(alpha)^n d^2 alpha."""
        _check_orders(m, n)
        return complex(self.radial_integral(lambda r: r ** (m + n), spec, j=m - n))

    def phase_fourier(self, jmax: int, spec: QuadratureSpec | None = None) -> np.ndarray:
        """F_j = int r P_j(r) dr for j = 0..jmax."""
        ring = self.ring
        if ring is not None:
            return ring.phase.fourier(jmax)
        spec = spec or QuadratureSpec()
        nodes = self.radial_nodes()
        if nodes is not None:
            r, w = nodes
            return (w * r) @ self.harmonics(r, jmax)
        spec = spec.with_cutoff(self.radial_bound())
        res = integrate_radial(lambda r: r[:, None] * self.harmonics(r, jmax), 0.0,
                               spec.radial_cutoff, spec)
        return res.value

    def harmonic_extent(self, tol: float = 1e-12, cap: int = 4096) -> int:
        """Largest j whose int r |P_j| dr exceeds ``tol`` (estimated on GL nodes)."""
        if self.phase_symmetric:
            return 0
        ring = self.ring
        if ring is not None:
            return ring.phase.bandwidth(tol)
        r, w = self._probe_nodes()
        jmax = 32
        while True:
            b = (w * r) @ np.abs(self.harmonics(r, jmax))
            big = np.nonzero(b > tol)[0]
            last = int(big[-1]) if big.size else 0
            if last < jmax or jmax >= cap:
                return min(last, cap)
            jmax = min(2 * jmax, cap)

    def _probe_nodes(self, count: int = 400):
        nodes = self.radial_nodes()
        if nodes is not None:
            return nodes
        big_r = self.radial_bound()
        panels = 8
        x, w = gauss_legendre(count // panels)
        edges = np.linspace(0, big_r, panels + 1)
        rs, ws = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            rs.append(0.5 * (b - a) * (x + 1) + a)
            ws.append(0.5 * (b - a) * w)
        return np.concatenate(rs), np.concatenate(ws)

    def evaluate_from_harmonics(self, r, theta, jmax: int | None = None):
        """P(r, theta) = (1/2pi)[P_0 + 2 Re sum_j P_j e^{-i j theta}], pointwise."""
        r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
        jb = self.harmonic_extent() if jmax is None else jmax
        h = self.harmonics(r.ravel(), jb)
        j = np.arange(1, jb + 1)
        e = np.exp(-1j * theta.ravel()[:, None] * j[None, :])
        val = h[:, 0].real + 2 * np.real(np.sum(h[:, 1:] * e, axis=1))
        return (val / TWO_PI).reshape(r.shape)


def _check_orders(m, n):
    if m < 0 or n < 0:
        raise DomainError("moment orders must be non-negative")


def _check_nonneg(**kw):
    for k, v in kw.items():
        if not (v >= 0) or not math.isfinite(v):
            raise DomainError(f"{k} must be finite and non-negative, got {v!r}")


def _wrap(theta):
    return float(np.remainder(theta, TWO_PI))


def _thermal_bound(nbar):
    mu = math.sqrt(math.pi * nbar) / 2
    sd = math.sqrt(nbar * (1 - math.pi / 4))
    # the 8-sigma rule leaves ~1e-9 of weight; also require exp(-R^2/nbar) < 1e-14
    return max(mu + 8 * sd, math.sqrt(nbar * math.log(1e14)))


class Coherent(PumpModel):
    kind = "Coherent"

    def __init__(self, amplitude: float, theta0: float = 0.0):
        _check_nonneg(amplitude=amplitude)
        self.amplitude = float(amplitude)
        self.theta0 = _wrap(theta0)

    def params(self):
        return {"amplitude": self.amplitude, "theta0": self.theta0}

    @property
    def alpha(self) -> complex:
        return self.amplitude * complex(math.cos(self.theta0), math.sin(self.theta0))

    @property
    def ring(self):
        return Ring(self.amplitude, PointPhase(self.theta0))

    def radial_bound(self):
        return self.amplitude

    def mean_photon_number(self):
        return self.amplitude**2

    def moment(self, m, n, spec=QuadratureSpec()):
        _check_orders(m, n)
        return complex(self.alpha**m * np.conj(self.alpha) ** n)

    def p_value(self, r, theta):
        return self.ring


class Thermal(PumpModel):
    kind = "Thermal"
    phase_symmetric = True

    def __init__(self, nbar: float):
        if not nbar > 0:
            raise DomainError("a thermal pump needs nbar > 0")
        self.nbar = float(nbar)

    def params(self):
        return {"nbar": self.nbar}

    def radial_bound(self):
        return _thermal_bound(self.nbar)

    def mean_photon_number(self):
        return self.nbar

    def harmonics(self, r, jmax):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros((r.size, jmax + 1), dtype=complex)
        out[:, 0] = (2 / self.nbar) * np.exp(-r * r / self.nbar)
        return out

    def p_value(self, r, theta):
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        return np.exp(-r * r / self.nbar) / (math.pi * self.nbar)

    def moment(self, m, n, spec=QuadratureSpec()):
        _check_orders(m, n)
        return complex(math.factorial(m) * self.nbar**m) if m == n else 0j


class DisplacedThermal(PumpModel):
    """Gaussian P of width nbar centred on alpha0 (coherent state plus thermal noise)."""

    kind = "DisplacedThermal"

    def __init__(self, amplitude: float, theta0: float, nbar: float):
        _check_nonneg(amplitude=amplitude, nbar=nbar)
        self.amplitude = float(amplitude)
        self.theta0 = _wrap(theta0)
        self.nbar = float(nbar)

    def params(self):
        return {"amplitude": self.amplitude, "theta0": self.theta0, "nbar": self.nbar}

    @property
    def alpha(self) -> complex:
        return self.amplitude * complex(math.cos(self.theta0), math.sin(self.theta0))

    @property
    def ring(self):
        if self.nbar == 0:
            return Ring(self.amplitude, PointPhase(self.theta0))
        return None

    @property
    def phase_symmetric(self):
        return self.amplitude == 0

    def radial_bound(self):
        if self.nbar == 0:
            return self.amplitude
        return max(_thermal_bound(self.nbar), self.amplitude + 8 * math.sqrt(self.nbar / 2))

    def mean_photon_number(self):
        return self.amplitude**2 + self.nbar

    def radial_marginal(self, r):
        """P_0(r), the angle-integrated P."""
        r = np.asarray(r, dtype=float)
        n, a = self.nbar, self.amplitude
        return (2 / n) * np.exp(-(r - a) ** 2 / n) * ive(0, 2 * r * a / n)

    def harmonics(self, r, jmax):
        if self.nbar == 0:
            raise PreconditionError("P of a coherent state is a point; use the ring form")
        r = np.atleast_1d(np.asarray(r, dtype=float))
        n, a = self.nbar, self.amplitude
        j = np.arange(jmax + 1)
        env = (2 / n) * np.exp(-(r - a) ** 2 / n)
        return (env[:, None] * ive(j[None, :], (2 * a / n) * r[:, None])
                * np.exp(1j * j * self.theta0)[None, :])

    def p_value(self, r, theta):
        if self.nbar == 0:
            return self.ring
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        x = r * np.cos(theta) - self.alpha.real
        y = r * np.sin(theta) - self.alpha.imag
        return np.exp(-(x * x + y * y) / self.nbar) / (math.pi * self.nbar)

    def moment(self, m, n, spec=QuadratureSpec()):
        _check_orders(m, n)
        a = self.alpha
        total = 0j
        for k in range(min(m, n) + 1):
            total += (math.comb(m, k) * math.comb(n, k) * math.factorial(k) * self.nbar**k
                      * a ** (m - k) * np.conj(a) ** (n - k))
        return complex(total)


class PhaseSensitiveNoisyCoherent(PumpModel):
    """alpha = alpha0 + e^{i phi}(x + i y) with var x = nbar1/2, var y = nbar2/2."""

    kind = "PhaseSensitiveNoisyCoherent"

    def __init__(self, amplitude: float, theta0: float, nbar1: float, nbar2: float, phi: float):
        _check_nonneg(amplitude=amplitude)
        if not (nbar1 > 0 and nbar2 > 0):
            raise DomainError("nbar1 and nbar2 must be positive")
        self.amplitude = float(amplitude)
        self.theta0 = _wrap(theta0)
        self.nbar1 = float(nbar1)
        self.nbar2 = float(nbar2)
        self.phi = _wrap(phi)

    def params(self):
        return {"amplitude": self.amplitude, "theta0": self.theta0, "nbar1": self.nbar1,
                "nbar2": self.nbar2, "phi": self.phi}

    @property
    def alpha(self) -> complex:
        return self.amplitude * complex(math.cos(self.theta0), math.sin(self.theta0))

    def radial_bound(self):
        big = max(self.nbar1, self.nbar2)
        return max(_thermal_bound(big), self.amplitude + 8 * math.sqrt(big / 2))

    def p_value(self, r, theta):
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        d = r * np.exp(1j * theta) - self.alpha
        w = d * np.exp(-1j * self.phi)
        return (np.exp(-w.real**2 / self.nbar1 - w.imag**2 / self.nbar2)
                / (math.pi * math.sqrt(self.nbar1 * self.nbar2)))

    def harmonics(self, r, jmax):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        # the angular profile is no sharper than the narrower noise axis allows
        width = math.sqrt(min(self.nbar1, self.nbar2) / 2)
        need = int(math.ceil(12 * (r.max() + 1) / width)) + 2 * jmax + 64
        n = 1 << int(math.ceil(math.log2(max(need, 128))))
        th = TWO_PI * np.arange(n) / n
        vals = self.p_value(r[:, None], th[None, :])
        f = np.fft.ifft(vals, axis=1) * TWO_PI
        return f[:, : jmax + 1]

    def moment(self, m, n, spec=QuadratureSpec()):
        _check_orders(m, n)
        # polynomial of degree m+n in two independent normals: Gauss-Hermite is exact
        k = (m + n) // 2 + 1
        x, w = np.polynomial.hermite.hermgauss(k)
        xs = x[:, None] * math.sqrt(self.nbar1)
        ys = x[None, :] * math.sqrt(self.nbar2)
        a = self.alpha + np.exp(1j * self.phi) * (xs + 1j * ys)
        ww = (w[:, None] * w[None, :]) / math.pi
        return complex(np.sum(ww * a**m * np.conj(a) ** n))


class DephasedCoherent(PumpModel):
    """Fixed amplitude, random phase with distribution L (Gaussian by default)."""

    kind = "DephasedCoherent"

    def __init__(self, amplitude: float, theta0: float = 0.0, dtheta: float | None = None,
                 distribution: PhaseDistribution | None = None):
        _check_nonneg(amplitude=amplitude)
        if (dtheta is None) == (distribution is None):
            raise DomainError("give exactly one of dtheta or distribution")
        self.amplitude = float(amplitude)
        self.theta0 = _wrap(theta0)
        self.dtheta = None if dtheta is None else float(dtheta)
        if distribution is None:
            _check_nonneg(dtheta=dtheta)
            # zero spread is the coherent state itself
            distribution = GaussianPhase(theta0, dtheta) if dtheta > 0 else PointPhase(theta0)
        self.distribution = distribution

    def params(self):
        p = {"amplitude": self.amplitude, "theta0": self.theta0}
        if self.dtheta is not None:
            p["dtheta"] = self.dtheta
        else:
            p["distribution"] = self.distribution.descriptor()
        return p

    @property
    def ring(self):
        return Ring(self.amplitude, self.distribution)

    @property
    def signed(self):
        return bool(np.any(getattr(self.distribution, "weights", np.zeros(1)) < 0))

    def radial_bound(self):
        return self.amplitude

    def mean_photon_number(self):
        return self.amplitude**2 * self.distribution.normalization()

    def moment(self, m, n, spec=QuadratureSpec()):
        _check_orders(m, n)
        return complex(self.amplitude ** (m + n) * self.distribution.coefficient(m - n))

    def p_value(self, r, theta):
        return self.ring


class PhaseAveragedCoherent(PumpModel):
    kind = "PhaseAveragedCoherent"
    phase_symmetric = True

    def __init__(self, amplitude: float):
        _check_nonneg(amplitude=amplitude)
        self.amplitude = float(amplitude)

    def params(self):
        return {"amplitude": self.amplitude}

    @property
    def ring(self):
        return Ring(self.amplitude, UniformPhase())

    def radial_bound(self):
        return self.amplitude

    def mean_photon_number(self):
        return self.amplitude**2

    def moment(self, m, n, spec=QuadratureSpec()):
        _check_orders(m, n)
        return complex(self.amplitude ** (2 * m)) if m == n else 0j

    def p_value(self, r, theta):
        return self.ring


class KerrModulated(PumpModel):
    """Inner state after exp(-i gk n(n-1)).

    For a coherent inner state the P-function is taken in factorised ring
    form with the Kerr phase distribution.  For a displaced thermal inner
    state two routes exist: ``factorized`` (the exact, Kerr-invariant radial
    marginal times the series phase distribution) and ``husimi`` (harmonics
    recovered numerically from the rotated density matrix).  Moments are
    always those of the exact rotated state.
    """

    kind = "KerrModulated"
    routes = ("factorized", "husimi")

    def __init__(self, inner: PumpModel, gk: float, route: str = "factorized"):
        if not isinstance(inner, (Coherent, DisplacedThermal)):
            raise PreconditionError(f"Kerr modulation of {inner.kind} is not supported")
        _check_nonneg(gk=gk)
        if route not in self.routes:
            raise DomainError(f"route must be one of {self.routes}")
        if isinstance(inner, DisplacedThermal) and inner.nbar == 0:
            inner = Coherent(inner.amplitude, inner.theta0)
        if route == "husimi" and isinstance(inner, Coherent):
            raise PreconditionError("the Husimi route needs a thermal component (nbar > 0)")
        self.inner = inner
        self.gk = float(gk)
        self.route = route

    def params(self):
        return {"inner": self.inner.descriptor(), "gk": self.gk, "route": self.route}

    @property
    def coherent_inner(self):
        return isinstance(self.inner, Coherent)

    @cached_property
    def phase(self) -> PhaseDistribution:
        i = self.inner
        if self.coherent_inner:
            return KerrCoherentPhase(i.amplitude, i.theta0, self.gk)
        return KerrDisplacedThermalPhase(i.amplitude, i.theta0, i.nbar, self.gk)

    @property
    def ring(self):
        if self.coherent_inner:
            return Ring(self.inner.amplitude, self.phase)
        return None

    @property
    def signed(self):
        # the recovered P is a band-limited version of a singular function
        return self.route == "husimi"

    def radial_bound(self):
        return self.inner.radial_bound()

    def mean_photon_number(self):
        return self.inner.mean_photon_number()

    @cached_property
    def band(self) -> np.ndarray:
        i = self.inner
        n_max = fock_cutoff_displaced_thermal(i.amplitude, i.nbar)
        return kerr_rotate_band(displaced_thermal_band(i.amplitude, i.theta0, i.nbar, n_max), self.gk)

    @cached_property
    def husimi(self) -> HusimiHarmonics:
        i = self.inner
        return HusimiHarmonics.from_band(self.band, i.nbar, self.radial_bound(), i.amplitude)

    def harmonics(self, r, jmax):
        if self.coherent_inner:
            raise PreconditionError("Kerr-modulated coherent pumps are rings")
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if self.route == "husimi":
            return self.husimi.at(r, jmax)
        a = self.inner.radial_marginal(r)
        return a[:, None] * self.phase.fourier(jmax)[None, :]

    def harmonic_extent(self, tol=1e-12, cap=4096):
        if self.coherent_inner or self.route == "factorized":
            return min(self.phase.bandwidth(tol), cap)
        return min(self.husimi.n_harmonics - 1, cap)

    def p_value(self, r, theta):
        if self.coherent_inner:
            return self.ring
        if self.route == "factorized":
            r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
            return self.inner.radial_marginal(r) * self.phase.evaluate(theta)
        return self.evaluate_from_harmonics(r, theta, self.husimi.n_harmonics - 1)

    def moment(self, m, n, spec=QuadratureSpec()):
        _check_orders(m, n)
        i, g = self.inner, self.gk
        if self.coherent_inner:
            a = i.alpha
            d = n - m
            return complex(a**m * np.conj(a) ** n
                           * np.exp(1j * g * (n * (n - 1) - m * (m - 1)))
                           * np.exp(abs(a) ** 2 * (np.exp(2j * g * d) - 1)))
        return band_moment(self.band, m, n)


class Gridded(PumpModel):
    """P given on a polar raster (possibly signed)."""

    kind = "Gridded"

    def __init__(self, grid: PolarGrid, label: str = "raster"):
        self.grid = grid
        self.label = label
        # rounding-level negatives from a spectral raster do not make P signed
        floor = 1e-12 * float(np.max(np.abs(grid.values)))
        self._signed = bool(np.any(grid.values < -floor))

    def params(self):
        return {"label": self.label, "n_r": int(self.grid.radii.size),
                "n_theta": int(self.grid.angles.size), "r_max": float(self.grid.radii[-1])}

    @property
    def signed(self):
        return self._signed

    def radial_bound(self):
        w = self.grid.radial_widths()
        return float(self.grid.radii[-1] + 0.5 * w[-1])

    def radial_nodes(self):
        return self.grid.radii, self.grid.radial_widths()

    @cached_property
    def _harm(self):
        return self.grid.harmonics(self.grid.angles.size // 2 - 1)

    def harmonics(self, r, jmax):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        h = self._harm
        if jmax >= h.shape[1]:
            raise DomainError(f"raster resolves harmonics up to {h.shape[1] - 1} only")
        if r.shape == self.grid.radii.shape and np.array_equal(r, self.grid.radii):
            return h[:, : jmax + 1].copy()
        if np.any(r < 0) or np.any(r > self.radial_bound() + 1e-12):
            raise DomainError("radius outside the raster")
        out = np.empty((r.size, jmax + 1), dtype=complex)
        for j in range(jmax + 1):
            out[:, j] = (np.interp(r, self.grid.radii, h[:, j].real)
                         + 1j * np.interp(r, self.grid.radii, h[:, j].imag))
        return out

    def harmonic_extent(self, tol=1e-12, cap=4096):
        r, w = self.radial_nodes()
        b = (w * r) @ np.abs(self._harm)
        big = np.nonzero(b > tol)[0]
        return min(int(big[-1]) if big.size else 0, cap)

    def abs_harmonic_bound(self, r):
        if np.array_equal(np.asarray(r), self.grid.radii):
            return np.abs(self.grid.values).sum(axis=1) * self.grid.d_theta
        return super().abs_harmonic_bound(r)

    def p_value(self, r, theta):
        return self.grid.interpolate(r, theta)


# --- module-level operations ------------------------------------------------

def p_value(model: PumpModel, radius, angle):
    """Closed-form P at polar points, or the ring descriptor for singular kinds."""
    if np.any(np.asarray(radius) < 0):
        raise DomainError("radius must be non-negative")
    return model.p_value(radius, angle)


def p_moment(model: PumpModel, m: int, n: int, spec: QuadratureSpec = QuadratureSpec()) -> complex:
    return model.moment(m, n, spec)


def kerr_modulate(model: PumpModel, gk: float, route: str = "factorized") -> PumpModel:
    """Apply the Kerr channel exp(-i gk n(n-1)) to a pump.

    Phase-symmetric states are invariant and come back unchanged, as does
    any model when gk = 0.  Nested modulation composes additively.
    """
    _check_nonneg(gk=gk)
    if isinstance(model, (Thermal, PhaseAveragedCoherent)):
        return model
    if isinstance(model, KerrModulated):
        return model if gk == 0 else KerrModulated(model.inner, model.gk + gk, route)
    if not isinstance(model, (Coherent, DisplacedThermal)):
        raise PreconditionError(f"Kerr modulation of {model.kind} is not supported")
    if gk == 0:
        return model
    if isinstance(model, DisplacedThermal) and model.amplitude == 0:
        return model
    return KerrModulated(model, gk, route)


def rasterize(model: PumpModel, spec: GridSpec = GridSpec(), jmax: int | None = None) -> PolarGrid:
    """Sample P on a polar grid from its harmonics.

    Harmonics beyond the angular Nyquist limit are folded onto their
    aliases, so the grid values are exact samples of the truncated series.
    """
    if model.ring is not None:
        raise PreconditionError(f"{model.kind} has a singular P and cannot be rasterised")
    r, th = spec.radii(), spec.angles()
    jb = model.harmonic_extent() if jmax is None else jmax
    h = model.harmonics(r, jb)
    n = th.size
    c = np.zeros((r.size, n), dtype=complex)
    c[:, 0] += h[:, 0]
    for j in range(1, jb + 1):
        c[:, j % n] += h[:, j]
        c[:, (-j) % n] += np.conj(h[:, j])
    vals = np.real(np.fft.fft(c, axis=1)) / TWO_PI
    return PolarGrid(r, th, vals, meta={"source": model.descriptor(), "harmonics": jb})


SMOOTHING_LADDER = (0.0, 0.25, 0.5, 0.75, 1.0)


def _husimi_model(model):
    if isinstance(model, DisplacedThermal):
        if model.nbar == 0:
            raise PreconditionError("the Husimi route is not applicable to a coherent state")
        return KerrModulated(model, 0.0, "husimi")
    if not isinstance(model, KerrModulated) or model.coherent_inner:
        raise PreconditionError("the Husimi route needs a Kerr-modulated state with nbar > 0")
    return model


def _transform(model, r_max, smoothing):
    i = model.inner
    return HusimiHarmonics.from_band(model.band, i.nbar, r_max, i.amplitude, smoothing=smoothing)


def resolvable_smoothing(model: PumpModel, r_max: float | None = None,
                         ladder=SMOOTHING_LADDER, edge_tol: float = 1e-8) -> float:
    """Least smoothing on ``ladder`` at which the transform is resolved.

    Zero means the raster is the P-function itself; a positive value means
    P is too singular (Kerr modulation) and only a Gaussian-smoothed
    version can be sampled.
    """
    model = _husimi_model(model)
    r_max = model.radial_bound() if r_max is None else r_max
    for s in ladder:
        try:
            hh = _transform(model, r_max, s)
        except ConvergenceError:
            continue
        if hh.edge_envelope <= edge_tol:
            return float(s)
    raise ConvergenceError("no smoothing on the ladder resolves the characteristic function")


def p_from_husimi(model: PumpModel, spec: GridSpec = GridSpec(), smoothing: float | str = 0.0) -> PolarGrid:
    """Raster of P recovered from the Kerr-rotated density matrix.

    With ``smoothing = 0`` the transform is cut at the disk where the
    un-modulated envelope reaches 1e-12.  Under Kerr modulation the
    characteristic function has not decayed there; the raster is then
    flagged as not converged.  ``smoothing = "auto"`` picks the least
    Gaussian smoothing that is resolved (see :func:`resolvable_smoothing`).
    """
    model = _husimi_model(model)
    if smoothing == "auto":
        smoothing = resolvable_smoothing(model, spec.r_max)
    hh = _transform(model, spec.r_max, float(smoothing))
    grid = rasterize(_Harmonics(hh, model), spec, hh.n_harmonics - 1)
    ok = hh.edge_envelope <= 1e-8
    grid.converged = np.full(grid.values.shape, ok)
    grid.meta.update({"source": model.descriptor(), "edge_envelope": hh.edge_envelope,
                      "disk_radius": hh.disk_radius, "nodes": hh.meta["nodes"],
                      "smoothing": float(smoothing)})
    return grid


class _Harmonics(PumpModel):
    """Adapter exposing a prepared transform through the model interface."""

    def __init__(self, hh, source):
        self.hh, self.source = hh, source

    def harmonics(self, r, jmax):
        return self.hh.at(r, jmax)

    def descriptor(self):
        return self.source.descriptor()


def phase_spread_estimate(model: PumpModel) -> float:
    """Order-of-magnitude phase spread of a Kerr-modulated or dephased pump."""
    if isinstance(model, DephasedCoherent) and isinstance(model.distribution, GaussianPhase):
        return model.distribution.dtheta
    if isinstance(model, KerrModulated):
        inner, g = model.inner, model.gk
    elif isinstance(model, (Coherent, DisplacedThermal)):
        inner, g = model, 0.0
    else:
        raise PreconditionError(f"no phase-spread estimate for {model.kind}")
    a = inner.amplitude
    if isinstance(inner, Coherent) or inner.nbar == 0:
        return g * a
    if a == 0:
        raise DomainError("the estimate needs a non-zero amplitude")
    n = inner.nbar
    return math.sqrt(n / a**2 + g * g * a * a * (2 * n + 1))


_KINDS = {
    "Coherent": Coherent,
    "Thermal": Thermal,
    "DisplacedThermal": DisplacedThermal,
    "PhaseSensitiveNoisyCoherent": PhaseSensitiveNoisyCoherent,
    "PhaseAveragedCoherent": PhaseAveragedCoherent,
}


def pump_from_descriptor(d: dict) -> PumpModel:
    """Inverse of ``descriptor()`` for the analytic kinds."""
    if not isinstance(d, dict) or "kind" not in d:
        raise DomainError("pump descriptor must be an object with a 'kind'")
    d = dict(d)
    kind = d.pop("kind")
    if kind == "KerrModulated":
        inner = pump_from_descriptor(d.pop("inner"))
        return KerrModulated(inner, **d)
    if kind == "DephasedCoherent":
        dist = d.pop("distribution", None)
        if dist is not None:
            raise DomainError("only Gaussian dephasing can be built from a descriptor")
        return DephasedCoherent(**d)
    if kind not in _KINDS:
        raise DomainError(f"unknown pump kind {kind!r}")
    try:
        return _KINDS[kind](**d)
    except TypeError as exc:
        raise DomainError(f"bad parameters for {kind}: {exc}") from None
