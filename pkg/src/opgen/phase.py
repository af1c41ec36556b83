"""Phase distributions, their histograms, and amplitude/phase Schmidt factors.

Every distribution is described by its Fourier coefficients
F_j = int L(theta) e^{i j theta} dtheta (F_{-j} = conj F_j), which is what the
two-mode coefficients consume.  Pointwise values are available too.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ConvergenceError, DomainError, PreconditionError
from .numerics import svd
from .special import SeriesControl, dirichlet_kernel, log_hyp1f1, sinc

__all__ = [
    "PhaseDistribution",
    "PointPhase",
    "UniformPhase",
    "GaussianPhase",
    "KerrCoherentPhase",
    "KerrDisplacedThermalPhase",
    "SampledPhase",
    "HistogramPhase",
    "SchmidtDecomposition",
    "phase_marginal",
    "kerr_phase_coherent",
    "kerr_phase_displaced_thermal",
    "histogram_approximate",
    "schmidt_decompose",
    "moments_from_phase",
    "factorization_ok",
]

TWO_PI = 2 * np.pi
CSV_POINTS = 2048


class PhaseDistribution:
    """Base class.  Subclasses provide ``fourier`` and usually ``evaluate``."""

    kind = "abstract"

    def fourier(self, jmax: int) -> np.ndarray:
        raise NotImplementedError

    def coefficient(self, j: int) -> complex:
        f = self.fourier(abs(j))[abs(j)]
        return complex(f if j >= 0 else np.conj(f))

    def bandwidth(self, tol: float = 1e-13) -> int:
        """Smallest J with |F_j| below ``tol`` for all j > J (estimated)."""
        jmax = 64
        while True:
            f = np.abs(self.fourier(jmax))
            big = np.nonzero(f > tol)[0]
            last = int(big[-1]) if big.size else 0
            if last < jmax - 8 or jmax >= 1 << 16:
                return last
            jmax *= 2

    def evaluate(self, theta):
        """L(theta) by the Fourier series (subclasses may override)."""
        theta = np.asarray(theta, dtype=float)
        jb = self.bandwidth()
        f = self.fourier(jb)
        j = np.arange(1, jb + 1)
        phase = np.exp(-1j * np.multiply.outer(theta, j))
        val = f[0].real + 2 * np.real(phase @ f[1:]) if jb else np.full(theta.shape, f[0].real)
        return val / TWO_PI

    def normalization(self) -> float:
        return float(self.fourier(0)[0].real)

    def sample(self, n: int = CSV_POINTS):
        theta = TWO_PI * np.arange(n) / n
        return theta, self.evaluate(theta)

    def to_csv(self, path=None, n: int = CSV_POINTS) -> str:
        theta, vals = self.sample(n)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theta", "L"])
        for t, v in zip(theta, vals):
            w.writerow([f"{t:.17g}", f"{v:.17g}"])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def descriptor(self) -> dict:
        return {"kind": self.kind}


class PointPhase(PhaseDistribution):
    """All weight at one angle (a coherent state's phase)."""

    kind = "point"

    def __init__(self, theta0: float):
        self.theta0 = float(theta0)

    def fourier(self, jmax):
        return np.exp(1j * np.arange(jmax + 1) * self.theta0)

    def bandwidth(self, tol=1e-13):
        raise PreconditionError("a point phase has no finite bandwidth")

    def evaluate(self, theta):
        raise PreconditionError("a point phase is a Dirac delta and has no pointwise value")

    def descriptor(self):
        return {"kind": self.kind, "theta0": self.theta0}


class UniformPhase(PhaseDistribution):
    kind = "uniform"

    def fourier(self, jmax):
        f = np.zeros(jmax + 1, dtype=complex)
        f[0] = 1.0
        return f

    def bandwidth(self, tol=1e-13):
        return 0

    def evaluate(self, theta):
        return np.full(np.shape(theta), 1 / TWO_PI)


class GaussianPhase(PhaseDistribution):
    """Normal distribution of the phase, wrapped onto the circle."""

    kind = "gaussian"

    def __init__(self, theta0: float, dtheta: float):
        if not dtheta > 0:
            raise DomainError("dtheta must be positive")
        self.theta0 = float(theta0)
        self.dtheta = float(dtheta)

    def fourier(self, jmax):
        j = np.arange(jmax + 1)
        return np.exp(1j * j * self.theta0 - 0.5 * (j * self.dtheta) ** 2)

    def bandwidth(self, tol=1e-13):
        return int(math.ceil(math.sqrt(2 * math.log(1 / tol)) / self.dtheta)) + 1

    def evaluate(self, theta):
        theta = np.asarray(theta, dtype=float)
        x = np.remainder(theta - self.theta0 + np.pi, TWO_PI) - np.pi
        wraps = int(math.ceil(8 * self.dtheta / TWO_PI)) + 1
        s = sum(np.exp(-0.5 * ((x + TWO_PI * k) / self.dtheta) ** 2) for k in range(-wraps, wraps + 1))
        return s / (math.sqrt(TWO_PI) * self.dtheta)

    def descriptor(self):
        return {"kind": self.kind, "theta0": self.theta0, "dtheta": self.dtheta}


def _poisson_range(mean: float, width: float = 12.0):
    """x range carrying all but ~1e-16 of a Poisson(mean) weight."""
    s = math.sqrt(mean)
    lo = max(0, int(math.floor(mean - width * s - 5)))
    hi = int(math.ceil(mean + width * s + 30))
    return lo, hi


class KerrCoherentPhase(PhaseDistribution):
    """Phase distribution of a Kerr-modulated coherent state.

    L(theta) = (1/2pi) sum_x Poisson_x(|a|^2) D_x(theta - theta0 + gk (2x - 1)),
    F_y = e^{i y theta0} sum_{x >= |y|} Poisson_x e^{-i y gk (2x - 1)}.
    """

    kind = "kerr_coherent"

    def __init__(self, amplitude: float, theta0: float, gk: float, ctl: SeriesControl = SeriesControl()):
        if amplitude < 0 or gk < 0:
            raise DomainError("amplitude and gk must be non-negative")
        self.amplitude = float(amplitude)
        self.theta0 = float(theta0)
        self.gk = float(gk)
        self.ctl = ctl
        lo, hi = _poisson_range(self.amplitude**2)
        if hi - lo > ctl.max_terms:
            raise ConvergenceError(f"Poisson sum needs {hi - lo} terms, more than max_terms")
        self._x = np.arange(lo, hi + 1)
        a2 = self.amplitude**2
        if a2 == 0:
            logp = np.where(self._x == 0, 0.0, -np.inf)
        else:
            logp = -a2 + self._x * math.log(a2) - gammaln(self._x + 1)
        p = np.exp(logp)
        keep = p > ctl.term_tol * p.max()
        self._x, self._p = self._x[keep], p[keep]

    def fourier(self, jmax):
        out = np.zeros(jmax + 1, dtype=complex)
        for y in range(jmax + 1):
            m = self._x >= y
            if not m.any():
                break
            x = self._x[m]
            out[y] = np.exp(1j * y * self.theta0) * np.sum(
                self._p[m] * np.exp(-1j * y * self.gk * (2 * x - 1)))
        return out

    def bandwidth(self, tol=1e-13):
        return int(self._x[-1])

    def evaluate(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape)
        for x, p in zip(self._x, self._p):
            out += p * dirichlet_kernel(int(x), theta - self.theta0 + self.gk * (2 * x - 1))
        return out / TWO_PI

    def descriptor(self):
        return {"kind": self.kind, "amplitude": self.amplitude, "theta0": self.theta0, "gk": self.gk}


class KerrDisplacedThermalPhase(PhaseDistribution):
    """Phase distribution of a Kerr-modulated displaced thermal state.

    F_y = e^{i y theta0} sum_{x >= y} e^{-i y gk (2x - 1)} W(x, y) for y >= 0 with

        W(x, y) = e^{-a^2/n} / (n x! y!) Gamma(x + 1 + y/2) (n/(n+1))^{x+1}
                  z^{y/2} 1F1(x + 1 + y/2; y + 1; z),   z = a^2 / (n (n+1)).

    (x, y) index the number-basis pair k = x + y, l = x - y; pairs with
    l > k enter through F_{-y} = conj F_y.  1F1 is advanced in x by the
    three-term recurrence in its first parameter, seeded from two series
    values per y; the recurrence is forward-stable because 1F1 is the
    dominant solution for z > 0.
    """

    kind = "kerr_displaced_thermal"

    def __init__(self, amplitude: float, theta0: float, nbar: float, gk: float,
                 ctl: SeriesControl = SeriesControl(), tol: float = 1e-12):
        if not nbar > 0:
            raise DomainError("the displaced thermal phase series needs nbar > 0")
        if amplitude < 0 or gk < 0:
            raise DomainError("amplitude and gk must be non-negative")
        self.amplitude = float(amplitude)
        self.theta0 = float(theta0)
        self.nbar = float(nbar)
        self.gk = float(gk)
        self.ctl = ctl
        self.tol = tol
        self._f = None
        self._env = None
        self._compute()

    def _ymax_guess(self):
        a2 = self.amplitude**2
        if a2 == 0:
            return 0
        sigma = math.sqrt(self.nbar / (2 * a2))
        return int(math.ceil(9 / sigma)) + 10

    def _compute(self):
        ymax = self._ymax_guess()
        while True:
            f, env = self._series(ymax)
            if ymax == 0 or env[-1] < 1e-3 * self.tol * env[0]:
                break
            ymax *= 2
        # trim trailing negligible harmonics
        big = np.nonzero(env > 1e-3 * self.tol * env[0])[0]
        last = int(big[-1]) if big.size else 0
        self._f, self._env = f[: last + 1], env[: last + 1]

    def _series(self, ymax):
        a, n, gk = self.amplitude, self.nbar, self.gk
        y = np.arange(ymax + 1, dtype=float)
        f = np.zeros(ymax + 1, dtype=complex)
        env = np.zeros(ymax + 1)
        if a == 0:
            f[0] = env[0] = 1.0
            return f, env
        z = a * a / (n * (n + 1))
        lq = math.log(n / (n + 1))
        b = y + 1
        a1 = 1.5 * y + 1  # first parameter of 1F1 at x = y
        lm0 = np.array([log_hyp1f1(ai, bi, z, self.ctl) for ai, bi in zip(a1, b)])
        lm1 = np.array([log_hyp1f1(ai + 1, bi, z, self.ctl) for ai, bi in zip(a1, b)])
        # M(a) = m * exp(scale); keep mantissas of M(a-1) and M(a)
        scale = lm0.copy()
        m_prev = np.ones_like(y)
        m_cur = np.exp(lm1 - lm0)
        const = (-a * a / n - math.log(n) - gammaln(y + 1) + 0.5 * y * math.log(z))
        active = np.ones(ymax + 1, dtype=bool)
        quiet = np.zeros(ymax + 1, dtype=int)
        last_logw = np.full(ymax + 1, -np.inf)
        t = 0
        while active.any():
            x = y + t
            if t == 0:
                ln_m = scale.copy()
            elif t == 1:
                ln_m = scale + np.log(m_cur)
            else:
                aa = a1 + t - 1  # advance from M(aa-1), M(aa) to M(aa+1)
                new = ((2 * aa - b + z) * m_cur + (b - aa) * m_prev) / aa
                m_prev, m_cur = m_cur, new
                big = m_cur > 1e200
                if big.any():
                    m_prev[big] *= 1e-200
                    m_cur[big] *= 1e-200
                    scale[big] += 200 * math.log(10)
                ln_m = scale + np.log(m_cur)
            logw = const + gammaln(x + 1 + 0.5 * y) - gammaln(x + 1) + (x + 1) * lq + ln_m
            w = np.where(active, np.exp(logw), 0.0)
            f += w * np.exp(-1j * y * gk * (2 * x - 1))
            env += w
            # a y finishes once its terms fall and stay below tol of its running total
            small = (w < self.tol * env) & (logw < last_logw)
            quiet = np.where(active & small, quiet + 1, 0)
            last_logw = logw
            active &= quiet < 3
            t += 1
            if t > self.ctl.max_terms:
                bad = int(np.nonzero(active)[0][0])
                raise ConvergenceError(
                    f"phase series did not settle by anti-diagonal x = {bad + t} (y = {bad})",
                    best=f)
        if not np.all(np.isfinite(f)):
            bad = int(np.nonzero(~np.isfinite(f))[0][0])
            raise ConvergenceError(f"overflow in the phase series at y = {bad}")
        f *= np.exp(1j * y * self.theta0)
        return f, env

    def fourier(self, jmax):
        out = np.zeros(jmax + 1, dtype=complex)
        k = min(jmax + 1, self._f.size)
        out[:k] = self._f[:k]
        return out

    def bandwidth(self, tol=1e-13):
        big = np.nonzero(self._env > tol)[0]
        return int(big[-1]) if big.size else 0

    def descriptor(self):
        return {"kind": self.kind, "amplitude": self.amplitude, "theta0": self.theta0,
                "nbar": self.nbar, "gk": self.gk}


class SampledPhase(PhaseDistribution):
    """L given on a uniform grid of angles starting at 0; trigonometric interpolation."""

    kind = "sampled"

    def __init__(self, values):
        v = np.asarray(values, dtype=float)
        if v.ndim != 1 or v.size < 4:
            raise DomainError("need at least four samples")
        if not np.all(np.isfinite(v)):
            raise DomainError("samples must be finite")
        self.values = v
        n = v.size
        self._f = np.fft.ifft(v)[: n // 2] * TWO_PI

    def fourier(self, jmax):
        out = np.zeros(jmax + 1, dtype=complex)
        k = min(jmax + 1, self._f.size)
        out[:k] = self._f[:k]
        return out

    def bandwidth(self, tol=1e-13):
        return self._f.size - 1

    def normalization(self):
        return float(self._f[0].real)


class HistogramPhase(PhaseDistribution):
    """Piecewise-constant L: weight h_j spread evenly over each bin.

    Weights may be negative (quasi-distributions).
    """

    kind = "histogram"

    def __init__(self, midpoints, widths, weights):
        self.midpoints = np.asarray(midpoints, dtype=float)
        self.widths = np.asarray(widths, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        if not (self.midpoints.shape == self.widths.shape == self.weights.shape):
            raise DomainError("midpoints, widths and weights must have equal length")
        if np.any(self.widths <= 0):
            raise DomainError("bin widths must be positive")
        if self.widths.sum() > TWO_PI * (1 + 1e-12):
            raise DomainError("bins cover more than one period")
        lo = np.remainder(self.midpoints - 0.5 * self.widths, TWO_PI)
        order = np.argsort(lo)
        lo, wd = lo[order], self.widths[order]
        gaps = np.diff(np.append(lo, lo[0] + TWO_PI)) - wd
        if np.any(gaps < -1e-12):
            raise DomainError("bins overlap")

    def fourier(self, jmax):
        j = np.arange(jmax + 1)[:, None]
        return np.sum(self.weights[None, :] * sinc(0.5 * j * self.widths[None, :])
                      * np.exp(1j * j * self.midpoints[None, :]), axis=1)

    def normalization(self):
        return float(self.weights.sum())

    def evaluate(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape)
        for c, w, h in zip(self.midpoints, self.widths, self.weights):
            d = np.remainder(theta - c + np.pi, TWO_PI) - np.pi
            out += np.where(np.abs(d) < 0.5 * w, h / w, 0.0)
        return out

    def mass_between(self, lo: float, hi: float) -> float:
        """Integral of L over [lo, hi] (hi - lo <= 2 pi), exact for the step function."""
        total = 0.0
        for c, w, h in zip(self.midpoints, self.widths, self.weights):
            a = c - 0.5 * w
            for shift in (-TWO_PI, 0.0, TWO_PI):
                s, e = a + shift, a + w + shift
                overlap = min(e, hi) - max(s, lo)
                if overlap > 0:
                    total += h * overlap / w
        return total

    def descriptor(self):
        return {"kind": self.kind, "bins": int(self.weights.size)}


def kerr_phase_coherent(amplitude: float, theta0: float, gk: float,
                        ctl: SeriesControl = SeriesControl()) -> KerrCoherentPhase:
    return KerrCoherentPhase(amplitude, theta0, gk, ctl)


def kerr_phase_displaced_thermal(amplitude: float, theta0: float, nbar: float, gk: float,
                                 ctl: SeriesControl = SeriesControl()) -> KerrDisplacedThermalPhase:
    return KerrDisplacedThermalPhase(amplitude, theta0, nbar, gk, ctl)


def histogram_approximate(dist: PhaseDistribution, bins: int) -> HistogramPhase:
    """Uniform-width histogram starting at angle 0 with h_j = integral over bin j."""
    if bins < 1:
        raise DomainError("need at least one bin")
    width = TWO_PI / bins
    mids = width * (np.arange(bins) + 0.5)
    if isinstance(dist, HistogramPhase):
        h = np.array([dist.mass_between(c - 0.5 * width, c + 0.5 * width) for c in mids])
    elif isinstance(dist, PointPhase):
        k = int(np.floor(np.remainder(dist.theta0, TWO_PI) / width)) % bins
        h = np.zeros(bins)
        h[k] = 1.0
    else:
        jb = dist.bandwidth()
        f = dist.fourier(jb)
        j = np.arange(1, jb + 1)
        # bin integral of e^{-i j theta}: width * sinc(j width / 2) e^{-i j c}
        kern = width * sinc(0.5 * j * width)
        h = (f[0].real * width
             + 2 * np.real(np.exp(-1j * np.outer(mids, j)) @ (f[1:] * kern))) / TWO_PI
    return HistogramPhase(mids, np.full(bins, width), h)


def moments_from_phase(dist: PhaseDistribution, amplitude: float, m: int, n: int) -> complex:
    """c_mn of a ring pump |alpha| = amplitude with phase distribution ``dist``.

    For a histogram this is sum_j h_j sinc(width_j (m - n) / 2) e^{i theta_j (m - n)}
    times amplitude^(m+n), which is exactly what ``fourier`` returns.
    """
    if m < 0 or n < 0:
        raise DomainError("moment orders must be non-negative")
    return complex(amplitude ** (m + n) * dist.coefficient(m - n))


def phase_marginal(model, n_theta: int = CSV_POINTS, spec=None) -> PhaseDistribution:
    """L(theta) = int_0^inf P(r e^{i theta}) r dr for any pump model."""
    ring = model.ring
    if ring is not None:
        return ring.phase
    if model.phase_symmetric:
        return UniformPhase()
    f = model.phase_fourier(n_theta // 2 - 1, spec)
    theta = TWO_PI * np.arange(n_theta) / n_theta
    j = np.arange(1, f.size)
    vals = (f[0].real + 2 * np.real(np.exp(-1j * np.outer(theta, j)) @ f[1:])) / TWO_PI
    return SampledPhase(vals)


@dataclass
class SchmidtDecomposition:
    """P(r, theta) ~ sum_r weights[r] radial[:, r] angular[r, :].

    Factors are orthonormal under the grid quadrature: sum A_r A_s dr and
    sum L_r L_s dtheta.
    """

    weights: np.ndarray
    radii: np.ndarray
    angles: np.ndarray
    radial_factors: np.ndarray
    angular_factors: np.ndarray
    dr: np.ndarray
    dtheta: float

    def reconstruct(self, rank: int | None = None) -> np.ndarray:
        k = self.weights.size if rank is None else rank
        return (self.radial_factors[:, :k] * self.weights[:k]) @ self.angular_factors[:k]

    def rank_for(self, fraction: float = 0.99) -> int:
        """Number of terms whose weights reach ``fraction`` of the total weight."""
        c = np.cumsum(self.weights) / self.weights.sum()
        return int(np.searchsorted(c, fraction) + 1)

    def ratio(self) -> float:
        return float(self.weights[1] / self.weights[0]) if self.weights.size > 1 else 0.0


def schmidt_decompose(grid) -> SchmidtDecomposition:
    """Weighted SVD of the raster with measure dr dtheta."""
    if grid.radii.size < 2 or grid.angles.size < 2:
        raise DomainError("degenerate grid")
    dr = grid.radial_widths()
    dth = grid.d_theta
    sr = np.sqrt(dr)
    k = sr[:, None] * grid.values * math.sqrt(dth)
    s, u, vt = svd(k)
    return SchmidtDecomposition(
        weights=s, radii=grid.radii.copy(), angles=grid.angles.copy(),
        radial_factors=u / sr[:, None], angular_factors=vt / math.sqrt(dth),
        dr=dr, dtheta=dth)


FACTORIZATION_GATE = 0.05


def factorization_ok(decomp: SchmidtDecomposition, threshold: float = FACTORIZATION_GATE) -> bool:
    """True when the amplitude-phase product form is a fair description (lambda_2/lambda_1 small)."""
    return decomp.ratio() < threshold
