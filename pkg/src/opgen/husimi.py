"""Kerr-modulated displaced thermal states: Fock band and numerical P-function.

The density matrix is kept as a band ``band[d, m] = <m|rho|m+d>`` for
d >= 0.  The P-function is recovered through the normally ordered
characteristic function chi_N(eta) = Tr[rho exp(eta a^+) exp(-eta^* a)],
which equals the Fourier transform of the Husimi function multiplied by
exp(|eta|^2).  Its angular harmonics are Hankel-transformed to the radial
harmonics of P.

Kerr modulation makes chi_N grow without bound for large |eta|, so the
P-function is singular.  The transform is therefore carried out on a disk
whose radius is set by the un-modulated envelope exp(-nbar |eta|^2)
dropping to 1e-12, followed by a short cosine taper.  At zero modulation
this is exact to that level; with modulation the result is the band-limited
P-function, which is all the two-mode coefficients ever see (their kernel
decays like exp(-pi |eta| / gt) in the conjugate plane).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import ConvergenceError, DomainError, PreconditionError
from .numerics import gauss_legendre
from .special import bessel_j_sequence

__all__ = [
    "fock_cutoff_displaced_thermal",
    "displaced_thermal_band",
    "kerr_rotate_band",
    "band_moment",
    "HusimiHarmonics",
]

_LOG_BIG = 100 * math.log(10)


def fock_cutoff_displaced_thermal(amplitude: float, nbar: float, width: float = 10.0) -> int:
    """Photon-number cutoff for a displaced thermal state.

    <n> + width * std, plus enough room for the geometric thermal tail
    (ratio nbar/(nbar+1) per photon) to fall by a further 1e-14.
    """
    a2 = amplitude * amplitude
    var = nbar * (nbar + 1) + a2 * (2 * nbar + 1)
    tail = 32.0 / math.log1p(1.0 / nbar) if nbar > 0 else 0.0
    return int(math.ceil(a2 + nbar + width * math.sqrt(var) + tail)) + 1


def displaced_thermal_band(amplitude: float, phase: float, nbar: float,
                           n_max: int, d_max: int | None = None,
                           floor: float = 1e-17) -> np.ndarray:
    """Band ``<m|rho|m+d>`` of a displaced thermal state, 0 <= m, m+d <= n_max.

    Uses the generalised-Laguerre form of the number-basis elements,
    evaluated by the three-term recurrence in m with explicit log scaling.
    Harmonics whose largest element is below ``floor`` are dropped.
    """
    if nbar <= 0:
        raise DomainError("displaced_thermal_band needs nbar > 0")
    if amplitude < 0:
        raise DomainError("amplitude must be non-negative")
    if d_max is None:
        d_max = n_max
    d_max = min(d_max, n_max)
    if amplitude == 0:
        d_max = 0
    d = np.arange(d_max + 1, dtype=float)
    y = amplitude**2 / (nbar * (nbar + 1))
    band = np.zeros((d_max + 1, n_max + 1), dtype=complex)
    lag_prev = np.zeros(d_max + 1)
    lag = np.ones(d_max + 1)
    log_scale = np.zeros(d_max + 1)
    log_a = math.log(amplitude) if amplitude > 0 else 0.0
    base = -amplitude**2 / (1 + nbar)
    phase_d = np.exp(-1j * d * phase)
    ln_nbar, ln_1p = math.log(nbar), math.log1p(nbar)
    for m in range(n_max + 1):
        if m > 0:
            k = m - 1
            lag_new = ((2 * k + 1 + d + y) * lag - (k + d) * lag_prev) / m
            lag_prev, lag = lag, lag_new
            big = lag > 1e100
            if big.any():
                lag[big] *= 1e-100
                lag_prev[big] *= 1e-100
                log_scale[big] += _LOG_BIG
        logv = (m * ln_nbar - (m + d + 1) * ln_1p
                + 0.5 * (gammaln(m + 1) - gammaln(m + d + 1))
                + d * log_a + base + np.log(lag) + log_scale)
        ok = m + d <= n_max
        band[:, m] = np.where(ok, np.exp(np.where(ok, logv, -np.inf)), 0.0) * phase_d
    peak = np.abs(band).max(axis=1)
    keep = np.nonzero(peak > floor * peak[0])[0]
    last = int(keep[-1]) if keep.size else 0
    return band[: last + 1].copy()


def kerr_rotate_band(band: np.ndarray, gk: float) -> np.ndarray:
    """Apply exp(-i gk n(n-1)) rho exp(+i gk n(n-1)) to a band.

    <m|rho|m+d> picks up exp(+i gk d (2m + d - 1)).
    """
    if gk == 0:
        return band
    d = np.arange(band.shape[0])[:, None]
    m = np.arange(band.shape[1])[None, :]
    return band * np.exp(1j * gk * d * (2 * m + d - 1))


def band_moment(band: np.ndarray, m: int, n: int) -> complex:
    """Normally ordered moment Tr[rho a^+^n a^m] from a band."""
    j = n - m
    dim = band.shape[1]
    if abs(j) >= band.shape[0]:
        return 0j
    k = np.arange(m, dim)
    k = k[(k + j >= 0) & (k + j < dim)]
    if j >= 0:
        rho = band[j, k]  # <k|rho|k+j>
    else:
        rho = np.conj(band[-j, k + j])  # conj(<k+j|rho|k>)
    logc = 0.5 * (gammaln(k + 1) + gammaln(k + j + 1)) - gammaln(k - m + 1)
    return complex(np.sum(rho * np.exp(logc)))


def _normal_char_harmonics(band: np.ndarray, u: np.ndarray) -> np.ndarray:
    """A_d(u) = sum_m <m|rho|m+d> l_m^d(u) with Laguerre functions l.

    l_m^d(u) = sqrt(m!/(m+d)!) u^d L_m^d(u^2) exp(-u^2/2), generated by the
    normalised three-term recurrence.  chi_N's d-th harmonic is
    A_d(u) exp(u^2/2) (up to the angular factor handled by the caller).
    """
    n_d, n_m = band.shape
    d = np.arange(n_d, dtype=float)[:, None]
    x = (u * u)[None, :]
    with np.errstate(divide="ignore"):
        log0 = d * np.log(u)[None, :] - 0.5 * x - 0.5 * gammaln(d + 1)
    finite = np.isfinite(log0)
    cur = np.where(finite, 1.0, 0.0)
    prev = np.zeros_like(cur)
    logs = np.where(finite, log0, 0.0)
    out = np.zeros((n_d, u.size), dtype=complex)
    for m in range(n_m):
        if m > 0:
            k = m - 1
            new = ((2 * k + 1 + d - x) * cur - np.sqrt(k * (k + d)) * prev) / np.sqrt((k + 1) * (k + d + 1))
            prev, cur = cur, new
            big = np.abs(cur) > 1e100
            if big.any():
                cur[big] *= 1e-100
                prev[big] *= 1e-100
                logs[big] += _LOG_BIG
            tiny = (np.abs(cur) < 1e-100) & (np.abs(prev) < 1e-100) & (cur != 0)
            if tiny.any():
                cur[tiny] *= 1e100
                prev[tiny] *= 1e100
                logs[tiny] -= _LOG_BIG
        col = band[:, m]
        if not np.any(col):
            continue
        out += col[:, None] * (cur * np.exp(np.minimum(logs, 700.0)))
    return out


def _probe_disk(band, smoothing, tol, start, cap=40.0):
    """Radius beyond which the smoothed chi_N stays below ``tol``."""
    u = np.arange(0.05, cap, 0.05)
    m = np.abs(_normal_char_harmonics(band, u) * np.exp((0.5 - smoothing) * u * u)[None, :]).max(axis=0)
    above = np.nonzero(m >= tol)[0]
    if above.size == 0:
        return start
    if above[-1] == u.size - 1:
        raise ConvergenceError(f"smoothed characteristic function still above {tol} at |eta| = {cap}")
    return float(max(u[above[-1] + 1], 0.1))


@dataclass
class HusimiHarmonics:
    """Radial harmonics P_j(r) = int P(r, theta) e^{i j theta} dtheta.

    Built from a density-matrix band; evaluated at any radii through a
    Gauss-Legendre Hankel transform over the truncated disk.

    Attributes
    ----------
    u, weights : conjugate-plane nodes and quadrature weights (times u)
    chi : (n_harmonics, n_u) normally ordered characteristic harmonics,
        already multiplied by the disk window
    disk_radius : |eta| where the un-modulated envelope reaches 1e-12
    edge_envelope : largest |chi_d| at the disk radius; above ~1e-8 the
        P-function is not resolved by the disk and rasters are regularised
    """

    u: np.ndarray
    weights: np.ndarray
    chi: np.ndarray
    disk_radius: float
    edge_envelope: float
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_band(cls, band: np.ndarray, nbar: float, r_max: float,
                  amplitude: float, taper: float = 0.25, envelope_tol: float = 1e-12,
                  nodes: int | None = None, smoothing: float = 0.0) -> "HusimiHarmonics":
        """Build the transform.

        ``smoothing`` s >= 0 multiplies chi_N by exp(-s |eta|^2), i.e. convolves
        P with a Gaussian of variance s/2 per quadrature (s = 1 gives the
        Husimi function).  With s > 0 the disk radius is found by probing
        where the smoothed chi falls below ``envelope_tol``.
        """
        if nbar <= 0:
            raise PreconditionError("the Husimi route needs nbar > 0")
        if smoothing < 0:
            raise DomainError("smoothing must be non-negative")
        u_c = math.sqrt(math.log(1.0 / envelope_tol) / (nbar + smoothing))
        if smoothing > 0:
            u_c = _probe_disk(band, smoothing, envelope_tol, u_c)
        u_end = (1 + taper) * u_c
        if nodes is None:
            # J_j(2 r u) and chi both oscillate at rate about 2 (r_max + amplitude)
            phase = 2.0 * (r_max + amplitude + 2.0) * u_end
            nodes = int(max(64, math.ceil(2 * phase / math.pi) + 48))
        # split the disk in two panels so the taper starts on a panel edge
        n_in = max(16, int(round(nodes / (1 + taper))))
        xi, wi = gauss_legendre(n_in)
        xt, wt = gauss_legendre(max(16, nodes - n_in))
        u_in = 0.5 * u_c * (xi + 1)
        w_in = 0.5 * u_c * wi
        u_tp = u_c + 0.5 * (u_end - u_c) * (xt + 1)
        w_tp = 0.5 * (u_end - u_c) * wt
        u = np.concatenate([u_in, u_tp])
        w = np.concatenate([w_in, w_tp])
        window = np.ones_like(u)
        s = (u_tp - u_c) / (u_end - u_c)
        window[u_in.size:] = 0.5 * (1 + np.cos(np.pi * s))
        amp = _normal_char_harmonics(band, u)
        chi = amp * np.exp((0.5 - smoothing) * u * u)[None, :]
        edge = float(np.max(np.abs(chi[:, u_in.size - 1]))) if chi.size else 0.0
        chi = chi * window[None, :]
        return cls(u=u, weights=w * u, chi=chi, disk_radius=u_c, edge_envelope=edge,
                   meta={"nodes": int(u.size), "taper": taper, "smoothing": smoothing})

    @property
    def n_harmonics(self) -> int:
        return self.chi.shape[0]

    def at(self, r: np.ndarray, jmax: int | None = None, chunk: int = 48) -> np.ndarray:
        """P_j(r) for j = 0..jmax at the given radii, shape (len(r), jmax+1)."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        top = self.n_harmonics - 1
        if jmax is None:
            jmax = top
        use = min(jmax, top)
        out = np.zeros((r.size, jmax + 1), dtype=complex)
        coef = self.chi[: use + 1] * self.weights[None, :]
        for start in range(0, r.size, chunk):
            rr = r[start:start + chunk]
            z = 2.0 * rr[:, None] * self.u[None, :]
            jv = bessel_j_sequence(use, z)  # (use+1, nr, nu)
            h = np.einsum("jru,ju->rj", jv, coef)
            out[start:start + chunk, : use + 1] = 4.0 * np.conj(h)
        return out
