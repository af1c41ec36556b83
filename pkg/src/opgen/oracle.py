"""Exact three-mode evolution used as ground truth.

The interaction g (a_p a_i^+ a_s^+ + h.c.) creates signal and idler photons
in pairs and conserves n_p + k, k the pair number.  Pump number states
|N> |0 0> therefore evolve inside (N + 1)-dimensional sectors spanned by
|N - k> |k k>, where the generator is tridiagonal with off-diagonal
g sqrt(N - k) (k + 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .engine import OpgParams, TwoModeState
from .errors import ConvergenceError, DomainError, PreconditionError
from .numerics import QuadratureSpec, gauss_legendre, unitary_evolve
from .phase import PointPhase
from .pumps import PumpModel

__all__ = [
    "FockTruncation",
    "ThreeModeState",
    "pump_cutoff_for",
    "evolve_coherent",
    "evolve_coherent_state",
    "evolve_mixture",
    "third_order_negativity",
]

TAIL = 1e-12


def pump_cutoff_for(amplitude: float) -> int:
    a = abs(amplitude)
    return int(math.ceil(a * a + 10 * a + 10))


def _pair_cutoff_for(amplitude: float, gt: float) -> int:
    # generous: pairs follow a thermal-like law with ratio tanh^2(gt |alpha|)
    t = math.tanh(gt * abs(amplitude) * 1.5 + 1e-300)
    if t == 0:
        return 1
    return max(4, int(math.ceil(math.log(TAIL) / (2 * math.log(t)))) + 4)


@dataclass(frozen=True)
class FockTruncation:
    pump_cutoff: int
    pair_cutoff: int

    def __post_init__(self):
        if self.pump_cutoff < 1 or self.pair_cutoff < 1:
            raise DomainError("cutoffs must be at least 1")
        if self.pair_cutoff > self.pump_cutoff:
            raise DomainError("pair_cutoff cannot exceed pump_cutoff")

    @classmethod
    def for_coherent(cls, amplitude: float, gt: float) -> "FockTruncation":
        p = pump_cutoff_for(amplitude)
        return cls(p, min(p, _pair_cutoff_for(amplitude, gt)))


@lru_cache(maxsize=64)
def _sector_columns(gt: float, pump_cutoff: int, pair_cutoff: int) -> np.ndarray:
    """u[N, k] = <N-k, k k| U |N, 0 0>, zero where k > min(N, pair_cutoff)."""
    u = np.zeros((pump_cutoff + 1, pair_cutoff + 1), dtype=complex)
    for n in range(pump_cutoff + 1):
        dim = min(n, pair_cutoff) + 1
        k = np.arange(dim - 1)
        off = np.sqrt(n - k) * (k + 1)
        h = np.diag(off, -1) + np.diag(off, 1)
        e0 = np.zeros(dim, dtype=complex)
        e0[0] = 1
        u[n, :dim] = unitary_evolve(h, gt, e0) if dim > 1 else e0
    return u


@dataclass
class ThreeModeState:
    """Amplitudes psi[N, k] of |N - k>_p |k k>, N the conserved total."""

    amplitudes: np.ndarray

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def reduced(self) -> np.ndarray:
        """Signal-idler coefficients rho[n, m] after tracing out the pump.

        rho^{nm} = sum_p psi[p+n, n] psi[p+m, m]^*, p the pump photon number.
        """
        psi = self.amplitudes
        n_tot, k_max = psi.shape[0] - 1, psi.shape[1] - 1
        p_count = n_tot + 1
        a = np.zeros((p_count, k_max + 1), dtype=complex)
        for k in range(k_max + 1):
            a[: p_count - k, k] = psi[k:, k]
        return a.T @ a.conj()


def _coherent_weights(alpha: complex, pump_cutoff: int) -> np.ndarray:
    n = np.arange(pump_cutoff + 1)
    r = abs(alpha)
    if r == 0:
        c = np.zeros(pump_cutoff + 1, dtype=complex)
        c[0] = 1
        return c
    logm = -0.5 * r * r + n * math.log(r) - 0.5 * gammaln(n + 1)
    return np.exp(logm) * np.exp(1j * n * np.angle(alpha))


def evolve_coherent_state(alpha: complex, params: OpgParams,
                          trunc: FockTruncation | None = None) -> ThreeModeState:
    gt = params.gt
    if trunc is None:
        trunc = FockTruncation.for_coherent(abs(alpha), gt)
    c = _coherent_weights(alpha, trunc.pump_cutoff)
    lost = 1.0 - float(np.sum(np.abs(c) ** 2))
    if lost > TAIL:
        raise PreconditionError(f"pump truncation drops {lost:.3g} of the population")
    u = _sector_columns(float(gt), trunc.pump_cutoff, trunc.pair_cutoff)
    drift = np.max(np.abs(np.sum(np.abs(u) ** 2, axis=1) - 1))
    if drift > 1e-9:
        raise ConvergenceError(f"norm drift {drift:.3g} in sector evolution", best=drift)
    psi = c[:, None] * u
    edge = float(np.sum(np.abs(psi[:, -1]) ** 2)) if trunc.pair_cutoff < trunc.pump_cutoff else 0.0
    if edge > TAIL:
        raise PreconditionError(f"population {edge:.3g} reaches the pair cutoff {trunc.pair_cutoff}")
    return ThreeModeState(psi)


def evolve_coherent(alpha: complex, params: OpgParams,
                    trunc: FockTruncation | None = None) -> TwoModeState:
    """Exact signal-idler state for a coherent pump |alpha>."""
    st = evolve_coherent_state(alpha, params, trunc)
    rho = st.reduced()
    rho = 0.5 * (rho + rho.conj().T)
    tail = max(0.0, 1.0 - float(np.trace(rho).real))
    return TwoModeState(rho, tail, "Exact", params.gt,
                        {"kind": "Coherent", "amplitude": abs(alpha), "theta0": float(np.angle(alpha))},
                        {"pump_cutoff": st.amplitudes.shape[0] - 1, "pair_cutoff": st.amplitudes.shape[1] - 1})


def _mixture_nodes(pump: PumpModel, n_r: int, n_theta: int, spec: QuadratureSpec):
    ring = pump.ring
    if ring is not None:
        if isinstance(ring.phase, PointPhase):
            return np.array([ring.radius]), np.array([ring.phase.theta0]), np.array([1.0])
        th, lval = ring.phase.sample(n_theta)
        return np.full(n_theta, ring.radius), th, np.asarray(lval) * (2 * np.pi / n_theta)
    nodes = pump.radial_nodes()
    if nodes is None:
        x, w = gauss_legendre(n_r)
        big_r = pump.radial_bound()
        r = 0.5 * big_r * (x + 1)
        wr = 0.5 * big_r * w
    else:
        r, wr = nodes
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    rr, tt = np.meshgrid(r, th, indexing="ij")
    p = pump.p_value(rr, tt)
    w = p * (rr * wr[:, None]) * (2 * np.pi / n_theta)
    return rr.ravel(), tt.ravel(), w.ravel()


def evolve_mixture(pump: PumpModel, params: OpgParams, trunc: FockTruncation | None = None,
                   samples: int = 48, n_theta: int = 16,
                   spec: QuadratureSpec = QuadratureSpec()) -> TwoModeState:
    """Quadrature-weighted combination of exact coherent evolutions.

    ``samples`` Gauss-Legendre radii on [0, R] times ``n_theta`` uniform
    angles; deterministic, no sampling noise.
    """
    if pump.signed:
        raise PreconditionError("the exact oracle only accepts non-negative P-functions")
    r, th, w = _mixture_nodes(pump, samples, n_theta, spec)
    if np.any(w < -1e-15):
        raise PreconditionError("negative quadrature weight: P is not a probability density")
    keep = w > 0
    r, th, w = r[keep], th[keep], w[keep]
    gt = params.gt
    if trunc is None:
        rmax = float(np.max(r)) if r.size else 0.0
        trunc = FockTruncation.for_coherent(rmax, gt)
    u = _sector_columns(float(gt), trunc.pump_cutoff, trunc.pair_cutoff)
    k_max = trunc.pair_cutoff
    rho = np.zeros((k_max + 1, k_max + 1), dtype=complex)
    for ri, ti, wi in zip(r, th, w):
        c = _coherent_weights(ri * complex(math.cos(ti), math.sin(ti)), trunc.pump_cutoff)
        rho += wi * ThreeModeState(c[:, None] * u).reduced()
    rho = 0.5 * (rho + rho.conj().T)
    total = float(np.sum(w))
    tail = max(0.0, total - float(np.trace(rho).real))
    return TwoModeState(rho, tail, "Exact", gt, pump.descriptor(),
                        {"nodes": int(r.size), "weight_total": total,
                         "pump_cutoff": trunc.pump_cutoff, "pair_cutoff": k_max})


def third_order_negativity(amplitude: float, gt: float) -> float:
    """Negativity of the exact state through third order in gt."""
    a = abs(amplitude)
    return gt * a + (gt * a) ** 2 + gt**3 * (2 * a**3 / 3 - a / 6)
