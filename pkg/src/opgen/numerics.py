"""Quadrature on the phase plane, SVD and unitary evolution.

Integrands are evaluated on whole node arrays at once.  All reductions use a
fixed order so repeated runs give bit-identical results.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, DomainError, NonFiniteError

__all__ = [
    "QuadratureSpec",
    "IntegrationResult",
    "gauss_legendre",
    "integrate_radial",
    "integrate_polar",
    "svd",
    "unitary_evolve",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and limits for phase-plane integrals.

    ``radial_cutoff`` is the upper limit R of the radial integration.  When
    it is None the caller substitutes the pump's own radial bound.
    """

    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    max_subdivisions: int = 200
    radial_cutoff: float | None = None
    max_angle_points: int = 4096

    def __post_init__(self):
        if not self.abs_tol > 0 or not self.rel_tol > 0:
            raise DomainError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be at least 1")
        if self.radial_cutoff is not None and not self.radial_cutoff > 0:
            raise DomainError("radial_cutoff must be positive")

    def with_cutoff(self, radius: float) -> "QuadratureSpec":
        """Copy with ``radial_cutoff`` filled in if it is still unset."""
        if self.radial_cutoff is not None:
            return self
        return replace(self, radial_cutoff=float(radius))


@dataclass(frozen=True)
class IntegrationResult:
    value: complex | np.ndarray
    error_estimate: float
    evaluations: int
    converged: bool

    def __post_init__(self):
        if self.error_estimate < 0:
            raise ValueError("negative error estimate")


@lru_cache(maxsize=64)
def gauss_legendre(order: int):
    """Nodes and weights of the ``order``-point rule on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _check_finite(values, where):
    bad = ~np.isfinite(values)
    if bad.any():
        idx = np.argwhere(bad)[0]
        raise NonFiniteError(f"integrand is not finite at {where(tuple(idx))}")


class _Panel:
    __slots__ = ("a", "b", "value", "error")

    def __init__(self, a, b, value, error):
        self.a, self.b, self.value, self.error = a, b, value, error


def _panel_rule(f, a, b, low, high, evals):
    """Integrate f over [a, b] with two Gauss-Legendre orders."""
    half, mid = 0.5 * (b - a), 0.5 * (a + b)
    xs_lo, ws_lo = gauss_legendre(low)
    xs_hi, ws_hi = gauss_legendre(high)
    r = np.concatenate([mid + half * xs_lo, mid + half * xs_hi])
    vals = np.asarray(f(r))
    _check_finite(vals, lambda i: f"radius={r[i[0]]!r}")
    evals[0] += r.size
    v_lo = np.tensordot(ws_lo, vals[:low], axes=(0, 0)) * half
    v_hi = np.tensordot(ws_hi, vals[low:], axes=(0, 0)) * half
    return v_hi, np.abs(v_hi - v_lo)


def integrate_radial(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    spec: QuadratureSpec = QuadratureSpec(),
    initial_panels: int = 8,
    orders: tuple[int, int] = (12, 24),
) -> IntegrationResult:
    """Adaptive Gauss-Legendre integral of a (possibly vector-valued) f.

    ``f`` maps an array of n radii to an array of shape ``(n, ...)``.
    Panels are bisected worst-first until every component meets
    ``max(abs_tol, rel_tol*|value|)`` or ``max_subdivisions`` bisections were
    spent.  The returned state is the one with the smallest error seen, so
    a larger subdivision budget never gives a larger error estimate.
    """
    low, high = orders
    evals = [0]
    edges = np.linspace(a, b, initial_panels + 1)
    panels = []
    for k in range(initial_panels):
        v, e = _panel_rule(f, edges[k], edges[k + 1], low, high, evals)
        panels.append(_Panel(edges[k], edges[k + 1], v, e))

    def totals(ps):
        # fixed left-to-right order keeps the sum reproducible
        ps = sorted(ps, key=lambda p: p.a)
        val = ps[0].value.copy() if np.ndim(ps[0].value) else ps[0].value
        err = ps[0].error.copy() if np.ndim(ps[0].error) else ps[0].error
        for p in ps[1:]:
            val = val + p.value
            err = err + p.error
        return val, err

    def excess(val, err):
        target = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(val))
        return float(np.max(err - target)), float(np.max(err))

    value, err = totals(panels)
    worst, best_err = excess(value, err)
    best = (value, best_err)
    heap = [(-float(np.max(p.error)), i, p) for i, p in enumerate(panels)]
    heapq.heapify(heap)
    live = {id(p): p for p in panels}
    counter = len(panels)
    used = 0
    while worst > 0 and used < spec.max_subdivisions:
        _, _, p = heapq.heappop(heap)
        del live[id(p)]
        value = value - p.value
        err = err - p.error
        m = 0.5 * (p.a + p.b)
        for lo, hi in ((p.a, m), (m, p.b)):
            v, e = _panel_rule(f, lo, hi, low, high, evals)
            q = _Panel(lo, hi, v, e)
            live[id(q)] = q
            heapq.heappush(heap, (-float(np.max(e)), counter, q))
            counter += 1
            value = value + v
            err = err + e
        err = np.maximum(err, 0.0)
        used += 1
        worst, err_max = excess(value, err)
        if err_max < best[1]:
            best = (value, err_max)
    if worst <= 0:
        value, err = totals(list(live.values()))
        return IntegrationResult(value, excess(value, err)[1], evals[0], True)
    return IntegrationResult(best[0], best[1], evals[0], False)


def _theta_average(f, r, n_theta, max_points, tol):
    """Periodic trapezoid over the angle, doubling until stable.

    Returns the angular integral at each radius and the number of angles used.
    """
    def trap(n):
        th = 2 * np.pi * np.arange(n) / n
        vals = np.asarray(f(r[:, None], th[None, :]))
        vals = np.broadcast_to(vals, (r.size, n) + vals.shape[2:])
        _check_finite(vals, lambda i: f"radius={r[i[0]]!r}, angle={th[i[1]]!r}")
        return vals.sum(axis=1) * (2 * np.pi / n)

    n = n_theta
    prev = trap(n)
    while n < max_points:
        n *= 2
        cur = trap(n)
        if np.max(np.abs(cur - prev)) <= tol:
            return cur, n
        prev = cur
    return prev, n


def integrate_polar(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    spec: QuadratureSpec,
    n_theta: int = 16,
) -> IntegrationResult:
    """Integrate f(r, theta) over [0, R] x [0, 2 pi) with measure dr dtheta.

    ``f`` receives ``r`` of shape (n, 1) and ``theta`` of shape (1, k) and
    returns values broadcastable to (n, k) or (n, k, ...).  The area
    element |alpha| is not added; include it in f.  The angular rule doubles
    the number of points until successive trapezoid sums agree to the
    absolute tolerance, then the radial direction is adaptive.
    """
    if spec.radial_cutoff is None:
        raise DomainError("integrate_polar needs an explicit radial_cutoff")
    cap = spec.max_angle_points
    tol = 0.1 * spec.abs_tol

    def radial(r):
        v, _ = _theta_average(f, r, n_theta, cap, tol)
        return v

    return integrate_radial(radial, 0.0, spec.radial_cutoff, spec)


def svd(matrix: np.ndarray):
    """Thin SVD of a real matrix.

    Returns ``(s, u, vt)`` with singular values in non-increasing order.
    The LAPACK divide-and-conquer driver is used (infrastructure, not a
    contribution of this package).
    """
    m = np.asarray(matrix, dtype=float)
    if not np.all(np.isfinite(m)):
        raise NonFiniteError("matrix has non-finite entries")
    u, s, vt = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesdd")
    return s, u, vt


def unitary_evolve(hamiltonian, time: float, state: np.ndarray, herm_tol: float = 1e-12) -> np.ndarray:
    """Apply exp(-i H t) to ``state``.

    ``hamiltonian`` may be dense or scipy-sparse; it is densified and
    exponentiated by scaling and squaring, which is adequate for the block
    sizes used here.
    """
    h = hamiltonian.toarray() if hasattr(hamiltonian, "toarray") else np.asarray(hamiltonian)
    psi = np.asarray(state, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DomainError("hamiltonian must be square")
    if h.shape[0] != psi.shape[0]:
        raise DomainError(f"dimension mismatch: H is {h.shape[0]}, state is {psi.shape[0]}")
    scale = max(1.0, float(np.max(np.abs(h))) if h.size else 1.0)
    if np.max(np.abs(h - h.conj().T), initial=0.0) > herm_tol * scale:
        raise DomainError("hamiltonian is not Hermitian")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-12:
        raise DomainError(f"state is not normalised (norm {norm!r})")
    if time == 0:
        return psi.copy()
    u = scipy.linalg.expm(-1j * time * h)
    return u @ psi
