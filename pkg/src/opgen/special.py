"""Special functions used by the phase-distribution series.

The confluent hypergeometric function is summed in log space because the
parameters reach a few hundred; individual terms overflow long before the
sum does.  Bessel and gamma values come from scipy.special.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .errors import ConvergenceError, DomainError

__all__ = [
    "SeriesControl",
    "ln_gamma",
    "hyp1f1",
    "log_hyp1f1",
    "bessel_i",
    "bessel_j_sequence",
    "hermite_abs_at_zero",
    "dirichlet_kernel",
    "sinc",
]


@dataclass(frozen=True)
class SeriesControl:
    max_terms: int = 100_000
    term_tol: float = 1e-16

    def __post_init__(self):
        if self.max_terms < 1:
            raise DomainError("max_terms must be at least 1")
        if not self.term_tol > 0:
            raise DomainError("term_tol must be positive")


def ln_gamma(x):
    """Natural log of the gamma function for x > 0."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("ln_gamma needs x > 0")
    out = _sp.gammaln(arr)
    return float(out) if np.ndim(out) == 0 else out


def _check_b(b):
    if b <= 0 and float(b).is_integer():
        raise DomainError(f"b = {b} is a non-positive integer")


def _log_series(a, b, z, ctl):
    """log of 1F1(a;b;z) by the ascending series, for a >= 0, b > 0, z >= 0.

    All terms are non-negative.  Terms are accumulated relative to the
    running maximum so nothing overflows.
    """
    if z == 0 or a == 0:
        return 0.0
    log_t = 0.0  # log of current term
    log_max = 0.0
    acc = 1.0  # sum of exp(log_term - log_max)
    comp = 0.0
    k = 0
    while True:
        ratio = (a + k) * z / ((b + k) * (k + 1))
        if ratio == 0:
            return log_max + math.log(acc)
        log_t += math.log(ratio)
        k += 1
        if log_t > log_max:
            shift = math.exp(log_max - log_t)
            acc *= shift
            comp *= shift
            log_max = log_t
        term = math.exp(log_t - log_max)
        # Kahan step
        y = term - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
        if ratio < 1 and term < ctl.term_tol * acc * (1 - ratio):
            return log_max + math.log(acc)
        if k >= ctl.max_terms:
            raise ConvergenceError(
                f"1F1({a}; {b}; {z}) ascending series needs more than {ctl.max_terms} terms",
                best=log_max + math.log(acc),
            )


def _log_asymptotic(a, b, z, ctl):
    """Large-z expansion of log 1F1 for a > 0.  None if it does not settle."""
    # 1F1 ~ Gamma(b)/Gamma(a) e^z z^(a-b) sum_k (b-a)_k (1-a)_k / k! z^-k
    s, t = 1.0, 1.0
    for k in range(200):
        nxt = t * (b - a + k) * (1 - a + k) / ((k + 1) * z)
        if abs(nxt) >= abs(t):
            return None
        t = nxt
        s += t
        if abs(t) < ctl.term_tol * abs(s):
            if s <= 0:
                return None
            return (_sp.gammaln(b) - _sp.gammaln(a) + z + (a - b) * math.log(z)
                    + math.log(s))
    return None


def log_hyp1f1(a: float, b: float, z: float, ctl: SeriesControl = SeriesControl()) -> float:
    """log of 1F1(a; b; z) for a >= 0, b > 0, z >= 0.

    For z > 50 the large-z expansion is tried first and kept only if its
    terms fall below ``term_tol`` before they start growing; with large a
    that never happens and the ascending series takes over.
    """
    _check_b(b)
    if z < 0 or a < 0 or b <= 0:
        raise DomainError("log_hyp1f1 needs a >= 0, b > 0, z >= 0")
    if z > 50 and a > 0:
        v = _log_asymptotic(a, b, z, ctl)
        if v is not None:
            return float(v)
    return _log_series(a, b, z, ctl)


def hyp1f1(a: float, b: float, z: float, ctl: SeriesControl = SeriesControl()) -> float:
    """Kummer's confluent hypergeometric function 1F1(a; b; z).

    For a >= 0 and z >= 0 the value comes from :func:`log_hyp1f1`.
    Otherwise the ascending series is summed directly with ``math.fsum``,
    which is accurate when the terms do not cancel catastrophically
    (moderate |z|).
    """
    _check_b(b)
    if a >= 0 and z >= 0 and b > 0:
        return math.exp(log_hyp1f1(a, b, z, ctl))
    terms = [1.0]
    t = 1.0
    for k in range(ctl.max_terms):
        t *= (a + k) * z / ((b + k) * (k + 1))
        terms.append(t)
        if t == 0 or (abs(t) < ctl.term_tol * abs(math.fsum(terms)) and k > abs(z)):
            return math.fsum(terms)
    raise ConvergenceError(f"1F1({a}; {b}; {z}) did not converge", best=math.fsum(terms))


def bessel_i(order: float, z, scaled: bool | None = None):
    """Modified Bessel function I_nu(z), integer or half-integer nu >= 0.

    For z > 700 the unscaled value would overflow; the result is then
    returned as ``exp(-z) I_nu(z)`` unless ``scaled=False`` is forced, in
    which case inf may be produced.  Pass ``scaled=True`` to always get the
    scaled form.
    """
    nu = float(order)
    if nu < 0 or not (2 * nu).is_integer():
        raise DomainError("order must be a non-negative integer or half-integer")
    arr = np.asarray(z, dtype=float)
    if np.any(arr < 0):
        raise DomainError("bessel_i needs z >= 0")
    if scaled is None:
        scaled = bool(np.any(arr > 700))
    out = _sp.ive(nu, arr) if scaled else _sp.iv(nu, arr)
    return float(out) if np.ndim(out) == 0 else out


def bessel_j_sequence(nmax: int, z: np.ndarray) -> np.ndarray:
    """J_0(z) ... J_nmax(z) for real z >= 0 by backward recurrence.

    Miller's algorithm normalised with J_0 + 2 sum J_2k = 1.  Returns an
    array of shape (nmax + 1,) + z.shape.  Calling scipy's ``jv`` per order
    is roughly a hundred times slower at the sizes used for rasters.
    """
    z = np.asarray(z, dtype=float)
    flat = z.ravel()
    out = np.zeros((nmax + 1, flat.size))
    zero = flat == 0
    out[0, zero] = 1.0
    zz = flat[~zero]
    if zz.size:
        top = max(nmax, float(zz.max()))
        start = int(top + 20 + math.sqrt(160 * max(top, 1.0)))
        start += start % 2
        keep = np.zeros((nmax + 1, zz.size))
        nxt = np.zeros_like(zz)
        cur = np.full_like(zz, 1e-300)
        norm = np.zeros_like(zz)
        inv = 1.0 / zz
        for k in range(start, 0, -1):
            if k <= nmax:
                keep[k] = cur
            if k % 2 == 0:
                norm += 2 * cur
            prev = 2 * k * inv * cur - nxt
            nxt, cur = cur, prev
            big = np.abs(cur) > 1e250
            if big.any():
                cur[big] *= 1e-250
                nxt[big] *= 1e-250
                norm[big] *= 1e-250
                keep[:, big] *= 1e-250
        keep[0] = cur
        norm += cur
        out[:, ~zero] = keep / norm
    return out.reshape((nmax + 1,) + z.shape)


def hermite_abs_at_zero(n: int) -> float:
    """|H_n(0)|: n!/(n/2)! for even n, zero for odd n."""
    if n < 0:
        raise DomainError("n must be non-negative")
    if n % 2:
        return 0.0
    return float(math.factorial(n) // math.factorial(n // 2))


def dirichlet_kernel(k: int, x):
    """D_k(x) = sin((k + 1/2) x) / sin(x / 2), equal to 2k+1 where x = 0 mod 2 pi."""
    x = np.asarray(x, dtype=float)
    # reduce to (-pi, pi] so the removable point sits at 0
    y = np.remainder(x + np.pi, 2 * np.pi) - np.pi
    den = np.sin(0.5 * y)
    small = np.abs(y) < 1e-8
    safe = np.where(small, 1.0, den)
    val = np.where(small, 2 * k + 1 - k * (k + 1) * (2 * k + 1) * y**2 / 6.0,
                   np.sin((k + 0.5) * y) / safe)
    return float(val) if val.ndim == 0 else val


def sinc(x):
    """sin(x)/x with sinc(0) = 1 (unnormalised convention)."""
    x = np.asarray(x, dtype=float)
    val = np.sinc(x / np.pi)
    return float(val) if val.ndim == 0 else val
