"""Entanglement and mixedness of signal-idler coefficient tables."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .engine import PerturbativeCoefficients, TwoModeState
from .errors import DomainError, PreconditionError

__all__ = [
    "EntanglementReport",
    "negativity",
    "negativity_with_uncertainty",
    "negativity_perturbative",
    "linear_entropy",
    "linear_entropy_perturbative",
    "thermal_entropy_bounds",
    "quadrature_variance",
    "squeezing_db",
    "noisy_quadrature_correction",
    "REPORT_HEADER",
]

REPORT_HEADER = "pump_kind,gt,param1,param2,negativity,linear_entropy,var2dX,squeezing_db"


def negativity(state: TwoModeState) -> float:
    """sum over n > m of |rho^{nm}|.

    The partial transpose of sum rho^{nm} |nn><mm| is block diagonal in
    2x2 blocks, each contributing one |rho^{nm}| of negative eigenvalue.
    """
    return float(np.sum(np.abs(np.tril(state.coefficients, -1))))


def negativity_with_uncertainty(state: TwoModeState) -> tuple[float, float]:
    """Negativity and a bound on what the neglected entries (n > cutoff) could add."""
    extra = state.meta.get("negativity_tail")
    if extra is None:
        extra = 0.0 if not np.any(np.tril(state.coefficients, -1)) else math.inf
    return negativity(state), float(extra)


def negativity_perturbative(c: PerturbativeCoefficients, gt: float) -> float:
    return gt * abs(c.c01) + gt * gt * abs(c.c02)


def linear_entropy(state: TwoModeState) -> float:
    s = 1.0 - float(np.sum(np.abs(state.coefficients) ** 2))
    if s < -1e-8 or s > 1 + 1e-8:
        warnings.warn(f"linear entropy {s!r} outside [0, 1]; clamped", stacklevel=2)
    return min(max(s, 0.0), 1.0)


def linear_entropy_perturbative(c: PerturbativeCoefficients, gt: float) -> float:
    return 2 * gt * gt * (c.c11 - abs(c.c01) ** 2)


def thermal_entropy_bounds(nbar: float, gt: float, cutoff: int) -> tuple[np.ndarray, float]:
    """Lower bounds on the thermal-pump populations rho^{mm}, m = 0..cutoff,
    and the resulting upper bound on the linear entropy.

    rho^{mm} >= m! / (x (2m + 1 + 1/x)^{m+1}) with x = (gt)^2 nbar.  Since every
    term of sum (rho^{mm})^2 is bounded below, a partial sum still bounds S_L.
    """
    if not nbar > 0 or not gt > 0:
        raise DomainError("thermal_entropy_bounds needs nbar > 0 and gt > 0")
    x = gt * gt * nbar
    m = np.arange(cutoff + 1, dtype=float)
    logs = gammaln(m + 1) - math.log(x) - (m + 1) * np.log(2 * m + 1 + 1 / x)
    lower = np.exp(logs)
    return lower, float(1.0 - np.sum(lower**2))


def quadrature_variance(state: TwoModeState) -> float:
    """<2 (Delta X_-)^2> = 1 + 2 sum_n n (rho^{nn} - Re rho^{n,n-1})."""
    rho = state.coefficients
    n = np.arange(1, rho.shape[0])
    diag = np.diag(rho).real[1:]
    sub = np.diagonal(rho, -1).real
    return float(1 + 2 * np.sum(n * (diag - sub)))


def squeezing_db(variance: float) -> float:
    if not variance > 0:
        raise DomainError("variance must be positive")
    return -10.0 * math.log10(variance) + 0.0  # no negative zero


def noisy_quadrature_correction(amplitude: float, nbar: float, gt: float) -> float:
    """Combined-quadrature variance for a displaced thermal pump, first order in nbar/|alpha0|^2."""
    if not amplitude > 0:
        raise DomainError("amplitude must be positive")
    if nbar < 0:
        raise DomainError("nbar must be non-negative")
    if nbar / amplitude**2 > 0.2:
        raise PreconditionError(f"nbar/|alpha0|^2 = {nbar / amplitude**2:.3g} exceeds 0.2")
    x = gt * amplitude
    e = math.exp(-2 * x)
    return e + nbar / (4 * amplitude**2) * (math.sinh(2 * x) + 2 * x * (2 * x - 1) * e)


@dataclass(frozen=True)
class EntanglementReport:
    negativity: float
    linear_entropy: float
    quadrature_variance_2dX: float
    squeezing_db: float
    truncation_warning: str | None = None

    @classmethod
    def from_state(cls, state: TwoModeState) -> "EntanglementReport":
        n, dn = negativity_with_uncertainty(state)
        var = quadrature_variance(state)
        notes = []
        if dn > 1e-9:
            notes.append(f"negativity may lack up to {dn:.3g}")
        if state.tail_bound > 1e-9:
            notes.append(f"population tail {state.tail_bound:.3g}")
        return cls(n, linear_entropy(state), var, squeezing_db(var), "; ".join(notes) or None)

    def csv_row(self, pump: dict, gt: float) -> str:
        params = [v for k, v in pump.items() if k != "kind" and isinstance(v, (int, float))]
        params += [""] * (2 - len(params))
        cells = [pump.get("kind", ""), gt, params[0], params[1], self.negativity,
                 self.linear_entropy, self.quadrature_variance_2dX, self.squeezing_db]
        return ",".join(c if isinstance(c, str) else f"{c:.17g}" for c in cells)
