"""Closed forms and slow independent evaluations used as test oracles."""

import math

import mpmath as mp
import numpy as np


def coherent_table(amplitude, theta0, gt, cutoff):
    """Two-mode squeezed vacuum coefficients for a coherent pump."""
    t = math.tanh(gt * amplitude)
    lam = -1j * np.exp(1j * theta0)
    n = np.arange(cutoff + 1)
    d = n[:, None] - n[None, :]
    return (1 - t * t) * t ** (n[:, None] + n[None, :]) * lam ** d


def dephased_table(amplitude, theta0, dtheta, gt, cutoff):
    n = np.arange(cutoff + 1)
    d = n[:, None] - n[None, :]
    return coherent_table(amplitude, theta0, gt, cutoff) * np.exp(-0.5 * d * d * dtheta**2)


def thermal_diagonal(nbar, gt, n, dps=30):
    """rho^{nn} for a thermal pump by arbitrary-precision radial quadrature."""
    with mp.workdps(dps):
        f = lambda r: (2 * r / nbar) * mp.exp(-r * r / nbar) * mp.tanh(gt * r) ** (2 * n) / mp.cosh(gt * r) ** 2
        return float(mp.quad(f, [0, mp.sqrt(nbar), 10 * mp.sqrt(nbar), mp.inf]))


def coherent_negativity(x):
    return (math.exp(2 * x) - 1) / 2


def coherent_linear_entropy_phase_averaged(x):
    return 1 - 1 / math.cosh(2 * x)


def coherent_variance(x):
    return math.exp(-2 * x)


def dephased_variance(x, dtheta):
    return math.exp(-2 * x) + (1 - math.exp(-dtheta**2 / 2)) * math.sinh(2 * x)


def noisy_variance(amplitude, nbar, gt):
    x = gt * amplitude
    return math.exp(-2 * x) + nbar / (4 * amplitude**2) * (math.sinh(2 * x) + 2 * x * (2 * x - 1) * math.exp(-2 * x))


def cubic_noisy_negativity(amplitude, nbar, gt):
    x = gt * amplitude
    return x + x * x + (2 / 3) * x**3 * (1 - nbar / amplitude**2)
