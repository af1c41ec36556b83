"""Polar rasters of P-functions."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NonFiniteError

__all__ = ["GridSpec", "PolarGrid"]


@dataclass(frozen=True)
class GridSpec:
    """Shape of a polar raster: ``n_r`` midpoint radii on (0, r_max], ``n_theta`` angles."""

    n_r: int = 400
    n_theta: int = 400
    r_max: float = 25.0

    def __post_init__(self):
        if self.n_r < 2 or self.n_theta < 2:
            raise DomainError("a raster needs at least two points in each direction")
        if not self.r_max > 0:
            raise DomainError("r_max must be positive")

    def radii(self) -> np.ndarray:
        return (np.arange(self.n_r) + 0.5) * (self.r_max / self.n_r)

    def angles(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_theta) / self.n_theta


@dataclass
class PolarGrid:
    """P sampled on ascending radii and uniform angles over [0, 2 pi).

    ``values[i, k]`` is P at (radii[i], angles[k]).  ``converged`` optionally
    flags radii where the producing transform was not resolved.
    """

    radii: np.ndarray
    angles: np.ndarray
    values: np.ndarray
    converged: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.angles = np.asarray(self.angles, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.radii.size, self.angles.size):
            raise DomainError(f"values shape {self.values.shape} does not match "
                              f"({self.radii.size}, {self.angles.size})")
        if self.radii.size < 2 or self.angles.size < 2:
            raise DomainError("degenerate grid: every dimension needs at least two points")
        if np.any(np.diff(self.radii) <= 0) or self.radii[0] < 0:
            raise DomainError("radii must be non-negative and strictly ascending")
        step = 2 * np.pi / self.angles.size
        expect = self.angles[0] + step * np.arange(self.angles.size)
        if np.max(np.abs(self.angles - expect)) > 1e-9:
            raise DomainError("angles must be uniform over one period")
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteError("grid values are not finite")

    @property
    def d_theta(self) -> float:
        return 2 * np.pi / self.angles.size

    def radial_widths(self) -> np.ndarray:
        """Cell widths from midpoints between neighbouring radii.

        The first cell starts at 0 and the last ends as far past the final
        radius as the midpoint before it, which is exact for midpoint grids.
        """
        r = self.radii
        edges = np.empty(r.size + 1)
        edges[1:-1] = 0.5 * (r[1:] + r[:-1])
        edges[0] = max(0.0, r[0] - (edges[1] - r[0]))
        edges[-1] = r[-1] + (r[-1] - edges[-2])
        return np.diff(edges)

    def total(self) -> float:
        """sum P r dr dtheta."""
        return float(np.sum(self.values * (self.radii * self.radial_widths())[:, None]) * self.d_theta)

    def harmonics(self, jmax: int) -> np.ndarray:
        """P_j at the stored radii, j = 0..jmax, from the angular FFT."""
        n = self.angles.size
        if jmax >= n // 2:
            raise DomainError(f"jmax={jmax} exceeds the angular resolution ({n} angles)")
        # sum_k P e^{i j theta_k} = n * ifft
        f = np.fft.ifft(self.values, axis=1) * n * self.d_theta
        j = np.arange(jmax + 1)
        return f[:, j] * np.exp(1j * j * self.angles[0])[None, :]

    def interpolate(self, r, theta):
        """Bilinear in radius, periodic-linear in angle."""
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if np.any(r < self.radii[0] - 1e-12) or np.any(r > self.radii[-1] + 1e-12):
            raise DomainError(f"radius outside the raster [{self.radii[0]}, {self.radii[-1]}]")
        r, theta = np.broadcast_arrays(r, theta)
        i = np.clip(np.searchsorted(self.radii, r) - 1, 0, self.radii.size - 2)
        tr = (r - self.radii[i]) / (self.radii[i + 1] - self.radii[i])
        pos = np.remainder(theta - self.angles[0], 2 * np.pi) / self.d_theta
        k = np.floor(pos).astype(int) % self.angles.size
        tk = pos - np.floor(pos)
        k1 = (k + 1) % self.angles.size
        v = self.values
        lo = v[i, k] * (1 - tk) + v[i, k1] * tk
        hi = v[i + 1, k] * (1 - tk) + v[i + 1, k1] * tk
        return lo * (1 - tr) + hi * tr

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["radius", "angle", "p_value"])
        for i, r in enumerate(self.radii):
            for k, th in enumerate(self.angles):
                w.writerow([f"{r:.17g}", f"{th:.17g}", f"{self.values[i, k]:.17g}"])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "PolarGrid":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if rows[0] != ["radius", "angle", "p_value"]:
            raise DomainError("unexpected header in raster CSV")
        data = np.array([[float(x) for x in row] for row in rows[1:]])
        radii = np.unique(data[:, 0])
        angles = np.unique(data[:, 1])
        if radii.size * angles.size != data.shape[0]:
            raise DomainError("raster CSV is not a complete radius x angle table")
        return cls(radii, angles, data[:, 2].reshape(radii.size, angles.size))

    @classmethod
    def from_function(cls, f, spec: GridSpec) -> "PolarGrid":
        r, th = spec.radii(), spec.angles()
        return cls(r, th, np.asarray(f(r[:, None], th[None, :]), dtype=float))


def _default_grid_for(radius: float, n: int = 400) -> GridSpec:
    return GridSpec(n, n, float(math.ceil(radius)))
