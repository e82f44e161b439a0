"""Dispersion time series shared by the classical and quantum solvers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import DRIVE_PERIOD


def spread(a) -> float:
    """Population standard deviation with pairwise summation over the whole array."""
    a = np.asarray(a, dtype=float)
    n = a.size
    if n == 0:
        return float("nan")
    mean = np.sum(a) / n
    d = a - mean
    return float(np.sqrt(np.sum(d * d) / n))


@dataclass
class DispersionSeries:
    """Position and momentum spreads sampled at strictly increasing times.

    ``extra`` carries solver diagnostics sampled on the same times (for
    quantum runs: ``norm``, ``boundary_density``, ``spectral_leak``).
    """

    tau: np.ndarray
    dx: np.ndarray
    dp: np.ndarray
    label: str = "classical"
    params: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float)
        self.dx = np.asarray(self.dx, dtype=float)
        self.dp = np.asarray(self.dp, dtype=float)
        if not (len(self.tau) == len(self.dx) == len(self.dp)):
            raise ValueError("tau, dx and dp must have equal length")
        if len(self.tau) > 1 and not np.all(np.diff(self.tau) > 0):
            raise ValueError("tau must be strictly increasing")
        if np.any(self.dx < 0) or np.any(self.dp < 0):
            raise ValueError("dispersions must be non-negative")
        self.extra = {k: np.asarray(v, dtype=float) for k, v in self.extra.items()}

    def __len__(self):
        return len(self.tau)

    def values(self, quantity: str) -> np.ndarray:
        if quantity not in ("dx", "dp"):
            raise ValueError(f"quantity must be 'dx' or 'dp', got {quantity!r}")
        return getattr(self, quantity)

    def resample(self, tau) -> "DispersionSeries":
        """Linear interpolation onto ``tau`` (which must lie inside the sampled span)."""
        tau = np.asarray(tau, dtype=float)
        if len(tau) and (tau[0] < self.tau[0] or tau[-1] > self.tau[-1]):
            raise ValueError("resampling outside the sampled span")
        return DispersionSeries(
            tau, np.interp(tau, self.tau, self.dx), np.interp(tau, self.tau, self.dp),
            self.label, dict(self.params),
            {k: np.interp(tau, self.tau, v) for k, v in self.extra.items()},
        )

    def tail_mean(self, quantity: str, n_periods: float = 10, period: float = DRIVE_PERIOD) -> float:
        """Mean of the samples within the last ``n_periods`` drive periods (inclusive)."""
        v = self.values(quantity)
        start = self.tau[-1] - n_periods * period
        m = self.tau >= start - 1e-9 * max(1.0, abs(start))
        return float(np.mean(v[m]))


@dataclass
class Histogram:
    """Probability density sampled at ``centers`` with cell widths ``widths``."""

    centers: np.ndarray
    density: np.ndarray
    widths: np.ndarray

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=float)
        self.density = np.asarray(self.density, dtype=float)
        self.widths = np.broadcast_to(np.asarray(self.widths, dtype=float), self.centers.shape).copy()
        if self.centers.shape != self.density.shape:
            raise ValueError("centers and density must have equal shape")

    @classmethod
    def from_samples(cls, samples, edges) -> "Histogram":
        counts, edges = np.histogram(np.asarray(samples, dtype=float), bins=edges)
        widths = np.diff(edges)
        total = counts.sum()
        density = counts / (total * widths) if total else np.zeros(len(widths))
        return cls(0.5 * (edges[:-1] + edges[1:]), density, widths)

    @property
    def mass(self) -> np.ndarray:
        return self.density * self.widths

    def integral(self) -> float:
        return float(np.sum(self.mass))

    def mean(self) -> float:
        m = self.mass
        return float(np.sum(m * self.centers) / np.sum(m))

    def std(self) -> float:
        m = self.mass
        mu = np.sum(m * self.centers) / np.sum(m)
        return float(np.sqrt(np.sum(m * (self.centers - mu) ** 2) / np.sum(m)))
