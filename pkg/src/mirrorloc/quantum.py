"""Spectral split-operator evolution of the mirror wave function.

Time stepping is Strang splitting: a half step of the potential phase at the
mid-step time, a full kinetic step in the Fourier basis, and another potential
half step. Momentum carries the scaled Planck constant, p = hbar * k, so
quantum and classical momenta are in the same units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import InvalidParameterError, PacketOutsideGridError
from .model import DRIVE_PERIOD, EffectiveModel, strobe_step
from .series import DispersionSeries, Histogram

EDGE_FRACTION = 0.05
LEAK_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Grid:
    """Uniform periodic position grid of ``n_points`` cells on [x_min, x_max)."""

    n_points: int = 4096
    x_min: float = -50.0
    x_max: float = 50.0

    def __post_init__(self):
        n = self.n_points
        if n < 2 or n & (n - 1):
            raise InvalidParameterError(f"n_points must be a power of two, got {n!r}")
        if not self.x_max > self.x_min:
            raise InvalidParameterError("x_max must exceed x_min")

    @classmethod
    def for_momentum(cls, x_min: float, x_max: float, p_max: float, hbar: float,
                     min_points: int = 4096) -> "Grid":
        """Smallest power-of-two grid whose momentum lattice reaches +-p_max."""
        need = (x_max - x_min) * p_max / (math.pi * hbar)
        n = max(int(min_points), 2)
        n = 1 << max(n - 1, int(math.ceil(need)) - 1).bit_length()
        return cls(n, x_min, x_max)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    @property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)

    def momenta(self, hbar: float) -> np.ndarray:
        return hbar * self.wavenumbers

    def dp(self, hbar: float) -> float:
        return hbar * 2.0 * np.pi / (self.n_points * self.dx)

    def p_max(self, hbar: float) -> float:
        return hbar * np.pi / self.dx


@dataclass
class WaveFunction:
    grid: Grid
    psi: np.ndarray
    tau: float = 0.0
    hbar: float = 1.0

    def copy(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.psi.copy(), self.tau, self.hbar)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    def norm(self) -> float:
        return float(np.sum(self.density) * self.grid.dx)

    def momentum_probabilities(self) -> np.ndarray:
        """Probability per momentum lattice site (FFT order), summing to one."""
        a = np.abs(sfft.fft(self.psi)) ** 2
        return a / np.sum(a)


def gaussian_packet(grid: Grid, x0: float = 1.0, p0: float = 0.0, dx: float = 1.0,
                    hbar: float = 1.0) -> WaveFunction:
    """Minimum-uncertainty packet with position spread ``dx`` and mean momentum ``p0``.

    The momentum spread is hbar / (2 dx).
    """
    if not dx > 0:
        raise InvalidParameterError("dx must be > 0")
    if not hbar > 0:
        raise InvalidParameterError("hbar must be > 0")
    if x0 - 6 * dx < grid.x_min or x0 + 6 * dx > grid.x_max:
        raise PacketOutsideGridError(
            f"packet x0={x0} +- 6*{dx} does not fit in [{grid.x_min}, {grid.x_max}]")
    x = grid.x
    psi = np.exp(-((x - x0) ** 2) / (4.0 * dx * dx) + 1j * (p0 / hbar) * x)
    psi /= math.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)
    return WaveFunction(grid, psi, 0.0, hbar)


@dataclass(frozen=True)
class Observables:
    mean_x: float
    mean_p: float
    dx: float
    dp: float
    norm: float
    boundary_density: float
    spectral_leak: float


def _edge_mask(n: int) -> np.ndarray:
    k = max(1, int(round(EDGE_FRACTION * n)))
    m = np.zeros(n, dtype=bool)
    m[:k] = True
    m[-k:] = True
    return m


def _moments(values, weights):
    total = np.sum(weights)
    mean = np.sum(weights * values) / total
    var = np.sum(weights * (values - mean) ** 2) / total
    return float(mean), float(math.sqrt(max(var, 0.0)))


def observables(wf: WaveFunction) -> Observables:
    """Moments of position and momentum plus leakage monitors.

    ``boundary_density`` is the probability in the outer 5% of the grid on
    either side; ``spectral_leak`` is the probability on the outer 5% of the
    momentum lattice.
    """
    g = wf.grid
    rho = wf.density
    norm = float(np.sum(rho) * g.dx)
    mean_x, dx = _moments(g.x, rho)
    prob_p = wf.momentum_probabilities()
    mean_p, dp = _moments(g.momenta(wf.hbar), prob_p)
    boundary = float(np.sum(rho[_edge_mask(g.n_points)]) * g.dx)
    # sort momentum probabilities so the mask picks the extreme |p|
    leak = float(np.sum(np.fft.fftshift(prob_p)[_edge_mask(g.n_points)]))
    return Observables(mean_x, mean_p, dx, dp, norm, boundary, leak)


class SplitOperator:
    """Strang-split propagator for a fixed model, grid, hbar and step size.

    When the step divides the drive period the fused potential phases repeat
    every period; they are then tabulated once (up to ``table_limit`` complex
    entries) instead of being exponentiated every step.
    """

    def __init__(self, model: EffectiveModel, grid: Grid, hbar: float, dt: float,
                 table_limit: int = 4_000_000):
        if not dt > 0:
            raise InvalidParameterError("dt must be > 0")
        self.model = model
        self.grid = grid
        self.hbar = hbar
        self.dt = dt
        x = grid.x
        self._x = x
        p = grid.momenta(hbar)
        self._kinetic = np.exp(-0.5j * p * p * dt / hbar)
        self._half_static = np.exp(-0.5j * model.static_potential(x) * dt / hbar)
        self._full_static = self._half_static * self._half_static
        self._phase_scale = -0.5 * dt / hbar
        per = DRIVE_PERIOD / dt
        self._period_steps = int(round(per)) if abs(per - round(per)) < 1e-9 * per else 0
        self._table = None
        if self._period_steps and self._period_steps * grid.n_points <= table_limit:
            self._table = self._fused_table()

    def _fused_table(self):
        n = self._period_steps
        table = np.empty((n, self.grid.n_points), dtype=complex)
        for r in range(n):
            table[r] = self._fused(0.0, r)
        return table

    def _drive_phase(self, drive_sum, base):
        return base * np.exp(1j * self._phase_scale * drive_sum * self._x)

    def _mid(self, tau0, k):
        return tau0 + (k + 0.5) * self.dt

    def _fused(self, tau0, k):
        drive = self.model.drive
        return self._drive_phase(drive(self._mid(tau0, k)) + drive(self._mid(tau0, k + 1)),
                                 self._full_static)

    def half_potential(self, tau_mid):
        return self._drive_phase(self.model.drive(tau_mid), self._half_static)

    def step(self, psi: np.ndarray, tau: float) -> np.ndarray:
        """One full step from ``tau`` to ``tau + dt``; returns a new array."""
        half = self.half_potential(tau + 0.5 * self.dt)
        out = sfft.ifft(self._kinetic * sfft.fft(half * psi))
        out *= half
        return out

    def advance(self, psi: np.ndarray, tau0: float, k0: int, n_steps: int) -> np.ndarray:
        """Take ``n_steps`` steps starting at step index ``k0`` (time tau0 + k0 dt).

        Adjacent potential half steps are fused into one phase multiplication;
        the result equals repeated :meth:`step` calls up to rounding.
        """
        if n_steps <= 0:
            return psi
        table = self._table
        # the tabulated phases assume the drive phase at step 0 is that of tau = 0
        if table is not None and abs(math.remainder(tau0, DRIVE_PERIOD)) > 1e-12:
            table = None
        period = self._period_steps
        psi = psi * self.half_potential(self._mid(tau0, k0))
        last = k0 + n_steps - 1
        for k in range(k0, k0 + n_steps):
            psi = sfft.fft(psi, overwrite_x=True)
            psi *= self._kinetic
            psi = sfft.ifft(psi, overwrite_x=True)
            if k < last:
                psi *= table[k % period] if table is not None else self._fused(tau0, k)
            else:
                psi *= self.half_potential(self._mid(tau0, k))
        return psi


def step(wf: WaveFunction, model: EffectiveModel, dt: float) -> WaveFunction:
    """Single Strang step of size ``dt``."""
    prop = SplitOperator(model, wf.grid, wf.hbar, dt)
    return WaveFunction(wf.grid, prop.step(wf.psi, wf.tau), wf.tau + dt, wf.hbar)


def evolve(wf: WaveFunction, model: EffectiveModel, tau_end: float, dt: float = 5e-4,
           sample_every: int | None = None, on_sample=None):
    """Evolve to ``tau_end`` and record spreads and monitors.

    ``dt`` is snapped so the drive period is an integer number of steps;
    ``sample_every`` counts steps and defaults to one drive period.
    ``on_sample(wf)`` receives a read-only snapshot at every sample, including
    the initial one. Returns ``(DispersionSeries, final WaveFunction)``.
    """
    step_, per_period = strobe_step(dt, max_dt=None)
    every = per_period if sample_every is None else int(sample_every)
    if every < 1:
        raise InvalidParameterError("sample_every must be >= 1")
    n = round((tau_end - wf.tau) / step_)
    if n < 0:
        raise InvalidParameterError("tau_end precedes the current time")
    prop = SplitOperator(model, wf.grid, wf.hbar, step_)
    rows = []
    psi = wf.psi.astype(complex, copy=True)

    def record(tau):
        snap = WaveFunction(wf.grid, psi, tau, wf.hbar)
        obs = observables(snap)
        rows.append((tau, obs.dx, obs.dp, obs.norm, obs.boundary_density, obs.spectral_leak))
        if on_sample is not None:
            view = psi.view()
            view.flags.writeable = False
            on_sample(WaveFunction(wf.grid, view, tau, wf.hbar))

    record(wf.tau)
    done = 0
    while done < n:
        m = min(every, n - done)
        psi = prop.advance(psi, wf.tau, done, m)
        done += m
        record(wf.tau + done * step_)
    a = np.array(rows)
    series = DispersionSeries(
        a[:, 0], a[:, 1], a[:, 2], label="quantum",
        params=_snapshot(model, wf, step_),
        extra={"norm": a[:, 3], "boundary_density": a[:, 4], "spectral_leak": a[:, 5]},
    )
    return series, WaveFunction(wf.grid, psi, wf.tau + n * step_, wf.hbar)


def run_is_valid(series: DispersionSeries, tolerance: float = LEAK_TOLERANCE) -> bool:
    """True when the packet never leaked onto the grid edges in x or p."""
    return bool(np.all(series.extra["boundary_density"] < tolerance)
                and np.all(series.extra["spectral_leak"] < tolerance))


@dataclass
class Distributions:
    position: Histogram
    momentum: Histogram
    n_snapshots: int


class DistributionAccumulator:
    """Running time average of the position and momentum densities."""

    def __init__(self, grid: Grid, hbar: float):
        self.grid = grid
        self.hbar = hbar
        self._rho = np.zeros(grid.n_points)
        self._prob_p = np.zeros(grid.n_points)
        self.count = 0

    def add(self, wf: WaveFunction):
        self._rho += wf.density
        self._prob_p += wf.momentum_probabilities()
        self.count += 1

    def result(self) -> Distributions:
        if self.count == 0:
            raise ValueError("no snapshots accumulated")
        g = self.grid
        dp = g.dp(self.hbar)
        p = np.fft.fftshift(g.momenta(self.hbar))
        w_p = np.fft.fftshift(self._prob_p) / (self.count * dp)
        return Distributions(
            Histogram(g.x, self._rho / self.count, g.dx),
            Histogram(p, w_p, dp),
            self.count,
        )


def distributions(snapshots, window=None) -> Distributions:
    """Time-averaged W(x) and W(p) over the snapshots whose tau lies in ``window``."""
    snaps = list(snapshots) if not isinstance(snapshots, WaveFunction) else [snapshots]
    if window is not None:
        lo, hi = window
        snaps = [s for s in snaps if lo <= s.tau <= hi]
    if not snaps:
        raise ValueError("no snapshots inside the averaging window")
    acc = DistributionAccumulator(snaps[0].grid, snaps[0].hbar)
    for s in snaps:
        acc.add(s)
    return acc.result()


def _snapshot(model, wf, dt):
    par = model.params
    return {
        "gamma": par.gamma, "beta": par.beta, "mu": par.mu, "mu1": par.mu1,
        "gamma_m": par.gamma_m, "lam_eff": par.lam_eff, "hbar": wf.hbar, "dt": dt,
        "n_points": wf.grid.n_points, "x_min": wf.grid.x_min, "x_max": wf.grid.x_max,
    }
