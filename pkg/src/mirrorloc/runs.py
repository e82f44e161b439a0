"""Matched classical/quantum run pipelines shared by the CLI and the sweep.

Both solvers sample on the same grid tau_k = k * (pi/2) / samples_per_period,
so classical and quantum series can be compared point by point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import classical, quantum
from .model import DRIVE_PERIOD, EffectiveModel
from .params import DimensionlessParams, PhysicalParams, tau_from_seconds
from .series import DispersionSeries, Histogram

#: 131.5 ms in units of the canonical recoil frequency.
CANONICAL_TAU_END = tau_from_seconds(0.1315, PhysicalParams().recoil_frequency)


@dataclass(frozen=True)
class RunSettings:
    tau_end: float = CANONICAL_TAU_END
    dt_classical: float = DRIVE_PERIOD / 100
    dt_quantum: float = DRIVE_PERIOD / 100
    samples_per_period: int = 1
    n_members: int = 10_000
    seed: int = 1
    x0: float = 1.0
    p0: float = 0.0
    dx0: float = 1.0
    dp0: float = 0.5
    workers: int = 1
    x_min: float = -50.0
    x_max: float = 50.0
    n_points: int = 0  # 0: size from p_max and hbar
    min_points: int = 4096
    p_max: float = 45.0
    average_periods: float = 10.0
    density_every_periods: int = 0  # 0: no spatiotemporal maps
    density_stride: int = 1

    @property
    def sample_interval(self) -> float:
        return DRIVE_PERIOD / self.samples_per_period

    @property
    def n_samples(self) -> int:
        return int(round(self.tau_end / self.sample_interval))

    @property
    def tau_grid(self) -> np.ndarray:
        return np.arange(self.n_samples + 1) * self.sample_interval

    @property
    def tau_end_aligned(self) -> float:
        return self.n_samples * self.sample_interval

    @property
    def average_start(self) -> float:
        return self.tau_end_aligned - self.average_periods * DRIVE_PERIOD

    def grid_for(self, hbar: float) -> quantum.Grid:
        if self.n_points:
            return quantum.Grid(self.n_points, self.x_min, self.x_max)
        return quantum.Grid.for_momentum(self.x_min, self.x_max, self.p_max, hbar, self.min_points)


def aligned_step(dt: float, samples_per_period: int) -> tuple[float, int]:
    """Step <= dt with steps per drive period a multiple of ``samples_per_period``."""
    n = math.ceil(DRIVE_PERIOD / dt / samples_per_period - 1e-9) * samples_per_period
    return DRIVE_PERIOD / n, n


def _on_grid(series: DispersionSeries, settings: RunSettings) -> DispersionSeries:
    grid = settings.tau_grid
    if len(series.tau) != len(grid) or not np.allclose(series.tau, grid, rtol=1e-9, atol=1e-9):
        raise RuntimeError("sample times drifted from the common grid")
    series.tau = grid.copy()
    return series


@dataclass
class DensityMap:
    """Decimated density snapshots: ``density[i, j]`` at time ``tau[i]`` and coordinate ``coord[j]``."""

    tau: np.ndarray
    coord: np.ndarray
    density: np.ndarray


@dataclass
class ClassicalRun:
    series: DispersionSeries
    final: classical.Ensemble
    position: Histogram
    momentum: Histogram
    position_map: DensityMap | None = None
    momentum_map: DensityMap | None = None


@dataclass
class QuantumRun:
    series: DispersionSeries
    final: quantum.WaveFunction
    position: Histogram
    momentum: Histogram
    valid: bool
    position_map: DensityMap | None = None
    momentum_map: DensityMap | None = None


def _fd_edges(final, snapshots):
    """Bins of Freedman-Diaconis width from the final cloud spanning every snapshot."""
    width = np.diff(np.histogram_bin_edges(final, bins="fd")[:2])[0]
    lo = min(float(np.min(s)) for s in snapshots)
    hi = max(float(np.max(s)) for s in snapshots)
    if not width > 0:
        width = 1.0
    origin = float(np.min(final))
    k0 = math.floor((lo - origin) / width)
    k1 = math.ceil((hi - origin) / width) + 1
    return origin + width * np.arange(k0, k1 + 1)


def _averaged_histogram(snapshots, edges) -> Histogram:
    counts = sum(np.histogram(s, bins=edges)[0] for s in snapshots)
    widths = np.diff(edges)
    return Histogram(0.5 * (edges[:-1] + edges[1:]), counts / (counts.sum() * widths), widths)


def _density_map(taus, snapshots, edges) -> DensityMap:
    widths = np.diff(edges)
    rows = []
    for s in snapshots:
        c = np.histogram(s, bins=edges)[0]
        rows.append(c / (len(s) * widths))
    return DensityMap(np.array(taus), 0.5 * (edges[:-1] + edges[1:]), np.array(rows))


def _is_map_sample(k, settings):
    every = settings.density_every_periods * settings.samples_per_period
    return every > 0 and k % every == 0


def run_classical(params: DimensionlessParams, settings: RunSettings) -> ClassicalRun:
    model = EffectiveModel(params)
    ens = classical.gaussian_ensemble(settings.n_members, settings.seed, settings.x0,
                                      settings.p0, settings.dx0, settings.dp0)
    dt, per_period = aligned_step(settings.dt_classical, settings.samples_per_period)
    window_x, window_p = [], []
    map_tau, map_x, map_p = [], [], []
    start = settings.average_start
    counter = [0]

    def on_sample(tau, x, p):
        k = counter[0]
        counter[0] += 1
        if tau >= start - 1e-9:
            window_x.append(x.copy())
            window_p.append(p.copy())
        if _is_map_sample(k, settings):
            map_tau.append(k * settings.sample_interval)
            map_x.append(x.copy())
            map_p.append(p.copy())

    series, final = classical.evolve_ensemble(
        model, ens, settings.tau_end_aligned, dt,
        sample_every=per_period // settings.samples_per_period,
        workers=settings.workers, on_sample=on_sample)
    series = _on_grid(series, settings)
    edges_x = _fd_edges(final.x, window_x + map_x)
    edges_p = _fd_edges(final.p, window_p + map_p)
    run = ClassicalRun(series, final, _averaged_histogram(window_x, edges_x),
                       _averaged_histogram(window_p, edges_p))
    if map_tau:
        run.position_map = _density_map(map_tau, map_x, edges_x)
        run.momentum_map = _density_map(map_tau, map_p, edges_p)
    return run


def run_quantum(params: DimensionlessParams, hbar: float, settings: RunSettings) -> QuantumRun:
    model = EffectiveModel(params.with_hbar(hbar))
    grid = settings.grid_for(hbar)
    wf = quantum.gaussian_packet(grid, settings.x0, settings.p0, settings.dx0, hbar)
    dt, per_period = aligned_step(settings.dt_quantum, settings.samples_per_period)
    acc = quantum.DistributionAccumulator(grid, hbar)
    start = settings.average_start
    stride = max(1, settings.density_stride)
    map_tau, map_x, map_p = [], [], []
    counter = [0]

    def on_sample(snap):
        k = counter[0]
        counter[0] += 1
        if snap.tau >= start - 1e-9:
            acc.add(snap)
        if _is_map_sample(k, settings):
            map_tau.append(k * settings.sample_interval)
            map_x.append(snap.density[::stride])
            prob = np.fft.fftshift(snap.momentum_probabilities()) / grid.dp(hbar)
            map_p.append(prob[::stride])

    series, final = quantum.evolve(wf, model, settings.tau_end_aligned, dt,
                                   sample_every=per_period // settings.samples_per_period,
                                   on_sample=on_sample)
    series = _on_grid(series, settings)
    dists = acc.result()
    run = QuantumRun(series, final, dists.position, dists.momentum, quantum.run_is_valid(series))
    if map_tau:
        run.position_map = DensityMap(np.array(map_tau), grid.x[::stride], np.array(map_x))
        p = np.fft.fftshift(grid.momenta(hbar))
        run.momentum_map = DensityMap(np.array(map_tau), p[::stride], np.array(map_p))
    return run
