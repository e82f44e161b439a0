"""Classical trajectories, Gaussian ensembles and stroboscopic sections.

The integrator is kick-drift-kick leapfrog with the drive frozen at the
mid-step time, which keeps the map time-symmetric and makes it exactly
symplectic in the undriven limit. Step sizes are snapped so that one drive
period pi/2 is an integer number of steps; strobe and sample times are then
computed as ``tau0 + k * dt`` with no accumulated phase error.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .series import DispersionSeries, spread
from .errors import IntegrationDivergedError, InvalidParameterError
from .model import DRIVE_PERIOD, EffectiveModel, strobe_step


@dataclass(frozen=True)
class PhaseState:
    x: float
    p: float
    tau: float = 0.0


@dataclass
class Trajectory:
    tau: np.ndarray
    x: np.ndarray
    p: np.ndarray

    def __len__(self):
        return len(self.tau)

    @property
    def final(self) -> PhaseState:
        return PhaseState(float(self.x[-1]), float(self.p[-1]), float(self.tau[-1]))


@dataclass
class Ensemble:
    x: np.ndarray
    p: np.ndarray
    seed: int
    mean_x: float
    mean_p: float
    sd_x: float
    sd_p: float
    tau: float = 0.0

    def __len__(self):
        return len(self.x)

    @property
    def states(self) -> list[PhaseState]:
        return [PhaseState(float(a), float(b), self.tau) for a, b in zip(self.x, self.p)]


@dataclass
class PoincareSection:
    """Strobe points of many orbits at tau = n * pi/2, n = 1..n_periods.

    ``orbit`` holds the index of the initial condition each point belongs to.
    Orbits that produced non-finite values are listed in ``diverged`` and
    contribute no points.
    """

    orbit: np.ndarray
    tau: np.ndarray
    x: np.ndarray
    p: np.ndarray
    n_initial_conditions: int
    n_periods: int
    strobe_period: float = DRIVE_PERIOD
    diverged: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.x, self.p])

    def __len__(self):
        return len(self.x)


def _n_steps(span: float, dt: float) -> int:
    n = round(span / dt)
    if n < 0:
        raise InvalidParameterError("end time precedes start time")
    return n


class _Leapfrog:
    """Vectorised kick-drift-kick stepper with preallocated work buffers."""

    def __init__(self, model: EffectiveModel, n: int):
        par = model.params
        self.lam = par.lam_eff
        self.mu = par.mu
        self.mu1 = par.mu1
        self.kick = par.well_depth * par.mu1
        self._u = np.empty(n)

    def _minus_force(self, x, drive, out):
        u = self._u[: len(x)]
        np.multiply(x, -self.mu1, out=u)
        u += self.mu
        np.multiply(u, u, out=u)
        u += 1.0
        np.divide(self.kick, u, out=u)
        np.add(x, u, out=out)
        out += drive

    def advance(self, x, p, tau0: float, dt: float, k0: int, n_steps: int):
        """Advance (x, p) in place by ``n_steps`` steps starting at step index ``k0``."""
        f = np.empty_like(x)
        half = 0.5 * dt
        for k in range(k0, k0 + n_steps):
            drive = self.lam * math.cos(4.0 * (tau0 + (k + 0.5) * dt))
            self._minus_force(x, drive, f)
            f *= half
            p -= f
            f = np.multiply(p, dt, out=f)
            x += f
            self._minus_force(x, drive, f)
            f *= half
            p -= f


def _advance_chunked(stepper_factory, x, p, tau0, dt, k0, n_steps, pool, chunks):
    if pool is None:
        stepper_factory(len(x)).advance(x, p, tau0, dt, k0, n_steps)
        return
    futures = [
        pool.submit(stepper.advance, x[sl], p[sl], tau0, dt, k0, n_steps)
        for sl, stepper in chunks
    ]
    for fut in futures:
        fut.result()


def integrate(model: EffectiveModel, s0: PhaseState, tau_end: float, dt: float,
              sample_every: int = 1) -> Trajectory:
    """Integrate Hamilton's equations from ``s0`` to absolute time ``tau_end``.

    ``dt`` may be negative to integrate backwards; its magnitude is snapped to
    divide the drive period. Samples are taken every ``sample_every`` steps and
    always include the initial state.
    """
    step, _ = strobe_step(abs(dt))
    step = math.copysign(step, dt)
    n = _n_steps(tau_end - s0.tau, step)
    if sample_every < 1:
        raise InvalidParameterError("sample_every must be >= 1")
    x = np.array([s0.x], dtype=float)
    p = np.array([s0.p], dtype=float)
    stepper = _Leapfrog(model, 1)
    taus, xs, ps = [s0.tau], [s0.x], [s0.p]
    done = 0
    while done < n:
        m = min(sample_every, n - done)
        stepper.advance(x, p, s0.tau, step, done, m)
        if not (math.isfinite(x[0]) and math.isfinite(p[0])):
            raise IntegrationDivergedError(taus[-1])
        done += m
        taus.append(s0.tau + done * step)
        xs.append(float(x[0]))
        ps.append(float(p[0]))
    return Trajectory(np.array(taus), np.array(xs), np.array(ps))


def line_initial_conditions(n: int = 500, x_min: float = -6.0, x_max: float = 6.0,
                            p: float = 0.0) -> list[PhaseState]:
    """``n`` states at rest (p = 0 by default) spread uniformly over [x_min, x_max]."""
    return [PhaseState(float(x), p) for x in np.linspace(x_min, x_max, n)]


def poincare(model: EffectiveModel, initial_conditions, n_periods: int, dt: float = 1e-3,
             workers: int = 1) -> PoincareSection:
    """Stroboscopic section at multiples of the drive period.

    All initial conditions are assumed to start at tau = 0.
    """
    if n_periods < 0:
        raise InvalidParameterError("n_periods must be >= 0")
    ics = list(initial_conditions)
    n_ic = len(ics)
    step, per_period = strobe_step(dt)
    x = np.array([s.x for s in ics], dtype=float)
    p = np.array([s.p for s in ics], dtype=float)
    xs = np.empty((n_periods, n_ic))
    ps = np.empty((n_periods, n_ic))
    pool, chunks = _make_pool(model, n_ic, workers)
    try:
        for k in range(n_periods):
            _advance_chunked(lambda m: _Leapfrog(model, m), x, p, 0.0, step,
                             k * per_period, per_period, pool, chunks)
            xs[k] = x
            ps[k] = p
    finally:
        if pool is not None:
            pool.shutdown()
    bad = ~(np.isfinite(xs) & np.isfinite(ps)).all(axis=0) if n_periods else np.zeros(n_ic, bool)
    keep = ~bad
    orbit = np.broadcast_to(np.arange(n_ic), (n_periods, n_ic))[:, keep].T.ravel()
    tau = np.broadcast_to((np.arange(n_periods) + 1.0)[:, None] * DRIVE_PERIOD,
                          (n_periods, n_ic))[:, keep].T.ravel()
    return PoincareSection(
        orbit=np.ascontiguousarray(orbit),
        tau=np.ascontiguousarray(tau),
        x=np.ascontiguousarray(xs[:, keep].T.ravel()),
        p=np.ascontiguousarray(ps[:, keep].T.ravel()),
        n_initial_conditions=n_ic,
        n_periods=n_periods,
        diverged=np.flatnonzero(bad),
    )


def orbit_dispersions(section: PoincareSection) -> tuple[np.ndarray, np.ndarray, float]:
    """Per-orbit phase-space spread of the strobe points and the spread of the whole section.

    Spread is sqrt(var x + var p). Returns (orbit ids, per-orbit spread, global spread).
    """
    ids = np.unique(section.orbit)
    per = np.empty(len(ids))
    for j, i in enumerate(ids):
        m = section.orbit == i
        per[j] = math.sqrt(np.var(section.x[m]) + np.var(section.p[m]))
    total = math.sqrt(np.var(section.x) + np.var(section.p)) if len(section) else 0.0
    return ids, per, total


def classify_orbits(section: PoincareSection, threshold: float = 0.05):
    """Mark orbits whose section spread is below ``threshold`` times the global spread as regular.

    Returns (orbit ids, boolean ``regular`` array).
    """
    ids, per, total = orbit_dispersions(section)
    return ids, per < threshold * total


def chaotic_fraction(section: PoincareSection, threshold: float = 0.05) -> float:
    ids, regular = classify_orbits(section, threshold)
    if len(ids) == 0:
        return 0.0
    return float(np.count_nonzero(~regular)) / len(ids)


def gaussian_ensemble(n: int, seed: int, mean_x: float = 1.0, mean_p: float = 0.0,
                      sd_x: float = 1.0, sd_p: float = 0.5) -> Ensemble:
    """Gaussian cloud in phase space, reproducible member by member.

    Member ``i`` draws its two standard normals from a Philox stream keyed by
    ``seed`` with counter offset ``i``, so the cloud does not depend on how it
    is later partitioned.
    """
    if n < 1:
        raise InvalidParameterError("ensemble must have at least one member")
    if sd_x < 0 or sd_p < 0:
        raise InvalidParameterError("standard deviations must be >= 0")
    key = int(seed) % (1 << 64)
    z = np.empty((n, 2))
    for i in range(n):
        gen = np.random.Generator(np.random.Philox(key=key, counter=[0, i, 0, 0]))
        z[i] = gen.standard_normal(2)
    return Ensemble(
        x=mean_x + sd_x * z[:, 0],
        p=mean_p + sd_p * z[:, 1],
        seed=int(seed), mean_x=mean_x, mean_p=mean_p, sd_x=sd_x, sd_p=sd_p,
    )


def _make_pool(model, n, workers):
    if workers is None or workers <= 1 or n < 2:
        return None, None
    workers = min(workers, n)
    bounds = np.linspace(0, n, workers + 1).astype(int)
    chunks = [(slice(a, b), _Leapfrog(model, b - a)) for a, b in zip(bounds[:-1], bounds[1:])]
    return ThreadPoolExecutor(max_workers=workers), chunks


def evolve_ensemble(model: EffectiveModel, ensemble: Ensemble, tau_end: float, dt: float = 1e-3,
                    sample_every: int | None = None, workers: int = 1, on_sample=None):
    """Evolve every member to ``tau_end`` and record the ensemble spreads.

    ``sample_every`` counts (snapped) steps and defaults to one drive period.
    ``on_sample(tau, x, p)`` is called at every sample, including tau = tau0,
    with read-only views. Members are advanced in fixed index chunks when
    ``workers > 1``; reductions always run over the full arrays in index
    order, so the result does not depend on ``workers``.

    Returns ``(DispersionSeries, final Ensemble)``.
    """
    if len(ensemble) == 0:
        raise InvalidParameterError("ensemble is empty")
    step, per_period = strobe_step(dt)
    every = per_period if sample_every is None else int(sample_every)
    if every < 1:
        raise InvalidParameterError("sample_every must be >= 1")
    tau0 = ensemble.tau
    n = _n_steps(tau_end - tau0, step)
    x = ensemble.x.astype(float, copy=True)
    p = ensemble.p.astype(float, copy=True)
    taus, dxs, dps = [], [], []

    def record(tau):
        if not (np.isfinite(x).all() and np.isfinite(p).all()):
            raise IntegrationDivergedError(taus[-1] if taus else tau0)
        taus.append(tau)
        dxs.append(spread(x))
        dps.append(spread(p))
        if on_sample is not None:
            on_sample(tau, _readonly(x), _readonly(p))

    record(tau0)
    pool, chunks = _make_pool(model, len(x), workers)
    try:
        done = 0
        while done < n:
            m = min(every, n - done)
            _advance_chunked(lambda k: _Leapfrog(model, k), x, p, tau0, step, done, m, pool, chunks)
            done += m
            record(tau0 + done * step)
    finally:
        if pool is not None:
            pool.shutdown()
    series = DispersionSeries(np.array(taus), np.array(dxs), np.array(dps), label="classical",
                              params=_snapshot(model, ensemble, step))
    final = Ensemble(x=x, p=p, seed=ensemble.seed, mean_x=ensemble.mean_x, mean_p=ensemble.mean_p,
                     sd_x=ensemble.sd_x, sd_p=ensemble.sd_p, tau=tau0 + n * step)
    return series, final


def _readonly(a):
    v = a.view()
    v.flags.writeable = False
    return v


def _snapshot(model, ensemble, dt):
    par = model.params
    return {
        "gamma": par.gamma, "beta": par.beta, "mu": par.mu, "mu1": par.mu1,
        "gamma_m": par.gamma_m, "lam_eff": par.lam_eff, "dt": dt,
        "n_members": len(ensemble), "seed": ensemble.seed,
    }
