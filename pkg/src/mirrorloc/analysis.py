"""Quantitative signatures extracted from dispersion series and distributions."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import FitDomainError, InsufficientTailError
from .model import DRIVE_PERIOD
from .series import DispersionSeries, Histogram, spread

__all__ = [
    "DispersionSeries", "Histogram", "spread", "PowerLawFit", "fit_power_law", "BreakTime",
    "break_time", "LocalizationFit", "localization_length", "saturation_slope",
    "SweepRow", "SweepResult", "sweep",
]


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    ci_low: float
    ci_high: float
    intercept: float
    n_points: int
    window: tuple[float, float]


def fit_power_law(series: DispersionSeries, window, quantity: str = "dp",
                  confidence: float = 0.95) -> PowerLawFit:
    """Least-squares slope of log(spread) against log(tau) inside ``window``."""
    lo, hi = window
    v = series.values(quantity)
    m = (series.tau >= lo) & (series.tau <= hi) & (series.tau > 0)
    if np.count_nonzero(m) < 20:
        raise FitDomainError(f"window {window} holds {np.count_nonzero(m)} samples; need >= 20")
    y = v[m]
    if np.any(~(y > 0)):
        raise FitDomainError("non-positive values inside the fit window")
    res = stats.linregress(np.log(series.tau[m]), np.log(y))
    half = stats.t.ppf(0.5 + confidence / 2, np.count_nonzero(m) - 2) * res.stderr
    return PowerLawFit(float(res.slope), float(res.slope - half), float(res.slope + half),
                       float(res.intercept), int(np.count_nonzero(m)), (float(lo), float(hi)))


def saturation_slope(series: DispersionSeries, quantity: str = "dp") -> float:
    """Log-log slope over the final half of the run (tau in [tau_end/2, tau_end])."""
    end = series.tau[-1]
    return fit_power_law(series, (end / 2, end), quantity).alpha


@dataclass(frozen=True)
class BreakTime:
    tau: float
    seconds: float | None = None


def break_time(classical: DispersionSeries, quantum: DispersionSeries, threshold: float = 0.1,
               quantity: str = "dp", omega_r: float | None = None,
               hold: float = DRIVE_PERIOD) -> BreakTime | None:
    """Earliest time after which the quantum spread stays below the classical one.

    The relative gap (classical - quantum) / classical must exceed ``threshold`` at
    tau and at every sample within the following ``hold`` (one drive period by
    default). Returns ``None`` when the series never separate that way.
    """
    tau = classical.tau
    q = quantum
    if len(q.tau) != len(tau) or not np.array_equal(q.tau, tau):
        lo = max(tau[0], q.tau[0])
        hi = min(tau[-1], q.tau[-1])
        tau = tau[(tau >= lo) & (tau <= hi)]
        q = quantum.resample(tau)
        c = classical.resample(tau).values(quantity)
    else:
        c = classical.values(quantity)
    qv = q.values(quantity)
    with np.errstate(divide="ignore", invalid="ignore"):
        gap = np.where(c > 0, (c - qv) / c, 0.0)
    below = ~(gap > threshold)
    # below_before[j] = number of non-qualifying samples among indices < j
    below_before = np.concatenate([[0], np.cumsum(below)])
    ends = np.searchsorted(tau, tau + hold * (1 + 1e-12), side="right")
    for i in range(len(tau)):
        if tau[i] + hold > tau[-1] * (1 + 1e-12):
            break
        if below_before[ends[i]] - below_before[i] == 0:
            t = float(tau[i])
            return BreakTime(t, None if omega_r is None else t / omega_r)
    return None


@dataclass(frozen=True)
class LocalizationFit:
    length: float
    r2: float
    intercept: float
    center: float
    region: tuple[float, float]
    n_bins: int


def localization_length(hist: Histogram, center: float | None = None, width: float | None = None,
                        floor: float = 1e-8, min_bins: int = 10) -> LocalizationFit:
    """Fit ln W = a - |v - center| / length over the tail |v - center| > width.

    ``center`` and ``width`` default to the mean and standard deviation of the
    histogram. Bins below ``floor`` times the peak density, and empty bins,
    are excluded. The fit is weighted by bin mass, the Poisson weight of
    ln(count).
    """
    mass = hist.mass
    if center is None:
        center = hist.mean()
    if width is None:
        width = hist.std()
    d = np.abs(hist.centers - center)
    peak = np.max(hist.density) if hist.density.size else 0.0
    keep = (d > width) & (hist.density > 0) & (hist.density > floor * peak)
    n = int(np.count_nonzero(keep))
    if n < min_bins:
        raise InsufficientTailError(f"{n} tail bins; need >= {min_bins}")
    xs = d[keep]
    ys = np.log(hist.density[keep])
    w = mass[keep] / np.sum(mass[keep])
    xm = np.sum(w * xs)
    ym = np.sum(w * ys)
    sxx = np.sum(w * (xs - xm) ** 2)
    if sxx <= 0:
        raise InsufficientTailError("tail bins do not span a range")
    slope = np.sum(w * (xs - xm) * (ys - ym)) / sxx
    intercept = ym - slope * xm
    resid = ys - (intercept + slope * xs)
    syy = np.sum(w * (ys - ym) ** 2)
    r2 = 1.0 - np.sum(w * resid ** 2) / syy if syy > 0 else 1.0
    length = -1.0 / slope if slope < 0 else math.inf
    return LocalizationFit(float(length), float(r2), float(intercept), float(center),
                           (float(xs.min()), float(xs.max())), n)


# --- modulation / Planck-constant sweep -------------------------------------------------

SWEEP_COLUMNS = ("lam_eff", "kind", "dx_final", "dp_final", "break_time_x", "break_time_p",
                 "alpha_fit", "localization_length_p")
SIDECAR_COLUMNS = ("lam_eff", "kind", "status", "valid", "n_points", "alpha_ci_low",
                   "alpha_ci_high", "alpha_window_start", "alpha_window_end",
                   "saturation_slope_p", "localization_r2_p", "localization_length_x",
                   "localization_r2_x", "error")

NAN = float("nan")


@dataclass
class SweepRow:
    lam_eff: float
    kind: str  # "classical" or the hbar value
    dx_final: float = NAN
    dp_final: float = NAN
    break_time_x: float = NAN
    break_time_p: float = NAN
    alpha_fit: float = NAN
    localization_length_p: float = NAN
    diagnostics: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def values(self) -> tuple:
        return tuple(getattr(self, c) for c in SWEEP_COLUMNS)


@dataclass
class SweepResult:
    rows: list[SweepRow]
    tau_final: float

    def row(self, lam_eff: float, kind) -> SweepRow:
        key = kind if isinstance(kind, str) else format_kind(kind)
        for r in self.rows:
            if r.kind == key and r.lam_eff == lam_eff:
                return r
        raise KeyError((lam_eff, kind))

    @property
    def success_fraction(self) -> float:
        return sum(r.ok for r in self.rows) / len(self.rows) if self.rows else 0.0


def format_kind(hbar: float) -> str:
    return "%.17g" % hbar


def alpha_window(tau_end: float, breaks: BreakTime | None) -> tuple[float, float]:
    """Post-transient fit window: [2 tau*, tau_end], or [tau_end/4, tau_end] without a break."""
    if breaks is not None and 2 * breaks.tau < tau_end:
        return 2 * breaks.tau, tau_end
    return tau_end / 4, tau_end


def _try(row: SweepRow, key: str, fn):
    try:
        return fn()
    except Exception as exc:  # recorded per row, the sweep continues
        row.diagnostics.setdefault("notes", []).append(f"{key}: {exc}")
        return None


def _quantum_row(lam, hbar, crun, qrun, settings, threshold, omega_r) -> SweepRow:
    row = SweepRow(lam, format_kind(hbar))
    s = qrun.series
    row.dx_final = s.tail_mean("dx", settings.average_periods)
    row.dp_final = s.tail_mean("dp", settings.average_periods)
    row.diagnostics["valid"] = qrun.valid
    row.diagnostics["n_points"] = qrun.final.grid.n_points
    bp = bx = None
    if crun is not None:
        bp = break_time(crun.series, s, threshold, "dp", omega_r)
        bx = break_time(crun.series, s, threshold, "dx", omega_r)
        row.break_time_p = bp.tau if bp else NAN
        row.break_time_x = bx.tau if bx else NAN
    window = alpha_window(s.tau[-1], bp)
    fit = _try(row, "alpha", lambda: fit_power_law(s, window, "dp"))
    if fit is not None:
        row.alpha_fit = fit.alpha
        row.diagnostics.update(alpha_ci_low=fit.ci_low, alpha_ci_high=fit.ci_high,
                               alpha_window_start=window[0], alpha_window_end=window[1])
    sat = _try(row, "saturation", lambda: saturation_slope(s, "dp"))
    if sat is not None:
        row.diagnostics["saturation_slope_p"] = sat
    _fill_localization(row, qrun.position, qrun.momentum)
    if not qrun.valid:
        row.error = "invalid run: probability leaked onto the grid edges"
    return row


def _fill_localization(row, position, momentum):
    lp = _try(row, "localization_p", lambda: localization_length(momentum))
    if lp is not None:
        row.localization_length_p = lp.length
        row.diagnostics["localization_r2_p"] = lp.r2
    lx = _try(row, "localization_x", lambda: localization_length(position))
    if lx is not None:
        row.diagnostics["localization_length_x"] = lx.length
        row.diagnostics["localization_r2_x"] = lx.r2


def _classical_row(lam, crun, reference, settings) -> SweepRow:
    row = SweepRow(lam, "classical")
    s = crun.series
    row.dx_final = s.tail_mean("dx", settings.average_periods)
    row.dp_final = s.tail_mean("dp", settings.average_periods)
    row.diagnostics["valid"] = True
    window = alpha_window(s.tau[-1], reference)
    fit = _try(row, "alpha", lambda: fit_power_law(s, window, "dp"))
    if fit is not None:
        row.alpha_fit = fit.alpha
        row.diagnostics.update(alpha_ci_low=fit.ci_low, alpha_ci_high=fit.ci_high,
                               alpha_window_start=window[0], alpha_window_end=window[1])
    sat = _try(row, "saturation", lambda: saturation_slope(s, "dp"))
    if sat is not None:
        row.diagnostics["saturation_slope_p"] = sat
    _fill_localization(row, crun.position, crun.momentum)
    return row


def _sweep_block(lam, hbars, base, settings, threshold, omega_r):
    from .runs import run_classical, run_quantum

    params = base.with_lam_eff(lam)
    crun = None
    try:
        crun = run_classical(params, settings)
    except Exception as exc:
        crow = SweepRow(lam, "classical", error=f"classical run failed: {exc}")
    qrows = []
    reference = None
    ref_hbar = 1.0 if 1.0 in hbars else max(hbars)
    for hbar in hbars:
        try:
            qrun = run_quantum(params, hbar, settings)
            qrow = _quantum_row(lam, hbar, crun, qrun, settings, threshold, omega_r)
            if hbar == ref_hbar and crun is not None:
                reference = break_time(crun.series, qrun.series, threshold, "dp")
        except Exception as exc:
            qrow = SweepRow(lam, format_kind(hbar), error=f"quantum run failed: {exc}")
        qrows.append(qrow)
    if crun is not None:
        crow = _classical_row(lam, crun, reference, settings)
    return [crow] + qrows


def sweep(lam_effs, hbars=(0.1, 0.5, 1.0), base=None, tau_final: float | None = None,
          settings=None, threshold: float = 0.1, omega_r: float | None = None,
          workers: int = 1) -> SweepResult:
    """Classical ensemble and quantum packets for every modulation amplitude.

    For each ``lam_eff`` there is one classical row followed by one quantum row
    per ``hbar``; final spreads are averaged over the last
    ``settings.average_periods`` drive periods. Rows that fail carry an error
    message instead of aborting the sweep. Blocks for different ``lam_eff``
    may run concurrently; the row order is fixed.
    """
    from dataclasses import replace

    from .params import DimensionlessParams
    from .runs import RunSettings

    lam_effs = [float(v) for v in lam_effs]
    hbars = [float(h) for h in hbars]
    if not lam_effs or not hbars:
        raise ValueError("lam_effs and hbars must be non-empty")
    base = base or DimensionlessParams()
    settings = settings or RunSettings()
    if tau_final is not None:
        settings = replace(settings, tau_end=tau_final)

    def block(lam):
        return _sweep_block(lam, hbars, base, settings, threshold, omega_r)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(block, lam_effs))
    else:
        blocks = [block(lam) for lam in lam_effs]
    return SweepResult([r for b in blocks for r in b], settings.tau_end_aligned)
