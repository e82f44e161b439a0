"""Experiments behind the CLI subcommands; each writes CSV artifacts to a directory.

Every experiment returns an exit status: 0 success, 3 physics diagnostics
failed, 4 too many failed sweep rows.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from . import analysis, classical, csvio
from .config import RunConfig
from .model import EffectiveModel
from .runs import ClassicalRun, QuantumRun, run_classical, run_quantum

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVALID_RUN = 3
EXIT_SWEEP_FAILED = 4

CONFIG_ECHO = "config_resolved.cfg"


def write_echo(cfg: RunConfig, out: Path) -> Path:
    path = out / CONFIG_ECHO
    with open(path, "w", newline="\n") as fh:
        fh.write(cfg.echo())
    return path


def poincare_filename(index: int, lam_eff: float) -> str:
    return f"poincare_{index + 1:02d}_lam_eff_{lam_eff:.4f}.csv"


def run_poincare(cfg: RunConfig, out: Path) -> int:
    ics = classical.line_initial_conditions(cfg["n_initial_conditions"], cfg["ic_x_min"],
                                            cfg["ic_x_max"])
    summary = ["lam_eff,chaotic_fraction,n_diverged"]
    for i, lam in enumerate(cfg.poincare_lam_effs):
        model = EffectiveModel(cfg.params.with_lam_eff(lam))
        section = classical.poincare(model, ics, cfg["n_periods"], cfg["dt_poincare"],
                                     workers=cfg["workers"])
        csvio.write_columns(out / poincare_filename(i, lam), ("tau", "x", "p"),
                            section.tau, section.x, section.p)
        if len(section.diverged):
            log.warning("lam_eff=%g: %d diverged orbits: %s", lam, len(section.diverged),
                        section.diverged.tolist())
        frac = classical.chaotic_fraction(section, cfg["chaos_threshold"]) if len(section) else 0.0
        summary.append("%.17g,%.17g,%d" % (lam, frac, len(section.diverged)))
        log.info("lam_eff=%.4f chaotic fraction %.3f", lam, frac)
    with open(out / "poincare_summary.txt", "w", newline="\n") as fh:
        fh.write("\n".join(summary) + "\n")
    return EXIT_OK


def _write_distributions(out, crun: ClassicalRun, qrun: QuantumRun):
    csvio.write_columns(out / "distribution_quantum_x.csv", ("x", "W_x"),
                        qrun.position.centers, qrun.position.density)
    csvio.write_columns(out / "distribution_quantum_p.csv", ("p", "W_p"),
                        qrun.momentum.centers, qrun.momentum.density)
    csvio.write_columns(out / "distribution_classical_x.csv", ("x", "W_x"),
                        crun.position.centers, crun.position.density)
    csvio.write_columns(out / "distribution_classical_p.csv", ("p", "W_p"),
                        crun.momentum.centers, crun.momentum.density)


def _write_dispersion(out, crun: ClassicalRun, qrun: QuantumRun):
    c = crun.series
    q = qrun.series
    csvio.write_columns(out / "dispersion_classical.csv", ("tau", "dx_classical", "dp_classical"),
                        c.tau, c.dx, c.dp)
    csvio.write_columns(out / "dispersion_quantum.csv",
                        ("tau", "dx_quantum", "dp_quantum", "norm", "boundary_density"),
                        q.tau, q.dx, q.dp, q.extra["norm"], q.extra["boundary_density"])


def _write_map(path, axis, dmap):
    n_t, n_c = dmap.density.shape
    tau = np.repeat(dmap.tau, n_c)
    coord = np.tile(dmap.coord, n_t)
    csvio.write_columns(path, ("tau", axis, "density"), tau, coord, dmap.density.ravel())


def _report_pair(cfg, crun, qrun):
    c, q = crun.series, qrun.series
    thr = cfg["break_threshold"]
    wr = cfg.physical.recoil_frequency
    for quantity in ("dp", "dx"):
        bt = analysis.break_time(c, q, thr, quantity, wr)
        log.info("%s: classical final %.4g, quantum final %.4g, break time %s", quantity,
                 c.tail_mean(quantity, cfg["average_periods"]),
                 q.tail_mean(quantity, cfg["average_periods"]),
                 "none" if bt is None else f"tau={bt.tau:.4g} ({bt.seconds * 1e3:.4g} ms)")


def _pair(cfg: RunConfig):
    crun = run_classical(cfg.params, cfg.settings)
    qrun = run_quantum(cfg.params, cfg.params.hbar, cfg.settings)
    _report_pair(cfg, crun, qrun)
    return crun, qrun


def _invalid_status(cfg, qrun) -> int:
    if qrun.valid:
        return EXIT_OK
    s = qrun.series
    log.error("quantum run invalid: max boundary density %.3g, max spectral leak %.3g "
              "(enlarge x_min/x_max or p_max)", np.max(s.extra["boundary_density"]),
              np.max(s.extra["spectral_leak"]))
    return EXIT_INVALID_RUN if cfg["fail_on_invalid"] else EXIT_OK


def run_dispersion(cfg: RunConfig, out: Path) -> int:
    crun, qrun = _pair(cfg)
    _write_dispersion(out, crun, qrun)
    _write_distributions(out, crun, qrun)
    return _invalid_status(cfg, qrun)


def run_distributions(cfg: RunConfig, out: Path) -> int:
    crun, qrun = _pair(cfg)
    _write_distributions(out, crun, qrun)
    return _invalid_status(cfg, qrun)


def run_spatiotemporal(cfg: RunConfig, out: Path) -> int:
    crun, qrun = _pair(cfg)
    _write_map(out / "spatiotemporal_quantum_x.csv", "x", qrun.position_map)
    _write_map(out / "spatiotemporal_quantum_p.csv", "p", qrun.momentum_map)
    _write_map(out / "spatiotemporal_classical_x.csv", "x", crun.position_map)
    _write_map(out / "spatiotemporal_classical_p.csv", "p", crun.momentum_map)
    return _invalid_status(cfg, qrun)


def write_sweep(result: analysis.SweepResult, out: Path):
    csvio.write_rows(out / "sweep.csv", analysis.SWEEP_COLUMNS, (r.values() for r in result.rows))
    rows = []
    for r in result.rows:
        d = r.diagnostics
        notes = list(d.get("notes", []))
        if r.error:
            notes.insert(0, r.error)
        rows.append((
            r.lam_eff, r.kind, "ok" if r.ok else "failed", d.get("valid", False),
            d.get("n_points", ""), d.get("alpha_ci_low", float("nan")),
            d.get("alpha_ci_high", float("nan")), d.get("alpha_window_start", float("nan")),
            d.get("alpha_window_end", float("nan")), d.get("saturation_slope_p", float("nan")),
            d.get("localization_r2_p", float("nan")), d.get("localization_length_x", float("nan")),
            d.get("localization_r2_x", float("nan")),
            " | ".join(notes).replace(",", ";").replace("\n", " "),
        ))
    csvio.write_rows(out / "sweep_diagnostics.csv", analysis.SIDECAR_COLUMNS, rows)


def run_sweep(cfg: RunConfig, out: Path) -> int:
    result = analysis.sweep(cfg["sweep_lam_eff_list"], cfg["hbar_list"], cfg.params,
                            settings=cfg.settings, threshold=cfg["break_threshold"],
                            omega_r=cfg.physical.recoil_frequency)
    write_sweep(result, out)
    frac = result.success_fraction
    log.info("sweep: %d rows, %.0f%% succeeded", len(result.rows), 100 * frac)
    return EXIT_OK if frac >= 0.9 else EXIT_SWEEP_FAILED


RUNNERS = {
    "poincare": run_poincare,
    "dispersion": run_dispersion,
    "distributions": run_distributions,
    "spatiotemporal": run_spatiotemporal,
    "sweep": run_sweep,
}


def run_experiment(cfg: RunConfig) -> int:
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    write_echo(cfg, out)
    return RUNNERS[cfg.experiment](cfg, out)
