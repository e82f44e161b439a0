"""Flat ``key = value`` run configuration.

One entry per line, ``#`` starts a comment, list values are comma separated.
Physical keys are SI (angular frequencies in rad/s). Every key has a default;
:meth:`RunConfig.echo` writes the fully resolved set, which loads back to the
same configuration.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError, InvalidParameterError
from .model import CONDENSATE_CONVENTIONS, DRIVE_PERIOD
from .params import (DimensionlessParams, PhysicalParams, section_lam_effs, lam_eff_from_metres,
                     reduce, tau_from_seconds, wavelength_mismatch)
from .runs import CANONICAL_TAU_END, RunSettings

EXPERIMENTS = ("poincare", "dispersion", "distributions", "spatiotemporal", "sweep")

_DIMLESS = DimensionlessParams()
_PHYS = PhysicalParams()
_RUN = RunSettings()


def _float_list(text):
    items = [t.strip() for t in text.split(",") if t.strip()]
    return tuple(float(t) for t in items)


def _optional_float_list(text):
    return None if text.strip().lower() == "none" else _float_list(text)


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _choice(*options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return parse


def _optional_float(text):
    return None if text.strip().lower() in ("", "none") else float(text)


# key -> (parser, default)
KEYS: dict[str, tuple] = {
    "experiment": (_choice(*EXPERIMENTS), None),
    "output_dir": (str, "out"),
    # dimensionless model
    "dimensionless_source": (_choice("canonical", "physical"), "canonical"),
    "gamma": (float, _DIMLESS.gamma),
    "beta": (float, _DIMLESS.beta),
    "mu": (float, _DIMLESS.mu),
    "mu1": (float, _DIMLESS.mu1),
    "gamma_m": (float, _DIMLESS.gamma_m),
    "lam_eff": (_optional_float, None),
    "lam_eff_m": (_optional_float, None),
    "hbar": (float, _DIMLESS.hbar),
    "condensate_frequency_convention": (_choice(*CONDENSATE_CONVENTIONS), "printed"),
    # times
    "tau_end": (_optional_float, None),
    "t_end_seconds": (_optional_float, None),
    "dt_classical": (float, _RUN.dt_classical),
    "dt_quantum": (float, _RUN.dt_quantum),
    "samples_per_period": (int, _RUN.samples_per_period),
    # ensemble
    "n_members": (int, _RUN.n_members),
    "seed": (int, _RUN.seed),
    "x0": (float, _RUN.x0),
    "p0": (float, _RUN.p0),
    "dx0": (float, _RUN.dx0),
    "dp0": (float, _RUN.dp0),
    "workers": (int, _RUN.workers),
    # grid
    "x_min": (float, _RUN.x_min),
    "x_max": (float, _RUN.x_max),
    "n_points": (int, _RUN.n_points),
    "min_points": (int, _RUN.min_points),
    "p_max": (float, _RUN.p_max),
    # distributions and maps
    "average_periods": (float, _RUN.average_periods),
    "density_every_periods": (int, 10),
    "density_stride": (int, 4),
    "fail_on_invalid": (_bool, True),
    # poincare
    "lam_eff_list": (_optional_float_list, None),
    "lam_eff_m_list": (_optional_float_list, None),
    "n_initial_conditions": (int, 500),
    "ic_x_min": (float, -6.0),
    "ic_x_max": (float, 6.0),
    "n_periods": (int, 200),
    "dt_poincare": (float, 1e-3),
    "chaos_threshold": (float, 0.05),
    # sweep
    "sweep_lam_eff_list": (_float_list, (0.0,) + section_lam_effs()[:3] + (26.923076923076923,) + section_lam_effs()[3:]),
    "hbar_list": (_float_list, (0.1, 0.5, 1.0)),
    "break_threshold": (float, 0.1),
}
for _f in fields(PhysicalParams):
    KEYS[_f.name] = (float, getattr(_PHYS, _f.name))


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    return str(value)


def parse_lines(lines, source="<config>") -> dict[str, str]:
    raw: dict[str, str] = {}
    for n, line in enumerate(lines, 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{source}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in text.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown key ({source}:{n})", key=key)
        raw[key] = value
    return raw


def parse_overrides(items) -> dict[str, str]:
    raw = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = (s.strip() for s in item.split("=", 1))
        if key not in KEYS:
            raise ConfigError("unknown key", key=key)
        raw[key] = value
    return raw


@dataclass
class RunConfig:
    experiment: str
    values: dict
    user_keys: frozenset
    params: DimensionlessParams
    physical: PhysicalParams
    settings: RunSettings

    @property
    def output_dir(self) -> Path:
        return Path(self.values["output_dir"])

    def __getitem__(self, key):
        return self.values[key]

    @property
    def poincare_lam_effs(self) -> tuple[float, ...]:
        return self.values["lam_eff_list"]

    def echo(self) -> str:
        lines = [f"experiment = {self.experiment}"]
        for key in KEYS:
            if key == "experiment":
                continue
            lines.append(f"{key} = {_format(self.values[key])}")
        return "\n".join(lines) + "\n"


def resolve(raw: dict[str, str], experiment: str) -> RunConfig:
    """Parse raw strings, apply defaults and derive the parameter objects."""
    values = {}
    for key, (parse, default) in KEYS.items():
        if key in raw:
            try:
                values[key] = parse(raw[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value {raw[key]!r} ({exc})", key=key) from None
        else:
            values[key] = default
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}", key="experiment")
    if values["experiment"] is not None and values["experiment"] != experiment:
        raise ConfigError(f"config is for {values['experiment']!r}, not {experiment!r}",
                          key="experiment")
    values["experiment"] = experiment
    user = frozenset(raw)

    try:
        physical = PhysicalParams(**{f.name: values[f.name] for f in fields(PhysicalParams)})
        physical.validate()
    except InvalidParameterError as exc:
        raise ConfigError(str(exc), key="physical") from None
    # the published pair is itself ~1% off; only warn about a pair the user changed
    custom = (physical.pump_wavelength, physical.pump_frequency) != (_PHYS.pump_wavelength,
                                                                    _PHYS.pump_frequency)
    if custom and {"pump_wavelength", "pump_frequency"} <= user and wavelength_mismatch(physical) > 5e-3:
        warnings.warn("pump_wavelength * pump_frequency deviates from 2 pi c by more than 0.5%",
                      stacklevel=2)

    wavelength = physical.pump_wavelength
    if values["lam_eff_m"] is not None:
        values["lam_eff"] = lam_eff_from_metres(values["lam_eff_m"], wavelength)
    try:
        if values["dimensionless_source"] == "physical":
            params = reduce(physical, values["hbar"])
            if values["lam_eff"] is not None:
                params = params.with_lam_eff(values["lam_eff"])
            for key in ("gamma", "beta", "mu", "mu1", "gamma_m"):
                values[key] = getattr(params, key)
        else:
            if values["lam_eff"] is None:
                values["lam_eff"] = _DIMLESS.lam_eff
            params = DimensionlessParams(
                gamma=values["gamma"], beta=values["beta"], mu=values["mu"], mu1=values["mu1"],
                gamma_m=values["gamma_m"], lam_eff=values["lam_eff"], hbar=values["hbar"])
    except InvalidParameterError as exc:
        raise ConfigError(str(exc), key="dimensionless") from None
    values["lam_eff"] = params.lam_eff

    if values["lam_eff_m_list"] is not None:
        values["lam_eff_list"] = tuple(lam_eff_from_metres(m, wavelength)
                                       for m in values["lam_eff_m_list"])
    if values["lam_eff_list"] is None:
        values["lam_eff_list"] = section_lam_effs(wavelength)

    if values["t_end_seconds"] is not None:
        values["tau_end"] = tau_from_seconds(values["t_end_seconds"], physical.recoil_frequency)
    if values["tau_end"] is None:
        values["tau_end"] = tau_from_seconds(0.1315, physical.recoil_frequency)
    _check(values)
    settings = RunSettings(
        tau_end=values["tau_end"], dt_classical=values["dt_classical"],
        dt_quantum=values["dt_quantum"], samples_per_period=values["samples_per_period"],
        n_members=values["n_members"], seed=values["seed"], x0=values["x0"], p0=values["p0"],
        dx0=values["dx0"], dp0=values["dp0"], workers=values["workers"], x_min=values["x_min"],
        x_max=values["x_max"], n_points=values["n_points"], min_points=values["min_points"],
        p_max=values["p_max"], average_periods=values["average_periods"],
        density_every_periods=(values["density_every_periods"]
                               if experiment in ("spatiotemporal",) else 0),
        density_stride=values["density_stride"],
    )
    return RunConfig(experiment, values, user, params, physical, settings)


def _require(cond, key, message):
    if not cond:
        raise ConfigError(message, key=key)


def _check(v):
    _require(v["tau_end"] >= 0 and math.isfinite(v["tau_end"]), "tau_end", "must be >= 0")
    for key in ("dt_classical", "dt_quantum", "dt_poincare"):
        _require(0 < v[key] <= math.pi / 20, key, "must lie in (0, pi/20]")
    _require(v["samples_per_period"] >= 1, "samples_per_period", "must be >= 1")
    _require(v["n_members"] >= 1, "n_members", "must be >= 1")
    _require(v["workers"] >= 1, "workers", "must be >= 1")
    _require(v["dx0"] > 0, "dx0", "must be > 0")
    _require(v["dp0"] >= 0, "dp0", "must be >= 0")
    _require(v["x_max"] > v["x_min"], "x_max", "must exceed x_min")
    n = v["n_points"]
    _require(n == 0 or (n >= 2 and n & (n - 1) == 0), "n_points", "must be 0 or a power of two")
    _require(v["p_max"] > 0, "p_max", "must be > 0")
    _require(v["average_periods"] >= 0, "average_periods", "must be >= 0")
    _require(v["average_periods"] * DRIVE_PERIOD <= v["tau_end"] or v["tau_end"] == 0,
             "average_periods", "averaging window longer than the run")
    _require(v["density_every_periods"] >= 1, "density_every_periods", "must be >= 1")
    _require(v["density_stride"] >= 1, "density_stride", "must be >= 1")
    _require(v["n_initial_conditions"] >= 1, "n_initial_conditions", "must be >= 1")
    _require(v["ic_x_max"] >= v["ic_x_min"], "ic_x_max", "must be >= ic_x_min")
    _require(v["n_periods"] >= 0, "n_periods", "must be >= 0")
    _require(len(v["lam_eff_list"]) >= 1, "lam_eff_list", "must not be empty")
    _require(len(v["sweep_lam_eff_list"]) >= 1, "sweep_lam_eff_list", "must not be empty")
    _require(len(v["hbar_list"]) >= 1 and all(h > 0 for h in v["hbar_list"]), "hbar_list",
             "must be a non-empty list of positive numbers")
    _require(v["hbar"] > 0, "hbar", "must be > 0")
    _require(v["break_threshold"] > 0, "break_threshold", "must be > 0")


def load_config(path, experiment: str, overrides=()) -> RunConfig:
    raw = {}
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        raw.update(parse_lines(text.splitlines(), str(p)))
    raw.update(parse_overrides(overrides))
    return resolve(raw, experiment)
