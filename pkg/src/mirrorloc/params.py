"""Parameter sets for the BEC-loaded optomechanical cavity.

Two sets coexist. :class:`PhysicalParams` carries the dimensionful laboratory
values (SI units, angular frequencies in rad/s). :class:`DimensionlessParams`
carries the reduced numbers that actually drive the mirror dynamics. The
canonical dimensionless set is *not* what :func:`reduce` produces from the
canonical physical set; experiments consume the dimensionless set directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

from .errors import InvalidParameterError

TWO_PI = 2.0 * math.pi
SPEED_OF_LIGHT = 299_792_458.0  # m/s

#: Pump wavelength used to turn modulation amplitudes quoted in metres into
#: dimensionless numbers (lam_eff = metres / wavelength).
DEFAULT_PUMP_WAVELENGTH = 780e-9

#: Modulation amplitudes of the four phase-space panels, in metres.
SECTION_LAM_EFF_METRES = (2.6e-6, 5.2e-6, 1.05e-5, 3.15e-5)
#: Modulation amplitude of the dispersion/distribution runs, in metres.
DISPERSION_LAM_EFF_METRES = 1.05e-5


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensionful experimental parameters (SI; angular frequencies in rad/s)."""

    pump_power: float = 0.0164e-3
    pump_frequency: float = 3.8 * TWO_PI * 1e14
    pump_wavelength: float = DEFAULT_PUMP_WAVELENGTH
    cavity_frequency: float = 15.3 * TWO_PI * 1e14
    cavity_length: float = 1.25e-4
    cavity_decay: float = 1.3 * TWO_PI * 1e6
    pump_coupling: float = 18.4 * TWO_PI * 1e6
    mirror_frequency: float = 15.2 * TWO_PI * 1e3
    recoil_frequency: float = 3.8 * TWO_PI * 1e3
    mirror_field_coupling: float = 15.07e6
    condensate_field_coupling: float = 14.39e3
    detuning: float = 0.52 * TWO_PI * 1e6
    rabi_frequency: float = 3.1 * TWO_PI * 1e6
    atom_number: float = 2.8e4
    # never assigned a value in the source material; 0 disables the side-mode drive
    side_mode_amplitude: float = 0.0
    mirror_damping: float = 0.0
    condensate_damping: float = 0.0

    def validate(self) -> "PhysicalParams":
        positive = (
            "pump_frequency", "pump_wavelength", "cavity_frequency", "cavity_length",
            "cavity_decay", "pump_coupling", "mirror_frequency", "recoil_frequency",
            "rabi_frequency",
        )
        for name in positive:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidParameterError(f"{name} must be finite and > 0, got {value!r}")
        nonneg = (
            "pump_power", "mirror_field_coupling", "condensate_field_coupling",
            "mirror_damping", "condensate_damping",
        )
        for name in nonneg:
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise InvalidParameterError(f"{name} must be finite and >= 0, got {value!r}")
        if not (self.atom_number >= 1):
            raise InvalidParameterError(f"atom_number must be >= 1, got {self.atom_number!r}")
        for name in ("detuning", "side_mode_amplitude"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")
        return self


def wavelength_mismatch(phys: PhysicalParams) -> float:
    """Relative deviation of ``lambda_p * omega_p`` from ``2 pi c``."""
    return abs(phys.pump_wavelength * phys.pump_frequency / (TWO_PI * SPEED_OF_LIGHT) - 1.0)


def lam_eff_factor(gamma: float) -> float:
    """Ratio lam_eff / lam = 1 + 32 / gamma**2."""
    return 1.0 + 32.0 / (gamma * gamma)


@dataclass(frozen=True)
class DimensionlessParams:
    """Reduced parameters of the effective mirror Hamiltonian.

    ``lam_eff`` is stored; the bare drive amplitude ``lam`` is derived from it so
    that ``lam_eff == lam_eff_factor(gamma) * lam`` holds by construction.
    """

    gamma: float = 4.0
    beta: float = 1.8
    mu: float = -0.4
    mu1: float = 2.0
    gamma_m: float = 0.6034
    lam_eff: float = DISPERSION_LAM_EFF_METRES / DEFAULT_PUMP_WAVELENGTH
    hbar: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            if not math.isfinite(getattr(self, f.name)):
                raise InvalidParameterError(f"{f.name} must be finite")
        if self.gamma <= 0:
            raise InvalidParameterError(f"gamma must be > 0, got {self.gamma!r}")
        if self.beta < 0:
            raise InvalidParameterError(f"beta must be >= 0, got {self.beta!r}")
        if self.mu1 < 0:
            raise InvalidParameterError(f"mu1 must be >= 0, got {self.mu1!r}")
        if self.hbar <= 0:
            raise InvalidParameterError(f"hbar must be > 0, got {self.hbar!r}")

    @classmethod
    def from_drive(cls, lam: float, **kwargs) -> "DimensionlessParams":
        """Build from the bare drive amplitude ``lam`` instead of ``lam_eff``."""
        gamma = kwargs.get("gamma", cls.gamma)
        return cls(lam_eff=lam_eff_factor(gamma) * lam, **kwargs)

    @property
    def lam(self) -> float:
        return self.lam_eff / lam_eff_factor(self.gamma)

    @property
    def well_depth(self) -> float:
        """Prefactor gamma_m * beta of the arctan term."""
        return self.gamma_m * self.beta

    def with_lam_eff(self, lam_eff: float) -> "DimensionlessParams":
        return replace(self, lam_eff=lam_eff)

    def with_hbar(self, hbar: float) -> "DimensionlessParams":
        return replace(self, hbar=hbar)


def reduce(phys: PhysicalParams, hbar: float) -> DimensionlessParams:
    """Reduce the physical set to dimensionless numbers for a given scaled Planck constant."""
    if not phys.recoil_frequency > 0:
        raise InvalidParameterError("recoil_frequency must be > 0")
    if not phys.cavity_decay > 0:
        raise InvalidParameterError("cavity_decay must be > 0")
    phys.validate()
    kappa = phys.cavity_decay
    gamma = phys.mirror_frequency / phys.recoil_frequency
    lam = phys.condensate_field_coupling / phys.mirror_field_coupling * phys.side_mode_amplitude
    return DimensionlessParams(
        gamma=gamma,
        beta=phys.pump_coupling ** 2 / kappa ** 2,
        mu=phys.detuning / kappa,
        mu1=phys.mirror_field_coupling / kappa,
        gamma_m=4.0 * phys.mirror_field_coupling / (gamma * phys.mirror_frequency),
        lam_eff=lam_eff_factor(gamma) * lam,
        hbar=hbar,
    )


def canonical_defaults() -> tuple[PhysicalParams, DimensionlessParams]:
    """Laboratory parameter set and the canonical dimensionless set."""
    return PhysicalParams(), DimensionlessParams()


def lam_eff_from_metres(amplitude_m: float, wavelength: float = DEFAULT_PUMP_WAVELENGTH) -> float:
    """Convert a modulation amplitude quoted in metres by dividing by the pump wavelength."""
    if wavelength <= 0:
        raise InvalidParameterError("wavelength must be > 0")
    return amplitude_m / wavelength


def section_lam_effs(wavelength: float = DEFAULT_PUMP_WAVELENGTH) -> tuple[float, ...]:
    return tuple(lam_eff_from_metres(m, wavelength) for m in SECTION_LAM_EFF_METRES)


def tau_from_seconds(t: float, omega_r: float) -> float:
    """Dimensionless time tau = omega_r * t."""
    if not omega_r > 0:
        raise InvalidParameterError("omega_r must be > 0")
    return omega_r * t


def seconds_from_tau(tau: float, omega_r: float) -> float:
    if not omega_r > 0:
        raise InvalidParameterError("omega_r must be > 0")
    return tau / omega_r
