"""Effective driven mirror Hamiltonian and the coupled mirror/condensate equations.

The effective Hamiltonian is

    H(x, p, tau) = p**2/2 + x**2/2 + x * lam_eff * cos(4 tau) - gamma_m * beta * arctan(mu - mu1 * x)

and is periodic in tau with period pi/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .params import DimensionlessParams, PhysicalParams

DRIVE_FREQUENCY = 4.0
DRIVE_PERIOD = 2.0 * math.pi / DRIVE_FREQUENCY

MAX_CLASSICAL_DT = math.pi / 20

CONDENSATE_CONVENTIONS = ("printed", "harmonic4")


def strobe_step(dt: float, max_dt: float | None = MAX_CLASSICAL_DT) -> tuple[float, int]:
    """Largest step <= dt that divides the drive period; returns (dt, steps per period)."""
    if not (dt > 0 and math.isfinite(dt)):
        raise InvalidParameterError(f"dt must be > 0, got {dt!r}")
    if max_dt is not None and dt > max_dt * (1 + 1e-12):
        raise InvalidParameterError(f"dt must be <= {max_dt!r}, got {dt!r}")
    n = max(1, math.ceil(DRIVE_PERIOD / dt - 1e-9))
    return DRIVE_PERIOD / n, n


@dataclass(frozen=True)
class EffectiveModel:
    params: DimensionlessParams

    @property
    def drive_frequency(self) -> float:
        return DRIVE_FREQUENCY

    @property
    def drive_period(self) -> float:
        return DRIVE_PERIOD

    def drive(self, tau):
        """Time-dependent linear coefficient lam_eff * cos(4 tau)."""
        return self.params.lam_eff * np.cos(DRIVE_FREQUENCY * tau)

    def static_potential(self, x):
        """The tau-independent part x**2/2 - gamma_m beta arctan(mu - mu1 x)."""
        p = self.params
        return 0.5 * x * x - p.well_depth * np.arctan(p.mu - p.mu1 * x)

    def potential(self, x, tau):
        return self.static_potential(x) + x * self.drive(tau)

    def static_force(self, x):
        p = self.params
        u = p.mu - p.mu1 * x
        return -x - p.well_depth * p.mu1 / (1.0 + u * u)

    def force(self, x, tau):
        """-dV/dx; the arctan well always pushes towards negative x."""
        return self.static_force(x) - self.drive(tau)

    def energy(self, x, p, tau):
        return 0.5 * p * p + self.potential(x, tau)


def potential(model: EffectiveModel, x, tau):
    return model.potential(x, tau)


def force(model: EffectiveModel, x, tau):
    return model.force(x, tau)


# --- full mirror/condensate system (dimensionful, time in seconds) ---------------------


@dataclass(frozen=True)
class CoupledState:
    q: float
    q_dot: float
    Q: float
    Q_dot: float
    t: float = 0.0

    def __post_init__(self):
        for name in ("q", "q_dot", "Q", "Q_dot", "t"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


def adiabatic_intensity(phys: PhysicalParams, q, Q):
    """Steady-state intracavity photon number |alpha|**2 for frozen q and Q.

    Uses the detuning combination (Delta + xi q - xi_sm Q) that appears in the
    coupled equations of motion.
    """
    kappa = phys.cavity_decay
    if not kappa > 0:
        raise ValueError("cavity_decay must be > 0")
    shift = phys.detuning + phys.mirror_field_coupling * q - phys.condensate_field_coupling * Q
    return phys.pump_coupling ** 2 / (kappa ** 2 + shift * shift)


def coupled_rhs(state: CoupledState, phys: PhysicalParams, convention: str = "printed"):
    """Time derivatives (q_dot, q_ddot, Q_dot, Q_ddot) of the classical coupled system.

    ``convention`` picks the condensate restoring term: ``"printed"`` uses
    -4 omega_r**2 Q, ``"harmonic4"`` uses -(4 omega_r)**2 Q.
    """
    if convention not in CONDENSATE_CONVENTIONS:
        raise ValueError(f"unknown condensate convention {convention!r}")
    wm = phys.mirror_frequency
    wr = phys.recoil_frequency
    intensity = adiabatic_intensity(phys, state.q, state.Q)
    q_ddot = -wm * wm * state.q + wm * phys.mirror_field_coupling * intensity
    spring = 4.0 * wr * wr if convention == "printed" else 16.0 * wr * wr
    Q_ddot = -spring * state.Q - 4.0 * wr * phys.condensate_field_coupling * intensity
    return state.q_dot, q_ddot, state.Q_dot, Q_ddot


def integrate_coupled(state: CoupledState, phys: PhysicalParams, t_end: float,
                      n_samples: int = 200, convention: str = "printed",
                      rtol: float = 1e-10, atol: float = 1e-12):
    """Integrate the coupled equations with an adaptive Runge-Kutta solver.

    Returns ``(t, y)`` with ``y`` of shape (4, n_samples) ordered as (q, q_dot, Q, Q_dot).
    """
    from scipy.integrate import solve_ivp

    def rhs(t, y):
        s = CoupledState(y[0], y[1], y[2], y[3], t)
        return coupled_rhs(s, phys, convention)

    t_eval = np.linspace(state.t, state.t + t_end, n_samples)
    sol = solve_ivp(rhs, (state.t, state.t + t_end), [state.q, state.q_dot, state.Q, state.Q_dot],
                    method="DOP853", t_eval=t_eval, rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.t, sol.y
