import math
from dataclasses import fields, replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mirrorloc.errors import InvalidParameterError
from mirrorloc.params import (DimensionlessParams, PhysicalParams, canonical_defaults,
                              section_lam_effs, lam_eff_factor, lam_eff_from_metres, reduce,
                              seconds_from_tau, tau_from_seconds, wavelength_mismatch)

TWO_PI = 2 * math.pi
RECOIL = 3.8 * TWO_PI * 1e3


def test_gamma_from_mirror_and_recoil_frequencies():
    phys = PhysicalParams(mirror_frequency=15.2 * TWO_PI * 1e3, recoil_frequency=RECOIL)
    assert reduce(phys, 1.0).gamma == pytest.approx(4.0, rel=1e-12)


def test_lam_eff_from_bare_drive():
    assert DimensionlessParams.from_drive(1.0, gamma=4.0).lam_eff == pytest.approx(3.0, rel=1e-15)


def test_reduce_lam_eff_uses_side_mode_amplitude():
    base = PhysicalParams()
    # Q0 chosen so that lam = xi_sm / xi * Q0 = 1; gamma = 4 for the canonical frequencies
    phys = replace(base, side_mode_amplitude=base.mirror_field_coupling / base.condensate_field_coupling)
    d = reduce(phys, 1.0)
    assert d.lam == pytest.approx(1.0, rel=1e-12)
    assert d.lam_eff == pytest.approx(3.0, rel=1e-12)


def test_beta_is_one_when_pump_equals_decay():
    phys = PhysicalParams(pump_coupling=2e6, cavity_decay=2e6)
    assert reduce(phys, 1.0).beta == 1.0


def test_reduce_full_mapping():
    phys = PhysicalParams(side_mode_amplitude=0.3)
    d = reduce(phys, 0.25)
    kappa = phys.cavity_decay
    gamma = phys.mirror_frequency / phys.recoil_frequency
    assert d.gamma == pytest.approx(gamma)
    assert d.beta == pytest.approx(phys.pump_coupling ** 2 / kappa ** 2)
    assert d.mu == pytest.approx(phys.detuning / kappa)
    assert d.mu1 == pytest.approx(phys.mirror_field_coupling / kappa)
    assert d.gamma_m == pytest.approx(4 * phys.mirror_field_coupling / (gamma * phys.mirror_frequency))
    assert d.lam == pytest.approx(phys.condensate_field_coupling / phys.mirror_field_coupling * 0.3)
    assert d.hbar == 0.25


@pytest.mark.parametrize("field", ["recoil_frequency", "cavity_decay"])
@pytest.mark.parametrize("value", [0.0, -1.0])
def test_reduce_rejects_non_positive_rates(field, value):
    with pytest.raises(InvalidParameterError):
        reduce(PhysicalParams(**{field: value}), 1.0)


def test_validate_rejects_bad_atom_number():
    with pytest.raises(InvalidParameterError):
        PhysicalParams(atom_number=0.5).validate()


def test_canonical_defaults():
    phys, dim = canonical_defaults()
    assert dim.mu == -0.4
    assert dim.mu1 == 2
    assert dim.beta == 1.8
    assert dim.gamma_m == 0.6034
    assert dim.gamma == 4
    assert dim.hbar == 1
    assert phys.atom_number == 2.8e4
    assert phys.pump_power == pytest.approx(1.64e-5)
    assert phys.pump_coupling == pytest.approx(18.4 * TWO_PI * 1e6)
    assert phys.recoil_frequency == pytest.approx(RECOIL)


def test_canonical_sets_are_not_related_by_reduction():
    phys, dim = canonical_defaults()
    reduced = reduce(phys, 1.0)
    assert reduced.beta == pytest.approx((18.4 / 1.3) ** 2)
    assert reduced.beta != pytest.approx(dim.beta)
    assert reduced.gamma_m > 100


def test_canonical_wavelength_is_about_one_percent_off_light_speed():
    # the published pump wavelength and frequency disagree slightly; only user-set pairs warn
    assert 0.005 < wavelength_mismatch(PhysicalParams()) < 0.02


def test_metre_convention():
    assert lam_eff_from_metres(1.05e-5) == pytest.approx(13.4615, rel=1e-4)
    assert section_lam_effs() == pytest.approx((3.3333, 6.6667, 13.4615, 40.3846), rel=1e-4)


@pytest.mark.parametrize("t, tau", [(0.0, 0.0), (0.1315, 3139.6), (0.0127, 303.2)])
def test_tau_from_seconds(t, tau):
    assert tau_from_seconds(t, RECOIL) == pytest.approx(tau, rel=1e-4, abs=1e-12)


@given(st.floats(1e-9, 10.0), st.floats(1.0, 1e8))
def test_tau_round_trip(t, omega):
    assert seconds_from_tau(tau_from_seconds(t, omega), omega) == pytest.approx(t, rel=1e-12)


@given(st.floats(1e-3, 1e3), st.floats(-50, 50, allow_subnormal=False))
def test_lam_eff_ratio(gamma, lam):
    d = DimensionlessParams.from_drive(lam, gamma=gamma)
    assert d.lam_eff == pytest.approx((1 + 32 / gamma ** 2) * lam, rel=1e-14, abs=1e-300)
    if lam != 0:
        assert d.lam_eff / d.lam == pytest.approx(lam_eff_factor(gamma), rel=1e-12)


def test_dimensionless_invariants():
    with pytest.raises(InvalidParameterError):
        DimensionlessParams(gamma=0)
    with pytest.raises(InvalidParameterError):
        DimensionlessParams(beta=-1)
    with pytest.raises(InvalidParameterError):
        DimensionlessParams(hbar=0)
    with pytest.raises(InvalidParameterError):
        DimensionlessParams(mu1=-0.1)


# which reduced quantities each laboratory parameter feeds
DEPENDS = {
    "mirror_frequency": {"gamma", "gamma_m", "lam_eff"},
    "recoil_frequency": {"gamma", "gamma_m", "lam_eff"},
    "pump_coupling": {"beta"},
    "cavity_decay": {"beta", "mu", "mu1"},
    "detuning": {"mu"},
    "mirror_field_coupling": {"mu1", "gamma_m", "lam_eff"},
    "condensate_field_coupling": {"lam_eff"},
    "side_mode_amplitude": {"lam_eff"},
}
REDUCED = ("gamma", "beta", "mu", "mu1", "gamma_m", "lam_eff", "hbar")


@pytest.mark.parametrize("name", [f.name for f in fields(PhysicalParams)])
def test_reduce_dependency_edges(name):
    base = PhysicalParams(side_mode_amplitude=0.7)
    bumped = replace(base, **{name: getattr(base, name) * 1.37 + (1.0 if getattr(base, name) == 0 else 0)})
    a, b = reduce(base, 1.0), reduce(bumped, 1.0)
    changed = {k for k in REDUCED if getattr(a, k) != getattr(b, k)}
    assert changed == DEPENDS.get(name, set())
