import math

import pytest

from optoclock.errors import TruncationError
from optoclock.params import (ClockParams, ideal_regime_report,
                              occupation_from_temperature,
                              temperature_from_occupation)


def test_defaults_are_resonant():
    p = ClockParams()
    assert p.Delta == 0.0
    assert p.eps2 == 120.0
    assert p.eps3 == 240.0
    assert p.dim == 45


def test_invariants_enforced():
    with pytest.raises(ValueError):
        ClockParams(omega13=100.0, omega23=120.0)
    with pytest.raises(ValueError):
        ClockParams(omega23=-1.0)
    with pytest.raises(ValueError):
        ClockParams(nbar_c=-0.5)
    with pytest.raises(ValueError):
        ClockParams(M=0)
    with pytest.raises(TruncationError):
        ClockParams(n_fock=1)


def test_temperature_round_trip():
    for omega, nbar in [(240.0, 10.0), (120.0, 1e-5), (0.9, 3.7)]:
        T = temperature_from_occupation(omega, nbar)
        assert occupation_from_temperature(omega, T) == pytest.approx(nbar, rel=1e-12)
    assert occupation_from_temperature(100.0, 0.0) == 0.0
    assert temperature_from_occupation(100.0, 0.0) == 0.0


def test_from_temperatures_consistency():
    p = ClockParams.from_temperatures(T_h=2518.0, T_c=10.0, T_f=10.0, T_m=10.0)
    assert p.nbar_h == pytest.approx(1.0 / math.expm1(240.0 / 2518.0))
    assert p.bath_temperature("c") == pytest.approx(10.0, rel=1e-12)
    with pytest.raises(ValueError):
        ClockParams.from_temperatures(T_h=1.0, T_c=1.0, T_f=1.0, T_m=1.0,
                                      nbar_h=5.0)


def test_cold_temperature_links_three_baths():
    p = ClockParams().at_cold_occupation(1e-5)
    # cavity sits at the same frequency as the cold transition here
    assert p.nbar_f == pytest.approx(p.nbar_c, rel=1e-12)
    T = p.bath_temperature("c")
    assert p.nbar_m == pytest.approx(occupation_from_temperature(0.9, T), rel=1e-12)


def test_default_dt_respects_rate_bound():
    p = ClockParams()
    dt = p.default_dt()
    assert p.max_rate() * dt <= 0.05 + 1e-12
    assert dt <= p.mech_period / 2000.0 + 1e-15


def test_ideal_regime_report_reference_point():
    checks = ideal_regime_report(ClockParams())
    failures = [c for c in checks if not c.passed]
    assert failures == []


def test_ideal_regime_report_flags_no_drive():
    checks = {c.name: c for c in ideal_regime_report(ClockParams(f=0.0, g=0.0))}
    assert not checks["drive_above_lasing_threshold"].passed
    assert not checks["comparable_couplings"].passed
