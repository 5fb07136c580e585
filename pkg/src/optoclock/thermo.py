"""Steady-state heat currents, entropy production, and the accuracy bound.

Heat currents are evaluated with the free Hamiltonian in the trace
formula; the separation between the optical frequencies and every rate
makes the coupling-energy corrections negligible. With the cavity and
mechanical baths at the cold temperature, the first law eliminates all
currents except the hot one from the entropy balance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import UnsupportedRegimeError
from .params import ClockParams
from .runner import RunAverages
from .tickstats import ClockMetrics

SQRT2 = math.sqrt(2.0)


@dataclass
class ThermoReport:
    """Thermodynamic cost summary of a clock run."""
    J_h: float
    J_c: float
    J_f: float
    J_m: float
    sigma_dot: float
    sigma_per_tick: float
    tur_ratio: float
    T_h: float
    T_c: float
    first_law_residual: float
    two_temperature_form: bool

    @property
    def tur_violated(self) -> bool:
        return self.tur_ratio > 1.0


def heat_current_hot(avg: RunAverages, params: ClockParams) -> float:
    """Heat entering the hot bath (negative while the clock runs)."""
    p = params
    return p.M * p.gamma_h * p.omega13 * (
        (p.nbar_h + 1) * avg.p3 - p.nbar_h * avg.p1)


def heat_current_cold(avg: RunAverages, params: ClockParams) -> float:
    """Heat entering the cold bath through the emitter transition."""
    p = params
    return p.M * p.gamma_c * p.omega23 * (
        (p.nbar_c + 1) * avg.p3 - p.nbar_c * avg.p2)


def heat_current_cavity(avg: RunAverages, params: ClockParams) -> float:
    """Heat entering the cavity bath via photon leakage."""
    p = params
    return p.kappa * p.Omega_f * (avg.nphot - p.nbar_f)


def heat_current_mech(avg: RunAverages, params: ClockParams) -> float:
    """Radiation-pressure contribution, from the cycle-averaged product
    of the photon number and the momentum mean. Small by construction:
    one phonon of energy per tick against an optical quantum."""
    return -SQRT2 * params.g * avg.nphot_p


def first_law_residual(avg: RunAverages, params: ClockParams
                       ) -> tuple[float, dict]:
    """|J_f + J_h + J_c| over the largest current magnitude."""
    currents = {
        "J_h": heat_current_hot(avg, params),
        "J_c": heat_current_cold(avg, params),
        "J_f": heat_current_cavity(avg, params),
        "J_m": heat_current_mech(avg, params),
    }
    total = currents["J_h"] + currents["J_c"] + currents["J_f"]
    scale = max(abs(v) for v in currents.values())
    return abs(total) / max(scale, 1e-300), currents


def entropy_production(J_h: float, T_h: float, T_c: float) -> float:
    """Two-temperature entropy production rate J_h (1/T_h - 1/T_c) >= 0."""
    if not (T_h > T_c > 0):
        raise UnsupportedRegimeError(
            "two-temperature form needs T_h > T_c > 0")
    sigma = J_h * (1.0 / T_h - 1.0 / T_c)
    if sigma < -1e-9 * max(abs(J_h) / T_c, 1e-300):
        raise ValueError(f"negative entropy production {sigma:g}")
    return sigma


def entropy_production_four_bath(currents: dict, temps: dict) -> float:
    """General form sum_a J_a / T_a; used when the cold baths differ."""
    sigma = 0.0
    for key, J in currents.items():
        bath = key.split("_")[1]
        T = temps[bath]
        if T <= 0:
            raise UnsupportedRegimeError(
                f"bath {bath} at zero temperature with nonzero current")
        sigma += J / T
    return sigma


def tur_ratio(metrics: ClockMetrics, sigma_dot: float) -> float:
    """2 N / (<tau> Sigma): above one violates the classical clock bound."""
    if sigma_dot <= 0:
        raise ValueError("entropy production must be positive")
    return 2.0 * metrics.accuracy / (metrics.mean_wait * sigma_dot)


def _cold_temperatures_equal(params: ClockParams, rtol: float = 1e-6) -> bool:
    temps = [params.bath_temperature(b) for b in ("c", "f", "m")]
    # baths with zero occupation have T = 0; treat all-zero as equal
    ref = temps[0]
    return all(abs(t - ref) <= rtol * max(abs(ref), 1e-300) for t in temps)


def thermo_report(avg: RunAverages, metrics: ClockMetrics,
                  params: ClockParams) -> ThermoReport:
    """Assemble heat currents, entropy production, and the bound ratio.

    Uses the two-temperature reduction when the cold, cavity, and
    mechanical baths share a temperature; otherwise falls back to the
    four-bath sum and flags the report as the general (approximate) form.
    """
    residual, currents = first_law_residual(avg, params)
    T_h = params.bath_temperature("h")
    T_c = params.bath_temperature("c")
    two_temp = _cold_temperatures_equal(params)
    if two_temp:
        sigma = entropy_production(currents["J_h"], T_h, T_c)
    else:
        temps = {b: params.bath_temperature(b) for b in ("h", "c", "f", "m")}
        sigma = entropy_production_four_bath(currents, temps)
    return ThermoReport(
        J_h=currents["J_h"], J_c=currents["J_c"], J_f=currents["J_f"],
        J_m=currents["J_m"],
        sigma_dot=sigma,
        sigma_per_tick=sigma * metrics.mean_wait,
        tur_ratio=tur_ratio(metrics, sigma),
        T_h=T_h, T_c=T_c,
        first_law_residual=residual,
        two_temperature_form=two_temp)
