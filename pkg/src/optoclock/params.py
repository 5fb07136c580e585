"""Model parameters for the autonomous optomechanical clock.

All frequencies and rates are expressed in units of the hot-bath rate
gamma_h, with hbar = k_B = 1. Bath temperatures and occupations are
interchangeable through the Bose-Einstein relation; occupations are the
canonical storage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterator

from .errors import TruncationError

# bath label -> (occupation attribute, frequency attribute)
BATHS = {
    "h": ("nbar_h", "omega13"),
    "c": ("nbar_c", "omega23"),
    "f": ("nbar_f", "Omega_f"),
    "m": ("nbar_m", "Omega_m"),
}


def occupation_from_temperature(omega: float, T: float) -> float:
    """Bose-Einstein occupation of a mode of frequency omega at temperature T."""
    if T < 0:
        raise ValueError("temperature must be non-negative")
    if T == 0.0:
        return 0.0
    return 1.0 / math.expm1(omega / T)


def temperature_from_occupation(omega: float, nbar: float) -> float:
    """Inverse of :func:`occupation_from_temperature`; nbar = 0 maps to T = 0."""
    if nbar < 0:
        raise ValueError("occupation must be non-negative")
    if nbar == 0.0:
        return 0.0
    return omega / math.log1p(1.0 / nbar)


@dataclass(frozen=True)
class ClockParams:
    """Physical parameters of the emitter-cavity-mechanics clock.

    Defaults are the reference operating point used throughout the demos
    and recipes: a resonant cavity, strong single-photon optomechanical
    coupling, a cold bath near zero occupation, and a fast cold decay.

    Attributes
    ----------
    omega13, omega23 : emitter 1..3 and 2..3 transition frequencies
    Omega_f, Omega_m : cavity and mechanical frequencies
    f : emitter-cavity coupling
    g : single-photon optomechanical coupling
    kappa, gamma_h, gamma_c, gamma_m : bath coupling rates
    nbar_h, nbar_c, nbar_f, nbar_m : thermal bath occupations
    M : number of identical emitters in the cavity
    n_fock : cavity Fock-space truncation (number of retained levels)
    """

    omega13: float = 240.0
    omega23: float = 120.0
    Omega_f: float = 120.0
    Omega_m: float = 0.9
    f: float = 20.0
    g: float = 30.0
    kappa: float = 10.0
    gamma_h: float = 1.0
    gamma_c: float = 100.0
    gamma_m: float = 0.01
    nbar_h: float = 10.0
    nbar_c: float = 0.0
    nbar_f: float = 0.0
    nbar_m: float = 0.0
    M: int = 1
    n_fock: int = 15

    def __post_init__(self) -> None:
        if not (self.omega13 > self.omega23 > 0):
            raise ValueError("require omega13 > omega23 > 0")
        if self.Omega_f <= 0:
            raise ValueError("require Omega_f > 0")
        if self.Omega_m < 0 or self.gamma_m < 0:
            raise ValueError("mechanical frequency and damping must be >= 0")
        for name in ("kappa", "gamma_h", "gamma_c",
                     "nbar_h", "nbar_c", "nbar_f", "nbar_m"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.M < 1 or int(self.M) != self.M:
            raise ValueError("M must be a positive integer")
        if self.n_fock < 2:
            raise TruncationError("n_fock < 2 cannot represent cavity dynamics")

    # -- derived quantities -------------------------------------------------

    @property
    def eps2(self) -> float:
        """Energy of level 2 in the gauge eps1 = 0."""
        return self.omega13 - self.omega23

    @property
    def eps3(self) -> float:
        """Energy of level 3 in the gauge eps1 = 0."""
        return self.omega13

    @property
    def Delta(self) -> float:
        """Detuning between the 1..2 transition and the cavity."""
        return self.omega13 - self.omega23 - self.Omega_f

    @property
    def omega12(self) -> float:
        return self.omega13 - self.omega23

    @property
    def mech_period(self) -> float:
        if self.Omega_m == 0:
            raise ValueError("mechanical period undefined for Omega_m = 0")
        return 2.0 * math.pi / self.Omega_m

    @property
    def dim(self) -> int:
        """Hilbert-space dimension of the emitter(s) x cavity space."""
        return 3 ** self.M * self.n_fock

    def bath_occupation(self, bath: str) -> float:
        occ_attr, _ = BATHS[bath]
        return getattr(self, occ_attr)

    def bath_frequency(self, bath: str) -> float:
        _, freq_attr = BATHS[bath]
        return getattr(self, freq_attr)

    def bath_temperature(self, bath: str) -> float:
        """Temperature consistent with the stored occupation of a bath."""
        return temperature_from_occupation(
            self.bath_frequency(bath), self.bath_occupation(bath))

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_temperatures(cls, T_h: float, T_c: float, T_f: float,
                          T_m: float, **kwargs) -> "ClockParams":
        """Build parameters with occupations derived from bath temperatures."""
        for key in ("nbar_h", "nbar_c", "nbar_f", "nbar_m"):
            if key in kwargs:
                raise ValueError(
                    f"{key} conflicts with temperature input; give one or the other")
        base = cls(**kwargs)
        return replace(
            base,
            nbar_h=occupation_from_temperature(base.omega13, T_h),
            nbar_c=occupation_from_temperature(base.omega23, T_c),
            nbar_f=occupation_from_temperature(base.Omega_f, T_f),
            nbar_m=occupation_from_temperature(base.Omega_m, T_m),
        )

    def at_cold_temperature(self, T_c: float) -> "ClockParams":
        """Set the cold, cavity, and mechanical baths to a common temperature."""
        return replace(
            self,
            nbar_c=occupation_from_temperature(self.omega23, T_c),
            nbar_f=occupation_from_temperature(self.Omega_f, T_c),
            nbar_m=occupation_from_temperature(self.Omega_m, T_c),
        )

    def at_cold_occupation(self, nbar_c: float) -> "ClockParams":
        """Like :meth:`at_cold_temperature`, parameterized by the cold occupation."""
        return self.at_cold_temperature(
            temperature_from_occupation(self.omega23, nbar_c))

    @classmethod
    def benchmark_scale(cls, **kwargs) -> "ClockParams":
        """Weak-coupling operating point with small mechanical amplitude.

        Amplitudes stay a few phonons, which keeps a fully quantum simulation
        of the mechanics tractable; used to validate the factorized engine.
        """
        defaults = dict(Omega_m=1.0, gamma_c=50.0, kappa=3.4,
                        f=2.4, g=2.6, nbar_h=10.0, n_fock=10)
        defaults.update(kwargs)
        return cls(**defaults)

    def replaced(self, **kwargs) -> "ClockParams":
        return replace(self, **kwargs)

    # -- numerical defaults ---------------------------------------------------

    def max_rate(self) -> float:
        """Largest Lindblad rate entering the master equation."""
        return max(
            self.kappa * (self.nbar_f + 1), self.kappa * self.nbar_f,
            self.gamma_h * (self.nbar_h + 1), self.gamma_h * self.nbar_h,
            self.gamma_c * (self.nbar_c + 1), self.gamma_c * self.nbar_c,
            self.gamma_m,
        )

    def default_dt(self, rate_safety: float = 0.05) -> float:
        """Fixed integration step honoring the rate bound rate*dt < rate_safety.

        Also capped by a fraction of the mechanical period and by a crude
        stability bound on the coherent part of the generator.
        """
        dt = rate_safety / self.max_rate()
        if self.Omega_m > 0:
            dt = min(dt, self.mech_period / 2000.0)
        coherent_scale = (4.0 * self.f * math.sqrt(self.n_fock) * self.M
                          + 2.0 * self.kappa * (self.nbar_f + 1) * self.n_fock
                          + 2.0 * self.gamma_c * (self.nbar_c + 1)
                          + 2.0 * self.gamma_h * (2 * self.nbar_h + 1))
        if coherent_scale > 0:
            dt = min(dt, 2.0 / coherent_scale)
        return dt


@dataclass(frozen=True)
class RegimeCheck:
    name: str
    passed: bool
    detail: str


def ideal_regime_report(p: ClockParams) -> list[RegimeCheck]:
    """Evaluate the operating-regime checklist for clean clock operation.

    Each entry is a heuristic inequality; failures indicate degraded or
    stationary operation, not invalid input.
    """
    checks: list[RegimeCheck] = []

    def add(name: str, ok: bool, detail: str) -> None:
        checks.append(RegimeCheck(name, bool(ok), detail))

    add("resonant_cavity", abs(p.Delta) <= 1e-9 * p.omega13,
        f"Delta = {p.Delta:g}")
    ratio = p.g / p.f if p.f > 0 else math.inf
    add("comparable_couplings", p.f > 0 and 0.5 <= ratio <= 2.0,
        f"g/f = {ratio:g}")
    add("strong_couplings", min(p.f, p.g) >= p.kappa,
        f"min(f, g) = {min(p.f, p.g):g} vs kappa = {p.kappa:g}")
    add("cold_bath_near_zero", p.nbar_c <= 1e-2,
        f"nbar_c = {p.nbar_c:g}")
    add("fast_cold_decay", p.gamma_c >= 10 * p.gamma_h,
        f"gamma_c/gamma_h = {p.gamma_c / p.gamma_h:g}")
    reset = min(p.gamma_h, p.gamma_c, p.kappa)
    add("reset_before_next_tick", reset > p.Omega_m / math.pi,
        f"min rate {reset:g} vs Omega_m/pi = {p.Omega_m / math.pi:g}")
    emit = 4 * p.g ** 2 / (p.kappa + p.gamma_c * p.nbar_c + p.gamma_h * p.nbar_h)
    add("photon_emitted_within_resonance", emit >= 10 * p.Omega_m,
        f"4g^2/(kappa+gamma_c*nbar_c+gamma_h*nbar_h) = {emit:g}")
    min_freq = min(p.omega13, p.omega23, p.omega12, p.Omega_f)
    max_rate = max(p.Omega_m, p.kappa, p.gamma_c, p.gamma_h, p.f, p.g)
    add("frequencies_dominate_rates", min_freq >= max_rate,
        f"min frequency {min_freq:g} vs max rate/coupling {max_rate:g}")
    add("underdamped_mechanics", p.Omega_m >= 10 * p.gamma_m,
        f"Omega_m/gamma_m = {p.Omega_m / p.gamma_m if p.gamma_m else math.inf:g}")

    above = False
    detail = "threshold undefined (no inversion or detuned)"
    if p.nbar_h > p.nbar_c and abs(p.Delta) <= 1e-9 * p.omega13:
        fth = 0.5 * math.sqrt(
            (p.nbar_h - p.nbar_c) * p.gamma_h * p.gamma_c
            * (p.kappa + p.gamma_h * p.nbar_h + p.gamma_c * p.nbar_c)
            / (p.gamma_c * (p.nbar_c + 1) + p.gamma_h * (p.nbar_h + 1)))
        above = p.f > fth
        detail = f"f = {p.f:g} vs threshold {fth:g}"
    add("drive_above_lasing_threshold", above, detail)
    return checks
