"""Experiment configuration: flat INI-style files with sections.

Every quantity is in units of gamma_h. Bath occupations and temperatures
are both accepted, but never for the same bath; the key
`cold_temperature` sets the cold, cavity, and mechanical baths together.
"""

from __future__ import annotations

import configparser
import io as _io
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .params import ClockParams, ideal_regime_report
from .tickstats import FilterConfig, default_threshold

ENGINES = ("meanfield", "trajectory", "collective", "full_benchmark")

_PARAM_FIELDS = ("omega13", "omega23", "Omega_f", "Omega_m", "f", "g",
                 "kappa", "gamma_h", "gamma_c", "gamma_m",
                 "nbar_h", "nbar_c", "nbar_f", "nbar_m")
_TEMP_KEYS = {"T_h": "h", "T_c": "c", "T_f": "f", "T_m": "m"}

SWEEPABLE = set(_PARAM_FIELDS) | {"M", "n_fock", "cold_temperature",
                                  "nbar_c_linked"}


@dataclass
class ExperimentConfig:
    params: ClockParams
    engine: str = "trajectory"
    seeds: list[int] = field(default_factory=lambda: [1])
    periods: float = 100.0
    transient_periods: float = 20.0
    dt: float | None = None
    sample_dt: float | None = None
    n_fock_mech: int = 48
    benchmark_periods: float = 1.5
    filter: FilterConfig | None = None
    sweep: tuple[str, list[float]] | None = None
    output_dir: Path | None = None
    source_text: str = ""

    def filter_config(self, M: int | None = None) -> FilterConfig:
        if self.filter is not None:
            return self.filter
        M = M if M is not None else self.params.M
        return FilterConfig(gamma=self.params.Omega_m,
                            i_star=default_threshold(M), m_sum=M)

    def apply_sweep_value(self, value: float) -> ClockParams:
        assert self.sweep is not None
        name = self.sweep[0]
        if name == "cold_temperature":
            return self.params.at_cold_temperature(value)
        if name == "nbar_c_linked":
            return self.params.at_cold_occupation(value)
        if name in ("M", "n_fock"):
            return self.params.replaced(**{name: int(value)})
        return self.params.replaced(**{name: value})


def _parse_floats(text: str) -> list[float]:
    return [float(v) for v in text.replace(",", " ").split()]


def _parse_ints(text: str) -> list[int]:
    return [int(v) for v in text.replace(",", " ").split()]


def load_config_text(text: str, source: str = "<string>") -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    kwargs = {}
    temp_inputs = {}
    cold_temperature = None
    if cp.has_section("params"):
        for key, raw in cp.items("params"):
            if key in _PARAM_FIELDS:
                kwargs[key] = float(raw)
            elif key in ("M", "n_fock"):
                kwargs[key] = int(raw)
            elif key in _TEMP_KEYS:
                temp_inputs[_TEMP_KEYS[key]] = float(raw)
            elif key == "cold_temperature":
                cold_temperature = float(raw)
            else:
                raise ConfigError(f"{source}: unknown [params] key '{key}'")

    for bath, temp in temp_inputs.items():
        occ_key = f"nbar_{bath}"
        if occ_key in kwargs:
            raise ConfigError(
                f"{source}: both {occ_key} and a temperature given for "
                f"bath '{bath}'")
    if cold_temperature is not None:
        for key in ("nbar_c", "nbar_f", "nbar_m"):
            if key in kwargs:
                raise ConfigError(
                    f"{source}: cold_temperature conflicts with {key}")
        if any(b in temp_inputs for b in ("c", "f", "m")):
            raise ConfigError(
                f"{source}: cold_temperature conflicts with per-bath "
                "temperatures")

    try:
        params = ClockParams(**kwargs)
        from .params import occupation_from_temperature
        updates = {}
        for bath, temp in temp_inputs.items():
            updates[f"nbar_{bath}"] = occupation_from_temperature(
                params.bath_frequency(bath), temp)
        if updates:
            params = params.replaced(**updates)
        if cold_temperature is not None:
            params = params.at_cold_temperature(cold_temperature)
    except (ValueError, Exception) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{source}: invalid parameters: {exc}") from exc

    cfg = ExperimentConfig(params=params, source_text=text)

    if cp.has_section("run"):
        run = cp["run"]
        cfg.engine = run.get("engine", cfg.engine).strip()
        if cfg.engine not in ENGINES:
            raise ConfigError(
                f"{source}: engine must be one of {ENGINES}, got "
                f"'{cfg.engine}'")
        if "seeds" in run:
            cfg.seeds = _parse_ints(run["seeds"])
        if "periods" in run:
            cfg.periods = float(run["periods"])
        if "transient_periods" in run:
            cfg.transient_periods = float(run["transient_periods"])
        if "dt" in run:
            cfg.dt = float(run["dt"])
        if "sample_dt" in run:
            cfg.sample_dt = float(run["sample_dt"])
        if "n_fock_mech" in run:
            cfg.n_fock_mech = int(run["n_fock_mech"])
        if "benchmark_periods" in run:
            cfg.benchmark_periods = float(run["benchmark_periods"])
        if "out" in run:
            cfg.output_dir = Path(run["out"])
        known = {"engine", "seeds", "periods", "transient_periods", "dt",
                 "sample_dt", "n_fock_mech", "benchmark_periods", "out"}
        for key in run:
            if key not in known:
                raise ConfigError(f"{source}: unknown [run] key '{key}'")

    if cp.has_section("filter"):
        f = cp["filter"]
        cfg.filter = FilterConfig(
            gamma=float(f.get("gamma", params.Omega_m)),
            i_star=float(f.get("i_star", default_threshold(params.M))),
            m_sum=int(f.get("m_sum", params.M)))

    if cp.has_section("sweep"):
        s = cp["sweep"]
        name = s.get("parameter", "").strip()
        if name not in SWEEPABLE:
            raise ConfigError(
                f"{source}: sweep parameter '{name}' not supported; "
                f"choose from {sorted(SWEEPABLE)}")
        cfg.sweep = (name, _parse_floats(s.get("values", "")))
        if not cfg.sweep[1]:
            raise ConfigError(f"{source}: sweep values list is empty")

    return cfg


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    return load_config_text(text, source=str(path))


@dataclass(frozen=True)
class Diagnostic:
    level: str          # "error" | "warning" | "info"
    message: str


def validate_config(cfg: ExperimentConfig) -> list[Diagnostic]:
    """Schema and physics checks; never raises, returns findings."""
    out: list[Diagnostic] = []
    p = cfg.params

    dt = cfg.dt if cfg.dt is not None else p.default_dt()
    rate_dt = p.max_rate() * dt
    if rate_dt >= 0.05:
        out.append(Diagnostic(
            "error", f"stiffest rate times dt = {rate_dt:.3g} >= 0.05; "
            f"reduce dt below {0.05 / p.max_rate():.2e}"))
    else:
        out.append(Diagnostic(
            "info", f"step bound satisfied: max rate * dt = {rate_dt:.3g}"))

    checks = ideal_regime_report(p)
    for c in checks:
        level = "info" if c.passed else "warning"
        status = "ok" if c.passed else "MISSED"
        out.append(Diagnostic(level, f"regime {c.name}: {status} ({c.detail})"))
    if not any(c.name == "drive_above_lasing_threshold" and c.passed
               for c in checks):
        out.append(Diagnostic(
            "warning", "stationary regime expected: drive below the lasing "
            "threshold or inversion impossible"))

    fcfg = cfg.filter_config()
    if fcfg.gamma > 0 and p.Omega_m > 0:
        dead = math.log(1.0 / fcfg.i_star * fcfg.m_sum) / fcfg.gamma
        if dead > p.mech_period:
            out.append(Diagnostic(
                "warning", f"detector dead time {dead:.2f} exceeds a "
                "mechanical period; filtered ticks will undercount"))

    if cfg.engine == "full_benchmark":
        if p.M != 1:
            out.append(Diagnostic(
                "error", "full_benchmark supports a single emitter"))
        subspace = (2 * cfg.n_fock_mech) ** 2 \
            + (p.n_fock - 1) * (3 * cfg.n_fock_mech) ** 2 \
            + cfg.n_fock_mech ** 2
        if subspace > 250_000:
            out.append(Diagnostic(
                "error", f"benchmark subspace size {subspace} exceeds the "
                "cap; this engine exists for small-amplitude parameters"))
    if cfg.engine in ("trajectory",) and p.M > 2:
        out.append(Diagnostic(
            "error", "exact density-matrix engine supports M <= 2; use the "
            "collective engine"))
    return out


def config_to_text(cfg: ExperimentConfig) -> str:
    """Canonical config rendering (used for manifests)."""
    cp = configparser.ConfigParser()
    p = cfg.params
    cp["params"] = {k: repr(getattr(p, k)) for k in _PARAM_FIELDS}
    cp["params"]["M"] = str(p.M)
    cp["params"]["n_fock"] = str(p.n_fock)
    run = {"engine": cfg.engine,
           "seeds": ", ".join(str(s) for s in cfg.seeds),
           "periods": repr(cfg.periods),
           "transient_periods": repr(cfg.transient_periods)}
    if cfg.dt is not None:
        run["dt"] = repr(cfg.dt)
    if cfg.sample_dt is not None:
        run["sample_dt"] = repr(cfg.sample_dt)
    if cfg.engine == "full_benchmark":
        run["n_fock_mech"] = str(cfg.n_fock_mech)
        run["benchmark_periods"] = repr(cfg.benchmark_periods)
    cp["run"] = run
    fcfg = cfg.filter_config()
    cp["filter"] = {"gamma": repr(fcfg.gamma), "i_star": repr(fcfg.i_star),
                    "m_sum": str(fcfg.m_sum)}
    if cfg.sweep is not None:
        cp["sweep"] = {"parameter": cfg.sweep[0],
                       "values": ", ".join(repr(v) for v in cfg.sweep[1])}
    buf = _io.StringIO()
    cp.write(buf)
    return buf.getvalue()
