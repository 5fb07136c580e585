"""High-level experiment orchestration shared by the command line and tests.

Each experiment point produces a directory of artifacts: sampled
trajectory CSV, raw/filtered tick files, a flat metrics JSON, histogram
and Allan/covariance CSVs, and a manifest from which every number can be
recomputed.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, io as oio
from .config import ExperimentConfig, config_to_text
from .errors import FixedPointReachedError, NotConvergedError
from .meanfield import find_limit_cycle, run_unconditional
from .params import ClockParams
from .runner import RunResult
from .tickstats import (FilterConfig, TickRecord, compute_metrics,
                        filter_ticks)
from .thermo import thermo_report
from .trajectories import run_full_benchmark, run_trajectory
from .collective import run_collective


def analyze_record(raw: TickRecord, params: ClockParams, fcfg: FilterConfig,
                   averages=None) -> dict:
    """Tick statistics (raw and filtered) plus thermodynamics if available.

    Returns a dict with 'metrics' (flat scalars), and the metric objects
    under 'raw', 'filtered', 'thermo' for further analysis.
    """
    out: dict = {"raw": None, "filtered": None, "thermo": None}
    flat: dict = {"n_ticks_raw": len(raw)}
    Tm = params.mech_period if params.Omega_m > 0 else None
    if len(raw) >= 3:
        m_raw = compute_metrics(raw, mech_period=Tm)
        out["raw"] = m_raw
        flat.update(accuracy_raw=m_raw.accuracy, resolution_raw=m_raw.resolution,
                    mean_wait_raw=m_raw.mean_wait, var_wait_raw=m_raw.var_wait)
        filt = filter_ticks(raw, fcfg)
        flat["n_ticks_filtered"] = len(filt)
        if len(filt) >= 3:
            m_f = compute_metrics(filt, mech_period=Tm)
            out["filtered"] = m_f
            out["filtered_record"] = filt
            flat.update(accuracy_filtered=m_f.accuracy,
                        resolution_filtered=m_f.resolution,
                        mean_wait_filtered=m_f.mean_wait,
                        var_wait_filtered=m_f.var_wait)
            if averages is not None:
                rep = thermo_report(averages, m_f, params)
                out["thermo"] = rep
                flat.update(J_h=rep.J_h, J_c=rep.J_c, J_f=rep.J_f, J_m=rep.J_m,
                            entropy_rate=rep.sigma_dot,
                            entropy_per_tick=rep.sigma_per_tick,
                            tur_ratio=rep.tur_ratio,
                            first_law_residual=rep.first_law_residual,
                            T_h=rep.T_h, T_c=rep.T_c)
    if averages is not None:
        flat.update(avg_p1=averages.p1, avg_p2=averages.p2, avg_p3=averages.p3,
                    avg_nphot=averages.nphot, avg_x=averages.x,
                    avg_p=averages.p, avg_x_sq=averages.x_sq,
                    avg_p_sq=averages.p_sq, avg_nphot_p=averages.nphot_p)
    out["metrics"] = flat
    return out


def _provenance(cfg: ExperimentConfig, params: ClockParams, seed, dt,
                extra=None) -> dict:
    prov = {"code_version": __version__, "engine": cfg.engine,
            "dt": repr(dt), "n_fock": params.n_fock,
            "seed": seed if seed is not None else "none"}
    if extra:
        prov.update(extra)
    return prov


def run_point(cfg: ExperimentConfig, params: ClockParams, out_dir: Path,
              seed: int) -> dict:
    """Execute one (parameter point, seed) job and write its artifacts."""
    out_dir.mkdir(parents=True, exist_ok=True)
    fcfg = cfg.filter_config(M=params.M)
    Tm = params.mech_period
    tag = f"s{seed}"

    if cfg.engine == "meanfield":
        run = run_unconditional(params, cfg.periods * Tm, dt=cfg.dt,
                                sample_dt=cfg.sample_dt or Tm / 400,
                                transient=cfg.transient_periods * Tm)
        flat = {"t_final": run.t_final, "tail_max": run.tail_max,
                "avg_p1": run.averages.p1, "avg_p2": run.averages.p2,
                "avg_p3": run.averages.p3, "avg_nphot": run.averages.nphot,
                "sigma_z_avg": run.averages.p2 - run.averages.p1}
        try:
            cyc = find_limit_cycle(params, run=run,
                                   t_transient=cfg.transient_periods * Tm,
                                   t_observe=(cfg.periods
                                              - cfg.transient_periods) * Tm)
            flat.update(period=cyc.period, amplitude_pos=cyc.amplitude_pos,
                        amplitude_neg=cyc.amplitude_neg,
                        peaks_per_period=cyc.n_peaks_per_period,
                        period_spread=cyc.period_spread,
                        closure_gap=cyc.closure_gap,
                        regime="self_oscillating")
        except (NotConvergedError, FixedPointReachedError) as exc:
            flat["regime"] = type(exc).__name__
        oio.write_trajectory_csv(out_dir / "trajectory.csv", run.samples)
        oio.write_metrics_json(out_dir / "metrics.json", flat)
        oio.write_manifest(out_dir / "manifest.cfg", config_to_text(cfg),
                           _provenance(cfg, params, None, run.dt))
        return flat

    if cfg.engine == "full_benchmark":
        res = run_full_benchmark(params, seed,
                                 cfg.benchmark_periods * Tm,
                                 n_fock_mech=cfg.n_fock_mech, dt=cfg.dt,
                                 sample_dt=cfg.sample_dt or 0.05)
        flat = {f"rms_{k}": v for k, v in res.rms.items()}
        flat.update(mech_amplitude=res.mech_amplitude,
                    tail_cavity=res.tail_cavity, tail_mech=res.tail_mech,
                    n_ticks=len(res.ticks))
        full = res.full
        full_series = oio.SampleSeries(
            t=full["t"], x=full["x"], p=full["p"], p1=full["q1"],
            p2=full["q2"], p3=full["q3"], nphot=full["nphot"])
        oio.write_trajectory_csv(out_dir / f"full_{tag}.csv", full_series)
        oio.write_trajectory_csv(out_dir / f"factorized_{tag}.csv",
                                 res.factorized)
        oio.write_ticks(out_dir / f"ticks_raw_{tag}.txt", res.ticks)
        oio.write_metrics_json(out_dir / f"metrics_{tag}.json", flat)
        oio.write_manifest(out_dir / "manifest.cfg", config_to_text(cfg),
                           _provenance(cfg, params, seed, res.dt,
                                       {"n_fock_mech": cfg.n_fock_mech}))
        return flat

    if cfg.engine == "trajectory":
        traj = run_trajectory(params, seed, cfg.periods, dt=cfg.dt,
                              sample_dt=cfg.sample_dt or 0.02,
                              warn_regime=False)
        run_dt, samples, averages = traj.dt, traj.samples, traj.averages
        ticks_all = traj.ticks
        extra = {"tail_max": traj.tail_max, "n_fock_used": traj.n_fock_used}
    else:  # collective
        run: RunResult = run_collective(params, cfg.periods * Tm, seed=seed,
                                        dt=cfg.dt,
                                        sample_dt=cfg.sample_dt or 0.02)
        run_dt, samples, averages = run.dt, run.samples, run.averages
        ticks_all = TickRecord(run.ticks, origin="raw",
                               meta={"seed": seed, "M": params.M,
                                     "Omega_m": params.Omega_m})
        extra = {"repairs": run.repairs}

    raw = ticks_all.after(cfg.transient_periods * Tm)
    analysis = analyze_record(raw, params, fcfg, averages)
    flat = analysis["metrics"]
    flat.update(extra)
    flat["seed"] = seed

    oio.write_trajectory_csv(out_dir / f"trajectory_{tag}.csv", samples)
    oio.write_ticks(out_dir / f"ticks_raw_{tag}.txt", raw)
    if analysis.get("filtered_record") is not None:
        oio.write_ticks(out_dir / f"ticks_filtered_{tag}.txt",
                        analysis["filtered_record"])
    if analysis["raw"] is not None:
        oio.write_histogram_csv(out_dir / f"histogram_raw_{tag}.csv",
                                analysis["raw"].histogram)
        oio.write_covariance_csv(out_dir / f"covariance_raw_{tag}.csv",
                                 analysis["raw"].cov_k, analysis["raw"].cov)
    if analysis["filtered"] is not None:
        m_f = analysis["filtered"]
        oio.write_histogram_csv(out_dir / f"histogram_filtered_{tag}.csv",
                                m_f.histogram)
        oio.write_allan_csv(out_dir / f"allan_filtered_{tag}.csv",
                            m_f.allan_m, m_f.allan, m_f.allan_asymptote)
        oio.write_covariance_csv(out_dir / f"covariance_filtered_{tag}.csv",
                                 m_f.cov_k, m_f.cov)
    oio.write_metrics_json(out_dir / f"metrics_{tag}.json", flat)
    oio.write_manifest(out_dir / "manifest.cfg", config_to_text(cfg),
                       _provenance(cfg, params, seed, run_dt))
    return flat


def run_experiment(cfg: ExperimentConfig, out_dir: Path, jobs: int = 1
                   ) -> list[dict]:
    """Run all sweep points and seeds of a configuration."""
    out_dir = Path(out_dir)
    points: list[tuple[ClockParams, Path, int]] = []
    if cfg.sweep is None:
        for seed in cfg.seeds:
            points.append((cfg.params, out_dir, seed))
    else:
        name, values = cfg.sweep
        for value in values:
            sub = out_dir / f"{name}={value:g}"
            params = cfg.apply_sweep_value(value)
            for seed in cfg.seeds:
                points.append((params, sub, seed))

    def job(args):
        params, directory, seed = args
        return run_point(cfg, params, directory, seed)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(job, points))
    return [job(a) for a in points]
