"""Quantum-jump unraveling of the clock: tick-conditioned trajectories.

Photon emissions into the cold bath are monitored with unit efficiency.
In every time step a tick fires with probability dt * Tr(J rho); the
state then collapses through the jump superoperator, otherwise it
follows the no-jump branch and is renormalized. Averaging over
realizations recovers the unconditional dynamics.

A fully quantum benchmark (mechanics included in the state) validates
the factorized engine at small-amplitude parameters by replaying the
identical jump record through both.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import StepSizeError, UnsupportedRegimeError
from .graded import tripartite_system
from .meanfield import MechState, _gauge_rhs, _lab_rotation
from .model import jump_apply, tick_rate
from .operators import OperatorSet, operator_set
from .params import ClockParams, ideal_regime_report
from .runner import (RunResult, SampleSeries, run_graded,
                     run_tripartite_engine)
from .tickstats import TickRecord

MAX_JUMP_PROB = 0.05


@dataclass(frozen=True)
class JumpEvent:
    time: float
    kind: str = "tick"


@dataclass
class Trajectory:
    """One seeded realization of the conditional dynamics."""
    params: ClockParams
    seed: int
    dt: float
    samples: SampleSeries
    ticks: TickRecord
    averages: object
    tail_max: float
    n_fock_used: int

    @classmethod
    def from_run(cls, run: RunResult) -> "Trajectory":
        meta = {"seed": run.seed, "dt": run.dt, "engine": run.engine,
                "M": run.params.M, "Omega_m": run.params.Omega_m}
        return cls(params=run.params, seed=run.seed, dt=run.dt,
                   samples=run.samples,
                   ticks=TickRecord(run.ticks, origin="raw", meta=meta),
                   averages=run.averages, tail_max=run.tail_max,
                   n_fock_used=run.n_fock_used)


def jump_probability(state: np.ndarray, dt: float, params: ClockParams,
                     ops: OperatorSet | None = None) -> float:
    """Probability of a tick during dt; raises if the step is too coarse."""
    p = dt * tick_rate(params, state, ops)
    if p >= MAX_JUMP_PROB:
        raise StepSizeError(
            f"jump probability {p:.3g} >= {MAX_JUMP_PROB}; reduce dt")
    return p


def step_conditional(state: np.ndarray, mech: MechState, dt: float,
                     rng: np.random.Generator, params: ClockParams,
                     ops: OperatorSet | None = None
                     ) -> tuple[np.ndarray, MechState, int]:
    """Dense reference step of the tick-conditioned dynamics.

    With probability dt * Tr(J rho) the state is replaced by the
    normalized jump output; otherwise it follows the no-jump branch
    (generator minus the monitored sandwich, trace-compensated) and is
    renormalized exactly. Quadrature means advance alongside.
    """
    ops = ops or operator_set(params.M, params.n_fock)
    p_jump = jump_probability(state, dt, params, ops)
    if rng.random() < p_jump:
        jumped = jump_apply(params, state, ops)
        tr = np.trace(jumped).real
        if tr <= 0:
            raise RuntimeError("jump sampled with vanishing jump trace")
        rho = jumped / tr
        n_fix = float(np.real(np.trace(ops.n_phot @ rho)))
        x, p = mech.x, mech.p

        def deriv(xx, pp):
            return (params.Omega_m * pp - 0.5 * params.gamma_m * xx,
                    -params.Omega_m * xx - 0.5 * params.gamma_m * pp
                    + math.sqrt(2.0) * params.g * n_fix)

        k1 = deriv(x, p)
        k2 = deriv(x + 0.5 * dt * k1[0], p + 0.5 * dt * k1[1])
        k3 = deriv(x + 0.5 * dt * k2[0], p + 0.5 * dt * k2[1])
        k4 = deriv(x + dt * k3[0], p + dt * k3[1])
        x += dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        p += dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        return rho, MechState(x, p), 1

    x, p, phi = mech.x, mech.p, 0.0
    rho = state.astype(complex)

    def no_jump_rhs(r, xx, pp, ph):
        drho, dx, dp, dphi = _gauge_rhs(params, ops, r, xx, pp, ph)
        drho -= jump_apply(params, r, ops)
        drho += tick_rate(params, r, ops) * r
        return drho, dx, dp, dphi

    k1 = no_jump_rhs(rho, x, p, phi)
    k2 = no_jump_rhs(rho + 0.5 * dt * k1[0], x + 0.5 * dt * k1[1],
                     p + 0.5 * dt * k1[2], phi + 0.5 * dt * k1[3])
    k3 = no_jump_rhs(rho + 0.5 * dt * k2[0], x + 0.5 * dt * k2[1],
                     p + 0.5 * dt * k2[2], phi + 0.5 * dt * k2[3])
    k4 = no_jump_rhs(rho + dt * k3[0], x + dt * k3[1],
                     p + dt * k3[2], phi + dt * k3[3])
    rho = rho + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    x += dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    p += dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    phi += dt / 6.0 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
    rho /= np.trace(rho).real

    s = _lab_rotation(params, ops, dt, phi)
    phase = np.exp(-1j * s)
    rho_lab = (phase[:, None] * rho) * phase.conj()[None, :]
    return rho_lab, MechState(x, p), 0


def run_trajectory(params: ClockParams, seed: int, n_periods: float,
                   warn_regime: bool = True, **kwargs) -> Trajectory:
    """Seeded tick-conditioned run over a number of mechanical periods."""
    if warn_regime:
        failed = [c.name for c in ideal_regime_report(params) if not c.passed]
        if failed:
            import warnings
            warnings.warn(
                "operating point misses ideal-regime checks: "
                + ", ".join(failed), stacklevel=2)
    duration = n_periods * params.mech_period
    run = run_graded(params, duration, mode=K.MODE_BERNOULLI, seed=seed,
                     engine_name="trajectory", **kwargs)
    return Trajectory.from_run(run)


def run_replay(params: ClockParams, forced_dn: np.ndarray, duration: float,
               **kwargs) -> RunResult:
    """Run the conditional engine with a prescribed per-step jump record."""
    return run_graded(params, duration, mode=K.MODE_FORCED, forced=forced_dn,
                      engine_name="trajectory-replay", **kwargs)


@dataclass
class EnsembleResult:
    """Pointwise ensemble statistics of conditional trajectories."""
    t: np.ndarray
    mean: dict
    std: dict
    n_traj: int

    def stderr(self, key: str) -> np.ndarray:
        return self.std[key] / math.sqrt(self.n_traj)


def run_ensemble(params: ClockParams, seeds, duration: float,
                 sample_dt: float, jobs: int = 1, **kwargs) -> EnsembleResult:
    """Run many seeded trajectories and average their sampled observables."""
    seeds = list(seeds)

    def one(seed):
        run = run_graded(params, duration, mode=K.MODE_BERNOULLI, seed=seed,
                         sample_dt=sample_dt, engine_name="trajectory",
                         **kwargs)
        s = run.samples
        return np.stack([s.p1, s.p2, s.p3, s.nphot, s.x, s.p]), s.t

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, seeds))
    else:
        results = [one(s) for s in seeds]
    stacks = np.stack([r[0] for r in results])
    t = results[0][1]
    names = ("p1", "p2", "p3", "nphot", "x", "p")
    mean = {k: stacks[:, i].mean(axis=0) for i, k in enumerate(names)}
    std = {k: stacks[:, i].std(axis=0, ddof=1) for i, k in enumerate(names)}
    return EnsembleResult(t=t, mean=mean, std=std, n_traj=len(seeds))


@dataclass
class BenchmarkResult:
    """Fully quantum run vs factorized replay on the same jump record."""
    params: ClockParams
    seed: int
    dt: float
    full: dict                       # sampled series of the tripartite state
    factorized: SampleSeries
    ticks: TickRecord
    rms: dict                        # per-observable RMS differences
    mech_amplitude: float
    tail_cavity: float
    tail_mech: float


def run_full_benchmark(params: ClockParams, seed: int, duration: float, *,
                       n_fock_mech: int = 24, dt: float | None = None,
                       sample_dt: float = 0.05) -> BenchmarkResult:
    """Unravel the full tripartite master equation, then replay its jump
    record through the factorized engine for a like-for-like comparison.
    """
    p = params
    if dt is None:
        dt = min(0.05 / p.max_rate(), 0.2 / (abs(p.g) * p.n_fock
                                             * math.sqrt(2 * n_fock_mech) + 1))
    sys = tripartite_system(p, n_fock_mech)
    full, dn, _ = run_tripartite_engine(sys, duration, seed, dt=dt,
                                        sample_dt=sample_dt)
    if full["tail_cavity"].max() > 1e-4 or full["tail_mech"].max() > 1e-4:
        raise UnsupportedRegimeError(
            "benchmark truncations too small for these parameters; "
            f"tails reached {full['tail_cavity'].max():.2e} (cavity), "
            f"{full['tail_mech'].max():.2e} (mechanics)")

    n_steps = dn.size
    fact = run_graded(p, n_steps * dt, mode=K.MODE_FORCED, forced=dn, dt=dt,
                      sample_dt=sample_dt, engine_name="benchmark-replay",
                      transient=0.0)
    s = fact.samples
    # align grids (factorized sampling includes t=0)
    t = full["t"]
    interp = {k: np.interp(t, s.t, getattr(s, k))
              for k in ("p1", "p2", "p3", "nphot", "x", "p")}

    def rms(a, b):
        return float(np.sqrt(np.mean((np.asarray(a) - np.asarray(b)) ** 2)))

    amp = float(np.abs(full["x"]).max())
    rms_d = {
        "p1": rms(full["q1"], interp["p1"]),
        "p2": rms(full["q2"], interp["p2"]),
        "p3": rms(full["q3"], interp["p3"]),
        "nphot": rms(full["nphot"], interp["nphot"]),
        "x": rms(full["x"], interp["x"]),
        "p": rms(full["p"], interp["p"]),
    }
    ticks = TickRecord((np.flatnonzero(dn == 1) + 1) * dt, origin="raw",
                       meta={"seed": seed, "dt": dt, "engine": "benchmark"})
    return BenchmarkResult(
        params=p, seed=seed, dt=dt, full=full, factorized=s, ticks=ticks,
        rms=rms_d, mech_amplitude=amp,
        tail_cavity=float(full["tail_cavity"].max()),
        tail_mech=float(full["tail_mech"].max()))
