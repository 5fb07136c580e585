"""Chunked host-side execution of the compiled engines.

Responsibilities: buffer allocation, counter-based random numbers (one
Philox stream per trajectory seed), transient/averaging-window
bookkeeping, truncation auto-raise, and translation of kernel status
codes into exceptions. Engine modules wrap these runners with their
public result types.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels as K
from .errors import BlowUpError, StepSizeError, TruncationWarning
from .graded import MeanFieldSystem, TripartiteSystem, meanfield_system
from .params import ClockParams

SQRT2 = math.sqrt(2.0)
CHUNK_STEPS = 1_000_000
MAX_JUMP_PROB = 0.05
DEFAULT_BLOWUP_GUARD = 1e4
DEFAULT_TAIL_TOL = 1e-6
MAX_TRUNCATION_RAISES = 2


@dataclass
class SampleSeries:
    """Uniformly sampled observables along a run."""
    t: np.ndarray
    x: np.ndarray
    p: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    p3: np.ndarray
    nphot: np.ndarray

    def __len__(self) -> int:
        return self.t.size


@dataclass
class RunAverages:
    """Time averages over the configured window (post-transient periods)."""
    p1: float
    p2: float
    p3: float
    nphot: float
    x: float
    p: float
    x_sq: float
    p_sq: float
    nphot_p: float          # average of the product <n>(t) * <p>(t)
    duration: float


@dataclass
class RunResult:
    params: ClockParams
    engine: str
    dt: float
    t_final: float
    samples: SampleSeries
    ticks: np.ndarray
    averages: RunAverages | None
    seed: int | None = None
    tail_max: float = 0.0
    n_fock_used: int = 0
    repairs: int = 0
    mech_final: tuple[float, float] = (0.0, 0.0)


def _resolve_steps(params: ClockParams, duration: float, dt: float | None,
                   sample_dt: float | None):
    if dt is None:
        dt = params.default_dt()
    n_steps = max(1, int(round(duration / dt)))
    if sample_dt is None:
        sample_every = max(1, n_steps // 200_000)
    else:
        sample_every = max(1, int(round(sample_dt / dt)))
    return dt, n_steps, sample_every


def _acc_window(params: ClockParams, duration: float, dt: float,
                transient: float | None):
    """Averaging window: post-transient, whole mechanical periods."""
    if transient is None:
        transient = 20.0 * params.mech_period if params.Omega_m > 0 else 0.0
    if transient >= duration:
        return 0, int(round(duration / dt)), 0.0
    lo = int(round(transient / dt))
    if params.Omega_m > 0:
        n_per = int((duration - transient) / params.mech_period)
        if n_per >= 1:
            hi = lo + int(round(n_per * params.mech_period / dt))
        else:
            hi = int(round(duration / dt))
    else:
        hi = int(round(duration / dt))
    return lo, hi, transient


def _averages_from_acc(acc: np.ndarray) -> RunAverages | None:
    T = acc[K.N_OBS + 5]
    if T <= 0:
        return None
    return RunAverages(
        p1=acc[0] / T, p2=acc[1] / T, p3=acc[2] / T, nphot=acc[3] / T,
        x=acc[K.N_OBS + 0] / T, p=acc[K.N_OBS + 1] / T,
        x_sq=acc[K.N_OBS + 2] / T, p_sq=acc[K.N_OBS + 3] / T,
        nphot_p=acc[K.N_OBS + 4] / T, duration=T)


def _initial_observables(sys: MeanFieldSystem, v: np.ndarray,
                         x: float, p: float):
    d = v[sys.space.diag_idx].real
    return (float(sys.w_q[0] @ d), float(sys.w_q[1] @ d),
            float(sys.w_q[2] @ d), float(sys.w_n @ d), x, p)


def run_graded(params: ClockParams, duration: float, *,
               mode: int,
               seed: int | None = None,
               forced: np.ndarray | None = None,
               dt: float | None = None,
               sample_dt: float | None = None,
               rho0: np.ndarray | None = None,
               mech0: tuple[float, float] = (0.0, 0.0),
               transient: float | None = None,
               blowup_guard: float = DEFAULT_BLOWUP_GUARD,
               tail_tol: float = DEFAULT_TAIL_TOL,
               auto_raise: bool = True,
               engine_name: str = "meanfield") -> RunResult:
    """Run the mean-field engine (unconditional or tick-conditioned)."""
    dt, n_steps, sample_every = _resolve_steps(params, duration, dt, sample_dt)
    if forced is not None and forced.size != n_steps:
        raise ValueError("forced jump record length must equal step count")

    raises = 0
    while True:
        sys = meanfield_system(params)
        result = _run_graded_once(
            sys, params, duration, dt, n_steps, sample_every, mode, seed,
            forced, rho0, mech0, transient, blowup_guard, engine_name)
        if result.tail_max <= tail_tol:
            return result
        warnings.warn(
            f"top Fock levels reached population {result.tail_max:.2e} "
            f"(tolerance {tail_tol:.0e}) at n_fock={params.n_fock}",
            TruncationWarning)
        if not auto_raise or raises >= MAX_TRUNCATION_RAISES:
            return result
        raises += 1
        params = replace(params, n_fock=params.n_fock + 5)
        rho0 = None if rho0 is None else _pad_state(rho0, params)


def _pad_state(rho: np.ndarray, params: ClockParams) -> np.ndarray:
    """Embed a density matrix built at a smaller truncation."""
    from .operators import operator_set
    ops_new = operator_set(params.M, params.n_fock)
    dim_old = rho.shape[0]
    n_old = dim_old // 3 ** params.M
    out = np.zeros((ops_new.dim, ops_new.dim), dtype=complex)
    for ci in range(3 ** params.M):
        for ck in range(3 ** params.M):
            blk = rho[ci * n_old:(ci + 1) * n_old, ck * n_old:(ck + 1) * n_old]
            out[ci * params.n_fock:ci * params.n_fock + n_old,
                ck * params.n_fock:ck * params.n_fock + n_old] = blk
    return out


def _run_graded_once(sys: MeanFieldSystem, params: ClockParams,
                     duration: float, dt: float, n_steps: int,
                     sample_every: int, mode: int, seed: int | None,
                     forced: np.ndarray | None, rho0, mech0,
                     transient, blowup_guard, engine_name) -> RunResult:
    S = sys.space.size
    v = sys.initial_vector(rho0)
    x, p = float(mech0[0]), float(mech0[1])
    phi = 0.0

    acc_lo, acc_hi, _ = _acc_window(params, duration, dt, transient)
    acc = np.zeros(K.ACC_SIZE)

    rng = np.random.Generator(np.random.Philox(seed)) \
        if mode == K.MODE_BERNOULLI else None

    work = [np.empty(S, dtype=np.complex128) for _ in range(5)]
    empty_u = np.empty(0, dtype=np.float64)
    empty_f = np.empty(0, dtype=np.int8)

    samp_chunks = []
    tick_chunks = []
    tail_max = 0.0
    t = 0.0
    done = 0

    q1_0, q2_0, q3_0, n_0, _, _ = _initial_observables(sys, v, x, p)
    first_sample = (0.0, x, p, q1_0, q2_0, q3_0, n_0)

    w_obs = np.vstack([sys.w_q, sys.w_n[None, :], sys.w_tail[None, :]])

    while done < n_steps:
        n_chunk = min(CHUNK_STEPS, n_steps - done)
        u = rng.random(n_chunk) if rng is not None else empty_u
        fch = forced[done:done + n_chunk].astype(np.int8) \
            if forced is not None else empty_f
        cap = n_chunk // sample_every + 2
        samp_t = np.empty(cap)
        samp_x = np.empty(cap)
        samp_p = np.empty(cap)
        samp_obs = np.empty((K.N_OBS, cap))
        ticks = np.empty(n_chunk)

        a0 = sys.a0 if mode == K.MODE_UNCONDITIONAL else sys.a0_nojump
        status, n_samp, n_ticks, x, p, phi, tmax = K.run_meanfield(
            v, x, p, phi, t, dt, n_chunk, done,
            a0.data, a0.indices, a0.indptr,
            sys.a_plus.data, sys.a_plus.indices, sys.a_plus.indptr,
            sys.a_minus.data, sys.a_minus.indices, sys.a_minus.indptr,
            sys.jump.data, sys.jump.indices, sys.jump.indptr,
            sys.space.diag_idx, sys.w_jump, sys.w_n, w_obs,
            params.Omega_m, params.gamma_m, SQRT2 * params.g, params.Delta,
            MAX_JUMP_PROB, blowup_guard,
            mode, u, fch,
            sample_every, samp_t, samp_x, samp_p, samp_obs,
            acc, acc_lo, acc_hi,
            ticks,
            *work)
        if status == K.STATUS_BLOWUP:
            raise BlowUpError(
                f"mechanical amplitude exceeded {blowup_guard:g} at t ~ {t:g}")
        if status == K.STATUS_STEP_TOO_COARSE:
            raise StepSizeError(
                f"jump probability reached {MAX_JUMP_PROB} in one step; "
                f"reduce dt below {dt:g}")
        if status == K.STATUS_TICK_OVERFLOW:
            raise RuntimeError("tick buffer overflow; internal sizing bug")
        tail_max = max(tail_max, tmax)
        samp_chunks.append((samp_t[:n_samp].copy(), samp_x[:n_samp].copy(),
                            samp_p[:n_samp].copy(), samp_obs[:, :n_samp].copy()))
        tick_chunks.append(ticks[:n_ticks].copy())
        done += n_chunk
        t = done * dt

    ts = np.concatenate([np.array([first_sample[0]])]
                        + [c[0] for c in samp_chunks])
    xs = np.concatenate([np.array([first_sample[1]])]
                        + [c[1] for c in samp_chunks])
    ps = np.concatenate([np.array([first_sample[2]])]
                        + [c[2] for c in samp_chunks])
    obs = np.concatenate(
        [np.array(first_sample[3:], dtype=float)[:, None]]
        + [c[3][:4] for c in samp_chunks], axis=1)

    samples = SampleSeries(t=ts, x=xs, p=ps, p1=obs[0], p2=obs[1],
                           p3=obs[2], nphot=obs[3])
    all_ticks = np.concatenate(tick_chunks) if tick_chunks else np.empty(0)
    return RunResult(
        params=params, engine=engine_name, dt=dt, t_final=t,
        samples=samples, ticks=all_ticks,
        averages=_averages_from_acc(acc), seed=seed,
        tail_max=tail_max, n_fock_used=params.n_fock,
        mech_final=(x, p))


def run_collective_engine(params: ClockParams, duration: float, *,
                          seed: int | None = None,
                          noiseless: bool = False,
                          forced: np.ndarray | None = None,
                          dt: float | None = None,
                          sample_dt: float | None = None,
                          state0: np.ndarray | None = None,
                          transient: float | None = None,
                          blowup_guard: float = DEFAULT_BLOWUP_GUARD
                          ) -> RunResult:
    """Run the collective M-emitter engine (stochastic or noiseless)."""
    dt, n_steps, sample_every = _resolve_steps(params, duration, dt, sample_dt)
    if forced is not None and forced.size != n_steps:
        raise ValueError("forced jump record length must equal step count")

    y = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]) \
        if state0 is None else np.asarray(state0, dtype=float).copy()
    acc_lo, acc_hi, _ = _acc_window(params, duration, dt, transient)
    acc = np.zeros(K.ACC_SIZE)

    if noiseless:
        mode = K.MODE_DETERMINISTIC
    elif forced is not None:
        mode = K.MODE_FORCED
    else:
        mode = K.MODE_BERNOULLI
    rng = np.random.Generator(np.random.Philox(seed)) \
        if mode == K.MODE_BERNOULLI else None
    empty_u = np.empty(0, dtype=np.float64)
    empty_f = np.empty(0, dtype=np.int8)

    samp_chunks = []
    tick_chunks = []
    repairs = 0
    t = 0.0
    done = 0
    first = (0.0, y[0], y[1], 1.0 - y[0] - y[1], y[4], y[5], y[6])

    while done < n_steps:
        n_chunk = min(CHUNK_STEPS, n_steps - done)
        u = rng.random(n_chunk) if rng is not None else empty_u
        fch = forced[done:done + n_chunk].astype(np.int8) \
            if forced is not None else empty_f
        cap = n_chunk // sample_every + 2
        samp_t = np.empty(cap)
        samp_obs = np.empty((6, cap))
        ticks = np.empty(n_chunk)

        status, n_samp, n_ticks, rep = K.run_collective(
            y, t, dt, n_chunk, done,
            params.M, params.f, params.kappa, params.nbar_f,
            params.gamma_h, params.nbar_h, params.gamma_c, params.nbar_c,
            params.Omega_m, params.gamma_m, SQRT2 * params.g, params.Delta,
            MAX_JUMP_PROB, blowup_guard,
            mode, u, fch,
            sample_every, samp_t, samp_obs,
            acc, acc_lo, acc_hi,
            ticks)
        if status == K.STATUS_BLOWUP:
            raise BlowUpError(
                f"mechanical amplitude exceeded {blowup_guard:g} at t ~ {t:g}")
        if status == K.STATUS_STEP_TOO_COARSE:
            raise StepSizeError(
                f"jump probability reached {MAX_JUMP_PROB}; reduce dt")
        repairs += rep
        samp_chunks.append((samp_t[:n_samp].copy(), samp_obs[:, :n_samp].copy()))
        tick_chunks.append(ticks[:n_ticks].copy())
        done += n_chunk
        t = done * dt

    ts = np.concatenate([np.array([first[0]])] + [c[0] for c in samp_chunks])
    obs = np.concatenate([np.array(first[1:])[:, None]]
                         + [c[1] for c in samp_chunks], axis=1)
    samples = SampleSeries(t=ts, x=obs[4], p=obs[5], p1=obs[0], p2=obs[1],
                           p3=obs[2], nphot=obs[3])
    all_ticks = np.concatenate(tick_chunks) if tick_chunks else np.empty(0)
    return RunResult(
        params=params, engine="collective", dt=dt, t_final=t,
        samples=samples, ticks=all_ticks,
        averages=_averages_from_acc(acc), seed=seed,
        repairs=repairs, n_fock_used=0,
        mech_final=(y[5], y[6]))


def run_tripartite_engine(sys: TripartiteSystem, duration: float, seed: int,
                          *, dt: float, sample_dt: float):
    """Run the fully quantum benchmark; returns (samples dict, dn array, ticks)."""
    params = sys.params
    n_steps = max(1, int(round(duration / dt)))
    sample_every = max(1, int(round(sample_dt / dt)))
    S = sys.space.size
    v = sys.initial_vector()
    rng = np.random.Generator(np.random.Philox(seed))
    u = rng.random(n_steps)
    dn = np.zeros(n_steps, dtype=np.int8)
    cap = n_steps // sample_every + 2
    samp_t = np.empty(cap)
    samp_obs = np.empty((sys.obs.shape[0], cap), dtype=np.complex128)
    work = [np.empty(S, dtype=np.complex128) for _ in range(5)]

    status, n_samp, n_ticks = K.run_tripartite(
        v, 0.0, dt, n_steps,
        sys.a0_nojump.data, sys.a0_nojump.indices, sys.a0_nojump.indptr,
        sys.ajc.data, sys.ajc.indices, sys.ajc.indptr,
        sys.ajc_h.data, sys.ajc_h.indices, sys.ajc_h.indptr,
        sys.ab.data, sys.ab.indices, sys.ab.indptr,
        sys.ab_h.data, sys.ab_h.indices, sys.ab_h.indptr,
        sys.jump.data, sys.jump.indices, sys.jump.indptr,
        sys.space.diag_idx, sys.w_jump, sys.obs,
        params.Delta, params.Omega_m, MAX_JUMP_PROB,
        u, dn,
        sample_every, samp_t, samp_obs,
        *work)
    if status == K.STATUS_STEP_TOO_COARSE:
        raise StepSizeError("jump probability bound violated; reduce dt")

    t = samp_t[:n_samp]
    out = {"t": t}
    for r, name in enumerate(sys.obs_names):
        vals = samp_obs[r, :n_samp]
        if name == "b":
            # undo the rotating frame of the mechanical mode
            z = vals * np.exp(-1j * params.Omega_m * t)
            out["x"] = math.sqrt(2.0) * z.real
            out["p"] = math.sqrt(2.0) * z.imag
        else:
            out[name] = vals.real
    tick_times = (np.flatnonzero(dn == 1) + 1) * dt
    return out, dn, tick_times
