"""Identical-emitter mean-field dynamics for arbitrary emitter number M.

The cavity and the emitter ensemble are reduced to five moments: the
photon number, the collective emitter-field coherence, and two of the
three level populations (the third is bookkept as 1 - q1 - q2, which
enforces normalization by construction). Tick jumps enter through the
stochastic bracket dN/M - dt * q3 * gamma_c * (nbar_c + 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BlowUpError, StepSizeError
from .meanfield import MechState
from .params import ClockParams

SQRT2 = math.sqrt(2.0)
MAX_JUMP_PROB = 0.05


@dataclass
class CollectiveState:
    """Mean-field state of the M-emitter clock."""
    q1: float = 1.0
    q2: float = 0.0
    coh: complex = 0.0 + 0.0j          # <a^dag sigma>, collective coherence
    nphot: float = 0.0
    mech: MechState = field(default_factory=MechState)

    @property
    def q3(self) -> float:
        return 1.0 - self.q1 - self.q2

    def validate(self, tol: float = 1e-8) -> None:
        qs = (self.q1, self.q2, self.q3)
        if any(q < -tol or q > 1 + tol for q in qs):
            raise ValueError(f"populations out of range: {qs}")
        if self.nphot < -1e-10:
            raise ValueError(f"negative photon number: {self.nphot}")


def drift(q1: float, q2: float, coh: complex, nphot: float, x: float,
          params: ClockParams, M: int | None = None
          ) -> tuple[float, float, complex, float]:
    """Deterministic part of the collective equations of motion.

    Returns (dq1, dq2, dcoh, dnphot) per unit time at frozen mechanical
    position x. Mechanics and stochastic terms are handled by callers.
    """
    p = params
    if M is None:
        M = p.M
    q3 = 1.0 - q1 - q2
    imc = coh.imag
    dn = 2.0 * p.f * M * imc + p.kappa * (p.nbar_f - nphot)
    lam = (1j * (p.Delta - SQRT2 * p.g * x)
           - 0.5 * (p.kappa + p.gamma_h * p.nbar_h + p.gamma_c * p.nbar_c))
    dcoh = lam * coh + 1j * p.f * (q2 + nphot * (q2 - q1))
    dq1 = (2.0 * p.f * imc + p.gamma_h * (p.nbar_h + 1) * q3
           - p.gamma_h * p.nbar_h * q1)
    dq2 = (-2.0 * p.f * imc + p.gamma_c * (p.nbar_c + 1) * q3
           - p.gamma_c * p.nbar_c * q2)
    return dq1, dq2, dcoh, dn


def tick_probability_M(state: CollectiveState, dt: float, params: ClockParams,
                       M: int | None = None) -> float:
    """Probability that a tick occurs during dt; scales linearly with M."""
    if M is None:
        M = params.M
    q3 = max(state.q3, 0.0)
    p = dt * params.gamma_c * (params.nbar_c + 1) * M * q3
    if p >= MAX_JUMP_PROB:
        raise StepSizeError(
            f"jump probability {p:.3g} >= {MAX_JUMP_PROB}; reduce dt")
    return p


def step_collective(state: CollectiveState, dt: float, rng: np.random.Generator,
                    params: ClockParams, M: int | None = None,
                    blowup_guard: float = 1e4) -> tuple[CollectiveState, int]:
    """Advance the collective state by one step; returns (state, dN).

    The linear coefficient of the coherence (detuning sweep plus decay) is
    applied as an exact exponential factor for stability at large
    mechanical excursions; every other term is first order in dt, and the
    stochastic bracket multiplies the pre-step values.
    """
    p = params
    if M is None:
        M = p.M
    prob = tick_probability_M(state, dt, p, M)
    dN = 1 if rng.random() < prob else 0
    q1, q2, q3 = state.q1, state.q2, state.q3
    coh, n = state.coh, state.nphot
    x, pm = state.mech.x, state.mech.p

    rate1 = p.gamma_c * (p.nbar_c + 1)
    bracket = dN / M - dt * max(q3, 0.0) * rate1
    imc = coh.imag

    lam = (1j * (p.Delta - SQRT2 * p.g * x)
           - 0.5 * (p.kappa + p.gamma_h * p.nbar_h + p.gamma_c * p.nbar_c))
    new_n = n + dt * (2.0 * p.f * M * imc + p.kappa * (p.nbar_f - n))
    new_coh = (coh * np.exp(lam * dt)
               + dt * 1j * p.f * (q2 + n * (q2 - q1))
               + bracket * (-coh))
    new_q1 = q1 + dt * (2.0 * p.f * imc + p.gamma_h * (p.nbar_h + 1) * q3
                        - p.gamma_h * p.nbar_h * q1) - q1 * bracket
    new_q2 = q2 + dt * (-2.0 * p.f * imc + p.gamma_c * (p.nbar_c + 1) * q3
                        - p.gamma_c * p.nbar_c * q2) + (1.0 - q2) * bracket

    new_x = x + dt * (p.Omega_m * pm - 0.5 * p.gamma_m * x)
    new_p = pm + dt * (-p.Omega_m * x - 0.5 * p.gamma_m * pm
                       + SQRT2 * p.g * n)
    if abs(new_x) > blowup_guard or abs(new_p) > blowup_guard:
        raise BlowUpError("mechanical amplitude exceeded the blow-up guard")

    # state repair: clamp tiny excursions outside [0, 1]
    new_q1 = min(max(new_q1, 0.0), 1.0)
    new_q2 = min(max(new_q2, 0.0), 1.0 - new_q1)
    new_n = max(new_n, 0.0)

    out = CollectiveState(q1=new_q1, q2=new_q2, coh=complex(new_coh),
                          nphot=new_n, mech=MechState(new_x, new_p))
    return out, dN


def run_collective(params: ClockParams, duration: float,
                   seed: int | None = None, **kwargs):
    """Integrate the stochastic collective equations with the fast engine.

    Returns a :class:`optoclock.runner.RunResult`; the sample series
    fields p1..p3 hold the collective level fractions q1..q3.
    """
    from .runner import run_collective_engine
    return run_collective_engine(params, duration, seed=seed, **kwargs)


def noiseless_cycle(params: ClockParams, duration: float, **kwargs):
    """Deterministic limit of the collective equations (noise terms dropped)."""
    from .runner import run_collective_engine
    return run_collective_engine(params, duration, noiseless=True, **kwargs)


def phase_space_fluctuation(samples_x: np.ndarray, samples_p: np.ndarray,
                            orbit: np.ndarray) -> float:
    """RMS distance of samples to a reference orbit, over the orbit radius.

    The orbit is an (n, 2) polyline; distances are to its vertices, which
    is adequate for densely sampled cycles.
    """
    pts = np.column_stack([samples_x, samples_p])
    center = orbit.mean(axis=0)
    radius = float(np.hypot(*(orbit - center).T).mean())
    d2 = ((pts[:, None, :] - orbit[None, :, :]) ** 2).sum(axis=2)
    dist = np.sqrt(d2.min(axis=1))
    return float(np.sqrt((dist ** 2).mean()) / radius)


def diffusive_noise_amplitude(tick_times: np.ndarray, window: float, M: int,
                              q3_t: np.ndarray, q3_vals: np.ndarray,
                              rate1: float,
                              t_range: tuple[float, float] | None = None
                              ) -> float:
    """Standard deviation of the diffusive current around its expectation.

    The per-window expectation is computed from the simultaneously
    recorded q3 series, so the deterministic burst structure of the cycle
    does not contaminate the noise estimate.
    """
    centers, current = diffusive_current(tick_times, window, M, t_range)
    edges = np.concatenate([centers - window / 2, centers[-1:] + window / 2])
    # integrate q3 over each window on its sample grid
    cum = np.concatenate([[0.0], np.cumsum(
        0.5 * (q3_vals[1:] + q3_vals[:-1]) * np.diff(q3_t))])
    cum_at = np.interp(edges, q3_t, cum)
    expected = rate1 * np.diff(cum_at) / window
    resid = current - expected
    return float(resid.std())


def diffusive_current(tick_times: np.ndarray, window: float, M: int,
                      t_range: tuple[float, float] | None = None
                      ) -> tuple[np.ndarray, np.ndarray]:
    """Windowed, 1/M-normalized tick count: the diffusive readout current.

    Returns (window centers, current values). The mean estimates
    gamma_c * (nbar_c + 1) * q3 and the excess variance shrinks as 1/M.
    """
    times = np.asarray(tick_times, dtype=float)
    if times.size == 0:
        raise ValueError("empty tick record")
    if t_range is None:
        t_range = (times[0], times[-1])
    t0, t1 = t_range
    n_win = int((t1 - t0) / window)
    if n_win < 1:
        raise ValueError("window longer than the record")
    edges = t0 + window * np.arange(n_win + 1)
    counts, _ = np.histogram(times, bins=edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return centers, counts / (M * window)
