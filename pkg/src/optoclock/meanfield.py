"""Deterministic (unconditional) semiclassical clock dynamics.

The emitter(s)-cavity density matrix evolves under the master equation
evaluated at the mean mechanical position, while the quadrature means
obey damped harmonic motion driven by the radiation-pressure force
sqrt(2) g <a^dag a>. In the self-oscillating regime the joint dynamics
settles into an asymmetric limit cycle with two cavity-occupation
peaks per mechanical period.

Integration strategy: all stiff diagonal phases are removed by an exact
gauge transformation (see :mod:`graded`), and the remaining smooth
system (rho, x, p, Phi) is integrated with fixed-step classical RK4.
The public single-step function below is a dense reference
implementation used to validate the compiled engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from . import _kernels as K
from .errors import FixedPointReachedError, NotConvergedError
from .model import apply_dissipator, dissipation_channels
from .operators import OperatorSet, operator_set
from .params import ClockParams
from .runner import RunResult, run_graded

SQRT2 = math.sqrt(2.0)


@dataclass
class MechState:
    """Mean mechanical quadratures."""
    x: float = 0.0
    p: float = 0.0


@dataclass
class LimitCycle:
    """Characterization of the periodic orbit of the quadrature means."""
    period: float
    tick_phases: tuple[float, float]
    amplitude_pos: float
    amplitude_neg: float
    sigma_z_avg: float
    closed_orbit: np.ndarray            # (n, 2) sampled (x, p) loop
    asymmetric: bool
    n_peaks_per_period: float
    period_spread: float
    closure_gap: float                  # orbit mismatch over one period / radius


def _gauge_rhs(params: ClockParams, ops: OperatorSet, rho: np.ndarray,
               x: float, p: float, phi: float):
    """Dense gauge-frame generator plus mechanics derivatives."""
    v = ops.jc_raising
    h = params.f * (np.exp(1j * phi) * v + np.exp(-1j * phi) * v.conj().T)
    drho = -1j * (h @ rho - rho @ h)
    for _, op, rate in dissipation_channels(params, ops):
        if rate > 0:
            drho += apply_dissipator(op, rate, rho)
    n_exp = float(np.real(np.trace(ops.n_phot @ rho)))
    dx = params.Omega_m * p - 0.5 * params.gamma_m * x
    dp = -params.Omega_m * x - 0.5 * params.gamma_m * p + SQRT2 * params.g * n_exp
    dphi = -params.Delta - SQRT2 * params.g * x
    return drho, dx, dp, dphi


def _lab_rotation(params: ClockParams, ops: OperatorSet, t: float,
                  phi: float) -> np.ndarray:
    """Per-basis-state gauge phases; lab state = e^{-i s} rho_gauge e^{i s}."""
    phase_full = phi + params.eps2 * t
    s = np.empty(ops.dim)
    for idx, (levels, n) in enumerate(ops.basis_labels()):
        s[idx] = (params.eps2 * sum(1 for l in levels if l == 2) * t
                  + params.eps3 * sum(1 for l in levels if l == 3) * t
                  + n * phase_full)
    return s


def step_unconditional(state: np.ndarray, mech: MechState, dt: float,
                       params: ClockParams, ops: OperatorSet | None = None
                       ) -> tuple[np.ndarray, MechState]:
    """Advance the coupled (density matrix, quadrature means) by one RK4 step.

    The input and output states are lab-frame density matrices; the step
    is carried out in the gauge frame internally, so dt is limited by the
    dissipation rates rather than by the optical frequencies.
    """
    ops = ops or operator_set(params.M, params.n_fock)
    rate_dt = params.max_rate() * dt
    if rate_dt >= 0.05:
        raise ValueError(
            f"stiffest rate times dt is {rate_dt:.3g}; require < 0.05")
    x, p, phi = mech.x, mech.p, 0.0
    rho = state.astype(complex)

    k1, dx1, dp1, df1 = _gauge_rhs(params, ops, rho, x, p, phi)
    k2, dx2, dp2, df2 = _gauge_rhs(params, ops, rho + 0.5 * dt * k1,
                                   x + 0.5 * dt * dx1, p + 0.5 * dt * dp1,
                                   phi + 0.5 * dt * df1)
    k3, dx3, dp3, df3 = _gauge_rhs(params, ops, rho + 0.5 * dt * k2,
                                   x + 0.5 * dt * dx2, p + 0.5 * dt * dp2,
                                   phi + 0.5 * dt * df2)
    k4, dx4, dp4, df4 = _gauge_rhs(params, ops, rho + dt * k3,
                                   x + dt * dx3, p + dt * dp3,
                                   phi + dt * df3)
    rho = rho + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    x += dt / 6.0 * (dx1 + 2 * dx2 + 2 * dx3 + dx4)
    p += dt / 6.0 * (dp1 + 2 * dp2 + 2 * dp3 + dp4)
    phi += dt / 6.0 * (df1 + 2 * df2 + 2 * df3 + df4)
    rho /= np.trace(rho).real

    s = _lab_rotation(params, ops, dt, phi)
    phase = np.exp(-1j * s)
    rho_lab = (phase[:, None] * rho) * phase.conj()[None, :]
    return rho_lab, MechState(x, p)


def run_unconditional(params: ClockParams, duration: float, **kwargs
                      ) -> RunResult:
    """Integrate the unconditional dynamics with the compiled engine."""
    return run_graded(params, duration, mode=K.MODE_UNCONDITIONAL,
                      engine_name="meanfield", **kwargs)


def _hermite_crossing(t0, t1, x0, x1, d0, d1):
    """Zero of the cubic Hermite interpolant on [t0, t1] with x0 < 0 <= x1."""
    h = t1 - t0
    lo, hi = 0.0, 1.0

    def val(s):
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return h00 * x0 + h10 * h * d0 + h01 * x1 + h11 * h * d1

    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if val(mid) < 0:
            lo = mid
        else:
            hi = mid
    return t0 + 0.5 * (lo + hi) * h


def _positive_crossings(t, x, p, params: ClockParams) -> np.ndarray:
    """Times of positive-going zero crossings of x with p > 0."""
    dx = params.Omega_m * p - 0.5 * params.gamma_m * x
    idx = np.flatnonzero((x[:-1] < 0) & (x[1:] >= 0))
    out = []
    for i in idx:
        if p[i] + p[i + 1] > 0:
            out.append(_hermite_crossing(t[i], t[i + 1], x[i], x[i + 1],
                                         dx[i], dx[i + 1]))
    return np.array(out)


def find_limit_cycle(params: ClockParams, t_transient: float | None = None,
                     t_observe: float | None = None, *,
                     dt: float | None = None,
                     min_amplitude: float = 0.05,
                     period_spread_tol: float = 1e-3,
                     run: RunResult | None = None) -> LimitCycle:
    """Detect and characterize the limit cycle of the unconditional dynamics.

    Periodicity is measured from successive positive-going zero crossings
    of x with p > 0; the period is their mean interval and must have a
    relative spread below period_spread_tol.
    """
    T_m = params.mech_period
    if t_transient is None:
        t_transient = 20.0 * T_m
    if t_observe is None:
        t_observe = 40.0 * T_m
    if t_observe < 30.0 * T_m:
        raise ValueError("observation window must cover >= 30 mechanical periods")
    if run is None:
        run = run_unconditional(params, t_transient + t_observe, dt=dt,
                                sample_dt=T_m / 400.0, transient=t_transient)

    s = run.samples
    sel = s.t >= t_transient
    t, x, p = s.t[sel], s.x[sel], s.p[sel]
    nphot = s.nphot[sel]
    sigma_z_avg = run.averages.p2 - run.averages.p1

    amp = np.abs(x).max() if x.size else 0.0
    if amp < min_amplitude:
        raise FixedPointReachedError(
            f"mechanical amplitude {amp:.3g} below {min_amplitude:g}")

    crossings = _positive_crossings(t, x, p, params)
    if crossings.size < 5:
        raise NotConvergedError("too few zero crossings to measure a period")
    intervals = np.diff(crossings)
    period = float(intervals.mean())
    spread = float(intervals.std() / period)
    if spread > period_spread_tol:
        raise NotConvergedError(
            f"period spread {spread:.2e} exceeds {period_spread_tol:g}")

    # cavity-occupation peaks over the observed window
    floor = nphot.max() * 0.05
    min_sep = max(1, int(0.1 * period / (t[1] - t[0])))
    peaks, _ = find_peaks(nphot, height=floor, distance=min_sep)
    peak_times = t[peaks]
    n_periods = (t[-1] - crossings[0]) / period
    n_peaks_per_period = float(
        np.sum(peak_times >= crossings[0]) / n_periods)

    # phases of the two occupation peaks within the final full period
    t_last0, t_last1 = crossings[-2], crossings[-1]
    in_last = peak_times[(peak_times >= t_last0) & (peak_times < t_last1)]
    heights = nphot[peaks][(peak_times >= t_last0) & (peak_times < t_last1)]
    if in_last.size >= 2:
        top2 = in_last[np.argsort(heights)[-2:]]
        tick_phases = tuple(sorted(((top2 - t_last0) / period) % 1.0))
    elif in_last.size == 1:
        ph = float(((in_last[0] - t_last0) / period) % 1.0)
        tick_phases = (ph, ph)
    else:
        tick_phases = (float("nan"), float("nan"))

    orbit_sel = (t >= t_last0) & (t <= t_last1)
    orbit = np.column_stack([x[orbit_sel], p[orbit_sel]])
    radius = float(np.hypot(x[orbit_sel], p[orbit_sel]).mean())
    # orbit closure: states one period apart should coincide
    xi = np.interp(t_last0, t, x), np.interp(t_last0, t, p)
    xf = np.interp(t_last1, t, x), np.interp(t_last1, t, p)
    closure = float(np.hypot(xf[0] - xi[0], xf[1] - xi[1]) / max(radius, 1e-12))

    amplitude_pos = float(x[orbit_sel].max())
    amplitude_neg = float(x[orbit_sel].min())
    return LimitCycle(
        period=period,
        tick_phases=tick_phases,
        amplitude_pos=amplitude_pos,
        amplitude_neg=amplitude_neg,
        sigma_z_avg=float(sigma_z_avg),
        closed_orbit=orbit,
        asymmetric=amplitude_pos > abs(amplitude_neg),
        n_peaks_per_period=n_peaks_per_period,
        period_spread=spread,
        closure_gap=closure,
    )


def classify_regime(params: ClockParams, amplitude_floor: float = 0.5,
                    **kwargs) -> str:
    """'self_oscillating' or 'stationary' long-time behavior."""
    try:
        cycle = find_limit_cycle(params, **kwargs)
    except (FixedPointReachedError, NotConvergedError):
        return "stationary"
    if cycle.amplitude_pos - cycle.amplitude_neg < 2 * amplitude_floor:
        return "stationary"
    if cycle.sigma_z_avg <= 0:
        return "stationary"
    return "self_oscillating"
