"""Closed-form steady states of the rigid-cavity (g = 0) three-level maser.

These expressions serve as independent oracles for the dynamical engines.
They describe the factorized moment system, in which the third cumulant
<a^dag a (p2 - p1)> is replaced by <a^dag a>(<p2> - <p1>); comparisons
therefore target the factorized equations, and any discrepancy with the
full master equation is reported rather than asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import root

from . import collective
from .errors import (NoInversionError, UndefinedSteadyStateError,
                     UnsupportedRegimeError)
from .params import ClockParams


@dataclass(frozen=True)
class LaserSteadyState:
    """Stationary moments of the emitter-cavity system at g = 0."""
    p1: float
    p2: float
    p3: float
    n_phot: float
    coh: complex

    @property
    def sigma_z(self) -> float:
        return self.p2 - self.p1


def bare_emitter_steady_state(nbar_h: float, nbar_c: float,
                              nbar_f: float = 0.0) -> LaserSteadyState:
    """Uncoupled (f = g = 0) steady state of emitter and cavity."""
    if nbar_h < 0 or nbar_c < 0:
        raise ValueError("occupations must be non-negative")
    d = nbar_c + nbar_h + 3.0 * nbar_h * nbar_c
    if d == 0:
        raise UndefinedSteadyStateError(
            "both occupations vanish; emitter populations are not unique")
    return LaserSteadyState(
        p1=nbar_c * (1 + nbar_h) / d,
        p2=nbar_h * (1 + nbar_c) / d,
        p3=nbar_h * nbar_c / d,
        n_phot=nbar_f,
        coh=0.0 + 0.0j,
    )


def lasing_threshold(params: ClockParams) -> float:
    """Coupling strength at which population inversion is extinguished."""
    p = params
    if abs(p.Delta) > 1e-9 * p.omega13:
        raise UnsupportedRegimeError("threshold formula requires Delta = 0")
    if p.nbar_h <= p.nbar_c:
        raise NoInversionError(
            "nbar_h must exceed nbar_c for population inversion")
    return 0.5 * math.sqrt(
        (p.nbar_h - p.nbar_c) * p.gamma_h * p.gamma_c
        * (p.kappa + p.gamma_h * p.nbar_h + p.gamma_c * p.nbar_c)
        / (p.gamma_c * (p.nbar_c + 1) + p.gamma_h * (p.nbar_h + 1)))


def coupled_inversion_relation(state: LaserSteadyState,
                               params: ClockParams) -> float:
    """Largest defect of the three stationary maser identities.

    Zero (within tolerance) exactly when the supplied moments satisfy the
    factorized steady-state relations: the inversion-photon trade-off, the
    photon/coherence balance, and the detuning phase relation.
    """
    p = params
    if p.g != 0:
        raise UnsupportedRegimeError("identities hold only for g = 0")
    if p.nbar_f != 0:
        raise UnsupportedRegimeError("identities assume nbar_f = 0")
    d = p.nbar_c + p.nbar_h + 3.0 * p.nbar_h * p.nbar_c
    if d == 0:
        raise UndefinedSteadyStateError("both occupations vanish")
    gamma_sum = p.kappa + p.gamma_h * p.nbar_h + p.gamma_c * p.nbar_c
    r1 = state.sigma_z - (
        (p.nbar_h - p.nbar_c) / d
        - p.kappa * (p.gamma_h * (2 + 3 * p.nbar_h)
                     + p.gamma_c * (2 + 3 * p.nbar_c))
        / (p.gamma_h * p.gamma_c * d) * state.n_phot)
    r2 = state.n_phot - (2.0 * p.f / p.kappa) * state.coh.imag
    r3 = state.coh.real + (2.0 * p.Delta / gamma_sum) * state.coh.imag
    return float(max(abs(r1), abs(r2), abs(r3)))


def _drift_vector(y: np.ndarray, params: ClockParams) -> np.ndarray:
    q1, q2, rec, imc, n = y
    dq1, dq2, dcoh, dn = collective.drift(q1, q2, complex(rec, imc), n,
                                          0.0, params, M=1)
    return np.array([dq1, dq2, dcoh.real, dcoh.imag, dn])


def factorized_steady_state(params: ClockParams,
                            t_warmup: float | None = None) -> LaserSteadyState:
    """Numerically converged fixed point of the factorized moment system.

    A short integration from the bare steady state selects the physical
    attractor; a root solve then polishes it to machine precision.
    """
    p = params
    if p.g != 0:
        raise UnsupportedRegimeError("factorized fixed point assumes g = 0")
    bare = bare_emitter_steady_state(p.nbar_h, p.nbar_c, p.nbar_f)
    y0 = np.array([bare.p1, bare.p2, 0.0, 1e-3, bare.n_phot + 1e-3])
    if t_warmup is None:
        slow = min(r for r in (p.gamma_h, p.gamma_c, p.kappa) if r > 0)
        t_warmup = 40.0 / slow
    sol = solve_ivp(lambda t, y: _drift_vector(y, p), (0.0, t_warmup), y0,
                    method="LSODA", rtol=1e-10, atol=1e-12)
    y1 = sol.y[:, -1]
    res = root(lambda y: _drift_vector(y, p), y1, tol=1e-13)
    y = res.x if res.success else y1
    if np.max(np.abs(_drift_vector(y, p))) > 1e-9:
        raise RuntimeError("factorized steady state did not converge")
    return LaserSteadyState(p1=float(y[0]), p2=float(y[1]),
                            p3=float(1.0 - y[0] - y[1]),
                            n_phot=float(y[4]), coh=complex(y[2], y[3]))


def factorized_inversion(params: ClockParams, f_value: float) -> float:
    """Long-time inversion of the factorized system at coupling f_value."""
    state = factorized_steady_state(params.replaced(f=f_value))
    return state.sigma_z


def dynamical_threshold(params: ClockParams, bracket_scale: float = 4.0) -> float:
    """Coupling where the factorized long-time inversion crosses zero.

    Found by bisection on the fixed-point inversion; an independent check
    of the closed-form threshold.
    """
    from scipy.optimize import brentq

    f_ref = lasing_threshold(params)
    lo, hi = f_ref / bracket_scale, f_ref * bracket_scale
    return float(brentq(lambda fv: factorized_inversion(params, fv), lo, hi,
                        xtol=1e-12 * f_ref))
