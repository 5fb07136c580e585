"""Hamiltonian, thermal dissipators, and the mean-field Liouvillian.

The mechanical oscillator enters only through the scalar mean position
x_mean: the radiation-pressure term shifts the cavity frequency by
-sqrt(2) g x_mean per photon. The quadrature means themselves obey
classical equations of motion handled by the dynamical engines.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError
from .operators import OperatorSet, operator_set
from .params import ClockParams

SQRT2 = np.sqrt(2.0)


def _ops_for(params: ClockParams, ops: OperatorSet | None) -> OperatorSet:
    if ops is None:
        return operator_set(params.M, params.n_fock)
    if ops.M != params.M or ops.n_fock != params.n_fock:
        raise DimensionMismatchError("operator set does not match parameters")
    return ops


def build_hamiltonian(params: ClockParams, x_mean: float,
                      ops: OperatorSet | None = None) -> np.ndarray:
    """Emitter(s)-cavity Hamiltonian at a frozen mechanical position.

    Energies use the gauge eps1 = 0, so only the transition gaps enter.
    """
    ops = _ops_for(params, ops)
    h = np.zeros((ops.dim, ops.dim), dtype=complex)
    for k in range(params.M):
        h += params.eps2 * ops.proj(2, k) + params.eps3 * ops.proj(3, k)
    h += params.Omega_f * ops.n_phot
    h += params.f * (ops.jc_raising + ops.jc_raising.conj().T)
    h -= SQRT2 * params.g * x_mean * ops.x_coupling
    return h


def apply_dissipator(op: np.ndarray, rate: float, state: np.ndarray) -> np.ndarray:
    """rate * (O rho O^dag - {O^dag O, rho} / 2); traceless by construction."""
    if rate < 0:
        raise ValueError("dissipation rate must be non-negative")
    if op.shape != state.shape or op.shape[0] != op.shape[1]:
        raise DimensionMismatchError(
            f"operator shape {op.shape} incompatible with state {state.shape}")
    odag = op.conj().T
    oo = odag @ op
    return rate * (op @ state @ odag - 0.5 * (oo @ state + state @ oo))


def dissipation_channels(params: ClockParams,
                         ops: OperatorSet | None = None
                         ) -> list[tuple[str, np.ndarray, float]]:
    """All Lindblad channels of the emitter(s)-cavity master equation."""
    ops = _ops_for(params, ops)
    channels = [
        ("cavity_loss", ops.a, params.kappa * (params.nbar_f + 1)),
        ("cavity_pump", ops.a_dag, params.kappa * params.nbar_f),
    ]
    for k in range(params.M):
        channels += [
            (f"hot_emission_{k}", ops.sigma(1, 3, k),
             params.gamma_h * (params.nbar_h + 1)),
            (f"hot_absorption_{k}", ops.sigma(3, 1, k),
             params.gamma_h * params.nbar_h),
            (f"cold_emission_{k}", ops.sigma(2, 3, k),
             params.gamma_c * (params.nbar_c + 1)),
            (f"cold_absorption_{k}", ops.sigma(3, 2, k),
             params.gamma_c * params.nbar_c),
        ]
    return channels


def tick_channels(params: ClockParams,
                  ops: OperatorSet | None = None
                  ) -> list[tuple[np.ndarray, float]]:
    """Monitored channels: photon emission of any emitter into the cold bath."""
    ops = _ops_for(params, ops)
    rate = params.gamma_c * (params.nbar_c + 1)
    return [(ops.sigma(2, 3, k), rate) for k in range(params.M)]


def jump_apply(params: ClockParams, state: np.ndarray,
               ops: OperatorSet | None = None) -> np.ndarray:
    """Unnormalized post-tick state: sum of cold-emission sandwiches."""
    ops = _ops_for(params, ops)
    out = np.zeros_like(state)
    for op, rate in tick_channels(params, ops):
        out += rate * (op @ state @ op.conj().T)
    return out


def tick_rate(params: ClockParams, state: np.ndarray,
              ops: OperatorSet | None = None) -> float:
    """Trace of the jump superoperator: instantaneous tick rate."""
    ops = _ops_for(params, ops)
    q3 = float(np.real(np.trace(ops.collective_sigma(3, 3) @ state)))
    return params.gamma_c * (params.nbar_c + 1) * q3


def liouvillian_rhs(params: ClockParams, x_mean: float, state: np.ndarray,
                    ops: OperatorSet | None = None) -> np.ndarray:
    """Generator of the emitter(s)-cavity master equation at frozen x_mean."""
    ops = _ops_for(params, ops)
    if state.shape != (ops.dim, ops.dim):
        raise DimensionMismatchError(
            f"state shape {state.shape} does not match dimension {ops.dim}")
    h = build_hamiltonian(params, x_mean, ops)
    rhs = -1j * (h @ state - state @ h)
    for _, op, rate in dissipation_channels(params, ops):
        if rate > 0:
            rhs += apply_dissipator(op, rate, state)
    return rhs


# -- states and diagnostics ---------------------------------------------------

def thermal_cavity_state(nbar: float, n_fock: int) -> np.ndarray:
    """Fock-diagonal thermal state with mean occupation nbar (truncated)."""
    if nbar == 0:
        rho = np.zeros((n_fock, n_fock), dtype=complex)
        rho[0, 0] = 1.0
        return rho
    ns = np.arange(n_fock)
    w = (nbar / (nbar + 1.0)) ** ns
    w /= w.sum()
    return np.diag(w).astype(complex)


def product_state(emitter_pops: np.ndarray, cavity: np.ndarray,
                  M: int = 1) -> np.ndarray:
    """Diagonal emitter state (same for each emitter) tensor a cavity state."""
    rho_e = np.diag(np.asarray(emitter_pops, dtype=complex))
    full = np.eye(1, dtype=complex)
    for _ in range(M):
        full = np.kron(full, rho_e)
    return np.kron(full, cavity)


def default_initial_state(params: ClockParams,
                          ops: OperatorSet | None = None) -> np.ndarray:
    """Every emitter in level 1, cavity in vacuum."""
    ops = _ops_for(params, ops)
    rho = np.zeros((ops.dim, ops.dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def check_density_matrix(rho: np.ndarray, herm_tol: float = 1e-12,
                         trace_tol: float = 1e-10,
                         eig_tol: float = 1e-10) -> None:
    """Raise ValueError if rho is not Hermitian, unit trace, positive."""
    scale = max(np.abs(rho).max(), 1e-300)
    if np.abs(rho - rho.conj().T).max() > herm_tol * scale:
        raise ValueError("state is not Hermitian within tolerance")
    if abs(np.trace(rho).real - 1.0) > trace_tol or abs(np.trace(rho).imag) > trace_tol:
        raise ValueError("state trace differs from 1 beyond tolerance")
    eigs = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if eigs.min() < -eig_tol:
        raise ValueError("state has negative eigenvalues beyond tolerance")


def tail_mass(params: ClockParams, state: np.ndarray,
              ops: OperatorSet | None = None) -> float:
    """Population of the top two Fock levels, summed over emitter states."""
    ops = _ops_for(params, ops)
    diag = np.real(np.diag(state))
    mask = np.zeros(ops.dim)
    for idx, (_, n) in enumerate(ops.basis_labels()):
        if n >= params.n_fock - 2:
            mask[idx] = 1.0
    return float(mask @ diag)
