"""Conserved-coherence reduction of the master-equation generators.

Assign each basis state the integer weight n + (number of emitters in
level 2). Every term of the Hamiltonian and every Lindblad operator
shifts this weight by a definite amount, so the generator conserves the
weight difference between the bra and ket indices of the density matrix.
States that start weight-diagonal (any mixture of basis states, in
particular the default emitter-ground, cavity-vacuum state) stay on the
zero-difference subspace forever, which shrinks the state vector by an
order of magnitude and makes the superoperator block sparse.

Generators are assembled with scipy.sparse on the full space, then
restricted to the subspace exactly; a leak check asserts that the
restriction loses nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import UnsupportedRegimeError
from .operators import operator_set
from .params import ClockParams

SQRT2 = math.sqrt(2.0)

# weight carried by emitter levels 1..3
_LEVEL_WEIGHT = (0, 1, 0)


def _spmat(dense: np.ndarray) -> sp.csr_matrix:
    m = sp.csr_matrix(dense)
    m.eliminate_zeros()
    return m


def commutator_super(h: sp.spmatrix) -> sp.csr_matrix:
    """Superoperator of -i[H, .] for row-major vectorization."""
    dim = h.shape[0]
    eye = sp.identity(dim, dtype=complex, format="csr")
    return (-1j * (sp.kron(h, eye) - sp.kron(eye, h.T))).tocsr()


def dissipator_super(op: sp.spmatrix, rate: float) -> sp.csr_matrix:
    """Superoperator of rate * D[O] for row-major vectorization."""
    dim = op.shape[0]
    eye = sp.identity(dim, dtype=complex, format="csr")
    oo = (op.conj().T @ op).tocsr()
    out = sp.kron(op, op.conj()) - 0.5 * (sp.kron(oo, eye) + sp.kron(eye, oo.T))
    return (rate * out).tocsr()


def sandwich_super(op: sp.spmatrix, rate: float) -> sp.csr_matrix:
    """Superoperator of rate * O rho O^dag alone (jump part, no drift)."""
    return (rate * sp.kron(op, op.conj())).tocsr()


@dataclass(frozen=True)
class CsrArrays:
    """Raw CSR arrays of a restricted superoperator, ready for kernels."""
    data: np.ndarray
    indices: np.ndarray
    indptr: np.ndarray

    @classmethod
    def from_sparse(cls, m: sp.spmatrix) -> "CsrArrays":
        c = m.tocsr()
        c.sum_duplicates()
        c.eliminate_zeros()
        return cls(np.ascontiguousarray(c.data, dtype=np.complex128),
                   np.ascontiguousarray(c.indices, dtype=np.int64),
                   np.ascontiguousarray(c.indptr, dtype=np.int64))


class GradedSpace:
    """Index bookkeeping for the weight-diagonal coherence subspace."""

    def __init__(self, weights: np.ndarray):
        self.dim = int(weights.size)
        self.weights = np.asarray(weights, dtype=np.int64)
        rows, cols = [], []
        for i in range(self.dim):
            for k in range(self.dim):
                if self.weights[i] == self.weights[k]:
                    rows.append(i)
                    cols.append(k)
        self.row = np.array(rows, dtype=np.int64)
        self.col = np.array(cols, dtype=np.int64)
        self.size = self.row.size
        self.flat = self.row * self.dim + self.col
        lut = -np.ones(self.dim * self.dim, dtype=np.int64)
        lut[self.flat] = np.arange(self.size)
        self._lut = lut
        self.diag_idx = np.array(
            [lut[i * self.dim + i] for i in range(self.dim)], dtype=np.int64)

    def to_vector(self, rho: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        """Project a density matrix onto the subspace; error if it leaks."""
        flat = rho.reshape(-1)
        v = flat[self.flat].astype(np.complex128)
        outside = np.abs(flat).sum() - np.abs(v).sum()
        if outside > tol * max(np.abs(flat).sum(), 1.0):
            raise ValueError(
                "state has coherences outside the weight-diagonal subspace")
        return np.ascontiguousarray(v)

    def to_matrix(self, v: np.ndarray) -> np.ndarray:
        rho = np.zeros(self.dim * self.dim, dtype=np.complex128)
        rho[self.flat] = v
        return rho.reshape(self.dim, self.dim)

    def restrict(self, superop: sp.spmatrix, check_leak: bool = True
                 ) -> sp.csr_matrix:
        """Restrict a full superoperator to the subspace, exactly."""
        m = superop.tocsr()
        m.eliminate_zeros()
        cols = m[:, self.flat].tocsr()
        sub = cols[self.flat, :].tocsr()
        if check_leak and cols.nnz != sub.nnz:
            raise ValueError(
                "superoperator maps the subspace outside itself; "
                "grading assumption violated")
        return sub

    def observable_weights(self, op: np.ndarray) -> np.ndarray:
        """Complex weights w with Tr(O rho) = sum_s w[s] * v[s]."""
        return np.ascontiguousarray(op[self.col, self.row])

    def diagonal_weights(self, values: np.ndarray) -> np.ndarray:
        """Real weights over basis states for diagonal observables."""
        return np.ascontiguousarray(np.asarray(values, dtype=np.float64))


def emitter_cavity_weights(M: int, n_fock: int) -> np.ndarray:
    """Grading weights for the emitter(s) x cavity basis ordering."""
    ops = operator_set(M, n_fock)
    w = np.empty(ops.dim, dtype=np.int64)
    for idx, (levels, n) in enumerate(ops.basis_labels()):
        w[idx] = n + sum(_LEVEL_WEIGHT[l - 1] for l in levels)
    return w


@dataclass(frozen=True)
class MeanFieldSystem:
    """Restricted generators and observables of the mean-field engine.

    The engine works in the gauge frame where the whole diagonal part of
    the Hamiltonian (bare energies, cavity frequency, and the
    radiation-pressure shift) is absorbed into the phase
    Phi(t) = -Delta t - sqrt(2) g \\int x dt carried by the coupling term:

        d rho / dt = A0 rho + e^{i Phi} A_plus rho + e^{-i Phi} A_minus rho.

    A0 holds every dissipator; A0_nojump excludes the monitored sandwich.
    """

    params: ClockParams
    space: GradedSpace
    a0: CsrArrays               # full generator (unconditional)
    a0_nojump: CsrArrays        # generator minus the monitored sandwich
    a_plus: CsrArrays           # -i f [V, .] with V = a^dag sum_j sigma_12^j
    a_minus: CsrArrays          # -i f [V^dag, .]
    jump: CsrArrays             # monitored sandwich superoperator
    w_jump: np.ndarray          # diagonal weights: Tr(J rho) = w . diag(rho)
    w_n: np.ndarray             # photon number per basis state
    w_q: np.ndarray             # (3, dim) per-emitter level fractions
    w_tail: np.ndarray          # indicator of the top two Fock levels

    def initial_vector(self, rho: np.ndarray | None = None) -> np.ndarray:
        from .model import default_initial_state
        if rho is None:
            rho = default_initial_state(self.params)
        return self.space.to_vector(rho)


@lru_cache(maxsize=8)
def meanfield_system(params: ClockParams) -> MeanFieldSystem:
    """Assemble (and cache) the restricted mean-field generators."""
    p = params
    ops = operator_set(p.M, p.n_fock)
    space = GradedSpace(emitter_cavity_weights(p.M, p.n_fock))

    from .model import dissipation_channels
    a0_full = sp.csr_matrix((ops.dim ** 2, ops.dim ** 2), dtype=complex)
    for _, op, rate in dissipation_channels(p, ops):
        if rate > 0:
            a0_full = a0_full + dissipator_super(_spmat(op), rate)

    v_op = _spmat(ops.jc_raising)
    a_plus_full = commutator_super(p.f * v_op) if p.f else \
        sp.csr_matrix((ops.dim ** 2, ops.dim ** 2), dtype=complex)
    a_minus_full = commutator_super(p.f * v_op.conj().T) if p.f else \
        sp.csr_matrix((ops.dim ** 2, ops.dim ** 2), dtype=complex)

    rate_tick = p.gamma_c * (p.nbar_c + 1)
    jump_full = sp.csr_matrix((ops.dim ** 2, ops.dim ** 2), dtype=complex)
    for k in range(p.M):
        jump_full = jump_full + sandwich_super(_spmat(ops.sigma(2, 3, k)),
                                               rate_tick)

    a0 = space.restrict(a0_full)
    jump = space.restrict(jump_full)
    sys = MeanFieldSystem(
        params=p,
        space=space,
        a0=CsrArrays.from_sparse(a0),
        a0_nojump=CsrArrays.from_sparse(a0 - jump),
        a_plus=CsrArrays.from_sparse(space.restrict(a_plus_full)),
        a_minus=CsrArrays.from_sparse(space.restrict(a_minus_full)),
        jump=CsrArrays.from_sparse(jump),
        w_jump=_level_count(ops, 3) * rate_tick,
        w_n=np.array([n for _, n in ops.basis_labels()], dtype=np.float64),
        w_q=np.stack([_level_count(ops, j) / p.M for j in (1, 2, 3)]),
        w_tail=np.array([1.0 if n >= p.n_fock - 2 else 0.0
                         for _, n in ops.basis_labels()]),
    )
    return sys


def _level_count(ops, level: int) -> np.ndarray:
    return np.array([float(sum(1 for l in levels if l == level))
                     for levels, _ in ops.basis_labels()])


# -- fully quantum tripartite system (validation benchmark) -------------------

@dataclass(frozen=True)
class TripartiteSystem:
    """Restricted generators for emitter x cavity x mechanics, one emitter.

    Works in the rotating frame of the full diagonal free Hamiltonian, so
    the time dependence sits in four harmonic coefficients:

        d rho/dt = A0 rho + e^{-i Delta t} Ajc rho + e^{+i Delta t} Ajc_h rho
                   + e^{-i Omega_m t} Ab rho + e^{+i Omega_m t} Ab_h rho
    """

    params: ClockParams
    n_fock_mech: int
    space: GradedSpace
    a0: CsrArrays
    a0_nojump: CsrArrays
    ajc: CsrArrays
    ajc_h: CsrArrays
    ab: CsrArrays
    ab_h: CsrArrays
    jump: CsrArrays
    w_jump: np.ndarray
    obs: np.ndarray             # complex observable weights, rows see OBS_ROWS
    obs_names: tuple

    def initial_vector(self) -> np.ndarray:
        v = np.zeros(self.space.size, dtype=np.complex128)
        v[self.space.diag_idx[0]] = 1.0   # emitter level 1, both modes vacuum
        return v


@lru_cache(maxsize=4)
def tripartite_system(params: ClockParams, n_fock_mech: int,
                      dim_cap: int = 200_000) -> TripartiteSystem:
    """Assemble the fully quantum benchmark generators (M = 1 only)."""
    p = params
    if p.M != 1:
        raise UnsupportedRegimeError("tripartite benchmark supports M = 1 only")
    fc, fm = p.n_fock, n_fock_mech
    ops = operator_set(1, fc)

    eye_m = sp.identity(fm, dtype=complex, format="csr")
    from .operators import fock_annihilation
    b = sp.kron(sp.identity(3 * fc, dtype=complex, format="csr"),
                _spmat(fock_annihilation(fm))).tocsr()

    def lift(op: np.ndarray) -> sp.csr_matrix:
        return sp.kron(_spmat(op), eye_m).tocsr()

    weights_ec = emitter_cavity_weights(1, fc)
    weights = np.repeat(weights_ec, fm)
    space = GradedSpace(weights)
    if space.size > dim_cap:
        raise UnsupportedRegimeError(
            f"benchmark subspace size {space.size} exceeds cap {dim_cap}; "
            "this engine exists for small-amplitude parameters only")

    from .model import dissipation_channels
    dim2 = (3 * fc * fm) ** 2
    a0_full = sp.csr_matrix((dim2, dim2), dtype=complex)
    for _, op, rate in dissipation_channels(p, ops):
        if rate > 0:
            a0_full = a0_full + dissipator_super(lift(op), rate)
    if p.gamma_m > 0:
        a0_full = a0_full + dissipator_super(b, p.gamma_m * (p.nbar_m + 1))
        if p.nbar_m > 0:
            a0_full = a0_full + dissipator_super(b.conj().T.tocsr(),
                                                 p.gamma_m * p.nbar_m)

    v_op = lift(ops.jc_raising)
    ajc_full = commutator_super(p.f * v_op)
    ajc_h_full = commutator_super(p.f * v_op.conj().T.tocsr())
    # radiation pressure -sqrt(2) g n x = -g n (b + b^dag); the two
    # rotating pieces carry e^{-+ i Omega_m t}
    n_op = lift(ops.n_phot)
    ab_full = commutator_super((-p.g) * (n_op @ b))
    ab_h_full = commutator_super((-p.g) * (n_op @ b.conj().T.tocsr()))

    rate_tick = p.gamma_c * (p.nbar_c + 1)
    jump_full = sandwich_super(lift(ops.sigma(2, 3)), rate_tick)

    a0 = space.restrict(a0_full)
    jump = space.restrict(jump_full)

    # observables: q1, q2, q3, photon number, <b>, phonon number, tails
    def dense_lift(op: np.ndarray) -> np.ndarray:
        return np.kron(op, np.eye(fm, dtype=complex))

    labels = ops.basis_labels()
    obs_mats = [
        dense_lift(ops.proj(1)), dense_lift(ops.proj(2)), dense_lift(ops.proj(3)),
        dense_lift(ops.n_phot), b.toarray(),
        (b.conj().T @ b).toarray(),
        dense_lift(np.diag(np.array(
            [1.0 if n >= fc - 2 else 0.0 for _, n in labels]).astype(complex))),
        np.kron(np.eye(3 * fc, dtype=complex),
                np.diag((np.arange(fm) >= fm - 2).astype(complex))),
    ]
    obs = np.stack([space.observable_weights(m) for m in obs_mats])
    names = ("q1", "q2", "q3", "nphot", "b", "nmech", "tail_cavity", "tail_mech")

    w_jump = rate_tick * np.repeat(_level_count(ops, 3), fm)

    return TripartiteSystem(
        params=p, n_fock_mech=fm, space=space,
        a0=CsrArrays.from_sparse(a0),
        a0_nojump=CsrArrays.from_sparse(a0 - jump),
        ajc=CsrArrays.from_sparse(space.restrict(ajc_full)),
        ajc_h=CsrArrays.from_sparse(space.restrict(ajc_h_full)),
        ab=CsrArrays.from_sparse(space.restrict(ab_full)),
        ab_h=CsrArrays.from_sparse(space.restrict(ab_h_full)),
        jump=CsrArrays.from_sparse(jump),
        w_jump=w_jump, obs=obs, obs_names=names,
    )
