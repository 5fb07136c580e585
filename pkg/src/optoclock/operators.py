"""Dense operators on the truncated emitter(s) x cavity Hilbert space.

Basis ordering is emitter-configuration major, Fock minor: the product
state |j_1 ... j_M> x |n> sits at flat index conf * n_fock + n, where
conf enumerates emitter level tuples in row-major order with level 1
first. Exact density-matrix engines are limited to M <= 2; larger
ensembles are handled by the collective mean-field module.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import TruncationError
from .params import ClockParams

MAX_EXACT_EMITTERS = 2


def fock_annihilation(n_fock: int) -> np.ndarray:
    """Cavity annihilation operator truncated to n_fock levels."""
    if n_fock < 2:
        raise TruncationError("n_fock < 2 cannot represent cavity dynamics")
    a = np.zeros((n_fock, n_fock), dtype=complex)
    ns = np.arange(1, n_fock)
    a[ns - 1, ns] = np.sqrt(ns)
    return a


def emitter_transition(i: int, j: int) -> np.ndarray:
    """|i><j| on a single three-level emitter (levels numbered 1..3)."""
    if not (1 <= i <= 3 and 1 <= j <= 3):
        raise ValueError("emitter levels are numbered 1..3")
    op = np.zeros((3, 3), dtype=complex)
    op[i - 1, j - 1] = 1.0
    return op


class OperatorSet:
    """All operators needed by the emitter(s)-cavity master equation.

    Matrices are dense complex arrays of dimension 3**M * n_fock.
    """

    def __init__(self, M: int, n_fock: int):
        if M < 1:
            raise ValueError("M must be a positive integer")
        if M > MAX_EXACT_EMITTERS:
            raise ValueError(
                f"exact density matrices support M <= {MAX_EXACT_EMITTERS}; "
                "use the collective module for larger ensembles")
        self.M = M
        self.n_fock = n_fock
        self.dim = 3 ** M * n_fock

        eye_f = np.eye(n_fock, dtype=complex)
        eye_e = np.eye(3 ** M, dtype=complex)
        self.a = np.kron(eye_e, fock_annihilation(n_fock))
        self.a_dag = self.a.conj().T
        self.n_phot = self.a_dag @ self.a
        self._eye_f = eye_f

        # per-emitter transition operators embedded in the full space
        self._sigma = {}
        for k in range(M):
            for i in range(1, 4):
                for j in range(1, 4):
                    op_e = np.eye(1, dtype=complex)
                    for slot in range(M):
                        blk = emitter_transition(i, j) if slot == k \
                            else np.eye(3, dtype=complex)
                        op_e = np.kron(op_e, blk)
                    self._sigma[(i, j, k)] = np.kron(op_e, eye_f)

        self.sigma_z = sum(self.proj(2, k) - self.proj(1, k) for k in range(M))
        self.N_exc = self.n_phot + 0.5 * self.sigma_z
        # operator entering the radiation-pressure term
        self.x_coupling = self.n_phot
        # photon-creating part of the emitter-cavity coupling
        self.jc_raising = self.a_dag @ self.collective_sigma(1, 2)

    @classmethod
    def for_params(cls, params: ClockParams) -> "OperatorSet":
        return cls(params.M, params.n_fock)

    def sigma(self, i: int, j: int, emitter: int = 0) -> np.ndarray:
        """Transition operator |i><j| of one emitter, identity elsewhere."""
        return self._sigma[(i, j, emitter)]

    def proj(self, j: int, emitter: int = 0) -> np.ndarray:
        """Projector onto level j of one emitter."""
        return self._sigma[(j, j, emitter)]

    def collective_sigma(self, i: int, j: int) -> np.ndarray:
        """Sum of |i><j| over all emitters."""
        return sum(self.sigma(i, j, k) for k in range(self.M))

    def level_population(self, j: int) -> np.ndarray:
        """Operator whose expectation is the per-emitter average population."""
        return self.collective_sigma(j, j) / self.M

    def basis_labels(self) -> list[tuple[tuple[int, ...], int]]:
        """(emitter levels, photon number) for every basis index."""
        labels = []
        for conf in range(3 ** self.M):
            digits = []
            c = conf
            for _ in range(self.M):
                digits.append(c % 3 + 1)
                c //= 3
            digits.reverse()
            for n in range(self.n_fock):
                labels.append((tuple(digits), n))
        return labels


@lru_cache(maxsize=32)
def operator_set(M: int, n_fock: int) -> OperatorSet:
    """Cached operator construction; operator sets are immutable in practice."""
    return OperatorSet(M, n_fock)
