import numpy as np
import pytest
import scipy.sparse as sp

from optoclock import _kernels as K
from optoclock.graded import (GradedSpace, commutator_super,
                              emitter_cavity_weights, meanfield_system)
from optoclock.meanfield import MechState, _gauge_rhs, step_unconditional
from optoclock.model import default_initial_state, jump_apply, tick_rate
from optoclock.operators import operator_set
from optoclock.params import ClockParams
from optoclock.runner import run_graded

P_SMALL = ClockParams(n_fock=6, nbar_c=0.2, nbar_f=0.1)
P_TWO = ClockParams(M=2, n_fock=5, nbar_c=0.05)


def random_subspace_state(space: GradedSpace, rng) -> np.ndarray:
    """Random Hermitian positive state supported on the graded subspace."""
    dim = space.dim
    amps = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    rho = np.outer(amps, amps.conj())
    mask = np.zeros((dim, dim))
    mask[space.row, space.col] = 1.0
    rho = rho * mask
    rho = 0.5 * (rho + rho.conj().T)
    rho += np.eye(dim) * 0.1
    return rho / np.trace(rho).real


@pytest.mark.parametrize("params", [P_SMALL, P_TWO])
class TestRestriction:
    def test_vector_round_trip(self, params):
        rng = np.random.default_rng(11)
        sys = meanfield_system(params)
        rho = random_subspace_state(sys.space, rng)
        v = sys.space.to_vector(rho)
        assert np.allclose(sys.space.to_matrix(v), rho)

    def test_leak_detection_on_projection(self, params):
        sys = meanfield_system(params)
        rho = np.full((sys.space.dim, sys.space.dim), 0.01, dtype=complex)
        with pytest.raises(ValueError):
            sys.space.to_vector(rho)

    def test_restriction_rejects_ungraded_operator(self, params):
        sys = meanfield_system(params)
        ops = operator_set(params.M, params.n_fock)
        bad = commutator_super(sp.csr_matrix(ops.a + ops.a_dag))
        with pytest.raises(ValueError):
            sys.space.restrict(bad)

    def test_generator_matches_dense_gauge_frame(self, params):
        rng = np.random.default_rng(12)
        sys = meanfield_system(params)
        ops = operator_set(params.M, params.n_fock)
        rho = random_subspace_state(sys.space, rng)
        v = sys.space.to_vector(rho)
        for phi in (0.0, 0.7, -2.3):
            out = np.zeros_like(v)
            K._csr_acc(sys.a0.data, sys.a0.indices, sys.a0.indptr,
                       v, out, 1.0 + 0.0j)
            c = np.exp(1j * phi)
            K._csr_acc(sys.a_plus.data, sys.a_plus.indices, sys.a_plus.indptr,
                       v, out, c)
            K._csr_acc(sys.a_minus.data, sys.a_minus.indices,
                       sys.a_minus.indptr, v, out, np.conj(c))
            dense, _, _, _ = _gauge_rhs(params, ops, rho, 0.3, -0.1, phi)
            assert np.abs(sys.space.to_matrix(out) - dense).max() < 1e-13

    def test_jump_superoperator_matches_dense(self, params):
        rng = np.random.default_rng(13)
        sys = meanfield_system(params)
        rho = random_subspace_state(sys.space, rng)
        v = sys.space.to_vector(rho)
        out = np.zeros_like(v)
        K._csr_acc(sys.jump.data, sys.jump.indices, sys.jump.indptr,
                   v, out, 1.0 + 0.0j)
        dense = jump_apply(params, rho)
        assert np.abs(sys.space.to_matrix(out) - dense).max() < 1e-13
        rate = float(sys.w_jump @ v[sys.space.diag_idx].real)
        assert rate == pytest.approx(tick_rate(params, rho), rel=1e-12)

    def test_observable_weights(self, params):
        rng = np.random.default_rng(14)
        sys = meanfield_system(params)
        ops = operator_set(params.M, params.n_fock)
        rho = random_subspace_state(sys.space, rng)
        d = sys.space.to_vector(rho)[sys.space.diag_idx].real
        assert sys.w_n @ d == pytest.approx(
            np.trace(ops.n_phot @ rho).real, rel=1e-12)
        for j in (1, 2, 3):
            expect = np.trace(ops.level_population(j) @ rho).real
            assert sys.w_q[j - 1] @ d == pytest.approx(expect, abs=1e-12)


class TestKernelAgainstDenseStep:
    def test_multi_step_equivalence(self):
        params = P_SMALL
        dt = 4e-4
        n = 200
        ops = operator_set(params.M, params.n_fock)

        rho = default_initial_state(params)
        mech = MechState(0.4, -0.2)
        for _ in range(n):
            rho, mech = step_unconditional(rho, mech, dt, params, ops)

        run = run_graded(params, n * dt, mode=K.MODE_UNCONDITIONAL, dt=dt,
                         mech0=(0.4, -0.2), sample_dt=n * dt, transient=0.0,
                         auto_raise=False, tail_tol=1.0)
        pops_dense = [np.trace(ops.level_population(j) @ rho).real
                      for j in (1, 2, 3)]
        s = run.samples
        assert s.p1[-1] == pytest.approx(pops_dense[0], abs=1e-9)
        assert s.p2[-1] == pytest.approx(pops_dense[1], abs=1e-9)
        assert s.p3[-1] == pytest.approx(pops_dense[2], abs=1e-9)
        assert s.nphot[-1] == pytest.approx(
            np.trace(ops.n_phot @ rho).real, abs=1e-9)
        assert s.x[-1] == pytest.approx(mech.x, abs=1e-10)
        assert s.p[-1] == pytest.approx(mech.p, abs=1e-10)

    def test_dense_step_preserves_state_quality(self):
        params = P_SMALL
        ops = operator_set(params.M, params.n_fock)
        rho = default_initial_state(params)
        mech = MechState()
        for _ in range(50):
            rho, mech = step_unconditional(rho, mech, 4e-4, params, ops)
        assert abs(np.trace(rho).real - 1.0) < 1e-10
        assert np.abs(rho - rho.conj().T).max() < 1e-10
        assert np.linalg.eigvalsh(rho).min() > -1e-10

    def test_step_size_guard(self):
        params = ClockParams(n_fock=4)
        rho = default_initial_state(params)
        with pytest.raises(ValueError):
            step_unconditional(rho, MechState(), 1e-3, params)  # rate*dt = 0.1


class TestWeights:
    def test_weight_assignment(self):
        w = emitter_cavity_weights(1, 4)
        ops = operator_set(1, 4)
        for idx, (levels, n) in enumerate(ops.basis_labels()):
            expected = n + (1 if levels[0] == 2 else 0)
            assert w[idx] == expected

    def test_subspace_size_single_emitter(self):
        # blocks: W=0 has 2 states, W=1..F-1 have 3, W=F has 1
        F = 15
        space = GradedSpace(emitter_cavity_weights(1, F))
        assert space.size == 4 + (F - 1) * 9 + 1
