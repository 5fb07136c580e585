import numpy as np
import pytest

from optoclock.model import (apply_dissipator, build_hamiltonian,
                             check_density_matrix, default_initial_state,
                             dissipation_channels, jump_apply,
                             liouvillian_rhs, product_state, tail_mass,
                             thermal_cavity_state, tick_rate)
from optoclock.laser import bare_emitter_steady_state
from optoclock.operators import OperatorSet, operator_set
from optoclock.params import ClockParams
from optoclock.errors import DimensionMismatchError


REF = ClockParams()          # reference operating point, M = 1
REF2 = ClockParams(M=2, n_fock=8)


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (m + m.conj().T)


def random_density(dim: int, rng: np.random.Generator) -> np.ndarray:
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = m @ m.conj().T
    return rho / np.trace(rho)


class TestOperators:
    def test_ladder_commutator_exact_below_truncation(self):
        ops = operator_set(1, 12)
        comm = ops.a @ ops.a_dag - ops.a_dag @ ops.a
        # exact identity except on the top Fock level of each emitter block
        labels = ops.basis_labels()
        for idx, (_, n) in enumerate(labels):
            expected = 1.0 if n < 11 else -11.0
            assert comm[idx, idx] == pytest.approx(expected)
        off = comm - np.diag(np.diag(comm))
        assert np.abs(off).max() < 1e-14

    def test_transition_algebra(self):
        ops = operator_set(1, 4)
        for i in range(1, 4):
            for j in range(1, 4):
                for k in range(1, 4):
                    for l in range(1, 4):
                        prod = ops.sigma(i, j) @ ops.sigma(k, l)
                        expected = ops.sigma(i, l) if j == k else 0 * prod
                        assert np.allclose(prod, expected)

    def test_projectors_resolve_identity(self):
        # per emitter the projectors sum to the identity
        for ops in (operator_set(1, 5), operator_set(2, 4)):
            for k in range(ops.M):
                s = sum(ops.proj(j, k) for j in range(1, 4))
                assert np.allclose(s, np.eye(ops.dim))

    def test_emitter_count_cap(self):
        with pytest.raises(ValueError):
            OperatorSet(3, 4)


class TestHamiltonian:
    def test_noninteracting_limit_block_diagonal(self):
        p = REF.replaced(f=0.0, g=0.0)
        ops = operator_set(p.M, p.n_fock)
        h = build_hamiltonian(p, x_mean=1.3, ops=ops)
        for j in range(1, 4):
            assert np.abs(h @ ops.proj(j) - ops.proj(j) @ h).max() < 1e-12
        nop = ops.n_phot
        assert np.abs(h @ nop - nop @ h).max() < 1e-12

    def test_conserves_excitation_number(self):
        ops = operator_set(REF.M, REF.n_fock)
        h = build_hamiltonian(REF, x_mean=0.7, ops=ops)
        comm = h @ ops.N_exc - ops.N_exc @ h
        assert np.abs(comm).max() < 1e-10

    def test_single_excitation_splitting(self):
        # restrict to the resonant two-state block {|2, 0>, |1, 1>}: the
        # lowest eigenvalue is eps2 - f
        ops = operator_set(1, REF.n_fock)
        h = build_hamiltonian(REF, x_mean=0.0, ops=ops)
        labels = ops.basis_labels()
        idx = [labels.index(((2,), 0)), labels.index(((1,), 1))]
        block = h[np.ix_(idx, idx)]
        eigs = np.linalg.eigvalsh(block)
        assert eigs.min() == pytest.approx(REF.eps2 - REF.f, rel=1e-12)

    def test_hermitian(self):
        h = build_hamiltonian(REF, x_mean=-2.4)
        assert np.abs(h - h.conj().T).max() < 1e-12


class TestDissipator:
    def test_zero_rate(self):
        rng = np.random.default_rng(1)
        ops = operator_set(1, 6)
        rho = random_density(ops.dim, rng)
        out = apply_dissipator(ops.a, 0.0, rho)
        assert np.abs(out).max() == 0.0

    def test_traceless(self):
        rng = np.random.default_rng(2)
        ops = operator_set(1, 6)
        rho = random_density(ops.dim, rng)
        for _, op, rate in dissipation_channels(ClockParams(nbar_c=0.3,
                                                            nbar_f=0.2,
                                                            n_fock=6)):
            out = apply_dissipator(op, max(rate, 1.0), rho)
            assert abs(np.trace(out)) < 1e-12

    def test_hot_pair_gibbs_fixed_point(self):
        # emitter-diagonal state with p3/p1 at the hot-bath Boltzmann ratio is
        # annihilated by the hot dissipator pair for any p2 and cavity state
        p = ClockParams(n_fock=6)
        ops = operator_set(1, 6)
        ratio = p.nbar_h / (p.nbar_h + 1)
        p1 = 0.5
        pops = np.array([p1, 0.2, p1 * ratio])
        pops = pops / pops.sum()
        rho = product_state(pops, thermal_cavity_state(0.7, 6))
        out = (apply_dissipator(ops.sigma(1, 3), p.gamma_h * (p.nbar_h + 1), rho)
               + apply_dissipator(ops.sigma(3, 1), p.gamma_h * p.nbar_h, rho))
        assert np.abs(out).max() < 1e-12

    def test_thermal_cavity_detailed_balance(self):
        nbar = 0.8
        p = ClockParams(nbar_f=nbar, n_fock=25)
        ops = operator_set(1, 25)
        rho = product_state(np.array([1.0, 0.0, 0.0]),
                            thermal_cavity_state(nbar, 25))
        out = (apply_dissipator(ops.a, p.kappa * (nbar + 1), rho)
               + apply_dissipator(ops.a_dag, p.kappa * nbar, rho))
        assert np.abs(out).max() < 1e-10

    def test_dimension_check(self):
        ops = operator_set(1, 6)
        with pytest.raises(DimensionMismatchError):
            apply_dissipator(ops.a, 1.0, np.eye(7, dtype=complex))


class TestLiouvillian:
    def test_uncoupled_fixed_point(self):
        p = ClockParams(f=0.0, g=0.0, nbar_c=0.6, nbar_f=0.4, n_fock=30)
        bare = bare_emitter_steady_state(p.nbar_h, p.nbar_c)
        rho = product_state(np.array([bare.p1, bare.p2, bare.p3]),
                            thermal_cavity_state(p.nbar_f, p.n_fock))
        rhs = liouvillian_rhs(p, 0.0, rho)
        assert np.abs(rhs).max() < 1e-9

    def test_trace_free_and_hermiticity_preserving(self):
        rng = np.random.default_rng(3)
        p = ClockParams(nbar_c=0.1, nbar_f=0.05, n_fock=6)
        rho = random_density(p.dim, rng)
        rhs = liouvillian_rhs(p, 0.4, rho)
        assert abs(np.trace(rhs)) < 1e-12
        assert np.abs(rhs - rhs.conj().T).max() < 1e-12 * np.abs(rhs).max()

    def test_generator_linearity(self):
        rng = np.random.default_rng(4)
        p = ClockParams(n_fock=5)
        a, b = 0.7, -1.3
        r1 = random_hermitian(p.dim, rng)
        r2 = random_hermitian(p.dim, rng)
        lhs = liouvillian_rhs(p, 0.2, a * r1 + b * r2)
        rhs = a * liouvillian_rhs(p, 0.2, r1) + b * liouvillian_rhs(p, 0.2, r2)
        scale = np.abs(rhs).max()
        assert np.abs(lhs - rhs).max() < 1e-10 * max(scale, 1.0)

    def test_coherent_part_conserves_excitations(self):
        rng = np.random.default_rng(5)
        for p in (ClockParams(n_fock=5), ClockParams(M=2, n_fock=4, g=12.0)):
            ops = operator_set(p.M, p.n_fock)
            h = build_hamiltonian(p, x_mean=0.9, ops=ops)
            rho = random_density(p.dim, rng)
            coherent = -1j * (h @ rho - rho @ h)
            val = np.trace(ops.N_exc @ coherent)
            assert abs(val) < 1e-10

    def test_two_emitter_dimensions(self):
        rho = default_initial_state(REF2)
        rhs = liouvillian_rhs(REF2, 0.0, rho)
        assert rhs.shape == (REF2.dim, REF2.dim)
        assert abs(np.trace(rhs)) < 1e-12


class TestStatesAndDiagnostics:
    def test_check_density_matrix_accepts_valid(self):
        rng = np.random.default_rng(6)
        check_density_matrix(random_density(10, rng))

    def test_check_density_matrix_rejects(self):
        bad = np.eye(4, dtype=complex)
        with pytest.raises(ValueError):
            check_density_matrix(bad)          # trace 4
        rho = np.eye(4, dtype=complex) / 4
        rho[0, 1] = 0.5
        with pytest.raises(ValueError):
            check_density_matrix(rho)          # not Hermitian

    def test_jump_rate_matches_level3_population(self):
        p = ClockParams(nbar_c=0.2, n_fock=5)
        pops = np.array([0.3, 0.3, 0.4])
        rho = product_state(pops, thermal_cavity_state(0.0, 5))
        rate = tick_rate(p, rho)
        assert rate == pytest.approx(p.gamma_c * (p.nbar_c + 1) * 0.4, rel=1e-12)
        jumped = jump_apply(p, rho)
        assert np.trace(jumped).real == pytest.approx(rate, rel=1e-12)

    def test_tail_mass_counts_top_levels(self):
        p = ClockParams(n_fock=5)
        cav = np.zeros((5, 5), dtype=complex)
        cav[3, 3] = 0.25
        cav[4, 4] = 0.5
        cav[0, 0] = 0.25
        rho = product_state(np.array([1.0, 0, 0]), cav)
        assert tail_mass(p, rho) == pytest.approx(0.75)
