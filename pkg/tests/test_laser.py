import numpy as np
import pytest

from optoclock.errors import (NoInversionError, UndefinedSteadyStateError,
                              UnsupportedRegimeError)
from optoclock.laser import (bare_emitter_steady_state,
                             coupled_inversion_relation, dynamical_threshold,
                             factorized_steady_state, lasing_threshold)
from optoclock.params import ClockParams

REF = ClockParams()


class TestBareSteadyState:
    def test_full_inversion_at_zero_cold_occupation(self):
        s = bare_emitter_steady_state(10.0, 0.0)
        assert s.p1 == 0.0
        assert s.p2 == 1.0
        assert s.p3 == 0.0
        assert s.sigma_z == 1.0

    def test_symmetric_baths_no_inversion(self):
        s = bare_emitter_steady_state(1.0, 1.0)
        assert s.sigma_z == pytest.approx(0.0, abs=1e-15)

    def test_generic_inversion_value(self):
        # nbar_h = 10, nbar_c = 1: sigma_z = 9 / 41
        s = bare_emitter_steady_state(10.0, 1.0)
        assert s.sigma_z == pytest.approx(9.0 / 41.0, rel=1e-12)
        assert s.p1 + s.p2 + s.p3 == pytest.approx(1.0, rel=1e-12)

    def test_undefined_when_both_occupations_vanish(self):
        with pytest.raises(UndefinedSteadyStateError):
            bare_emitter_steady_state(0.0, 0.0)


class TestThreshold:
    def test_reference_value(self):
        # 0.5 * sqrt(10 * 1 * 100 * 20 / 111)
        assert lasing_threshold(REF) == pytest.approx(6.7115605521, rel=1e-9)

    def test_rate_rescaling_homogeneity(self):
        # the threshold is itself a rate: scaling every rate by s scales it by s
        p2 = REF.replaced(gamma_h=2.0, gamma_c=200.0, kappa=20.0)
        assert lasing_threshold(p2) == pytest.approx(
            2.0 * lasing_threshold(REF), rel=1e-12)

    def test_errors(self):
        with pytest.raises(NoInversionError):
            lasing_threshold(REF.replaced(nbar_c=10.0))
        with pytest.raises(UnsupportedRegimeError):
            lasing_threshold(REF.replaced(Omega_f=100.0))


class TestCoupledRelations:
    def test_bare_state_zero_residual_at_f_zero(self):
        p = REF.replaced(f=0.0, g=0.0)
        s = bare_emitter_steady_state(p.nbar_h, p.nbar_c)
        assert coupled_inversion_relation(s, p) < 1e-14

    def test_factorized_fixed_point_satisfies_identities(self):
        p = REF.replaced(g=0.0)
        s = factorized_steady_state(p)
        assert coupled_inversion_relation(s, p) < 1e-6

    def test_detuned_fixed_point_phase_relation(self):
        p = ClockParams(Omega_f=110.0, g=0.0)   # Delta = 10
        s = factorized_steady_state(p)
        gamma_sum = p.kappa + p.gamma_h * p.nbar_h + p.gamma_c * p.nbar_c
        assert s.coh.real == pytest.approx(
            -2 * p.Delta / gamma_sum * s.coh.imag, rel=1e-8)
        assert coupled_inversion_relation(s, p) < 1e-6

    def test_requires_rigid_cavity(self):
        s = bare_emitter_steady_state(10.0, 0.0)
        with pytest.raises(UnsupportedRegimeError):
            coupled_inversion_relation(s, REF)   # g != 0


class TestAgainstDynamics:
    def test_uncoupled_populations_match_formulas(self):
        rng = np.random.default_rng(20260810)
        for _ in range(20):
            p = ClockParams(
                g=0.0, f=0.0,
                gamma_c=float(rng.uniform(1.0, 100.0)),
                kappa=float(rng.uniform(1.0, 20.0)),
                nbar_h=float(rng.uniform(0.5, 20.0)),
                nbar_c=float(rng.uniform(0.0, 2.0)),
            )
            s_dyn = factorized_steady_state(p)
            s_ref = bare_emitter_steady_state(p.nbar_h, p.nbar_c, p.nbar_f)
            assert s_dyn.p1 == pytest.approx(s_ref.p1, abs=1e-6)
            assert s_dyn.p2 == pytest.approx(s_ref.p2, abs=1e-6)
            assert s_dyn.p3 == pytest.approx(s_ref.p3, abs=1e-6)

    def test_threshold_matches_dynamics(self):
        p = REF.replaced(g=0.0)
        f_dyn = dynamical_threshold(p)
        assert f_dyn == pytest.approx(lasing_threshold(p), rel=1e-6)

    def test_inversion_sign_straddles_threshold(self):
        rng = np.random.default_rng(7)
        for _ in range(8):
            p = ClockParams(
                g=0.0,
                gamma_c=float(rng.uniform(5.0, 100.0)),
                kappa=float(rng.uniform(1.0, 20.0)),
                nbar_h=float(rng.uniform(1.0, 20.0)),
                nbar_c=float(rng.uniform(0.0, 0.5)),
            )
            fth = lasing_threshold(p)
            below = factorized_steady_state(p.replaced(f=0.5 * fth))
            above = factorized_steady_state(p.replaced(f=1.5 * fth))
            assert below.sigma_z > -1e-6
            assert below.sigma_z > above.sigma_z
            assert above.sigma_z < 1e-6

    def test_residual_decreases_along_relaxation(self):
        # distance to the fixed-point manifold decays along the flow
        from scipy.integrate import solve_ivp
        from optoclock import collective
        from optoclock.laser import LaserSteadyState

        p = REF.replaced(g=0.0)

        def rhs(t, y):
            dq1, dq2, dcoh, dn = collective.drift(
                y[0], y[1], complex(y[2], y[3]), y[4], 0.0, p, M=1)
            return [dq1, dq2, dcoh.real, dcoh.imag, dn]

        times = [1.0, 3.0, 9.0, 27.0]
        sol = solve_ivp(rhs, (0.0, times[-1]), [1.0, 0.0, 0.0, 0.0, 0.0],
                        t_eval=times, rtol=1e-10, atol=1e-12)
        residuals = []
        for col in sol.y.T:
            s = LaserSteadyState(p1=col[0], p2=col[1], p3=1 - col[0] - col[1],
                                 n_phot=col[4], coh=complex(col[2], col[3]))
            residuals.append(coupled_inversion_relation(s, p))
        assert all(b < a * 1.05 for a, b in zip(residuals, residuals[1:]))
