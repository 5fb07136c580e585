"""Compiled inner loops for the dynamical engines.

Everything here operates on raw arrays prepared by :mod:`graded` and the
runner layer: restricted CSR superoperators, diagonal index/weight
vectors, preallocated sample and tick buffers. Host code owns chunking,
random-number generation (counter-based, per trajectory), buffer sizing,
and error reporting; kernels communicate failures through status codes.
"""

from __future__ import annotations

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_BLOWUP = 1
STATUS_TICK_OVERFLOW = 2
STATUS_STEP_TOO_COARSE = 3

# accumulator layout: [q1, q2, q3, n, tail] * dt, then x, p, x^2, p^2, n*p, time
N_OBS = 5
ACC_SIZE = N_OBS + 6

MODE_UNCONDITIONAL = 0
MODE_BERNOULLI = 1
MODE_FORCED = 2
MODE_DETERMINISTIC = 3      # collective engine with noise terms dropped

# magnitudes far below any observable but far above the subnormal range are
# flushed to zero each step; exponentially decaying coherences otherwise
# linger as subnormals and poison throughput
FLUSH_EPS = 1e-140


@njit(cache=True, nogil=True)
def _flush_tiny(v):
    for i in range(v.size):
        if abs(v[i].real) < FLUSH_EPS and abs(v[i].imag) < FLUSH_EPS:
            v[i] = 0.0 + 0.0j


@njit(cache=True, nogil=True)
def _csr_acc(data, indices, indptr, v, out, coef):
    for i in range(out.size):
        s = 0.0 + 0.0j
        for jj in range(indptr[i], indptr[i + 1]):
            s += data[jj] * v[indices[jj]]
        out[i] += coef * s


@njit(cache=True, nogil=True)
def _drift_meanfield(a0d, a0i, a0p, apd, api, app, amd, ami, amp,
                     diag, w_jump, w_n, feedback,
                     v, x, p, phi, Om, gm2, s2g, Delta, kv):
    """Gauge-frame generator plus classical mechanics derivative."""
    for i in range(kv.size):
        kv[i] = 0.0 + 0.0j
    _csr_acc(a0d, a0i, a0p, v, kv, 1.0 + 0.0j)
    c = complex(np.cos(phi), np.sin(phi))
    _csr_acc(apd, api, app, v, kv, c)
    _csr_acc(amd, ami, amp, v, kv, c.conjugate())
    tr = 0.0
    nsum = 0.0
    jr = 0.0
    for d in range(diag.size):
        re = v[diag[d]].real
        tr += re
        nsum += w_n[d] * re
        jr += w_jump[d] * re
    if feedback:
        for i in range(kv.size):
            kv[i] += jr * v[i]
    if tr == 0.0:
        tr = 1.0
    n_exp = nsum / tr
    dx = Om * p - gm2 * x
    dp = -Om * x - gm2 * p + s2g * n_exp
    dphi = -Delta - s2g * x
    return dx, dp, dphi


@njit(cache=True, nogil=True)
def _mech_rk4(x, p, phi, n_fixed, dt, Om, gm2, s2g, Delta):
    """Advance the classical block one step at frozen photon number."""
    def deriv(xx, pp):
        return (Om * pp - gm2 * xx, -Om * xx - gm2 * pp + s2g * n_fixed)

    k1x, k1p = deriv(x, p)
    k1f = -Delta - s2g * x
    k2x, k2p = deriv(x + 0.5 * dt * k1x, p + 0.5 * dt * k1p)
    k2f = -Delta - s2g * (x + 0.5 * dt * k1x)
    k3x, k3p = deriv(x + 0.5 * dt * k2x, p + 0.5 * dt * k2p)
    k3f = -Delta - s2g * (x + 0.5 * dt * k2x)
    k4x, k4p = deriv(x + dt * k3x, p + dt * k3p)
    k4f = -Delta - s2g * (x + dt * k3x)
    x_new = x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
    p_new = p + dt / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
    phi_new = phi + dt / 6.0 * (k1f + 2 * k2f + 2 * k3f + k4f)
    return x_new, p_new, phi_new


@njit(cache=True, nogil=True)
def run_meanfield(v, x, p, phi, t0, dt, n_steps, step_offset,
                  a0d, a0i, a0p, apd, api, app, amd, ami, amp,
                  jd, ji, jp,
                  diag, w_jump, w_n, w_obs,
                  Om, gm, s2g, Delta, pmax, guard,
                  mode, u, forced,
                  sample_every, samp_t, samp_x, samp_p, samp_obs,
                  acc, acc_lo, acc_hi,
                  ticks,
                  k1, k2, k3, k4, vt):
    """One chunk of the mean-field engine (unconditional or conditional).

    Returns (status, n_samples, n_ticks, x, p, phi, tail_max).
    """
    S = v.size
    nd = diag.size
    gm2 = 0.5 * gm
    conditional = mode != MODE_UNCONDITIONAL
    n_samp = 0
    n_ticks = 0
    tail_max = 0.0
    status = STATUS_OK

    for step in range(n_steps):
        t = t0 + step * dt
        jumped = False
        if conditional:
            jr = 0.0
            for d in range(nd):
                jr += w_jump[d] * v[diag[d]].real
            pj = dt * jr
            if pj >= pmax:
                status = STATUS_STEP_TOO_COARSE
                break
            if mode == MODE_BERNOULLI:
                jumped = u[step] < pj
            else:
                jumped = forced[step] == 1

        if jumped:
            for i in range(S):
                vt[i] = 0.0 + 0.0j
            _csr_acc(jd, ji, jp, v, vt, 1.0 + 0.0j)
            tr = 0.0
            for d in range(nd):
                tr += vt[diag[d]].real
            if tr <= 0.0:
                status = STATUS_STEP_TOO_COARSE
                break
            inv = 1.0 / tr
            for i in range(S):
                v[i] = vt[i] * inv
            _flush_tiny(v)
            if n_ticks >= ticks.size:
                status = STATUS_TICK_OVERFLOW
                break
            ticks[n_ticks] = t + dt
            n_ticks += 1
            nfix = 0.0
            for d in range(nd):
                nfix += w_n[d] * v[diag[d]].real
            x, p, phi = _mech_rk4(x, p, phi, nfix, dt, Om, gm2, s2g, Delta)
        else:
            dx1, dp1, df1 = _drift_meanfield(
                a0d, a0i, a0p, apd, api, app, amd, ami, amp,
                diag, w_jump, w_n, conditional,
                v, x, p, phi, Om, gm2, s2g, Delta, k1)
            for i in range(S):
                vt[i] = v[i] + 0.5 * dt * k1[i]
            dx2, dp2, df2 = _drift_meanfield(
                a0d, a0i, a0p, apd, api, app, amd, ami, amp,
                diag, w_jump, w_n, conditional,
                vt, x + 0.5 * dt * dx1, p + 0.5 * dt * dp1,
                phi + 0.5 * dt * df1, Om, gm2, s2g, Delta, k2)
            for i in range(S):
                vt[i] = v[i] + 0.5 * dt * k2[i]
            dx3, dp3, df3 = _drift_meanfield(
                a0d, a0i, a0p, apd, api, app, amd, ami, amp,
                diag, w_jump, w_n, conditional,
                vt, x + 0.5 * dt * dx2, p + 0.5 * dt * dp2,
                phi + 0.5 * dt * df2, Om, gm2, s2g, Delta, k3)
            for i in range(S):
                vt[i] = v[i] + dt * k3[i]
            dx4, dp4, df4 = _drift_meanfield(
                a0d, a0i, a0p, apd, api, app, amd, ami, amp,
                diag, w_jump, w_n, conditional,
                vt, x + dt * dx3, p + dt * dp3,
                phi + dt * df3, Om, gm2, s2g, Delta, k4)
            sixth = dt / 6.0
            for i in range(S):
                v[i] += sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            x += sixth * (dx1 + 2 * dx2 + 2 * dx3 + dx4)
            p += sixth * (dp1 + 2 * dp2 + 2 * dp3 + dp4)
            phi += sixth * (df1 + 2 * df2 + 2 * df3 + df4)
            tr = 0.0
            for d in range(nd):
                tr += v[diag[d]].real
            inv = 1.0 / tr
            for i in range(S):
                v[i] *= inv
            _flush_tiny(v)

        if abs(x) > guard or abs(p) > guard:
            status = STATUS_BLOWUP
            break

        # post-step observables
        o0 = 0.0
        o1 = 0.0
        o2 = 0.0
        o3 = 0.0
        o4 = 0.0
        for d in range(nd):
            re = v[diag[d]].real
            o0 += w_obs[0, d] * re
            o1 += w_obs[1, d] * re
            o2 += w_obs[2, d] * re
            o3 += w_obs[3, d] * re
            o4 += w_obs[4, d] * re
        if o4 > tail_max:
            tail_max = o4

        gstep = step_offset + step
        if acc_lo <= gstep < acc_hi:
            acc[0] += o0 * dt
            acc[1] += o1 * dt
            acc[2] += o2 * dt
            acc[3] += o3 * dt
            acc[4] += o4 * dt
            acc[N_OBS + 0] += x * dt
            acc[N_OBS + 1] += p * dt
            acc[N_OBS + 2] += x * x * dt
            acc[N_OBS + 3] += p * p * dt
            acc[N_OBS + 4] += o3 * p * dt
            acc[N_OBS + 5] += dt

        if sample_every > 0 and (gstep + 1) % sample_every == 0:
            if n_samp < samp_t.size:
                samp_t[n_samp] = t + dt
                samp_x[n_samp] = x
                samp_p[n_samp] = p
                samp_obs[0, n_samp] = o0
                samp_obs[1, n_samp] = o1
                samp_obs[2, n_samp] = o2
                samp_obs[3, n_samp] = o3
                samp_obs[4, n_samp] = o4
                n_samp += 1

    return status, n_samp, n_ticks, x, p, phi, tail_max


@njit(cache=True, nogil=True)
def run_collective(y, t0, dt, n_steps, step_offset,
                   M, f, kappa, nbar_f, gamma_h, nbar_h, gamma_c, nbar_c,
                   Om, gm, s2g, Delta, pmax, guard,
                   mode, u, forced,
                   sample_every, samp_t, samp_obs,
                   acc, acc_lo, acc_hi,
                   ticks):
    """One chunk of the collective M-emitter engine.

    y holds [q1, q2, Re coh, Im coh, nphot, x, p]; the linear coefficient
    of the coherence is applied as an exact exponential factor, all other
    terms first order in dt. samp_obs rows: q1, q2, q3, n, x, p.
    Returns (status, n_samples, n_ticks, repairs).
    """
    q1, q2 = y[0], y[1]
    cre, cim = y[2], y[3]
    n, x, p = y[4], y[5], y[6]
    gm2 = 0.5 * gm
    rate1 = gamma_c * (nbar_c + 1.0)
    gtot = 0.5 * (kappa + gamma_h * nbar_h + gamma_c * nbar_c)
    n_samp = 0
    n_ticks = 0
    repairs = 0
    status = STATUS_OK

    for step in range(n_steps):
        t = t0 + step * dt
        q3 = 1.0 - q1 - q2
        q3c = q3 if q3 > 0.0 else 0.0
        pj = dt * rate1 * M * q3c
        if pj >= pmax:
            status = STATUS_STEP_TOO_COARSE
            break
        jumped = False
        if mode == MODE_BERNOULLI:
            jumped = u[step] < pj
        elif mode == MODE_FORCED:
            jumped = forced[step] == 1
        bracket = 0.0
        if mode != MODE_DETERMINISTIC:
            bracket = (1.0 / M if jumped else 0.0) - dt * q3c * rate1

        delta_eff = Delta - s2g * x
        ere = np.exp(-gtot * dt)
        cosd = np.cos(delta_eff * dt)
        sind = np.sin(delta_eff * dt)
        fac_re = ere * cosd
        fac_im = ere * sind

        drive = f * (q2 + n * (q2 - q1))
        new_cre = fac_re * cre - fac_im * cim - bracket * cre
        new_cim = fac_im * cre + fac_re * cim + dt * drive - bracket * cim

        new_n = n + dt * (2.0 * f * M * cim + kappa * (nbar_f - n))
        new_q1 = q1 + dt * (2.0 * f * cim + gamma_h * (nbar_h + 1) * q3
                            - gamma_h * nbar_h * q1) - q1 * bracket
        new_q2 = q2 + dt * (-2.0 * f * cim + gamma_c * (nbar_c + 1) * q3
                            - gamma_c * nbar_c * q2) + (1.0 - q2) * bracket
        new_x = x + dt * (Om * p - gm2 * x)
        new_p = p + dt * (-Om * x - gm2 * p + s2g * n)

        if new_q1 < 0.0 or new_q1 > 1.0 or new_q2 < 0.0 or new_q2 > 1.0 \
                or new_q1 + new_q2 > 1.0 or new_n < 0.0:
            repairs += 1
            if new_q1 < 0.0:
                new_q1 = 0.0
            if new_q1 > 1.0:
                new_q1 = 1.0
            if new_q2 < 0.0:
                new_q2 = 0.0
            if new_q1 + new_q2 > 1.0:
                new_q2 = 1.0 - new_q1
            if new_n < 0.0:
                new_n = 0.0

        q1, q2, cre, cim = new_q1, new_q2, new_cre, new_cim
        n, x, p = new_n, new_x, new_p

        if abs(x) > guard or abs(p) > guard:
            status = STATUS_BLOWUP
            break

        if jumped:
            if n_ticks >= ticks.size:
                status = STATUS_TICK_OVERFLOW
                break
            ticks[n_ticks] = t + dt
            n_ticks += 1

        gstep = step_offset + step
        q3 = 1.0 - q1 - q2
        if acc_lo <= gstep < acc_hi:
            acc[0] += q1 * dt
            acc[1] += q2 * dt
            acc[2] += q3 * dt
            acc[3] += n * dt
            acc[N_OBS + 0] += x * dt
            acc[N_OBS + 1] += p * dt
            acc[N_OBS + 2] += x * x * dt
            acc[N_OBS + 3] += p * p * dt
            acc[N_OBS + 4] += n * p * dt
            acc[N_OBS + 5] += dt

        if sample_every > 0 and (gstep + 1) % sample_every == 0:
            if n_samp < samp_t.size:
                samp_t[n_samp] = t + dt
                samp_obs[0, n_samp] = q1
                samp_obs[1, n_samp] = q2
                samp_obs[2, n_samp] = q3
                samp_obs[3, n_samp] = n
                samp_obs[4, n_samp] = x
                samp_obs[5, n_samp] = p
                n_samp += 1

    y[0], y[1], y[2], y[3] = q1, q2, cre, cim
    y[4], y[5], y[6] = n, x, p
    return status, n_samp, n_ticks, repairs


@njit(cache=True, nogil=True)
def _drift_tripartite(a0d, a0i, a0p, jcd, jci, jcp, jhd, jhi, jhp,
                      abd, abi, abp, ahd, ahi, ahp,
                      diag, w_jump, v, t, Delta, Om, kv):
    for i in range(kv.size):
        kv[i] = 0.0 + 0.0j
    _csr_acc(a0d, a0i, a0p, v, kv, 1.0 + 0.0j)
    cjc = complex(np.cos(Delta * t), -np.sin(Delta * t))
    _csr_acc(jcd, jci, jcp, v, kv, cjc)
    _csr_acc(jhd, jhi, jhp, v, kv, cjc.conjugate())
    cb = complex(np.cos(Om * t), -np.sin(Om * t))
    _csr_acc(abd, abi, abp, v, kv, cb)
    _csr_acc(ahd, ahi, ahp, v, kv, cb.conjugate())
    jr = 0.0
    for d in range(diag.size):
        jr += w_jump[d] * v[diag[d]].real
    for i in range(kv.size):
        kv[i] += jr * v[i]


@njit(cache=True, nogil=True)
def run_tripartite(v, t0, dt, n_steps,
                   a0d, a0i, a0p, jcd, jci, jcp, jhd, jhi, jhp,
                   abd, abi, abp, ahd, ahi, ahp,
                   jd, ji, jp,
                   diag, w_jump, obs_w,
                   Delta, Om, pmax,
                   u, dn_out,
                   sample_every, samp_t, samp_obs,
                   k1, k2, k3, k4, vt):
    """Conditional evolution of the fully quantum tripartite state.

    Records the jump outcome of every step in dn_out so the factorized
    engine can be replayed on an identical tick realization.
    Returns (status, n_samples, n_ticks).
    """
    S = v.size
    nd = diag.size
    n_samp = 0
    n_ticks = 0
    status = STATUS_OK

    for step in range(n_steps):
        t = t0 + step * dt
        jr = 0.0
        for d in range(nd):
            jr += w_jump[d] * v[diag[d]].real
        pj = dt * jr
        if pj >= pmax:
            status = STATUS_STEP_TOO_COARSE
            break
        if u[step] < pj:
            dn_out[step] = 1
            n_ticks += 1
            for i in range(S):
                vt[i] = 0.0 + 0.0j
            _csr_acc(jd, ji, jp, v, vt, 1.0 + 0.0j)
            tr = 0.0
            for d in range(nd):
                tr += vt[diag[d]].real
            inv = 1.0 / tr
            for i in range(S):
                v[i] = vt[i] * inv
            _flush_tiny(v)
        else:
            dn_out[step] = 0
            _drift_tripartite(a0d, a0i, a0p, jcd, jci, jcp, jhd, jhi, jhp,
                              abd, abi, abp, ahd, ahi, ahp,
                              diag, w_jump, v, t, Delta, Om, k1)
            for i in range(S):
                vt[i] = v[i] + 0.5 * dt * k1[i]
            _drift_tripartite(a0d, a0i, a0p, jcd, jci, jcp, jhd, jhi, jhp,
                              abd, abi, abp, ahd, ahi, ahp,
                              diag, w_jump, vt, t + 0.5 * dt, Delta, Om, k2)
            for i in range(S):
                vt[i] = v[i] + 0.5 * dt * k2[i]
            _drift_tripartite(a0d, a0i, a0p, jcd, jci, jcp, jhd, jhi, jhp,
                              abd, abi, abp, ahd, ahi, ahp,
                              diag, w_jump, vt, t + 0.5 * dt, Delta, Om, k3)
            for i in range(S):
                vt[i] = v[i] + dt * k3[i]
            _drift_tripartite(a0d, a0i, a0p, jcd, jci, jcp, jhd, jhi, jhp,
                              abd, abi, abp, ahd, ahi, ahp,
                              diag, w_jump, vt, t + dt, Delta, Om, k4)
            sixth = dt / 6.0
            for i in range(S):
                v[i] += sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            tr = 0.0
            for d in range(nd):
                tr += v[diag[d]].real
            inv = 1.0 / tr
            for i in range(S):
                v[i] *= inv
            _flush_tiny(v)

        if sample_every > 0 and (step + 1) % sample_every == 0:
            if n_samp < samp_t.size:
                samp_t[n_samp] = t + dt
                for r in range(obs_w.shape[0]):
                    s = 0.0 + 0.0j
                    for i in range(S):
                        s += obs_w[r, i] * v[i]
                    samp_obs[r, n_samp] = s
                n_samp += 1

    return status, n_samp, n_ticks
