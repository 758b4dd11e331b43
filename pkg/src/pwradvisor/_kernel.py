"""Compiled RK4 integration kernel shared by plant stepping and prediction.

One jitted batch loop is the only integration path in the package, so a
single plant step and a batched prediction sweep of the same schedule are
bitwise identical by construction.  Rows of the batch are independent.

The bang-bang rod controller makes the right-hand side discontinuous.  The
rod rate is frozen over each integration segment and its switching instants
are event-localized on the segment's Hermite interpolant, so switch times
depend on the trajectory, not on the step size.  When the temperature
deviation rides a deadband boundary (the controller re-switching arbitrarily
fast), the integrator follows the Filippov sliding solution instead: the
deviation is pinned to the boundary and the rod position tracks the
criticality manifold explicitly, entering and leaving the sliding mode at
event-located instants.  Coarse and fine runs of the same schedule therefore
agree to integrator accuracy even across rod activity.

State vector layout: (i_t, i_b, x_t, x_b, C_B, z, T_dev, m_eff).
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .params import PlantParams

N_VARS = 8
_MAX_EVENTS_PER_STEP = 16
_BISECT_ITERS = 40

# packed-constant indices
(K_LAMBDA_I, K_F, K_PROD_X, K_PROD_I, K_LAMBDA_X, K_SIGMA, K_INV_MP,
 K_C_STOCK, K_P_NOM, K_K_SG, K_C_TH, K_W_ROD, K_Z_REF, K_W_B, K_CB_CRIT,
 K_W_X, K_ALPHA_M, K_GAMMA_D, K_AO_NAT, K_W_AX, K_Z_MAX, K_W_XAX,
 K_GAMMA_AO, K_V_ROD, K_DEADBAND) = range(25)


def pack_constants(params: PlantParams) -> np.ndarray:
    """Flatten the parameter set into the kernel's constant vector."""
    f = params.lambda_X + params.sigma_bar
    mix = 1.0 / (params.gamma_X + params.gamma_I)
    c = np.empty(25)
    c[K_LAMBDA_I] = params.lambda_I
    c[K_F] = f
    c[K_PROD_X] = f * params.gamma_X * mix
    c[K_PROD_I] = f * params.gamma_I * mix
    c[K_LAMBDA_X] = params.lambda_X
    c[K_SIGMA] = params.sigma_bar
    c[K_INV_MP] = 1.0 / params.M_p
    c[K_C_STOCK] = params.C_stock
    c[K_P_NOM] = params.P_nom
    c[K_K_SG] = params.K_sg
    c[K_C_TH] = params.C_th
    c[K_W_ROD] = params.w_rod
    c[K_Z_REF] = params.z_ref
    c[K_W_B] = params.W_B
    c[K_CB_CRIT] = params.C_B_crit_fp
    c[K_W_X] = params.W_X
    c[K_ALPHA_M] = params.alpha_M
    c[K_GAMMA_D] = params.gamma_D
    c[K_AO_NAT] = params.AO_nat
    c[K_W_AX] = params.w_ax
    c[K_Z_MAX] = params.z_max
    c[K_W_XAX] = params.W_Xax
    c[K_GAMMA_AO] = params.gamma_AO
    c[K_V_ROD] = params.v_rod
    c[K_DEADBAND] = params.deadband
    return c


@njit(cache=True)
def _rod_rate(T_dev, z, c):
    """Bang-bang rod rate in steps/s, gated at the mechanical limits."""
    rate = 0.0
    if T_dev > c[K_DEADBAND]:
        rate = -c[K_V_ROD]
    elif T_dev < -c[K_DEADBAND]:
        rate = c[K_V_ROD]
    if rate < 0.0 and z <= 0.0:
        rate = 0.0
    elif rate > 0.0 and z >= c[K_Z_MAX]:
        rate = 0.0
    return rate / 60.0


@njit(cache=True)
def _deriv(y, q_eff, p_turb, rod_rate, c, out):
    i_t = y[0]
    i_b = y[1]
    x_t = y[2]
    x_b = y[3]
    C_B = y[4]
    z = y[5]
    T_dev = y[6]

    rho = (c[K_W_ROD] * (z - c[K_Z_REF])
           - c[K_W_B] * (C_B - c[K_CB_CRIT])
           - c[K_W_X] * (0.5 * (x_t + x_b) - 1.0)
           + c[K_ALPHA_M] * T_dev)
    n = 1.0 + rho / c[K_GAMMA_D]
    if n < 0.0:
        n = 0.0
    elif n > 1.2:
        n = 1.2
    ao = c[K_AO_NAT] + (-c[K_W_AX] * (c[K_Z_MAX] - z)
                        + c[K_W_XAX] * (x_b - x_t)) / c[K_GAMMA_AO]
    p_t = n * (1.0 + ao / 100.0)
    p_b = n * (1.0 - ao / 100.0)

    out[0] = c[K_LAMBDA_I] * (p_t - i_t)
    out[1] = c[K_LAMBDA_I] * (p_b - i_b)
    out[2] = (c[K_PROD_X] * p_t + c[K_PROD_I] * i_t
              - (c[K_LAMBDA_X] + c[K_SIGMA] * p_t) * x_t)
    out[3] = (c[K_PROD_X] * p_b + c[K_PROD_I] * i_b
              - (c[K_LAMBDA_X] + c[K_SIGMA] * p_b) * x_b)

    q_pos = q_eff if q_eff > 0.0 else 0.0
    q_neg = -q_eff if q_eff < 0.0 else 0.0
    out[4] = (-(q_pos * c[K_INV_MP]) * C_B
              + (q_neg * c[K_INV_MP]) * (c[K_C_STOCK] - C_B))

    out[5] = rod_rate
    out[6] = (c[K_P_NOM] * (n - p_turb) - c[K_K_SG] * T_dev) / c[K_C_TH]
    out[7] = q_eff if q_eff >= 0.0 else -q_eff


@njit(cache=True)
def _slide_z(x_t, x_b, C_B, p_turb, level, c):
    """Rod position on the sliding manifold: criticality at the power that
    balances the steam generators with T_dev pinned at ``level``."""
    n_s = p_turb + c[K_K_SG] * level / c[K_P_NOM]
    return c[K_Z_REF] + (c[K_GAMMA_D] * (n_s - 1.0)
                         + c[K_W_B] * (C_B - c[K_CB_CRIT])
                         + c[K_W_X] * (0.5 * (x_t + x_b) - 1.0)
                         - c[K_ALPHA_M] * level) / c[K_W_ROD]


@njit(cache=True)
def _deriv_slide(y, q_eff, p_turb, level, c, out):
    """Reduced dynamics on the sliding manifold (T_dev pinned, z algebraic)."""
    i_t = y[0]
    i_b = y[1]
    x_t = y[2]
    x_b = y[3]
    C_B = y[4]

    n_s = p_turb + c[K_K_SG] * level / c[K_P_NOM]
    if n_s < 0.0:
        n_s = 0.0
    elif n_s > 1.2:
        n_s = 1.2
    z = _slide_z(x_t, x_b, C_B, p_turb, level, c)
    ao = c[K_AO_NAT] + (-c[K_W_AX] * (c[K_Z_MAX] - z)
                        + c[K_W_XAX] * (x_b - x_t)) / c[K_GAMMA_AO]
    p_t = n_s * (1.0 + ao / 100.0)
    p_b = n_s * (1.0 - ao / 100.0)

    out[0] = c[K_LAMBDA_I] * (p_t - i_t)
    out[1] = c[K_LAMBDA_I] * (p_b - i_b)
    out[2] = (c[K_PROD_X] * p_t + c[K_PROD_I] * i_t
              - (c[K_LAMBDA_X] + c[K_SIGMA] * p_t) * x_t)
    out[3] = (c[K_PROD_X] * p_b + c[K_PROD_I] * i_b
              - (c[K_LAMBDA_X] + c[K_SIGMA] * p_b) * x_b)

    q_pos = q_eff if q_eff > 0.0 else 0.0
    q_neg = -q_eff if q_eff < 0.0 else 0.0
    out[4] = (-(q_pos * c[K_INV_MP]) * C_B
              + (q_neg * c[K_INV_MP]) * (c[K_C_STOCK] - C_B))

    out[5] = 0.0
    out[6] = 0.0
    out[7] = q_eff if q_eff >= 0.0 else -q_eff


@njit(cache=True)
def _p_interp(p0, pm, p1, h, s):
    """Turbine demand at offset ``s`` of a step of size ``h`` (piecewise
    linear through the three stage values)."""
    half = 0.5 * h
    if s <= half:
        return p0 + (pm - p0) * (s / half)
    return pm + (p1 - pm) * ((s - half) / half)


@njit(cache=True)
def _rk4_segment(y, q, p0, pm, p1, h, s0, dt, rate, c,
                 k1, k2, k3, k4, ytmp, yout):
    """One RK4 step over [s0, s0+dt] of a step of size h with frozen rod rate."""
    pa = _p_interp(p0, pm, p1, h, s0)
    pb = _p_interp(p0, pm, p1, h, s0 + 0.5 * dt)
    pc = _p_interp(p0, pm, p1, h, s0 + dt)
    _deriv(y, q, pa, rate, c, k1)
    for j in range(N_VARS):
        ytmp[j] = y[j] + 0.5 * dt * k1[j]
    _deriv(ytmp, q, pb, rate, c, k2)
    for j in range(N_VARS):
        ytmp[j] = y[j] + 0.5 * dt * k2[j]
    _deriv(ytmp, q, pb, rate, c, k3)
    for j in range(N_VARS):
        ytmp[j] = y[j] + dt * k3[j]
    _deriv(ytmp, q, pc, rate, c, k4)
    for j in range(N_VARS):
        yout[j] = y[j] + (dt / 6.0) * (k1[j] + 2.0 * k2[j]
                                       + 2.0 * k3[j] + k4[j])


@njit(cache=True)
def _slide_segment(y, q, p0, pm, p1, h, s0, dt, level, c,
                   k1, k2, k3, k4, ytmp, yout):
    """RK4 over [s0, s0+dt] on the sliding manifold; returns the end-of-
    segment manifold rod position (z is algebraic while sliding)."""
    pa = _p_interp(p0, pm, p1, h, s0)
    pb = _p_interp(p0, pm, p1, h, s0 + 0.5 * dt)
    pc = _p_interp(p0, pm, p1, h, s0 + dt)
    _deriv_slide(y, q, pa, level, c, k1)
    for j in range(N_VARS):
        ytmp[j] = y[j] + 0.5 * dt * k1[j]
    _deriv_slide(ytmp, q, pb, level, c, k2)
    for j in range(N_VARS):
        ytmp[j] = y[j] + 0.5 * dt * k2[j]
    _deriv_slide(ytmp, q, pb, level, c, k3)
    for j in range(N_VARS):
        ytmp[j] = y[j] + dt * k3[j]
    _deriv_slide(ytmp, q, pc, level, c, k4)
    for j in range(N_VARS):
        yout[j] = y[j] + (dt / 6.0) * (k1[j] + 2.0 * k2[j]
                                       + 2.0 * k3[j] + k4[j])
    yout[6] = level
    return _slide_z(yout[2], yout[3], yout[4], pc, level, c)


@njit(cache=True)
def _slide_rate_ok(z0, z1, dt, level, c):
    """Whether the manifold motion over ``dt`` stays inside the admissible
    Filippov rate interval and the mechanical range."""
    if z1 < 0.0 or z1 > c[K_Z_MAX]:
        return False
    rate = (z1 - z0) / dt
    v = c[K_V_ROD] / 60.0
    tol = 1e-12 + 1e-9 * v
    if level > 0.0:
        return -v - tol <= rate <= tol
    return -tol <= rate <= v + tol


@njit(cache=True)
def _hermite_first_crossing(v0, d0, v1, d1, dt, level):
    """Earliest s in (0, dt] where the cubic Hermite interpolant of
    (value, slope) data crosses ``level``; -1.0 when it does not."""
    prev_s = 0.0
    prev_f = v0 - level
    for i in range(1, 33):
        s = dt * (i / 32.0)
        u = s / dt
        h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u)
        h10 = u * (1.0 - u) * (1.0 - u)
        h01 = u * u * (3.0 - 2.0 * u)
        h11 = u * u * (u - 1.0)
        f = (h00 * v0 + h10 * dt * d0 + h01 * v1 + h11 * dt * d1) - level
        if prev_f == 0.0:
            return prev_s if prev_s > 0.0 else s * 1e-9
        if (prev_f < 0.0 and f >= 0.0) or (prev_f > 0.0 and f <= 0.0):
            lo = prev_s
            hi = s
            flo = prev_f
            for _ in range(_BISECT_ITERS):
                mid = 0.5 * (lo + hi)
                u = mid / dt
                h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u)
                h10 = u * (1.0 - u) * (1.0 - u)
                h01 = u * u * (3.0 - 2.0 * u)
                h11 = u * u * (u - 1.0)
                fm = (h00 * v0 + h10 * dt * d0 + h01 * v1 + h11 * dt * d1) - level
                if (flo < 0.0 and fm >= 0.0) or (flo > 0.0 and fm <= 0.0):
                    hi = mid
                else:
                    lo = mid
                    flo = fm
            return hi
        prev_s = s
        prev_f = f
    return -1.0


@njit(cache=True)
def _advance_step(y, q, p0, pm, p1, h, c, k1, k2, k3, k4, ytmp, ya,
                  dwell_level):
    """Advance one full step through free, event and sliding regimes.

    ``dwell_level`` is the deadband boundary the trajectory is sliding on
    (0 when free); it is carried across steps and returned.
    """
    s0 = 0.0
    events = 0
    while h - s0 > 1e-9:
        remaining = h - s0

        if dwell_level != 0.0:
            z0 = y[5]
            z1 = _slide_segment(y, q, p0, pm, p1, h, s0, remaining,
                                dwell_level, c, k1, k2, k3, k4, ytmp, ya)
            if _slide_rate_ok(z0, z1, remaining, dwell_level, c):
                for j in range(N_VARS):
                    y[j] = ya[j]
                y[5] = z1
                break
            # sliding exits inside this segment: bisect the feasible prefix
            lo = 0.0
            hi = remaining
            for _ in range(30):
                mid = 0.5 * (lo + hi)
                zm = _slide_segment(y, q, p0, pm, p1, h, s0, mid,
                                    dwell_level, c, k1, k2, k3, k4, ytmp, ya)
                if _slide_rate_ok(z0, zm, mid, dwell_level, c):
                    lo = mid
                else:
                    hi = mid
            if lo > 1e-9:
                zl = _slide_segment(y, q, p0, pm, p1, h, s0, lo,
                                    dwell_level, c, k1, k2, k3, k4, ytmp, ya)
                for j in range(N_VARS):
                    y[j] = ya[j]
                y[5] = zl
                s0 += lo
            dwell_level = 0.0
            events += 1
            continue

        rate = _rod_rate(y[6], y[5], c)
        _rk4_segment(y, q, p0, pm, p1, h, s0, remaining, rate, c,
                     k1, k2, k3, k4, ytmp, ya)
        if events >= _MAX_EVENTS_PER_STEP \
                or _rod_rate(ya[6], ya[5], c) == rate:
            for j in range(N_VARS):
                y[j] = ya[j]
            break
        # earliest trigger among deadband crossings and rod limits
        tau = -1.0
        level_hit = 0.0
        db = c[K_DEADBAND]
        for level in (db, -db):
            s = _hermite_first_crossing(y[6], k1[6], ya[6], k4[6],
                                        remaining, level)
            if s > 0.0 and (tau < 0.0 or s < tau):
                tau = s
                level_hit = level
        is_z_limit = False
        if rate != 0.0:
            z_lim = c[K_Z_MAX] if rate > 0.0 else 0.0
            s = (z_lim - y[5]) / rate
            if 0.0 < s <= remaining and (tau < 0.0 or s < tau):
                tau = s
                is_z_limit = True
        if tau < 0.0 or tau >= remaining:
            # no localizable trigger: accept the whole segment
            for j in range(N_VARS):
                y[j] = ya[j]
            break
        # advance exactly to the trigger with the pre-switch rate
        _rk4_segment(y, q, p0, pm, p1, h, s0, tau, rate, c,
                     k1, k2, k3, k4, ytmp, ya)
        for j in range(N_VARS):
            y[j] = ya[j]
        s0 += tau
        events += 1
        if not is_z_limit:
            # deadband crossing: try the Filippov sliding mode; entry is
            # admissible when the manifold is close and its motion stays
            # inside the rate interval (checked by the sliding branch)
            p_here = _p_interp(p0, pm, p1, h, s0)
            z_m = _slide_z(y[2], y[3], y[4], p_here, level_hit, c)
            if abs(z_m - y[5]) <= 1.0 and 0.0 <= z_m <= c[K_Z_MAX]:
                y[5] = z_m
                y[6] = level_hit
                dwell_level = level_hit
    # invariants: concentrations nonnegative, rods inside mechanical range
    for j in range(5):
        if y[j] < 0.0:
            y[j] = 0.0
    if y[5] < 0.0:
        y[5] = 0.0
    elif y[5] > c[K_Z_MAX]:
        y[5] = c[K_Z_MAX]
    return dwell_level


@njit(cache=True)
def integrate(y0, q_eff, p_half, h, c, dwell):
    """RK4-integrate a batch of input schedules.

    y0: (B, 8) initial states; q_eff: (B, K) per-step delayed flow;
    p_half: (B, 2K+1) turbine demand on the half-step grid; dwell: (B,)
    deadband sliding levels (0 when free), updated in place.
    Returns (B, K+1, 8).
    """
    B = q_eff.shape[0]
    K = q_eff.shape[1]
    Y = np.empty((B, K + 1, N_VARS))
    k1 = np.empty(N_VARS)
    k2 = np.empty(N_VARS)
    k3 = np.empty(N_VARS)
    k4 = np.empty(N_VARS)
    ytmp = np.empty(N_VARS)
    ya = np.empty(N_VARS)
    y = np.empty(N_VARS)
    for b in range(B):
        for j in range(N_VARS):
            y[j] = y0[b, j]
            Y[b, 0, j] = y[j]
        lvl = dwell[b]
        for k in range(K):
            lvl = _advance_step(y, q_eff[b, k], p_half[b, 2 * k],
                                p_half[b, 2 * k + 1], p_half[b, 2 * k + 2],
                                h, c, k1, k2, k3, k4, ytmp, ya, lvl)
            for j in range(N_VARS):
                Y[b, k + 1, j] = y[j]
        dwell[b] = lvl
    return Y
