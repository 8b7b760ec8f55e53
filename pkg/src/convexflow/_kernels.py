"""Jitted batch stepping for the run loop.

These kernels advance the RK4 iteration between diagnostic records without
per-step Python overhead. They implement exactly the math of the numpy
stepper in ``flow`` (same stencils, same stage structure, same step-size
rule); ``flow.run`` falls back to the numpy path when numba is missing or
when a configuration asks for it, and the test suite pins the two paths
against each other.

Status codes returned by the advance kernels:
    0  reached the target time
    1  convexity lost in a stage or a candidate state (not committed)
    2  non-finite candidate state (not committed)
    3  step budget exhausted
"""

from __future__ import annotations

import numpy as np
from numba import njit

SPEED_CODES = {"powersum": 0, "log1p": 1, "expm1": 2, "arctan": 3}
MODE_CODES = {"volume": 0, "area": 1, "standard": 2}

STATUS_OK = 0
STATUS_CONVEXITY = 1
STATUS_NONFINITE = 2
STATUS_BUDGET = 3


@njit(cache=True, inline="always")
def _phi(code, ks, cs, x):
    if code == 0:
        s = 0.0
        for i in range(ks.shape[0]):
            s += cs[i] * x ** ks[i]
        return s
    if code == 1:
        return np.log1p(x)
    if code == 2:
        return np.expm1(x)
    return np.arctan(x)


@njit(cache=True, inline="always")
def _dphi(code, ks, cs, x):
    if code == 0:
        s = 0.0
        for i in range(ks.shape[0]):
            s += cs[i] * ks[i] * x ** (ks[i] - 1.0)
        return s
    if code == 1:
        return 1.0 / (1.0 + x)
    if code == 2:
        return np.exp(x)
    return 1.0 / (1.0 + x * x)


@njit(cache=True, inline="always")
def _pad_periodic(u, p):
    n = u.shape[0]
    p[0] = u[n - 2]
    p[1] = u[n - 1]
    p[2:n + 2] = u
    p[n + 2] = u[0]
    p[n + 3] = u[1]


@njit(cache=True, inline="always")
def _pad_even(u, p):
    n = u.shape[0]
    p[0] = u[1]
    p[1] = u[0]
    p[2:n + 2] = u
    p[n + 2] = u[n - 1]
    p[n + 3] = u[n - 2]


@njit(cache=True)
def _stage_curve(u, p, dtheta, scode, ks, cs, mcode, k_out, want_ctrl):
    """One RK stage for plane curves: fills k_out = h - phi(H).

    Returns (ok, bad_index, bad_value, h, min_rho, max_diffusivity).
    """
    n = u.shape[0]
    _pad_periodic(u, p)
    inv12h2 = 1.0 / (12.0 * dtheta * dtheta)
    num = 0.0
    den = 0.0
    min_r = 1.0e300
    max_d = 0.0
    for j in range(n):
        d2 = (-p[j] + 16.0 * p[j + 1] - 30.0 * u[j] + 16.0 * p[j + 3] - p[j + 4]) * inv12h2
        rho = u[j] + d2
        if rho < min_r:
            min_r = rho
        if rho <= 0.0:
            return False, j, rho, 0.0, min_r, 0.0
        hj = 1.0 / rho
        pj = _phi(scode, ks, cs, hj)
        k_out[j] = pj
        if mcode == 0:
            num += pj * rho
            den += rho
        elif mcode == 1:
            num += pj
            den += 1.0
        if want_ctrl:
            d = _dphi(scode, ks, cs, hj) * hj * hj
            if d > max_d:
                max_d = d
    h = num / den if mcode != 2 else 0.0
    for j in range(n):
        k_out[j] = h - k_out[j]
    return True, -1, 0.0, h, min_r, max_d


@njit(cache=True)
def _stage_axisym(u, p, dtheta, sin_t, cot_t, scode, ks, cs, mcode, k_out, want_ctrl):
    """One RK stage for axisymmetric surfaces: fills k_out = h - phi(H)."""
    n = u.shape[0]
    _pad_even(u, p)
    inv12h2 = 1.0 / (12.0 * dtheta * dtheta)
    inv12h = 1.0 / (12.0 * dtheta)
    num = 0.0
    den = 0.0
    min_r = 1.0e300
    max_d = 0.0
    for j in range(n):
        a = p[j]
        b = p[j + 1]
        c = u[j]
        d = p[j + 3]
        e = p[j + 4]
        r1 = c + (-a + 16.0 * b - 30.0 * c + 16.0 * d - e) * inv12h2
        r2 = c + (a - 8.0 * b + 8.0 * d - e) * inv12h * cot_t[j]
        if r1 < min_r:
            min_r = r1
        if r2 < min_r:
            min_r = r2
        if r1 <= 0.0 or r2 <= 0.0:
            return False, j, min(r1, r2), 0.0, min_r, 0.0
        i1 = 1.0 / r1
        i2 = 1.0 / r2
        hj = i1 + i2
        pj = _phi(scode, ks, cs, hj)
        wj = r1 * r2 * sin_t[j]
        k_out[j] = pj
        if mcode == 0:
            num += pj * wj
            den += wj
        elif mcode == 1:
            hw = hj * wj
            num += pj * hw
            den += hw
        if want_ctrl:
            d_loc = _dphi(scode, ks, cs, hj) * (i1 * i1 + i2 * i2)
            if d_loc > max_d:
                max_d = d_loc
    h = num / den if mcode != 2 else 0.0
    for j in range(n):
        k_out[j] = h - k_out[j]
    return True, -1, 0.0, h, min_r, max_d


@njit(cache=True)
def advance(u, t, is_axisym, dtheta, sin_t, cot_t, sigma, scode, ks, cs, mcode,
            t_target, t_max, max_steps):
    """Advance until t >= t_target; u is updated in place on committed steps.

    Returns (t, steps, last_dt, min_radius, min_h, status, bad_index,
    bad_value). On a non-OK status u and t hold the last committed state.
    """
    n = u.shape[0]
    p = np.empty(n + 4)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    u_stage = np.empty(n)
    u_new = np.empty(n)

    steps = 0
    last_dt = 0.0
    min_radius = 1.0e300
    min_h = 1.0e300

    if is_axisym:
        ok, bad_j, bad_v, h1, mr, max_d = _stage_axisym(
            u, p, dtheta, sin_t, cot_t, scode, ks, cs, mcode, k1, True)
    else:
        ok, bad_j, bad_v, h1, mr, max_d = _stage_curve(
            u, p, dtheta, scode, ks, cs, mcode, k1, True)
    if not ok:
        return t, steps, last_dt, min_radius, min_h, STATUS_CONVEXITY, bad_j, bad_v
    if mr < min_radius:
        min_radius = mr

    while t < t_target:
        if steps >= max_steps:
            return t, steps, last_dt, min_radius, min_h, STATUS_BUDGET, -1, 0.0
        dt = sigma * dtheta * dtheta / max_d
        if dt > t_max - t:
            dt = t_max - t

        ok = True
        bad_j = -1
        bad_v = 0.0
        for stage in range(3):
            if stage == 0:
                coeff, k_in, k_out = 0.5 * dt, k1, k2
            elif stage == 1:
                coeff, k_in, k_out = 0.5 * dt, k2, k3
            else:
                coeff, k_in, k_out = dt, k3, k4
            for j in range(n):
                u_stage[j] = u[j] + coeff * k_in[j]
            if is_axisym:
                ok, bad_j, bad_v, hs, mr, _ = _stage_axisym(
                    u_stage, p, dtheta, sin_t, cot_t, scode, ks, cs, mcode, k_out, False)
            else:
                ok, bad_j, bad_v, hs, mr, _ = _stage_curve(
                    u_stage, p, dtheta, scode, ks, cs, mcode, k_out, False)
            if not ok:
                return t, steps, last_dt, min_radius, min_h, STATUS_CONVEXITY, bad_j, bad_v
            if mr < min_radius:
                min_radius = mr

        finite = True
        for j in range(n):
            u_new[j] = u[j] + (dt / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            if not np.isfinite(u_new[j]):
                finite = False
        if not finite:
            return t, steps, last_dt, min_radius, min_h, STATUS_NONFINITE, -1, 0.0

        # validate the candidate; its stage data doubles as next step's k1
        if is_axisym:
            ok, bad_j, bad_v, h_next, mr, max_d = _stage_axisym(
                u_new, p, dtheta, sin_t, cot_t, scode, ks, cs, mcode, k1, True)
        else:
            ok, bad_j, bad_v, h_next, mr, max_d = _stage_curve(
                u_new, p, dtheta, scode, ks, cs, mcode, k1, True)
        if not ok:
            return t, steps, last_dt, min_radius, min_h, STATUS_CONVEXITY, bad_j, bad_v
        if mr < min_radius:
            min_radius = mr

        for j in range(n):
            u[j] = u_new[j]
        t += dt
        steps += 1
        last_dt = dt
        if h1 < min_h:
            min_h = h1
        h1 = h_next

    return t, steps, last_dt, min_radius, min_h, STATUS_OK, -1, 0.0
