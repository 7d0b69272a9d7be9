"""Compiled numerical cores.

Everything performance-critical lives here as nopython-compiled functions:
analytic velocity kernels, the embedded Dormand-Prince 5(4) steppers (time
domain and arclength domain), a one-sided Jacobi SVD for 3x3 matrices, and
the direction-line integrator whose right-hand side is itself a 12-variable
initial value problem.

No threading, no fastmath: results are bit-reproducible for identical inputs.
"""

from __future__ import annotations

import numpy as np
from numba import njit

TWO_PI = 2.0 * np.pi

# field kind codes (params layout documented in fields.py)
KIND_CATS_EYE = 0
KIND_STEADY_ABC = 1
KIND_APERIODIC_ABC = 2
KIND_AFFINE = 3

# integrator status codes
OK = 0
STEP_UNDERFLOW = 1
NONFINITE = 2
DEGENERATE_GAP = 3

# line termination codes (order matches directionfield.TERMINATION_REASONS)
TERM_REACHED_SMAX = 0
TERM_DEGENERATE_GAP = 1
TERM_STEP_UNDERFLOW = 2
TERM_LEFT_DOMAIN = 3

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = 9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                                -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)

_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_SAFETY = 0.9


@njit(cache=True)
def wrap_to_period(v, period):
    w = v - period * np.floor(v / period)
    if w >= period:
        w -= period
    if w < 0.0:
        w += period
    return w


@njit(cache=True)
def eval_u(kind, p, x0, x1, x2, t, out):
    """Velocity u(x, t). Periodic axes are wrapped before evaluation."""
    if kind == KIND_CATS_EYE:
        c = p[0]
        q = np.sqrt(c * c - 1.0)
        x = wrap_to_period(x0, TWO_PI)
        d = c * np.cosh(x1) + q * np.cos(x)
        out[0] = c * np.sinh(x1) / d
        out[1] = q * np.sin(x) / d
        out[2] = 1.0 / d
    elif kind == KIND_STEADY_ABC or kind == KIND_APERIODIC_ABC:
        a = p[0]
        b = p[1]
        c = p[2]
        if kind == KIND_APERIODIC_ABC:
            mod = p[3] * np.tanh(p[4] * t)
            b = b + b * mod * np.cos((p[5] * t) ** 2)
            c = c + c * mod * np.sin((p[6] * t) ** 2)
        x = wrap_to_period(x0, TWO_PI)
        y = wrap_to_period(x1, TWO_PI)
        z = wrap_to_period(x2, TWO_PI)
        out[0] = a * np.sin(z) + c * np.cos(y)
        out[1] = b * np.sin(x) + a * np.cos(z)
        out[2] = c * np.sin(y) + b * np.cos(x)
    else:  # KIND_AFFINE
        out[0] = p[0] * x0 + p[1] * x1 + p[2] * x2 + p[9]
        out[1] = p[3] * x0 + p[4] * x1 + p[5] * x2 + p[10]
        out[2] = p[6] * x0 + p[7] * x1 + p[8] * x2 + p[11]


@njit(cache=True)
def eval_u_du(kind, p, x0, x1, x2, t, out_u, out_du):
    """Velocity and its spatial Jacobian, sharing transcendental evaluations.

    out_du is row-major length 9: du[i,j] = out_du[3*i + j].
    """
    if kind == KIND_CATS_EYE:
        c = p[0]
        q = np.sqrt(c * c - 1.0)
        x = wrap_to_period(x0, TWO_PI)
        sx = np.sin(x)
        cx = np.cos(x)
        shy = np.sinh(x1)
        chy = np.cosh(x1)
        d = c * chy + q * cx
        inv = 1.0 / d
        inv2 = inv * inv
        out_u[0] = c * shy * inv
        out_u[1] = q * sx * inv
        out_u[2] = inv
        out_du[0] = c * shy * q * sx * inv2
        out_du[1] = c * chy * inv - (c * shy) * (c * shy) * inv2
        out_du[2] = 0.0
        out_du[3] = q * cx * inv + (q * sx) * (q * sx) * inv2
        out_du[4] = -q * sx * c * shy * inv2
        out_du[5] = 0.0
        out_du[6] = q * sx * inv2
        out_du[7] = -c * shy * inv2
        out_du[8] = 0.0
    elif kind == KIND_STEADY_ABC or kind == KIND_APERIODIC_ABC:
        a = p[0]
        b = p[1]
        c = p[2]
        if kind == KIND_APERIODIC_ABC:
            mod = p[3] * np.tanh(p[4] * t)
            b = b + b * mod * np.cos((p[5] * t) ** 2)
            c = c + c * mod * np.sin((p[6] * t) ** 2)
        x = wrap_to_period(x0, TWO_PI)
        y = wrap_to_period(x1, TWO_PI)
        z = wrap_to_period(x2, TWO_PI)
        sx = np.sin(x)
        cx = np.cos(x)
        sy = np.sin(y)
        cy = np.cos(y)
        sz = np.sin(z)
        cz = np.cos(z)
        out_u[0] = a * sz + c * cy
        out_u[1] = b * sx + a * cz
        out_u[2] = c * sy + b * cx
        out_du[0] = 0.0
        out_du[1] = -c * sy
        out_du[2] = a * cz
        out_du[3] = b * cx
        out_du[4] = 0.0
        out_du[5] = -a * sz
        out_du[6] = -b * sx
        out_du[7] = c * cy
        out_du[8] = 0.0
    else:  # KIND_AFFINE
        out_u[0] = p[0] * x0 + p[1] * x1 + p[2] * x2 + p[9]
        out_u[1] = p[3] * x0 + p[4] * x1 + p[5] * x2 + p[10]
        out_u[2] = p[6] * x0 + p[7] * x1 + p[8] * x2 + p[11]
        for i in range(9):
            out_du[i] = p[i]


@njit(cache=True)
def _rhs3(kind, p, y, t, out):
    eval_u(kind, p, y[0], y[1], y[2], t, out)


@njit(cache=True)
def _rhs12(kind, p, y, t, out, du):
    """Trajectory plus equation of variations: d/dt DF = Du(x(t), t) DF."""
    eval_u_du(kind, p, y[0], y[1], y[2], t, out, du)
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for m in range(3):
                acc += du[3 * i + m] * y[3 + 3 * m + j]
            out[3 + 3 * i + j] = acc


@njit(cache=True)
def _err_norm(n, y, ynew, yerr, tol):
    s = 0.0
    for i in range(n):
        sc = tol + tol * max(abs(y[i]), abs(ynew[i]))
        e = yerr[i] / sc
        s += e * e
    return np.sqrt(s / n)


@njit(cache=True)
def _initial_step(n, kind, p, y, t, f0, direction, tol, span):
    """Norm-based first step guess (standard embedded-RK heuristic)."""
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = tol + tol * abs(y[i])
        d0 += (y[i] / sc) ** 2
        d1 += (f0[i] / sc) ** 2
    d0 = np.sqrt(d0 / n)
    d1 = np.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    y1 = np.empty(n)
    f1 = np.empty(n)
    du = np.empty(9)
    for i in range(n):
        y1[i] = y[i] + h0 * direction * f0[i]
    if n == 3:
        _rhs3(kind, p, y1, t + h0 * direction, f1)
    else:
        _rhs12(kind, p, y1, t + h0 * direction, f1, du)
    d2 = 0.0
    for i in range(n):
        sc = tol + tol * abs(y[i])
        d2 += ((f1[i] - f0[i]) / sc) ** 2
    d2 = np.sqrt(d2 / n) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(min(100.0 * h0, h1), span)


@njit(cache=True)
def _dopri_core(n, kind, p, y, t0, t1, tol, hmax, emit, win_lo, win_hi,
                axis, value, eps_band, axis_period, buf):
    """Shared Dormand-Prince 5(4) loop for the 3- and 12-variable systems.

    Mutates y in place to the final state. When ``emit`` is nonzero, accepted
    step points whose stamp lies in [win_lo, win_hi] and whose ``axis``
    coordinate falls within eps_band of ``value`` (modulo axis_period when
    periodic) are appended to ``buf`` as rows (stamp, x, y, z); the possibly
    reallocated buffer and fill count are returned.

    Returns (status, t_reached, nsteps, nrej, nemit, buf).
    """
    direction = 1.0 if t1 >= t0 else -1.0
    span = abs(t1 - t0)
    t = t0
    nsteps = 0
    nrej = 0
    nemit = 0
    k = np.empty((7, n))
    ytmp = np.empty(n)
    ynew = np.empty(n)
    yerr = np.empty(n)
    du = np.empty(9)

    if span == 0.0:
        return OK, t, 0, 0, 0, buf

    if n == 3:
        _rhs3(kind, p, y, t, k[0])
    else:
        _rhs12(kind, p, y, t, k[0], du)
    h = _initial_step(n, kind, p, y, t, k[0], direction, tol, span)
    if h > hmax:
        h = hmax
    hmin = 1e-14 * max(1.0, span)

    while direction * (t1 - t) > 0.0:
        if h > direction * (t1 - t):
            h = direction * (t1 - t)
        if h < hmin:
            return STEP_UNDERFLOW, t, nsteps, nrej, nemit, buf
        hs = direction * h

        for i in range(n):
            ytmp[i] = y[i] + hs * _A21 * k[0, i]
        if n == 3:
            _rhs3(kind, p, ytmp, t + _C2 * hs, k[1])
        else:
            _rhs12(kind, p, ytmp, t + _C2 * hs, k[1], du)
        for i in range(n):
            ytmp[i] = y[i] + hs * (_A31 * k[0, i] + _A32 * k[1, i])
        if n == 3:
            _rhs3(kind, p, ytmp, t + _C3 * hs, k[2])
        else:
            _rhs12(kind, p, ytmp, t + _C3 * hs, k[2], du)
        for i in range(n):
            ytmp[i] = y[i] + hs * (_A41 * k[0, i] + _A42 * k[1, i] + _A43 * k[2, i])
        if n == 3:
            _rhs3(kind, p, ytmp, t + _C4 * hs, k[3])
        else:
            _rhs12(kind, p, ytmp, t + _C4 * hs, k[3], du)
        for i in range(n):
            ytmp[i] = y[i] + hs * (_A51 * k[0, i] + _A52 * k[1, i] + _A53 * k[2, i] + _A54 * k[3, i])
        if n == 3:
            _rhs3(kind, p, ytmp, t + _C5 * hs, k[4])
        else:
            _rhs12(kind, p, ytmp, t + _C5 * hs, k[4], du)
        for i in range(n):
            ytmp[i] = y[i] + hs * (_A61 * k[0, i] + _A62 * k[1, i] + _A63 * k[2, i]
                                   + _A64 * k[3, i] + _A65 * k[4, i])
        if n == 3:
            _rhs3(kind, p, ytmp, t + hs, k[5])
        else:
            _rhs12(kind, p, ytmp, t + hs, k[5], du)
        for i in range(n):
            ynew[i] = y[i] + hs * (_B1 * k[0, i] + _B3 * k[2, i] + _B4 * k[3, i]
                                   + _B5 * k[4, i] + _B6 * k[5, i])
        if n == 3:
            _rhs3(kind, p, ynew, t + hs, k[6])
        else:
            _rhs12(kind, p, ynew, t + hs, k[6], du)
        for i in range(n):
            yerr[i] = hs * (_E1 * k[0, i] + _E3 * k[2, i] + _E4 * k[3, i]
                            + _E5 * k[4, i] + _E6 * k[5, i] + _E7 * k[6, i])

        ok = True
        for i in range(n):
            if not np.isfinite(ynew[i]):
                ok = False
        if not ok:
            return NONFINITE, t, nsteps, nrej, nemit, buf

        err = _err_norm(n, y, ynew, yerr, tol)
        if err <= 1.0:
            t = t + hs
            for i in range(n):
                y[i] = ynew[i]
                k[0, i] = k[6, i]  # FSAL
            nsteps += 1
            if emit != 0 and win_lo <= t and t <= win_hi:
                coord = y[axis]
                if axis_period > 0.0:
                    coord = wrap_to_period(coord, axis_period)
                    dist = abs(coord - value)
                    hit = dist <= eps_band or axis_period - dist <= eps_band
                else:
                    hit = abs(coord - value) <= eps_band
                if hit:
                    if nemit >= buf.shape[0]:
                        grown = np.empty((2 * buf.shape[0], 4))
                        grown[:nemit, :] = buf[:nemit, :]
                        buf = grown
                    buf[nemit, 0] = t
                    buf[nemit, 1] = y[0]
                    buf[nemit, 2] = y[1]
                    buf[nemit, 3] = y[2]
                    nemit += 1
            if err == 0.0:
                fac = _MAX_FACTOR
            else:
                fac = min(_MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * err ** -0.2))
            h = min(h * fac, hmax)
        else:
            nrej += 1
            h = h * max(_MIN_FACTOR, _SAFETY * err ** -0.2)

    return OK, t, nsteps, nrej, nemit, buf


@njit(cache=True)
def advect_core(kind, p, x, t0, t1, tol, hmax):
    """Integrate the trajectory only. Returns (status, x1, t_reached, nsteps, nrej)."""
    y = x.copy()
    dummy = np.empty((1, 4))
    status, t, nsteps, nrej, _, _ = _dopri_core(
        3, kind, p, y, t0, t1, tol, hmax, 0, 0.0, -1.0, 2, 0.0, 0.0, 0.0, dummy)
    return status, y, t, nsteps, nrej


@njit(cache=True)
def advect_band_core(kind, p, x, t0, t1, tol, hmax, win_lo, win_hi,
                     axis, value, eps_band, axis_period):
    """Trajectory integration that dumps accepted step points hitting a
    section band inside a time window. Returns (status, points(n,4), stats)."""
    y = x.copy()
    buf = np.empty((256, 4))
    status, t, nsteps, nrej, nemit, buf = _dopri_core(
        3, kind, p, y, t0, t1, tol, hmax, 1, win_lo, win_hi,
        axis, value, eps_band, axis_period, buf)
    return status, buf[:nemit, :].copy(), t, nsteps, nrej


@njit(cache=True)
def flow_df_core(kind, p, x, ta, tb, tol, hmax):
    """Coupled 12-variable solve: position and deformation gradient.

    Returns (status, y12, t_reached, nsteps, nrej) with y12[3:] the row-major
    gradient of the flow map from ta to tb, started from the identity.
    """
    y = np.empty(12)
    y[0] = x[0]
    y[1] = x[1]
    y[2] = x[2]
    for i in range(9):
        y[3 + i] = 0.0
    y[3] = 1.0
    y[7] = 1.0
    y[11] = 1.0
    dummy = np.empty((1, 4))
    status, t, nsteps, nrej, _, _ = _dopri_core(
        12, kind, p, y, ta, tb, tol, hmax, 0, 0.0, -1.0, 2, 0.0, 0.0, 0.0, dummy)
    return status, y, t, nsteps, nrej


@njit(cache=True)
def svd3_core(a):
    """One-sided Jacobi SVD of a 3x3 matrix.

    Returns (s, xi, eta): singular values ascending, right singular vectors
    as rows of xi, left singular vectors as rows of eta (a @ xi[i] = s[i] * eta[i]).
    Sign convention is whatever the rotations produce; callers canonicalize.
    """
    g = np.empty((3, 3))
    v = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            g[i, j] = a[i, j]
            v[i, j] = 1.0 if i == j else 0.0

    for _ in range(30):
        off = 0.0
        for i in range(2):
            for j in range(i + 1, 3):
                alpha = g[0, i] * g[0, i] + g[1, i] * g[1, i] + g[2, i] * g[2, i]
                beta = g[0, j] * g[0, j] + g[1, j] * g[1, j] + g[2, j] * g[2, j]
                gamma = g[0, i] * g[0, j] + g[1, i] * g[1, j] + g[2, i] * g[2, j]
                denom = np.sqrt(alpha * beta)
                if denom > 0.0:
                    ratio = abs(gamma) / denom
                else:
                    ratio = 0.0
                if ratio > off:
                    off = ratio
                if ratio <= 1e-15 or gamma == 0.0:
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                if zeta >= 0.0:
                    tau = 1.0 / (zeta + np.sqrt(1.0 + zeta * zeta))
                else:
                    tau = -1.0 / (-zeta + np.sqrt(1.0 + zeta * zeta))
                cs = 1.0 / np.sqrt(1.0 + tau * tau)
                sn = cs * tau
                for r in range(3):
                    gi = g[r, i]
                    gj = g[r, j]
                    g[r, i] = cs * gi - sn * gj
                    g[r, j] = sn * gi + cs * gj
                    vi = v[r, i]
                    vj = v[r, j]
                    v[r, i] = cs * vi - sn * vj
                    v[r, j] = sn * vi + cs * vj
        if off <= 1e-15:
            break

    s = np.empty(3)
    for j in range(3):
        s[j] = np.sqrt(g[0, j] * g[0, j] + g[1, j] * g[1, j] + g[2, j] * g[2, j])

    # stable ascending order of the three columns
    i0, i1, i2 = 0, 1, 2
    if s[i0] > s[i1]:
        i0, i1 = i1, i0
    if s[i1] > s[i2]:
        i1, i2 = i2, i1
    if s[i0] > s[i1]:
        i0, i1 = i1, i0

    sv = np.empty(3)
    xi = np.empty((3, 3))
    eta = np.empty((3, 3))
    order = (i0, i1, i2)
    for rank in range(3):
        col = order[rank]
        sv[rank] = s[col]
        for r in range(3):
            xi[rank, r] = v[r, col]
        if s[col] > 0.0:
            for r in range(3):
                eta[rank, r] = g[r, col] / s[col]
        else:
            # rank-deficient input: fall back to the cross product of the others
            a0 = order[(rank + 1) % 3]
            a1 = order[(rank + 2) % 3]
            ex = g[1, a0] * g[2, a1] - g[2, a0] * g[1, a1]
            ey = g[2, a0] * g[0, a1] - g[0, a0] * g[2, a1]
            ez = g[0, a0] * g[1, a1] - g[1, a0] * g[0, a1]
            nrm = np.sqrt(ex * ex + ey * ey + ez * ez)
            if nrm > 0.0:
                eta[rank, 0] = ex / nrm
                eta[rank, 1] = ey / nrm
                eta[rank, 2] = ez / nrm
            else:
                eta[rank, 0] = 1.0 if rank == 0 else 0.0
                eta[rank, 1] = 1.0 if rank == 1 else 0.0
                eta[rank, 2] = 1.0 if rank == 2 else 0.0
    return sv, xi, eta


@njit(cache=True)
def dir_eval_core(kind, p, q, ta, tb, tol_flow, blend_eps, partner_idx,
                  ref_d, ref_p, gap_rtol):
    """One oriented direction-field evaluation at point q.

    Solves the 12-variable system over [ta, tb], takes the intermediate right
    singular vector of the resulting gradient, aligns it with ref_d, and
    optionally blends in the partner singular vector aligned with ref_p.

    Returns (status, d, base, partner, sigma): the unit direction, the aligned
    base and partner vectors (partner is zeros when unused), singular values.
    """
    zero = np.zeros(3)
    status, y, _, _, _ = flow_df_core(kind, p, q, ta, tb, tol_flow, np.inf)
    if status != OK:
        return status, zero, zero, zero, zero
    df = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            df[i, j] = y[3 + 3 * i + j]
    sv, xi, _ = svd3_core(df)
    gap = min(sv[1] - sv[0], sv[2] - sv[1])
    if gap <= gap_rtol * sv[2]:
        return DEGENERATE_GAP, zero, zero, zero, sv

    b = np.empty(3)
    dot = xi[1, 0] * ref_d[0] + xi[1, 1] * ref_d[1] + xi[1, 2] * ref_d[2]
    sign = -1.0 if dot < 0.0 else 1.0
    for i in range(3):
        b[i] = sign * xi[1, i]

    pv = np.zeros(3)
    d = np.empty(3)
    if blend_eps != 0.0:
        dotp = (xi[partner_idx, 0] * ref_p[0] + xi[partner_idx, 1] * ref_p[1]
                + xi[partner_idx, 2] * ref_p[2])
        signp = -1.0 if dotp < 0.0 else 1.0
        for i in range(3):
            pv[i] = signp * xi[partner_idx, i]
            d[i] = b[i] + blend_eps * pv[i]
        nrm = np.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
        for i in range(3):
            d[i] /= nrm
    else:
        for i in range(3):
            d[i] = b[i]
    return OK, d, b, pv, sv


@njit(cache=True)
def line_core(kind, p, seed, init_dir, init_ref_p, ta, tb, tol_flow, tol_line,
              h_max, s_max, blend_eps, partner_idx, gap_rtol,
              rec_lo, rec_hi, stride, bounds_lo, bounds_hi):
    """Arclength integration of the oriented direction field from ``seed``.

    Dormand-Prince 5(4) with FSAL; every stage evaluation is a full
    12-variable flow-map solve. Orientation references are frozen during a
    step and advanced to the step's final stage on acceptance.

    Returns (term, s_arr, verts, s_end, x_end, nsteps, nrej, flow_steps,
    max_chord_dev) where verts rows are positions recorded for
    s in [rec_lo, rec_hi] at least ``stride`` apart in arclength.
    """
    x = seed.copy()
    ref_d = init_dir.copy()
    ref_p = init_ref_p.copy()
    s = 0.0
    nsteps = 0
    nrej = 0
    flow_solves = 0
    max_dev = 0.0

    cap = 1024
    svals = np.empty(cap)
    verts = np.empty((cap, 3))
    nrec = 0
    last_rec = -np.inf
    if rec_lo <= 0.0 and 0.0 <= rec_hi:
        svals[0] = 0.0
        verts[0, :] = x
        nrec = 1
        last_rec = 0.0

    k = np.empty((7, 3))
    ytmp = np.empty(3)
    ynew = np.empty(3)
    yerr = np.empty(3)

    status, d, b, pv, _ = dir_eval_core(kind, p, x, ta, tb, tol_flow, blend_eps,
                                        partner_idx, ref_d, ref_p, gap_rtol)
    flow_solves += 1
    if status == DEGENERATE_GAP:
        return (TERM_DEGENERATE_GAP, svals[:nrec].copy(), verts[:nrec].copy(),
                s, x, nsteps, nrej, flow_solves, max_dev)
    if status != OK:
        return (TERM_STEP_UNDERFLOW, svals[:nrec].copy(), verts[:nrec].copy(),
                s, x, nsteps, nrej, flow_solves, max_dev)
    k[0, :] = d
    ref_d[:] = b
    if blend_eps != 0.0:
        ref_p[:] = pv

    h = min(h_max, 0.01 * max(1.0, s_max))
    hmin = 1e-12

    while s < s_max:
        if h > s_max - s:
            h = s_max - s
        if h < hmin:
            return (TERM_STEP_UNDERFLOW, svals[:nrec].copy(), verts[:nrec].copy(),
                    s, x, nsteps, nrej, flow_solves, max_dev)

        fail = 0
        for i in range(3):
            ytmp[i] = x[i] + h * _A21 * k[0, i]
        status, d, b1, p1, _ = dir_eval_core(kind, p, ytmp, ta, tb, tol_flow,
                                             blend_eps, partner_idx, ref_d, ref_p, gap_rtol)
        flow_solves += 1
        if status != OK:
            fail = status
        else:
            k[1, :] = d
            for i in range(3):
                ytmp[i] = x[i] + h * (_A31 * k[0, i] + _A32 * k[1, i])
            status, d, b1, p1, _ = dir_eval_core(kind, p, ytmp, ta, tb, tol_flow,
                                                 blend_eps, partner_idx, ref_d, ref_p, gap_rtol)
            flow_solves += 1
            if status != OK:
                fail = status
            else:
                k[2, :] = d
                for i in range(3):
                    ytmp[i] = x[i] + h * (_A41 * k[0, i] + _A42 * k[1, i] + _A43 * k[2, i])
                status, d, b1, p1, _ = dir_eval_core(kind, p, ytmp, ta, tb, tol_flow,
                                                     blend_eps, partner_idx, ref_d, ref_p, gap_rtol)
                flow_solves += 1
                if status != OK:
                    fail = status
                else:
                    k[3, :] = d
                    for i in range(3):
                        ytmp[i] = x[i] + h * (_A51 * k[0, i] + _A52 * k[1, i]
                                              + _A53 * k[2, i] + _A54 * k[3, i])
                    status, d, b1, p1, _ = dir_eval_core(kind, p, ytmp, ta, tb, tol_flow,
                                                         blend_eps, partner_idx, ref_d, ref_p, gap_rtol)
                    flow_solves += 1
                    if status != OK:
                        fail = status
                    else:
                        k[4, :] = d
                        for i in range(3):
                            ytmp[i] = x[i] + h * (_A61 * k[0, i] + _A62 * k[1, i] + _A63 * k[2, i]
                                                  + _A64 * k[3, i] + _A65 * k[4, i])
                        status, d, b1, p1, _ = dir_eval_core(kind, p, ytmp, ta, tb, tol_flow,
                                                             blend_eps, partner_idx, ref_d, ref_p, gap_rtol)
                        flow_solves += 1
                        if status != OK:
                            fail = status
                        else:
                            k[5, :] = d

        if fail != 0:
            term = TERM_DEGENERATE_GAP if fail == DEGENERATE_GAP else TERM_STEP_UNDERFLOW
            return (term, svals[:nrec].copy(), verts[:nrec].copy(),
                    s, x, nsteps, nrej, flow_solves, max_dev)

        for i in range(3):
            ynew[i] = x[i] + h * (_B1 * k[0, i] + _B3 * k[2, i] + _B4 * k[3, i]
                                  + _B5 * k[4, i] + _B6 * k[5, i])
        status, d, b7, p7, _ = dir_eval_core(kind, p, ynew, ta, tb, tol_flow,
                                             blend_eps, partner_idx, ref_d, ref_p, gap_rtol)
        flow_solves += 1
        if status != OK:
            term = TERM_DEGENERATE_GAP if status == DEGENERATE_GAP else TERM_STEP_UNDERFLOW
            return (term, svals[:nrec].copy(), verts[:nrec].copy(),
                    s, x, nsteps, nrej, flow_solves, max_dev)
        k[6, :] = d
        for i in range(3):
            yerr[i] = h * (_E1 * k[0, i] + _E3 * k[2, i] + _E4 * k[3, i]
                           + _E5 * k[4, i] + _E6 * k[5, i] + _E7 * k[6, i])

        err = _err_norm(3, x, ynew, yerr, tol_line)
        if err <= 1.0:
            dx0 = ynew[0] - x[0]
            dx1 = ynew[1] - x[1]
            dx2 = ynew[2] - x[2]
            dev = abs(np.sqrt(dx0 * dx0 + dx1 * dx1 + dx2 * dx2) / h - 1.0)
            if dev > max_dev:
                max_dev = dev
            s += h
            for i in range(3):
                x[i] = ynew[i]
                k[0, i] = k[6, i]  # FSAL
            ref_d[:] = b7
            if blend_eps != 0.0:
                ref_p[:] = p7
            nsteps += 1

            if rec_lo <= s and s <= rec_hi and s - last_rec >= stride:
                if nrec >= cap:
                    cap *= 2
                    sv2 = np.empty(cap)
                    vv2 = np.empty((cap, 3))
                    sv2[:nrec] = svals[:nrec]
                    vv2[:nrec, :] = verts[:nrec, :]
                    svals = sv2
                    verts = vv2
                svals[nrec] = s
                verts[nrec, :] = x
                nrec += 1
                last_rec = s

            out = False
            for i in range(3):
                if x[i] < bounds_lo[i] or x[i] > bounds_hi[i]:
                    out = True
            if out:
                return (TERM_LEFT_DOMAIN, svals[:nrec].copy(), verts[:nrec].copy(),
                        s, x, nsteps, nrej, flow_solves, max_dev)

            if err == 0.0:
                fac = _MAX_FACTOR
            else:
                fac = min(_MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * err ** -0.2))
            h = min(h * fac, h_max)
        else:
            nrej += 1
            h = h * max(_MIN_FACTOR, _SAFETY * err ** -0.2)

    return (TERM_REACHED_SMAX, svals[:nrec].copy(), verts[:nrec].copy(),
            s, x, nsteps, nrej, flow_solves, max_dev)
