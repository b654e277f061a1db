"""Compiled embedded Runge-Kutta 8(5,3) stepper.

The Butcher tableau and the two error estimators are the Dormand-Prince
coefficients shipped with scipy; the stepping loop is compiled with numba so
that long shots (thousands of steps at tolerance 1e-13) stay cheap.

The stepper lands exactly on every requested output abscissa instead of using
dense output, and can renormalise the state of a homogeneous (linear) system
whenever its largest component exceeds a threshold, keeping a running
log-scale.
"""

import numpy as np
from numba import njit
from scipy.integrate._ivp import dop853_coefficients as _dop

N_STAGES = _dop.N_STAGES
A = np.ascontiguousarray(_dop.A[:N_STAGES, :N_STAGES])
B = np.ascontiguousarray(_dop.B)
C = np.ascontiguousarray(_dop.C[:N_STAGES])
E3 = np.ascontiguousarray(_dop.E3)
E5 = np.ascontiguousarray(_dop.E5)

OK = 0
STEP_COLLAPSE = 1
NONFINITE = 2
MAX_STEPS = 3

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
ERR_EXPONENT = -1.0 / 8.0


@njit(cache=True)
def _error_norm(K, h, scale, n):
    err5 = 0.0
    err3 = 0.0
    for i in range(n):
        e5 = 0.0
        e3 = 0.0
        for j in range(N_STAGES + 1):
            e5 += K[j, i] * E5[j]
            e3 += K[j, i] * E3[j]
        e5 /= scale[i]
        e3 /= scale[i]
        err5 += e5 * e5
        err3 += e3 * e3
    if err5 == 0.0 and err3 == 0.0:
        return 0.0
    denom = err5 + 0.01 * err3
    return abs(h) * err5 / np.sqrt(denom * n)


@njit(cache=True)
def _initial_step(rhs, p, t0, y0, f0, rtol, atol, direction):
    n = y0.shape[0]
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + abs(y0[i]) * rtol
        d0 += (y0[i] / sc) ** 2
        d1 += (f0[i] / sc) ** 2
    d0 = np.sqrt(d0 / n)
    d1 = np.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    y1 = y0 + direction * h0 * f0
    f1 = rhs(t0 + direction * h0, y1, p)
    d2 = 0.0
    for i in range(n):
        sc = atol + abs(y0[i]) * rtol
        d2 += ((f1[i] - f0[i]) / sc) ** 2
    d2 = np.sqrt(d2 / n) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 8.0)
    return min(100.0 * h0, h1)


@njit(cache=True)
def integrate(rhs, p, t0, y0, t_out, rtol, atol, rescale, rescale_threshold, max_steps):
    """Integrate y' = rhs(t, y, p) from t0 through the increasing abscissae t_out.

    With ``rescale`` set, the state is divided by a power of e whenever its
    largest component exceeds ``rescale_threshold``; only valid for linear
    homogeneous systems. Returns (Y, log_scale, status, t_reached, n_steps);
    rows of Y beyond a failure point are left as NaN.
    """
    n = y0.shape[0]
    m = t_out.shape[0]
    Y = np.full((m, n), np.nan)
    LS = np.full(m, np.nan)
    K = np.empty((N_STAGES + 1, n))
    scale = np.empty(n)

    t = t0
    y = y0.copy()
    log_scale = 0.0
    f = rhs(t, y, p)
    K[0] = f
    h = _initial_step(rhs, p, t, y, f, rtol, atol, 1.0)
    steps = 0
    k = 0
    while k < m and t_out[k] <= t:
        Y[k] = y
        LS[k] = log_scale
        k += 1

    while k < m:
        if steps >= max_steps:
            return Y, LS, MAX_STEPS, t, steps
        target = t_out[k]
        min_step = 10.0 * abs(np.nextafter(t, np.inf) - t)
        if h < min_step:
            return Y, LS, STEP_COLLAPSE, t, steps
        h_try = h
        clipped = False
        if t + h_try >= target:
            h_try = target - t
            clipped = True

        accepted = False
        while not accepted:
            if h_try < min_step:
                return Y, LS, STEP_COLLAPSE, t, steps
            K[0] = f
            for s in range(1, N_STAGES):
                dy = np.zeros(n)
                for j in range(s):
                    a = A[s, j]
                    if a != 0.0:
                        dy += a * K[j]
                K[s] = rhs(t + C[s] * h_try, y + h_try * dy, p)
            y_new = y.copy()
            for j in range(N_STAGES):
                y_new += h_try * B[j] * K[j]
            f_new = rhs(t + h_try, y_new, p)
            K[N_STAGES] = f_new

            finite = True
            for i in range(n):
                if not np.isfinite(y_new[i]) or not np.isfinite(f_new[i]):
                    finite = False
            if not finite:
                h_try *= 0.25
                clipped = False
                if h_try < min_step:
                    return Y, LS, NONFINITE, t, steps
                continue

            for i in range(n):
                scale[i] = atol + rtol * max(abs(y[i]), abs(y_new[i]))
            err = _error_norm(K, h_try, scale, n)
            if err < 1.0:
                if err == 0.0:
                    factor = MAX_FACTOR
                else:
                    factor = min(MAX_FACTOR, SAFETY * err ** ERR_EXPONENT)
                accepted = True
                t_new = target if clipped else t + h_try
                t = t_new
                y = y_new
                f = f_new
                if clipped:
                    h = max(h, h_try * factor)
                else:
                    h = h_try * factor
            else:
                h_try *= max(MIN_FACTOR, SAFETY * err ** ERR_EXPONENT)
                clipped = False
        steps += 1

        big = 0.0
        if rescale:
            for i in range(n):
                big = max(big, abs(y[i]))
        if rescale and big > rescale_threshold:
            shift = np.floor(np.log(big))
            y = y * np.exp(-shift)
            f = f * np.exp(-shift)
            log_scale += shift

        while k < m and t_out[k] <= t:
            Y[k] = y
            LS[k] = log_scale
            k += 1

    return Y, LS, OK, t, steps
