"""Vectorized numpy twins of the scalar cores in `_sf_core`.

Same branch points and same series, evaluated on arrays; used when the
pure-numpy backend is selected and for array arguments on either backend.
"""

import numpy as np

from ._sf_core import EULER_GAMMA, _J_SWITCH, _K_SWITCH


def bessel_j_array(n, x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    small = x <= _J_SWITCH
    if small.any():
        out[small] = _j_series_arr(n, x[small])
    big = ~small
    if big.any():
        out[big] = _j_asym_arr(n, x[big])
    out[x < 0] = np.nan
    return out


def _j_series_arr(n, x):
    h = 0.5 * x
    q = h * h
    term = np.ones_like(x)
    for k in range(1, n + 1):
        term = term * h / k
    s = term.copy()
    for m in range(1, 46):
        term = term * (-q) / (m * (n + m))
        s += term
    return s


def _j_asym_arr(n, x):
    mu = 4.0 * n * n
    eightx = 8.0 * x
    p = np.ones_like(x)
    q = np.zeros_like(x)
    t = np.ones_like(x)
    for k in range(1, 21):
        t = t * (mu - (2.0 * k - 1.0) ** 2) / (k * eightx)
        if k % 2 == 1:
            q += t if ((k - 1) // 2) % 2 == 0 else -t
        else:
            p += -t if (k // 2) % 2 == 1 else t
    w = x - (0.5 * n + 0.25) * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(w) - q * np.sin(w))


def _k01_series_arr(x):
    h = 0.5 * x
    z = h * h
    lnh = np.log(h)

    term = np.ones_like(x)
    i0 = np.ones_like(x)
    s0 = np.zeros_like(x)
    hk = 0.0
    for k in range(1, 41):
        term = term * z / (k * k)
        hk += 1.0 / k
        i0 += term
        s0 += term * hk
    k0 = -(lnh + EULER_GAMMA) * i0 + s0

    term = np.ones_like(x)
    i1s = np.ones_like(x)
    s1 = np.full_like(x, 1.0 - 2.0 * EULER_GAMMA)
    hk = 0.0
    hk1 = 1.0
    for k in range(1, 41):
        term = term * z / (k * (k + 1))
        hk += 1.0 / k
        hk1 += 1.0 / (k + 1)
        i1s += term
        s1 += term * (hk + hk1 - 2.0 * EULER_GAMMA)
    k1_m_recip = lnh * h * i1s - 0.5 * h * s1
    return k0, k1_m_recip


def _k_quad_arr(n, x):
    umax = np.arccosh(1.0 + 46.0 / x)
    m = 90
    hstep = umax / m
    i = np.arange(1, m + 1)
    u = hstep[..., None] * i
    s = 0.5 + np.sum(np.exp(-x[..., None] * (np.cosh(u) - 1.0)) * np.cosh(n * u),
                     axis=-1)
    return np.exp(-x) * hstep * s


def bessel_k_array(n, x):
    x = np.asarray(x, dtype=np.float64)
    out = np.full_like(x, np.nan)
    small = (x > 0) & (x <= _K_SWITCH)
    if small.any():
        k0, k1m = _k01_series_arr(x[small])
        if n == 0:
            out[small] = k0
        elif n == 1:
            out[small] = k1m + 1.0 / x[small]
        else:
            out[small] = k0 + 2.0 * (k1m + 1.0 / x[small]) / x[small]
    big = x > _K_SWITCH
    if big.any():
        if n <= 1:
            out[big] = _k_quad_arr(n, x[big])
        else:
            out[big] = _k_quad_arr(0, x[big]) + 2.0 * _k_quad_arr(1, x[big]) / x[big]
    return out


def bessel_k1_minus_recip_array(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.full_like(x, np.nan)
    small = (x > 0) & (x <= _K_SWITCH)
    if small.any():
        out[small] = _k01_series_arr(x[small])[1]
    big = x > _K_SWITCH
    if big.any():
        out[big] = _k_quad_arr(1, x[big]) - 1.0 / x[big]
    return out


def _ramp_f_arr(u):
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def smooth_step_array(u, d):
    u = np.asarray(u, dtype=np.float64)
    out = np.zeros_like(u)
    if d == 0:
        out[u >= 1.0] = 1.0
    mid = (u > 0.0) & (u < 1.0)
    if not mid.any():
        return out
    um = u[mid]
    f = np.exp(-1.0 / um)
    g = np.exp(-1.0 / (1.0 - um))
    den = f + g
    if d == 0:
        out[mid] = f / den
        return out
    f1 = f / (um * um)
    g1 = -g / ((1.0 - um) * (1.0 - um))
    num1 = f1 * g - f * g1
    if d == 1:
        out[mid] = num1 / (den * den)
        return out
    f2 = f * (1.0 / um ** 4 - 2.0 / um ** 3)
    g2 = g * (1.0 / (1.0 - um) ** 4 - 2.0 / (1.0 - um) ** 3)
    num2 = f2 * g - f * g2
    out[mid] = num2 / (den * den) - 2.0 * num1 * (f1 + g1) / (den * den * den)
    return out


def chi_low_array(x, d):
    x = np.asarray(x, dtype=np.float64)
    u = (0.25 - x) * 8.0
    v = smooth_step_array(u, d)
    if d == 1:
        v = -8.0 * v
    elif d == 2:
        v = 64.0 * v
    return v


def chi_high_array(x, d):
    x = np.asarray(x, dtype=np.float64)
    return smooth_step_array(x - 1.0, d)


def log_symbol_array(xi, b):
    xi = np.asarray(xi, dtype=np.float64)
    ll = np.log(1.0 / xi)
    if b == 1.0:
        return np.log(ll)
    return ll ** (1.0 - b)
