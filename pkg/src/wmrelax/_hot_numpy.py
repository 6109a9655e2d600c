"""Vectorized numpy twins of the reductions in `_hot_numba`.

Panel blocks are processed in chunks to bound peak memory on the
multi-million-panel oscillatory integrals.
"""

import numpy as np

from . import _sf_numpy as _vec

_CHUNK = 1 << 15


def _panel_nodes_block(breaks, lo, hi, gx, gw):
    a = breaks[lo:hi]
    half = 0.5 * (breaks[lo + 1:hi + 1] - a)
    xi = a[:, None] + half[:, None] * (1.0 + gx[None, :])
    w = half[:, None] * gw[None, :]
    return xi.ravel(), w.ravel()


def _panel_split_block(breaks, lo, hi, gx, gw):
    """Nodes kept as unsummed (edge, offset) pairs for accurate phases."""
    a = breaks[lo:hi]
    half = 0.5 * (breaks[lo + 1:hi + 1] - a)
    off = half[:, None] * (1.0 + gx[None, :])
    base = np.broadcast_to(a[:, None], off.shape)
    w = half[:, None] * gw[None, :]
    return base.ravel(), off.ravel(), w.ravel()


def _chunked(breaks, gx, gw, f):
    npan = breaks.shape[0] - 1
    total = 0.0
    for lo in range(0, npan, _CHUNK):
        hi = min(npan, lo + _CHUNK)
        base, off, w = _panel_split_block(breaks, lo, hi, gx, gw)
        total += float(np.dot(w, f(base, off)))
    return total


def _two_prod_arr(a, b):
    p = a * b
    c = 134217729.0 * a
    ahi = c - (c - a)
    alo = a - ahi
    c = 134217729.0 * b
    bhi = c - (c - b)
    blo = b - bhi
    err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, err


def _sin_prod_arr(a, b):
    p, e = _two_prod_arr(a, b)
    return np.sin(p) + e * np.cos(p)


def _two_sum_arr(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _phase_arr(t, a, c):
    pa, ea = _two_prod_arr(t, a)
    pc, ec = _two_prod_arr(t, c)
    s, e2 = _two_sum_arr(pa, pc)
    return s, ea + ec + e2


def _sin_split_arr(t, a, c):
    s, e = _phase_arr(t, a, c)
    sn = np.sin(s)
    cs = np.cos(s)
    return sn + e * cs - 0.5 * e * e * sn


def _cos_split_arr(t, a, c):
    s, e = _phase_arr(t, a, c)
    sn = np.sin(s)
    cs = np.cos(s)
    return cs - e * sn - 0.5 * e * e * cs


def _osc_split_arr(jt, t, a, c):
    if jt == 0:
        return _sin_split_arr(t, a, c)
    if jt == 1:
        return _cos_split_arr(t, a, c)
    return -_sin_split_arr(t, a, c)


def _j1_deriv_arr(kr, x):
    if kr == 0:
        return _vec.bessel_j_array(1, x)
    if kr == 1:
        return 0.5 * (_vec.bessel_j_array(0, x) - _vec.bessel_j_array(2, x))
    return 0.25 * (_vec.bessel_j_array(3, x) - 3.0 * _vec.bessel_j_array(1, x))


def _osc_t_arr(jt, t, xi):
    if jt == 0:
        return _sin_prod_arr(t, xi)
    if jt == 1:
        return _cos_prod_arr(t, xi)
    return -_sin_prod_arr(t, xi)


def v2_sum(t, r, b, jt, kr, breaks, gx, gw):
    def f(base, off):
        xi = base + off
        out = np.zeros_like(xi)
        m = xi > 0
        c = _vec.chi_low_array(xi[m], 0)
        out[m] = (xi[m] ** (jt + kr) * _osc_split_arr(jt, t, base[m], off[m])
                  * _j1_deriv_arr(kr, r * xi[m]) * c
                  * _vec.log_symbol_array(xi[m], b))
        return out

    return _chunked(breaks, gx, gw, f)


def v2ip_sum(t, lam, b, breaks, gx, gw):
    def f(base, off):
        xi = base + off
        out = np.zeros_like(xi)
        m = xi > 0
        out[m] = (xi[m] ** 2 * _sin_split_arr(t, base[m], off[m])
                  * _vec.chi_low_array(xi[m], 0)
                  * _vec.log_symbol_array(xi[m], b)
                  * _vec.bessel_k_array(1, xi[m] * lam))
        return out

    return _chunked(breaks, gx, gw, f)


def _ell_arr(xi, b, d):
    L = np.log(1.0 / xi)
    if b == 1.0:
        if d == 0:
            return np.log(L)
        if d == 1:
            return -1.0 / (xi * L)
        return 1.0 / (xi * xi * L) - 1.0 / (xi * xi * L * L)
    if d == 0:
        return L ** (1.0 - b)
    if d == 1:
        return (b - 1.0) * L ** (-b) / xi
    return (b - 1.0) * L ** (-b) * (b / L - 1.0) / (xi * xi)


def logsym_dd_arr(xi, b):
    return 2.0 * _ell_arr(xi, b, 1) + xi * _ell_arr(xi, b, 2)


def psi_sum(t, lam, b, breaks, gx, gw):
    def f(base, off):
        xi = base + off
        c1 = _vec.chi_low_array(xi, 1)
        c2 = _vec.chi_low_array(xi, 2)
        out = np.zeros_like(xi)
        m = (c1 != 0.0) | (c2 != 0.0)
        if m.any():
            x = xi[m]
            y = x * lam
            k0 = _vec.bessel_k_array(0, y)
            k1 = _vec.bessel_k_array(1, y)
            phi = x * x * k1
            dphi = x * k1 - lam * x * x * k0
            el = _ell_arr(x, b, 0)
            del1 = _ell_arr(x, b, 1)
            g = phi * el
            dg = dphi * el + phi * del1
            out[m] = _sin_split_arr(t, base[m], off[m]) * (
                2.0 * c1[m] * dg + c2[m] * g)
        return out

    return _chunked(breaks, gx, gw, f)


def fv2_sum(t, lam, b, breaks, gx, gw):
    def f(base, off):
        xi = base + off
        out = np.zeros_like(xi)
        m = xi > 0
        c = _vec.chi_low_array(xi[m], 0)
        x = xi[m]
        y = x * lam
        k0 = _vec.bessel_k_array(0, y)
        k1 = _vec.bessel_k_array(1, y)
        k1m = _vec.bessel_k1_minus_recip_array(y)
        el = _ell_arr(x, b, 0)
        del1 = _ell_arr(x, b, 1)
        del2 = _ell_arr(x, b, 2)
        ddphi = -3.0 * lam * x * k0 + lam * lam * x * x * k1
        fv2 = (ddphi * el + 2.0 * del1 * (x * k1m - lam * x * x * k0)
               + del2 * x * x * k1m)
        out[m] = _sin_split_arr(t, base[m], off[m]) * c * fv2
        return out

    return _chunked(breaks, gx, gw, f)


def chim1_sum(t, b, breaks, gx, gw):
    def f(base, off):
        xi = base + off
        out = np.zeros_like(xi)
        m = (xi > 0) & (xi <= 0.5)
        c = _vec.chi_low_array(xi[m], 0) - 1.0
        out[m] = (_sin_split_arr(t, base[m], off[m]) * c
                  * logsym_dd_arr(xi[m], b))
        return out

    return _chunked(breaks, gx, gw, f)


def one_plus_ratio_arr(u, fourA):
    s = np.sqrt(u * u + fourA)
    return np.where(u >= 0.0, 1.0 + u / s, fourA / (s * (s - u)))


def _theta_rule(px, pw):
    th = 0.25 * np.pi * (1.0 + px)
    wth = 0.25 * np.pi * pw
    return th, wth


def kernel_K_sum(x, lam, rbreaks, gx, gw, px, pw):
    Rn, Rw = _panel_nodes_block(rbreaks, 0, rbreaks.shape[0] - 1, gx, gw)
    th, wth = _theta_rule(px, pw)
    rho = x * np.sin(th)
    A = (Rn * lam) ** 2
    u = A[:, None] - 1.0 - rho[None, :] ** 2
    g = one_plus_ratio_arr(u, 4.0 * A[:, None])
    inner = g @ (wth * np.sin(th) * (1.0 - np.cos(th)))
    return float(np.dot(Rw * Rn / (1.0 + Rn ** 2) ** 3, inner) * x)


def d2_kernel_K_sum(w, z, rbreaks, gx, gw, px, pw):
    Rn, Rw = _panel_nodes_block(rbreaks, 0, rbreaks.shape[0] - 1, gx, gw)
    th, wth = _theta_rule(px, pw)
    rho = w * np.sin(th)
    p2 = rho ** 2
    A = (Rn * z) ** 2
    den = (p2[None, :] - A[:, None] + 1.0) ** 2 + 4.0 * A[:, None]
    integ = (p2[None, :] + A[:, None] + 1.0) * rho[None, :] / (den * np.sqrt(den))
    inner = integ @ (wth * (1.0 - np.cos(th)))
    outer = Rw * 4.0 * Rn ** 3 * z / (1.0 + Rn ** 2) ** 3
    return float(np.dot(outer, inner))


def v1_sum(r, wn, ww, lpp, phx, phw):
    sin_th = np.sin(phx)
    rho = wn[:, None] * sin_th
    u = r * r - 1.0 - rho ** 2
    h = one_plus_ratio_arr(u, 4.0 * r * r)
    inner = np.sum(phw * sin_th * h, axis=1)
    return float(np.dot(ww * lpp * wn, inner))


def v3_sum(r, alpha, wn, ww, lpp, lam_s, phx, phw):
    sin_th = np.sin(phx)
    rho = wn[:, None] * sin_th
    u = r * r - 1.0 - rho ** 2
    first = u / np.sqrt(u * u + 4.0 * r * r)
    z2 = lam_s[:, None] ** (2.0 * alpha - 2.0)
    q = 1.0 - (r * r - rho ** 2) * z2
    f3 = q / np.sqrt(q * q + 4.0 * r * r * z2)
    inner = np.sum(phw * sin_th * (first + f3), axis=1)
    return float(np.dot(ww * lpp * wn, inner))
