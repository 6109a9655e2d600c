"""Jitted loop implementations of the hot integrand reductions.

Each function consumes panel edges plus a reference Gauss-Legendre rule and
accumulates the quadrature sum in one pass; nodes are generated on the fly
so the multi-million-panel oscillatory integrals never materialize node
arrays.  `_hot_numpy` holds the vectorized twins; signatures must match.
"""

import math

from .backend import maybe_njit
from ._sf_core import (
    bessel_j_scalar,
    bessel_k_scalar,
    bessel_k1_minus_recip,
    chi_low_scalar,
    log_symbol,
)


@maybe_njit
def _two_prod(a, b):
    """Dekker product: a*b = p + err exactly (up to subnormals)."""
    p = a * b
    c = 134217729.0 * a
    ahi = c - (c - a)
    alo = a - ahi
    c = 134217729.0 * b
    bhi = c - (c - b)
    blo = b - bhi
    err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, err


@maybe_njit
def _two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


@maybe_njit
def _phase(t, a, c):
    """t*(a + c) as (principal, compensation) in double-double."""
    pa, ea = _two_prod(t, a)
    pc, ec = _two_prod(t, c)
    s, e2 = _two_sum(pa, pc)
    return s, ea + ec + e2


@maybe_njit
def _sin_prod(a, b):
    """sin(a*b) with the product-rounding phase error compensated."""
    p, e = _two_prod(a, b)
    return math.sin(p) + e * math.cos(p)


@maybe_njit
def _sin_split(t, a, c):
    """sin(t*(a+c)) with the node kept as an unsummed pair; the phase
    compensation is carried to second order (needed once t*xi ~ 1e8)."""
    s, e = _phase(t, a, c)
    sn = math.sin(s)
    cs = math.cos(s)
    return sn + e * cs - 0.5 * e * e * sn


@maybe_njit
def _cos_split(t, a, c):
    s, e = _phase(t, a, c)
    sn = math.sin(s)
    cs = math.cos(s)
    return cs - e * sn - 0.5 * e * e * cs


@maybe_njit
def _osc_split(jt, t, a, c):
    if jt == 0:
        return _sin_split(t, a, c)
    if jt == 1:
        return _cos_split(t, a, c)
    return -_sin_split(t, a, c)


@maybe_njit
def _j1_deriv(kr, x):
    if kr == 0:
        return bessel_j_scalar(1, x)
    if kr == 1:
        return 0.5 * (bessel_j_scalar(0, x) - bessel_j_scalar(2, x))
    return 0.25 * (bessel_j_scalar(3, x) - 3.0 * bessel_j_scalar(1, x))


@maybe_njit
def v2_sum(t, r, b, jt, kr, breaks, gx, gw):
    """d_t^jt d_r^kr of the radiation field integrand, no leading constant:
    sum of xi^(jt+kr) osc(t xi) J1^(kr)(r xi) chi(xi) logsym(xi)."""
    total = 0.0
    ng = gx.shape[0]
    for i in range(breaks.shape[0] - 1):
        a = breaks[i]
        half = 0.5 * (breaks[i + 1] - a)
        for j in range(ng):
            dxi = half * (1.0 + gx[j])
            xi = a + dxi
            if xi <= 0.0:
                continue
            c = chi_low_scalar(xi, 0)
            if c == 0.0:
                continue
            f = (xi ** (jt + kr) * _osc_split(jt, t, a, dxi)
                 * _j1_deriv(kr, r * xi) * c * log_symbol(xi, b))
            total += half * gw[j] * f
    return total


@maybe_njit
def v2ip_sum(t, lam, b, breaks, gx, gw):
    """sum of xi^2 sin(t xi) chi(xi) logsym(xi) K1(xi lam)."""
    total = 0.0
    ng = gx.shape[0]
    for i in range(breaks.shape[0] - 1):
        a = breaks[i]
        half = 0.5 * (breaks[i + 1] - a)
        for j in range(ng):
            dxi = half * (1.0 + gx[j])
            xi = a + dxi
            if xi <= 0.0:
                continue
            c = chi_low_scalar(xi, 0)
            if c == 0.0:
                continue
            f = (xi * xi * _sin_split(t, a, dxi) * c * log_symbol(xi, b)
                 * bessel_k_scalar(1, xi * lam))
            total += half * gw[j] * f
    return total


@maybe_njit
def _ell(xi, b, d):
    """log symbol and derivatives: L^(1-b) (log L at b = 1), L = log(1/xi)."""
    L = math.log(1.0 / xi)
    if b == 1.0:
        if d == 0:
            return math.log(L)
        if d == 1:
            return -1.0 / (xi * L)
        return 1.0 / (xi * xi * L) - 1.0 / (xi * xi * L * L)
    if d == 0:
        return L ** (1.0 - b)
    if d == 1:
        return (b - 1.0) * L ** (-b) / xi
    return (b - 1.0) * L ** (-b) * (b / L - 1.0) / (xi * xi)


@maybe_njit
def logsym_dd(xi, b):
    """(xi * ell(xi))'' = 2 ell' + xi ell''."""
    return 2.0 * _ell(xi, b, 1) + xi * _ell(xi, b, 2)


@maybe_njit
def psi_sum(t, lam, b, breaks, gx, gw):
    """int sin(t xi) psi(xi, lam) dxi with psi = 2 chi' g' + chi'' g,
    g = xi^2 K1(xi lam) ell(xi); supported on the cutoff transition band."""
    total = 0.0
    ng = gx.shape[0]
    for i in range(breaks.shape[0] - 1):
        a = breaks[i]
        half = 0.5 * (breaks[i + 1] - a)
        for j in range(ng):
            dxi = half * (1.0 + gx[j])
            xi = a + dxi
            c1 = chi_low_scalar(xi, 1)
            c2 = chi_low_scalar(xi, 2)
            if c1 == 0.0 and c2 == 0.0:
                continue
            y = xi * lam
            k0 = bessel_k_scalar(0, y)
            k1 = bessel_k_scalar(1, y)
            phi = xi * xi * k1
            dphi = xi * k1 - lam * xi * xi * k0
            el = _ell(xi, b, 0)
            del1 = _ell(xi, b, 1)
            g = phi * el
            dg = dphi * el + phi * del1
            total += half * gw[j] * _sin_split(t, a, dxi) * (2.0 * c1 * dg + c2 * g)
    return total


@maybe_njit
def fv2_sum(t, lam, b, breaks, gx, gw):
    """int chi(xi) sin(t xi) Fv2(xi, lam) dxi, where Fv2 is the curvature
    remainder (xi^2 K1(xi lam) ell)'' - (xi ell)''/lam, cancellation-free."""
    total = 0.0
    ng = gx.shape[0]
    for i in range(breaks.shape[0] - 1):
        a = breaks[i]
        half = 0.5 * (breaks[i + 1] - a)
        for j in range(ng):
            dxi = half * (1.0 + gx[j])
            xi = a + dxi
            if xi <= 0.0:
                continue
            c = chi_low_scalar(xi, 0)
            if c == 0.0:
                continue
            y = xi * lam
            k0 = bessel_k_scalar(0, y)
            k1 = bessel_k_scalar(1, y)
            k1m = bessel_k1_minus_recip(y)
            el = _ell(xi, b, 0)
            del1 = _ell(xi, b, 1)
            del2 = _ell(xi, b, 2)
            ddphi = -3.0 * lam * xi * k0 + lam * lam * xi * xi * k1
            fv2 = (ddphi * el
                   + 2.0 * del1 * (xi * k1m - lam * xi * xi * k0)
                   + del2 * xi * xi * k1m)
            total += half * gw[j] * _sin_split(t, a, dxi) * c * fv2
    return total


@maybe_njit
def chim1_sum(t, b, breaks, gx, gw):
    """int (chi(xi) - 1) sin(t xi) (xi ell(xi))'' dxi over (0, 1/2]."""
    total = 0.0
    ng = gx.shape[0]
    for i in range(breaks.shape[0] - 1):
        a = breaks[i]
        half = 0.5 * (breaks[i + 1] - a)
        for j in range(ng):
            dxi = half * (1.0 + gx[j])
            xi = a + dxi
            c = chi_low_scalar(xi, 0) - 1.0
            if c == 0.0 or xi <= 0.0 or xi > 0.5:
                continue
            total += half * gw[j] * _sin_split(t, a, dxi) * c * logsym_dd(xi, b)
    return total


@maybe_njit
def one_plus_ratio(u, fourA):
    """1 + u/sqrt(u^2 + 4A), stable against cancellation for u << 0."""
    s = math.sqrt(u * u + fourA)
    if u >= 0.0:
        return 1.0 + u / s
    return fourA / (s * (s - u))


@maybe_njit
def kernel_K_sum(x, lam, rbreaks, gx, gw, px, pw):
    """K(x, lam): R-panels outer, theta Gauss rule inner (rho = x sin theta)."""
    total = 0.0
    ng = gx.shape[0]
    nph = px.shape[0]
    for i in range(rbreaks.shape[0] - 1):
        a = rbreaks[i]
        half = 0.5 * (rbreaks[i + 1] - a)
        for j in range(ng):
            R = a + half * (1.0 + gx[j])
            wR = half * gw[j] * R / (1.0 + R * R) ** 3
            A = R * lam * R * lam
            inner = 0.0
            for m in range(nph):
                th = 0.25 * math.pi * (1.0 + px[m])
                wth = 0.25 * math.pi * pw[m]
                rho = x * math.sin(th)
                u = A - 1.0 - rho * rho
                inner += wth * math.sin(th) * (1.0 - math.cos(th)) \
                    * one_plus_ratio(u, 4.0 * A)
            total += wR * x * inner
    return total


@maybe_njit
def d2_kernel_K_sum(w, z, rbreaks, gx, gw, px, pw):
    """partial_2 K(w, z) >= 0 via the explicit positive integrand."""
    total = 0.0
    ng = gx.shape[0]
    nph = px.shape[0]
    for i in range(rbreaks.shape[0] - 1):
        a = rbreaks[i]
        half = 0.5 * (rbreaks[i + 1] - a)
        for j in range(ng):
            R = a + half * (1.0 + gx[j])
            wR = half * gw[j] * 4.0 * R ** 3 * z / (1.0 + R * R) ** 3
            A = R * z * R * z
            inner = 0.0
            for m in range(nph):
                th = 0.25 * math.pi * (1.0 + px[m])
                wth = 0.25 * math.pi * pw[m]
                rho = w * math.sin(th)
                p2 = rho * rho
                den = (p2 - A + 1.0) ** 2 + 4.0 * A
                inner += wth * (1.0 - math.cos(th)) * rho \
                    * (p2 + A + 1.0) / (den * math.sqrt(den))
            total += wR * inner
    return total


@maybe_njit
def v1_sum(r, wn, ww, lpp, phx, phw):
    """r * v1-core: sum_i ww_i lpp_i w_i int sin(phi) h(w_i sin phi) dphi
    with h(rho) = 1 + (r^2-1-rho^2)/sqrt((r^2-1-rho^2)^2 + 4 r^2);
    phi nodes/weights are per-w rows adapted to the sign flip of h."""
    total = 0.0
    nph = phx.shape[1]
    fourA = 4.0 * r * r
    for i in range(wn.shape[0]):
        w = wn[i]
        if w <= 0.0:
            continue
        inner = 0.0
        for m in range(nph):
            th = phx[i, m]
            rho = w * math.sin(th)
            u = r * r - 1.0 - rho * rho
            inner += phw[i, m] * math.sin(th) * one_plus_ratio(u, fourA)
        total += ww[i] * lpp[i] * w * inner
    return total


@maybe_njit
def v3_sum(r, alpha, wn, ww, lpp, lam_s, phx, phw):
    """-r * v3-core: the two-branch integrand of the third correction,
    with per-w adapted phi panels (the second branch flips over a width
    of order lam^(1-alpha))."""
    total = 0.0
    nph = phx.shape[1]
    for i in range(wn.shape[0]):
        w = wn[i]
        if w <= 0.0:
            continue
        z2 = lam_s[i] ** (2.0 * alpha - 2.0)
        inner = 0.0
        for m in range(nph):
            th = phx[i, m]
            rho = w * math.sin(th)
            u = r * r - 1.0 - rho * rho
            first = u / math.sqrt(u * u + 4.0 * r * r)
            q = 1.0 - (r * r - rho * rho) * z2
            f3 = q / math.sqrt(q * q + 4.0 * r * r * z2)
            inner += phw[i, m] * math.sin(th) * (first + f3)
        total += ww[i] * lpp[i] * w * inner
    return total
