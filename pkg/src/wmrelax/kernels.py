"""Closed kernels of the modulation equation and their exact identities.

K is the genuinely two-dimensional kernel produced by the wave-zone part of
the first correction's inner product; K1 its sharp-propagation companion,
which collapses to a closed form in (w, lambda); K3/K30 come from the third
correction.  The mass identities

    int_0^inf K(x, lam) dx            = (log 2 / 4) lam^2
    int_0^1 dq int_0^inf |d2K| dw     = (log 2 / 4)(z1 + z2),  z_q on [z2, z1]

are exact and serve as acceptance checks.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import hot
from .quadrature import gauss_legendre, geom_breaks, panel_nodes

__all__ = [
    "KernelQuad", "kernel_K", "kernel_K_mass", "d2_kernel_K",
    "dK_dlambda_mass", "kernel_K1", "kernel_K1_integral", "kernel_K3",
    "kernel_K30", "kernel_K30_mass",
]


@dataclass(frozen=True)
class KernelQuad:
    """Quadrature knobs for the 2D kernel reductions."""

    r_min: float = 1e-3
    r_max: float = 3e3
    per_decade: int = 12
    n_gl: int = 8
    n_theta: int = 24

    def r_breaks(self):
        return np.concatenate(([0.0], geom_breaks(self.r_min, self.r_max,
                                                  self.per_decade)))

    def rules(self):
        return gauss_legendre(self.n_gl), gauss_legendre(self.n_theta)


_DEFAULT_QUAD = KernelQuad()


def kernel_K(x: float, lam: float, quad: KernelQuad = _DEFAULT_QUAD) -> float:
    """The double-integral kernel K(x, lam) >= 0 (endpoint singularity
    removed by rho = x sin(theta))."""
    if x <= 0.0:
        return 0.0
    (gx, gw), (px, pw) = quad.rules()
    return hot.kernel_K_sum(float(x), float(lam), quad.r_breaks(), gx, gw, px, pw)


def kernel_K_mass(lam: float, x_min: float = 1e-3, x_max: float = 2e4,
                  per_decade: int = 12, n_gl: int = 8,
                  quad: KernelQuad = _DEFAULT_QUAD):
    """int_0^inf K(x, lam) dx with a two-resolution error estimate."""
    def run(pd, ng):
        xb = np.concatenate(([0.0], geom_breaks(x_min, x_max, pd)))
        xn, xw = panel_nodes(xb, ng)
        (gx, gw), (px, pw) = quad.rules()
        tot = 0.0
        for xi, wi in zip(xn, xw):
            tot += wi * hot.kernel_K_sum(xi, lam, quad.r_breaks(), gx, gw, px, pw)
        return tot

    fine = run(per_decade, n_gl)
    coarse = run(max(6, per_decade // 2), n_gl)
    return fine, abs(fine - coarse)


def d2_kernel_K(w: float, z: float, quad: KernelQuad = _DEFAULT_QUAD) -> float:
    """partial_lambda K(w, z); nonnegative pointwise."""
    if w <= 0.0:
        return 0.0
    (gx, gw), (px, pw) = quad.rules()
    return hot.d2_kernel_K_sum(float(w), float(z), quad.r_breaks(), gx, gw, px, pw)


def dK_dlambda_mass(z1: float, z2: float, w_max: float = 2e4,
                    per_decade: int = 10, n_q: int = 8,
                    quad: KernelQuad = _DEFAULT_QUAD) -> float:
    """int_0^1 dq int_0^inf |d2K(w, z2 + q(z1-z2))| dw; equals
    (log 2 / 4)(z1 + z2)."""
    if not (0.0 < z1 < 0.5 and 0.0 < z2 < 0.5):
        raise ValueError("z arguments must lie in (0, 1/2)")
    qx, qw = gauss_legendre(n_q)
    wb = np.concatenate(([0.0], geom_breaks(1e-3, w_max, per_decade)))
    wn, ww = panel_nodes(wb, 6)
    (gx, gw), (px, pw) = quad.rules()
    rb = quad.r_breaks()
    total = 0.0
    for iq in range(n_q):
        q = 0.5 * (1.0 + qx[iq])
        zq = z2 + q * (z1 - z2)
        s = 0.0
        for wi, wwi in zip(wn, ww):
            s += wwi * hot.d2_kernel_K_sum(wi, zq, rb, gx, gw, px, pw)
        total += 0.5 * qw[iq] * s
    return total


def kernel_K1(w: float, lam: float) -> float:
    """Closed form of the sharp-propagation kernel K1(w, lam)."""
    if w <= 0.0:
        return 0.0
    l2 = lam * lam
    y = l2 + w * w - 1.0
    D = y * y + 4.0 * w * w
    if D < 1e-12:
        # lam ~ 1, w ~ 0: the closed form degenerates; integrate directly
        return kernel_K1_integral(w, lam)
    sD = math.sqrt(D)
    # sqrt(D) - y without cancellation when y > 0
    sDmy = sD - y if y <= 0.0 else 4.0 * w * w / (sD + y)
    first = w * l2 * (l2 + w * w + 1.0) / (4.0 * D)
    arg1 = l2 * sDmy
    arg2 = 4.0 * w * w + y * y - l2 * y + (w * w + 1.0) * sD
    second = w * l2 * l2 * (math.log(arg1) - math.log(arg2)) / (2.0 * D * sD)
    return first + second


def kernel_K1_vec(w, lam: float):
    """Vectorized closed form of K1 over an array of w > 0."""
    w = np.asarray(w, dtype=float)
    l2 = lam * lam
    y = l2 + w * w - 1.0
    D = y * y + 4.0 * w * w
    sD = np.sqrt(D)
    sDmy = np.where(y <= 0.0, sD - y, 4.0 * w * w / (sD + y))
    first = w * l2 * (l2 + w * w + 1.0) / (4.0 * D)
    arg1 = l2 * sDmy
    arg2 = 4.0 * w * w + y * y - l2 * y + (w * w + 1.0) * sD
    out = first + w * l2 * l2 * (np.log(arg1) - np.log(arg2)) / (2.0 * D * sD)
    bad = D < 1e-12
    if bad.any():
        out[bad] = [kernel_K1_integral(float(v), lam) for v in w[bad]]
    return out


def kernel_K1_integral(w: float, lam: float, r_max: float = 1e4,
                       per_decade: int = 14, n_gl: int = 10) -> float:
    """Defining integral of K1 (used as oracle and as degenerate fallback)."""
    if w <= 0.0:
        return 0.0
    rb = np.concatenate(([0.0], geom_breaks(1e-4, r_max, per_decade)))
    R, Rw = panel_nodes(rb, n_gl)
    A = (R * lam) ** 2
    # (A + w^2 + 1 - sqrt((1+A+w^2)^2 - 4Aw^2)) / (2w), cancellation-free
    prod = (1.0 + (R * lam + w) ** 2) * (1.0 + (R * lam - w) ** 2)
    numer = 4.0 * A * w * w / (1.0 + A + w * w + np.sqrt(prod))
    integ = R / (1.0 + R ** 2) ** 3 * numer / (2.0 * w)
    return float(np.dot(Rw, integ))


def kernel_K3(w, lam: float, alpha: float):
    """Third-correction kernel, closed form."""
    w = np.asarray(w, dtype=float)
    c = lam ** (2.0 - 2.0 * alpha)
    out = (w / (1.0 + w * w) - w / (c + w * w)) \
        * w ** 4 / (4.0 * (w * w + 36.0 * lam * lam) ** 2)
    return out if out.ndim else float(out)


def kernel_K30(w, lam: float, alpha: float):
    """Model kernel matching K3 at both ends; strictly negative."""
    w = np.asarray(w, dtype=float)
    c = lam ** (1.0 - alpha)
    out = -1.0 / (4.0 * (c + w) * (1.0 + w) ** 3)
    return out if out.ndim else float(out)


def kernel_K30_mass(lam: float, alpha: float) -> float:
    """int_0^inf K30 dw in closed form (partial fractions in 1 + w)."""
    c = lam ** (1.0 - alpha)
    cp = c - 1.0
    if abs(cp) < 1e-6:
        # Taylor limit of the partial-fraction sum at c -> 1
        return -0.25 * (1.0 / 3.0 - 0.25 * cp)
    return -0.25 * (0.5 / cp - 1.0 / cp ** 2 + math.log(c) / cp ** 3)
