"""The slow scale factor: leading profile, its first correction, the
admissible class of profiles, and the weighted C^2 norm used by the
modulation fixed point.

The leading profile is log^(-b)(t).  Its correction is the double integral

    lam01(t) = int_t^inf int_{t1}^inf -b^2 loglog(t2) / (t2^2 log^(b+2) t2) dt2 dt1

which collapses (Fubini) to a single integral with weight (s - t); in
u = log(s) coordinates the integrand decays like log(u)/u^(b+2), whose tail
has a closed-form antiderivative, so no nested quadrature is needed.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .quadrature import gauss_legendre

__all__ = [
    "lambda00", "lambda01", "lambda01_d1", "LambdaPath", "XNormWeights",
    "x_norm", "class_membership", "ClassReport", "lambda00_path",
    "lambda0_path", "perturbed_path",
]

# unsigned Stirling numbers of the first kind, rows k = 0..4
_STIRLING1 = (
    (1,),
    (0, 1),
    (0, 1, 1),
    (0, 2, 3, 1),
    (0, 6, 11, 6, 1),
)


def lambda00(b: float, t, k: int = 0):
    """k-th derivative (k = 0..4) of log^(-b)(t), closed form."""
    if not 0 <= k <= 4:
        raise ValueError("derivative order must be 0..4")
    t = np.asarray(t, dtype=float)
    if (t <= np.e).any():
        raise ValueError("t must exceed e")
    L = np.log(t)
    if k == 0:
        out = L ** (-b)
    else:
        acc = np.zeros_like(L)
        rising = 1.0
        for j in range(1, k + 1):
            rising *= b + j - 1          # (b)_j
            acc += _STIRLING1[k][j] * rising * L ** (-b - j)
        out = (-1.0) ** k * acc / t ** k
    return out if out.ndim else float(out)


def _lambda01_u_integral(b: float, t: float, n_panel: int = 40, n_gl: int = 10):
    """lam01(t) = -b^2 * int_{u_t}^inf log(u) (1 - t e^-u) u^-(b+2) du."""
    ut = np.log(t)
    U = max(60.0, ut + 45.0)            # e^-U below double precision beyond
    gx, gw = gauss_legendre(n_gl)
    edges = np.geomspace(ut, U, n_panel + 1)
    a = edges[:-1]
    half = 0.5 * np.diff(edges)
    u = (a + half)[:, None] + half[:, None] * gx[None, :]
    w = half[:, None] * gw[None, :]
    f = np.log(u) * (1.0 - t * np.exp(-u)) * u ** (-(b + 2.0))
    core = float(np.sum(w * f))
    tail = np.log(U) / ((b + 1.0) * U ** (b + 1.0)) + 1.0 / ((b + 1.0) ** 2 * U ** (b + 1.0))
    return -b * b * (core + tail)


def _lambda01_d1_u_integral(b: float, t: float, n_panel: int = 40, n_gl: int = 10):
    """lam01'(t) = b^2 * int_{u_t}^inf log(u) e^-u u^-(b+2) du / ... in s units."""
    ut = np.log(t)
    U = ut + 45.0
    gx, gw = gauss_legendre(n_gl)
    edges = np.linspace(ut, U, n_panel + 1)
    a = edges[:-1]
    half = 0.5 * np.diff(edges)
    u = (a + half)[:, None] + half[:, None] * gx[None, :]
    w = half[:, None] * gw[None, :]
    f = np.log(u) * np.exp(-u) * u ** (-(b + 2.0))
    return b * b * float(np.sum(w * f))


def lambda01(b: float, t):
    """First correction to the scale profile (negative, o(lam00/log))."""
    if np.ndim(t) == 0:
        return _lambda01_u_integral(b, float(t))
    return np.array([_lambda01_u_integral(b, float(v)) for v in np.asarray(t)])


def lambda01_d1(b: float, t):
    """d/dt of lambda01 (positive: the correction relaxes back to zero)."""
    if np.ndim(t) == 0:
        return _lambda01_d1_u_integral(b, float(t))
    return np.array([_lambda01_d1_u_integral(b, float(v)) for v in np.asarray(t)])


def lambda01_d2(b: float, t):
    """Exact second derivative: the double integral differentiates away."""
    t = np.asarray(t, dtype=float)
    out = -b * b * np.log(np.log(t)) / (t ** 2 * np.log(t) ** (b + 2.0))
    return out if out.ndim else float(out)


@dataclass
class LambdaPath:
    """A scale factor lambda(t) with two derivatives, on and off a grid."""

    b: float
    t_grid: np.ndarray
    values: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    fn: Callable = None
    dfn: Callable = None
    d2fn: Callable = None
    label: str = ""

    def __call__(self, t):
        return self.fn(t)

    def lam(self, t):
        return self.fn(t)

    def dlam(self, t):
        return self.dfn(t)

    def d2lam(self, t):
        return self.d2fn(t)


def _default_grid(T0: float, S_max: float, per_decade: int = 96) -> np.ndarray:
    n = max(8, int(np.ceil(np.log10(S_max / T0) * per_decade)) + 1)
    return np.geomspace(T0, S_max, n)


def lambda00_path(b: float, T0: float = 1e3, S_max: float = 1e9,
                  t_grid=None) -> LambdaPath:
    if t_grid is None:
        t_grid = _default_grid(T0, S_max)
    t_grid = np.asarray(t_grid, dtype=float)
    return LambdaPath(
        b=b,
        t_grid=t_grid,
        values=lambda00(b, t_grid, 0),
        d1=lambda00(b, t_grid, 1),
        d2=lambda00(b, t_grid, 2),
        fn=lambda t: lambda00(b, t, 0),
        dfn=lambda t: lambda00(b, t, 1),
        d2fn=lambda t: lambda00(b, t, 2),
        label="lambda00",
    )


@lru_cache(maxsize=16)
def _lambda01_interp(b: float):
    """Pchip interpolants (in log t) of lambda01 and its first derivative."""
    tg = np.geomspace(40.0, 1e16, 420)
    u = np.log(tg)
    vals = np.array([_lambda01_u_integral(b, float(v)) for v in tg])
    d1s = np.array([_lambda01_d1_u_integral(b, float(v)) for v in tg])
    return PchipInterpolator(u, vals), PchipInterpolator(u, d1s)


def lambda0_path(b: float, T0: float = 1e3, S_max: float = 1e9,
                 t_grid=None) -> LambdaPath:
    """The reference profile lam00 + lam01 around which the equation is solved."""
    if t_grid is None:
        t_grid = _default_grid(T0, S_max)
    t_grid = np.asarray(t_grid, dtype=float)
    p01, p01d = _lambda01_interp(b)

    def fn(t):
        ta = np.atleast_1d(np.asarray(t, dtype=float))
        out = lambda00(b, ta, 0) + p01(np.log(ta))
        return out if np.ndim(t) else float(out[0])

    def dfn(t):
        ta = np.atleast_1d(np.asarray(t, dtype=float))
        out = lambda00(b, ta, 1) + p01d(np.log(ta))
        return out if np.ndim(t) else float(out[0])

    def d2fn(t):
        ta = np.atleast_1d(np.asarray(t, dtype=float))
        out = lambda00(b, ta, 2) + lambda01_d2(b, ta)
        return out if np.ndim(t) else float(out[0])

    return LambdaPath(
        b=b, t_grid=t_grid,
        values=fn(t_grid), d1=dfn(t_grid), d2=d2fn(t_grid),
        fn=fn, dfn=dfn, d2fn=d2fn, label="lambda0",
    )


def perturbed_path(base: LambdaPath, e_fn, e_d1, e_d2, label="perturbed") -> LambdaPath:
    """base + e for a correction given by closures with two derivatives."""
    tg = base.t_grid
    return LambdaPath(
        b=base.b, t_grid=tg,
        values=base.values + e_fn(tg),
        d1=base.d1 + e_d1(tg),
        d2=base.d2 + e_d2(tg),
        fn=lambda t: base.fn(t) + e_fn(np.asarray(t, dtype=float)),
        dfn=lambda t: base.dfn(t) + e_d1(np.asarray(t, dtype=float)),
        d2fn=lambda t: base.d2fn(t) + e_d2(np.asarray(t, dtype=float)),
        label=label,
    )


@dataclass(frozen=True)
class XNormWeights:
    """Weights of the C^2 iteration norm; positive and finite on [T0, inf)."""

    b: float
    T0: float

    def w0(self, t):
        return self.b * np.log(t) ** self.b * np.sqrt(np.log(np.log(t)))

    def w1(self, t):
        return t * np.log(t) ** (self.b + 1) * np.sqrt(np.log(np.log(t)))

    def w2(self, t):
        return t * t * np.log(t) ** (self.b + 1) * np.sqrt(np.log(np.log(t)))


def x_norm(values, d1, d2, weights: XNormWeights, t_grid) -> float:
    """sup over the grid of the three weighted C^2 terms."""
    t = np.asarray(t_grid, dtype=float)
    tot = (np.abs(np.asarray(values)) * weights.w0(t)
           + np.abs(np.asarray(d1)) * weights.w1(t)
           + np.abs(np.asarray(d2)) * weights.w2(t))
    return float(np.max(tot))


@dataclass
class ClassReport:
    """Per-order constants for membership in the admissible profile class."""

    b: float
    c_lower: float
    c_upper: float
    c_deriv: dict
    member: bool
    witness_t: float = np.nan


def class_membership(path: LambdaPath, b: float = None,
                     max_order: int = 2) -> ClassReport:
    """Smallest constants making the two-sided level bound and the
    derivative bounds |f^(k)| <= C/(t^k log^(b+1) t) hold on the grid."""
    if b is None:
        b = path.b
    t = path.t_grid
    if len(t) < 8:
        raise ValueError("grid too coarse for a membership report")
    L = np.log(t)
    level = path.values * L ** b
    c_lower = float(np.min(level))
    c_upper = float(np.max(level))
    c_deriv = {}
    ders = {1: path.d1, 2: path.d2}
    for k in range(1, max_order + 1):
        c_deriv[k] = float(np.max(np.abs(ders[k]) * t ** k * L ** (b + 1)))
    member = c_lower > 0 and np.isfinite(c_upper) and all(
        np.isfinite(v) for v in c_deriv.values())
    witness = np.nan
    if not member:
        bad = np.argmin(level)
        witness = float(t[bad])
    return ClassReport(b=b, c_lower=c_lower, c_upper=c_upper,
                       c_deriv=c_deriv, member=member, witness_t=witness)
