"""The scalar condition that fixes the scale factor.

The orthogonality of the principal residual against the rescaled zero
resonance is equivalent to a Volterra equation of the second kind in the
second derivative of the scale factor.  This module evaluates every term of
that equation (closed kernels, oscillatory inner products, sine-log
asymptotics), assembles the right-hand side, and runs the fixed-point
iteration for the correction e with lambda = lambda0 + e.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator, RectBivariateSpline

from . import hot, kernels
from .lambda_model import LambdaPath, XNormWeights, lambda0_path, x_norm
from .lightcone import FieldConfig, DEFAULT_CFG, cb_constant
from .quadrature import (gauss_legendre, geom_breaks, halfline_breaks,
                         osc_breaks, panel_nodes)
from .volterra import (VolterraProblem, build_operator_matrix,
                       resolvent_solve, volterra_kernel)

__all__ = [
    "sinlog_integral", "sinlog_raw", "v2_inner_product", "ev2ip",
    "KTable", "phi_terms", "g_assemble", "ModulationContext",
    "ModulationSolution", "solve_modulation", "orthogonality_check",
    "OscillationError", "DEFAULT_TERMS",
]

DEFAULT_TERMS = ("e01", "k3", "k", "ev2", "k1", "e5")
OPTIONAL_TERMS = ("v45", "chiN")


class OscillationError(RuntimeError):
    """Raised when a raw oscillatory path would not resolve the phase."""


# --------------------------------------------------------------------------
# sine-log integrals
# --------------------------------------------------------------------------

def _sinlog_f(L, a):
    return np.sin(a * np.arctan(np.pi / (2.0 * L))) / (L * L + np.pi ** 2 / 4.0) ** (a / 2.0)


def sinlog_integral(a: float, t: float, y0: float = 1e-3, n_gl: int = 10):
    """int_0^(t/2) sin(u)/(u log^a(t/u)) du via the rotated contour.

    Returns (direct, asymptotic) where asymptotic = pi/(2 log^a t).  The
    vertical-segment integrand is smooth and positive; its small-y tail has
    a closed form, and the quarter-arc term decays like 1/t.
    """
    if t <= math.e ** 2:
        raise ValueError("t must exceed e^2")
    # vertical segment, y in [y0, min(t/2, 60)]
    y_hi = min(0.5 * t, 60.0)
    br = geom_breaks(y0, y_hi, 24)
    y, wy = panel_nodes(br, n_gl)
    main = float(np.dot(wy, np.exp(-y) * _sinlog_f(np.log(t / y), a) / y))
    # exact closed-form tail of int_0^{y0} f(log(t/y))/y dy
    L0 = np.log(t / y0)
    if a == 1.0:
        tail = math.atan(np.pi / (2.0 * L0))
    else:
        tail = float(np.imag((L0 - 0.5j * np.pi) ** (1.0 - a))) / (a - 1.0)
    # remainder int_0^{y0} (e^-y - 1) f(log(t/y))/y dy
    br2 = geom_breaks(1e-14, y0, 12)
    y2, wy2 = panel_nodes(br2, n_gl)
    corr = float(np.dot(wy2, np.expm1(-y2) * _sinlog_f(np.log(t / y2), a) / y2))
    # quarter arc:  Im( int_0^(pi/2) i e^{(it/2)cos th} e^{-(t/2) sin th}
    #                    / (log 2 - i th)^a  d th );  boundary layer ~ 1/t
    th_edges = np.concatenate(([0.0], geom_breaks(0.05 / t, 0.5 * np.pi, 16)))
    th, wth = panel_nodes(th_edges, n_gl)
    integ = 1j * np.exp(0.5j * t * np.cos(th) - 0.5 * t * np.sin(th)) \
        / (np.log(2.0) - 1j * th) ** a
    arc = float(np.dot(wth, np.imag(integ)))
    direct = main + tail + corr - arc
    return direct, 0.5 * np.pi / np.log(t) ** a


def sinlog_raw(a: float, t: float, per_period: int = 4, n_gl: int = 10):
    """Direct oscillatory quadrature of the sine-log integral (moderate t)."""
    if t > 2e6:
        raise OscillationError(
            "raw oscillatory path refused for t > 2e6; use the contour form")
    br = osc_breaks(0.0, 0.5 * t, 2.0 * np.pi, per_period)
    u, wu = panel_nodes(br, n_gl)
    m = u > 0
    vals = np.zeros_like(u)
    vals[m] = np.sin(u[m]) / (u[m] * np.log(t / u[m]) ** a)
    return float(np.dot(wu, vals))


# --------------------------------------------------------------------------
# the radiation inner product and its explicit remainder
# --------------------------------------------------------------------------

def v2_inner_product(t: float, lam_val: float, b: float,
                     cfg: FieldConfig = DEFAULT_CFG) -> float:
    """<potential * radiation, resonance> as the stated frequency integral."""
    gx, gw = gauss_legendre(cfg.n_xi_gl)
    br = osc_breaks(0.0, 0.25, 2.0 * np.pi / t, cfg.xi_per_period)
    return -2.0 * cb_constant(b) * hot.v2ip_sum(float(t), float(lam_val),
                                                float(b), br, gx, gw)


def _sinlog_combo(t: float, b: float) -> float:
    """The log-weighted sine-integral remainder of the inner product."""
    if b == 1.0:
        s1, asy1 = sinlog_integral(1.0, t)
        s2, _ = sinlog_integral(2.0, t)
        return -(s1 - asy1) - s2
    sb, asyb = sinlog_integral(b, t)
    sb1, _ = sinlog_integral(b + 1.0, t)
    return (b - 1.0) * (sb - asyb) + b * (b - 1.0) * sb1


def ev2ip(t: float, lam_val: float, b: float, cfg: FieldConfig = DEFAULT_CFG,
          t_osc_cut: float = 3e4) -> float:
    """Explicit remainder E of the inner product law
        <...> = 4b/(lam t^2 log^b t) + E(t, lam).

    The cutoff-band and curvature pieces decay one full power of t faster
    than everything else; they are evaluated exactly up to t_osc_cut and
    dropped beyond (relative size < 1e-3 there).
    """
    cb = cb_constant(b)
    out = 2.0 * cb / (lam_val * t * t) * _sinlog_combo(t, b)
    if t <= t_osc_cut:
        gx, gw = gauss_legendre(cfg.n_xi_gl)
        br = osc_breaks(0.0, 0.5, 2.0 * np.pi / t, cfg.xi_per_period)
        out += 2.0 * cb / (t * t) * (
            hot.psi_sum(t, lam_val, b, br, gx, gw)
            + hot.fv2_sum(t, lam_val, b, br, gx, gw))
        out += 2.0 * cb / (lam_val * t * t) * hot.chim1_sum(t, b, br, gx, gw)
    return out


# --------------------------------------------------------------------------
# interpolation table for the 2D kernel
# --------------------------------------------------------------------------

class KTable:
    """log-log bicubic table of K(x, lam)/lam^2 for fast convolution."""

    def __init__(self, lam_lo: float, lam_hi: float, x_lo: float = 1e-4,
                 x_hi: float = 3e4, per_decade: int = 14, n_lam: int = 14,
                 quad: kernels.KernelQuad = None):
        quad = quad or kernels.KernelQuad()
        self.x_lo, self.x_hi = x_lo, x_hi
        xg = geom_breaks(x_lo, x_hi, per_decade)
        lg = np.geomspace(lam_lo, lam_hi, n_lam)
        vals = np.empty((xg.size, lg.size))
        for j, lv in enumerate(lg):
            for i, xv in enumerate(xg):
                vals[i, j] = kernels.kernel_K(xv, lv, quad)
        self._spl = RectBivariateSpline(np.log(xg), np.log(lg),
                                        np.log(vals / lg[None, :] ** 2),
                                        kx=3, ky=3)
        self.lam_lo, self.lam_hi = lg[0], lg[-1]

    def eval(self, w, lam_val: float):
        w = np.asarray(w, dtype=float)
        out = np.zeros_like(w)
        lam_c = min(max(lam_val, self.lam_lo), self.lam_hi)
        inside = (w >= self.x_lo) & (w <= self.x_hi)
        if inside.any():
            out[inside] = np.exp(self._spl(np.log(w[inside]), np.log(lam_c),
                                           grid=False)) * lam_val ** 2
        small = (w > 0) & (w < self.x_lo)
        if small.any():
            k0 = float(np.exp(self._spl(np.log(self.x_lo), np.log(lam_c)))) \
                * lam_val ** 2
            out[small] = k0 * w[small] / self.x_lo
        return out


# --------------------------------------------------------------------------
# term-wise assembly of the modulation identity
# --------------------------------------------------------------------------

def _w_quad(t: float, w_mult: float = 1e4, per_decade: int = 14, n_gl: int = 6):
    wb = halfline_breaks(t, 1e-7, w_mult * t, per_decade)
    return panel_nodes(wb, n_gl)


def _e01_value(lam, dlam, d2lam, alpha):
    return (2.0 * dlam ** 2 / lam ** 2 + 2.0 * d2lam / lam
            - 4.0 * alpha * d2lam * np.log(lam) / lam
            * (1.0 / (-1.0 + lam ** (2.0 * alpha)) + 1.0))


@dataclass
class FieldTermEvaluators:
    """Callables for the optional field inner products of the identity."""

    v123: Callable = None        # (t, r) -> v1+v2+v3
    v45: Callable = None         # (t, r) -> v4+v5
    e5: Callable = None          # (t, r) -> E5 remainder of v3
    f02: Callable = None         # (t, r) -> F02


def phi_terms(t: float, lam: LambdaPath, b: float, alpha: float,
              ktab: KTable = None, mask=DEFAULT_TERMS,
              cfg: FieldConfig = DEFAULT_CFG, N: int = 6,
              fields: FieldTermEvaluators = None,
              e5_table: Callable = None,
              ev2_fn: Callable = None) -> dict:
    """All terms of the orthogonality identity at time t for the given path.

    Returns a dict of named contributions; their sum is lam * <principal
    residual, rescaled resonance>, which vanishes at a solution.
    """
    lv = float(lam.fn(t))
    dv = float(lam.dfn(t))
    d2v = float(lam.d2fn(t))
    wn, ww = _w_quad(t)
    lpp = np.asarray(lam.d2fn(t + wn), dtype=float)
    c1a = lv ** (1.0 - alpha)

    terms = {}
    terms["int_sharp"] = -4.0 * float(np.dot(ww, lpp / (1.0 + wn)))
    terms["source"] = 4.0 * b / (t * t * np.log(t) ** b)
    terms["local_log"] = 4.0 * alpha * math.log(lv) * d2v
    terms["int_peaked"] = -4.0 * float(
        np.dot(ww, lpp / ((c1a + wn) * (1.0 + wn) ** 3)))

    if "e01" in mask:
        terms["e01"] = lv * _e01_value(lv, dv, d2v, alpha)
    if "k3" in mask:
        dk = kernels.kernel_K3(wn, lv, alpha) - kernels.kernel_K30(wn, lv, alpha)
        terms["k3"] = 16.0 * float(np.dot(ww, lpp * dk))
    if "k" in mask and ktab is not None:
        terms["k"] = -16.0 / lv ** 2 * float(np.dot(ww, lpp * ktab.eval(wn, lv)))
    if "ev2" in mask:
        e_val = ev2_fn(t, lv) if ev2_fn is not None else ev2ip(t, lv, b, cfg)
        terms["ev2"] = lv * e_val
    if "k1" in mask:
        k1d = _k1_diff_vec(wn, lv)
        terms["k1"] = -16.0 / lv ** 2 * float(np.dot(ww, lpp * k1d))
    if "e5" in mask:
        if e5_table is not None:
            terms["e5"] = float(e5_table(t))
        elif fields is not None and fields.e5 is not None:
            terms["e5"] = -_pot_inner(fields.e5, t, lv)
    if "v45" in mask and fields is not None and fields.v45 is not None:
        def f(tt, rr):
            from .specfun import chi_ge_one
            return fields.v45(tt, rr) * (1.0 - chi_ge_one(4.0 * rr / tt))
        terms["v45"] = -_pot_inner(f, t, lv)
    if "chiN" in mask and fields is not None:
        from .specfun import chi_ge_one
        logN = np.log(t) ** N

        def fcut(tt, rr):
            return chi_ge_one(2.0 * rr / logN) * fields.v123(tt, rr)

        terms["chiN_v"] = _pot_inner(fcut, t, lv)
        terms["chiN_f02"] = -lv * _phi0_inner(
            lambda tt, rr: chi_ge_one(2.0 * rr / logN) * fields.f02(tt, rr),
            t, lv)
    return terms


def _k1_diff_vec(w, lam_val: float):
    """K1(w, lam) - lam^2/(4(1+w)) vectorized over w."""
    return kernels.kernel_K1_vec(w, lam_val) - lam_val ** 2 / (4.0 * (1.0 + w))


def _pot_inner(f: Callable, t: float, lam_val: float,
               r_lo: float = 1e-4, r_hi: float = 1e4,
               per_decade: int = 16, n_gl: int = 8) -> float:
    """(16/lam) int f(t, R lam) R^2/(1+R^2)^3 dR -- the potential-weighted
    inner product in rescaled coordinates (equals -lam <pot f, resonance>)."""
    Rb = np.concatenate(([0.0], geom_breaks(r_lo, r_hi, per_decade)))
    R, Rw = panel_nodes(Rb, n_gl)
    vals = np.asarray(f(t, R * lam_val), dtype=float)
    return 16.0 / lam_val * float(np.dot(Rw, vals * R ** 2 / (1.0 + R ** 2) ** 3))


def _phi0_inner(f: Callable, t: float, lam_val: float,
                r_lo: float = 1e-4, r_hi: float = 1e5,
                per_decade: int = 16, n_gl: int = 8) -> float:
    """int f(t, R lam) phi0(R) R dR."""
    Rb = np.concatenate(([0.0], geom_breaks(r_lo, r_hi, per_decade)))
    R, Rw = panel_nodes(Rb, n_gl)
    vals = np.asarray(f(t, R * lam_val), dtype=float)
    return float(np.dot(Rw, vals * 2.0 * R * R / (1.0 + R * R)))


def g_assemble(t: float, lam: LambdaPath, b: float, alpha: float,
               ktab: KTable = None, term_mask=DEFAULT_TERMS,
               cfg: FieldConfig = DEFAULT_CFG, N: int = 6,
               fields: FieldTermEvaluators = None) -> float:
    """The right-hand side G(t, lam) of the modulation identity: the sum of
    every selected subleading term (empty mask gives 0)."""
    terms = phi_terms(t, lam, b, alpha, ktab=ktab, mask=term_mask, cfg=cfg,
                      N=N, fields=fields)
    return -sum(v for k, v in terms.items()
                if k not in ("int_sharp", "source", "local_log", "int_peaked"))


# --------------------------------------------------------------------------
# the fixed-point solve
# --------------------------------------------------------------------------

@dataclass
class EPath:
    """A ball element: grid arrays plus weighted-pchip closures."""

    grid: np.ndarray
    e0: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    weights: XNormWeights
    _p2: PchipInterpolator = field(default=None, repr=False)

    def __post_init__(self):
        w2 = self.weights.w2(self.grid)
        self._p2 = PchipInterpolator(np.log(self.grid), self.e2 * w2,
                                     extrapolate=False)

    def d2fn(self, t):
        t = np.asarray(t, dtype=float)
        hat = self._p2(np.log(np.clip(t, self.grid[0], self.grid[-1])))
        lo = self.e2[0] * self.weights.w2(self.grid[0])
        hi = self.e2[-1] * self.weights.w2(self.grid[-1])
        hat = np.where(t < self.grid[0], lo, hat)
        hat = np.where(t > self.grid[-1], hi, hat)
        out = hat / self.weights.w2(t)
        return out if out.ndim else float(out)

    def norm(self) -> float:
        return x_norm(self.e0, self.e1, self.e2, self.weights, self.grid)


def zero_epath(grid, weights: XNormWeights) -> EPath:
    z = np.zeros_like(grid)
    return EPath(grid, z.copy(), z.copy(), z.copy(), weights)


def ball_epath(grid, weights: XNormWeights, radius: float, seed: int,
               freq: float = 1.0) -> EPath:
    """A seeded smooth ball element, specified through its curvature."""
    rng = np.random.default_rng(seed)
    a0 = rng.uniform(-1.0, 1.0)
    a1 = rng.uniform(-1.0, 1.0)
    ph = rng.uniform(0.0, 2.0 * np.pi)
    shape = a0 + a1 * np.sin(freq * np.log(np.log(grid)) + ph)
    e2 = shape / weights.w2(grid)
    e1, e0 = _integrate_twice(grid, e2, weights)
    p = EPath(grid, e0, e1, e2, weights)
    n = p.norm()
    s = radius / n
    return EPath(grid, e0 * s, e1 * s, e2 * s, weights)


def _extended_grid(grid, factor: float = 1e6, n_extra: int = 240):
    ext = np.geomspace(grid[-1], grid[-1] * factor, n_extra + 1)[1:]
    return np.concatenate([grid, ext])


def _integrate_twice(grid, e2, weights: XNormWeights):
    """e'(t) = -int_t^inf e'' ; e(t) = int_t^inf int_q^inf e''.

    Beyond the grid the curvature follows the norm-weight decay model."""
    tg = _extended_grid(grid)
    hat2 = e2[-1] * weights.w2(grid[-1])
    e2_ext = np.concatenate([e2, hat2 / weights.w2(tg[grid.size:])])
    P = PchipInterpolator(tg, e2_ext)
    A = P.antiderivative()
    F = A(tg[-1]) - A(tg)           # int_t^Tmax e''
    e1 = -(F[:grid.size])
    Q = PchipInterpolator(tg, F)
    B = Q.antiderivative()
    e0 = (B(tg[-1]) - B(tg))[:grid.size]
    return e1, e0


@dataclass
class ModulationContext:
    """Precomputed machinery for one (b, alpha, N, grid) configuration."""

    b: float
    alpha: float
    N: int
    T0: float
    S_max: float
    grid: np.ndarray
    lam0: LambdaPath
    weights: XNormWeights
    matrix: np.ndarray
    ktab: KTable
    ev2_table: Callable       # (t, lam) -> E_{v2,ip}
    e5_table: Callable = None
    term_mask: tuple = DEFAULT_TERMS
    cfg: FieldConfig = DEFAULT_CFG
    drop_source: bool = False

    def lam_path(self, e: EPath) -> LambdaPath:
        base = self.lam0
        w = self.weights
        gp0 = PchipInterpolator(np.log(self.grid), e.e0 * w.w0(self.grid),
                                extrapolate=False)
        gp1 = PchipInterpolator(np.log(self.grid), e.e1 * w.w1(self.grid),
                                extrapolate=False)

        def _ex(p, wfun, arr, t):
            t = np.asarray(t, dtype=float)
            hat = p(np.log(np.clip(t, self.grid[0], self.grid[-1])))
            hat = np.where(t < self.grid[0], arr[0] * wfun(self.grid[0]), hat)
            hat = np.where(t > self.grid[-1], arr[-1] * wfun(self.grid[-1]), hat)
            return hat / wfun(t)

        return LambdaPath(
            b=self.b, t_grid=self.grid,
            values=base.fn(self.grid) + e.e0,
            d1=base.dfn(self.grid) + e.e1,
            d2=base.d2fn(self.grid) + e.e2,
            fn=lambda t: base.fn(t) + _ex(gp0, w.w0, e.e0, t),
            dfn=lambda t: base.dfn(t) + _ex(gp1, w.w1, e.e1, t),
            d2fn=lambda t: base.d2fn(t) + e.d2fn(t),
            label="lambda0+e",
        )


def build_context(b: float, alpha: float = 0.05, N: int = 6, T0: float = 1e3,
                  S_max: float = 1e9, per_decade: int = 96,
                  term_mask=DEFAULT_TERMS, with_e5: bool = True,
                  cfg: FieldConfig = DEFAULT_CFG,
                  t_osc_cut: float = 3e4) -> ModulationContext:
    lam0 = lambda0_path(b, T0, S_max,
                        t_grid=np.geomspace(T0, S_max, max(
                            8, int(np.ceil(np.log10(S_max / T0) * per_decade)) + 1)))
    grid = lam0.t_grid
    weights = XNormWeights(b, T0)
    matrix = build_operator_matrix(grid, lam0, alpha, tail_weight=weights.w2)

    lam_vals = lam0.fn(grid)
    ktab = KTable(float(lam_vals.min()) / 1.7, float(lam_vals.max()) * 1.7)

    # E_{v2,ip}(t, lam): sine-log combo on the grid (lam-independent part)
    # plus the small oscillatory pieces for t <= t_osc_cut, frozen at lam0.
    combo = np.array([_sinlog_combo(float(tv), b) for tv in grid])
    combo_p = PchipInterpolator(np.log(grid), combo)
    cb = cb_constant(b)
    gx, gw = gauss_legendre(cfg.n_xi_gl)
    osc_extra = np.zeros_like(grid)
    for i, tv in enumerate(grid):
        if tv <= t_osc_cut:
            br = osc_breaks(0.0, 0.5, 2.0 * np.pi / tv, cfg.xi_per_period)
            lv = float(lam_vals[i])
            osc_extra[i] = (2.0 * cb / tv ** 2 * (
                hot.psi_sum(tv, lv, b, br, gx, gw)
                + hot.fv2_sum(tv, lv, b, br, gx, gw))
                + 2.0 * cb / (lv * tv ** 2) * hot.chim1_sum(tv, b, br, gx, gw))
    osc_p = PchipInterpolator(np.log(grid), osc_extra * grid ** 3)

    def ev2_table(t, lam_val):
        t = float(t)
        base = 2.0 * cb / (lam_val * t * t) * float(combo_p(np.log(t)))
        return base + float(osc_p(np.log(t))) / t ** 3

    e5_table = None
    if with_e5:
        sub = np.geomspace(T0, S_max, 40)
        e5_vals = _e5_inner_table(sub, lam0, alpha, cfg)
        e5_p = PchipInterpolator(np.log(sub), e5_vals * sub ** 2
                                 * np.log(sub) ** (b + 1))

        def e5_table(t):  # noqa: F811
            t = float(t)
            return float(e5_p(np.log(t))) / (t * t * np.log(t) ** (b + 1))

    return ModulationContext(
        b=b, alpha=alpha, N=N, T0=T0, S_max=S_max, grid=grid, lam0=lam0,
        weights=weights, matrix=matrix, ktab=ktab, ev2_table=ev2_table,
        e5_table=e5_table, term_mask=term_mask, cfg=cfg)


def e5_point(t: float, r: float, lam: LambdaPath, alpha: float,
             cfg: FieldConfig = DEFAULT_CFG) -> float:
    """E5 = v3 - (leading sharp part), the remainder of the decomposition."""
    from .lightcone import v3_eval
    v3 = v3_eval(t, r, lam, alpha, cfg)
    if r == 0.0:
        return 0.0
    wb = halfline_breaks(t, max(6.0 * r, 1e-7), 1e4 * t, 14)
    wn, ww = panel_nodes(wb, 6)
    keep = wn >= 6.0 * r
    wn, ww = wn[keep], ww[keep]
    lv = float(lam.fn(t))
    lpp = np.asarray(lam.d2fn(t + wn), dtype=float)
    lead = -r * float(np.dot(ww, lpp * wn * (
        1.0 / (1.0 + wn ** 2) - 1.0 / (lv ** (2.0 - 2.0 * alpha) + wn ** 2))))
    return v3 - lead


def _e5_inner_table(grid, lam: LambdaPath, alpha: float,
                    cfg: FieldConfig) -> np.ndarray:
    """The e5 term of phi_terms on a coarse grid.

    Uses the exact collapse of the sharp part of the third correction onto
    its closed kernel:  -<pot E5> * lam = -P(v3) - 16 int K3 lam'' , with
    P(v3) the potential-weighted radial integral of v3.  This avoids the
    pointwise cancellation of v3 against its leading part entirely."""
    from .lightcone import v3_eval
    lean = FieldConfig(w_min=1e-6, w_max_mult=1e3, w_per_decade=16,
                       n_w_gl=4, n_phi=16, phi_span=8, n_phi_gl=4)
    out = np.empty_like(grid)
    for i, tv in enumerate(grid):
        tv = float(tv)
        lv = float(lam.fn(tv))
        p_v3 = _pot_inner(
            lambda tt, rr: np.array([v3_eval(float(tt), float(rv), lam,
                                             alpha, lean) for rv in rr]),
            tv, lv, r_lo=1e-3, r_hi=2e3, per_decade=4, n_gl=4)
        wn, ww = _w_quad(tv)
        lpp = np.asarray(lam.d2fn(tv + wn), dtype=float)
        k3_int = 16.0 * float(np.dot(ww, lpp * kernels.kernel_K3(wn, lv, alpha)))
        out[i] = -p_v3 - k3_int
    return out


def rhs_on_grid(ctx: ModulationContext, e: EPath) -> np.ndarray:
    """RHS(e, t) of the rearranged equation on the grid: the fixed operator
    applied to e'' minus the full identity residual over log(lam0).

    The operator side uses the same quadrature nodes as the identity's sharp
    integrals, so their e-linear parts cancel exactly and the map's measured
    Lipschitz constant reflects only the genuine weak couplings."""
    lam = ctx.lam_path(e)
    log_l0 = np.log(ctx.lam0.fn(ctx.grid))
    phi = np.empty_like(ctx.grid)
    lhs_op = np.empty_like(ctx.grid)
    for i, tv in enumerate(ctx.grid):
        tv = float(tv)
        terms = phi_terms(tv, lam, ctx.b, ctx.alpha, ktab=ctx.ktab,
                          mask=ctx.term_mask, cfg=ctx.cfg, N=ctx.N,
                          e5_table=ctx.e5_table,
                          ev2_fn=ctx.ev2_table)
        if ctx.drop_source:
            terms = dict(terms)
            terms["source"] = 0.0
        phi[i] = sum(terms.values())
        wn, ww = _w_quad(tv)
        epp = np.asarray(e.d2fn(tv + wn), dtype=float)
        phis = 1.0 / np.abs(np.log(ctx.lam0.fn(tv + wn)))
        c0 = float(ctx.lam0.fn(tv)) ** (1.0 - ctx.alpha)
        kern = 1.0 / (1.0 + wn) + 1.0 / ((c0 + wn) * (1.0 + wn) ** 3)
        lhs_op[i] = 4.0 * ctx.alpha * e.e2[i] \
            + 4.0 * float(np.dot(ww, epp * phis * kern))
    return lhs_op - phi / log_l0


def t_map(ctx: ModulationContext, e: EPath) -> EPath:
    """One application of the fixed-point map T."""
    rhs = rhs_on_grid(ctx, e)
    p = VolterraProblem(ctx.T0, ctx.alpha, ctx.lam0, None,
                        rhs / (4.0 * ctx.alpha), ctx.grid)
    s_e, _ = resolvent_solve(p, matrix=ctx.matrix, with_resolvent=False)
    e1, e0 = _integrate_twice(ctx.grid, s_e, ctx.weights)
    return EPath(ctx.grid, e0, e1, s_e, ctx.weights)


@dataclass
class ModulationSolution:
    ctx: ModulationContext
    e0_path: EPath
    lam: LambdaPath
    iterations: int
    converged: bool
    norm_trace: list
    diff_trace: list

    def interior_norm(self, lo_frac: float = 0.0, hi_cut: float = 1e3) -> float:
        g = self.ctx.grid
        m = g <= g[-1] / hi_cut
        return x_norm(self.e0_path.e0[m], self.e0_path.e1[m],
                      self.e0_path.e2[m], self.ctx.weights, g[m])


def solve_modulation(ctx: ModulationContext, tol: float = 1e-4,
                     max_iter: int = 25, diag_path=None,
                     e_start: EPath = None) -> ModulationSolution:
    """Iterate T to its fixed point; per-iteration diagnostics as JSON lines."""
    e = e_start if e_start is not None else zero_epath(ctx.grid, ctx.weights)
    traces, diffs = [], []
    lines = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        e_new = t_map(ctx, e)
        diff = x_norm(e_new.e0 - e.e0, e_new.e1 - e.e1, e_new.e2 - e.e2,
                      ctx.weights, ctx.grid)
        nrm = e_new.norm()
        traces.append(nrm)
        diffs.append(diff)
        lines.append(json.dumps({"iter": it, "x_norm": nrm, "diff": diff}))
        e = e_new
        if diff < tol * max(nrm, 1e-6):
            converged = True
            break
    if diag_path is not None:
        with open(diag_path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    lam = ctx.lam_path(e)
    return ModulationSolution(ctx, e, lam, it, converged, traces, diffs)


def orthogonality_check(lam: LambdaPath, ctx: ModulationContext,
                        t_samples, fields: FieldTermEvaluators = None,
                        mask=None) -> list:
    """|sum of identity terms| / sum |terms| at the sampled times."""
    mask = ctx.term_mask if mask is None else mask
    out = []
    for tv in t_samples:
        terms = phi_terms(float(tv), lam, ctx.b, ctx.alpha, ktab=ctx.ktab,
                          mask=mask, cfg=ctx.cfg, N=ctx.N,
                          fields=fields, e5_table=None if fields else ctx.e5_table,
                          ev2_fn=ctx.ev2_table)
        total = sum(terms.values())
        denom = sum(abs(v) for v in terms.values())
        out.append({"t": float(tv), "value": total, "sum_abs": denom,
                    "ratio": abs(total) / denom, "terms": terms})
    return out
