"""Backward light-cone representations of the correction fields.

All corrections solve the radial wave equation with the 1/r^2 degenerate
potential and zero Cauchy data at infinity; the generic evaluator integrates
the source over the backward cone (spherical means), while v1/v2/v3 use the
closed integrand forms obtained after the angular integral is done exactly.
"""

import math
import struct
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import RectBivariateSpline

from . import hot
from .lambda_model import LambdaPath
from .quadrature import (gauss_legendre, geom_breaks, halfline_breaks,
                         osc_breaks, panel_nodes, periodic_trapezoid)
from .specfun import chi_ge_one, chi_le_quarter, log_symbol

__all__ = [
    "FieldConfig", "SourceField", "RadialField", "cb_constant",
    "duhamel_eval", "v1_eval", "v2_eval", "v2_initial_data",
    "v2_general_data", "v3_eval", "v4_source", "v5_source", "n2_of",
    "FieldLattice", "build_lattice", "save_lattice", "load_lattice",
    "make_v1_field", "make_v2_field", "make_v3_field",
]


def cb_constant(b: float) -> float:
    """Normalization of the radiation data (separate branch at b = 1)."""
    if b == 1.0:
        return -4.0 / np.pi
    return 4.0 * b / (np.pi * (b - 1.0))


@dataclass(frozen=True)
class FieldConfig:
    """Quadrature knobs shared by the field evaluators."""

    w_min: float = 1e-6         # first panel edge in w = s - t
    w_max_mult: float = 1e5     # s-integral truncated at t + mult * t
    w_per_decade: int = 24
    n_w_gl: int = 6
    n_phi: int = 24
    # Half-period panels: period-commensurate panels let fixed node/weight
    # imperfections correlate with the phase and accumulate coherently.
    xi_per_period: int = 2
    n_xi_gl: int = 12
    n_theta: int = 32
    phi_span: int = 10      # geometric depth of the adapted flip panels
    n_phi_gl: int = 6


DEFAULT_CFG = FieldConfig()


@dataclass
class SourceField:
    """Right-hand side for the degenerate radial wave operator."""

    eval: Callable            # (s, q) -> value, broadcastable arrays
    support_rmin: Callable = None   # s -> inner support radius (None: global)
    support_rmax: Callable = None   # s -> outer effective radius
    phi_anchors: list = None        # (rho, width) structure hints
    decay_note: str = ""


@dataclass
class RadialField:
    """A correction as a callable over (t, r) with metadata."""

    name: str
    eval: Callable            # (t, r) -> value
    params: dict = field(default_factory=dict)
    dt: Callable = None
    dr: Callable = None

    def __call__(self, t, r):
        return self.eval(t, r)


def _w_rules(t: float, cfg: FieldConfig, crits=()):
    """Log-spaced w-panels, refined around any (position, width) features
    (the inner integral develops a kink when a sign flip crosses the cone)."""
    wb = halfline_breaks(t, cfg.w_min, cfg.w_max_mult * t, cfg.w_per_decade)
    extra = []
    for pos, width in crits:
        if pos <= 0.0 or not np.isfinite(pos):
            continue
        offs = width * 2.0 ** np.arange(-2, 12)
        pts = np.concatenate([[pos], pos - offs, pos + offs])
        extra.append(pts[(pts > 0.0) & (pts < wb[-1])])
    if extra:
        wb = np.unique(np.concatenate([wb] + extra))
    return panel_nodes(wb, cfg.n_w_gl)


def _adapted_phi(r: float, wn: np.ndarray, flips, n_base: int = 8,
                 n_gl: int = 6, span: int = 10):
    """Per-w Gauss panels on [0, pi/2] with edges clustered at each sign
    flip of the integrand.

    `flips` is a list of (rho_star(w) array, width(w) array) pairs; edges are
    taken at rho = rho_star +/- width * 2^k and mapped through asin(rho/w).
    Coincident or out-of-range edges collapse to zero-width panels.
    """
    nw = wn.size
    base = np.linspace(0.0, 0.5 * np.pi, n_base + 1)
    cols = [np.broadcast_to(base, (nw, base.size))]
    for rho_star, width in flips:
        offs = width[:, None] * (2.0 ** np.arange(-2, span - 2))[None, :]
        pts = np.concatenate([rho_star[:, None] - offs[:, ::-1],
                              rho_star[:, None],
                              rho_star[:, None] + offs], axis=1)
        with np.errstate(invalid="ignore"):
            phi = np.arcsin(np.clip(pts / wn[:, None], 0.0, 1.0))
        cols.append(phi)
    edges = np.sort(np.concatenate(cols, axis=1), axis=1)
    gx, gw = gauss_legendre(n_gl)
    a = edges[:, :-1]
    half = 0.5 * np.diff(edges, axis=1)
    nodes = (a[:, :, None] + half[:, :, None] * (1.0 + gx)[None, None, :])
    weights = half[:, :, None] * gw[None, None, :]
    return (nodes.reshape(nw, -1), weights.reshape(nw, -1))


def _v1_anchor(r: float):
    """Transition of 1 + u/sqrt(u^2+4r^2), u = r^2-1-rho^2: centered where
    u changes sign (rho ~ sqrt(r^2-1)) with width ~ 2 max(r,1)."""
    rho = math.sqrt(max(r * r - 1.0, 0.25))
    return rho, 2.0 * max(r, 1.0) / rho


def _v1_phi_rules(r: float, wn: np.ndarray, cfg: FieldConfig):
    rho, wid = _v1_anchor(r)
    flips = [(np.full(wn.size, rho), np.full(wn.size, wid))]
    return _adapted_phi(r, wn, flips, n_base=max(4, cfg.n_phi // 4),
                        n_gl=cfg.n_phi_gl, span=cfg.phi_span)


def v1_eval(t: float, r: float, lam: LambdaPath,
            cfg: FieldConfig = DEFAULT_CFG) -> float:
    """First correction: cancels the slow-decay part of the soliton error."""
    if r == 0.0:
        return 0.0
    wn, ww = _w_rules(t, cfg, [_v1_anchor(r)])
    lpp = np.asarray(lam.d2fn(t + wn), dtype=float)
    phx, phw = _v1_phi_rules(float(r), wn, cfg)
    return hot.v1_sum(float(r), wn, ww, lpp, phx, phw) / r


def _f3_anchor(r: float, z: float):
    """Transition of q/sqrt(q^2+4r^2 z^2), q = 1-(r^2-rho^2)z^2: centered at
    the q sign flip (or at rho ~ r/2 when q never vanishes), width r/(rho z^2)
    + O(1/z)."""
    r2sq = r * r - 1.0 / (z * z)
    if r2sq > 0.0:
        rho = math.sqrt(r2sq)
        return rho, r / (max(rho, 1e-300) * z * z) + 0.1 / z
    return 0.5 * r, 0.5 * r + 0.1 / z


def v3_eval(t: float, r: float, lam: LambdaPath, alpha: float,
            cfg: FieldConfig = DEFAULT_CFG) -> float:
    """Third correction: repairs the rescaled soliton error at large R."""
    if r == 0.0:
        return 0.0
    lam_t = float(lam.fn(t))
    z_t = lam_t ** (alpha - 1.0)
    crits = [_v1_anchor(r), _f3_anchor(r, z_t)]
    wn, ww = _w_rules(t, cfg, crits)
    lpp = np.asarray(lam.d2fn(t + wn), dtype=float)
    lam_s = np.asarray(lam.fn(t + wn), dtype=float)
    rho1, wid1 = _v1_anchor(r)
    flips = [(np.full(wn.size, rho1), np.full(wn.size, wid1))]
    z = lam_s ** (alpha - 1.0)
    anchors = [_f3_anchor(r, float(zv)) for zv in z]
    flips.append((np.array([a[0] for a in anchors]),
                  np.array([a[1] for a in anchors])))
    phx, phw = _adapted_phi(float(r), wn, flips,
                            n_base=max(4, cfg.n_phi // 4),
                            n_gl=cfg.n_phi_gl, span=cfg.phi_span)
    return -hot.v3_sum(float(r), float(alpha), wn, ww, lpp, lam_s, phx, phw) / r


def _xi_breaks(t: float, r: float, cfg: FieldConfig, xi_max: float = 0.25):
    period = 2.0 * np.pi / (abs(t) + abs(r) + 1.0)
    return osc_breaks(0.0, xi_max, period, cfg.xi_per_period)


def v2_eval(t: float, r: float, b: float, cfg: FieldConfig = DEFAULT_CFG,
            jt: int = 0, kr: int = 0) -> float:
    """Free radiation field (or a t/r derivative of it, orders <= 2)."""
    gx, gw = gauss_legendre(cfg.n_xi_gl)
    br = _xi_breaks(t, r, cfg)
    return cb_constant(b) * hot.v2_sum(float(t), float(r), float(b),
                                       int(jt), int(kr), br, gx, gw)


def v2_initial_data(b: float, xi):
    """Frequency symbol of the radiation velocity data."""
    xi_arr = np.asarray(xi, dtype=float)
    out = cb_constant(b) * chi_le_quarter(xi_arr) * log_symbol(
        np.where(xi_arr > 0, xi_arr, 0.5), b)
    out = np.where(xi_arr > 0, out, 0.0)
    return out if out.ndim else float(out)


def v2_general_data(F: Callable, xi: float, t_max: float = 4e5,
                    per_period: int = 1, n_gl: int = 8) -> float:
    """Sine-transform symbol -1/(xi pi) * int_0^inf F(t) sin(t xi) dt for a
    general forcing profile F (smooth, supported in t >= 100)."""
    if xi <= 0:
        raise ValueError("xi must be positive")
    period = 2.0 * np.pi / xi
    br = osc_breaks(90.0, t_max, period, per_period)
    x, w = panel_nodes(br, n_gl)
    vals = np.asarray(F(x), dtype=float)
    return -float(np.dot(w, vals * np.sin(x * xi))) / (xi * np.pi)


def sine_inversion_apply(F: Callable, t0: float, xi_max: float,
                         s_lo: float = 90.0, s_hi: float = 2e5,
                         per_period: int = 2, n_gl: int = 8) -> float:
    """-2 int_0^xi_max sin(t0 xi) xi v2hat(xi) dxi for the generalized data
    built from F, with the xi-integral done in closed form first (Fubini):

        (1/pi) int F(s) [ sin((s-t0)Xi)/(s-t0) - sin((s+t0)Xi)/(s+t0) ] ds.

    Converges to F(t0) as xi_max grows (sine-transform inversion)."""
    period = 2.0 * np.pi / xi_max
    br = osc_breaks(s_lo, s_hi, period, per_period)
    s, w = panel_nodes(br, n_gl)
    fv = np.asarray(F(s), dtype=float)
    d = s - t0
    near = np.abs(d) < 1e-9
    kern = np.empty_like(s)
    kern[~near] = np.sin(d[~near] * xi_max) / d[~near]
    kern[near] = xi_max
    kern = kern - np.sin((s + t0) * xi_max) / (s + t0)
    return float(np.dot(w, fv * kern)) / np.pi


def duhamel_eval(S: SourceField, t: float, r: float,
                 cfg: FieldConfig = DEFAULT_CFG, w_chunk: int = 256,
                 w_crits=()) -> float:
    """Spherical-means solution of the degenerate wave equation with source S
    and zero data at infinity, evaluated at (t, r).

    w_crits: optional (position, width) pairs in w = s - t where the source
    or its cone average has sharp structure; the s-grid refines there."""
    if r == 0.0:
        return 0.0
    wn, ww = _w_rules(t, cfg, w_crits)
    th, wth = periodic_trapezoid(cfg.n_theta)
    cos_th = np.cos(th)

    if S.support_rmin is not None:
        smin = np.asarray(S.support_rmin(t + wn), dtype=float)
        keep = (r + wn) >= smin
        wn, ww = wn[keep], ww[keep]
        if wn.size == 0:
            return 0.0

    # phi panels: refine where the source support enters/leaves the cone
    # average (the contributing rho-window shrinks like 1/w for compactly
    # supported sources).
    flips = []
    if S.support_rmax is not None:
        rmax = np.asarray(S.support_rmax(t + wn), dtype=float) \
            * np.ones(wn.size)
        flips.append((rmax + r, np.full(wn.size, max(1.0, r))))
        flips.append((np.maximum(rmax - r, 1e-3),
                      np.full(wn.size, max(1.0, r))))
    if S.support_rmin is not None:
        rmin_v = np.asarray(S.support_rmin(t + wn), dtype=float) \
            * np.ones(wn.size)
        flips.append((np.maximum(rmin_v - r, 1e-3),
                      np.full(wn.size, max(1.0, r))))
    for pos, wid in (S.phi_anchors or []):
        flips.append((np.full(wn.size, pos), np.full(wn.size, wid)))
    phx, phw = _adapted_phi(r, wn, flips, n_base=max(6, cfg.n_phi // 4),
                            n_gl=cfg.n_phi_gl, span=cfg.phi_span)

    total = 0.0
    for lo in range(0, wn.size, w_chunk):
        hi = min(wn.size, lo + w_chunk)
        w_blk = wn[lo:hi]
        ww_blk = ww[lo:hi]
        s = (t + w_blk)[:, None, None]
        rho = w_blk[:, None, None] * np.sin(phx[lo:hi])[:, :, None]
        q2 = r * r + 2.0 * r * rho * cos_th[None, None, :] + rho ** 2
        q = np.sqrt(np.maximum(q2, 1e-300))
        g = S.eval(s, q) * (r + rho * cos_th[None, None, :]) / q
        wphi = phw[lo:hi] * np.sin(phx[lo:hi])
        inner = np.einsum('wpt,wp,t->w', g, wphi, wth)
        total += float(np.dot(ww_blk * w_blk, inner))
    return -total / (2.0 * np.pi)


def _sin2f_minus_2f(f):
    """sin(2f) - 2f without cancellation for small f."""
    f = np.atleast_1d(np.asarray(f, dtype=float))
    small = np.abs(f) < 1e-3
    out = np.empty_like(f)
    x = 2.0 * f
    out[~small] = np.sin(x[~small]) - x[~small]
    xs = x[small]
    out[small] = -xs ** 3 / 6.0 * (1.0 - xs ** 2 / 20.0 * (1.0 - xs ** 2 / 42.0))
    return out


def n2_of(f_val, t, r, lam_val):
    """Quadratic remainder N2(f) about the rescaled soliton."""
    r = np.asarray(r, dtype=float)
    R = r / lam_val
    R2 = R * R
    den = (1.0 + R2) ** 2
    cos2q = 1.0 - 8.0 * R2 / den
    sin2q = 4.0 * R * (1.0 - R2) / den
    f_val = np.asarray(f_val, dtype=float)
    out = (sin2q * (-2.0 * np.sin(f_val) ** 2)
           + cos2q * _sin2f_minus_2f(f_val).reshape(np.shape(f_val))) \
        / (2.0 * r * r)
    return out


def v4_source(t, r, v123: Callable, f02: Callable, lam: LambdaPath,
              N: int) -> np.ndarray:
    """Far-field linear error source: cutoff * (potential * (v1+v2+v3) + F02)."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    logN = np.log(t) ** N
    chi = chi_ge_one(2.0 * r / logN)
    out = np.zeros(np.broadcast(t, r).shape)
    m = chi > 0.0
    if np.any(m):
        tm = np.broadcast_to(t, out.shape)[m]
        rm = np.broadcast_to(r, out.shape)[m]
        lam_v = np.asarray(lam.fn(tm), dtype=float)
        R = rm / lam_v
        pot = -8.0 * R * R / ((1.0 + R * R) ** 2 * rm * rm)
        out[m] = np.asarray(chi, dtype=float)[m] * (
            pot * v123(tm, rm) + f02(tm, rm))
    return out


def v5_source(t, r, f_v5: Callable, lam: LambdaPath) -> np.ndarray:
    """Nonlinear interaction source N2(v1+v2+v3+v4)."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    lam_v = np.asarray(lam.fn(t), dtype=float)
    return n2_of(f_v5(t, r), t, r, lam_v)


# --- cached lattices for the expensive triple-integral fields -------------

_LATTICE_MAGIC = b"WMRXFLD1"


@dataclass
class FieldLattice:
    """Row-major (t, r) samples of v/r, interpolated bicubically in logs."""

    t_lattice: np.ndarray
    r_lattice: np.ndarray
    over_r: np.ndarray         # v(t, r)/r values, shape (nt, nr)

    def __post_init__(self):
        self._spl = RectBivariateSpline(
            np.log(self.t_lattice), np.log(self.r_lattice), self.over_r,
            kx=min(3, len(self.t_lattice) - 1),
            ky=min(3, len(self.r_lattice) - 1))

    def eval(self, t, r):
        t = np.asarray(t, dtype=float)
        r = np.asarray(r, dtype=float)
        shape = np.broadcast(t, r).shape
        tb = np.broadcast_to(t, shape).ravel()
        rb = np.broadcast_to(r, shape).ravel()
        out = np.zeros(tb.shape)
        m = rb > 0
        rc = np.clip(rb[m], self.r_lattice[0], self.r_lattice[-1])
        tc = np.clip(tb[m], self.t_lattice[0], self.t_lattice[-1])
        out[m] = self._spl(np.log(tc), np.log(rc), grid=False) * rb[m]
        out[rb > self.r_lattice[-1]] = 0.0
        res = out.reshape(shape)
        return res if res.ndim else float(res)


def build_lattice(point_eval: Callable, t_lo: float, t_hi: float,
                  r_lo: float, r_hi: float, nt: int = 12,
                  nr: int = 24) -> FieldLattice:
    tl = np.geomspace(t_lo, t_hi, nt)
    rl = np.geomspace(r_lo, r_hi, nr)
    vals = np.empty((nt, nr))
    for i, tv in enumerate(tl):
        for j, rv in enumerate(rl):
            vals[i, j] = point_eval(tv, rv) / rv
    return FieldLattice(tl, rl, vals)


def save_lattice(path, lat: FieldLattice):
    """Flat binary layout: magic, int64 nt, int64 nr, t edges, r edges, body."""
    with open(path, "wb") as fh:
        fh.write(_LATTICE_MAGIC)
        fh.write(struct.pack("<qq", len(lat.t_lattice), len(lat.r_lattice)))
        lat.t_lattice.astype("<f8").tofile(fh)
        lat.r_lattice.astype("<f8").tofile(fh)
        np.ascontiguousarray(lat.over_r, dtype="<f8").tofile(fh)


def load_lattice(path) -> FieldLattice:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _LATTICE_MAGIC:
            raise ValueError("not a field lattice file")
        nt, nr = struct.unpack("<qq", fh.read(16))
        tl = np.fromfile(fh, dtype="<f8", count=nt)
        rl = np.fromfile(fh, dtype="<f8", count=nr)
        body = np.fromfile(fh, dtype="<f8", count=nt * nr).reshape(nt, nr)
    return FieldLattice(tl, rl, body)


# --- bundled field constructors -------------------------------------------

def make_v1_field(lam: LambdaPath, cfg: FieldConfig = DEFAULT_CFG) -> RadialField:
    def ev(t, r):
        if np.ndim(r) == 0:
            return v1_eval(float(t), float(r), lam, cfg)
        return np.array([v1_eval(float(t), float(v), lam, cfg) for v in r])

    return RadialField("v1", ev, params={"b": lam.b})


def make_v2_field(b: float, cfg: FieldConfig = DEFAULT_CFG) -> RadialField:
    def ev(t, r, jt=0, kr=0):
        if np.ndim(r) == 0 and np.ndim(t) == 0:
            return v2_eval(float(t), float(r), b, cfg, jt, kr)
        t_arr, r_arr = np.broadcast_arrays(np.asarray(t, float), np.asarray(r, float))
        return np.array([v2_eval(float(tv), float(rv), b, cfg, jt, kr)
                         for tv, rv in zip(t_arr.ravel(), r_arr.ravel())
                         ]).reshape(t_arr.shape)

    return RadialField("v2", ev, params={"b": b},
                       dt=lambda t, r: ev(t, r, jt=1),
                       dr=lambda t, r: ev(t, r, kr=1))


def make_v3_field(lam: LambdaPath, alpha: float,
                  cfg: FieldConfig = DEFAULT_CFG) -> RadialField:
    def ev(t, r):
        if np.ndim(r) == 0:
            return v3_eval(float(t), float(r), lam, alpha, cfg)
        return np.array([v3_eval(float(t), float(v), lam, alpha, cfg) for v in r])

    return RadialField("v3", ev, params={"b": lam.b, "alpha": alpha})
