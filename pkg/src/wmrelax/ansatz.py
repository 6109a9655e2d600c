"""Assembly of the full corrected ansatz over a working (t, r) window.

The far-field and nonlinear corrections cost a triple integral per point, of
a source that itself costs integrals; both are therefore sampled on coarse
lattices backed by splines (resolution is a config knob), with the linear
corrections tabulated once on a (log s, log q) grid.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import RectBivariateSpline

from . import residual as rs
from .lambda_model import LambdaPath
from .lightcone import (DEFAULT_CFG, FieldConfig, FieldLattice, RadialField,
                        SourceField, build_lattice, duhamel_eval, n2_of,
                        v1_eval, v2_eval, v3_eval)
from .specfun import chi_ge_one

__all__ = ["AnsatzFields", "build_fields"]


class _V123Table:
    """Spline of (v1+v2+v3)(s, q) on a log-log grid."""

    def __init__(self, lam: LambdaPath, b: float, alpha: float,
                 s_lo: float, s_hi: float, q_lo: float, q_hi: float,
                 cfg: FieldConfig, per_decade_s: int = 14,
                 per_decade_q: int = 10):
        ns = max(6, int(np.log10(s_hi / s_lo) * per_decade_s))
        nq = max(6, int(np.log10(q_hi / q_lo) * per_decade_q))
        sg = np.geomspace(s_lo, s_hi, ns)
        qg = np.geomspace(q_lo, q_hi, nq)
        vals = np.empty((ns, nq))
        for i, sv in enumerate(sg):
            for j, qv in enumerate(qg):
                vals[i, j] = (v1_eval(float(sv), float(qv), lam, cfg)
                              + v2_eval(float(sv), float(qv), b, cfg)
                              + v3_eval(float(sv), float(qv), lam, alpha, cfg))
        self._spl = RectBivariateSpline(np.log(sg), np.log(qg), vals)
        self.s_range = (s_lo, s_hi)
        self.q_range = (q_lo, q_hi)

    def __call__(self, s, q):
        s = np.asarray(s, dtype=float)
        q = np.asarray(q, dtype=float)
        shape = np.broadcast(s, q).shape
        qb0 = np.broadcast_to(q, shape).ravel()
        sb = np.clip(np.broadcast_to(s, shape).ravel(), *self.s_range)
        qb = np.clip(qb0, *self.q_range)
        out = self._spl(np.log(sb), np.log(qb), grid=False)
        # corrections vanish linearly at the axis; extrapolate below the grid
        small = qb0 < self.q_range[0]
        if small.any():
            out[small] *= qb0[small] / self.q_range[0]
        out = out.reshape(shape)
        return out if out.ndim else float(out)


@dataclass
class AnsatzFields:
    """All corrections plus the residual bundle for one configuration."""

    lam: LambdaPath
    b: float
    alpha: float
    N: int
    cfg: FieldConfig
    v1: RadialField
    v2: RadialField
    v3: RadialField
    v4: RadialField
    v5: RadialField
    v123_table: Callable

    def bundle(self) -> rs.ResidualBundle:
        return rs.ResidualBundle(
            lam=self.lam, b=self.b, alpha=self.alpha, N=self.N,
            v1=self.v1.eval, v2=self.v2.eval, v3=self.v3.eval,
            v4=self.v4.eval if self.v4 else None,
            v5=self.v5.eval if self.v5 else None)


def build_fields(lam: LambdaPath, b: float, alpha: float, N: int,
                 t_lo: float, t_hi: float, cfg: FieldConfig = DEFAULT_CFG,
                 with_v45: bool = True, nt: int = 8, nr: int = 18,
                 table_cfg: FieldConfig = None) -> AnsatzFields:
    """Point evaluators for v1..v3 and lattice-backed v4, v5 on
    [t_lo, t_hi] x (0, t_hi]."""
    from .lightcone import make_v1_field, make_v2_field, make_v3_field

    f1 = make_v1_field(lam, cfg)
    f2 = make_v2_field(b, cfg)
    f3 = make_v3_field(lam, alpha, cfg)

    v4 = v5 = None
    table = None
    if with_v45:
        tab_cfg = table_cfg or FieldConfig(
            w_per_decade=14, n_w_gl=5, n_phi=12, phi_span=8, n_phi_gl=5,
            w_max_mult=1e3)
        # source window: w-tail cut at ~100 t (relative error ~1/w_mult) and
        # outer radius where the q^-3 source decay has killed everything
        s_hi = 1.5e2 * t_hi
        q_hi = 2e4
        table = _V123Table(lam, b, alpha, 0.8 * t_lo, s_hi,
                           1.0, q_hi, tab_cfg)

        def f02(s, q):
            return rs.F02(s, q, lam, alpha)

        def pot(s, q):
            lv = np.asarray(lam.fn(np.asarray(s, dtype=float)), dtype=float)
            R = np.asarray(q, dtype=float) / lv
            return -8.0 * R * R / ((1.0 + R * R) ** 2
                                   * np.asarray(q, dtype=float) ** 2)

        def v4c(s, q):
            chi = chi_ge_one(2.0 * np.asarray(q, float)
                             / np.log(np.asarray(s, float)) ** N)
            out = np.zeros(np.broadcast(np.asarray(s, float),
                                        np.asarray(q, float)).shape)
            m = chi > 0
            if np.any(m):
                sb = np.broadcast_to(np.asarray(s, float), out.shape)[m]
                qb = np.broadcast_to(np.asarray(q, float), out.shape)[m]
                out[m] = np.asarray(chi, float)[m] * (
                    pot(sb, qb) * table(sb, qb) + f02(sb, qb))
            return out

        src4 = SourceField(eval=v4c,
                           support_rmin=lambda s: 0.5 * np.log(
                               np.asarray(s, dtype=float)) ** N,
                           decay_note="far-field linear error")
        duh_cfg = FieldConfig(w_per_decade=12, n_w_gl=4, n_phi=12,
                              n_theta=16, phi_span=7, n_phi_gl=4,
                              w_max_mult=1e2)
        lat4 = build_lattice(
            lambda tv, rv: duhamel_eval(src4, tv, rv, duh_cfg),
            t_lo, t_hi, 1e-2, 0.75 * t_hi, nt=nt, nr=nr)
        v4 = RadialField("v4", lat4.eval, params={"N": N, "b": b})

        def f_v5(s, q):
            return table(s, q) + lat4.eval(s, q)

        def n2src(s, q):
            lv = np.asarray(lam.fn(np.asarray(s, dtype=float)), dtype=float)
            return n2_of(f_v5(s, q), s, q, lv)

        src5 = SourceField(eval=n2src, decay_note="quadratic interaction")
        lat5 = build_lattice(
            lambda tv, rv: duhamel_eval(src5, tv, rv, duh_cfg),
            t_lo, t_hi, 1e-2, 0.75 * t_hi, nt=max(3, nt // 2),
            nr=max(7, nr // 2))
        v5 = RadialField("v5", lat5.eval, params={"b": b})

    return AnsatzFields(lam=lam, b=b, alpha=alpha, N=N, cfg=cfg,
                        v1=f1, v2=f2, v3=f3, v4=v4, v5=v5,
                        v123_table=table)
