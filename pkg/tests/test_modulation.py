import dataclasses

import numpy as np
import pytest

from wmrelax import lambda_model as lm
from wmrelax import modulation as md
from wmrelax import volterra as vt
from wmrelax.lambda_model import x_norm


class TestSinlog:
    def test_dual_representation(self):
        for a in (0.5, 1.0, 2.0):
            ctr, _ = md.sinlog_integral(a, 1e3)
            raw = md.sinlog_raw(a, 1e3, per_period=16, n_gl=14)
            assert abs(ctr - raw) < 1e-8

    def test_asymptotic_trend_a1(self):
        scaled = []
        for t in (1e3, 1e6, 1e9):
            d, s = md.sinlog_integral(1.0, t)
            scaled.append(abs(d - s) * np.log(t) ** 2)
        assert max(scaled) / min(scaled) < 3.0

    def test_extra_log_power_trend(self):
        # consecutive scaled errors approach a constant from t = 1e4 on
        a = 2.0
        scaled = []
        for t in (1e4, 1e6, 1e9):
            d, s = md.sinlog_integral(a, t)
            scaled.append(abs(d - s) * np.log(t) ** (a + 1))
        assert max(scaled) / min(scaled) < 1.3

    def test_oscillation_refusal(self):
        with pytest.raises(md.OscillationError):
            md.sinlog_raw(1.0, 1e8)


class TestV2InnerProduct:
    @pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
    def test_law_moderate_t(self, b):
        lam0 = lm.lambda0_path(b, 8e2, 1e9)
        for t in (1e4, 1e6):
            lv = float(lam0.fn(t))
            ip = md.v2_inner_product(t, lv, b)
            sc = ip * lv * t * t * np.log(t) ** b / (4 * b)
            assert abs(sc - 1) < 5.0 / np.log(t)

    def test_deviation_law(self):
        # |ip - 4b/(lam t^2 log^b)| * lam t^2 log^{b+1} bounded
        b = 2.0
        lam0 = lm.lambda0_path(b)
        vals = []
        for t in (1e4, 1e6):
            lv = float(lam0.fn(t))
            ip = md.v2_inner_product(t, lv, b)
            dev = abs(ip - 4 * b / (lv * t * t * np.log(t) ** b))
            vals.append(dev * lv * t * t * np.log(t) ** (b + 1))
        assert max(vals) < 8 * b
        assert max(vals) / min(vals) < 3.0

    def test_explicit_remainder_identity(self):
        # ip == 4b/(lam t^2 log^b) + E with E assembled from its explicit
        # pieces (integration-by-parts algebra check)
        for b in (0.5, 2.0):
            lam0 = lm.lambda0_path(b)
            t = 3e3
            lv = float(lam0.fn(t))
            ip = md.v2_inner_product(t, lv, b)
            law = 4 * b / (lv * t * t * np.log(t) ** b) + md.ev2ip(t, lv, b)
            assert abs(ip / law - 1) < 1e-9

    def test_rspace_dual(self, lam0_b2):
        from wmrelax import lightcone as lc
        from wmrelax.quadrature import geom_breaks, panel_nodes
        b, t = 2.0, 1e3
        lv = float(lam0_b2.fn(t))
        ip = md.v2_inner_product(t, lv, b)
        Rb = np.concatenate(([0.0], geom_breaks(1e-4, 4e3 / lv, 20)))
        R, Rw = panel_nodes(Rb, 8)
        v2v = np.array([lc.v2_eval(t, float(rv * lv), b) for rv in R])
        dens = (-8.0 * R * R / (1 + R * R) ** 2) / (R * R * lv * lv) \
            * (2 * R / (1 + R * R)) * v2v * R
        direct = float(np.dot(Rw, dens))
        assert abs(direct / ip - 1) < 1e-5


class TestVolterraKernel:
    def test_zero_before_diagonal(self, lam0_b2):
        assert vt.volterra_kernel(2e3, 1.5e3, lam0_b2, 0.05) == 0.0

    def test_nonnegative(self, lam0_b2):
        rng = np.random.default_rng(4)
        t = np.exp(rng.uniform(np.log(1e3), np.log(1e9), 200))
        s = t * (1 + rng.uniform(0, 10, 200))
        assert np.all(vt.volterra_kernel(t, s, lam0_b2, 0.05) >= 0)

    def test_quotient_bound(self, lam0_b2):
        rng = np.random.default_rng(42)
        n_bad, worst = vt.quotient_violations(lam0_b2, 0.05, rng, 1000)
        assert n_bad == 0
        assert worst <= 2.0

    def test_logconvexity(self, lam0_b2):
        rng = np.random.default_rng(43)
        n_bad, _ = vt.logconvexity_violations(lam0_b2, 0.05, rng, 1000)
        assert n_bad == 0


class TestResolventSolve:
    def test_zero_forcing(self, lam0_b2):
        p = vt.VolterraProblem(1e3, 0.05, lam0_b2, None,
                               lambda t: 0.0 * t, lam0_b2.t_grid)
        x, diag = vt.resolvent_solve(p, with_resolvent=False)
        assert np.max(np.abs(x)) == 0.0

    def test_degenerate_kernel_ode_oracle(self, lam0_b2):
        # K = c e^{-(s-t)}: closed form x = H (1 - c/(1+c+beta))
        c, beta = 0.2, 0.1
        grid = np.linspace(0.0, 35.0, 5001)
        p = vt.VolterraProblem(0.0, 0.05, lam0_b2, None,
                               lambda t: np.exp(-beta * t), grid)
        n = grid.size
        A = np.zeros((n, n))
        for i in range(n):
            w = grid[i:] - grid[i]
            mass = np.diff(-c * np.exp(-w))
            mom = np.diff(-c * np.exp(-w) * (1 + w))
            wbar = mom / np.maximum(mass, 1e-300)
            sbar = grid[i] + np.clip(wbar, w[:-1], w[1:])
            lo, hi = grid[i:-1], grid[i + 1:]
            th = np.clip((hi - sbar) / (hi - lo), 0, 1)
            A[i, i:-1] += th * mass
            A[i, i + 1:] += (1 - th) * mass
        x, diag = vt.resolvent_solve(p, matrix=A, with_resolvent=False)
        exact = np.exp(-beta * grid) * (1 - c / (1 + c + beta))
        m = grid < 22.0
        assert np.max(np.abs(x[m] / exact[m] - 1)) < 1e-8
        assert diag.residual_inf < 1e-10

    def test_resolvent_row_sums(self, ctx_b2):
        p = vt.VolterraProblem(1e3, 0.05, ctx_b2.lam0, None,
                               lambda t: 1.0 / t ** 2, ctx_b2.grid)
        x, diag = vt.resolvent_solve(p, matrix=ctx_b2.matrix)
        assert diag.row_sums.max() <= 2.05
        assert diag.row_sums.min() >= -1e-10
        assert diag.negative_entries == 0
        assert diag.residual_inf <= 1e-10 * np.max(np.abs(x))


class TestGAssemble:
    def test_empty_mask_zero(self, ctx_b2, sol_b2):
        g = md.g_assemble(1e4, sol_b2.lam, 2.0, 0.05, ktab=ctx_b2.ktab,
                          term_mask=())
        assert g == 0.0

    def test_bounded_at_lambda0(self, ctx_b2):
        e0 = md.zero_epath(ctx_b2.grid, ctx_b2.weights)
        lam = ctx_b2.lam_path(e0)
        vals = []
        for t in (1e3, 1e5, 1e7, 1e9):
            terms = md.phi_terms(t, lam, 2.0, 0.05, ktab=ctx_b2.ktab,
                                 e5_table=ctx_b2.e5_table,
                                 ev2_fn=ctx_b2.ev2_table)
            g = -sum(v for k, v in terms.items()
                     if k not in ("int_sharp", "source", "local_log",
                                  "int_peaked"))
            vals.append(abs(g) * t * t * np.log(t) ** 3)
        assert max(vals) / min(vals) < 3.0

    def test_k_term_compositional(self, ctx_b2):
        # the 2D-kernel term matches 16/lam^2 times a direct convolution of
        # pointwise kernel values
        from wmrelax import kernels as kk
        from wmrelax.quadrature import halfline_breaks, panel_nodes
        t = 1e4
        e0 = md.zero_epath(ctx_b2.grid, ctx_b2.weights)
        lam = ctx_b2.lam_path(e0)
        lv = float(lam.fn(t))
        terms = md.phi_terms(t, lam, 2.0, 0.05, ktab=ctx_b2.ktab,
                             mask=("k",), ev2_fn=ctx_b2.ev2_table)
        wb = halfline_breaks(t, 1e-3, 1e3 * t, 8)
        wn, ww = panel_nodes(wb, 5)
        lpp = np.asarray(lam.d2fn(t + wn))
        kv = np.array([kk.kernel_K(float(w), lv) for w in wn])
        direct = -16.0 / lv ** 2 * float(np.dot(ww, lpp * kv))
        assert abs(terms["k"] / direct - 1) < 2e-2


class TestFixedPoint:
    def test_converges_in_ball(self, sol_b2):
        assert sol_b2.converged
        assert sol_b2.norm_trace[-1] <= 1.0

    def test_contraction_seeded_pairs(self, ctx_b2):
        for seed in (7, 11):
            eA = md.ball_epath(ctx_b2.grid, ctx_b2.weights, 0.9, seed)
            eB = md.ball_epath(ctx_b2.grid, ctx_b2.weights, 0.5, seed + 100)
            TA, TB = md.t_map(ctx_b2, eA), md.t_map(ctx_b2, eB)
            num = x_norm(TA.e0 - TB.e0, TA.e1 - TB.e1, TA.e2 - TB.e2,
                         ctx_b2.weights, ctx_b2.grid)
            den = x_norm(eA.e0 - eB.e0, eA.e1 - eB.e1, eA.e2 - eB.e2,
                         ctx_b2.weights, ctx_b2.grid)
            assert num / den < 0.9

    def test_source_ablation_exits_ball(self, ctx_b2):
        ctx_abl = dataclasses.replace(ctx_b2, drop_source=True)
        sol = md.solve_modulation(ctx_abl, max_iter=6)
        assert sol.norm_trace[-1] > 1.0

    def test_fixed_point_residual(self, ctx_b2, sol_b2):
        # T(e0) = e0 within the iteration tolerance
        e = sol_b2.e0_path
        te = md.t_map(ctx_b2, e)
        diff = x_norm(te.e0 - e.e0, te.e1 - e.e1, te.e2 - e.e2,
                      ctx_b2.weights, ctx_b2.grid)
        assert diff < 1e-3 * sol_b2.norm_trace[-1]


class TestOrthogonality:
    def test_ratios_small_at_solution(self, ctx_b2, sol_b2):
        res = md.orthogonality_check(sol_b2.lam, ctx_b2, [3e3, 3e4, 3e5])
        for r in res:
            assert r["ratio"] <= 1e-2

    def test_comparisons(self, ctx_b2, sol_b2):
        t_samples = [3e3, 3e4, 3e5]
        solved = md.orthogonality_check(sol_b2.lam, ctx_b2, t_samples)
        at_lam00 = md.orthogonality_check(
            lm.lambda00_path(2.0, t_grid=ctx_b2.grid), ctx_b2, t_samples)
        lam = sol_b2.lam
        pert = lm.LambdaPath(
            b=2.0, t_grid=ctx_b2.grid, values=1.1 * lam.values,
            d1=1.1 * lam.d1, d2=1.1 * lam.d2,
            fn=lambda t: 1.1 * lam.fn(t), dfn=lambda t: 1.1 * lam.dfn(t),
            d2fn=lambda t: 1.1 * lam.d2fn(t))
        at_pert = md.orthogonality_check(pert, ctx_b2, t_samples)
        for s, l0, p in zip(solved, at_lam00, at_pert):
            assert s["ratio"] < p["ratio"] < l0["ratio"]

    def test_perturbation_monotone(self, ctx_b2, sol_b2):
        lam = sol_b2.lam
        ratios = []
        for eps in (1.02, 1.05, 1.10):
            pert = lm.LambdaPath(
                b=2.0, t_grid=ctx_b2.grid, values=eps * lam.values,
                d1=eps * lam.d1, d2=eps * lam.d2,
                fn=lambda t, e=eps: e * lam.fn(t),
                dfn=lambda t, e=eps: e * lam.dfn(t),
                d2fn=lambda t, e=eps: e * lam.d2fn(t))
            res = md.orthogonality_check(pert, ctx_b2, [3e4])
            ratios.append(res[0]["ratio"])
        assert ratios[0] < ratios[1] < ratios[2]

    def test_direct_rspace_inner_product(self, ctx_b2, sol_b2, lam0_b2):
        # <F4, phi0(./lam)> computed as a raw radial integral of the
        # assembled residual is small against its own term scale
        from wmrelax import lightcone as lc
        from wmrelax import profile as pf
        from wmrelax import residual as rs
        lam = sol_b2.lam
        bun = rs.ResidualBundle(
            lam=lam, b=2.0, alpha=0.05, N=6,
            v1=lambda t, r: np.array(
                [lc.v1_eval(float(t), float(rv), lam) for rv in
                 np.atleast_1d(r)]).reshape(np.shape(r)),
            v2=lambda t, r: np.array(
                [lc.v2_eval(float(t), float(rv), 2.0) for rv in
                 np.atleast_1d(r)]).reshape(np.shape(r)),
            v3=lambda t, r: np.array(
                [lc.v3_eval(float(t), float(rv), lam, 0.05) for rv in
                 np.atleast_1d(r)]).reshape(np.shape(r)))
        t = 3e3
        lv = float(lam.fn(t))
        val = pf.inner_product_phi0(lambda r: bun.F4(t, r), lv,
                                    r_min=1e-5, r_max=2e3, per_decade=14,
                                    n_gl=6)
        res = md.orthogonality_check(sol_b2.lam, ctx_b2, [t])
        scale = res[0]["sum_abs"] * lv
        assert abs(val) <= 3e-2 * scale
