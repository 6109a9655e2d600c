"""Command-line pipeline: configuration, staged checks, report emission.

    wmrelax run --config cfg.json [--checks kernels,sinlog] [--b 2.0]
                [--alpha 0.05] [--T0 1e3] [--out outdir] [--seed 1234]

Stages write one CSV row per check plus a JSON summary with timings, and
columnar text files with plot-ready data (t vs lambda, scaled bound trends,
radial profiles).  Same config + same seed reproduces the CSV byte for byte.
"""

import argparse
import json
import math
import os
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import kernels, modulation as md, report as rp
from .lambda_model import lambda00, lambda0_path
from .lightcone import v2_eval
from .specfun import bessel_j, bessel_k, chi_le_quarter, chi_ge_one

ALL_STAGES = ("specfun", "kernels", "sinlog", "modulation", "fields",
              "orthogonality")


@dataclass
class RunConfig:
    b: float = 2.0
    alpha: float = 0.05
    N: int = 6
    T0: float = 1e3
    S_max: float = 1e9
    grid_per_decade: int = 96
    quad_tol: float = 1e-6
    seed: int = 1234
    checks: tuple = ALL_STAGES
    term_mask: tuple = md.DEFAULT_TERMS
    out_dir: str = "wmrelax_out"

    def validate(self):
        if self.b <= 0:
            raise ValueError("b must be positive")
        if not 0.0 < self.alpha < 0.125:
            raise ValueError("alpha must lie in (0, 1/8)")
        if not self.T0 < self.S_max:
            raise ValueError("T0 must be below S_max")
        bad = [c for c in self.checks if c not in ALL_STAGES]
        if bad:
            raise ValueError(f"unknown stages: {bad}")
        return self

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            raw = json.load(fh)
        if "checks" in raw:
            raw["checks"] = tuple(raw["checks"])
        if "term_mask" in raw:
            raw["term_mask"] = tuple(raw["term_mask"])
        return cls(**raw)


def _stage_specfun(cfg, out):
    log2 = math.log(2.0)
    out.append(rp.Report("bessel_j0_origin", bessel_j(0, 0.0), 1.0, 1e-14,
                         "TRIVIAL", "n=0,x=0"))
    out.append(rp.Report("bessel_j1_origin", bessel_j(1, 0.0), 0.0, 1e-14,
                         "TRIVIAL", "n=1,x=0"))
    x = 1e-6
    out.append(rp.Report("bessel_k1_pole", x * bessel_k(1, x), 1.0, 1e-9,
                         "PAPER", "x->0"))
    xs = np.linspace(0.1, 50.0, 400)
    rec = np.max(np.abs(bessel_j(0, xs) - bessel_j(2, xs)
                        - (bessel_j(1, xs + 1e-6)
                           - bessel_j(1, xs - 1e-6)) / 1e-6))
    out.append(rp.Report("bessel_recurrence_j1p", rec, 0.0, 1e-3,
                         "PAPER", "J0-J2=2J1' grid"))
    out.append(rp.Report("cutoff_low_plateau", chi_le_quarter(0.1), 1.0,
                         0.0, "PAPER", "x=0.1"))
    out.append(rp.Report("cutoff_low_support", chi_le_quarter(0.3), 0.0,
                         0.0, "PAPER", "x=0.3"))
    out.append(rp.Report("cutoff_high_mid", chi_ge_one(1.5), 0.5, 0.5 - 1e-9,
                         "TRIVIAL", "x=1.5 in (0,1)"))
    _ = log2


def _stage_kernels(cfg, out):
    log2 = math.log(2.0)
    for lam in (0.1, 0.3):
        mass, _ = kernels.kernel_K_mass(lam)
        tgt = 0.25 * log2 * lam * lam
        out.append(rp.Report("kernel_K_mass", mass, tgt, 1e-5 * tgt,
                             "PAPER", f"lam={lam}"))
    for (z1, z2) in ((0.2, 0.2), (0.1, 0.3)):
        v = kernels.dK_dlambda_mass(z1, z2)
        tgt = 0.25 * log2 * (z1 + z2)
        out.append(rp.Report("dK_mass", v, tgt, 1e-4 * tgt, "PAPER",
                             f"z=({z1},{z2})"))
    w, lam = 2.0, 0.25
    cf = kernels.kernel_K1(w, lam)
    qi = kernels.kernel_K1_integral(w, lam)
    out.append(rp.Report("K1_closed_vs_integral", cf, qi, 1e-8 * abs(qi),
                         "DERIVED", f"w={w},lam={lam}"))


def _stage_sinlog(cfg, out):
    for a in (1.0, 2.0):
        scaled = []
        for t in (1e3, 1e6, 1e9):
            d, s = md.sinlog_integral(a, t)
            scaled.append(abs(d - s) * math.log(t) ** (a + 1))
        out.append(rp.Report("sinlog_trend", max(scaled) / min(scaled),
                             np.nan, 3.0, "PAPER", f"a={a}"))
    raw = md.sinlog_raw(1.0, 1e3, per_period=16, n_gl=14)
    ctr, _ = md.sinlog_integral(1.0, 1e3)
    out.append(rp.Report("sinlog_dual", ctr, raw, 1e-8, "DERIVED",
                         "a=1,t=1e3"))


def _stage_modulation(cfg, ctx, out, diag_path):
    sol = md.solve_modulation(ctx, diag_path=diag_path)
    out.append(rp.Report("modulation_converged", float(sol.converged), 1.0,
                         0.0, "DERIVED", "picard"))
    out.append(rp.Report("modulation_xnorm", sol.norm_trace[-1], np.nan, 1.0,
                         "PAPER", "||e0||_X <= 1"))
    rng = np.random.default_rng(cfg.seed)
    from .volterra import (VolterraProblem, logconvexity_violations,
                           quotient_violations, resolvent_solve)
    nq, _ = quotient_violations(ctx.lam0, ctx.alpha, rng)
    out.append(rp.Report("kernel_quotient", float(nq), 0.0, 0.0,
                         "PAPER", "1000 seeded triples"))
    nl, _ = logconvexity_violations(ctx.lam0, ctx.alpha, rng)
    out.append(rp.Report("kernel_logconvexity", float(nl), 0.0, 0.0,
                         "PAPER", "1000 seeded quadruples"))
    p = VolterraProblem(ctx.T0, ctx.alpha, ctx.lam0, None,
                        lambda t: 1.0 / t ** 2, ctx.grid)
    _, diag = resolvent_solve(p, matrix=ctx.matrix)
    out.append(rp.Report("resolvent_rowsum", float(diag.row_sums.max()),
                         np.nan, 2.05, "PAPER", "<= 2 + eps"))
    return sol


def _stage_fields(cfg, ctx, sol, out, out_dir):
    b = cfg.b
    rows = []
    for t in (1e4, 1e6):
        for r in (1.0, 5.0):
            v2 = v2_eval(t, r, b)
            scaled = v2 * t * t * math.log(t) ** b / r
            dev = abs(scaled + b)
            allow = 5.0 * (1.0 / math.log(t) + r / t)
            out.append(rp.Report("v2_near_origin", dev, np.nan, allow,
                                 "PAPER", f"t={t:.0e},r={r}"))
            rows.append((t, r, v2, scaled))
    with open(os.path.join(out_dir, "v2_profile.tsv"), "w") as fh:
        fh.write("t\tr\tv2\tscaled\n")
        for row in rows:
            fh.write("\t".join(repr(v) for v in row) + "\n")
    lv = float(sol.lam.fn(1e4)) if sol is not None else float(
        lambda00(b, 1e4, 0))
    ip = md.v2_inner_product(1e4, lv, b)
    sc = ip * lv * 1e8 * math.log(1e4) ** b / (4 * b)
    out.append(rp.Report("v2_inner_product_law", sc, 1.0,
                         5.0 / math.log(1e4), "PAPER", "t=1e4"))


def _stage_orthogonality(cfg, ctx, sol, out):
    res = md.orthogonality_check(sol.lam, ctx, [3e3, 3e4, 3e5])
    for r in res:
        out.append(rp.Report("orthogonality_ratio", r["ratio"], np.nan,
                             1e-2, "DERIVED", f"t={r['t']:.0e}"))


def run_pipeline(cfg: RunConfig) -> int:
    cfg.validate()
    os.makedirs(cfg.out_dir, exist_ok=True)
    reports = []
    timings = {}
    ctx = None
    sol = None
    need_ctx = any(s in cfg.checks
                   for s in ("modulation", "orthogonality", "fields"))
    if need_ctx:
        t0 = time.time()
        ctx = md.build_context(cfg.b, cfg.alpha, cfg.N, cfg.T0, cfg.S_max,
                               per_decade=cfg.grid_per_decade,
                               term_mask=cfg.term_mask)
        timings["context"] = time.time() - t0

    for stage in cfg.checks:
        t0 = time.time()
        if stage == "specfun":
            _stage_specfun(cfg, reports)
        elif stage == "kernels":
            _stage_kernels(cfg, reports)
        elif stage == "sinlog":
            _stage_sinlog(cfg, reports)
        elif stage == "modulation":
            sol = _stage_modulation(cfg, ctx, reports,
                                    os.path.join(cfg.out_dir,
                                                 "modulation_diag.jsonl"))
        elif stage == "fields":
            if sol is None and "modulation" not in cfg.checks:
                sol = md.solve_modulation(ctx)
            _stage_fields(cfg, ctx, sol, reports, cfg.out_dir)
        elif stage == "orthogonality":
            if sol is None:
                sol = md.solve_modulation(ctx)
            _stage_orthogonality(cfg, ctx, sol, reports)
        timings[stage] = time.time() - t0

    if sol is not None:
        with open(os.path.join(cfg.out_dir, "lambda_path.tsv"), "w") as fh:
            fh.write("t\tlambda\tdlambda\td2lambda\te0\n")
            for i, t in enumerate(ctx.grid):
                fh.write("\t".join(repr(v) for v in (
                    t, sol.lam.values[i], sol.lam.d1[i], sol.lam.d2[i],
                    sol.e0_path.e0[i])) + "\n")

    rp.write_csv(os.path.join(cfg.out_dir, "checks.csv"), reports)
    rp.write_json(os.path.join(cfg.out_dir, "summary.json"), reports,
                  config=asdict(cfg), timings=timings)
    failed = [r for r in reports if not r.passed]
    for r in reports:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.check_id} "
              f"({r.inputs}): computed={r.computed:.6g}")
    return 1 if failed else 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="wmrelax")
    sub = ap.add_subparsers(dest="cmd", required=True)
    run = sub.add_parser("run", help="run the verification pipeline")
    run.add_argument("--config", type=str, default=None)
    run.add_argument("--checks", type=str, default=None,
                     help="comma-separated stage list")
    run.add_argument("--b", type=float, default=None)
    run.add_argument("--alpha", type=float, default=None)
    run.add_argument("--T0", type=float, default=None)
    run.add_argument("--out", type=str, default=None)
    run.add_argument("--seed", type=int, default=None)
    args = ap.parse_args(argv)

    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    if args.checks is not None:
        cfg.checks = tuple(s.strip() for s in args.checks.split(",") if s)
    for name, val in (("b", args.b), ("alpha", args.alpha), ("T0", args.T0),
                      ("out_dir", args.out), ("seed", args.seed)):
        if val is not None:
            setattr(cfg, name, val)
    cfg.validate()
    return run_pipeline(cfg)


if __name__ == "__main__":
    raise SystemExit(main())
