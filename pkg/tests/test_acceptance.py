"""Acceptance gate: ten criteria, each at its stated tolerance and runtime budget.

Every test records a PASS/FAIL line (collected in the terminal summary and
printed directly under ``pytest -s``) before asserting.
"""
import time

import numpy as np
import pytest

from hkcurv import catalog, cli, curv, nahm
from hkcurv.chart import chart_sectional_curvature
from hkcurv.hkquot import project_to_level

from conftest import VERDICTS
from oracles import sampled_v


def verdict(n, ok, detail, elapsed, budget):
    ok = bool(ok) and elapsed < budget
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail} [{elapsed:.2f} s of {budget:g} s]"
    VERDICTS.append(line)
    print(line)
    assert ok, line


def level_points(entry, count, seed):
    """Base point plus projections of perturbed copies, as the CLI samples them."""
    rng = np.random.default_rng(seed)
    pts = [project_to_level(entry.spec, entry.base_point, entry.level)]
    while len(pts) < count:
        q0 = entry.base_point + 0.5 * rng.standard_normal(entry.spec.n)
        pts.append(project_to_level(entry.spec, q0, entry.level))
    return pts


def test_criterion_01_green_golden(tmp_path):
    t0 = time.perf_counter()
    _, r1 = cli.run_command(["nahm", "green", "--a", "0", "--b", "1", "--lambda", "zero",
                             "--output-dir", str(tmp_path / "1")])
    _, r2 = cli.run_command(["nahm", "green", "--a", "0", "--b", "2", "--lambda", "zero",
                             "--output-dir", str(tmp_path / "2")])
    el = time.perf_counter() - t0
    N1, N2 = r1["results"]["N"], r2["results"]["N"]
    ok = abs(N1 - 0.25) < 1e-8 and abs(N2 - 0.5) < 1e-8
    verdict(1, ok, f"N(0) on (0,1) = {N1:.15g}, on (0,2) = {N2:.15g}", el, 1.0)


def test_criterion_02_corollary_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(10):
        a = rng.uniform(-5, 5)
        b = a + rng.uniform(0.05, 10)
        N0 = nahm.compute_N(nahm.NahmConfig(a, b, n=32), 0.0).N
        rel = abs(18 * np.sqrt(N0) - 9 * np.sqrt(b - a)) / (9 * np.sqrt(b - a))
        worst = max(worst, rel)
    el = time.perf_counter() - t0
    verdict(2, worst < 1e-12, f"max |18 N(0)^1/2 - 9 (b-a)^1/2| relative = {worst:.2e} over 10 intervals", el, 1.0)


def test_criterion_03_constant_lambda():
    t0 = time.perf_counter()
    cfg = nahm.NahmConfig(0.0, 1.0, n=32)
    errs = []
    for k in (0.5, 1.0, 5.0):
        errs.append(abs(nahm.compute_N(cfg, k).N - np.tanh(k / 2) / (2 * k)))
    el = time.perf_counter() - t0
    verdict(3, max(errs) < 1e-6, f"|N(kappa) - tanh(kappa/2)/(2 kappa)| max = {max(errs):.2e}", el, 1.0)


def test_criterion_04_axial_solution():
    t0 = time.perf_counter()
    sol = nahm.make_axial_solution(0.0, 1.0)
    res = nahm.nahm_residual(sol)
    lam_mid = float(nahm.lambda_floor_at(sol, 0.5)[0])
    rep = nahm.curvature_bound(sol)
    el = time.perf_counter() - t0
    ok = (res < 1e-10 and abs(lam_mid - np.pi) < 1e-6 and rep.coarse == 9.0
          and rep.stated < rep.coarse and rep.composed < rep.coarse)
    verdict(4, ok, f"residual {res:.2e}, lambda(1/2) - pi = {lam_mid - np.pi:.1e}, "
                   f"stated {rep.stated:.6f}, composed {rep.composed:.6f}, coarse {rep.coarse:g}", el, 10.0)


def test_criterion_05_gauge_invariance():
    t0 = time.perf_counter()
    sol = nahm.make_axial_solution(0.0, 1.0)
    lam = nahm.lambda_floor(sol)
    base = nahm.curvature_bound(sol, lam)
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(20):
        g = nahm.gauge_transform(sol, nahm.random_gauge(sol.config, rng))
        lg = nahm.lambda_floor(g)
        rep = nahm.curvature_bound(g, lg)
        worst = max(worst, float(np.max(np.abs(lg - lam) / np.maximum(1.0, lam))),
                    abs(rep.N - base.N), abs(rep.stated - base.stated),
                    abs(rep.composed - base.composed), abs(rep.coarse - base.coarse))
    el = time.perf_counter() - t0
    verdict(5, worst < 1e-8, f"max change of lambda, N and bounds over 20 gauges = {worst:.2e}", el, 30.0)


def test_criterion_06_inequality_suite():
    t0 = time.perf_counter()
    names = ["K_Q<=9V^2", "K_Q-K_level=3|A|^2", "K_Q-K_level>=0", "V<=lF[fixedEuclidean]",
             "V<=lF[metricNorm]", "V<=|C|", "l_metric<=1"]
    violations = 0
    worst = {n: np.inf for n in names}
    for cid in ("eguchi-hanson", "tp1xtp1"):
        entry = catalog.load_catalog_example(cid)
        for i, p in enumerate(level_points(entry, 20, seed=6)):
            rep = curv.verify_bounds(p, 1000, seed=1000 + i)
            checks = rep.checks()
            for n in names:
                ok, margin = checks[n]
                violations += not ok
                worst[n] = min(worst[n], margin)
    el = time.perf_counter() - t0
    summary = ", ".join(f"{n} {m:.1e}" for n, m in worst.items())
    verdict(6, violations == 0, f"{violations} violations in 2 x 20 points x 1000 planes; worst margins {summary}",
            el, 300.0)


def test_criterion_07_chart_oracle():
    t0 = time.perf_counter()
    worst = {}
    for cid, tol in (("hopf-kahler", 1e-5), ("eguchi-hanson", 1e-4)):
        entry = catalog.load_catalog_example(cid)
        rng = np.random.default_rng(7)
        w = 0.0
        for p in level_points(entry, 10, seed=7):
            x, y = curv.sample_planes(p.dim_h, 1, rng)
            k = curv.sectional_curvature(p, p.horizontal @ x[0], p.horizontal @ y[0]).K_Q
            kc = chart_sectional_curvature(p, x[0], y[0])
            w = max(w, abs(k - kc) / abs(kc))
        worst[cid] = (w, tol)
    el = time.perf_counter() - t0
    ok = all(w < tol for w, tol in worst.values())
    detail = ", ".join(f"{cid} rel {w:.1e} (tol {tol:g})" for cid, (w, tol) in worst.items())
    verdict(7, ok, detail, el, 120.0)


def test_criterion_08_kahler_sharpness():
    t0 = time.perf_counter()
    entry = catalog.hopf_kahler()
    p = project_to_level(entry.spec, entry.base_point, entry.level)
    rep = curv.verify_bounds(p, 1000, seed=8)
    V = rep.V
    over = float(np.max(np.abs(rep.K_Q) - 5 * V ** 2))
    el = time.perf_counter() - t0
    ok = rep.kahler_best >= 0.9 * V and over <= 1e-8
    verdict(8, ok, f"best K_Q = {rep.kahler_best:.6f} vs 0.9 V = {0.9 * V:.6f}; "
                   f"max sampled |K_Q| - 5V^2 = {over:.3f}", el, 60.0)


def test_criterion_09_asymptotic_null():
    t0 = time.perf_counter()
    radii = [2.0, 4.0, 8.0, 16.0]
    eh = catalog.eguchi_hanson()
    rows = curv.asymptotic_scan(eh.spec, eh.level, eh.ray(np.random.default_rng(9)), radii, n_planes=200, seed=9)
    K = [r.max_abs_K for r in rows]
    decreasing = all(b < a for a, b in zip(K, K[1:]))
    ratio = K[-1] / K[0]
    tp = catalog.tp1xtp1()
    trows = curv.asymptotic_scan(tp.spec, tp.level, tp.ray(np.random.default_rng(9)), radii, n_planes=200, seed=9)
    T = [r.max_abs_K for r in trows]
    held = min(T) / T[0]
    el = time.perf_counter() - t0
    ok = decreasing and ratio < 0.05 and held >= 0.5
    verdict(9, ok, f"eguchi-hanson max|K_Q| {['%.2e' % k for k in K]} ratio {ratio:.1e}; "
                   f"tp1xtp1 min/initial {held:.3f}", el, 300.0)


def test_criterion_10_v_norm_oracle():
    t0 = time.perf_counter()
    entry = catalog.eguchi_hanson()
    worst = 0.0
    for i, p in enumerate(level_points(entry, 5, seed=10)):
        V = curv.v_norm(p).value
        S = sampled_v(p, 100_000, np.random.default_rng(100 + i))
        worst = max(worst, abs(V - S) / V)
    el = time.perf_counter() - t0
    verdict(10, worst < 1e-3, f"max relative gap to 1e5-pair sampling = {worst:.1e} at 5 points", el, 120.0)
