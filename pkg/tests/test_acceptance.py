"""Acceptance criteria 1-10.  Each test prints one PASS/FAIL line and asserts it."""

import time
from math import comb, log, log2, sqrt

import numpy as np
import pytest

from n8_fixtures import FIXTURES, solve_fixture
from wfrestore.bounds import (
    BoundParams, check_lemma1, covering_bound, epsilon_star, lemma1_constant, theorem2_bound,
)
from wfrestore.continuum import BsplineScaler, bessel_check
from wfrestore.framelets import bspline_bank, verify_uep
from wfrestore.harness import ExperimentConfig, domination_violations, make_phantom, run_sweep, summarize
from wfrestore.operators import GaussianBlur, Identity, OrthonormalWavelet, draw_sample_set, make_measurement
from wfrestore.solver import Problem, solve
from wfrestore.transform import LambdaWeights, analyze, synthesize

WORKERS = 4


@pytest.fixture
def report(capsys):
    def emit(num, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {num}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


def test_c01_uep_identities(report):
    t0 = time.perf_counter()
    worst = max(verify_uep(bspline_bank(r), grid_n=256)[1] for r in (1, 2, 3, 4))
    dt = time.perf_counter() - t0
    report(1, worst <= 1e-12 and dt < 5, f"max UEP residual {worst:.3g} (<= 1e-12), {dt:.2f}s (< 5s)")


def test_c02_perfect_reconstruction(report):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst_rec = worst_energy = 0.0
    for r in (1, 2, 4):
        bank = bspline_bank(r)
        for L in (1, 2, 3):
            for n in (16, 32, 64):
                for chunk in range(4):
                    u = rng.standard_normal((25, n, n))
                    c = analyze(u, bank, L)
                    worst_rec = max(worst_rec, float(np.abs(synthesize(c, bank) - u).max()))
                    energy = np.sum(c.planes**2, axis=(0, 2, 3))
                    rel = np.abs(energy - np.sum(u**2, axis=(1, 2))) / np.sum(u**2, axis=(1, 2))
                    worst_energy = max(worst_energy, float(rel.max()))
    dt = time.perf_counter() - t0
    ok = worst_rec <= 1e-10 and worst_energy <= 1e-10 and dt < 60
    report(2, ok, f"max |W^T W u - u| {worst_rec:.3g}, max energy defect {worst_energy:.3g} "
                  f"(both <= 1e-10) over 2700 images, {dt:.1f}s (< 60s)")


def test_c03_lemma1(report):
    rng = np.random.default_rng(3)
    n = 32
    images = [rng.random((n, n)) for _ in range(1000)]
    structured = [np.zeros((n, n)), make_phantom(n), np.tril(np.ones((n, n))),
                  (np.indices((n, n)).sum(axis=0) % 2).astype(float)]
    d = np.zeros((n, n))
    d[n // 2, n // 3] = 1.0
    structured.append(d)
    structured.append(np.outer(np.arange(n) >= n // 2, np.ones(n)).astype(float))
    violations = checked = 0
    for r in (1, 2, 4):
        bank = bspline_bank(r)
        for L in (1, 2):
            for u in images + structured:
                violations += not check_lemma1(u, bank, L)[2]
                checked += 1
    bands = [(a1, a2) for a1 in range(3) for a2 in range(3) if (a1, a2) != (0, 0)]
    enumerated = max(1.0, 6 * max(sqrt(comb(2, a1) * comb(2, a2)) for a1, a2 in bands))
    ok = violations == 0 and lemma1_constant(2) == 12 == enumerated
    report(3, ok, f"{violations} violations in {checked} checks; C_W(2) = {lemma1_constant(2):g}, "
                  f"enumerated {enumerated:g}")


def test_c04_exact_data(report):
    n = 64
    f = make_phantom(n)
    sset = draw_sample_set(n, n * n, 0)
    bank = bspline_bank(2)
    w = LambdaWeights.schedule(0.0, n, 1, 2)
    errs = {}
    for op in (Identity(), GaussianBlur(), OrthonormalWavelet()):
        res = solve(Problem(op, make_measurement(op, f, sset, 0.0)), w, bank, 1)
        errs[op.kind] = float(np.mean((res.u_star - f) ** 2))
    ok = errs["identity"] <= 1e-10 and errs["gaussian_blur"] <= 1e-6 and errs["orthonormal_wavelet"] <= 1e-6
    detail = ", ".join(f"{k} {v:.3g}" for k, v in errs.items())
    report(4, ok, f"rho=1 eta=0 N=64 empirical errors: {detail} (<= 1e-10 identity, 1e-6 others)")


def _bisect(fn, lo, hi):
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return mid
        lo, hi = (mid, hi) if fn(mid) < 0 else (lo, mid)


def _theorem2_second(M, beta, a, cw, cf, smin, ninf, rho, eta, omega):
    b = max(1 - beta, 1)
    ff = (4 * a + b) * cw * cf * (1 + cw * cf)
    ct = (64 * ninf**2 * M**2) / (3 * smin**2) * (4 + 3 * sqrt(5 * ff))
    return ct / sqrt(rho) * omega ** (-min(1 + beta, 1) / 4) * log2(omega) ** 1.5 + 16 * eta**2 / (3 * smin**2)


def _covering_second(M, beta, a, cw, cf, omega, radius):
    b = max(1 - beta, 1)
    return 20 * M * (4 * a + b) * cw * cf * (1 + cw * cf) * omega ** (b / 2) / radius * log2(omega)


def test_c05_bound_formulas(report):
    rng = np.random.default_rng(5)
    worst_eps = worst_t2 = worst_cov = 0.0
    for _ in range(300):
        kw = dict(M=rng.uniform(0.5, 4), beta=rng.uniform(-0.9, 0.9), a=rng.uniform(1, 3),
                  C_W=rng.uniform(1, 40), C_f=rng.uniform(0.05, 4), sigma_min=rng.uniform(0.01, 1),
                  norm_inf=rng.uniform(1, 4), rho=rng.uniform(0.05, 1), eta=rng.uniform(0, 0.2),
                  omega=int(4 ** rng.integers(3, 10)))
        p = BoundParams(**kw)
        m = int(rng.integers(1, kw["omega"] + 1))
        b = max(1 - kw["beta"], 1)
        ff = (4 * kw["a"] + b) * kw["C_W"] * kw["C_f"] * (1 + kw["C_W"] * kw["C_f"])
        k1 = 240 * kw["norm_inf"]**2 * kw["M"]**2 * ff * kw["omega"] ** (b / 2) * log2(kw["omega"]) / kw["sigma_min"]**2
        k2 = 3 * kw["sigma_min"]**2 / (256 * kw["norm_inf"]**2 * kw["M"]**2)
        eps = epsilon_star(p, m)
        root = _bisect(lambda e: k2 * m * e - k1 / e - log(kw["omega"]), eps / 8, eps * 8)
        worst_eps = max(worst_eps, abs(root - eps) / eps)
        t2 = _theorem2_second(kw["M"], kw["beta"], kw["a"], kw["C_W"], kw["C_f"], kw["sigma_min"],
                              kw["norm_inf"], kw["rho"], kw["eta"], kw["omega"])
        worst_t2 = max(worst_t2, abs(theorem2_bound(p).value - t2) / t2)
        radius = kw["omega"] ** -kw["a"] * rng.uniform(1, 100)
        cov = _covering_second(kw["M"], kw["beta"], kw["a"], kw["C_W"], kw["C_f"], kw["omega"], radius)
        worst_cov = max(worst_cov, abs(covering_bound(p, radius) - cov) / cov)
    ok = worst_eps <= 1e-10 and worst_t2 <= 1e-12 and worst_cov <= 1e-12
    report(5, ok, f"epsilon_star vs bisection {worst_eps:.3g} (<= 1e-10); theorem2 {worst_t2:.3g}, "
                  f"covering {worst_cov:.3g} vs second evaluation (<= 1e-12); 300 random parameter sets")


def _domination_sweep(operator):
    cfg = ExperimentConfig(operator=operator, sizes=[64], rhos=[0.3, 0.5, 0.7], realizations=10,
                           workers=WORKERS)
    t0 = time.perf_counter()
    records = run_sweep(cfg)
    summary = summarize(cfg, records)
    return summary, records, time.perf_counter() - t0


def _curve(summary):
    return "; ".join(f"rho={r.rho:g} err={r.max_emp_error:.3e} bound={r.calibrated_bound:.3e}"
                     + (" (anchor)" if r.anchor else "") for r in summary)


@pytest.mark.slow
def test_c06_identity_sweep_domination(report):
    summary, records, dt = _domination_sweep({"kind": "identity"})
    bad = domination_violations(summary)
    unconverged = sum(not r.converged for r in records)
    report(6, not bad and dt < 600, f"{_curve(summary)}; {len(bad)} violations, "
                                    f"{unconverged} unconverged solves, {dt:.0f}s (< 600s)")


@pytest.mark.slow
def test_c07_blur_sweep_domination(report):
    op = GaussianBlur()
    certified, measured = op.constants()[0], op.min_spectral_modulus(64)
    summary, records, dt = _domination_sweep(op.config())
    bad = domination_violations(summary)
    unconverged = sum(not r.converged for r in records)
    ok = not bad and certified <= measured
    report(7, ok, f"{_curve(summary)}; {len(bad)} violations, {unconverged} unconverged solves, "
                  f"{dt:.0f}s; sigma_min bound {certified:.4e} <= measured {measured:.4e}")


def test_c08_bessel(report):
    worst = 0.0
    pou = 0.0
    rng = np.random.default_rng(8)
    for n in (1, 2, 4):
        for J in (3, 4, 5):
            phi = BsplineScaler(n, J, n // 2)
            worst = max(worst, *bessel_check(phi, trials=100, seed=10 * n + J, sub=2))
            x = rng.random(10_000)
            pou = max(pou, float(np.abs(phi.basis_matrix(x).sum(axis=1) - 1).max()))
    report(8, worst <= 1.0 and pou <= 1e-12,
           f"max Bessel ratio {worst:.15g} (<= 1), partition of unity error {pou:.3g} (<= 1e-12)")


@pytest.mark.slow
def test_c09_theorem3_trend(report):
    cfg = ExperimentConfig(sizes=[16, 32, 64], rhos=[0.5], realizations=10, function="ramp_jumps",
                           workers=WORKERS)
    t0 = time.perf_counter()
    records = run_sweep(cfg)
    dt = time.perf_counter() - t0
    stats = {}
    for n in cfg.sizes:
        v = np.array([r.l2_error for r in records if r.N == n])
        stats[n] = (v.mean(), v.std(ddof=1))
    ok = dt < 600
    for a, b in zip(cfg.sizes, cfg.sizes[1:]):
        ok &= stats[b][0] <= stats[a][0] + max(stats[a][1], stats[b][1])
    detail = ", ".join(f"J={int(np.log2(n))}: {m:.3e} +/- {s:.1e}" for n, (m, s) in stats.items())
    report(9, ok, f"mean squared L2 error {detail}; {dt:.0f}s (< 600s)")


def test_c10_solver_oracle(report):
    worst_gap = -np.inf
    worst_feas = -np.inf
    ok = True
    for i in range(len(FIXTURES)):
        res, ref, prob = solve_fixture(i)
        gap = res.objective - ref
        feas = res.residual - prob.measurement.eta**2
        worst_gap, worst_feas = max(worst_gap, gap), max(worst_feas, feas)
        ok &= gap <= 1e-4 and feas <= 1e-8
    report(10, ok, f"{len(FIXTURES)} instances: max objective gap {worst_gap:.3g} (<= 1e-4), "
                   f"max residual excess {worst_feas:.3g} (<= 1e-8)")
