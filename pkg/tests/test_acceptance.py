"""Acceptance criteria 1-10, each at its stated tolerance and time budget.

Every test records one ``criterion N: PASS|FAIL`` line, printed at the end of
the pytest run and immediately with ``-s``. All Monte-Carlo criteria use seed 0.
"""

import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from tikholearn.experiments import convergence_study, load_config, loglog_slope, run_experiment
from tikholearn.learn import learn_parameter
from tikholearn.model import build_forward_model
from tikholearn.sampling import (
    SamplingSpec,
    coordinate_basis,
    estimate_subgaussian_norm,
    generate_dataset,
    make_rng,
    random_basis,
    sample_noises,
)
from tikholearn.subspace import fit_subspace, perturbation_bound_check
from tikholearn.tikhonov import denoising_closed_form, minimize_filter_error, oracle_parameter, solve
from tikholearn.toy import ToyInstance, build_toy_problem, exact_t_bar, exact_t_star

from conftest import ACCEPTANCE_LINES

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
SEED = 0

pytestmark = pytest.mark.acceptance


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_toy_oracle():
    start = time.perf_counter()
    rng = make_rng(SEED)
    worst_star = worst_bar = 0.0
    for _ in range(2000):
        inst = ToyInstance(*rng.uniform(-0.7, 0.7, 2))
        prob = build_toy_problem(inst, rng.uniform(0.0, 2 * math.pi))
        t_star = oracle_parameter(prob.model, prob.y, prob.x)
        t_bar = minimize_filter_error(prob.model.svd_s, prob.model.data_coefficients(prob.y),
                                      prob.model.signal_coefficients(prob.x_bar))
        worst_star = max(worst_star, abs(t_star - exact_t_star(inst)))
        worst_bar = max(worst_bar, abs(t_bar - exact_t_bar(inst)))
    elapsed = time.perf_counter() - start
    ok = worst_star <= 1e-6 and worst_bar <= 1e-6 and elapsed <= 10
    report(1, ok, f"max|t*-exact|={worst_star:.2e}, max|t_bar-exact|={worst_bar:.2e}, "
                  f"{elapsed:.1f}s (<= 1e-6, <= 10s)")


def test_criterion_02_identity_closed_form():
    start = time.perf_counter()
    rng = make_rng(SEED)
    worst = 0.0
    for _ in range(200):
        d = int(rng.integers(1, 101))
        model = build_forward_model(np.eye(d))
        x = rng.standard_normal(d)
        y = x + rng.uniform(0.0, 2.0) * rng.standard_normal(d)
        worst = max(worst, abs(oracle_parameter(model, y, x) - denoising_closed_form(y, x)))
    elapsed = time.perf_counter() - start
    report(2, worst <= 1e-8 and elapsed <= 5,
           f"max deviation {worst:.2e}, {elapsed:.2f}s (<= 1e-8, <= 5s)")


def test_criterion_03_noiseless_exactness():
    rng = make_rng(SEED)
    bad = 0
    worst = 0.0
    for k in range(100):
        d = int(rng.integers(2, 30))
        m = d + int(rng.integers(0, 10))
        h = int(rng.integers(1, d + 1))
        model = build_forward_model(rng.standard_normal((m, d)))
        spec = SamplingSpec(random_basis(d, h, rng), sigma=0.0)
        est = fit_subspace(generate_dataset(model, spec, 50, seed=k), h_override=h)
        x = spec.subspace_basis @ rng.standard_normal(h)
        y = model.apply(x)
        t_star = oracle_parameter(model, y, x)
        t_hat = learn_parameter(model, est, y).t_hat
        rel = np.linalg.norm(solve(model, y, 1.0) - x) / np.linalg.norm(x)
        worst = max(worst, rel)
        bad += not (t_star == 1.0 and t_hat == 1.0 and rel <= 1e-9)
    report(3, bad == 0, f"{100 - bad}/100 instances with t*=t_hat=1, max rel err {worst:.1e}")


def test_criterion_04_projection_concentration():
    start = time.perf_counter()
    cfg = load_config(CONFIGS / "concentration.json")
    assert (cfg.d, cfg.m, cfg.h, cfg.sigma, cfg.n_trials) == (50, 50, 5, 0.1, 50)
    ns = [100, 400, 1600, 6400]
    rows = convergence_study(cfg, ns)
    medians = [r.median_proj_dist for r in rows]
    slope = loglog_slope(ns, medians)
    shapes = [r.bound_b for r in rows]
    constant = max(med / b for med, b in zip(medians, shapes))
    elapsed = time.perf_counter() - start
    ok = -0.65 <= slope <= -0.35 and constant <= 10 and elapsed <= 120
    report(4, ok, f"slope {slope:.3f} in [-0.65,-0.35], fitted constant {constant:.3g} <= 10, "
                  f"medians {[round(v, 4) for v in medians]}, {elapsed:.1f}s")


def test_criterion_05_identity_learning():
    start = time.perf_counter()
    cfg = load_config(CONFIGS / "identity_denoising.cfg")
    rows = convergence_study(cfg, [50, 200, 1000])
    gaps = [r.median_abs_t_gap for r in rows]
    res = run_experiment(cfg)
    frac = float(np.mean([abs(r.t_hat - r.t_star) <= 0.05 for r in res.records]))
    monotone = gaps[0] > gaps[1] > gaps[2]
    elapsed = time.perf_counter() - start
    ok = frac >= 0.9 and monotone and elapsed <= 60
    report(5, ok, f"fraction within 0.05 = {frac:.2f} (>= 0.90), median |t_hat-t*| over "
                  f"n=50,200,1000 = {[round(g, 4) for g in gaps]} (strictly decreasing: "
                  f"{monotone}), {elapsed:.1f}s")


def test_criterion_06_general_operator():
    start = time.perf_counter()
    cfg = load_config(CONFIGS / "vanishing_spectrum.cfg")
    res = run_experiment(cfg)
    mean_t = res.summary["mean_t_star"]
    chain = sum(r.err_hat - r.err_opt > 2 * r.err_xhat for r in res.records)
    elapsed = time.perf_counter() - start
    ok = 0.55 <= mean_t <= 0.85 and chain == 0 and elapsed <= 180
    report(6, ok, f"mean t* = {mean_t:.4f} (band [0.55, 0.85]), chain violations {chain}/"
                  f"{len(res.records)}, {elapsed:.1f}s")


def test_criterion_07_linearized():
    start = time.perf_counter()
    cfg = load_config(CONFIGS / "well_conditioned.cfg")
    res = run_experiment(cfg)
    lin = np.array([np.nan if r.t_lin is None else r.t_lin for r in res.records])
    t_star = np.array([r.t_star for r in res.records])
    t_hat = np.array([r.t_hat for r in res.records])
    missing = int(np.sum(np.isnan(lin)))
    med_star = float(np.median(np.abs(lin - t_star))) if not missing else math.inf
    med_hat = float(np.median(np.abs(lin - t_hat))) if not missing else math.inf
    elapsed = time.perf_counter() - start
    ok = med_star <= 0.05 and med_hat <= 0.02 and elapsed <= 60
    report(7, ok, f"median |t_lin-t*| = {med_star:.4f} (<= 0.05), median |t_lin-t_hat| = "
                  f"{med_hat:.2e} (<= 0.02), {elapsed:.1f}s")


def _psd_pair(rng):
    dim = int(rng.integers(2, 9))
    q = random_basis(dim, dim, rng)
    levels = np.sort(rng.uniform(0.0, 5.0, dim))[::-1]
    if rng.random() < 0.3:
        levels[1] = levels[0]  # a repeated top eigenvalue
    a = (q * levels) @ q.T
    distinct = np.unique(np.round(levels[levels > 1e-9], 12))[::-1]
    j = int(rng.integers(1, len(distinct) + 1))
    gap = distinct[j - 1] - (distinct[j] if j < len(distinct) else 0.0)
    e = rng.standard_normal((dim, dim))
    e = (e + e.T) / 2
    e *= rng.uniform(0.0, 0.999) * gap / 4 / np.linalg.norm(e, 2)
    b = a + e
    # lifting both by the same multiple of I keeps B PSD without touching A - B or the gaps
    shift = max(-float(np.linalg.eigvalsh(b).min()), 0.0)
    return a + shift * np.eye(dim), b + shift * np.eye(dim), j


def test_criterion_08_perturbation_inequality():
    start = time.perf_counter()
    rng = make_rng(SEED)
    holds = 0
    for _ in range(500):
        a, b, j = _psd_pair(rng)
        check = perturbation_bound_check(a, b, j)
        holds += check.holds is True
    elapsed = time.perf_counter() - start
    report(8, holds == 500 and elapsed <= 10, f"{holds}/500 pairs satisfy the inequality, "
                                              f"{elapsed:.2f}s")


def test_criterion_09_subgaussian_tails():
    start = time.perf_counter()
    rng = make_rng(SEED)
    n, dim = 100_000, 10
    failures = []
    for dist in ("gaussian_isotropic", "rademacher"):
        spec = SamplingSpec(coordinate_basis(dim, 1), noise_dist=dist)
        xi = sample_noises(spec, dim, n, rng)
        k_hat = estimate_subgaussian_norm(xi, rng=rng)
        v = rng.standard_normal(dim)
        v /= np.linalg.norm(v)
        proj = np.abs(xi @ v)
        norms = np.linalg.norm(xi, axis=1)
        for tau in (1.0, 1.5, 2.0):
            p = 2 * math.exp(-tau ** 2)
            slack = p + 3 * math.sqrt(min(p, 1.0) * (1 - min(p, 1.0)) / n)
            f_dir = float(np.mean(proj > 3 * k_hat * tau))
            f_norm = float(np.mean(norms > 9 * k_hat * (math.sqrt(dim) + tau)))
            if f_dir > slack or f_norm > slack:
                failures.append((dist, tau, f_dir, f_norm, slack))
    elapsed = time.perf_counter() - start
    report(9, not failures and elapsed <= 30,
           f"{12 - 2 * len(failures)}/12 tail checks within 2exp(-tau^2)+3SE, {elapsed:.1f}s")


def test_criterion_10_determinism(tmp_path):
    env = dict(os.environ)
    outputs = []
    for threads, name in (("1", "a"), ("4", "b")):
        env["TIKHOLEARN_THREADS"] = threads
        proc = subprocess.run([sys.executable, "-m", "tikholearn", "run", "--config",
                               str(CONFIGS / "vanishing_spectrum.cfg"), "--out", str(tmp_path / name)],
                              capture_output=True, text=True, env=env)
        assert proc.returncode == 0, proc.stderr
        outputs.append((tmp_path / name / "trials.csv").read_bytes())
    report(10, outputs[0] == outputs[1],
           f"trials.csv identical across two runs ({len(outputs[0])} bytes)")
