"""Acceptance suite: one test per numbered criterion.

A PASS/FAIL line per criterion is printed in the terminal summary.  Each test
also asserts its runtime budget (compilation included).
"""

import hashlib
import math
import time

import numpy as np
import pytest
from scipy.stats import norm

from stula import (
    ChainConfig,
    DivergenceError,
    InitialLaw,
    find_critical_points,
    get_potential,
    grid_reference,
    histogram,
    kl_divergence,
    lambda_max,
    log_gap_slope,
    morse_report,
    run_chains,
    seed_grid,
    spectrum,
    tamed_drift,
    tv_distance,
    w2_1d,
)
from stula.harness.config import parse_config
from stula.harness.experiments import run_experiment
from stula.potentials import quadratic

# catalog potentials that declare dissipativity; example1 and constant do not,
# so the drift inequalities are not defined for them
DRIFT_POTENTIALS = ["quadratic", "double_well", "quartic", "example2", "example2_xmarginal"]


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds
        self.t0 = time.perf_counter()

    def check(self):
        elapsed = time.perf_counter() - self.t0
        assert elapsed < self.seconds, f"took {elapsed:.1f}s, budget {self.seconds}s"


def _points(dim, n, seed):
    # uniform in the radius-10 ball, plus a log-spaced radial sweep out to 1e3
    r = np.random.default_rng(seed)
    g = r.standard_normal((n, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rad = np.r_[10 * r.random(n - 1000) ** (1 / dim), np.logspace(-3, 3, 1000)]
    return g * rad[:, None]


@pytest.mark.criterion(1, "drift inequality suite", 10)
def test_criterion_01_drift_inequalities():
    budget = Budget(10)
    worst = {}
    for pid in DRIFT_POTENTIALS:
        p = get_potential(pid)
        a, b, L, l = p.a, p.b, p.L, p.l
        X = _points(p.dim, 100000, 11)
        H = np.asarray(p.h(X))
        nx = np.linalg.norm(X, axis=1)
        lm = lambda_max(p)
        for lam in (lm, lm / 10, lm / 100):
            D = tamed_drift(p, lam, X)
            m_growth = a * nx + (L + a) / math.sqrt(lam) - np.linalg.norm(D, axis=1)
            m_diss = np.sum(D * X, axis=1) - (0.5 * a * nx**2 - b)
            m_tame = math.sqrt(lam) * (np.linalg.norm(H, axis=1) + a * nx) * nx ** (2 * l) - np.linalg.norm(D - H, axis=1)
            worst[(pid, lam)] = min(m_growth.min(), m_diss.min(), m_tame.min())
    budget.check()
    bad = {k: v for k, v in worst.items() if v < -1e-9}
    assert not bad, bad


@pytest.mark.criterion(2, "linear transparency on the quadratic", 5)
def test_criterion_02_linear_transparency():
    budget = Budget(5)
    p = get_potential("quadratic")
    X = np.random.default_rng(2).normal(scale=5, size=(10000, 1))
    lam = lambda_max(p)
    assert np.array_equal(tamed_drift(p, lam, X), np.asarray(p.h(X)))
    base = dict(beta=1.0, lam=lam, n_steps=20000, n_chains=8, seed=21, init=InitialLaw.point(2.0))
    s = run_chains(p, ChainConfig(scheme="stula", **base))
    u = run_chains(p, ChainConfig(scheme="ula", **base))
    assert s.samples.tobytes() == u.samples.tobytes()
    assert s.moment_trace.tobytes() == u.moment_trace.tobytes()
    budget.check()


@pytest.mark.criterion(3, "uniform second moment on the double-well", 120)
def test_criterion_03_moment_uniformity():
    budget = Budget(120)
    p = get_potential("double_well")
    # oracle: E|x0|^2 + 2(2(L+a)^2 + 2d/beta + 2b)/a with a=b=1, L=2, d=1, beta=1, x0=0
    c2_bar = 0.0 + 2 * (2 * (2 + 1) ** 2 + 2 * 1 / 1 + 2 * 1) / 1
    assert c2_bar == 44
    cfg = ChainConfig(beta=1.0, lam=0.002, n_steps=1_000_000, n_chains=64, seed=3, burn_in=1_000_000,
                      init=InitialLaw.point(0.0))
    b = run_chains(p, cfg)
    assert not b.diverged
    assert np.nanmax(b.mean_sq) <= c2_bar
    budget.check()


@pytest.mark.criterion(4, "taming necessity on x^4/4", 60)
def test_criterion_04_taming_necessity():
    budget = Budget(60)
    p = get_potential("quartic")
    init = InitialLaw.point(10.0)
    with pytest.raises(DivergenceError) as exc:
        run_chains(p, ChainConfig(beta=1.0, lam=0.1, n_steps=10, scheme="ula", init=init, burn_in=10))
    assert exc.value.first_nonfinite_step <= 10
    lam = lambda_max(p)
    b = run_chains(p, ChainConfig(beta=1.0, lam=lam, n_steps=1_000_000, scheme="stula", init=init,
                                  burn_in=1_000_000, seed=4))
    assert not b.diverged
    assert np.all(np.isfinite(b.moment_trace)) and np.all(np.isfinite(b.final_states))
    budget.check()


@pytest.mark.criterion(5, "sampling accuracy on the double-well", 120)
def test_criterion_05_sampling_accuracy():
    budget = Budget(120)
    p = get_potential("double_well")
    grid = grid_reference(p, 1.0, [-4, 4], 512)
    # 1000 chains x 1000 collections = 10^6 post-burn-in draws
    cfg = ChainConfig(beta=1.0, lam=0.001, n_steps=20000 + 1000 * 200, n_chains=1000, seed=5, burn_in=20000,
                      thin=200, init=InitialLaw.point(0.0))
    b = run_chains(p, cfg)
    assert b.samples.shape[0] == 1_000_000
    h = histogram(b.samples, grid)
    tv, kl = tv_distance(h, grid).value, kl_divergence(h, grid).value
    assert tv <= 0.05, tv
    assert kl <= 0.01, kl
    budget.check()


@pytest.mark.criterion(6, "O(lambda) plateau ratio", 300)
def test_criterion_06_plateau_ratio(tmp_path):
    budget = Budget(300)
    cfg = parse_config({"kind": "lambda_sweep", "potential": "double_well", "seed": 11, "beta": 1.0,
                        "lambdas": [0.002, 0.001], "horizon": 200, "burn_in_time": 20, "thin_time": 0.2,
                        "n_chains": 1000, "box": [-4, 4], "n_cells": 512})
    rec = run_experiment(cfg, tmp_path)
    ratio = rec.summary["ratios"][0]["kl_ratio"]
    assert 1.3 <= ratio <= 3.0, ratio
    budget.check()


@pytest.mark.criterion(7, "KL decay rate vs the Gaussian log-Sobolev constant", 60)
def test_criterion_07_kl_decay_rate(tmp_path):
    budget = Budget(60)
    cfg = parse_config({"kind": "beta_sweep_sampling", "potential": "quadratic", "seed": 5, "betas": [1.0],
                        "lam": 0.005, "n_steps": 1200, "n_chains": 100000, "record_every": 10, "x0": 3.0,
                        "n_cells": 256})
    rec = run_experiment(cfg, tmp_path)
    fit = rec.summary["fits"]["1.0"]
    assert fit["fit_ok"]
    target = 1.5 * 1.0
    assert fit["rate"] >= 1.0
    assert abs(fit["rate"] - target) <= 0.3 * target, fit["rate"]
    budget.check()


@pytest.mark.criterion(8, "spectral gap: beta-independence vs Arrhenius", 120)
def test_criterion_08_spectral_gaps():
    budget = Budget(120)
    q = get_potential("quadratic")
    for beta in (1.0, 10.0, 50.0):
        assert spectrum(q, beta).gap == pytest.approx(1.0, rel=0.05)
    dw = get_potential("double_well")
    betas = np.arange(4.0, 21.0)
    slope = log_gap_slope(betas, [spectrum(dw, b, k=2).gap for b in betas])
    # oracle: barrier height u(0) - u(1) = 0 - (1/4 - 1/2)
    barrier = 0.0 - (0.25 - 0.5)
    assert slope == pytest.approx(-barrier, rel=0.3)
    x2 = get_potential("example2_xmarginal")
    gaps = [spectrum(x2, b, k=2).gap for b in (5.0, 10.0, 20.0, 50.0)]
    assert max(gaps) / min(gaps) <= 3.0
    budget.check()


@pytest.mark.criterion(9, "critical-point geometry", 5)
def test_criterion_09_critical_points():
    budget = Budget(5)
    ex1 = get_potential("example1")
    pts, _ = find_critical_points(ex1, seed_grid([[-6, 6], [-6, 6]], 13))
    assert len(pts) == 2
    np.testing.assert_allclose(pts[0].location, [-1.0, 2.5], atol=1e-10)
    np.testing.assert_allclose(pts[1].location, [3.0, -1.5], atol=1e-10)
    assert [c.classification for c in pts] == ["saddle", "minimum"]
    # Hessians [[2x, 2], [2, 2]]: eigenvalues +-2 sqrt 2 at x=-1 and 4 +- 2 sqrt 2 at x=3
    r2 = 2 * math.sqrt(2)
    np.testing.assert_allclose(pts[0].eigenvalues, [-r2, r2], atol=1e-3)
    np.testing.assert_allclose(pts[1].eigenvalues, [4 - r2, 4 + r2], atol=1e-3)
    assert morse_report(ex1, pts).l_star == pytest.approx(4 - r2, abs=1e-3)

    ex2 = get_potential("example2")
    pts2, _ = find_critical_points(ex2, seed_grid([[-6, 6], [-6, 6]], 13))
    minima = [c for c in pts2 if c.classification == "minimum"]
    budget.check()
    assert len(minima) == 1
    np.testing.assert_allclose(minima[0].location, [2.5567, 1.0], atol=1e-3)


@pytest.mark.criterion(10, "metric estimators vs closed forms", 60)
def test_criterion_10_metric_closed_forms():
    budget = Budget(60)
    a = grid_reference(quadratic(1), 1.0, [-9, 9], 4096)
    b = grid_reference(quadratic(1, center=0.5), 1.0, [-9, 9], 4096)
    tv_exact = 2 * norm.cdf(0.25) - 1
    assert tv_exact == pytest.approx(0.19741, abs=1e-5)
    assert tv_distance(a, b).value == pytest.approx(0.19741, abs=1e-3)

    r = np.random.default_rng(10)
    ref = grid_reference(quadratic(1), 1.0, [-9, 10], 512)
    s = r.normal(1.0, 1.0, size=1_000_000)
    assert kl_divergence(histogram(s, ref), ref).value == pytest.approx(0.5, abs=0.05)

    x, y = r.normal(0, 1, 1_000_000), r.normal(0, 2, 1_000_000)
    # W2 between centred normals is |sigma_1 - sigma_2|
    assert w2_1d(x, y).value == pytest.approx(1.0, rel=0.02)
    budget.check()


@pytest.mark.criterion(11, "excess risk", 180)
def test_criterion_11_excess_risk(tmp_path):
    budget = Budget(180)
    q = parse_config({"kind": "excess_risk_vs_beta", "potential": "quadratic", "seed": 3, "betas": [10.0],
                      "lam": 0.005, "n_steps": 20000, "n_chains": 200, "burn_in": 2000, "thin": 5,
                      "output_prefix": "q"})
    rq = run_experiment(q, tmp_path)
    d, beta = 1, 10.0
    assert rq.summary["rows"][0]["excess_risk"] == pytest.approx(d / (2 * beta), rel=0.1)

    e = parse_config({"kind": "excess_risk_vs_beta", "potential": "example2", "seed": 3,
                      "betas": [2.0, 5.0, 10.0, 20.0], "lam": 0.0003, "n_steps": 100000, "n_chains": 200,
                      "burn_in": 20000, "thin": 10, "x0": [2.555666, 1.0], "output_prefix": "e"})
    re = run_experiment(e, tmp_path)
    assert re.summary["trend"]["non_increasing_within_1se"], re.summary["trend"]
    budget.check()


@pytest.mark.criterion(12, "determinism of result files", 60)
def test_criterion_12_determinism(tmp_path):
    budget = Budget(60)
    data = {"kind": "sample", "potential": "example2", "seed": 12, "beta": 2.0, "lam": 0.0003,
            "n_steps": 20000, "n_chains": 16, "thin": 10, "x0": [2.5, 1.0], "metrics": ["kl", "tv", "w2",
                                                                                     "excess_risk"]}
    hashes = []
    for run in ("a", "b"):
        rec = run_experiment(parse_config(data), tmp_path / run)
        names = ["sample.json", *rec.files.values()]
        hashes.append([hashlib.sha256((tmp_path / run / n).read_bytes()).hexdigest() for n in names])
    assert hashes[0] == hashes[1]
    budget.check()
