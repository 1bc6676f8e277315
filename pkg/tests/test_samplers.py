import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stula import (
    ChainConfig,
    DivergenceError,
    InitialLaw,
    InvalidInputError,
    InvalidParameterError,
    StepsizeError,
    get_potential,
    lambda_max,
    run_chains,
    second_moment_bound,
    step,
    tamed_drift,
)
from stula._accel import NUMBA_ENABLED
from stula.samplers import check_drift_bounds


def test_tamed_drift_formula():
    p = get_potential("double_well")
    lam, x = 0.01, 2.0
    h = x**3 - x
    want = x + (h - x) / (1 + math.sqrt(lam) * abs(x) ** 3)
    assert tamed_drift(p, lam, [x])[0] == pytest.approx(want, rel=1e-15)
    assert tamed_drift(p, lam, [x], scheme="ula")[0] == pytest.approx(h)
    assert tamed_drift(p, lam, [x], scheme="tula")[0] == pytest.approx(h / (1 + lam * abs(h)))


def test_tamed_drift_batch_shape():
    p = get_potential("example2")
    X = np.random.default_rng(0).normal(size=(7, 2))
    assert tamed_drift(p, 1e-4, X).shape == (7, 2)
    assert tamed_drift(p, 1e-4, X[0]).shape == (2,)


def test_lambda_max_closed_form():
    # double-well: a=1, L=2 -> min(1, 1/(4*(2+8)^2), 1/4)
    assert lambda_max(get_potential("double_well")) == pytest.approx(1 / 400)
    assert lambda_max(get_potential("quartic")) == pytest.approx(1 / 144)


def test_second_moment_bound_double_well():
    # E|x0|^2 + 2(2(L+a)^2 + 2d/beta + 2b)/a with a=b=1, L=2, d=1, beta=1
    assert second_moment_bound(get_potential("double_well"), 1.0, 0.0) == pytest.approx(2 * (18 + 2 + 2))


def test_single_step():
    p = get_potential("double_well")
    lam, x, z = 0.01, 2.0, 0.5
    d = x + (x**3 - 2 * x) / (1 + 0.1 * 8)
    assert step("stula", p, 2.0, lam, [x], [z])[0] == pytest.approx(x - lam * d + math.sqrt(lam) * z)
    with pytest.raises(InvalidParameterError):
        step("euler", p, 1.0, lam, [x], [z])
    with pytest.raises(InvalidInputError):
        step("stula", p, 1.0, lam, [np.inf], [z])


def test_step_matches_chain_kernel():
    p = get_potential("double_well")
    cfg = ChainConfig(beta=1.5, lam=0.002, n_steps=5, n_chains=1, seed=17, burn_in=0, init=InitialLaw.point(0.3))
    b = run_chains(p, cfg, backend="numpy")
    from stula import rng

    key = rng.chain_keys(17, 1)
    x = np.array([0.3])
    for n in range(5):
        x = step("stula", p, 1.5, 0.002, x, rng.normals(key, n, 1)[0])
    np.testing.assert_allclose(b.final_states[0], x, rtol=1e-14)


def test_stepsize_guard():
    p = get_potential("double_well")
    with pytest.raises(StepsizeError):
        run_chains(p, ChainConfig(beta=1, lam=0.01, n_steps=10))
    b = run_chains(p, ChainConfig(beta=1, lam=0.01, n_steps=10, allow_large_step=True))
    assert b.samples.shape == (5, 1)


def test_config_validation():
    with pytest.raises(InvalidParameterError):
        ChainConfig(beta=0, lam=0.1, n_steps=1)
    with pytest.raises(InvalidParameterError):
        ChainConfig(beta=1, lam=0.1, n_steps=10, burn_in=11)
    with pytest.raises(InvalidParameterError):
        ChainConfig(beta=1, lam=0.1, n_steps=10, scheme="mala")
    with pytest.raises(InvalidParameterError):
        InitialLaw.gaussian(0.0, 0.0)


def test_collect_steps_and_sample_count():
    cfg = ChainConfig(beta=1, lam=1e-3, n_steps=100, n_chains=3, burn_in=40, thin=20)
    np.testing.assert_array_equal(cfg.collect_steps, [60, 80, 100])
    b = run_chains(get_potential("double_well"), cfg)
    assert b.samples.shape == (9, 1)


def test_determinism_and_chain_count_independence():
    p = get_potential("example2")
    base = dict(beta=2.0, lam=1e-4, n_steps=300, seed=99, init=InitialLaw.gaussian([2.5, 1.0], 0.3))
    a = run_chains(p, ChainConfig(n_chains=3, **base))
    b = run_chains(p, ChainConfig(n_chains=3, **base))
    c = run_chains(p, ChainConfig(n_chains=8, **base))
    assert a.final_states.tobytes() == b.final_states.tobytes()
    assert a.final_states.tobytes() == c.final_states[:3].tobytes()


@pytest.mark.skipif(not NUMBA_ENABLED, reason="numba not active")
@pytest.mark.parametrize("pid", ["double_well", "example2", "quadratic"])
def test_numba_and_numpy_kernels_agree(pid):
    p = get_potential(pid)
    cfg = ChainConfig(beta=1.0, lam=2e-4, n_steps=2000, n_chains=4, seed=5, init=InitialLaw.point(0.5))
    a = run_chains(p, cfg, backend="numba")
    b = run_chains(p, cfg, backend="numpy")
    np.testing.assert_allclose(a.samples, b.samples, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(a.moment_trace, b.moment_trace, rtol=1e-12)


def test_disable_flag_selects_numpy_path():
    code = (
        "import json, stula\n"
        "from stula import *\n"
        "b = run_chains(get_potential('double_well'), ChainConfig(beta=1, lam=1e-3, n_steps=500, n_chains=2, seed=3))\n"
        "print(json.dumps([stula.BACKEND, b.final_states.ravel().tolist()]))\n"
    )
    env = dict(os.environ, STULA_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, states = json.loads(out.stdout)
    assert backend == "numpy"
    ref = run_chains(get_potential("double_well"), ChainConfig(beta=1, lam=1e-3, n_steps=500, n_chains=2, seed=3))
    np.testing.assert_allclose(states, ref.final_states.ravel(), rtol=1e-12)


def test_ula_divergence_is_reported():
    p = get_potential("quartic")
    cfg = ChainConfig(beta=1, lam=0.1, n_steps=50, n_chains=2, scheme="ula", init=InitialLaw.point(10.0))
    with pytest.raises(DivergenceError) as exc:
        run_chains(p, cfg)
    err = exc.value
    assert err.batch.diverged and err.batch.n_diverged == 2
    assert err.first_nonfinite_step <= 10
    assert np.all(np.isnan(err.batch.final_states))


def test_partial_divergence_keeps_live_chains():
    p = get_potential("quartic")
    init = InitialLaw.gaussian(0.0, 4.0)
    cfg = ChainConfig(beta=1, lam=0.1, n_steps=40, n_chains=20, seed=2, scheme="ula", init=init)
    b = run_chains(p, cfg)
    assert 0 < b.n_diverged < 20
    assert b.samples.shape[0] == 20 * (20 - b.n_diverged)
    assert np.all(np.isfinite(b.samples))


def test_snapshots():
    p = get_potential("double_well")
    cfg = ChainConfig(beta=1, lam=1e-3, n_steps=100, n_chains=5, seed=4, init=InitialLaw.point(0.7))
    b = run_chains(p, cfg, record_at=[0, 50, 100])
    np.testing.assert_array_equal(b.snapshot(0), np.full((5, 1), 0.7))
    np.testing.assert_array_equal(b.snapshot(100), b.final_states)
    with pytest.raises(InvalidInputError):
        b.snapshot(7)
    with pytest.raises(InvalidInputError):
        run_chains(p, cfg, record_at=[101])


def test_noiseless_quadratic_contracts_geometrically():
    p = get_potential("quadratic")
    cfg = ChainConfig(beta=1, lam=0.005, n_steps=10, noise=False, init=InitialLaw.point(2.0), burn_in=0)
    b = run_chains(p, cfg)
    assert b.final_states[0, 0] == pytest.approx(2.0 * (1 - 0.005) ** 10, rel=1e-14)


def test_missing_dissipativity_is_an_error():
    with pytest.raises(InvalidInputError):
        run_chains(get_potential("example1"), ChainConfig(beta=1, lam=1e-3, n_steps=10))


@settings(max_examples=40, deadline=None)
@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.sampled_from([1.0, 0.1, 0.01]))
def test_tamed_dissipativity_property(x, y, frac):
    p = get_potential("example2")
    lam = frac * lambda_max(p)
    v = np.array([x, y])
    d = tamed_drift(p, lam, v)
    lhs, rhs = float(d @ v), 0.5 * p.a * float(v @ v) - p.b
    assert lhs - rhs >= -1e-9 * (1 + abs(lhs) + abs(rhs))


def test_drift_bound_report_lists_three_checks():
    p = get_potential("double_well")
    reps = check_drift_bounds(p, lambda_max(p), 1000, 5.0, 1)
    assert all(r.holds for r in reps)
    assert {r.name for r in reps} == {"tamed_growth", "tamed_dissipativity", "taming_error"}
