import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from stula import (
    InvalidInputError,
    auto_box,
    InvalidParameterError,
    MissingMetadataError,
    excess_risk,
    excess_risk_quadrature,
    get_potential,
    grid_reference,
    histogram,
    kl_divergence,
    moment_summary,
    sliced_w2,
    tv_distance,
    w2_1d,
)
from stula.potentials import quadratic


def test_tv_between_shifted_normals():
    a = grid_reference(quadratic(1), 1.0, [-9, 9], 4096)
    b = grid_reference(quadratic(1, center=0.5), 1.0, [-9, 9], 4096)
    exact = 2 * norm.cdf(0.25) - 1
    assert tv_distance(a, b).value == pytest.approx(exact, abs=1e-5)
    assert tv_distance(a, a).value == 0.0


def test_kl_grid_vs_grid():
    a = grid_reference(quadratic(1, center=1.0), 1.0, [-9, 10], 4096)
    b = grid_reference(quadratic(1), 1.0, [-9, 10], 4096)
    assert kl_divergence(a, b).value == pytest.approx(0.5, abs=1e-5)


def test_histogram_clips_out_of_box():
    g = grid_reference(quadratic(1), 1.0, [-8, 8], 64)
    h = histogram(np.array([-100.0, 0.1, 100.0]), g)
    assert h.out_of_box == 2
    assert h.mass[0] == pytest.approx(1 / 3) and h.mass[-1] == pytest.approx(1 / 3)


def test_kl_reports_bias_estimate():
    g = grid_reference(quadratic(1), 1.0, [-8, 8], 64)
    s = np.random.default_rng(0).normal(size=5000)
    rep = kl_divergence(histogram(s, g), g)
    assert rep.diagnostics["bias_estimate"] == pytest.approx((64 - rep.diagnostics["empty_cells"] - 1) / 10000)
    assert rep.variant == "histogram" and rep.n_samples == 5000


def test_grid_mismatch_is_rejected():
    g1 = grid_reference(quadratic(1), 1.0, [-8, 8], 64)
    g2 = grid_reference(quadratic(1), 1.0, [-8, 8], 128)
    with pytest.raises(InvalidInputError):
        tv_distance(g1, g2)


def _w2_equal_size(a, b):
    return np.sqrt(np.mean((np.sort(a) - np.sort(b)) ** 2))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 60), st.integers(0, 10**6))
def test_w2_equal_sizes_matches_sorted_pairing(n, seed):
    r = np.random.default_rng(seed)
    a, b = r.normal(size=n), r.exponential(size=n)
    assert w2_1d(a, b).value == pytest.approx(_w2_equal_size(a, b), rel=1e-10, abs=1e-12)


def test_w2_unequal_sizes_matches_replication():
    # 3 vs 6 points: replicating each of the 3 twice gives an equal-size problem
    a = np.array([0.0, 1.0, 5.0])
    b = np.array([-1.0, 0.5, 0.7, 2.0, 3.0, 9.0])
    assert w2_1d(a, b).value == pytest.approx(_w2_equal_size(np.repeat(a, 2), b), rel=1e-12)


def test_w2_symmetry_and_translation():
    r = np.random.default_rng(1)
    a, b = r.normal(size=300), r.normal(size=700)
    assert w2_1d(a, b).value == pytest.approx(w2_1d(b, a).value, rel=1e-12)
    assert w2_1d(a, a + 0.3).value == pytest.approx(0.3, rel=1e-12)


def test_w2_against_grid_reference():
    g = grid_reference(quadratic(1, curvature=0.25), 1.0, [-20, 20], 8192)
    s = np.random.default_rng(3).normal(size=200000)
    # W2(N(0,1), N(0,4)) = 1
    assert w2_1d(s, g).value == pytest.approx(1.0, rel=0.02)


def test_sliced_w2_translation():
    r = np.random.default_rng(4)
    a = r.normal(size=(20000, 2))
    v = np.array([1.0, 1.0])
    rep = sliced_w2(a, a + v, 256, seed=2)
    # RMS over uniform directions of |<v, theta>| is |v|/sqrt(d)
    assert rep.value == pytest.approx(np.linalg.norm(v) / np.sqrt(2), rel=0.05)
    assert rep.variant == "sliced"


def test_sliced_w2_guards():
    a = np.zeros((10, 2))
    with pytest.raises(InvalidParameterError):
        sliced_w2(a, a, 4, seed=1)
    with pytest.raises(InvalidInputError):
        sliced_w2(np.zeros((10, 1)), np.zeros((10, 1)), 16, seed=1)


def test_excess_risk_quadrature_gaussian():
    g = grid_reference(quadratic(1), 10.0, [-3, 3], 4096)
    assert excess_risk_quadrature(g, quadratic(1)) == pytest.approx(0.05, rel=1e-5)


def test_excess_risk_from_exact_grid_draws():
    p = get_potential("example2")
    g = grid_reference(p, 5.0, auto_box(p, 5.0), 256)
    s = g.sample(200000, seed=5)
    rep = excess_risk(s, p)
    assert rep.value == pytest.approx(excess_risk_quadrature(g, p), abs=4 * rep.diagnostics["std_error"])


def test_excess_risk_needs_known_minimum():
    with pytest.raises(MissingMetadataError):
        excess_risk(np.zeros((3, 2)), get_potential("example1"))


def test_moment_summary():
    m = moment_summary(np.array([[1.0, 0.0], [0.0, 2.0]]))
    assert m["mean_sq_norm"] == 2.5
    assert m["mean_quartic_norm"] == 8.5
