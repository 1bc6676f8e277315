import math

import numpy as np
import pytest

from stula import (
    InvalidInputError,
    check_C_assumptions,
    discretize_generator,
    find_critical_points,
    get_potential,
    kramers_gap,
    log_gap_slope,
    morse_report,
    seed_grid,
    spectral_gap,
    spectrum,
)
from stula.potentials import quadratic


@pytest.mark.parametrize("m", [0.5, 2.0])
def test_ou_gap_equals_curvature(m):
    # the OU generator has spectrum {k m}
    r = spectrum(quadratic(1, curvature=m), 3.0, k=4)
    np.testing.assert_allclose(r.eigenvalues[1:], m * np.arange(1, 4), rtol=1e-3)
    assert r.converged


def test_generator_is_reversible_and_conservative():
    op = discretize_generator(get_potential("double_well"), 2.0, [-3, 3], 64)
    W = op.dirichlet_matrix().toarray()
    np.testing.assert_allclose(W, W.T, atol=1e-15)
    np.testing.assert_allclose(W.sum(axis=1), 0.0, atol=1e-14)
    f = np.random.default_rng(0).normal(size=64)
    np.testing.assert_allclose(op.apply(f), (W @ f) / op.mass, rtol=1e-9)
    np.testing.assert_allclose(op.apply(np.ones(64)), 0.0, atol=1e-10)


def test_two_dimensional_gap_of_product_gaussian():
    r = spectrum(quadratic(2), 2.0, n_cells=64, k=4, refine=False)
    assert r.solver == "shift-invert-lanczos"
    np.testing.assert_allclose(r.eigenvalues[:4], [0, 1, 1, 2], atol=2e-2)


def test_refinement_flag():
    op = discretize_generator(quadratic(1), 1.0, [-8, 8], 64)
    r = spectral_gap(op, k=3, refine=True, rel_tol=1e-12)
    assert not r.converged and r.refined_gap is not None


def test_double_well_gap_tracks_kramers_estimate():
    p = get_potential("double_well")
    for beta in (10.0, 16.0):
        assert spectrum(p, beta, k=2).gap == pytest.approx(kramers_gap(p, beta, [-1.0, 1.0], 0.0), rel=0.15)


def test_kramers_closed_form():
    p = get_potential("double_well")
    # u''(+-1) = 2, |u''(0)| = 1, barrier 1/4: 2 * sqrt(2)/(2 pi) e^{-beta/4}
    beta = 7.0
    assert kramers_gap(p, beta, [-1.0, 1.0], 0.0) == pytest.approx(math.sqrt(2) / math.pi * math.exp(-beta / 4))


def test_log_gap_slope_of_exact_exponential():
    betas = np.array([1.0, 2.0, 5.0])
    assert log_gap_slope(betas, 3 * np.exp(-0.4 * betas)) == pytest.approx(-0.4)


def test_example1_critical_points():
    p = get_potential("example1")
    pts, failed = find_critical_points(p, seed_grid([[-5, 5], [-5, 5]], 9))
    locs = np.array([c.location for c in pts])
    np.testing.assert_allclose(locs, [[-1.0, 2.5], [3.0, -1.5]], atol=1e-12)
    assert [c.classification for c in pts] == ["saddle", "minimum"]
    rep = morse_report(p, pts)
    assert rep.passed
    assert rep.l_star == pytest.approx(4 - 2 * math.sqrt(2), abs=1e-12)


def test_degenerate_point_fails_morse():
    p = get_potential("quartic")
    pts, _ = find_critical_points(p, seed_grid([[-2, 2]], 5))
    assert len(pts) == 1 and pts[0].classification == "degenerate"
    assert not morse_report(p, pts).passed


def test_double_well_critical_points():
    pts, _ = find_critical_points(get_potential("double_well"), seed_grid([[-3, 3]], 13))
    assert [c.classification for c in pts] == ["minimum", "maximum", "minimum"]
    np.testing.assert_allclose([c.location[0] for c in pts], [-1, 0, 1], atol=1e-12)


def test_morse_report_needs_points():
    with pytest.raises(InvalidInputError):
        morse_report(get_potential("double_well"), [])


def test_curvature_report_double_well():
    rep = check_C_assumptions(get_potential("double_well"), 2000, 4.0, 3)
    # min u'' = 3x^2 - 1 >= -1 at x = 0
    assert rep.K_estimate == pytest.approx(1.0)
    assert rep.c_H == pytest.approx(4.0**3 - 4.0)
    assert rep.label == "sampled evidence"
