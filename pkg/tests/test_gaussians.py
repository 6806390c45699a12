import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parabolic_cv import rng
from parabolic_cv.errors import DivisibilityError, MissingAreasError, OutOfIntervalError
from parabolic_cv.gaussians import (
    FineGaussians,
    ParabolaCoeffs,
    Provenance,
    condition_on_increments,
    condition_on_increments_and_areas,
    conditional_delta_i_stats,
    increment_weights,
    parabola_eval,
    parabola_unconditioned,
    sample_coupled_block,
    sample_fine,
)
from parabolic_cv.oracles import adaptive_quadrature

SQ3 = np.sqrt(3.0)


def cov_within_identity(pairs, nsig=4.0):
    """Sample covariance of (n, 2) draws is the identity within ``nsig`` standard errors."""
    n = pairs.shape[0]
    c = np.cov(pairs.T)
    # var of a sample variance of N(0,1) is 2/n, of a sample covariance 1/n
    assert abs(c[0, 0] - 1) < nsig * np.sqrt(2 / n)
    assert abs(c[1, 1] - 1) < nsig * np.sqrt(2 / n)
    assert abs(c[0, 1]) < nsig * np.sqrt(1 / n)
    assert np.all(np.abs(pairs.mean(0)) < nsig / np.sqrt(n))


def test_sample_fine_shapes():
    g = sample_fine(rng.stream(1), 4)
    assert g.g.shape == (4,) and g.f is None
    ga = sample_fine(rng.stream(1), 4, with_areas=True)
    assert ga.g.shape == ga.f.shape == (4,)


def test_sample_fine_draw_order_g_then_f_per_step():
    z = rng.stream(3).standard_normal(8)
    ga = sample_fine(rng.stream(3), 4, with_areas=True)
    np.testing.assert_array_equal(ga.g, z[0::2])
    np.testing.assert_array_equal(ga.f, z[1::2])


def test_batched_draws_match_sequential_draws():
    s1, s2 = rng.stream(5), rng.stream(5)
    batch = sample_fine(s1, 6, True, size=3)
    for r in range(3):
        one = sample_fine(s2, 6, True)
        np.testing.assert_array_equal(batch.g[r], one.g)
        np.testing.assert_array_equal(batch.f[r], one.f)


def test_sample_fine_moments():
    z = sample_fine(rng.stream(11), 1000, size=1000).g.ravel()
    n = z.size
    assert abs(z.mean()) < 4 / np.sqrt(n)
    assert abs(z.var() - 1) < 4 * np.sqrt(2 / n)


def test_fine_rejects_non_finite_and_bad_shapes():
    with pytest.raises(ValueError):
        FineGaussians(g=np.array([0.0, np.nan]))
    with pytest.raises(ValueError):
        FineGaussians(g=np.zeros(3), f=np.zeros(2))


def test_unconditioned_is_deterministic_and_draws_two_per_interval():
    a = parabola_unconditioned(rng.stream(9), 8)
    b = parabola_unconditioned(rng.stream(9), 8)
    np.testing.assert_array_equal(a.gs, b.gs)
    np.testing.assert_array_equal(a.gsp, b.gsp)
    assert a.provenance is Provenance.UNCONDITIONED
    s = rng.stream(9)
    parabola_unconditioned(s, 1)
    ref = rng.stream(9)
    ref.standard_normal(2)
    assert s.standard_normal() == ref.standard_normal()


def test_unconditioned_covariance():
    c = parabola_unconditioned(rng.stream(2), 1, size=200_000)
    cov_within_identity(np.stack([c.gs[:, 0], c.gsp[:, 0]], axis=1))


def test_increments_q1_gives_fresh_draw():
    fine = FineGaussians(g=np.array([0.7]))
    c = condition_on_increments(fine, 1, g_hat=np.array([-1.3]))
    assert c.gs[0] == 0.7
    assert c.gsp[0] == pytest.approx(-1.3, abs=1e-15)
    assert c.provenance is Provenance.INCREMENTS


def test_increment_weights_q4():
    np.testing.assert_allclose(increment_weights(4), [0.75, 0.25, -0.25, -0.75])
    c = condition_on_increments(FineGaussians(g=np.ones(4)), 4, g_hat=np.zeros(1))
    assert c.gs[0] == pytest.approx(2.0)
    assert c.gsp[0] == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=24), st.integers(1, 4))
def test_increments_formula_against_brute_force(vals, q):
    g = np.array(vals[: len(vals) // q * q] or [0.0] * q)
    n_coarse = g.size // q
    gh = np.linspace(-1, 1, n_coarse)
    c = condition_on_increments(FineGaussians(g=g), q, g_hat=gh)
    for i in range(n_coarse):
        blk = g[i * q:(i + 1) * q]
        w = sum((1 + (1 - 2 * j) / q) * blk[j - 1] for j in range(1, q + 1))
        assert c.gs[i] == pytest.approx(blk.sum() / np.sqrt(q), abs=1e-12)
        assert c.gsp[i] == pytest.approx(SQ3 / np.sqrt(q) * (w + gh[i] / np.sqrt(3 * q)), abs=1e-12)


@pytest.mark.parametrize("q", [1, 4, 16])
def test_increments_conditioning_preserves_law(q):
    fine, c = sample_coupled_block(rng.stream(4, q), 100_000, q, q, False)
    cov_within_identity(np.stack([c.gs[:, 0], c.gsp[:, 0]], axis=1))


@pytest.mark.parametrize("q", [1, 4, 16])
def test_areas_conditioning_preserves_law(q):
    fine = sample_fine(rng.stream(8, q), q, True, size=100_000)
    c = condition_on_increments_and_areas(fine, q)
    assert c.provenance is Provenance.INCREMENTS_AND_AREAS
    cov_within_identity(np.stack([c.gs[:, 0], c.gsp[:, 0]], axis=1))


def test_areas_q1_is_identity():
    fine = sample_fine(rng.stream(12), 50, True)
    c = condition_on_increments_and_areas(fine, 1)
    np.testing.assert_array_equal(c.gs, fine.g)
    np.testing.assert_allclose(c.gsp, fine.f, rtol=0, atol=1e-15)


def test_areas_zero_input():
    z = np.zeros(8)
    c = condition_on_increments_and_areas(FineGaussians(g=z, f=z), 4)
    assert np.all(c.gs == 0) and np.all(c.gsp == 0)


def test_conditioning_errors():
    with pytest.raises(DivisibilityError):
        condition_on_increments(FineGaussians(g=np.zeros(5)), 2, g_hat=np.zeros(2))
    with pytest.raises(MissingAreasError):
        condition_on_increments_and_areas(FineGaussians(g=np.zeros(4)), 2)
    with pytest.raises(DivisibilityError):
        condition_on_increments_and_areas(FineGaussians(g=np.zeros(5), f=np.zeros(5)), 2)


def test_coupled_block_matches_per_replication_calls():
    fine, c = sample_coupled_block(rng.stream(21), 3, 8, 4, False)
    s = rng.stream(21)
    for r in range(3):
        f1 = sample_fine(s, 8)
        c1 = condition_on_increments(f1, 4, s)
        np.testing.assert_array_equal(fine.g[r], f1.g)
        np.testing.assert_array_equal(c.gsp[r], c1.gsp)


def _coeffs():
    return ParabolaCoeffs(gs=np.array([0.4, -1.1, 0.9]), gsp=np.array([1.2, 0.3, -0.8]))


def test_parabola_endpoints():
    c, h = _coeffs(), 1 / 3
    w = 0.0
    for i in range(1, 4):
        assert parabola_eval(c, i, h, (i - 1) * h, w) == pytest.approx(w, abs=1e-15)
        w_next = w + np.sqrt(h) * c.gs[i - 1]
        assert parabola_eval(c, i, h, i * h, w) == pytest.approx(w_next, abs=1e-14)
        w = w_next


def test_parabola_integral():
    c, h = _coeffs(), 1 / 3
    w = np.sqrt(h) * c.gs[0]
    val = adaptive_quadrature(lambda u: parabola_eval(c, 2, h, u, w), 1e-13, h, 2 * h)
    expected = h * (w + np.sqrt(h) / 2 * c.gs[1] + np.sqrt(h) / (2 * SQ3) * c.gsp[1])
    assert val == pytest.approx(expected, abs=1e-12)


def test_parabola_out_of_interval():
    c = _coeffs()
    with pytest.raises(OutOfIntervalError):
        parabola_eval(c, 2, 1 / 3, 0.9, 0.0)
    with pytest.raises(OutOfIntervalError):
        parabola_eval(c, 4, 1 / 3, 1.0, 0.0)


def test_wh_mapping():
    w = _coeffs().wh(0.25)
    np.testing.assert_allclose(w.w, 0.5 * _coeffs().gs)
    np.testing.assert_allclose(w.hh, 0.5 / (2 * SQ3) * _coeffs().gsp)


def test_delta_i_stats_examples():
    m, v = conditional_delta_i_stats(np.array([0.3]), 0.01)
    assert m == pytest.approx(0.01 * 0.5 * 0.3)
    assert v == pytest.approx(0.01**3 / 12)
    m, v = conditional_delta_i_stats(np.zeros(5), 0.1)
    assert m == 0 and v == pytest.approx(5 * 0.1**3 / 12)


def _trapezoid_integral(seg, d):
    # time integral of (W_u - W_s) over a segment sampled with spacing d
    return d * (0.5 * (seg[:, 0] + seg[:, -1]) + seg[:, 1:-1].sum(1)) - seg[:, 0] * d * (seg.shape[1] - 1)


def test_areas_conditioning_reproduces_exact_w_h():
    # Brownian path sampled 64 times per fine step; (g, f) per fine step and
    # (W, H) per coarse step both from the trapezoid rule on that path
    n_sub, q, n_coarse, reps = 64, 4, 2, 200
    n_fine = q * n_coarse
    hf, h = 1.0 / n_fine, q / n_fine
    d = hf / n_sub
    z = rng.stream(31).standard_normal((reps, n_fine * n_sub))
    path = np.concatenate([np.zeros((reps, 1)), np.cumsum(np.sqrt(d) * z, 1)], 1)
    g, f = np.empty((reps, n_fine)), np.empty((reps, n_fine))
    for i in range(n_fine):
        seg = path[:, i * n_sub:(i + 1) * n_sub + 1]
        inc = seg[:, -1] - seg[:, 0]
        g[:, i] = inc / np.sqrt(hf)
        f[:, i] = SQ3 / np.sqrt(hf) * (2 / hf * _trapezoid_integral(seg, d) - inc)
    wh = condition_on_increments_and_areas(FineGaussians(g=g, f=f), q).wh(h)
    for i in range(n_coarse):
        seg = path[:, i * q * n_sub:(i + 1) * q * n_sub + 1]
        w = seg[:, -1] - seg[:, 0]
        hh = -0.5 * w + _trapezoid_integral(seg, d) / h
        np.testing.assert_allclose(wh.w[:, i], w, atol=1e-12)
        np.testing.assert_allclose(wh.hh[:, i], hh, atol=1e-12)
