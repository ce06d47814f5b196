import math

import numpy as np
import pytest
from scipy.special import exp1, roots_genlaguerre, roots_hermitenorm

from iocc_das.fading import (McConfig, ergodic_capacity, ergodic_capacity_batch,
                             instantaneous_snr, sample_fading)
from iocc_das.geometry import LinearRamp, Placement, Scenario


def make(shadow_db=0.0, antennas=1, k=1, noise=1.0):
    return Scenario(area=(100.0,), alpha=2.0, d_min=1.0, noise_power=noise,
                    shadow_sigma_db=shadow_db, antennas_per_rau=antennas, num_raus=k,
                    sum_power=1.0, delta=0.0, demand=LinearRamp((0.0,), (100.0,), 2.0, 1.0))


def rayleigh_oracle(a):
    """E[log2(1 + a g)], g ~ Exp(1): exp(1/a) E1(1/a) / ln 2."""
    return math.exp(1.0 / a) * exp1(1.0 / a) / math.log(2.0)


def composite_oracle(a, sigma_db, m):
    """Gauss-Hermite over the shadowing, generalized Gauss-Laguerre over the
    gamma(m) small-scale sum."""
    z, wz = roots_hermitenorm(60)
    wz = wz / wz.sum()
    g, wg = roots_genlaguerre(80, m - 1)
    wg = wg / math.gamma(m)
    s = 10 ** (sigma_db * z / 10)
    return float(np.sum(wz[:, None] * wg[None, :] * np.log2(1 + a * s[:, None] * g[None, :])))


@pytest.mark.parametrize("snr", [0.5, 5.0, 50.0])
def test_rayleigh_capacity_within_3_se(snr):
    sc = make()
    pl = Placement(np.array([[0.0]]), np.array([1.0]))
    # SNR gain at x=1 (clamped at d_min=1) is p / noise = 1, so scale noise
    sc = make(noise=1.0 / snr)
    est, se = ergodic_capacity([1.0], pl, sc, McConfig(seed=7, num_draws=40_000))
    assert abs(est - rayleigh_oracle(snr)) < 3 * se


def test_composite_capacity_within_3_se():
    sc = make(shadow_db=6.0, antennas=2, noise=0.1)
    pl = Placement(np.array([[0.0]]), np.array([1.0]))
    est, se = ergodic_capacity([1.0], pl, sc, McConfig(seed=3, num_draws=40_000))
    assert abs(est - composite_oracle(10.0, 6.0, 2)) < 3 * se


def test_fading_moments(rng):
    sc = make(shadow_db=6.0, antennas=3, k=2)
    d = sample_fading(sc, rng, 100_000)
    assert d.s.shape == d.g.shape == (100_000, 2)
    assert np.mean(d.g) == pytest.approx(3.0, rel=0.01)
    assert np.mean(d.s) == pytest.approx(sc.shadow_mean, rel=0.02)


def test_normals_drawn_before_exponentials():
    sc = make(shadow_db=4.0, antennas=2, k=3)
    d = sample_fading(sc, np.random.default_rng(5))
    r = np.random.default_rng(5)
    z = r.standard_normal(3)
    e = r.standard_exponential((3, 2))
    np.testing.assert_allclose(d.s, 10 ** (0.4 * z))
    np.testing.assert_allclose(d.g, e.sum(axis=1))


def test_batch_matches_single_and_is_order_free():
    sc = make(shadow_db=6.0, k=2)
    pl = Placement(np.array([[10.0], [60.0]]), np.array([0.5, 0.5]))
    mc = McConfig(seed=11, num_draws=500)
    pts = np.array([[0.0], [30.0], [90.0]])
    est, se = ergodic_capacity_batch(pts, pl, sc, mc, streams=[4, 5, 6])
    for i, s in enumerate([4, 5, 6]):
        e1, s1 = ergodic_capacity(pts[i], pl, sc, mc, stream=s)
        assert est[i] == e1 and se[i] == s1
    rev, _ = ergodic_capacity_batch(pts[::-1], pl, sc, mc, streams=[6, 5, 4])
    np.testing.assert_array_equal(rev[::-1], est)


def test_instantaneous_snr():
    sc = make(k=2)
    pl = Placement(np.array([[0.0], [10.0]]), np.array([0.25, 0.75]))
    from iocc_das.fading import FadingDraw
    d = FadingDraw(s=np.array([1.0, 2.0]), g=np.array([3.0, 0.5]))
    expected = 0.25 * 3.0 * 4.0**-2 + 0.75 * 2.0 * 0.5 * 6.0**-2
    assert instantaneous_snr([4.0], pl, d, sc) == pytest.approx(expected)


def test_too_few_draws_rejected():
    sc = make()
    pl = Placement(np.array([[0.0]]), np.array([1.0]))
    with pytest.raises(ValueError):
        ergodic_capacity([1.0], pl, sc, McConfig(num_draws=1))


def test_rayleigh_capacity_million_draws():
    sc = make(noise=1.0 / 8.0)
    pl = Placement(np.array([[0.0]]), np.array([1.0]))
    est, se = ergodic_capacity([1.0], pl, sc, McConfig(seed=1, num_draws=1_000_000))
    assert abs(est - rayleigh_oracle(8.0)) < 3 * se
