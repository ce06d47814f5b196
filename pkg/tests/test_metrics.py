import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iocc_das.fading import McConfig
from iocc_das.geometry import DemandSamples, Placement, avg_snr, path_loss
from iocc_das.metrics import (PER_LOCATION_COLUMNS, capacity_error_stats,
                              design_quantization, effective_capacity_report,
                              quantization_error, surrogate_errors, tight_lipschitz,
                              upper_bounds, write_per_location_csv)
from iocc_das.placement import ClusterParams, compute_nu_glob, iocc_weights, place_raus
from iocc_das.power import build_system, optimize_global_power, solve_exact

from conftest import random_samples, random_scenario


def feasible_instance(rng, k=None, q=None, n=None):
    while True:
        sc = random_scenario(rng, q=q, k=k)
        s = random_samples(rng, sc, int(rng.integers(20, 61)) if n is None else n)
        d = place_raus(sc, s, "IOCC", ClusterParams(init_seed=int(rng.integers(1 << 30))))
        sol = solve_exact(build_system(d.c, d.snr_targets, sc), sc.sum_power)
        if sol.feasible_exact:
            return sc, s, d, Placement(d.c, sol.p)


def test_capacity_error_stats():
    j1, j2, se = capacity_error_stats([3.0, 5.0], [5.0, 3.0], 0.5, [0.1, 0.1])
    assert j1 == pytest.approx((1.5 + 2.5) / 2)
    assert j2 == pytest.approx((1.5**2 + 2.5**2) / 2)
    assert se == pytest.approx(np.sqrt((2 * 1.5 * 0.1) ** 2 + (2 * 2.5 * 0.1) ** 2) / 2)


def test_quantization_error_symmetric_pair():
    assert quantization_error(np.array([[-2.0], [2.0]]), np.array([[0.0]])) == 4.0
    assert quantization_error(np.array([[-2.0], [2.0]]), np.array([[0.0]]), "absolute") == 2.0


def test_quantization_error_matches_loop(rng):
    data = rng.normal(size=(30, 3))
    ctr = rng.normal(size=(4, 3))
    ref = np.mean([min(((row - c) ** 2).sum() for c in ctr) for row in data])
    assert quantization_error(data, ctr) == pytest.approx(ref, rel=1e-12)


def test_surrogate_errors_direct(rng):
    sc, s, d, pl = feasible_instance(rng)
    nu = d.weights.nu
    r = s.theta_d + sc.delta / nu - np.array([avg_snr(x, pl, sc) for x in s.x])
    j1, j2 = surrogate_errors(s, pl, sc, nu)
    assert j1 == pytest.approx(nu * np.abs(r).mean(), rel=1e-12)
    assert j2 == pytest.approx(nu**2 * (r * r).mean(), rel=1e-12)


def test_feasible_bound_equals_quantization_error():
    rng = np.random.default_rng(5)
    for _ in range(10):
        sc, s, d, pl = feasible_instance(rng)
        ub = upper_bounds(s, pl, d, sc)
        q2 = design_quantization(s, d, sc, d.weights)
        assert ub.ub_2 == pytest.approx(q2, rel=1e-9)
        w1 = iocc_weights(d.weights.nu, d.weights.nu_glob, d.weights.q, "absolute")
        assert ub.ub_e1 == pytest.approx(design_quantization(s, d, sc, w1), rel=1e-9)


def test_bound_chain_random_instances():
    rng = np.random.default_rng(8)
    for _ in range(15):
        sc, s, d, pl = feasible_instance(rng)
        nu = d.weights.nu
        glob = optimize_global_power(d.c, s, sc, nu)
        j1_cls, j2_cls = surrogate_errors(s, pl, sc, nu)
        _, j2_glob = surrogate_errors(s, Placement(d.c, glob.p), sc, nu)
        ub = upper_bounds(s, pl, d, sc)
        assert j2_glob <= j2_cls * (1 + 1e-9)
        assert j2_cls <= ub.ub_opt * (1 + 1e-9)
        assert ub.ub_opt <= ub.ub_2 * (1 + 1e-9)
        assert j1_cls <= ub.ub_e1 * (1 + 1e-9)


def test_tight_lipschitz_below_global(rng):
    sc, s, d, pl = feasible_instance(rng)
    v = tight_lipschitz(s, pl, d.labels, sc)
    assert np.all(v <= compute_nu_glob(sc, pl.p) * (1 + 1e-12))


def test_one_rau_per_sample_gives_zero_bound():
    rng = np.random.default_rng(2)
    sc, s, d, pl = feasible_instance(rng, k=12, q=2, n=12)
    ub = upper_bounds(s, pl, d, sc)
    assert design_quantization(s, d, sc, d.weights) == 0.0
    assert ub.ub_2_loc == 0.0
    coord = s.theta_d + sc.delta / d.weights.nu
    scale = (d.weights.q + 1) * d.weights.nu**2 * np.mean(coord**2)
    assert ub.ub_2 <= 1e-20 * scale


def test_path_loss_lipschitz_certificate(rng):
    alpha, d_min = 3.7, 5.0
    a = d_min + rng.exponential(30.0, size=10_000)
    b = d_min + rng.exponential(30.0, size=10_000)
    lhs = np.abs(path_loss(a, alpha, d_min) - path_loss(b, alpha, d_min))
    assert np.all(lhs <= alpha / d_min ** (alpha + 1) * np.abs(a - b) * (1 + 1e-12))


def test_avg_snr_lipschitz_certificate(rng):
    sc, s, d, pl = feasible_instance(rng, q=2)
    nu_glob = compute_nu_glob(sc, pl.p)
    pts = rng.uniform(size=(20_000, 2)) * np.asarray(sc.area)
    far = np.min(np.linalg.norm(pts[:, None] - pl.c[None], axis=2), axis=1) >= sc.d_min
    pts = pts[far]
    pts = pts[:len(pts) // 2 * 2].reshape(-1, 2, 2)
    th = avg_snr(pts.reshape(-1, 2), pl, sc).reshape(-1, 2)
    dist = np.linalg.norm(pts[:, 0] - pts[:, 1], axis=1)
    assert np.all(np.abs(th[:, 0] - th[:, 1]) <= nu_glob * dist * (1 + 1e-12))


def test_effective_and_wasted_definitions():
    from iocc_das.geometry import LinearRamp, Scenario
    sc = Scenario(area=(10.0,), alpha=2.0, d_min=1.0, noise_power=1.0, shadow_sigma_db=0.0,
                  antennas_per_rau=1, num_raus=1, sum_power=1.0, delta=0.0,
                  demand=LinearRamp((0.0,), (10.0,), 3.0, 3.0))
    s = DemandSamples.from_capacities([[1.0], [9.0]], [0.0, 50.0])
    pl = Placement(np.array([[1.0]]), np.array([1.0]))
    rep = effective_capacity_report(s, pl, sc, McConfig(num_draws=200))
    ga = rep.per_location["gamma_a"]
    np.testing.assert_allclose(rep.per_location["gamma_eff"], [0.0, ga[1]])
    np.testing.assert_allclose(rep.per_location["gamma_wasted"], [ga[0], 0.0])
    assert np.isnan(rep.ub_2)


@given(st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_effective_decomposition(seed):
    rng = np.random.default_rng(seed)
    sc, s, d, pl = feasible_instance(rng, n=20)
    rep = effective_capacity_report(s, pl, sc, McConfig(seed, 50), design=d)
    pl_ = rep.per_location
    ga, gd = pl_["gamma_a"], pl_["gamma_d"]
    above = ga >= gd
    np.testing.assert_allclose(pl_["gamma_eff"][above] + pl_["gamma_wasted"][above], ga[above])
    np.testing.assert_array_equal(pl_["gamma_eff"][~above], ga[~above])
    assert np.all(pl_["gamma_wasted"][~above] == 0.0)
    assert np.all(pl_["gamma_wasted"] >= 0.0)
    assert rep.cell_avg_effective == pytest.approx(np.mean(np.minimum(ga, gd)))


def test_per_location_csv(tmp_path, rng):
    sc, s, d, pl = feasible_instance(rng, q=2, n=20)
    rep = effective_capacity_report(s, pl, sc, McConfig(1, 50), design=d)
    path = tmp_path / "loc.csv"
    write_per_location_csv(rep, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["row", "x0", "x1"] + list(PER_LOCATION_COLUMNS)
    assert len(rows) == 22 and rows[-1][0] == "mean"
    assert float(rows[-1][-2]) == pytest.approx(rep.cell_avg_effective, rel=1e-11)
