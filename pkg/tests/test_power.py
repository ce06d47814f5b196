import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iocc_das.geometry import DemandSamples, LinearRamp, Placement, Scenario, avg_snr
from iocc_das.placement import ClusterParams, place_raus
from iocc_das.power import (EPS_P, SnrSystem, allocate_cluster_power, build_system,
                            optimize_global_power, solve_constrained, solve_exact,
                            surrogate_objective)

from conftest import random_samples, random_scenario


def gauss_solve(a, b):
    """Textbook elimination with partial pivoting."""
    a = [list(map(float, row)) for row in a]
    b = list(map(float, b))
    n = len(b)
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(a[r][col]))
        a[col], a[piv] = a[piv], a[col]
        b[col], b[piv] = b[piv], b[col]
        for r in range(col + 1, n):
            f = a[r][col] / a[col][col]
            for c in range(col, n):
                a[r][c] -= f * a[col][c]
            b[r] -= f * b[col]
    x = [0.0] * n
    for r in reversed(range(n)):
        x[r] = (b[r] - sum(a[r][c] * x[c] for c in range(r + 1, n))) / a[r][r]
    return np.array(x)


def random_dominant(rng, k):
    a = rng.uniform(0.0, 1.0, size=(k, k))
    np.fill_diagonal(a, a.sum(axis=1) + rng.uniform(0.5, 2.0, size=k))
    return SnrSystem(a, rng.uniform(0.5, 5.0, size=k), rng.uniform(0.5, 2.0, size=k))


def test_exact_solve_against_elimination(rng):
    for _ in range(100):
        k = int(rng.integers(2, 9))
        sys_ = random_dominant(rng, k)
        sol = solve_exact(sys_, 1e9)
        ref = gauss_solve(sys_.a_matrix, sys_.target) / sys_.sbar
        np.testing.assert_allclose(sol.p, ref, rtol=1e-10)
        assert sol.residual < 1e-10


def test_exact_solve_flags_budget_and_sign():
    sys_ = SnrSystem(np.eye(2), np.array([1.0, 2.0]), np.ones(2))
    assert solve_exact(sys_, 3.0).feasible_exact
    assert not solve_exact(sys_, 2.5).feasible_exact
    neg = SnrSystem(np.array([[1.0, 0.5], [0.5, 1.0]]), np.array([0.0, 2.0]), np.ones(2))
    assert not solve_exact(neg, 10.0).feasible_exact


def test_non_dominant_warns():
    sys_ = SnrSystem(np.array([[1.0, 2.0], [2.0, 1.0]]), np.ones(2), np.ones(2))
    with pytest.warns(RuntimeWarning):
        solve_exact(sys_, 10.0)


def test_symmetric_pair_gets_equal_powers():
    sys_ = SnrSystem(np.array([[2.0, 0.3], [0.3, 2.0]]), np.array([1.0, 1.0]), np.ones(2))
    p = solve_exact(sys_, 10.0).p
    assert p[0] == pytest.approx(p[1])


def test_constrained_matches_exact_when_feasible(rng):
    done = 0
    while done < 10:
        sys_ = random_dominant(rng, int(rng.integers(2, 6)))
        exact = solve_exact(sys_, 1e6)
        if not exact.feasible_exact:
            continue
        done += 1
        for mode in ("l2", "l1"):
            c = solve_constrained(sys_, 1e6, mode)
            np.testing.assert_allclose(c.p, exact.p, rtol=1e-6)


def test_budget_binds_for_huge_targets(rng):
    sys_ = random_dominant(rng, 4)
    big = SnrSystem(sys_.a_matrix, sys_.target * 1e6, sys_.sbar)
    for mode in ("l2", "l1"):
        p = solve_constrained(big, 1e-3, mode).p
        assert p.sum() == pytest.approx(1e-3, rel=1e-9)


def _grid_best(mat, target, p_sum, n=200, norm="l2"):
    g = np.linspace(EPS_P * p_sum, p_sum, n)
    best, arg = np.inf, None
    for a in g:
        for b in g:
            if a + b > p_sum * (1 + 1e-12):
                continue
            r = mat @ np.array([a, b]) - target
            f = r @ r if norm == "l2" else np.abs(r).sum()
            if f < best:
                best, arg = f, np.array([a, b])
    return best, arg, g[1] - g[0]


@pytest.mark.parametrize("norm", ["l2", "l1"])
def test_k2_grid_search(norm):
    rng = np.random.default_rng(17)
    for _ in range(20):
        a = rng.uniform(0.1, 1.0, size=(2, 2))
        np.fill_diagonal(a, a.sum(axis=1) + rng.uniform(0.1, 1.0, size=2))
        sys_ = SnrSystem(a, rng.uniform(0.5, 4.0, size=2), np.ones(2))
        sol = solve_constrained(sys_, 1.0, norm)
        f = lambda p: float(np.sum((a @ p - sys_.target) ** 2)) if norm == "l2" else float(  # noqa: E731
            np.sum(np.abs(a @ p - sys_.target)))
        best, arg, h = _grid_best(a, sys_.target, 1.0, norm=norm)
        assert f(sol.p) <= best * (1 + 1e-9)
        assert np.all(sol.p >= EPS_P) and sol.p.sum() <= 1.0 + 1e-12
        if norm == "l2":
            assert np.max(np.abs(sol.p - arg)) <= 2 * h


@given(st.integers(0, 10_000), st.sampled_from(["l1", "l2"]))
@settings(max_examples=30, deadline=None)
def test_outputs_always_feasible(seed, norm):
    r = np.random.default_rng(seed)
    k = int(r.integers(1, 6))
    mat = r.uniform(0.0, 5.0, size=(k, k))
    sys_ = SnrSystem(mat, r.uniform(-1.0, 10.0, size=k), r.uniform(0.5, 2.0, size=k))
    p_sum = float(r.uniform(0.01, 3.0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        p = solve_constrained(sys_, p_sum, norm).p
    assert np.all(p >= EPS_P * p_sum * (1 - 1e-12))
    assert p.sum() <= p_sum * (1 + 1e-12)


def _feasible_instance(rng):
    while True:
        sc = random_scenario(rng, delta=0.0)
        s = random_samples(rng, sc, 40)
        d = place_raus(sc, s, "IOCC", ClusterParams(init_seed=1))
        sys_ = build_system(d.c, d.snr_targets, sc)
        sol = solve_exact(sys_, sc.sum_power)
        if sol.feasible_exact:
            return sc, s, d, sol


def test_exact_powers_reproduce_site_targets(rng):
    sc, s, d, sol = _feasible_instance(rng)
    site = avg_snr(d.c, Placement(d.c, sol.p), sc.with_raus(d.k))
    np.testing.assert_allclose(site, d.snr_targets - sc.delta / d.weights.nu, rtol=1e-9)


def test_global_power_beats_random_and_cluster_powers(rng):
    sc, s, d, sol = _feasible_instance(rng)
    nu = d.weights.nu
    glob = optimize_global_power(d.c, s, sc, nu)
    f = surrogate_objective(glob.p, d.c, s, sc, nu)
    assert f <= surrogate_objective(sol.p, d.c, s, sc, nu) * (1 + 1e-9)
    r = np.random.default_rng(0)
    for _ in range(1000):
        p = r.dirichlet(np.ones(d.k)) * r.uniform(0, 1)
        assert f <= surrogate_objective(p, d.c, s, sc, nu) * (1 + 1e-9)
    g1 = optimize_global_power(d.c, s, sc, nu, "l1")
    assert surrogate_objective(g1.p, d.c, s, sc, nu, "l1") <= surrogate_objective(
        glob.p, d.c, s, sc, nu, "l1") * (1 + 1e-9)


def test_global_power_with_samples_at_sites_equals_cluster_fit(rng):
    sc = random_scenario(rng, q=2, k=3, delta=0.0)
    c = np.array([[100.0, 100.0], [150.0, 180.0], [60.0, 190.0]])
    s = DemandSamples.from_capacities(c, [6.0, 5.0, 7.0])
    sys_ = build_system(c, s.theta_d, sc)
    a = solve_constrained(sys_, 1.0)
    b = optimize_global_power(c, s, sc, nu=1.0)
    np.testing.assert_allclose(a.p, b.p, rtol=1e-6)


def test_symmetric_layout_gives_symmetric_global_powers():
    sc = Scenario(area=(100.0,), alpha=3.0, d_min=1.0, noise_power=1e-6, shadow_sigma_db=0.0,
                  antennas_per_rau=1, num_raus=2, sum_power=1.0, delta=0.0,
                  demand=LinearRamp((0.0,), (100.0,), 2.0, 2.0))
    x = (np.arange(50) + 0.5) * 2.0
    s = DemandSamples.from_locations(x[:, None], sc.demand)
    p = optimize_global_power(np.array([[25.0], [75.0]]), s, sc, nu=1.0).p
    assert p[0] == pytest.approx(p[1], rel=1e-6)


def test_allocate_falls_back_when_infeasible(rng):
    sys_ = random_dominant(rng, 3)
    sol = allocate_cluster_power(sys_, 1e-6)
    assert not sol.feasible_exact
    assert sol.p.sum() <= 1e-6 * (1 + 1e-12)
    assert allocate_cluster_power(sys_, 1e6).feasible_exact


def test_bad_budget(rng):
    with pytest.raises(ValueError):
        solve_constrained(random_dominant(rng, 2), 0.0)
