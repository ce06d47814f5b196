import numpy as np
import pytest

from iocc_das.geometry import (DemandSamples, LinearRamp, RadialRamp, Scenario,
                               reference_noise_power)


def random_scenario(rng, q=None, k=None, delta=None, shadow_db=6.0, antennas=1):
    q = int(rng.integers(1, 3)) if q is None else q
    k = int(rng.integers(2, 7)) if k is None else k
    area = tuple(float(a) for a in rng.uniform(200.0, 1000.0, size=q))
    alpha = float(rng.uniform(2.5, 5.0))
    if rng.random() < 0.5:
        demand = LinearRamp(start=(0.0,) * q, end=area, value_start=float(rng.uniform(3, 6)),
                            value_end=float(rng.uniform(1, 3)))
    else:
        centre = tuple(a / 2 for a in area)
        demand = RadialRamp(center=centre, radius=min(area) / 2,
                            value_center=float(rng.uniform(4, 9)),
                            value_border=float(rng.uniform(1, 3)))
    noise = reference_noise_power(1.0, alpha, 5.0, shadow_db, antennas, demand.max_value)
    delta = float(rng.uniform(0.0, 0.5)) if delta is None else delta
    return Scenario(area=area, alpha=alpha, d_min=5.0, noise_power=noise,
                    shadow_sigma_db=shadow_db, antennas_per_rau=antennas, num_raus=k,
                    sum_power=1.0, delta=delta, demand=demand)


def random_samples(rng, scenario, n):
    pts = rng.uniform(size=(n, scenario.dim)) * np.asarray(scenario.area)
    return DemandSamples.from_locations(pts, scenario.demand)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for key in sorted(lines):
            terminalreporter.write_line(lines[key])
