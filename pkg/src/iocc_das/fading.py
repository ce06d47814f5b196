"""Composite fading draws and Monte Carlo ergodic capacity estimates.

Every location owns its own RNG substream derived from ``(seed, stream)``,
so batch estimates do not depend on evaluation order and two placements
evaluated with the same ``McConfig`` see the same fading realisations
(common random numbers).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import Placement, Scenario, _as_points


@dataclass(frozen=True)
class McConfig:
    seed: int = 0
    num_draws: int = 20_000

    def __post_init__(self):
        if self.num_draws < 1:
            raise ValueError("num_draws must be >= 1")

    def rng(self, stream: int = 0) -> np.random.Generator:
        return np.random.default_rng([int(self.seed) & 0xFFFFFFFFFFFFFFFF, int(stream)])


@dataclass(frozen=True, eq=False)
class FadingDraw:
    """Shadowing ``s`` and small-scale sums ``g``; shape (K,) or (n, K)."""

    s: np.ndarray
    g: np.ndarray


def sample_fading(scenario: Scenario, rng: np.random.Generator,
                  size: int | None = None) -> FadingDraw:
    """One composite draw per RAU (``size=None``) or ``size`` independent draws.

    ``g_k`` is a sum of ``M`` unit exponentials, ``s_k = 10**(z/10)`` with
    ``z ~ N(0, sigma_s**2)``. The normals are drawn before the exponentials.
    """
    k = scenario.num_raus
    m = scenario.antennas_per_rau
    shape = (k,) if size is None else (int(size), k)
    z = rng.standard_normal(shape)
    e = rng.standard_exponential(shape + (m,))
    if scenario.shadow_sigma_db == 0.0:
        s = np.ones(shape)
    else:
        s = 10.0 ** (scenario.shadow_sigma_db * z / 10.0)
    return FadingDraw(s=s, g=e.sum(axis=-1))


def instantaneous_snr(x, placement: Placement, draw: FadingDraw, scenario: Scenario):
    """SNR for given fading realisations; batch draws give one SNR per draw."""
    pts = _as_points(x, scenario.dim)[:1]
    gain = _kernels.clamped_gain(pts, placement.c, scenario.alpha, scenario.d_min)[0]
    weights = placement.p * gain / scenario.noise_power
    return (draw.s * draw.g) @ weights


def _location_gain(pts: np.ndarray, placement: Placement, scenario: Scenario) -> np.ndarray:
    gain = _kernels.clamped_gain(pts, placement.c, scenario.alpha, scenario.d_min)
    return gain * (placement.p / scenario.noise_power)


def ergodic_capacity(x, placement: Placement, scenario: Scenario, mc: McConfig,
                     stream: int = 0) -> tuple[float, float]:
    """Monte Carlo ``E[log2(1 + SNR)]`` at one location.

    Returns ``(estimate, std_error)``.
    """
    if mc.num_draws < 2:
        raise ValueError("num_draws must be >= 2 for a standard error")
    pts = _as_points(x, scenario.dim)[:1]
    sc = scenario.with_raus(placement.k)
    gain = _location_gain(pts, placement, sc)[0]
    draw = sample_fading(sc, mc.rng(stream), mc.num_draws)
    mean, var = _kernels.capacity_stats(gain, draw.s, draw.g)
    return mean, float(np.sqrt(var / mc.num_draws))


def ergodic_capacity_batch(points, placement: Placement, scenario: Scenario, mc: McConfig,
                           streams=None) -> tuple[np.ndarray, np.ndarray]:
    """:func:`ergodic_capacity` for every row of ``points``.

    ``streams`` defaults to the row index; pass explicit stream ids to keep
    the same realisations for a location when the batch is re-ordered.
    """
    if mc.num_draws < 2:
        raise ValueError("num_draws must be >= 2 for a standard error")
    pts = _as_points(points, scenario.dim)
    n = pts.shape[0]
    streams = np.arange(n) if streams is None else np.asarray(streams)
    sc = scenario.with_raus(placement.k)
    gain = _location_gain(pts, placement, sc)
    est = np.empty(n)
    se = np.empty(n)
    for i in range(n):
        draw = sample_fading(sc, mc.rng(int(streams[i])), mc.num_draws)
        mean, var = _kernels.capacity_stats(gain[i], draw.s, draw.g)
        est[i] = mean
        se[i] = np.sqrt(var / mc.num_draws)
    return est, se
