"""Problem instance and fading-averaged SNR / capacity conversions."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

from . import _kernels


# ---------------------------------------------------------------------------
# demand fields


def _as_points(x, dim: int) -> np.ndarray:
    pts = np.asarray(x, dtype=np.float64)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts.reshape(-1, 1) if dim == 1 else pts.reshape(1, -1)
    if pts.shape[1] != dim:
        raise ValueError(f"expected {dim}-D locations, got shape {np.shape(x)}")
    return pts


@dataclass(frozen=True)
class LinearRamp:
    """Demand affine along the segment ``start -> end``.

    Locations are projected onto the segment direction; the projection is
    clamped to the segment so the value stays between the two anchors.
    """

    start: tuple[float, ...]
    end: tuple[float, ...]
    value_start: float
    value_end: float
    kind: str = field(default="linear", init=False)

    def __post_init__(self):
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        object.__setattr__(self, "end", tuple(float(v) for v in self.end))
        if len(self.start) != len(self.end):
            raise ValueError("start and end anchors differ in dimension")
        if np.allclose(self.start, self.end):
            raise ValueError("linear ramp anchors coincide")
        if min(self.value_start, self.value_end) < 0:
            raise ValueError("demanded capacity must be >= 0")

    @property
    def dim(self) -> int:
        return len(self.start)

    @property
    def max_value(self) -> float:
        return max(self.value_start, self.value_end)

    @property
    def min_value(self) -> float:
        return min(self.value_start, self.value_end)

    def __call__(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        a = np.asarray(self.start)
        direction = np.asarray(self.end) - a
        t = (pts - a) @ direction / (direction @ direction)
        t = np.clip(t, 0.0, 1.0)
        return self.value_start + t * (self.value_end - self.value_start)

    def to_dict(self) -> dict:
        return dict(kind=self.kind, start=list(self.start), end=list(self.end),
                    value_start=self.value_start, value_end=self.value_end)


@dataclass(frozen=True)
class RadialRamp:
    """Demand affine in the distance to ``center``, constant beyond ``radius``."""

    center: tuple[float, ...]
    radius: float
    value_center: float
    value_border: float
    kind: str = field(default="radial", init=False)

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        if self.radius <= 0:
            raise ValueError("radius must be > 0")
        if min(self.value_center, self.value_border) < 0:
            raise ValueError("demanded capacity must be >= 0")

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def max_value(self) -> float:
        return max(self.value_center, self.value_border)

    @property
    def min_value(self) -> float:
        return min(self.value_center, self.value_border)

    def __call__(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        r = np.linalg.norm(pts - np.asarray(self.center), axis=1)
        t = np.minimum(r / self.radius, 1.0)
        return self.value_center + t * (self.value_border - self.value_center)

    def to_dict(self) -> dict:
        return dict(kind=self.kind, center=list(self.center), radius=self.radius,
                    value_center=self.value_center, value_border=self.value_border)


@dataclass(frozen=True, eq=False)
class TabulatedDemand:
    """Demand given at sample points, nearest-neighbour lookup elsewhere."""

    points: np.ndarray
    values: np.ndarray
    kind: str = field(default="tabulated", init=False)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        if pts.shape[0] == 1 and np.ndim(self.points) == 1:
            pts = pts.T
        vals = np.asarray(self.values, dtype=np.float64).ravel()
        if pts.shape[0] != vals.shape[0] or vals.size == 0:
            raise ValueError("points and values must be non-empty and equally long")
        if np.any(vals < 0):
            raise ValueError("demanded capacity must be >= 0")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def max_value(self) -> float:
        return float(self.values.max())

    @property
    def min_value(self) -> float:
        return float(self.values.min())

    def __call__(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        labels, _ = _kernels.nearest_center(pts, self.points)
        return self.values[labels]

    def to_dict(self) -> dict:
        return dict(kind=self.kind, points=self.points.tolist(), values=self.values.tolist())


DemandField = Union[LinearRamp, RadialRamp, TabulatedDemand]


def demand_from_dict(d: dict) -> DemandField:
    d = dict(d)
    kind = d.pop("kind")
    if kind == "linear":
        return LinearRamp(**d)
    if kind == "radial":
        return RadialRamp(**d)
    if kind == "tabulated":
        return TabulatedDemand(**d)
    raise ValueError(f"unknown demand kind {kind!r}")


# ---------------------------------------------------------------------------
# scenario


@dataclass(frozen=True)
class Scenario:
    """Full problem instance. Lengths in metres, powers in watts."""

    area: tuple[float, ...]
    alpha: float
    d_min: float
    noise_power: float
    shadow_sigma_db: float
    antennas_per_rau: int
    num_raus: int
    sum_power: float
    delta: float
    demand: DemandField

    def __post_init__(self):
        object.__setattr__(self, "area", tuple(float(v) for v in self.area))
        if len(self.area) not in (1, 2) or min(self.area) <= 0:
            raise ValueError("area must be a positive 1-D length or 2-D rectangle")
        if not 2.0 <= self.alpha <= 6.0:
            raise ValueError("alpha must lie in [2, 6]")
        if self.d_min <= 0:
            raise ValueError("d_min must be > 0")
        if self.noise_power <= 0 or self.sum_power <= 0:
            raise ValueError("noise and sum power must be > 0")
        if self.shadow_sigma_db < 0:
            raise ValueError("shadow_sigma_db must be >= 0")
        if self.antennas_per_rau < 1 or self.num_raus < 1:
            raise ValueError("antennas_per_rau and num_raus must be >= 1")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.demand.dim != len(self.area):
            raise ValueError("demand field dimension does not match the area")

    @property
    def dim(self) -> int:
        return len(self.area)

    @property
    def size(self) -> float:
        """Length (1-D) or surface (2-D) of the area."""
        return float(np.prod(self.area))

    @property
    def shadow_mean(self) -> float:
        return mean_shadow(self.shadow_sigma_db)

    @property
    def small_scale_mean(self) -> float:
        return mean_small_scale(self.antennas_per_rau)

    def with_raus(self, k: int) -> "Scenario":
        return replace(self, num_raus=int(k))

    def contains(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        return np.all((pts >= 0.0) & (pts <= np.asarray(self.area)), axis=1)

    def equal_split(self, k: int | None = None) -> np.ndarray:
        k = self.num_raus if k is None else k
        return np.full(k, self.sum_power / k)


def reference_noise_power(sum_power: float, alpha: float, d_min: float,
                          shadow_sigma_db: float, antennas_per_rau: int,
                          max_gamma: float, reach_factor: float = 10.0) -> float:
    """Noise power at which one RAU sending ``sum_power`` reaches the largest
    demanded average SNR at distance ``reach_factor * d_min``."""
    theta_max = capacity_to_snr(max_gamma)
    if theta_max <= 0:
        raise ValueError("maximum demanded capacity must be > 0")
    gain = mean_shadow(shadow_sigma_db) * mean_small_scale(antennas_per_rau)
    return float(sum_power * gain * path_loss(reach_factor * d_min, alpha, d_min) / theta_max)


# ---------------------------------------------------------------------------
# samples and placements


@dataclass(frozen=True, eq=False)
class DemandSamples:
    """User locations with demanded capacity and demanded average SNR."""

    x: np.ndarray
    gamma_d: np.ndarray
    theta_d: np.ndarray

    def __post_init__(self):
        if not (self.x.shape[0] == self.gamma_d.shape[0] == self.theta_d.shape[0]):
            raise ValueError("sample arrays differ in length")

    @classmethod
    def from_locations(cls, x, demand: DemandField) -> "DemandSamples":
        pts = _as_points(x, demand.dim)
        gamma = np.asarray(demand(pts), dtype=np.float64)
        return cls(pts, gamma, capacity_to_snr(gamma))

    @classmethod
    def from_capacities(cls, x, gamma_d) -> "DemandSamples":
        gamma = np.asarray(gamma_d, dtype=np.float64).ravel()
        pts = np.asarray(x, dtype=np.float64).reshape(gamma.shape[0], -1)
        return cls(pts, gamma, capacity_to_snr(gamma))

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def subset(self, idx) -> "DemandSamples":
        return DemandSamples(self.x[idx], self.gamma_d[idx], self.theta_d[idx])


@dataclass(frozen=True, eq=False)
class Placement:
    """RAU locations ``c`` (K x q) and transmit powers ``p`` (K,)."""

    c: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.float64)
        if c.ndim == 1:
            c = c.reshape(-1, 1)
        p = np.asarray(self.p, dtype=np.float64).ravel()
        if c.shape[0] != p.shape[0]:
            raise ValueError("number of locations and powers differ")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "p", p)

    @property
    def k(self) -> int:
        return self.c.shape[0]

    def check(self, scenario: Scenario, rtol: float = 1e-9) -> None:
        """Raise ``ValueError`` unless powers and locations are admissible."""
        if np.any(self.p <= 0):
            raise ValueError("all transmit powers must be > 0")
        if self.p.sum() > scenario.sum_power * (1.0 + rtol):
            raise ValueError("sum power budget exceeded")
        if self.c.shape[1] != scenario.dim or not np.all(scenario.contains(self.c)):
            raise ValueError("RAU locations must lie inside the area")


# ---------------------------------------------------------------------------
# scalar conversions


def path_loss(d, alpha: float, d_min: float):
    """Clamped path loss ``min(d_min^-alpha, d^-alpha)``."""
    d = np.asarray(d, dtype=np.float64)
    if np.any(d < 0):
        raise ValueError("distance must be >= 0")
    out = np.maximum(d, d_min) ** (-alpha)
    return float(out) if out.ndim == 0 else out


def capacity_to_snr(gamma):
    """Demanded capacity (bits/s/Hz) to linear SNR, ``2**gamma - 1``."""
    g = np.asarray(gamma, dtype=np.float64)
    if np.any(g < 0):
        raise ValueError("capacity must be >= 0")
    out = np.expm1(g * np.log(2.0))
    return float(out) if out.ndim == 0 else out


def snr_to_capacity(theta):
    """``log2(1 + theta)``."""
    t = np.asarray(theta, dtype=np.float64)
    if np.any(t < 0):
        raise ValueError("SNR must be >= 0")
    out = np.log1p(t) / np.log(2.0)
    return float(out) if out.ndim == 0 else out


def mean_shadow(shadow_sigma_db: float) -> float:
    """Mean of ``10**(z/10)`` with ``z ~ N(0, sigma_db**2)``."""
    if shadow_sigma_db < 0:
        raise ValueError("shadow_sigma_db must be >= 0")
    b = shadow_sigma_db * np.log(10.0) / 10.0
    return float(np.exp(0.5 * b * b))


def mean_small_scale(antennas: int) -> float:
    """Mean of a sum of ``antennas`` unit-mean exponentials."""
    if antennas < 1:
        raise ValueError("antennas must be >= 1")
    return float(antennas)


def avg_snr(x, placement: Placement, scenario: Scenario,
            small_scale_mean: float | Sequence[float] | None = None,
            shadow_mean: float | Sequence[float] | None = None):
    """Fading-averaged SNR at one location or an (n, q) batch of locations."""
    gbar = scenario.small_scale_mean if small_scale_mean is None else small_scale_mean
    sbar = scenario.shadow_mean if shadow_mean is None else shadow_mean
    weights = placement.p * np.broadcast_to(np.asarray(sbar, dtype=np.float64), placement.p.shape) \
        * np.broadcast_to(np.asarray(gbar, dtype=np.float64), placement.p.shape)
    x_arr = np.asarray(x, dtype=np.float64)
    single = x_arr.ndim == 0 or (x_arr.ndim == 1 and (scenario.dim > 1 or x_arr.size == 1))
    pts = _as_points(x_arr, scenario.dim)
    gain = _kernels.clamped_gain(pts, placement.c, scenario.alpha, scenario.d_min)
    out = gain @ weights / scenario.noise_power
    return float(out[0]) if single else out
