"""RAU placement by weighted clustering in the joint location-SNR space.

The IOCC criterion clusters augmented vectors ``[x, theta_d(x) + delta/nu]``
whose two blocks are weighted by Lipschitz-derived constants. The squared
distance criterion (SDC) is the special case that clusters locations only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import _kernels
from .geometry import DemandSamples, Scenario, capacity_to_snr

Mode = Literal["squared", "absolute"]
Criterion = Literal["IOCC", "SDC"]

LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class IoccWeights:
    """Weights of the location and SNR blocks of the clustering distortion.

    ``omega1`` and ``omega2`` multiply the squared (or absolute) location and
    SNR errors of the distortion. The augmented coordinates are therefore
    scaled by ``sqrt(omega)`` in squared mode and by ``omega`` in absolute mode.
    """

    nu: float
    nu_glob: float
    gamma_fading: float
    omega1: float
    omega2: float
    q: int
    mode: Mode = "squared"

    @property
    def loc_scale(self) -> float:
        return float(np.sqrt(self.omega1)) if self.mode == "squared" else self.omega1

    @property
    def snr_scale(self) -> float:
        return float(np.sqrt(self.omega2)) if self.mode == "squared" else self.omega2


def compute_nu(samples: DemandSamples, theta_floor: float | None = None) -> float:
    """Lipschitz constant of ``log2(1 + .)`` above the smallest demanded SNR.

    ``theta_floor`` is the smallest SNR the demand model can ask for; when
    given it caps the sample minimum (a grid need not hit the extremes).
    """
    if len(samples) == 0:
        raise ValueError("need at least one demand sample")
    theta_min = float(np.min(samples.theta_d))
    if theta_floor is not None:
        theta_min = min(theta_min, float(theta_floor))
    theta_min = max(theta_min, 0.0)
    return min(1.0 / ((1.0 + theta_min) * LN2), 1.0 / LN2)


def compute_nu_glob(scenario: Scenario, p) -> float:
    """Global Lipschitz constant (SNR per metre) of the average-SNR field."""
    p = np.asarray(p, dtype=np.float64)
    if np.any(p <= 0):
        raise ValueError("powers must be > 0")
    gamma = scenario.small_scale_mean
    total = float(np.sum(p * scenario.shadow_mean))
    return scenario.alpha * gamma * total / (
        scenario.noise_power * scenario.d_min ** (scenario.alpha + 1.0))


def iocc_weights(nu: float, nu_glob: float, q: int, mode: Mode = "squared",
                 gamma_fading: float = 1.0) -> IoccWeights:
    if mode == "squared":
        w1 = (q + 1) * nu**2 * nu_glob**2
        w2 = (q + 1) * nu**2
    elif mode == "absolute":
        w1 = nu * nu_glob
        w2 = nu
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return IoccWeights(nu=nu, nu_glob=nu_glob, gamma_fading=gamma_fading,
                       omega1=w1, omega2=w2, q=int(q), mode=mode)


def weights_for(scenario: Scenario, samples: DemandSamples, mode: Mode = "squared",
                p=None) -> IoccWeights:
    """IOCC weights for an instance; powers default to the equal split."""
    p = scenario.equal_split() if p is None else p
    floor = capacity_to_snr(scenario.demand.min_value)
    return iocc_weights(compute_nu(samples, floor), compute_nu_glob(scenario, p), scenario.dim,
                        mode, gamma_fading=scenario.small_scale_mean)


@dataclass(frozen=True, eq=False)
class AugmentedSamples:
    """Weighted joint vectors, one row per demand sample (order preserved)."""

    loc_part: np.ndarray
    snr_part: np.ndarray
    source_index: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return np.column_stack([self.loc_part, self.snr_part])

    def __len__(self) -> int:
        return self.loc_part.shape[0]

    def unweight(self, weights: IoccWeights) -> tuple[np.ndarray, np.ndarray]:
        """Recover locations and SNR coordinates (needs non-zero weights)."""
        return self.loc_part / weights.loc_scale, self.snr_part / weights.snr_scale


def snr_coordinate(samples: DemandSamples, nu: float, delta: float) -> np.ndarray:
    return samples.theta_d + delta / nu


def build_augmented(samples: DemandSamples, weights: IoccWeights, delta: float) -> AugmentedSamples:
    loc = weights.loc_scale * samples.x
    snr = weights.snr_scale * snr_coordinate(samples, weights.nu, delta)
    return AugmentedSamples(loc, snr, np.arange(len(samples)))


def clustering_data(samples: DemandSamples, weights: IoccWeights, delta: float) -> np.ndarray:
    """Augmented vectors divided by the location weight.

    Dividing the distortion by a positive constant leaves its minimisers
    unchanged, so clustering ``[x, (w2/w1) * theta]`` is equivalent to
    clustering the weighted vectors. Locations stay exactly as sampled, which
    makes ``omega2 = 0`` reproduce the location-only clustering bit for bit.
    """
    ratio = weights.snr_scale / weights.loc_scale
    snr = ratio * snr_coordinate(samples, weights.nu, delta)
    return np.column_stack([samples.x, snr])


# ---------------------------------------------------------------------------
# Lloyd / k-means (squared) and k-medians (absolute)


@dataclass(frozen=True, eq=False)
class Codebook:
    centers: np.ndarray
    labels: np.ndarray
    distortion: float
    history: tuple[float, ...] = ()
    restart: int = 0

    @property
    def k(self) -> int:
        return self.centers.shape[0]


def _prototype(block: np.ndarray, mode: Mode) -> np.ndarray:
    return block.mean(axis=0) if mode == "squared" else np.median(block, axis=0)


def cluster_prototypes(data: np.ndarray, labels: np.ndarray, k: int, mode: Mode) -> np.ndarray:
    out = np.empty((k, data.shape[1]))
    for j in range(k):
        out[j] = _prototype(data[labels == j], mode)
    return out


def distortion(data: np.ndarray, centers: np.ndarray, labels: np.ndarray, mode: Mode) -> float:
    """Mean squared (or L1) distance of each row to its assigned centre."""
    diff = data - centers[labels]
    if mode == "squared":
        return float(np.mean(np.sum(diff * diff, axis=1)))
    return float(np.mean(np.sum(np.abs(diff), axis=1)))


def _seed_centers(data: np.ndarray, k: int, mode: Mode, rng: np.random.Generator) -> np.ndarray:
    n = data.shape[0]
    idx = [int(rng.integers(n))]
    cost = _kernels.nearest_center(data, data[idx], mode == "absolute")[1]
    for _ in range(1, k):
        total = cost.sum()
        if total <= 0.0:
            idx.append(int(rng.integers(n)))
        else:
            cdf = np.cumsum(cost / total)
            pick = int(np.searchsorted(cdf, rng.random(), side="right"))
            idx.append(min(pick, n - 1))
        c_new = _kernels.nearest_center(data, data[idx[-1:]], mode == "absolute")[1]
        cost = np.minimum(cost, c_new)
    return data[idx].copy()


def _fill_empty(labels: np.ndarray, cost: np.ndarray, k: int) -> np.ndarray:
    counts = np.bincount(labels, minlength=k)
    if np.all(counts > 0):
        return labels
    labels = labels.copy()
    cost = cost.copy()
    for j in np.flatnonzero(counts == 0):
        # donor must keep at least one member
        order = np.argsort(-cost, kind="stable")
        for i in order:
            if counts[labels[i]] > 1:
                counts[labels[i]] -= 1
                labels[i] = j
                counts[j] = 1
                cost[i] = 0.0
                break
    return labels


def _lloyd_once(data, k, mode, rng, max_iters, tol):
    centers = _seed_centers(data, k, mode, rng)
    labels, cost = _kernels.nearest_center(data, centers, mode == "absolute")
    history = []
    for _ in range(max_iters):
        labels = _fill_empty(labels, cost, k)
        centers = cluster_prototypes(data, labels, k, mode)
        new_labels, cost = _kernels.nearest_center(data, centers, mode == "absolute")
        history.append(float(np.mean(cost)))
        stable = np.array_equal(new_labels, labels)
        labels = new_labels
        if stable or (len(history) > 1 and history[-2] - history[-1] <= tol):
            break
    return centers, labels, history


def lloyd_cluster(samples, k: int, mode: Mode = "squared", init_seed: int = 0,
                  max_iters: int = 300, tol: float = 0.0, num_restarts: int = 10) -> Codebook:
    """Restarted Lloyd clustering with k-means++ style seeding.

    ``samples`` is an :class:`AugmentedSamples` or an (L, D) array. Squared
    mode updates centres by the mean, absolute mode by the component-wise
    median. The restart with the lowest distortion wins; ties go to the
    lowest restart index.
    """
    data = samples.matrix if isinstance(samples, AugmentedSamples) else np.asarray(samples, float)
    if data.ndim == 1:
        data = data.reshape(-1, 1)
    if data.shape[0] == 0:
        raise ValueError("no samples to cluster")
    if mode not in ("squared", "absolute"):
        raise ValueError(f"unknown mode {mode!r}")
    if max_iters < 1 or num_restarts < 1 or k < 1:
        raise ValueError("k, max_iters and num_restarts must be >= 1")
    if k > np.unique(data, axis=0).shape[0]:
        raise ValueError("k exceeds the number of distinct samples")

    best = None
    seeds = np.random.SeedSequence(int(init_seed)).spawn(num_restarts)
    for r, ss in enumerate(seeds):
        centers, labels, history = _lloyd_once(data, k, mode, np.random.default_rng(ss),
                                               max_iters, tol)
        d = distortion(data, centers, labels, mode)
        if best is None or d < best.distortion:
            best = Codebook(centers, labels, d, tuple(history), r)
    return best


# ---------------------------------------------------------------------------
# placement


@dataclass(frozen=True, eq=False)
class PlacementDesign:
    """RAU sites and the codebook they came from.

    ``c`` are the un-weighted location prototypes, ``snr_targets`` the
    un-weighted SNR prototypes ``mu_theta`` (these include ``delta/nu``).
    """

    criterion: Criterion
    c: np.ndarray
    snr_targets: np.ndarray
    labels: np.ndarray
    codebook: Codebook
    weights: IoccWeights

    @property
    def k(self) -> int:
        return self.c.shape[0]


@dataclass(frozen=True)
class ClusterParams:
    mode: Mode = "squared"
    init_seed: int = 0
    max_iters: int = 300
    tol: float = 0.0
    num_restarts: int = 10


def place_raus(scenario: Scenario, samples: DemandSamples, criterion: Criterion = "IOCC",
               params: ClusterParams = ClusterParams(), weights: IoccWeights | None = None,
               k: int | None = None) -> PlacementDesign:
    """Cluster the demand samples and project the codebook to RAU sites.

    IOCC weights default to :func:`weights_for` with the equal power split.
    SDC clusters the raw locations; the returned design still carries the
    IOCC weights and the per-cluster SNR prototypes so both criteria can be
    scored on the same bound.
    """
    k = scenario.num_raus if k is None else int(k)
    if weights is None:
        weights = weights_for(scenario.with_raus(k), samples, params.mode)
    snr = snr_coordinate(samples, weights.nu, scenario.delta)
    if criterion == "SDC":
        data = samples.x
    elif criterion == "IOCC":
        data = clustering_data(samples, weights, scenario.delta)
    else:
        raise ValueError(f"unknown criterion {criterion!r}")
    book = lloyd_cluster(data, k, params.mode, params.init_seed, params.max_iters,
                         params.tol, params.num_restarts)
    joint = np.column_stack([samples.x, snr])
    protos = cluster_prototypes(joint, book.labels, k, params.mode)
    return PlacementDesign(criterion, protos[:, :-1].copy(), protos[:, -1].copy(),
                           book.labels, book, weights)
