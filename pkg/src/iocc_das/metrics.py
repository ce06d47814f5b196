"""Capacity errors, quantization errors, upper bounds and effective capacity.

All statistical quantities are sample averages over the demand samples.
Two families of error objectives exist:

* ``j_e1`` / ``j2``: capacity-level errors using Monte Carlo estimates of the
  supplied ergodic capacity (carry MC noise);
* ``j1_snr`` / ``j2_snr``: their SNR-level surrogates ``nu * |theta_d +
  delta/nu - theta_a|`` (noiseless, what the bounds dominate exactly).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .fading import McConfig, ergodic_capacity_batch
from .geometry import DemandSamples, Placement, Scenario, avg_snr
from .placement import (AugmentedSamples, Codebook, IoccWeights, PlacementDesign,
                        build_augmented, iocc_weights)

FLOAT_FMT = ".12g"


@dataclass(frozen=True)
class UbTerms:
    ub_e1_loc: float
    ub_e1_snr: float
    ub_2_loc: float
    ub_2_snr: float
    ub_opt: float
    v_kx: np.ndarray = field(repr=False)

    @property
    def ub_e1(self) -> float:
        return self.ub_e1_loc + self.ub_e1_snr

    @property
    def ub_2(self) -> float:
        return self.ub_2_loc + self.ub_2_snr


@dataclass
class EvalReport:
    j_e1: float
    j2: float
    j2_se: float
    j1_snr: float
    j2_snr: float
    q1: float
    q2: float
    ub_e1: float
    ub_2: float
    ub_opt: float
    cell_avg_capacity: float
    cell_avg_effective: float
    cell_avg_wasted: float
    feasible_exact: bool
    per_location: dict = field(repr=False, default_factory=dict)


# ---------------------------------------------------------------------------


def capacity_error_stats(gamma_d, gamma_a, delta: float, gamma_a_se=None):
    """``(j_e1, j2, j2_se)`` from per-location capacities.

    ``j2_se`` propagates the per-location MC standard errors to ``j2``
    (delta method, independent locations); zero when none are given.
    """
    e = np.asarray(gamma_d, float) + delta - np.asarray(gamma_a, float)
    n = e.shape[0]
    if n == 0:
        nan = float("nan")
        return nan, nan, nan
    j_e1 = float(np.mean(np.abs(e)))
    j2 = float(np.mean(e * e))
    if gamma_a_se is None:
        return j_e1, j2, 0.0
    se = np.asarray(gamma_a_se, float)
    return j_e1, j2, float(np.sqrt(np.sum((2.0 * e * se) ** 2)) / n)


def capacity_errors(samples: DemandSamples, placement: Placement, scenario: Scenario,
                    mc: McConfig, streams=None) -> dict:
    """Monte Carlo capacity errors ``j_e1`` and ``j2`` at ``placement``."""
    gamma_a, se = ergodic_capacity_batch(samples.x, placement, scenario, mc, streams)
    j_e1, j2, j2_se = capacity_error_stats(samples.gamma_d, gamma_a, scenario.delta, se)
    return dict(j_e1=j_e1, j2=j2, j2_se=j2_se)


def surrogate_errors(samples: DemandSamples, placement: Placement, scenario: Scenario,
                     nu: float) -> tuple[float, float]:
    """SNR-level surrogates ``(j1_snr, j2_snr)``."""
    r = samples.theta_d + scenario.delta / nu - avg_snr(samples.x, placement, scenario)
    return float(nu * np.mean(np.abs(r))), float(nu * nu * np.mean(r * r))


def quantization_error(samples, codebook: Codebook | np.ndarray, mode: str = "squared",
                       labels=None) -> float:
    """Mean squared (or L1) distance from each augmented sample to its codeword."""
    data = samples.matrix if isinstance(samples, AugmentedSamples) else np.asarray(samples, float)
    if isinstance(codebook, Codebook):
        centers, labels = codebook.centers, codebook.labels if labels is None else labels
    else:
        centers = np.asarray(codebook, float)
        if labels is None:
            labels = _kernels.nearest_center(data, centers, mode == "absolute")[0]
    diff = data - centers[np.asarray(labels)]
    if mode == "squared":
        return float(np.mean(np.sum(diff * diff, axis=1)))
    return float(np.mean(np.sum(np.abs(diff), axis=1)))


def design_quantization(samples: DemandSamples, design: PlacementDesign, scenario: Scenario,
                        weights: IoccWeights) -> float:
    """Distortion of ``design``'s codebook, scored with ``weights``."""
    aug = build_augmented(samples, weights, scenario.delta)
    centers = np.column_stack([weights.loc_scale * design.c,
                               weights.snr_scale * design.snr_targets])
    return quantization_error(aug, centers, weights.mode, labels=design.labels)


def tight_lipschitz(samples: DemandSamples, placement: Placement, labels, scenario: Scenario):
    """Per-sample Lipschitz factor between ``x_l`` and its site ``c_k(l)``.

    For each RAU ``n`` the clamped path loss has slope at most
    ``alpha / max(min(|x - c_n|, |c_k - c_n|), d_min)**(alpha + 1)`` between
    the two distances, which differ by at most ``|x - c_k|``.
    """
    c = placement.c
    d1 = np.sqrt(((samples.x[:, None, :] - c[None, :, :]) ** 2).sum(axis=2))
    ck = c[np.asarray(labels)]
    d2 = np.sqrt(((ck[:, None, :] - c[None, :, :]) ** 2).sum(axis=2))
    dmin = np.maximum(np.minimum(d1, d2), scenario.d_min)
    coef = scenario.small_scale_mean * scenario.shadow_mean * scenario.alpha / scenario.noise_power
    return coef * (dmin ** (-(scenario.alpha + 1.0)) @ placement.p)


def upper_bounds(samples: DemandSamples, placement: Placement, design: PlacementDesign,
                 scenario: Scenario, weights: IoccWeights | None = None) -> UbTerms:
    """Sample-average upper bounds at ``placement``'s powers.

    ``nu`` and ``nu_glob`` come from the clustering weights so that the
    squared bound equals the squared-mode quantization error whenever the
    site SNRs hit the codebook targets.
    """
    if design is None:
        raise ValueError("upper bounds need the codebook assignment")
    w = design.weights if weights is None else weights
    nu, nu_glob, q = w.nu, w.nu_glob, w.q
    labels = design.labels
    site_snr = avg_snr(placement.c, placement, scenario)
    site_snr = np.atleast_1d(site_snr)
    s = samples.theta_d + scenario.delta / nu - site_snr[labels]
    diff = samples.x - placement.c[labels]
    dist2 = np.sum(diff * diff, axis=1)
    dist = np.sqrt(dist2)
    v = tight_lipschitz(samples, placement, labels, scenario)
    return UbTerms(
        ub_e1_loc=float(nu * nu_glob * np.mean(np.abs(diff).sum(axis=1))),
        ub_e1_snr=float(nu * np.mean(np.abs(s))),
        ub_2_loc=float((q + 1) * nu**2 * nu_glob**2 * np.mean(dist2)),
        ub_2_snr=float((q + 1) * nu**2 * np.mean(s * s)),
        ub_opt=float(nu**2 * np.mean((v * dist + np.abs(s)) ** 2)),
        v_kx=v,
    )


def effective_capacity_report(samples: DemandSamples, placement: Placement, scenario: Scenario,
                              mc: McConfig, design: PlacementDesign | None = None,
                              bound_samples: DemandSamples | None = None,
                              bound_placement: Placement | None = None,
                              streams=None, feasible_exact: bool = False) -> EvalReport:
    """Evaluate ``placement`` on ``samples``.

    Capacity-level metrics use Monte Carlo on ``samples``. Bounds and
    quantization errors need ``design`` and are computed on
    ``bound_samples`` (default ``samples``) at ``bound_placement``'s powers
    (default ``placement``); they are NaN without a design.
    """
    scenario = scenario.with_raus(placement.k)
    gamma_a, se = ergodic_capacity_batch(samples.x, placement, scenario, mc, streams)
    j_e1, j2, j2_se = capacity_error_stats(samples.gamma_d, gamma_a, scenario.delta, se)
    eff = np.minimum(samples.gamma_d, gamma_a)
    wasted = np.maximum(gamma_a - samples.gamma_d, 0.0)
    theta_a = np.atleast_1d(avg_snr(samples.x, placement, scenario)) if len(samples) else np.empty(0)
    per_loc = dict(x=samples.x, gamma_d=samples.gamma_d, theta_d=samples.theta_d,
                   theta_a=theta_a, gamma_a=gamma_a, gamma_a_se=se,
                   gamma_eff=eff, gamma_wasted=wasted)
    nan = float("nan")
    j1_snr = j2_snr = q1 = q2 = ub_e1 = ub_2 = ub_opt = nan
    if design is not None:
        bs = samples if bound_samples is None else bound_samples
        bp = placement if bound_placement is None else bound_placement
        nu = design.weights.nu
        j1_snr, j2_snr = surrogate_errors(bs, placement, scenario, nu)
        ub = upper_bounds(bs, bp, design, scenario)
        ub_e1, ub_2, ub_opt = ub.ub_e1, ub.ub_2, ub.ub_opt
        w = design.weights
        w_sq = iocc_weights(w.nu, w.nu_glob, w.q, "squared", w.gamma_fading)
        w_abs = iocc_weights(w.nu, w.nu_glob, w.q, "absolute", w.gamma_fading)
        q2 = design_quantization(bs, design, scenario, w_sq)
        q1 = design_quantization(bs, design, scenario, w_abs)
    mean = (lambda a: float(np.mean(a)) if len(a) else nan)
    return EvalReport(j_e1=j_e1, j2=j2, j2_se=j2_se, j1_snr=j1_snr, j2_snr=j2_snr,
                      q1=q1, q2=q2, ub_e1=ub_e1, ub_2=ub_2, ub_opt=ub_opt,
                      cell_avg_capacity=mean(gamma_a), cell_avg_effective=mean(eff),
                      cell_avg_wasted=mean(wasted), feasible_exact=feasible_exact,
                      per_location=per_loc)


# ---------------------------------------------------------------------------
# CSV

PER_LOCATION_COLUMNS = ("gamma_d", "theta_d", "theta_a", "gamma_a", "gamma_a_se",
                        "gamma_eff", "gamma_wasted")


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), FLOAT_FMT)


def write_per_location_csv(report: EvalReport, path) -> None:
    """One row per location plus a trailing ``mean`` row of cell averages.

    Columns: ``row, x0[, x1], gamma_d, theta_d, theta_a, gamma_a,
    gamma_a_se, gamma_eff, gamma_wasted``.
    """
    pl = report.per_location
    x = np.atleast_2d(pl["x"])
    q = x.shape[1] if x.size else 1
    header = ["row"] + [f"x{i}" for i in range(q)] + list(PER_LOCATION_COLUMNS)
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        n = len(pl["gamma_d"])
        for i in range(n):
            w.writerow([i] + [fmt(v) for v in x[i]] + [fmt(pl[c][i]) for c in PER_LOCATION_COLUMNS])
        means = [fmt(np.mean(pl[c])) if n else "nan" for c in PER_LOCATION_COLUMNS]
        w.writerow(["mean"] + [""] * q + means)
