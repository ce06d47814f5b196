"""Experiment scenarios, user sampling and SDC-vs-IOCC sweeps over K."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Literal

import numpy as np

from .fading import McConfig
from .geometry import (DemandSamples, LinearRamp, Placement, RadialRamp, Scenario,
                       reference_noise_power)
from .metrics import EvalReport, effective_capacity_report, fmt, write_per_location_csv
from .placement import ClusterParams, PlacementDesign, place_raus, weights_for
from .power import allocate_cluster_power, build_system, optimize_global_power, solve_exact_quiet

log = logging.getLogger(__name__)

SamplingKind = Literal["uniform_grid", "uniform_random", "ppp"]
PowerMode = Literal["optimized", "equal_split"]

# entropy tags for the per-seed random streams
_TAG_SAMPLES, _TAG_CLUSTER, _TAG_SUBSET, _TAG_REDRAW, _TAG_MC = 1, 2, 3, 4, 5

SUMMARY_COLUMNS = ("criterion", "K", "seed", "j_e1", "j2", "q2", "ub_e1", "ub_2", "ub_opt",
                   "cell_avg_capacity", "cell_avg_effective", "cell_avg_wasted",
                   "feasible_exact", "j2_se", "j1_snr", "j2_snr", "q1", "n_eval",
                   "n_adjusted")


class SweepError(RuntimeError):
    """A sweep failed part-way; ``partial`` holds the completed cells."""

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class Sampling:
    """User-location model.

    ``uniform_grid``: ``n`` cell-centre points (1-D) or an ``n x n`` grid (2-D);
    ``uniform_random``: ``n`` i.i.d. uniform points; ``ppp``: Poisson point
    process with ``density`` points per square metre (per metre in 1-D).
    """

    kind: SamplingKind
    n: int = 0
    density: float = 0.0

    def __post_init__(self):
        if self.kind not in ("uniform_grid", "uniform_random", "ppp"):
            raise ValueError(f"unknown sampling kind {self.kind!r}")
        if self.kind == "ppp" and self.density <= 0:
            raise ValueError("ppp density must be > 0")
        if self.kind != "ppp" and self.n < 1:
            raise ValueError("sampling needs n >= 1")

    @property
    def is_random(self) -> bool:
        return self.kind != "uniform_grid"


def sample_ppp(area, density: float, seed=0, rng: np.random.Generator | None = None):
    """Homogeneous PPP on the axis-aligned ``area``.

    Returns ``(points, redraws)``; empty realisations are re-drawn and
    counted in ``redraws``.
    """
    if density <= 0:
        raise ValueError("density must be > 0")
    area = np.asarray(area, dtype=np.float64)
    rng = np.random.default_rng(seed) if rng is None else rng
    lam = density * float(np.prod(area))
    redraws = 0
    while True:
        n = int(rng.poisson(lam))
        if n > 0:
            return rng.uniform(0.0, 1.0, size=(n, area.size)) * area, redraws
        redraws += 1


def uniform_grid(area, n: int) -> np.ndarray:
    area = np.asarray(area, dtype=np.float64)
    axes = [(np.arange(n) + 0.5) * (a / n) for a in area]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def draw_locations(sampling: Sampling, area, rng: np.random.Generator) -> np.ndarray:
    if sampling.kind == "uniform_grid":
        return uniform_grid(area, sampling.n)
    if sampling.kind == "uniform_random":
        return rng.uniform(0.0, 1.0, size=(sampling.n, len(area))) * np.asarray(area)
    pts, redraws = sample_ppp(area, sampling.density, rng=rng)
    if redraws:
        log.info("PPP draw was empty %d time(s); re-drawn", redraws)
    return pts


# ---------------------------------------------------------------------------
# experiment spec


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    scenario: Scenario
    sampling: Sampling
    k_sweep: tuple[int, ...] = tuple(range(1, 11))
    criteria: tuple[str, ...] = ("SDC", "IOCC")
    power_mode: PowerMode = "optimized"
    seeds: tuple[int, ...] = tuple(range(20))
    mc: McConfig = McConfig(seed=2014, num_draws=20_000)
    cluster: ClusterParams = ClusterParams()
    eval_locations: int = 0
    out: str | None = None
    notes: str = ""

    def __post_init__(self):
        object.__setattr__(self, "k_sweep", tuple(int(k) for k in self.k_sweep))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "criteria", tuple(self.criteria))
        if not self.k_sweep or min(self.k_sweep) < 1:
            raise ValueError("k_sweep must be a non-empty list of counts >= 1")
        if not self.seeds:
            raise ValueError("need at least one seed")
        if not self.criteria or any(c not in ("SDC", "IOCC") for c in self.criteria):
            raise ValueError("criteria must be a non-empty subset of {SDC, IOCC}")
        if self.power_mode not in ("optimized", "equal_split"):
            raise ValueError(f"unknown power mode {self.power_mode!r}")
        if self.eval_locations < 0:
            raise ValueError("eval_locations must be >= 0")
        if self.mc.num_draws < 2:
            raise ValueError("mc.num_draws must be >= 2")


def _example_scenario(area, demand, alpha, d_min=5.0, shadow_db=6.0, antennas=1,
                      sum_power=1.0, delta=0.0) -> Scenario:
    noise = reference_noise_power(sum_power, alpha, d_min, shadow_db, antennas, demand.max_value)
    return Scenario(area=area, alpha=alpha, d_min=d_min, noise_power=noise,
                    shadow_sigma_db=shadow_db, antennas_per_rau=antennas, num_raus=1,
                    sum_power=sum_power, delta=delta, demand=demand)


_NOISE_NOTE = ("noise_power chosen so one RAU at full sum power reaches the largest "
               "demanded average SNR at 10 * d_min")


def make_example1(alpha: float = 4.0) -> ExperimentSpec:
    """Linear 2 km cell, demand 5.35 -> 3.45 bps/Hz, 100 evenly spaced users."""
    demand = LinearRamp(start=(0.0,), end=(2000.0,), value_start=5.35, value_end=3.45)
    return ExperimentSpec(name="example1", scenario=_example_scenario((2000.0,), demand, alpha),
                          sampling=Sampling("uniform_grid", n=100), power_mode="optimized",
                          notes=_NOISE_NOTE)


def make_example2(alpha: float = 4.0) -> ExperimentSpec:
    """500 m square, PPP users (0.003 / m^2), demand falling along the diagonal."""
    demand = LinearRamp(start=(0.0, 0.0), end=(500.0, 500.0), value_start=5.35, value_end=3.45)
    return ExperimentSpec(name="example2",
                          scenario=_example_scenario((500.0, 500.0), demand, alpha),
                          sampling=Sampling("ppp", density=0.003), power_mode="optimized",
                          notes=_NOISE_NOTE)


def make_example3(alpha: float = 3.0) -> ExperimentSpec:
    """500 m square, PPP users (0.02 / m^2), radial demand 9.65 -> 3.45, equal powers."""
    demand = RadialRamp(center=(250.0, 250.0), radius=250.0, value_center=9.65,
                        value_border=3.45)
    return ExperimentSpec(name=f"example3_alpha{alpha:g}",
                          scenario=_example_scenario((500.0, 500.0), demand, alpha, delta=0.0),
                          sampling=Sampling("ppp", density=0.02), power_mode="equal_split",
                          eval_locations=500, notes=_NOISE_NOTE)


# ---------------------------------------------------------------------------
# sweep


@dataclass
class CellResult:
    criterion: str
    k: int
    seed: int
    design: PlacementDesign = field(repr=False)
    placement: Placement = field(repr=False)
    cluster_power: np.ndarray = field(repr=False)
    report: EvalReport = field(repr=False)
    n_eval: int = 0
    n_adjusted: int = 0

    @property
    def key(self):
        return (self.criterion, self.k, self.seed)


@dataclass
class SweepResult:
    spec: ExperimentSpec
    cells: list[CellResult]

    def select(self, criterion=None, k=None, seed=None) -> list[CellResult]:
        return [c for c in self.cells
                if (criterion is None or c.criterion == criterion)
                and (k is None or c.k == k) and (seed is None or c.seed == seed)]

    def values(self, metric: str, criterion: str, k: int) -> np.ndarray:
        return np.array([getattr(c.report, metric) for c in self.select(criterion, k)])

    def curve(self, metric: str, criterion: str, how: str = "median") -> np.ndarray:
        agg = np.median if how == "median" else np.mean
        return np.array([agg(self.values(metric, criterion, k)) for k in self.spec.k_sweep])


def _rng(*key) -> np.random.Generator:
    return np.random.default_rng([int(v) for v in key])


def _derive_seed(*key) -> int:
    return int(np.random.SeedSequence([int(v) for v in key]).generate_state(1, np.uint64)[0])


def seed_samples(spec: ExperimentSpec, seed: int) -> DemandSamples:
    """Demand samples of one snapshot; shared by every criterion and K."""
    pts = draw_locations(spec.sampling, spec.scenario.area, _rng(seed, _TAG_SAMPLES))
    return DemandSamples.from_locations(pts, spec.scenario.demand)


def evaluation_set(spec: ExperimentSpec, samples: DemandSamples, c: np.ndarray, seed: int):
    """Evaluation samples kept at least ``d_min`` from every RAU.

    Returns ``(samples, streams, n_adjusted)``. Offending grid points are
    dropped; random points are re-drawn uniformly. ``streams`` are the
    original sample indices, used as Monte Carlo stream ids.
    """
    sc = spec.scenario
    idx = np.arange(len(samples))
    if 0 < spec.eval_locations < len(samples):
        idx = np.sort(_rng(seed, _TAG_SUBSET).choice(len(samples), spec.eval_locations,
                                                     replace=False))
    x = samples.x[idx].copy()

    def too_close(pts):
        d = np.sqrt(((pts[:, None, :] - c[None, :, :]) ** 2).sum(axis=2))
        return np.any(d < sc.d_min, axis=1)

    bad = too_close(x)
    n_adj = int(bad.sum())
    if n_adj and spec.sampling.is_random:
        area = np.asarray(sc.area)
        for i in np.flatnonzero(bad):
            rng = _rng(seed, _TAG_REDRAW, idx[i])
            while True:
                cand = rng.uniform(0.0, 1.0, size=(1, area.size)) * area
                if not too_close(cand)[0]:
                    x[i] = cand[0]
                    break
        keep = np.ones(len(idx), bool)
    else:
        keep = ~bad
    out = DemandSamples.from_locations(x[keep], sc.demand)
    return out, idx[keep], n_adj


def run_cell(spec: ExperimentSpec, criterion: str, k: int, seed: int,
             samples: DemandSamples | None = None) -> CellResult:
    """Sample -> place -> allocate power -> evaluate, for one sweep cell."""
    samples = seed_samples(spec, seed) if samples is None else samples
    sc = spec.scenario.with_raus(k)
    weights = weights_for(sc, samples, spec.cluster.mode)
    params = replace(spec.cluster, init_seed=_derive_seed(seed, _TAG_CLUSTER, k))
    design = place_raus(sc, samples, criterion, params, weights)
    norm = "l2" if spec.cluster.mode == "squared" else "l1"
    system = build_system(design.c, design.snr_targets, sc)
    if spec.power_mode == "optimized":
        cls = allocate_cluster_power(system, sc.sum_power, norm)
        glob = optimize_global_power(design.c, samples, sc, weights.nu, norm)
        p_eval, p_bound, feasible = glob.p, cls.p, cls.feasible_exact
    else:
        p_eval = p_bound = sc.equal_split(k)
        feasible = solve_exact_quiet(system, sc.sum_power)
    placement = Placement(design.c, p_eval)
    bound_placement = Placement(design.c, p_bound)
    ev, streams, n_adj = evaluation_set(spec, samples, design.c, seed)
    mc = McConfig(seed=_derive_seed(spec.mc.seed, seed, _TAG_MC), num_draws=spec.mc.num_draws)
    report = effective_capacity_report(ev, placement, sc, mc, design=design,
                                       bound_samples=samples, bound_placement=bound_placement,
                                       streams=streams, feasible_exact=feasible)
    return CellResult(criterion, k, seed, design, placement, p_bound, report, len(ev), n_adj)


def _seed_job(spec: ExperimentSpec, seed: int) -> list[CellResult]:
    samples = seed_samples(spec, seed)
    return [run_cell(spec, crit, k, seed, samples)
            for k in spec.k_sweep for crit in spec.criteria]


def run_sweep(spec: ExperimentSpec, out_dir=None, jobs: int = 1) -> SweepResult:
    """Run every (criterion, K, seed) cell; outputs are ordered by that key.

    With ``out_dir`` the per-cell CSVs are written as seeds complete and the
    summary files at the end. On failure the completed cells are still
    written and :class:`SweepError` is raised.
    """
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    cells: list[CellResult] = []
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_seed_job, spec, s) for s in spec.seeds]
                for fut in futures:
                    batch = fut.result()
                    cells.extend(batch)
                    if out is not None:
                        _write_cells(batch, out)
        else:
            for s in spec.seeds:
                log.info("%s: seed %d", spec.name, s)
                batch = _seed_job(spec, s)
                cells.extend(batch)
                if out is not None:
                    _write_cells(batch, out)
    except Exception as exc:
        partial = SweepResult(spec, sorted(cells, key=lambda c: c.key))
        if out is not None:
            write_summary(partial, out)
        raise SweepError(f"sweep {spec.name!r} failed: {exc}", partial) from exc
    result = SweepResult(spec, sorted(cells, key=lambda c: c.key))
    if out is not None:
        write_summary(result, out)
    return result


# ---------------------------------------------------------------------------
# outputs


def _cell_tag(cell: CellResult) -> str:
    return f"{cell.criterion}_{cell.k}_{cell.seed}"


def write_placement_csv(cell: CellResult, path) -> None:
    """Columns ``k, c0[, c1], p, p_cluster, snr_target``."""
    c = cell.placement.c
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k"] + [f"c{i}" for i in range(c.shape[1])] + ["p", "p_cluster", "snr_target"])
        for j in range(c.shape[0]):
            w.writerow([j] + [fmt(v) for v in c[j]] + [fmt(cell.placement.p[j]),
                        fmt(cell.cluster_power[j]), fmt(cell.design.snr_targets[j])])


def _write_cells(cells, out: Path) -> None:
    for cell in cells:
        tag = _cell_tag(cell)
        write_placement_csv(cell, out / f"placement_{tag}.csv")
        write_per_location_csv(cell.report, out / f"per_location_{tag}.csv")


def summary_row(cell: CellResult) -> list[str]:
    r = cell.report
    vals = dict(criterion=cell.criterion, K=cell.k, seed=cell.seed, j_e1=r.j_e1, j2=r.j2,
                q2=r.q2, ub_e1=r.ub_e1, ub_2=r.ub_2, ub_opt=r.ub_opt,
                cell_avg_capacity=r.cell_avg_capacity, cell_avg_effective=r.cell_avg_effective,
                cell_avg_wasted=r.cell_avg_wasted, feasible_exact=bool(r.feasible_exact),
                j2_se=r.j2_se, j1_snr=r.j1_snr, j2_snr=r.j2_snr, q1=r.q1,
                n_eval=cell.n_eval, n_adjusted=cell.n_adjusted)
    return [v if isinstance(v, str) else fmt(v) for v in (vals[c] for c in SUMMARY_COLUMNS)]


CURVE_METRICS = (("ub_e1", "median"), ("ub_2", "median"), ("ub_opt", "median"),
                 ("j2_snr", "median"), ("j2", "mean"), ("cell_avg_capacity", "mean"),
                 ("cell_avg_effective", "mean"), ("cell_avg_wasted", "mean"))


def curves(result: SweepResult) -> list[dict]:
    """Per (criterion, K) aggregates over seeds, plus ``<metric>_norm``
    columns divided by the maximum of the SDC curve (all criteria when SDC
    was not run)."""
    spec = result.spec
    rows = []
    for crit in spec.criteria:
        for k in spec.k_sweep:
            row = dict(criterion=crit, K=k)
            for m, how in CURVE_METRICS:
                v = result.values(m, crit, k)
                row[f"{how}_{m}"] = float(np.median(v) if how == "median" else np.mean(v))
            rows.append(row)
    ref_rows = [r for r in rows if r["criterion"] == "SDC"] or rows
    for m, how in CURVE_METRICS:
        col = f"{how}_{m}"
        ref = max(r[col] for r in ref_rows)
        for r in rows:
            r[f"{col}_norm"] = r[col] / ref if ref and math.isfinite(ref) else float("nan")
    return rows


def write_summary(result: SweepResult, out: Path) -> None:
    with open(out / "sweep_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for cell in result.cells:
            w.writerow(summary_row(cell))
    if not result.cells:
        return
    present = {(c.criterion, c.k) for c in result.cells}
    if not all((cr, k) in present for cr in result.spec.criteria for k in result.spec.k_sweep):
        return
    rows = curves(result)
    with open(out / "sweep_curves.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(rows[0]))
        for r in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in r.values()])
