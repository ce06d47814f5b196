"""TOML experiment files (schema version 1).

Layout (every table except ``[scenario]``, ``[scenario.demand]`` and
``[sampling]`` is optional)::

    schema_version = 1
    name = "example1"
    notes = "free text"

    [scenario]
    area = [2000.0]            # [length] or [width, height], metres
    alpha = 4.0                # path-loss exponent, 2..6
    d_min = 5.0                # minimum RAU-user distance, m
    noise_power = "reference"  # watts, or "reference" (see below)
    noise_reach_factor = 10.0  # only with noise_power = "reference"
    shadow_sigma_db = 6.0
    antennas_per_rau = 1
    sum_power = 1.0            # W
    delta = 0.0                # capacity margin, bps/Hz

    [scenario.demand]          # kind = "linear" | "radial" | "tabulated"
    kind = "linear"
    start = [0.0]
    end = [2000.0]
    value_start = 5.35
    value_end = 3.45

    [sampling]                 # kind = "uniform_grid" | "uniform_random" | "ppp"
    kind = "uniform_grid"
    n = 100                    # grid points per axis / number of random points
    # density = 0.003          # ppp only, points per m^2 (per m in 1-D)

    [sweep]
    k = "1..10"                # "a..b" or a list of integers
    criteria = ["SDC", "IOCC"]
    power_mode = "optimized"   # or "equal_split"
    seeds = 20                 # count (seeds 0..n-1) or explicit list
    eval_locations = 0         # 0 = evaluate every sample

    [clustering]
    mode = "squared"           # or "absolute"
    max_iters = 300
    tol = 0.0
    restarts = 10

    [monte_carlo]
    seed = 2014
    num_draws = 20000

    [output]
    dir = "out/example1"

``noise_power = "reference"`` picks the noise at which a single RAU sending
the whole sum power reaches the largest demanded average SNR at
``noise_reach_factor * d_min``.
"""

from __future__ import annotations

import sys
from dataclasses import replace

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib
import tomli_w

from .fading import McConfig
from .geometry import Scenario, demand_from_dict, reference_noise_power
from .harness import ExperimentSpec, Sampling
from .placement import ClusterParams

SCHEMA_VERSION = 1

_TABLES = {
    "": {"schema_version", "name", "notes", "scenario", "sampling", "sweep", "clustering",
         "monte_carlo", "output"},
    "scenario": {"area", "alpha", "d_min", "noise_power", "noise_reach_factor",
                 "shadow_sigma_db", "antennas_per_rau", "sum_power", "delta", "demand"},
    "sampling": {"kind", "n", "density"},
    "sweep": {"k", "criteria", "power_mode", "seeds", "eval_locations"},
    "clustering": {"mode", "max_iters", "tol", "restarts"},
    "monte_carlo": {"seed", "num_draws"},
    "output": {"dir"},
}


class SpecError(ValueError):
    """Invalid experiment file or option."""


def parse_k_range(text) -> tuple[int, ...]:
    """``"1..6"`` -> (1, ..., 6); ``"2,4,6"`` or a list -> those values."""
    try:
        if isinstance(text, (list, tuple)):
            vals = [int(v) for v in text]
        elif isinstance(text, int):
            vals = [text]
        elif ".." in text:
            lo, hi = text.split("..")
            vals = list(range(int(lo), int(hi) + 1))
        else:
            vals = [int(v) for v in text.split(",") if v.strip()]
    except (TypeError, ValueError) as exc:
        raise SpecError(f"bad K sweep {text!r}") from exc
    if not vals or min(vals) < 1:
        raise SpecError(f"bad K sweep {text!r}: need counts >= 1")
    return tuple(vals)


def parse_seeds(value) -> tuple[int, ...]:
    """An integer ``n`` means seeds ``0..n-1``; a list or ``"a..b"`` is taken as is."""
    if isinstance(value, int) and not isinstance(value, bool):
        if value < 1:
            raise SpecError("seed count must be >= 1")
        return tuple(range(value))
    if isinstance(value, str) and ".." not in value and "," not in value:
        try:
            return parse_seeds(int(value))
        except ValueError as exc:
            raise SpecError(f"bad seeds {value!r}") from exc
    try:
        if isinstance(value, str) and ".." in value:
            lo, hi = value.split("..")
            seeds = tuple(range(int(lo), int(hi) + 1))
        elif isinstance(value, str):
            seeds = tuple(int(v) for v in value.split(",") if v.strip())
        else:
            seeds = tuple(int(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"bad seeds {value!r}") from exc
    if not seeds or min(seeds) < 0:
        raise SpecError(f"bad seeds {value!r}")
    return seeds


def parse_criteria(value) -> tuple[str, ...]:
    items = value.split(",") if isinstance(value, str) else list(value)
    out = []
    for item in items:
        item = str(item).strip().upper()
        if item == "BOTH":
            out += ["SDC", "IOCC"]
        elif item in ("SDC", "IOCC"):
            out.append(item)
        else:
            raise SpecError(f"unknown criterion {item!r}")
    return tuple(dict.fromkeys(out))


def _check_keys(table: dict, name: str) -> None:
    allowed = _TABLES[name]
    unknown = set(table) - allowed
    if unknown:
        where = f"[{name}]" if name else "top level"
        raise SpecError(f"unknown key(s) {sorted(unknown)} at {where}")


def spec_from_dict(doc: dict) -> ExperimentSpec:
    _check_keys(doc, "")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SpecError(f"schema_version must be {SCHEMA_VERSION}")
    for req in ("scenario", "sampling"):
        if req not in doc:
            raise SpecError(f"missing [{req}] table")
    for name in _TABLES:
        if name and name in doc:
            if not isinstance(doc[name], dict):
                raise SpecError(f"{name} must be a table")
            _check_keys(doc[name], name)
    try:
        sc = dict(doc["scenario"])
        if "demand" not in sc:
            raise SpecError("missing [scenario.demand] table")
        demand = demand_from_dict(sc.pop("demand"))
        reach = float(sc.pop("noise_reach_factor", 10.0))
        defaults = dict(d_min=5.0, shadow_sigma_db=6.0, antennas_per_rau=1, sum_power=1.0,
                        delta=0.0, noise_power="reference")
        sc = {**defaults, **sc}
        if sc["noise_power"] == "reference":
            sc["noise_power"] = reference_noise_power(
                float(sc["sum_power"]), float(sc["alpha"]), float(sc["d_min"]),
                float(sc["shadow_sigma_db"]), int(sc["antennas_per_rau"]), demand.max_value,
                reach)
        scenario = Scenario(area=tuple(sc["area"]), alpha=float(sc["alpha"]),
                            d_min=float(sc["d_min"]), noise_power=float(sc["noise_power"]),
                            shadow_sigma_db=float(sc["shadow_sigma_db"]),
                            antennas_per_rau=int(sc["antennas_per_rau"]), num_raus=1,
                            sum_power=float(sc["sum_power"]), delta=float(sc["delta"]),
                            demand=demand)
        sampling = Sampling(**doc["sampling"])
        sweep = doc.get("sweep", {})
        cl = doc.get("clustering", {})
        mc = doc.get("monte_carlo", {})
        kwargs = dict(name=str(doc.get("name", "experiment")), scenario=scenario,
                      sampling=sampling, notes=str(doc.get("notes", "")))
        if "k" in sweep:
            kwargs["k_sweep"] = parse_k_range(sweep["k"])
        if "criteria" in sweep:
            kwargs["criteria"] = parse_criteria(sweep["criteria"])
        if "power_mode" in sweep:
            kwargs["power_mode"] = sweep["power_mode"]
        if "seeds" in sweep:
            kwargs["seeds"] = parse_seeds(sweep["seeds"])
        if "eval_locations" in sweep:
            kwargs["eval_locations"] = int(sweep["eval_locations"])
        kwargs["cluster"] = ClusterParams(mode=cl.get("mode", "squared"),
                                          max_iters=int(cl.get("max_iters", 300)),
                                          tol=float(cl.get("tol", 0.0)),
                                          num_restarts=int(cl.get("restarts", 10)))
        if kwargs["cluster"].mode not in ("squared", "absolute"):
            raise SpecError(f"unknown clustering mode {kwargs['cluster'].mode!r}")
        kwargs["mc"] = McConfig(seed=int(mc.get("seed", 2014)),
                                num_draws=int(mc.get("num_draws", 20_000)))
        if "output" in doc and "dir" in doc["output"]:
            kwargs["out"] = str(doc["output"]["dir"])
        return ExperimentSpec(**kwargs)
    except SpecError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(str(exc)) from exc


def load_spec(path) -> ExperimentSpec:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise SpecError(f"{path}: {exc}") from exc
    return spec_from_dict(doc)


def spec_to_dict(spec: ExperimentSpec) -> dict:
    sc = spec.scenario
    sampling = {"kind": spec.sampling.kind}
    if spec.sampling.kind == "ppp":
        sampling["density"] = spec.sampling.density
    else:
        sampling["n"] = spec.sampling.n
    doc = {
        "schema_version": SCHEMA_VERSION,
        "name": spec.name,
        "notes": spec.notes,
        "scenario": {
            "area": list(sc.area), "alpha": sc.alpha, "d_min": sc.d_min,
            "noise_power": sc.noise_power, "shadow_sigma_db": sc.shadow_sigma_db,
            "antennas_per_rau": sc.antennas_per_rau, "sum_power": sc.sum_power,
            "delta": sc.delta, "demand": sc.demand.to_dict(),
        },
        "sampling": sampling,
        "sweep": {"k": list(spec.k_sweep), "criteria": list(spec.criteria),
                  "power_mode": spec.power_mode, "seeds": list(spec.seeds),
                  "eval_locations": spec.eval_locations},
        "clustering": {"mode": spec.cluster.mode, "max_iters": spec.cluster.max_iters,
                       "tol": spec.cluster.tol, "restarts": spec.cluster.num_restarts},
        "monte_carlo": {"seed": spec.mc.seed, "num_draws": spec.mc.num_draws},
    }
    if spec.out is not None:
        doc["output"] = {"dir": spec.out}
    return doc


def dump_spec(spec: ExperimentSpec) -> str:
    return tomli_w.dumps(spec_to_dict(spec))


def with_overrides(spec: ExperimentSpec, k_sweep=None, criteria=None, seeds=None,
                   mc_draws=None, out=None, eval_locations=None) -> ExperimentSpec:
    """Apply command-line overrides; raises :class:`SpecError` on bad values."""
    changes = {}
    if k_sweep is not None:
        changes["k_sweep"] = parse_k_range(k_sweep)
    if criteria is not None:
        changes["criteria"] = parse_criteria(criteria)
    if seeds is not None:
        changes["seeds"] = parse_seeds(seeds)
    if mc_draws is not None:
        if mc_draws < 2:
            raise SpecError("--mc-draws must be >= 2")
        changes["mc"] = replace(spec.mc, num_draws=int(mc_draws))
    if out is not None:
        changes["out"] = str(out)
    if eval_locations is not None:
        if eval_locations < 0:
            raise SpecError("--eval-locations must be >= 0")
        changes["eval_locations"] = int(eval_locations)
    try:
        return replace(spec, **changes)
    except ValueError as exc:
        raise SpecError(str(exc)) from exc
