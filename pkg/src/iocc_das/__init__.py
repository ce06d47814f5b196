"""RAU placement for distributed antenna systems by joint location-SNR clustering."""

from .fading import McConfig, ergodic_capacity, ergodic_capacity_batch, sample_fading
from .geometry import (DemandSamples, LinearRamp, Placement, RadialRamp, Scenario,
                       TabulatedDemand, avg_snr, capacity_to_snr, path_loss, snr_to_capacity)
from .harness import (ExperimentSpec, Sampling, SweepResult, make_example1, make_example2,
                      make_example3, run_sweep, sample_ppp)
from .metrics import EvalReport, effective_capacity_report, quantization_error, upper_bounds
from .placement import (ClusterParams, build_augmented, compute_nu, compute_nu_glob,
                        iocc_weights, lloyd_cluster, place_raus, weights_for)
from .power import (allocate_cluster_power, build_system, optimize_global_power,
                    solve_constrained, solve_exact)

__version__ = "0.1.0"

__all__ = [
    "ClusterParams",
    "DemandSamples",
    "EvalReport",
    "ExperimentSpec",
    "LinearRamp",
    "McConfig",
    "Placement",
    "RadialRamp",
    "Sampling",
    "Scenario",
    "SweepResult",
    "TabulatedDemand",
    "allocate_cluster_power",
    "avg_snr",
    "build_augmented",
    "build_system",
    "capacity_to_snr",
    "compute_nu",
    "compute_nu_glob",
    "effective_capacity_report",
    "ergodic_capacity",
    "ergodic_capacity_batch",
    "iocc_weights",
    "lloyd_cluster",
    "make_example1",
    "make_example2",
    "make_example3",
    "optimize_global_power",
    "path_loss",
    "place_raus",
    "quantization_error",
    "run_sweep",
    "sample_fading",
    "sample_ppp",
    "snr_to_capacity",
    "solve_constrained",
    "solve_exact",
    "upper_bounds",
    "weights_for",
]
