"""Pinching-antenna sensing with leaky-cable reception.

A simulation and design-optimization toolkit for a multistatic sensing
system whose transmit elements are movable pinching antennas on dielectric
waveguides and whose receivers are leaky coaxial cables.  The package
evaluates position Cramer-Rao bounds, optimizes antenna placement and
waveform covariance in two stages, and runs the batch experiments used to
compare the system against fixed placements and a conventional planar array.
"""

from .baselines import UpaConfig, fixed_uniform_layout, upa_crb, upa_engine
from .errors import (
    CoincidentTargetError,
    ConfigurationError,
    NotConvergedError,
    OptimizationFailedError,
    UnidentifiableSceneError,
)
from .experiments import (
    ExperimentConfig,
    ResultRow,
    dbm_to_watts,
    run_cdf_experiment,
    run_robustness_experiment,
    sample_scenes,
    write_rows_csv,
)
from .fim import (
    CrbEngine,
    CrbReport,
    FimBlocks,
    PassSceneObjective,
    WaveformSpec,
    assemble_fim,
    assemble_fim_blocks,
    crb_matrix,
    evaluate_crb,
    peb,
    rx_derivative_columns,
    rx_steering_derivative,
    tx_derivative_columns,
    tx_steering_derivative,
)
from .model import (
    SPEED_OF_LIGHT,
    PinchingLayout,
    PowerModel,
    PropagationMatrices,
    SystemGeometry,
    TargetScene,
    assemble_rx,
    assemble_tx,
    cable_feed_vector,
    in_waveguide_vector,
    mean_channel,
    point_target_distances,
    propagation_matrices,
    rx_distance,
    rx_steering,
    simulate_echo,
    spherical_gains,
    tx_distance,
    tx_steering,
)
from .optimize import (
    OptimizationResult,
    PsoConfig,
    SdpConfig,
    optimize_covariance,
    project_to_feasible,
    pso_optimize_positions,
    sdp_optimize_waveform,
    two_stage_optimize,
)

__version__ = "0.1.0"

__all__ = [
    "SPEED_OF_LIGHT",
    "SystemGeometry",
    "PinchingLayout",
    "TargetScene",
    "PowerModel",
    "PropagationMatrices",
    "WaveformSpec",
    "FimBlocks",
    "CrbReport",
    "CrbEngine",
    "PassSceneObjective",
    "PsoConfig",
    "SdpConfig",
    "OptimizationResult",
    "UpaConfig",
    "ExperimentConfig",
    "ResultRow",
    "ConfigurationError",
    "CoincidentTargetError",
    "UnidentifiableSceneError",
    "OptimizationFailedError",
    "NotConvergedError",
    "tx_distance",
    "rx_distance",
    "point_target_distances",
    "spherical_gains",
    "tx_steering",
    "rx_steering",
    "in_waveguide_vector",
    "cable_feed_vector",
    "mean_channel",
    "assemble_tx",
    "assemble_rx",
    "propagation_matrices",
    "simulate_echo",
    "tx_steering_derivative",
    "rx_steering_derivative",
    "tx_derivative_columns",
    "rx_derivative_columns",
    "assemble_fim_blocks",
    "assemble_fim",
    "crb_matrix",
    "peb",
    "evaluate_crb",
    "project_to_feasible",
    "pso_optimize_positions",
    "optimize_covariance",
    "sdp_optimize_waveform",
    "two_stage_optimize",
    "fixed_uniform_layout",
    "upa_engine",
    "upa_crb",
    "dbm_to_watts",
    "sample_scenes",
    "run_cdf_experiment",
    "run_robustness_experiment",
    "write_rows_csv",
]
