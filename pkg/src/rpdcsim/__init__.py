"""Rotated polarization directional coupler simulation and analysis.

Jones/Stokes polarization algebra, rotated-retarder birefringence with
axis calibration and recovery, coupled-mode propagation (analytic and
numeric), the composed two-port device model with extinction and sweep
diagnostics, and single-qubit state tomography with linear and
maximum-likelihood reconstruction.
"""

from .polarization import (
    CARDINAL_STATES,
    DensityMatrix,
    JonesVector,
    RHO_MIXED,
    StokesVector,
    cardinal_state,
    density_to_stokes,
    fidelity,
    jones_to_density,
    linear_polarizer,
    purity,
    rotation_deg,
    stokes_to_density,
)
from .birefringence import (
    AxisCalibration,
    AxisUnobservableError,
    RotatedRetarder,
    axis_from_offset,
    crossed_polarizer_transmission,
    find_axis,
    load_axis_calibration,
    retardance_from_physics,
    retarder_jones,
)
from .coupling import (
    CouplerParams,
    ModeAmplitudes,
    bend_phase_from_shortening,
    coupler_transfer_matrix,
    cross_coupling_ratio,
    pdc_coupling_length,
    propagate_analytic,
    propagate_numeric,
)
from .device import (
    AxisCheckResult,
    PortOutput,
    PortPowers,
    RpdcDevice,
    SweepPoint,
    axis_port_powers,
    extinction_db,
    extinction_ratios,
    load_device,
    make_pdc_device,
    port_transfer_matrices,
    rpdc_transfer,
    save_device,
    simulate_axis_check,
    sweep_coupling_length,
)
from .tomography import (
    MeasurementRecord,
    MleConfig,
    MleDivergenceError,
    NoiseConfig,
    TomographyResult,
    cardinal_density,
    linear_reconstruct,
    load_measurement_csv,
    measure_records,
    mle_reconstruct,
    project_probabilities,
    run_tomography_experiment,
    save_measurement_csv,
    waveplate_settings,
)

__version__ = "0.1.0"

__all__ = [
    "AxisCalibration",
    "AxisCheckResult",
    "AxisUnobservableError",
    "CARDINAL_STATES",
    "CouplerParams",
    "DensityMatrix",
    "JonesVector",
    "MeasurementRecord",
    "MleConfig",
    "MleDivergenceError",
    "ModeAmplitudes",
    "NoiseConfig",
    "PortOutput",
    "PortPowers",
    "RHO_MIXED",
    "RotatedRetarder",
    "RpdcDevice",
    "StokesVector",
    "SweepPoint",
    "TomographyResult",
    "axis_from_offset",
    "axis_port_powers",
    "bend_phase_from_shortening",
    "cardinal_density",
    "cardinal_state",
    "coupler_transfer_matrix",
    "cross_coupling_ratio",
    "crossed_polarizer_transmission",
    "density_to_stokes",
    "extinction_db",
    "extinction_ratios",
    "fidelity",
    "find_axis",
    "jones_to_density",
    "linear_polarizer",
    "linear_reconstruct",
    "load_axis_calibration",
    "load_device",
    "load_measurement_csv",
    "make_pdc_device",
    "measure_records",
    "mle_reconstruct",
    "pdc_coupling_length",
    "port_transfer_matrices",
    "project_probabilities",
    "propagate_analytic",
    "propagate_numeric",
    "purity",
    "retardance_from_physics",
    "retarder_jones",
    "rotation_deg",
    "rpdc_transfer",
    "run_tomography_experiment",
    "save_device",
    "save_measurement_csv",
    "simulate_axis_check",
    "stokes_to_density",
    "sweep_coupling_length",
    "waveplate_settings",
]
