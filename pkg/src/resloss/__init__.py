"""Dielectric loss extraction for superconducting microwave resonators.

Extracts the TLS loss of a thin-film dielectric from measurements of
three resonator designs: complex transmission sweeps are fitted to the
inverse-transmission circle model, per-power losses are fitted to the
saturable TLS curve, and the participation-weighted losses of a PPC
device, an IDC device and a CPW proxy are solved for the inductor loss
and the capacitor dielectric loss. A systematic-error map shows where
the single-measurement shortcut remains trustworthy.
"""

__version__ = "0.1.0"

from .circuit import (
    ArmScalingModel,
    DesignKind,
    DeviceCircuitModel,
    DeviceRecord,
    LcFit,
    arm_scaling_eval,
    capacitance_from_frequency,
    fit_arm_scaling,
    fit_lc,
    participation_ratios,
    resonance_frequency,
)
from .error_analysis import (
    AXIS_INDUCTOR_LOSS,
    AXIS_PARTICIPATION,
    ErrorMap,
    ErrorRegimePoint,
    error_map,
    log_grid,
    measurable,
    participation_asymptote,
    systematic_error,
)
from .errors import (
    FitFailureError,
    GridRangeError,
    IllConditionedFitError,
    InconsistentInputsError,
    InfeasibleGeometryError,
    InsufficientBaselineError,
    InvalidModelError,
    NonphysicalFitError,
    OutOfSpanError,
    ReslossError,
    UnderdeterminedError,
)
from .extraction import (
    ExtractionInput,
    ExtractionResult,
    extract,
    idc_loss_proxy,
    single_measurement_estimate,
    solve_inductor_loss,
    solve_ppc_loss,
)
from .s21 import (
    ComplexSweep,
    ResonatorFitResult,
    calibrate_and_fit,
    fit_circle,
    fit_resonance,
    inverse_s21_model,
    photon_number,
    preprocess_sweep,
)
from .synth import (
    GroundTruth,
    generate_power_sweep,
    generate_s21_sweep,
    resonator_state,
)
from .tls import (
    PowerSweepPoint,
    TlsFitResult,
    TlsLossParams,
    fit_power_sweep,
    loss_at_zero,
    thermal_factor,
    tls_loss,
    total_loss,
)

__all__ = [
    "__version__",
    # circuit
    "ArmScalingModel",
    "DesignKind",
    "DeviceCircuitModel",
    "DeviceRecord",
    "LcFit",
    "arm_scaling_eval",
    "capacitance_from_frequency",
    "fit_arm_scaling",
    "fit_lc",
    "participation_ratios",
    "resonance_frequency",
    # s21
    "ComplexSweep",
    "ResonatorFitResult",
    "calibrate_and_fit",
    "fit_circle",
    "fit_resonance",
    "inverse_s21_model",
    "photon_number",
    "preprocess_sweep",
    # tls
    "PowerSweepPoint",
    "TlsFitResult",
    "TlsLossParams",
    "fit_power_sweep",
    "loss_at_zero",
    "thermal_factor",
    "tls_loss",
    "total_loss",
    # extraction
    "ExtractionInput",
    "ExtractionResult",
    "extract",
    "idc_loss_proxy",
    "single_measurement_estimate",
    "solve_inductor_loss",
    "solve_ppc_loss",
    # error analysis
    "AXIS_INDUCTOR_LOSS",
    "AXIS_PARTICIPATION",
    "ErrorMap",
    "ErrorRegimePoint",
    "error_map",
    "log_grid",
    "measurable",
    "participation_asymptote",
    "systematic_error",
    # synth
    "GroundTruth",
    "generate_power_sweep",
    "generate_s21_sweep",
    "resonator_state",
    # errors
    "ReslossError",
    "InvalidModelError",
    "InfeasibleGeometryError",
    "UnderdeterminedError",
    "NonphysicalFitError",
    "InsufficientBaselineError",
    "FitFailureError",
    "OutOfSpanError",
    "IllConditionedFitError",
    "InconsistentInputsError",
    "GridRangeError",
]
