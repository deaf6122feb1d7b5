"""Deterministic simulator for stroboscopic cat-state amplification of a
qubit-coupled harmonic oscillator, with spectroscopic detection, coherence
probes, damped (Lindblad) evolution, and the analytic saturation model.
"""

__version__ = "0.1.0"

from .errors import (
    ConvergenceError,
    DimensionError,
    IoError,
    ParseError,
    ScheduleOverlapError,
    StrobocatError,
    TruncationError,
    ValidationError,
)
from .fock import (
    FockSpace,
    OperatorMatrix,
    StateVector,
    coherent_state,
    displacement,
    interior_dim,
    ladder_ops,
    matrix_exponential,
    required_truncation,
)
from .spinboson import (
    CompositeSpace,
    PhysicalDeviceParams,
    SystemParams,
    build_h_detect,
    build_h_rot,
    conditional_displacement,
    coupling_from_physical,
    embed,
    temperature_to_units,
)
from .evolve import (
    BathParams,
    DensityMatrix,
    Drive,
    HannPulse,
    InstantFlip,
    InstantHalfFlip,
    LindbladResult,
    PulseSchedule,
    RectPulse,
    apply_schedule,
    bath_from_system,
    lindblad_evolve,
    propagate_driven,
    propagate_static,
)
from .analysis import (
    DetectionCoefficients,
    QubitReducedState,
    decoherence_estimate,
    detection_coefficients,
    fidelity,
    fit_decay_rate,
    position_density,
    qubit_reduced,
)
from .protocols import (
    AmplifyResult,
    DetectResult,
    SaturationModel,
    amplify_finite,
    amplify_ideal,
    coherence_probe,
    conditional_amplitudes,
    detect_spectroscopy,
    detection_shift,
    flip_energy_gain,
    ideal_cat_state,
    measure_sigma_x,
    mrfm_amplitude,
    saturation,
    stroboscopic_unitary,
    two_mode_cat,
)
