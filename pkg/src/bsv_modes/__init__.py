"""Angular Schmidt-mode structure of bright squeezed vacuum from a
two-crystal traveling-wave optical parametric amplifier.

The pipeline: sample the joint two-photon amplitude of the two-crystal OPA
on an angular grid (:mod:`bsv_modes.kernel`), decompose it into Schmidt
modes (:mod:`bsv_modes.schmidt`), amplify each mode pair as an independent
two-mode squeezer and collect photon-number observables
(:mod:`bsv_modes.gain`), and scan the inter-crystal distance
(:mod:`bsv_modes.sweep`).  :mod:`bsv_modes.bogoliubov` propagates the full
discretized quadratic Hamiltonian directly and validates the analytic mode
route on small grids.
"""

from .bogoliubov import (
    BogoliubovPropagator,
    GaussianMoments,
    equivalence_report,
    moments,
    propagate,
    propagate_matrix,
    symplectic_defect,
)
from .config import RunConfig, load_config, parse_config
from .errors import (
    BsvModesError,
    ConfigError,
    DecompositionError,
    GainOverflowError,
    GridResolutionError,
    InsufficientPeaksError,
    NumericalError,
    ValidationError,
)
from .gain import (
    FarfieldProfile,
    GainReport,
    NrfModel,
    equivalent_fwhm,
    evolve,
    farfield_profile,
    g2_from_mode_count,
    g2_from_modes,
    nrf,
)
from .kernel import (
    AngularGrid,
    OpaGeometry,
    TpaKernel,
    build_geometry,
    build_kernel,
    kernel_from_amplitude,
    make_grid,
    required_points,
    tpa_amplitude,
)
from .schmidt import SchmidtDecomposition, decompose, schmidt_number
from .sweep import (
    EnvelopeSummary,
    KernelCache,
    NarrowingFit,
    Peak,
    PeriodEstimate,
    SweepPoint,
    SweepResult,
    detect_peaks,
    effective_gain,
    envelope_summary,
    estimate_period,
    gap_range,
    narrowing_check,
    reference_coupling,
    run_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "AngularGrid",
    "BogoliubovPropagator",
    "BsvModesError",
    "ConfigError",
    "DecompositionError",
    "EnvelopeSummary",
    "FarfieldProfile",
    "GainOverflowError",
    "GainReport",
    "GaussianMoments",
    "GridResolutionError",
    "InsufficientPeaksError",
    "KernelCache",
    "NarrowingFit",
    "NrfModel",
    "NumericalError",
    "OpaGeometry",
    "Peak",
    "PeriodEstimate",
    "RunConfig",
    "SchmidtDecomposition",
    "SweepPoint",
    "SweepResult",
    "TpaKernel",
    "ValidationError",
    "build_geometry",
    "build_kernel",
    "decompose",
    "detect_peaks",
    "effective_gain",
    "envelope_summary",
    "equivalence_report",
    "equivalent_fwhm",
    "estimate_period",
    "evolve",
    "farfield_profile",
    "g2_from_mode_count",
    "g2_from_modes",
    "gap_range",
    "kernel_from_amplitude",
    "load_config",
    "make_grid",
    "moments",
    "narrowing_check",
    "nrf",
    "parse_config",
    "propagate",
    "propagate_matrix",
    "reference_coupling",
    "required_points",
    "run_sweep",
    "schmidt_number",
    "symplectic_defect",
    "tpa_amplitude",
]
