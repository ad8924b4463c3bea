"""Transient acoustic scattering by time-domain boundary integral equations.

Convolution quadrature in time (BDF2 or trapezoidal, standard or with
entrywise whole-step shifts that restore discrete causality), fundamental
solution collocation or piecewise-constant Galerkin panels in space, and
an FFT-decoupled frequency-domain solve.
"""

from ._backend import active_backend
from .assembly import (
    ConvolutionOperator,
    FrequencyMatrix,
    GalerkinDiscretization,
    MfsDiscretization,
    RhsSeries,
    assemble_galerkin,
    assemble_mfs,
    assemble_modified,
    assemble_observation,
    project_rhs,
)
from .cq import (
    MultistepRule,
    TimeGrid,
    WeightSequence,
    apply_convolution,
    choose_lambda,
    contour_points,
    cq_frequencies,
    delta_at,
    modified_symbol,
    scalar_weights_fft,
)
from .geometry import (
    MfsLayout,
    PanelMesh,
    ParametricBoundary,
    ScattererShape,
    ShiftData,
    boundary_for,
    conformal_ellipse_map,
    disk_boundary,
    mfs_points,
    panel_mesh,
    semicircle_boundary,
    shift_data_galerkin,
    shift_data_mfs,
    two_ellipses_boundary,
)
from .incident import GaussianPulse, WindowedPlaneWave, gaussian_incident, plane_wave
from .kernels import (
    KernelFamily,
    bessel_j0,
    bessel_k0_scaled,
    laplace_kernel,
    shifted_kernel,
    time_kernel_2d,
)
from .scenarios import (
    GalerkinSpatial,
    Geometry,
    MfsSpatial,
    Problem,
    Scenario,
    Scheme,
    convergence_study,
    render_snapshots,
    run_scenario,
)
from .series import ExpTransfer, RationalTransfer, scalar_weights_exact
from .solver import (
    DensityHistory,
    FieldSamples,
    MotInfeasibleError,
    SolveReport,
    all_at_once_solve,
    evaluate_field,
    least_squares,
    max_error,
    mot_solve,
    operator_weights,
)

__version__ = "0.1.0"

__all__ = [
    "ConvolutionOperator",
    "DensityHistory",
    "ExpTransfer",
    "FieldSamples",
    "FrequencyMatrix",
    "GalerkinDiscretization",
    "GalerkinSpatial",
    "GaussianPulse",
    "Geometry",
    "KernelFamily",
    "MfsDiscretization",
    "MfsLayout",
    "MfsSpatial",
    "MotInfeasibleError",
    "MultistepRule",
    "PanelMesh",
    "ParametricBoundary",
    "Problem",
    "RationalTransfer",
    "RhsSeries",
    "Scenario",
    "ScattererShape",
    "Scheme",
    "ShiftData",
    "SolveReport",
    "TimeGrid",
    "WeightSequence",
    "WindowedPlaneWave",
    "active_backend",
    "all_at_once_solve",
    "apply_convolution",
    "assemble_galerkin",
    "assemble_mfs",
    "assemble_modified",
    "assemble_observation",
    "bessel_j0",
    "bessel_k0_scaled",
    "boundary_for",
    "choose_lambda",
    "conformal_ellipse_map",
    "contour_points",
    "convergence_study",
    "cq_frequencies",
    "delta_at",
    "disk_boundary",
    "evaluate_field",
    "gaussian_incident",
    "laplace_kernel",
    "least_squares",
    "max_error",
    "mfs_points",
    "modified_symbol",
    "mot_solve",
    "operator_weights",
    "panel_mesh",
    "plane_wave",
    "project_rhs",
    "render_snapshots",
    "run_scenario",
    "scalar_weights_exact",
    "scalar_weights_fft",
    "semicircle_boundary",
    "shift_data_galerkin",
    "shift_data_mfs",
    "shifted_kernel",
    "time_kernel_2d",
    "two_ellipses_boundary",
]
