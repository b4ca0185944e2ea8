"""Finite-sample estimation-error analysis for one-qubit state tomography.

The package simulates maximum-likelihood tomography of a single qubit,
evaluates closed-form boundary-corrected expected losses together with
the sample-size threshold beyond which the asymptotic (Cramer-Rao)
theory applies, and provides sampling oracles to verify the closed forms.
"""

__version__ = "0.1.0"

from .bloch import (
    BlochVector,
    Povm,
    PovmEffect,
    SphericalCoords,
    bloch_from_spherical,
    outcome_probability,
    probabilities,
    spherical_from_bloch,
    validate_povm,
    xyz_povm,
)
from .boundary import (
    ApproxLossInputs,
    boundary_threshold,
    erfc,
    erfc_asymptotic,
    expected_hs_mixed,
    expected_hs_pure,
    expected_if_mixed,
    expected_if_pure,
)
from .estimators import (
    MleReport,
    OutcomeCounts,
    linear_estimate,
    log_likelihood,
    mle,
    project_to_tangent,
)
from .fisher import (
    FisherMatrix,
    cramer_rao_bound,
    crb_hs_xyz,
    crb_if_xyz,
    fisher_matrix,
    fisher_matrix_xyz,
    n_star,
    n_star_xyz,
)
from .losses import (
    LossHessian,
    hesse_hs,
    hesse_if,
    hs_distance,
    infidelity,
    infidelity_quadratic,
)
from .montecarlo import (
    ExpectedLossEstimate,
    SimulationPlan,
    empirical_expected_loss,
    gaussian_projection_oracle,
    gaussian_sampler,
    mixed_state_infidelity_loss,
    pure_state_infidelity_loss,
    quadratic_form_loss,
    sample_counts,
    sequence_stream,
    squared_hs_loss,
)

__all__ = [
    "ApproxLossInputs",
    "BlochVector",
    "ExpectedLossEstimate",
    "FisherMatrix",
    "LossHessian",
    "MleReport",
    "OutcomeCounts",
    "Povm",
    "PovmEffect",
    "SimulationPlan",
    "SphericalCoords",
    "__version__",
    "bloch_from_spherical",
    "boundary_threshold",
    "cramer_rao_bound",
    "crb_hs_xyz",
    "crb_if_xyz",
    "empirical_expected_loss",
    "erfc",
    "erfc_asymptotic",
    "expected_hs_mixed",
    "expected_hs_pure",
    "expected_if_mixed",
    "expected_if_pure",
    "fisher_matrix",
    "fisher_matrix_xyz",
    "gaussian_projection_oracle",
    "gaussian_sampler",
    "hesse_hs",
    "hesse_if",
    "hs_distance",
    "infidelity",
    "infidelity_quadratic",
    "linear_estimate",
    "log_likelihood",
    "mixed_state_infidelity_loss",
    "mle",
    "n_star",
    "n_star_xyz",
    "outcome_probability",
    "probabilities",
    "project_to_tangent",
    "pure_state_infidelity_loss",
    "quadratic_form_loss",
    "sample_counts",
    "sequence_stream",
    "spherical_from_bloch",
    "squared_hs_loss",
    "validate_povm",
    "xyz_povm",
]
