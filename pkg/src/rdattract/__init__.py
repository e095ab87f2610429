"""Attractivity certificates and numerical verification for competitive
reaction-diffusion systems with Neumann boundary conditions."""

from .averages import AverageEstimate, estimate_averages, spatial_extrema_series, window_average
from .certificate import (
    Certificate,
    assemble_certificate,
    check_AC,
    check_AC_prime,
    check_cond21,
    check_weighted_AC,
    dominance_matrix,
    find_weights,
    max_slack_weights,
    permanence_bounds,
)
from .grid import Field, Grid, GridError, build_grid, field_inf, field_sup, neumann_laplacian
from .lyapunov import (
    CertificateRequired,
    dini_estimate,
    inequality_rhs,
    norm_equivalence_check,
    stability_probe,
    theta,
    verify_differential_inequality,
    verify_envelope,
)
from .model import (
    AssumptionViolation,
    DomainError,
    ModelError,
    SamplingPolicy,
    SpatialProfile,
    SystemSpec,
    coefficient_bounds,
    eval_growth,
    eval_growth_jacobian,
    validate_assumptions,
)
from .solver import (
    PairTrajectory,
    PositivityError,
    SimulationAborted,
    SolveControls,
    Trajectory,
    entry_index,
    simulate,
    simulate_pair,
    step,
)

__version__ = "0.1.0"
