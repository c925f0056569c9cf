"""Series, quasi-exact and numerical analysis of the 2D parabolic quantum-dot exciton."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BracketError,
    ConfigError,
    ConvergenceError,
    DegenerateConditionError,
    DomainError,
    InsufficientDataError,
    NonNormalizableError,
    QdExcitonError,
    ResourceError,
)
from .model import (  # noqa: E402
    DerivedParams,
    PhysicalParams,
    QuantumNumbers,
    ScaledParams,
    claimed_energy,
    cm_energy,
    corrected_energy,
    implied_energy,
    reduced_mass,
    to_scaled,
)
from .oracle import GridSpec, SpectrumResult, discretize, numerov_crosscheck, spectrum  # noqa: E402
from .qes import QesPoint, constraint_residual, qes_points, single_condition_alpha  # noqa: E402
from .series import (  # noqa: E402
    Candidate,
    SeriesState,
    build_candidate,
    claimed_candidate,
    coefficient_polynomials,
    coefficients,
    count_polynomial_nodes,
    ode_residual,
    tail_diagnostic,
)
