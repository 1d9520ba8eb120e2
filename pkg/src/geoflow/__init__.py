"""Numerical laboratory for the integrable geodesic flows of E3, Nil and Sol."""
__version__ = "0.1.0"

from ._backend import BACKEND
from .errors import (
    CapacityError,
    GeoflowError,
    IntegrationError,
    LinearRegimeError,
    NotAnosovError,
    ReductionError,
    SingularSetError,
    StencilError,
    UsageError,
)
from .groups import (
    AlgebraVector,
    Covector,
    GroupElement,
    Model,
    coadjoint,
    commutator,
    exponential,
    identity,
    inverse,
    multiply,
)
from .dynamics import PhaseState, Scheme, Trajectory, integrate, oracle_integrate, step
from .integrals import (
    ConservationClass,
    IntegralSuite,
    bracket_fd,
    casimirs,
    hamiltonian,
    left_momentum,
    nil_xi,
    nil_zeta,
    sol_suite,
)
from .lattices import (
    LatticeSpec,
    QuadraticField,
    fundamental_unit,
    lattice_for,
    monodromy_matrix,
    monodromy_stretch,
    reduce,
    sol_lattice,
)
from .analysis import (
    DriftReport,
    RotationEstimate,
    SectionSpec,
    drift_report,
    lyapunov_max,
    poincare_section,
    recurrence_time,
    rotation_vector,
)

__all__ = ["BACKEND", "__version__",
    "PhaseState", "Scheme", "Trajectory", "integrate", "oracle_integrate", "step",
    "CapacityError",
    "GeoflowError",
    "IntegrationError",
    "LinearRegimeError",
    "NotAnosovError",
    "ReductionError",
    "SingularSetError",
    "StencilError",
    "UsageError",
    "AlgebraVector",
    "Covector",
    "GroupElement",
    "Model",
    "coadjoint",
    "commutator",
    "exponential",
    "identity",
    "inverse",
    "multiply",
    "ConservationClass",
    "IntegralSuite",
    "bracket_fd",
    "casimirs",
    "hamiltonian",
    "left_momentum",
    "nil_xi",
    "nil_zeta",
    "sol_suite",
    "LatticeSpec",
    "QuadraticField",
    "fundamental_unit",
    "lattice_for",
    "monodromy_matrix",
    "monodromy_stretch",
    "reduce",
    "sol_lattice",
    "DriftReport",
    "RotationEstimate",
    "SectionSpec",
    "drift_report",
    "lyapunov_max",
    "poincare_section",
    "recurrence_time",
    "rotation_vector",
]
