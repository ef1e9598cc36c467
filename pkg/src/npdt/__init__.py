"""Desk-scale toolkit for nonlocal logistic population models.

Construction and validation of model instances, positive equilibria through
principal eigenpairs, reduction to the normalized problem whose equilibrium
is the constant 1, local/global stability certificates with spectral and
alignment conditions, secular-function spectral localization of the rank-one
competition term, adaptive time integration with runtime verification of the
mass bound and persistence, and parameter scans for stability crossings.
"""

from .errors import (
    BlowUpError,
    DimensionError,
    DomainError,
    InputError,
    NoEquilibriumError,
    NpdtError,
    NumericError,
    PositivityError,
    SingularShiftError,
    StiffnessError,
    StructureError,
)
from .model import (
    FellerMatrix,
    GridSpec,
    KernelSpec,
    Measure,
    ModelSpec,
    ValidationReport,
    build_counterexample,
    build_nonlocal_diffusion,
    inner_product,
    load_model,
    model_from_dict,
    model_to_dict,
    norm1,
    norm2,
    save_model,
    validate_model,
)
from .operators import (
    SpectrumReport,
    adjoint,
    normality_defect,
    principal_eigenpair,
    resolvent_solve,
    self_adjointness_defect,
    spectrum,
)
from .stationary import (
    NonexistenceReport,
    StationaryState,
    characteristic_integral,
    characteristic_integral_quadrature,
    nonexistence_report,
    solve_stationary,
    stationarity_residual,
)
from .reduction import ReducedModel, reduce_model, reduced_spec, verify_reduced
from .stability import (
    ConditionCheck,
    KreinReport,
    StabilityReport,
    check_angle_condition,
    check_gas,
    check_las1,
    check_las2,
    check_las3,
    check_sigma_condition,
    estimate_cs_condition,
    krein_characteristic,
    krein_roots,
    linearization,
    spectral_gap_sigma2,
    stability_verdict,
)
from .dynamics import (
    AffineFamily,
    DiagnosticsSeries,
    LimitSetVerdict,
    ScanCrossing,
    ScanResult,
    Trajectory,
    apriori_l1_bound,
    check_apriori_bound,
    check_persistence,
    classify_limit_set,
    default_horizon,
    diagnostics,
    family_from_dict,
    hopf_scan,
    integrate,
)

__version__ = "0.1.0"
