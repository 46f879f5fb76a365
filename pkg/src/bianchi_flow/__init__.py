"""Normalized Ricci flow and its time reversal on Bianchi-class 3-geometries.

The core is functional: ``geometry`` (classes and curvatures), ``flow``
(right-hand sides), ``oracle`` (closed forms and asymptotic laws),
``integrate`` (adaptive integration into blow-up) and ``analyze`` (fits,
classification, invariants). ``estimators`` wraps the pipeline for
scikit-learn; ``cli`` is the command-line front end.
"""
from .analyze import (
    BlowupReport,
    ExponentFit,
    SL2RClassification,
    SubRiemannianLimit,
    analyze_trajectory,
    classify_sl2r,
    estimate_eta,
    fit_exponents,
    invariant_report,
    locate_boundary,
    ratio_family,
    subriemannian_limit,
)
from .exceptions import (
    BianchiFlowError,
    DomainError,
    InconsistentInitialData,
    InsufficientData,
    InvalidInput,
    NormalizationViolation,
    SameLabel,
    UnknownCase,
    WrongCase,
)
from .flow import Direction, FlowSpec, rhs, rhs_from_curvatures
from .geometry import BianchiClass, Curvatures, MetricState, scalar_curvature, sectional_curvatures
from .integrate import (
    Controls,
    IntegrationFailure,
    Terminal,
    Trajectory,
    canonicalize,
    estimate_blowup_time,
    integrate,
    scaling_check,
)
from .oracle import asymptotic_law, e11_symmetric, fixed_point, nil_solution

__version__ = "0.1.0"
