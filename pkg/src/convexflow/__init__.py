"""Constrained curvature flows of convex bodies on the support-function grid.

Strictly convex plane curves (n = 1) and axisymmetric surfaces (n = 2) are
stored as support functions over their outward normals and evolved by
du/dt = h(t) - phi(H), where h keeps the enclosed volume or the boundary
measure constant. The package bundles the solver, the geometric
diagnostics (isoperimetric ratio, inradius/circumradius, curvature
extremes), and audits of the monotonicity, conservation, and comparison-
ball properties such flows must satisfy.
"""

from .axisym import AxisymSupport, make_surface, principal_radii
from .axisym import measures as surface_measures
from .curves import SupportCurve, curvature_profile, make_curve
from .curves import measures as curve_measures
from .diagnostics import (
    DiagnosticsRecord,
    alexandrov_fenchel_margin,
    ball_isoperimetric_ratio,
    barrier_audit,
    conservation_crosscheck,
    monotonicity_audit,
    radii,
    record,
)
from .errors import ConvexityLost, InvalidInitialData, NumericalFailure, SpecError
from .flow import (
    ConstraintMode,
    FlowConfig,
    FlowState,
    RunResult,
    RunStatus,
    nonlocal_term,
    rhs,
    run,
    sphere_oracle,
    sphere_radius_at,
    step,
)
from .speeds import AdmissibilityReport, SpeedFunction, check_admissibility, parse_speed

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityReport", "AxisymSupport", "ConstraintMode", "ConvexityLost",
    "DiagnosticsRecord", "FlowConfig", "FlowState", "InvalidInitialData",
    "NumericalFailure", "RunResult", "RunStatus", "SpecError", "SpeedFunction",
    "SupportCurve", "alexandrov_fenchel_margin", "ball_isoperimetric_ratio",
    "barrier_audit", "check_admissibility", "conservation_crosscheck",
    "curvature_profile", "curve_measures", "make_curve", "make_surface",
    "monotonicity_audit", "nonlocal_term", "parse_speed", "principal_radii",
    "radii", "record", "rhs", "run", "sphere_oracle", "sphere_radius_at",
    "step", "surface_measures",
]
