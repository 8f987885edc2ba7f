"""Numerical laboratory for boundary Rellich inequalities of harmonic functions below periodic graphs."""

from .conformal import ConformalBoundary, ConformalSolveError, pullback, pushforward, theodorsen_solve
from .dtn import (BoundaryTraces, EllipticConfig, compute_traces, dtn_conformal, dtn_elliptic,
                  gradient_trace_sq, harmonic_oracle, traces_from_G)
from .rellich import (IdentityReport, InequalityReport, check_coro_1_6, check_thm_1_1,
                      check_thm_1_5, check_thm_1_7, conformal_weights, flux_residual,
                      l1_failure_demo, rellich_identity_1d)
from .spectral import GridError, PeriodicGrid, SampledField, fourier_series
from .surface import SurfaceGeometry, build_surface, curvature

__version__ = "0.1.0"

__all__ = [
    "BoundaryTraces", "ConformalBoundary", "ConformalSolveError", "EllipticConfig", "GridError",
    "IdentityReport", "InequalityReport", "PeriodicGrid", "SampledField", "SurfaceGeometry",
    "build_surface", "check_coro_1_6", "check_thm_1_1", "check_thm_1_5", "check_thm_1_7",
    "compute_traces", "conformal_weights", "curvature", "dtn_conformal", "dtn_elliptic",
    "flux_residual", "fourier_series", "gradient_trace_sq", "harmonic_oracle", "l1_failure_demo",
    "pullback", "pushforward", "rellich_identity_1d", "theodorsen_solve", "traces_from_G",
]
