"""Rellich-type identities and inequalities evaluated on boundary traces.

Inequalities are reported as ``ratio = lhs / (constant * rhs)`` so a ratio
at most one means the bound holds; ``0/0`` counts as ratio zero.  Identities
are reported as ``|value| / scale`` where ``scale`` is the integral of the
absolute values of the individual integrand terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .conformal import ConformalBoundary, theodorsen_solve
from .dtn import (
    BoundaryTraces,
    EllipticConfig,
    dtn_conformal,
    dtn_elliptic,
    gradient_trace_sq,
)
from .spectral import (
    GridError,
    PeriodicGrid,
    SampledField,
    derivative,
    h_minus1_norm,
    hilbert,
    integrate,
    lp_norm,
)
from .surface import SurfaceGeometry

# below this both sides of an inequality are treated as exactly zero
DEGENERATE = 1e-24

# tolerated relative mean of G(h) kappa per backend
MEAN_TOL = {"conformal": 1e-8, "fd": 1e-3}


@dataclass(frozen=True)
class InequalityReport:
    name: str
    p: float
    lhs: float
    rhs_times_constant: float
    constant: float
    ratio: float
    passed: bool
    tol_rel: float
    limit: float

    @property
    def rhs(self) -> float:
        return self.rhs_times_constant / self.constant


@dataclass(frozen=True)
class IdentityReport:
    name: str
    value: float
    scale: float
    normalized: float
    passed: bool
    tol: float


def make_report(name: str, lhs: float, rhs: float, constant: float, tol_rel: float = 1e-6,
                p: float = 2.0, limit: float | None = None) -> InequalityReport:
    """Build a report; ``limit`` defaults to ``1 + tol_rel`` on the ratio."""
    lhs, rhs = float(lhs), float(rhs)
    if lhs < 0 or rhs < 0:
        raise ValueError(f"{name}: both sides must be nonnegative (lhs={lhs}, rhs={rhs})")
    rhs_c = constant * rhs
    if lhs <= DEGENERATE and rhs_c <= DEGENERATE:
        ratio = 0.0
    elif rhs_c == 0.0:
        ratio = math.inf
    else:
        ratio = lhs / rhs_c
    if limit is None:
        limit = 1.0 + tol_rel
    return InequalityReport(name, float(p), lhs, rhs_c, float(constant), ratio,
                            bool(ratio <= limit), tol_rel, float(limit))


def _identity(name: str, terms: list[np.ndarray], signs: list[float], grid: PeriodicGrid,
              tol: float) -> IdentityReport:
    value = integrate(grid.field(sum(s * t for s, t in zip(signs, terms))))
    scale = integrate(grid.field(sum(np.abs(t) for t in terms)))
    normalized = abs(value) / max(scale, np.finfo(float).eps)
    return IdentityReport(name, value, scale, normalized, bool(normalized <= tol), tol)


def flux_residual(t: BoundaryTraces, tol: float = 1e-8) -> IdentityReport:
    """Flux of the divergence-free field built from ``d_y phi`` and ``grad phi``.

    Evaluates ``R = integral (B^2 - |V|^2 - 2 B grad h . V) dx``, which vanishes
    for traces of a true harmonic function.
    """
    s = t.surface
    b = t.b.values
    v_sq = sum(vi.values ** 2 for vi in t.v)
    cross = 2.0 * b * sum(gh.values * vi.values for gh, vi in zip(s.grad_h, t.v))
    return _identity("flux", [b ** 2, v_sq, cross], [1.0, -1.0, -1.0], t.grid, tol)


def rellich_identity_1d(t: BoundaryTraces, tol: float = 1e-8) -> IdentityReport:
    """One-dimensional Rellich identity written in ``zeta_x`` and ``G(h) zeta``."""
    s = t.surface
    if s.dim != 1:
        raise GridError("the one-dimensional identity needs d = 1")
    w = 1.0 / (1.0 + s.h_x.values ** 2)
    zx = derivative(t.zeta).values
    g = t.g_zeta.values
    terms = [zx ** 2 * w, g ** 2 * w, 2.0 * s.h_x.values * zx * g * w]
    return _identity("rellich_1d", terms, [-1.0, 1.0, 1.0], t.grid, tol)


def _int(grid: PeriodicGrid, values: np.ndarray) -> float:
    return integrate(grid.field(values))


def check_thm_1_1(t: BoundaryTraces, tol_rel: float = 1e-6) -> tuple[InequalityReport, ...]:
    """Trace bounds with constants 40 and 41 and the two forms for ``G(h)``.

    Returns reports ``dn_sq``, ``grad_sq``, ``g_weighted`` and ``g_lipschitz``.
    """
    s, grid = t.surface, t.grid
    one_plus = 1.0 + s.grad_sq
    gz_sq = sum(g.values ** 2 for g in t.grad_zeta)
    weighted_rhs = _int(grid, one_plus ** 2 * gz_sq)
    g = t.g_zeta.values
    lip = 40.0 * (1.0 + s.max_slope ** 2) ** 3
    return (
        make_report("dn_sq", _int(grid, t.dn_phi.values ** 2), weighted_rhs, 40.0, tol_rel),
        make_report("grad_sq", integrate(gradient_trace_sq(t)), weighted_rhs, 41.0, tol_rel),
        make_report("g_weighted", _int(grid, g ** 2 / one_plus), weighted_rhs, 40.0, tol_rel),
        make_report("g_lipschitz", _int(grid, g ** 2), _int(grid, gz_sq), lip, tol_rel),
    )


def check_thm_1_5(t: BoundaryTraces, tol_rel: float = 1e-6) -> tuple[InequalityReport, InequalityReport]:
    """Both one-dimensional bounds with constant 4 and no slope dependence on the right."""
    s, grid = t.surface, t.grid
    if s.dim != 1:
        raise GridError("this check needs d = 1")
    w = 1.0 / (1.0 + s.h_x.values ** 2)
    zx_sq = derivative(t.zeta).values ** 2
    g_sq = t.g_zeta.values ** 2
    return (
        make_report("g_by_zeta_x", _int(grid, g_sq * w), _int(grid, zx_sq), 4.0, tol_rel),
        make_report("zeta_x_by_g", _int(grid, zx_sq * w), _int(grid, g_sq), 4.0, tol_rel),
    )


def curvature_traces(s: SurfaceGeometry, backend: Literal["conformal", "fd"] = "conformal",
                     cb: ConformalBoundary | None = None,
                     fd: EllipticConfig | None = None) -> BoundaryTraces:
    """Traces of the harmonic extension of the curvature ``kappa``."""
    if s.dim != 1:
        raise GridError("curvature traces need d = 1")
    if backend == "conformal":
        cb = cb if cb is not None else theodorsen_solve(s)
        return dtn_conformal(cb, s, s.kappa)
    if backend == "fd":
        return dtn_elliptic(s, s.kappa, fd)
    raise ValueError(f"unknown backend {backend!r}")


def check_coro_1_6(s: SurfaceGeometry, backend: Literal["conformal", "fd"] = "conformal",
                   tol_rel: float = 1e-6, cb: ConformalBoundary | None = None,
                   fd: EllipticConfig | None = None, mean_tol: float | None = None) -> InequalityReport:
    """``||G(h) kappa||_{H^-1} <= 2 ||theta_x||_{L^2}``.

    The mean of ``G(h) kappa`` is zero up to discretisation error; it is
    checked against ``mean_tol`` (relative to the L^2 norm; default ``1e-8``
    for the conformal backend and ``1e-3`` for finite differences) and then
    removed before taking the ``H^-1`` norm.
    """
    if mean_tol is None:
        mean_tol = MEAN_TOL[backend]
    t = curvature_traces(s, backend, cb, fd)
    gk = t.g_zeta
    l2 = lp_norm(gk)
    if abs(gk.mean()) * math.sqrt(2.0 * math.pi) > mean_tol * max(l2, DEGENERATE):
        raise ValueError(f"G(h) kappa has mean {gk.mean():.3e}, not in the range of a DtN map")
    lhs = h_minus1_norm(gk.with_values(gk.values - gk.mean()))
    rhs = lp_norm(derivative(s.theta))
    return make_report("curvature", lhs, rhs, 2.0, tol_rel)


def check_thm_1_7(t: BoundaryTraces, p: float, tol_rel: float = 1e-6
                  ) -> tuple[InequalityReport, InequalityReport]:
    """Weighted ``L^p`` comparison of normal and tangential derivatives.

    The constant is reported as 1, so each ratio is the empirical constant.
    At ``p = 2`` both reduce to the constant-4 bounds and must not exceed
    ``4 (1 + tol_rel)``; for ``p < 2`` passing only means the ratio is finite.
    """
    if not 1.0 < p <= 2.0:
        raise ValueError(f"p must lie in (1, 2], got {p}")
    s, grid = t.surface, t.grid
    if s.dim != 1:
        raise GridError("this check needs d = 1")
    om = s.omega.values
    dn = np.abs(t.dn_phi.values) ** p
    dt = np.abs(t.dt_phi.values) ** p
    # d sigma = omega dx and (1 + h_x^2)^((p-1)/2) = omega^(p-1)
    limit = 4.0 * (1.0 + tol_rel) if p == 2.0 else math.inf
    w1 = make_report("lp_normal", _int(grid, dn * om ** (2.0 - p)), _int(grid, dt * om ** p),
                     1.0, tol_rel, p, limit)
    w2 = make_report("lp_tangential", _int(grid, dt * om ** (2.0 - p)), _int(grid, dn * om ** p),
                     1.0, tol_rel, p, limit)
    if p != 2.0:
        w1 = _finite_only(w1)
        w2 = _finite_only(w2)
    return w1, w2


def _finite_only(r: InequalityReport) -> InequalityReport:
    return InequalityReport(r.name, r.p, r.lhs, r.rhs_times_constant, r.constant, r.ratio,
                            bool(math.isfinite(r.ratio)), r.tol_rel, r.limit)


def conformal_weights(cb: ConformalBoundary) -> tuple[SampledField, SampledField]:
    """Weights making the conformal form of the bound a weighted Hilbert-transform estimate.

    ``u_w = (1 + tan^2 g)^(-1/2) / |Z_alpha|`` and
    ``v_w = (1 + tan^2 g)^(1/2) / |Z_alpha|``.
    """
    sec = np.sqrt(1.0 + np.tan(cb.g.values) ** 2)
    jac = cb.jac.values
    grid = cb.alpha_grid
    return grid.field(1.0 / (sec * jac)), grid.field(sec / jac)


def fejer_kernel(grid: PeriodicGrid, n: int) -> SampledField:
    """``sum_{|k| <= n} (1 - |k|/(n+1)) e^{ikx}``: nonnegative with mean one."""
    x = grid.nodes()
    k = np.arange(1, n + 1)
    weights = 1.0 - k / (n + 1.0)
    return grid.field(1.0 + 2.0 * np.cos(np.outer(x, k)) @ weights)


def l1_failure_demo(n_list, m: int = 1024) -> list[tuple[int, float]]:
    """Growth of ``||H f||_{L^1} / ||f||_{L^1}`` for Fejer kernels ``f``.

    On the flat surface with ``zeta_x = f`` the numerator is the ``L^1`` norm
    of the normal derivative and the denominator that of the tangential one.
    ``f`` is used as is (nonnegative, ``L^1`` norm ``2 pi``); its constant
    mode is annihilated by ``H``.
    """
    grid = PeriodicGrid((m,))
    rows = []
    for n in n_list:
        n = int(n)
        if n < 2:
            raise ValueError(f"Fejer order must be >= 2, got {n}")
        if m < 8 * n:
            raise ValueError(f"order {n} is under-resolved on {m} points (need m >= {8 * n})")
        f = fejer_kernel(grid, n)
        rows.append((n, lp_norm(hilbert(f), 1.0) / lp_norm(f, 1.0)))
    return rows


# inequalities with a proven constant: a ratio above 1 signals a solver bug
BOUNDED = ("dn_sq", "grad_sq", "g_weighted", "g_lipschitz", "g_by_zeta_x", "zeta_x_by_g",
           "curvature")
EMPIRICAL = ("lp_normal", "lp_tangential")
INEQUALITIES = BOUNDED + EMPIRICAL


def inequality_report(t: BoundaryTraces, name: str, p: float = 2.0,
                      tol_rel: float = 1e-6) -> InequalityReport:
    """The report for a single named inequality evaluated on ``t``.

    ``curvature`` is not a function of the traces' data; it is evaluated on
    ``t.surface`` with the backend that produced ``t``.
    """
    if name in ("dn_sq", "grad_sq", "g_weighted", "g_lipschitz"):
        return {r.name: r for r in check_thm_1_1(t, tol_rel)}[name]
    if name in ("g_by_zeta_x", "zeta_x_by_g"):
        return {r.name: r for r in check_thm_1_5(t, tol_rel)}[name]
    if name in EMPIRICAL:
        return {r.name: r for r in check_thm_1_7(t, p, tol_rel)}[name]
    if name == "curvature":
        return check_coro_1_6(t.surface, t.backend, tol_rel)
    raise KeyError(f"unknown inequality {name!r}; expected one of {', '.join(INEQUALITIES)}")
