"""Derivative-free search for large inequality ratios over Fourier-parametrised data."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .conformal import ConformalSolveError
from .dtn import EllipticConfig, compute_traces
from .rellich import BOUNDED, INEQUALITIES, check_coro_1_6, inequality_report
from .spectral import GridError, PeriodicGrid, fourier_series
from .suite import max_slope
from .surface import build_surface

log = logging.getLogger(__name__)

COEFF_BOX = (-0.5, 0.5)
ANOMALY_TOL = 1e-6


class AnomalyError(RuntimeError):
    """A bounded inequality was observed above its constant."""

    def __init__(self, message: str, params: "FourierParams", ratio: float):
        super().__init__(message)
        self.params = params
        self.ratio = ratio


@dataclass(frozen=True)
class FourierParams:
    h_coeffs: tuple = ()
    zeta_coeffs: tuple = ()
    slope_cap: float = 0.75

    def __post_init__(self):
        for k, _, _ in tuple(self.h_coeffs) + tuple(self.zeta_coeffs):
            if np.any(np.atleast_1d(k) < 0) or not np.any(np.atleast_1d(k)):
                raise ValueError(f"wavenumbers must be >= 1 (mean of h is fixed), got {k!r}")
        object.__setattr__(self, "h_coeffs", tuple(tuple(t) for t in self.h_coeffs))
        object.__setattr__(self, "zeta_coeffs", tuple(tuple(t) for t in self.zeta_coeffs))

    @classmethod
    def from_vector(cls, x, n_modes_h: int, n_modes_zeta: int, slope_cap: float) -> "FourierParams":
        x = np.asarray(x, dtype=float)
        h = [(k + 1, x[2 * k], x[2 * k + 1]) for k in range(n_modes_h)]
        off = 2 * n_modes_h
        z = [(k + 1, x[off + 2 * k], x[off + 2 * k + 1]) for k in range(n_modes_zeta)]
        return cls(tuple(h), tuple(z), slope_cap)

    def to_dict(self) -> dict:
        return {"h_coeffs": [list(t) for t in self.h_coeffs],
                "zeta_coeffs": [list(t) for t in self.zeta_coeffs],
                "slope_cap": self.slope_cap}


@dataclass(frozen=True)
class Evaluation:
    ratio: float
    rejected: bool
    reason: str = ""


@dataclass
class SearchResult:
    best_params: FourierParams
    best_ratio: float
    trace: list = field(default_factory=list)
    evaluations: int = 0
    rejected: int = 0


def _dim_of(coeffs) -> int:
    return np.atleast_1d(coeffs[0][0]).size if coeffs else 1


def evaluate(params: FourierParams, ineq: str, p: float = 2.0, backend: str = "conformal",
             grid: PeriodicGrid | None = None, fd: EllipticConfig | None = None) -> Evaluation:
    """Ratio of the named inequality for ``params``, with a soft slope barrier."""
    if ineq not in INEQUALITIES:
        raise KeyError(f"unknown inequality {ineq!r}; expected one of {', '.join(INEQUALITIES)}")
    dim = _dim_of(params.h_coeffs or params.zeta_coeffs)
    grid = grid or PeriodicGrid((128,) * dim)
    if params.h_coeffs and max_slope(params.h_coeffs, dim) > params.slope_cap:
        return Evaluation(0.0, True, "slope cap")
    s = build_surface(list(params.h_coeffs), grid) if params.h_coeffs else build_surface(grid.constant(0.0))
    zeta = fourier_series(grid, params.zeta_coeffs)
    try:
        if ineq == "curvature":
            report = check_coro_1_6(s, backend, fd=fd)
        else:
            t = compute_traces(s, zeta, backend, fd=fd)
            report = inequality_report(t, ineq, p)
    except ConformalSolveError as exc:
        return Evaluation(0.0, True, f"conformal solve failed: {exc}")
    return Evaluation(report.ratio, False)


def objective(params: FourierParams, ineq: str, p: float = 2.0, backend: str = "conformal",
              grid: PeriodicGrid | None = None, fd: EllipticConfig | None = None) -> float:
    return evaluate(params, ineq, p, backend, grid, fd).ratio


class _BudgetExhausted(Exception):
    pass


def optimize(ineq: str, p: float = 2.0, n_modes_h: int = 2, n_modes_zeta: int = 2,
             budget: int = 500, seed: int = 0, slope_cap: float = 0.75,
             backend: str = "conformal", m: int = 128, n_restarts: int | None = None,
             fd: EllipticConfig | None = None) -> SearchResult:
    """Nelder-Mead with restarts from Latin-hypercube seeds in the coefficient box.

    Deterministic for a given ``seed``.  If a bounded inequality ever exceeds
    ``1 + 1e-6`` an :class:`AnomalyError` is raised instead of a result.
    """
    if budget < 50:
        raise ValueError("budget must be at least 50 evaluations")
    if ineq not in INEQUALITIES:
        raise KeyError(f"unknown inequality {ineq!r}")
    if slope_cap == 0.0:
        n_modes_h = 0  # the only admissible surface is flat
    grid = PeriodicGrid((m,))
    ndim = 2 * (n_modes_h + n_modes_zeta)
    n_restarts = n_restarts or max(1, budget // 125)
    lo, hi = COEFF_BOX
    sampler = qmc.LatinHypercube(d=ndim, seed=np.random.default_rng(seed))
    starts = qmc.scale(sampler.random(n_restarts), [lo] * ndim, [hi] * ndim)

    # pull each seed's surface part radially inside the slope cap
    nh = 2 * n_modes_h
    for x0 in starts:
        if nh:
            slope = max_slope(FourierParams.from_vector(x0, n_modes_h, 0, slope_cap).h_coeffs)
            if slope > slope_cap:
                x0[:nh] *= 0.95 * slope_cap / slope

    state = {"best": -math.inf, "best_x": starts[0], "n": 0, "rejected": 0}
    trace: list[tuple[int, float]] = []

    def f(x):
        if state["n"] >= budget:
            raise _BudgetExhausted
        params = FourierParams.from_vector(x, n_modes_h, n_modes_zeta, slope_cap)
        ev = evaluate(params, ineq, p, backend, grid, fd)
        state["n"] += 1
        state["rejected"] += ev.rejected
        if ineq in BOUNDED and ev.ratio > 1.0 + ANOMALY_TOL:
            raise AnomalyError(f"{ineq} ratio {ev.ratio!r} exceeds its constant", params, ev.ratio)
        if ev.ratio > state["best"]:
            state["best"] = ev.ratio
            state["best_x"] = np.array(x, dtype=float)
        trace.append((state["n"], state["best"]))
        return -ev.ratio

    per_run = max(ndim + 1, budget // n_restarts)
    for x0 in starts:
        if state["n"] >= budget:
            break
        try:
            minimize(f, x0, method="Nelder-Mead", bounds=[COEFF_BOX] * ndim,
                     options={"maxfev": per_run, "xatol": 1e-6, "fatol": 1e-12})
        except _BudgetExhausted:
            break
        log.debug("restart done: %d evaluations, best %.6f", state["n"], state["best"])

    best = FourierParams.from_vector(state["best_x"], n_modes_h, n_modes_zeta, slope_cap)
    return SearchResult(best, state["best"], trace, state["n"], state["rejected"])


def sweep(amplitude_grid, wavenumber_grid, ineq: str, p: float = 2.0,
          backend: str = "conformal", zeta_spec=((1, 1.0, 0.0),), m: int = 128,
          fd: EllipticConfig | None = None) -> list[tuple[float, int, float]]:
    """Ratio on the surfaces ``h = a cos(k x)`` for every ``(a, k)`` in the grid product.

    Cells where the conformal solve fails get ratio ``nan``.
    """
    grid = PeriodicGrid((m,))
    rows = []
    for a in amplitude_grid:
        for k in wavenumber_grid:
            h = ((int(k), float(a), 0.0),) if a != 0 else ()
            params = FourierParams(h, tuple(zeta_spec), slope_cap=math.inf)
            try:
                ev = evaluate(params, ineq, p, backend, grid, fd)
                ratio = math.nan if ev.rejected else ev.ratio
            except GridError:
                ratio = math.nan
            rows.append((float(a), int(k), ratio))
    return rows
