"""Boundary trace of the periodic conformal map from the lower half-plane.

The map is written ``Z(alpha) = alpha + u(alpha) + i v(alpha)`` with ``u`` and
``v`` periodic.  Analyticity of ``Z(z) - z`` in the lower half-plane forces
``u = H(v - mean v)`` and the graph condition forces ``v = h(alpha + u)``, so
``u`` is a fixed point of ``u -> H(h(id + u) - mean)`` (a Theodorsen-type
iteration).  The normalisation ``mean(u) = 0`` is built in.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .spectral import (
    GridError,
    PeriodicGrid,
    SampledField,
    derivative,
    eval_trig,
    hilbert,
    invert_monotone_circle_map,
    refined_samples,
)
from .surface import SurfaceGeometry, UnderResolvedWarning

log = logging.getLogger(__name__)


class ConformalSolveError(RuntimeError):
    """The fixed-point iteration failed (no convergence or lost monotonicity)."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True, eq=False)
class ConformalBoundary:
    """Boundary correspondence ``x(alpha) = alpha + u(alpha)``, ``y(alpha) = v(alpha)``.

    Fields named after ``alpha`` live on ``alpha_grid``, which is the
    surface grid ``x_grid`` refined by an integer factor when the map needs
    more modes than the data.  ``alpha_of_x`` is the inverse map sampled on
    ``x_grid``.
    """

    alpha_grid: PeriodicGrid
    u: SampledField
    v: SampledField
    x_alpha: SampledField
    v_alpha: SampledField
    jac: SampledField
    g: SampledField
    residual: float
    iterations: int
    alpha_of_x: SampledField
    x_grid: PeriodicGrid

    @property
    def x(self) -> np.ndarray:
        """Boundary abscissae ``x(alpha_j) = alpha_j + u(alpha_j)``."""
        return self.alpha_grid.nodes() + self.u.values

    @property
    def oversample(self) -> int:
        return self.alpha_grid.sizes[0] // self.x_grid.sizes[0]

    @property
    def jac_bounds(self) -> tuple[float, float]:
        return float(self.jac.values.min()), float(self.jac.values.max())


# the map counts as resolved once its upper third of modes is below this (relative) level
TAIL_TOL = 1e-13
MAX_OVERSAMPLE = 16


def _fixed_point_target(h: SampledField, grid: PeriodicGrid, alpha: np.ndarray,
                        u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    v = eval_trig(h, alpha + u)
    return hilbert(grid.field(v - v.mean())).values, v


def spectral_tail(f: SampledField) -> float:
    """Largest Fourier coefficient in the upper third of the band, relative to the largest overall."""
    c = np.abs(np.fft.rfft(f.values)) / f.values.size
    peak = float(np.max(c[1:])) if c.size > 1 else 0.0
    if peak == 0.0:
        return 0.0
    return float(np.max(c[c.size * 2 // 3:])) / peak


def _iterate(h: SampledField, grid: PeriodicGrid, u: np.ndarray, tol: float, max_iter: int,
             relax: float) -> tuple[np.ndarray, np.ndarray, float, int]:
    # h keeps its own (coarser) grid: its interpolant is the same function at a fraction of the cost
    alpha = grid.nodes()
    residual = np.inf
    for it in range(max_iter + 1):
        target, v = _fixed_point_target(h, grid, alpha, u)
        residual = float(np.max(np.abs(u - target)))
        if residual <= tol:
            return u, v, residual, it
        if it == max_iter:
            raise ConformalSolveError(
                f"fixed point did not converge in {max_iter} iterations "
                f"(residual {residual:.3e}); try a smaller relax or the fd backend",
                residual, it)
        u = (1.0 - relax) * u + relax * target
        x_alpha = 1.0 + derivative(grid.field(u)).values
        if np.min(x_alpha) <= 0.0:
            raise ConformalSolveError(
                f"iterate {it + 1} lost monotonicity (min x_alpha {np.min(x_alpha):.3e}); "
                f"try a smaller relax", residual, it + 1)
    raise AssertionError("unreachable")  # pragma: no cover


def theodorsen_solve(s: SurfaceGeometry, tol: float = 1e-13, max_iter: int = 2000,
                     relax: float = 0.5, oversample: int | None = None) -> ConformalBoundary:
    """Solve for the conformal boundary correspondence by relaxed fixed-point iteration.

    Parameters
    ----------
    s : SurfaceGeometry
        One-dimensional surface.
    tol : float
        Target for the sup-norm fixed-point defect ``max|u - H(h(id+u) - mean)|``.
    max_iter : int
        Iteration cap per resolution level; exceeding it raises
        :class:`ConformalSolveError`.
    relax : float
        Under-relaxation weight in ``(0, 1]``.
    oversample : int, optional
        Fixed ratio of alpha-grid to x-grid points.  By default the ratio
        starts at 1 and doubles (warm-started) until the relative spectral
        tail of ``u`` is below ``TAIL_TOL``; steep surfaces need more modes
        for the map than for ``h`` itself.
    """
    if s.dim != 1:
        raise GridError("conformal map construction requires d = 1")
    if not 0.0 < relax <= 1.0:
        raise ValueError(f"relax must lie in (0, 1], got {relax}")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if oversample is not None and oversample < 1:
        raise ValueError("oversample must be a positive integer")

    m = s.grid.sizes[0]
    factor = oversample or 1
    u, prev = None, None
    total = 0
    while True:
        grid = PeriodicGrid((factor * m,))
        u0 = np.zeros(grid.shape) if u is None else refined_samples(prev.field(u), 2)
        u, v, residual, it = _iterate(s.h, grid, u0, tol, max_iter, relax)
        total += it
        tail = spectral_tail(grid.field(u))
        if oversample is not None or tail <= TAIL_TOL:
            break
        if factor >= MAX_OVERSAMPLE:
            warnings.warn(f"conformal map unresolved at {factor * m} points "
                          f"(relative spectral tail {tail:.1e})", UnderResolvedWarning, stacklevel=2)
            break
        prev = grid
        factor *= 2
    log.debug("theodorsen_solve: %d points, %d iterations, residual %.3e", factor * m, total, residual)

    u_f = grid.field(u)
    v_f = grid.field(v)
    x_alpha = 1.0 + derivative(u_f).values
    v_alpha = derivative(v_f).values
    jac = np.hypot(x_alpha, v_alpha)
    g = np.arctan2(v_alpha, x_alpha)
    return ConformalBoundary(
        alpha_grid=grid,
        u=u_f,
        v=v_f,
        x_alpha=grid.field(x_alpha),
        v_alpha=grid.field(v_alpha),
        jac=grid.field(jac),
        g=grid.field(g),
        residual=residual,
        iterations=total,
        alpha_of_x=invert_monotone_circle_map(u_f, grid=s.grid),
        x_grid=s.grid,
    )


def pullback(cb: ConformalBoundary, f_on_x: SampledField) -> SampledField:
    """``alpha -> f(x(alpha))`` sampled on the alpha-grid."""
    if f_on_x.grid != cb.x_grid:
        raise GridError("field grid does not match the conformal x-grid")
    return cb.alpha_grid.field(eval_trig(f_on_x, cb.x))


def pushforward(cb: ConformalBoundary, f_on_alpha: SampledField) -> SampledField:
    """``x -> f(alpha(x))`` sampled on the x-grid (inverse of :func:`pullback`)."""
    if f_on_alpha.grid != cb.alpha_grid:
        raise GridError("field grid does not match the conformal alpha-grid")
    return cb.x_grid.field(eval_trig(f_on_alpha, cb.alpha_of_x.values))
