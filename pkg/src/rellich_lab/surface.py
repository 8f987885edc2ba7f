"""Geometry of the graph boundary ``y = h(x)``."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .spectral import (
    GridError,
    PeriodicGrid,
    SampledField,
    derivative,
    fourier_series,
    gradient,
)


class UnderResolvedWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class SurfaceGeometry:
    """Spectrally derived fields of a periodic graph.

    ``omega`` is the surface-measure density ``sqrt(1 + |grad h|^2)``.  The
    angle ``theta`` and curvature ``kappa`` exist in one dimension only and
    are ``None`` otherwise.
    """

    grid: PeriodicGrid
    h: SampledField
    grad_h: tuple[SampledField, ...]
    omega: SampledField
    theta: SampledField | None = None
    kappa: SampledField | None = None
    spec: tuple | None = None

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def h_x(self) -> SampledField:
        return self.grad_h[0]

    @property
    def grad_sq(self) -> np.ndarray:
        return sum(g.values ** 2 for g in self.grad_h)

    @property
    def max_slope(self) -> float:
        return float(np.max(np.sqrt(self.grad_sq)))

    def normal(self) -> np.ndarray:
        """Unit normal ``(-grad h, 1) / omega``, stacked along the first axis."""
        comps = [-g.values / self.omega.values for g in self.grad_h]
        comps.append(1.0 / self.omega.values)
        return np.stack(comps)

    def tangent(self) -> np.ndarray:
        """Unit tangent ``(1, h_x) / omega`` (d = 1)."""
        if self.dim != 1:
            raise GridError("tangent vector is only defined for d = 1")
        return np.stack([1.0 / self.omega.values, self.h_x.values / self.omega.values])


def _tail_energy_fraction(h: SampledField) -> float:
    fh = np.abs(np.fft.fftn(h.values - h.mean())) ** 2
    total = fh.sum()
    if total == 0.0:
        return 0.0
    mask = np.zeros(h.grid.shape, dtype=bool)
    for axis, m in enumerate(h.grid.sizes):
        n = np.abs(h.grid.wavenumbers(axis))
        shape = [1] * h.grid.dim
        shape[axis] = -1
        mask |= (n > m / 3).reshape(shape)
    return float(fh[mask].sum() / total)


def build_surface(h, grid: PeriodicGrid | None = None) -> SurfaceGeometry:
    """Build the surface geometry from samples or from a Fourier spec.

    ``h`` is either a :class:`SampledField` or a list of
    ``(wavenumber, cos_coeff, sin_coeff)`` triples (in which case ``grid``
    is required).
    """
    spec = None
    if not isinstance(h, SampledField):
        if grid is None:
            raise GridError("a grid is required when h is given as a Fourier spec")
        spec = tuple(tuple(t) for t in h)
        h = fourier_series(grid, spec)
    grid = h.grid
    if _tail_energy_fraction(h) > 1e-6:
        warnings.warn("surface carries more than 1e-6 of its energy in the top third "
                      "of the spectrum; derivatives may be under-resolved",
                      UnderResolvedWarning, stacklevel=2)
    grad_h = gradient(h)
    omega = grid.field(np.sqrt(1.0 + sum(g.values ** 2 for g in grad_h)))
    theta = kappa = None
    if grid.dim == 1:
        hx = grad_h[0].values
        theta = grid.field(np.arctan(hx))
        kappa = derivative(grid.field(hx / omega.values))
    return SurfaceGeometry(grid, h, grad_h, omega, theta, kappa, spec)


def curvature(s: SurfaceGeometry) -> SampledField:
    """Curvature ``d/dx (h_x / sqrt(1 + h_x^2))`` in divergence form."""
    if s.dim != 1:
        raise GridError("curvature is only implemented for d = 1")
    return s.kappa


def curvature_nondivergence(s: SurfaceGeometry) -> SampledField:
    """``h_xx / (1 + h_x^2)^(3/2)``; used only to cross-check :func:`curvature`."""
    if s.dim != 1:
        raise GridError("curvature is only implemented for d = 1")
    hxx = derivative(s.h_x).values
    return s.grid.field(hxx / s.omega.values ** 3)


def flat_surface(grid: PeriodicGrid) -> SurfaceGeometry:
    return build_surface(grid.constant(0.0))


def surface_from_spec(grid: PeriodicGrid, spec: Sequence) -> SurfaceGeometry:
    return build_surface(list(spec), grid)
