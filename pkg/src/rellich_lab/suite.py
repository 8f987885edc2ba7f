"""Reproducible random test surfaces and boundary data."""

from __future__ import annotations

import numpy as np

from .spectral import PeriodicGrid, fourier_series


def max_slope(spec, dim: int = 1, m: int = 512) -> float:
    """Sup of ``|grad h|`` for a Fourier spec, sampled on a fine grid."""
    if not spec:
        return 0.0
    grid = PeriodicGrid((m,) * dim)
    grads = [fourier_series(grid, spec, derivative_axis=a).values for a in range(dim)]
    return float(np.max(np.sqrt(sum(g ** 2 for g in grads))))


def scale_to_slope(spec, slope: float, dim: int = 1) -> list:
    cur = max_slope(spec, dim)
    if cur == 0.0:
        return [tuple(t) for t in spec]
    f = slope / cur
    return [(k, a * f, b * f) for k, a, b in spec]


def _wavevectors(dim: int, n_modes: int) -> list:
    if dim == 1:
        return list(range(1, n_modes + 1))
    ks = [(k1, k2) for k1 in range(0, n_modes + 1) for k2 in range(-n_modes, n_modes + 1)
          if (k1, k2) > (0, 0) and k1 * k1 + k2 * k2 <= n_modes * n_modes]
    return ks


def random_surface_spec(rng: np.random.Generator, n_modes: int = 4, slope_cap: float = 0.75,
                        dim: int = 1, min_fraction: float = 0.1) -> list:
    """Random smooth surface with ``max |grad h|`` uniform in ``[min_fraction, 1] * slope_cap``."""
    spec = []
    for k in _wavevectors(dim, n_modes):
        kn = float(np.linalg.norm(np.atleast_1d(k)))
        a, b = rng.normal(size=2) / kn ** 2
        spec.append((k, float(a), float(b)))
    return scale_to_slope(spec, rng.uniform(min_fraction, 1.0) * slope_cap, dim)


def random_zeta_spec(rng: np.random.Generator, n_modes: int = 4, dim: int = 1) -> list:
    spec = []
    for k in _wavevectors(dim, n_modes):
        kn = float(np.linalg.norm(np.atleast_1d(k)))
        a, b = rng.normal(size=2) / kn
        spec.append((k, float(a), float(b)))
    return spec


def standard_surfaces(n: int = 10, seed: int = 2024, slope_cap: float = 0.75) -> list[list]:
    """The fixed suite of ``n`` surfaces with modes ``k <= 4`` used by the oracle tests."""
    rng = np.random.default_rng(seed)
    return [random_surface_spec(rng, 4, slope_cap) for _ in range(n)]
