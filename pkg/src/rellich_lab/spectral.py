"""Periodic grids and Fourier-multiplier operators on the 1- and 2-torus.

All operators act on samples at the uniform nodes ``x_j = 2*pi*j/M`` and are
exact for trigonometric polynomials resolved by the grid.  Fourier
coefficients use the normalisation ``f(x) = sum_n fhat(n) exp(i n x)``, i.e.
``fhat = fft(f) / M``, so that Parseval reads
``integral f^2 dx = 2*pi * sum |fhat(n)|^2`` in one dimension.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * np.pi


class GridError(ValueError):
    """Raised for grids or fields that violate the discretisation contract."""


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform tensor grid on ``[0, 2pi)^d`` with ``d`` in {1, 2}."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(m) for m in self.sizes)
        if len(sizes) not in (1, 2):
            raise GridError(f"only d = 1 or d = 2 supported, got d = {len(sizes)}")
        for m in sizes:
            if m < 8 or m % 2:
                raise GridError(f"grid sizes must be even and >= 8, got {m}")
        object.__setattr__(self, "sizes", sizes)

    @classmethod
    def uniform(cls, m: int, dim: int = 1) -> "PeriodicGrid":
        return cls((m,) * dim)

    @property
    def dim(self) -> int:
        return len(self.sizes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.sizes

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(TWO_PI / m for m in self.sizes)

    def nodes(self, axis: int = 0) -> np.ndarray:
        m = self.sizes[axis]
        return TWO_PI * np.arange(m) / m

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays broadcast to the full grid shape (``ij`` indexing)."""
        return tuple(np.meshgrid(*(self.nodes(a) for a in range(self.dim)), indexing="ij"))

    def wavenumbers(self, axis: int = 0) -> np.ndarray:
        m = self.sizes[axis]
        return np.fft.fftfreq(m, d=1.0 / m)

    def field(self, values) -> "SampledField":
        return SampledField(self, values)

    def constant(self, c: float) -> "SampledField":
        return SampledField(self, np.full(self.shape, float(c)))


@dataclass(frozen=True, eq=False)
class SampledField:
    """Real samples of a periodic function on a :class:`PeriodicGrid`."""

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise GridError(f"values of shape {vals.shape} do not match grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise GridError("field contains non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def with_values(self, values) -> "SampledField":
        return SampledField(self.grid, values)

    def mean(self) -> float:
        return float(np.mean(self.values))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Fourier coefficients of a real field in numpy FFT ordering.

    ``coeffs[idx]`` multiplies ``exp(i n.x)`` where ``n`` is read off
    ``wavenumbers`` at the same index.
    """

    grid: PeriodicGrid
    coeffs: np.ndarray

    @property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*(self.grid.wavenumbers(a) for a in range(self.grid.dim)),
                                 indexing="ij"))

    def coefficient(self, n) -> complex:
        idx = tuple(int(k) % m for k, m in zip(np.atleast_1d(n), self.grid.sizes))
        return complex(self.coeffs[idx])


def spectrum(f: SampledField) -> Spectrum:
    return Spectrum(f.grid, np.fft.fftn(f.values) / f.values.size)


def from_spectrum(s: Spectrum) -> SampledField:
    return SampledField(s.grid, np.real(np.fft.ifftn(s.coeffs * s.coeffs.size)))


def _check_axis(f: SampledField, axis: int) -> None:
    if not 0 <= axis < f.grid.dim:
        raise GridError(f"axis {axis} out of range for a {f.grid.dim}-d grid")


def _require_1d(f: SampledField, op: str) -> None:
    if f.grid.dim != 1:
        raise GridError(f"{op} is defined for d = 1 only")


def _odd_symbol(m: int) -> np.ndarray:
    """Integer wavenumbers with the Nyquist entry zeroed."""
    n = np.fft.fftfreq(m, d=1.0 / m)
    n[m // 2] = 0.0
    return n


def _apply_multiplier(f: SampledField, symbol: np.ndarray, axis: int) -> SampledField:
    fh = np.fft.fft(f.values, axis=axis)
    shape = [1] * f.grid.dim
    shape[axis] = -1
    out = np.fft.ifft(fh * symbol.reshape(shape), axis=axis)
    return SampledField(f.grid, out.real)


def derivative(f: SampledField, axis: int = 0) -> SampledField:
    """Spectral derivative along ``axis``; the Nyquist mode is dropped."""
    _check_axis(f, axis)
    return _apply_multiplier(f, 1j * _odd_symbol(f.grid.sizes[axis]), axis)


def gradient(f: SampledField) -> tuple[SampledField, ...]:
    return tuple(derivative(f, a) for a in range(f.grid.dim))


def hilbert(f: SampledField) -> SampledField:
    """Periodic Hilbert transform, symbol ``-i sgn(n)`` with ``sgn(0) = 0``."""
    _require_1d(f, "hilbert")
    return _apply_multiplier(f, -1j * np.sign(_odd_symbol(f.grid.sizes[0])), 0)


def abs_d(f: SampledField) -> SampledField:
    """``|D| = sqrt(-Laplacian)``: the multiplier ``|n|`` (Nyquist dropped)."""
    _require_1d(f, "abs_d")
    return _apply_multiplier(f, np.abs(_odd_symbol(f.grid.sizes[0])).astype(complex), 0)


def integrate(f: SampledField) -> float:
    """Trapezoid rule over the torus, ``(2pi)^d * mean``."""
    return float(TWO_PI ** f.grid.dim * np.mean(f.values))


def lp_norm(f: SampledField, p: float = 2.0, w: SampledField | None = None) -> float:
    """Weighted ``L^p`` norm ``(integral |f|^p w dx)^(1/p)``."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    integrand = np.abs(f.values) ** p
    if w is not None:
        wv = np.asarray(w.values)
        if np.any(wv < 0):
            raise ValueError("weight must be nonnegative")
        integrand = integrand * wv
    return float((TWO_PI ** f.grid.dim * np.mean(integrand)) ** (1.0 / p))


def h_minus1_norm(f: SampledField, mean_tol: float = 1e-10) -> float:
    """Norm dual to ``||phi_x||_{L^2}`` on mean-zero functions.

    Spectrally ``(2pi * sum_{n != 0} |fhat(n)|^2 / n^2)^(1/2)``; the
    calibration makes ``h_minus1_norm(derivative(g)) == ||g - mean g||_{L^2}``.
    """
    _require_1d(f, "h_minus1_norm")
    peak = float(np.max(np.abs(f.values)))
    if peak == 0.0:
        return 0.0
    l2 = peak * lp_norm(f.with_values(f.values / peak), 2.0)  # immune to underflow
    if abs(integrate(f)) / TWO_PI > mean_tol * l2:
        raise ValueError("h_minus1_norm requires a mean-zero field")
    fh = np.fft.fft(f.values) / f.values.size
    n = np.fft.fftfreq(f.values.size, d=1.0 / f.values.size)
    nz = n != 0
    return float(np.sqrt(TWO_PI * np.sum(np.abs(fh[nz]) ** 2 / n[nz] ** 2)))


def _real_trig_coeffs(values: np.ndarray) -> np.ndarray:
    """Coefficients ``c_n`` (n = 0..M/2) with ``f(x) = Re sum c_n e^{inx}``."""
    m = values.size
    c = np.fft.rfft(values) / m
    c[1:m // 2] *= 2.0
    return c


def eval_trig(f: SampledField, points, chunk: int = 4096) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``f`` at arbitrary points.

    The Nyquist term enters as ``c_{M/2} cos(M x / 2)`` so the interpolant
    reproduces the samples exactly at the nodes.
    """
    _require_1d(f, "eval_trig")
    pts = np.asarray(points, dtype=float)
    flat = pts.ravel()
    c = _real_trig_coeffs(f.values)
    n = np.arange(c.size)
    out = np.empty(flat.size)
    for start in range(0, flat.size, chunk):
        seg = flat[start:start + chunk]
        out[start:start + chunk] = np.real(np.exp(1j * np.outer(seg, n)) @ c)
    return out.reshape(pts.shape)


def _eval_trig_with_derivative(c: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m2 = c.size - 1
    n = np.arange(c.size)
    e = np.exp(1j * np.outer(x, n))
    val = np.real(e @ c)
    dc = 1j * n * c
    dc[m2] = 0.0  # Nyquist term has no resolved derivative
    return val, np.real(e @ dc)


def refined_samples(f: SampledField, factor: int = 4) -> np.ndarray:
    """Band-limited interpolant sampled on a grid ``factor`` times finer."""
    _require_1d(f, "refined_samples")
    m = f.values.size
    c = np.fft.rfft(f.values)
    c[m // 2] *= 0.5  # split Nyquist symmetrically between +-M/2
    return np.fft.irfft(c, n=factor * m) * factor


def invert_monotone_circle_map(u: SampledField, tol: float = 1e-12,
                               max_iter: int = 100, grid: PeriodicGrid | None = None) -> SampledField:
    """Invert ``x(alpha) = alpha + u(alpha)`` on a uniform grid.

    ``u`` holds the periodic part of a circle homeomorphism sampled on the
    alpha-grid.  Returns the samples ``alpha(x_j)`` (not reduced mod 2pi) on
    the uniform x-grid (``grid``, default the grid of ``u``), obtained by
    Newton's method on the trigonometric interpolant of ``u`` with a
    bisection safeguard.
    """
    _require_1d(u, "invert_monotone_circle_map")
    slope = 1.0 + refined_samples(derivative(u), 4)
    if np.min(slope) <= 0.0:
        raise GridError(f"map alpha + u(alpha) is not increasing (min slope {np.min(slope):.3e})")

    grid = grid or u.grid
    _require_1d(grid.constant(0.0), "invert_monotone_circle_map")
    c = _real_trig_coeffs(u.values)
    x = grid.nodes()
    # refined-grid max of |u| can undershoot the true max slightly
    bound = 1.25 * float(np.max(np.abs(refined_samples(u, 4)))) + 1e-6
    lo = x - bound
    hi = x + bound
    val, _ = _eval_trig_with_derivative(c, x)
    alpha = x - val
    for _ in range(max_iter):
        val, dval = _eval_trig_with_derivative(c, alpha)
        resid = alpha + val - x
        lo = np.where(resid < 0, alpha, lo)
        hi = np.where(resid > 0, alpha, hi)
        if np.max(np.abs(resid)) <= tol:
            break
        step = alpha - resid / (1.0 + dval)
        outside = (step <= lo) | (step >= hi) | ~np.isfinite(step)
        alpha = np.where(outside, 0.5 * (lo + hi), step)
    else:
        raise GridError("monotone map inversion did not converge")
    return SampledField(grid, alpha)


def fourier_series(grid: PeriodicGrid, terms: Sequence, derivative_axis: int | None = None) -> SampledField:
    """Sample ``sum a cos(k.x) + b sin(k.x)`` (or one of its partial derivatives).

    ``terms`` is a list of ``(k, a, b)`` with ``k`` an int (d = 1) or a pair
    of ints (d = 2).  Evaluated in closed form, so it also serves as an
    analytic reference for the spectral operators.
    """
    xs = grid.mesh()
    out = np.zeros(grid.shape)
    for k, a, b in terms:
        kv = np.atleast_1d(np.asarray(k, dtype=float))
        if kv.size != grid.dim:
            raise GridError(f"wavenumber {k!r} does not match grid dimension {grid.dim}")
        phase = sum(ki * xi for ki, xi in zip(kv, xs))
        if derivative_axis is None:
            out += a * np.cos(phase) + b * np.sin(phase)
        else:
            ka = kv[derivative_axis]
            out += ka * (-a * np.sin(phase) + b * np.cos(phase))
    return SampledField(grid, out)
