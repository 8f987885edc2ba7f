import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rellich_lab.spectral import GridError, PeriodicGrid, derivative
from rellich_lab.suite import scale_to_slope
from rellich_lab.surface import (UnderResolvedWarning, build_surface, curvature,
                                 curvature_nondivergence, flat_surface)

G = PeriodicGrid((128,))
X = G.nodes()

_raw_spec = st.lists(st.tuples(st.integers(1, 5), st.floats(-1, 1), st.floats(-1, 1)),
                     min_size=1, max_size=4, unique_by=lambda t: t[0])
small_spec = st.builds(lambda spec, slope: scale_to_slope(spec, slope), _raw_spec,
                       st.floats(0.0, 0.75))


def test_flat():
    s = build_surface(G.constant(0.0))
    assert np.all(s.omega.values == 1.0)
    assert np.all(s.theta.values == 0.0)
    assert np.all(s.kappa.values == 0.0)
    assert s.max_slope == 0.0


def test_constant_height_matches_flat_geometry():
    s, f = build_surface(G.constant(0.7)), flat_surface(G)
    for name in ("omega", "theta", "kappa"):
        assert np.array_equal(getattr(s, name).values, getattr(f, name).values)
    assert np.all(s.h.values == 0.7)


def test_cosine_closed_forms():
    s = build_surface([(1, 0.3, 0.0)], G)
    assert s.theta.values[0] == pytest.approx(0.0, abs=1e-15)
    quarter = G.sizes[0] // 4  # x = pi/2
    assert s.omega.values[quarter] == pytest.approx(math.sqrt(1.09), rel=1e-13)
    assert np.allclose(s.h_x.values, -0.3 * np.sin(X), atol=1e-13)


def test_accepts_field_or_spec():
    a = build_surface([(2, 0.1, 0.05)], G)
    b = build_surface(G.field(0.1 * np.cos(2 * X) + 0.05 * np.sin(2 * X)))
    assert np.allclose(a.kappa.values, b.kappa.values, atol=1e-12)


def test_spec_needs_grid():
    with pytest.raises((TypeError, ValueError)):
        build_surface([(1, 0.1, 0.0)])


def test_nan_rejected():
    with pytest.raises(GridError):
        build_surface(G.field(np.where(X > 1, np.nan, 0.0)))


def test_under_resolved_warns():
    g = PeriodicGrid((16,))
    with pytest.warns(UnderResolvedWarning):
        build_surface([(7, 0.01, 0.0)], g)


def test_resolved_does_not_warn():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        build_surface([(3, 0.1, 0.0)], G)


class TestCurvature:
    def test_cosine_at_crest(self):
        a = 0.25
        k = curvature(build_surface([(1, a, 0.0)], G))
        assert k.values[0] == pytest.approx(-a, abs=1e-12)

    def test_two_forms_agree(self):
        s = build_surface([(1, 0.4, 0.0), (2, 0.0, 0.1)], G)
        assert np.max(np.abs(curvature(s).values - curvature_nondivergence(s).values)) <= 1e-8

    def test_requires_1d(self):
        s = build_surface([((1, 0), 0.1, 0.0)], PeriodicGrid((16, 16)))
        with pytest.raises(GridError):
            curvature(s)

    @given(small_spec)
    def test_theta_x_identities(self, spec):
        # arctan(h_x) has a slowly decaying spectrum; 256 points resolve it to round-off
        s = build_surface(spec, PeriodicGrid((256,)))
        hx = s.h_x.values
        hxx = derivative(s.h_x).values
        theta_x = derivative(s.theta).values
        assert np.max(np.abs(theta_x - hxx / (1 + hx ** 2))) <= 1e-8
        assert np.max(np.abs((1 + hx ** 2) * s.kappa.values ** 2 - theta_x ** 2)) <= 1e-8


@given(small_spec)
def test_frame_is_orthonormal(spec):
    s = build_surface(spec, G)
    n, t = s.normal(), s.tangent()
    assert np.max(np.abs(np.sum(n * t, axis=0))) <= 1e-14
    assert np.allclose(np.sum(n * n, axis=0), 1.0, atol=1e-14)
    assert np.allclose(np.sum(t * t, axis=0), 1.0, atol=1e-14)
    assert np.all(s.omega.values >= 1.0)
    assert np.all(np.abs(s.theta.values) < math.pi / 2)


def test_two_dimensional_gradient():
    g = PeriodicGrid((32, 32))
    x1, x2 = g.mesh()
    s = build_surface([((1, 0), 0.2, 0.0), ((0, 1), 0.0, 0.1)], g)
    assert np.allclose(s.grad_h[0].values, -0.2 * np.sin(x1), atol=1e-13)
    assert np.allclose(s.grad_h[1].values, 0.1 * np.cos(x2), atol=1e-13)
    assert np.allclose(s.omega.values, np.sqrt(1 + 0.04 * np.sin(x1) ** 2 + 0.01 * np.cos(x2) ** 2))
