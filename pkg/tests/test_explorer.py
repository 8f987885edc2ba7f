import math

import numpy as np
import pytest

from rellich_lab import explorer
from rellich_lab.conformal import theodorsen_solve
from rellich_lab.dtn import dtn_conformal
from rellich_lab.explorer import (AnomalyError, Evaluation, FourierParams, evaluate, objective,
                                  optimize, sweep)
from rellich_lab.rellich import check_thm_1_5
from rellich_lab.spectral import PeriodicGrid, fourier_series
from rellich_lab.surface import build_surface


def test_zero_data_is_degenerate():
    p = FourierParams(((1, 0.0, 0.0),), ((1, 0.0, 0.0), (2, 0.0, 0.0)))
    assert objective(p, "g_by_zeta_x") == 0.0


def test_flat_cosine():
    p = FourierParams((), ((1, 1.0, 0.0),))
    assert objective(p, "g_by_zeta_x") == pytest.approx(0.25, abs=1e-12)


def test_matches_direct_check():
    h, z = ((1, 0.2, 0.0), (2, 0.0, 0.05)), ((1, 0.4, 0.1), (3, 0.0, 0.2))
    grid = PeriodicGrid((128,))
    s = build_surface(list(h), grid)
    direct = check_thm_1_5(dtn_conformal(theodorsen_solve(s), s, fourier_series(grid, z)))[0]
    assert objective(FourierParams(h, z), "g_by_zeta_x", grid=grid) == pytest.approx(
        direct.ratio, rel=1e-12)


def test_soft_slope_barrier():
    ev = evaluate(FourierParams(((1, 0.9, 0.0),), ((1, 1.0, 0.0),), slope_cap=0.75), "g_by_zeta_x")
    assert ev == Evaluation(0.0, True, "slope cap")


def test_unknown_inequality():
    with pytest.raises(KeyError):
        objective(FourierParams((), ((1, 1.0, 0.0),)), "nonsense")


def test_params_reject_nonpositive_wavenumbers():
    with pytest.raises(ValueError):
        FourierParams(((0, 0.1, 0.0),), ())


def test_flat_directions():
    # scaling zeta and shifting (h, zeta) leave the ratio unchanged
    h, z = ((1, 0.2, 0.1),), ((1, 0.4, 0.1), (2, -0.3, 0.2))
    base = objective(FourierParams(h, z), "zeta_x_by_g")
    scaled = objective(FourierParams(h, tuple((k, 3 * a, 3 * b) for k, a, b in z)), "zeta_x_by_g")
    assert scaled == pytest.approx(base, rel=1e-12)
    shift = 2 * math.pi * 5 / 128

    def shifted(spec):
        out = []
        for k, a, b in spec:
            c, s = math.cos(k * shift), math.sin(k * shift)
            out.append((k, a * c - b * s, a * s + b * c))
        return tuple(out)

    assert objective(FourierParams(shifted(h), shifted(z)), "zeta_x_by_g") == pytest.approx(base, rel=1e-8)


class TestOptimize:
    def test_budget_floor(self):
        with pytest.raises(ValueError):
            optimize("g_by_zeta_x", budget=10)

    def test_deterministic_and_monotone(self):
        a = optimize("g_by_zeta_x", budget=60, seed=5)
        b = optimize("g_by_zeta_x", budget=60, seed=5)
        assert a.trace == b.trace and a.best_params == b.best_params
        best = [r for _, r in a.trace]
        assert all(y >= x for x, y in zip(best, best[1:]))
        assert a.best_ratio == best[-1]
        assert a.evaluations == 60 == len(a.trace)

    def test_zero_slope_cap_collapses_to_flat(self):
        res = optimize("g_by_zeta_x", budget=60, seed=2, slope_cap=0.0)
        assert res.best_params.h_coeffs == ()
        assert res.best_ratio == pytest.approx(0.25, abs=1e-10)

    def test_anomaly_is_raised(self, monkeypatch):
        monkeypatch.setattr(explorer, "evaluate", lambda *a, **k: Evaluation(1.5, False))
        with pytest.raises(AnomalyError) as info:
            optimize("g_by_zeta_x", budget=50)
        assert info.value.ratio == 1.5
        assert isinstance(info.value.params, FourierParams)

    def test_empirical_ratios_are_not_anomalies(self, monkeypatch):
        monkeypatch.setattr(explorer, "evaluate", lambda *a, **k: Evaluation(1.5, False))
        assert optimize("lp_normal", p=1.5, budget=50).best_ratio == 1.5


class TestSweep:
    def test_rows(self):
        rows = sweep([0.0, 0.1, 0.2], [1, 2, 3], "g_by_zeta_x")
        assert len(rows) == 9
        assert [(a, k) for a, k, _ in rows] == [(a, k) for a in (0.0, 0.1, 0.2) for k in (1, 2, 3)]
        assert all(r == pytest.approx(0.25, abs=1e-12) for a, _, r in rows if a == 0.0)

    def test_spot_row_matches_objective(self):
        rows = sweep([0.15], [2], "dn_sq")
        direct = objective(FourierParams(((2, 0.15, 0.0),), ((1, 1.0, 0.0),), math.inf), "dn_sq")
        assert rows[0][2] == direct

    def test_failed_cell_is_nan(self):
        rows = sweep([3.0], [2], "g_by_zeta_x")
        assert np.isnan(rows[0][2])
