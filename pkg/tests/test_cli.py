import csv
import json
import subprocess
import sys

import pytest

from rellich_lab.cli import REPORT_HEADER, InputError, fmt, main, parse_config


def write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(data if isinstance(data, str) else json.dumps(data))
    return str(p)


def rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


class TestConfig:
    def test_defaults(self):
        cfg = parse_config({})
        assert cfg.backend == "conformal" and cfg.grid.sizes == (128,)
        assert cfg.tol_rel == 1e-6 and cfg.surface_spec is None

    def test_fd_default_tolerance(self):
        assert parse_config({"backend": "fd"}).tol_rel == 1e-3

    @pytest.mark.parametrize("bad", [
        {"backend": "bem"},
        {"grid": {"m": 6}},
        {"grid": {"m": 64, "m2": 64}},  # conformal needs d = 1
        {"surface": [[1, 0.1]]},
        {"zeta": {"oracle": {"k": 0}}},
        {"p_list": [0.5]},
        {"unknown": 1},
        {"grid": {"m": 64}, "surface": [[[1, 1], 0.1, 0.0]]},
    ])
    def test_invalid(self, bad):
        with pytest.raises(InputError):
            parse_config(bad)

    def test_two_dimensional_fd(self):
        cfg = parse_config({"backend": "fd", "grid": {"m": 16, "m2": 16},
                            "surface": [[[1, 0], 0.1, 0.0]], "zeta": [[[0, 1], 1.0, 0.0]]})
        assert cfg.dim == 2


def test_fmt_round_trip():
    x = 0.1 + 0.2
    assert float(fmt(x)) == x
    assert fmt(True) == "true" and fmt(3) == "3"


class TestVerify:
    def test_flat(self, tmp_path):
        out = tmp_path / "v.csv"
        assert main(["verify", "--out", str(out)]) == 0
        table = rows(out)
        assert table[0] == REPORT_HEADER
        names = [r[0] for r in table[1:]]
        assert names[:2] == ["flux", "rellich_1d"] and "curvature" in names
        assert names.count("lp_normal") == 2  # default p_list has two entries

    def test_oracle_config(self, tmp_path):
        cfg = write(tmp_path, {"surface": [[1, 0.3, 0.0]], "zeta": {"oracle": {"k": 1, "phase": "cos"}}})
        assert main(["verify", "--config", cfg, "--out", str(tmp_path / "o.csv")]) == 0

    def test_p_flag(self, tmp_path):
        out = tmp_path / "p.csv"
        assert main(["verify", "--p", "1.25,1.75", "--out", str(out)]) == 0
        assert sorted({r[1] for r in rows(out)[1:] if r[0] == "lp_normal"}) == [
            fmt(1.25), fmt(1.75)]

    def test_malformed_json(self, tmp_path, capsys):
        assert main(["verify", "--config", write(tmp_path, "{not json")]) == 2
        assert "input error" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["verify", "--config", str(tmp_path / "absent.json")]) == 2

    def test_violation_prints_config(self, tmp_path, capsys, monkeypatch):
        from rellich_lab import cli, rellich

        def broken(t, tol_rel=1e-6):
            return (rellich.make_report("g_by_zeta_x", 5.0, 1.0, 4.0),
                    rellich.make_report("zeta_x_by_g", 1.0, 1.0, 4.0))

        monkeypatch.setattr(cli.rellich, "check_thm_1_5", broken)
        cfg = write(tmp_path, {"surface": [[1, 0.2, 0.0]], "seed": 11})
        assert main(["verify", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 1
        err = capsys.readouterr().err
        assert "g_by_zeta_x" in err
        reproduced = json.loads(err.split("reproducing config: ", 1)[1])
        assert reproduced["surface"] == [[1, 0.2, 0.0]] and reproduced["seed"] == 11

    def test_fd_backend(self, tmp_path):
        cfg = write(tmp_path, {"backend": "fd", "grid": {"m": 64}, "fd": {"ny": 64},
                               "surface": [[1, 0.3, 0.0]], "zeta": [[1, 1.0, 0.0], [2, 0.0, 0.5]]})
        assert main(["verify", "--config", cfg, "--out", str(tmp_path / "f.csv")]) == 0

    def test_fd_two_dimensional(self, tmp_path):
        cfg = write(tmp_path, {"backend": "fd", "grid": {"m": 32, "m2": 32}, "fd": {"ny": 32},
                               "surface": [[[1, 1], 0.1, 0.0]], "zeta": [[[0, 1], 1.0, 0.0]]})
        out = tmp_path / "d2.csv"
        assert main(["verify", "--config", cfg, "--out", str(out)]) == 0
        assert [r[0] for r in rows(out)[1:]] == ["flux", "dn_sq", "grad_sq", "g_weighted",
                                                 "g_lipschitz"]


class TestOracleTest:
    def test_flat(self, tmp_path):
        out = tmp_path / "o.csv"
        assert main(["oracle-test", "--out", str(out)]) == 0
        table = rows(out)
        assert table[0] == ["surface", "k", "phase", "backend", "rel_error", "budget", "pass"]
        assert len(table) == 1 + 12

    def test_too_coarse(self, tmp_path):
        assert main(["oracle-test", "--config", write(tmp_path, {"grid": {"m": 6}})]) == 2

    def test_grid_flag(self, tmp_path):
        assert main(["oracle-test", "--grid", "6"]) == 2
        assert main(["oracle-test", "--grid", "abc"]) == 2

    def test_suite_is_ordered_and_threaded(self, tmp_path, monkeypatch):
        monkeypatch.setenv("RELLICH_THREADS", "2")
        out = tmp_path / "s.csv"
        assert main(["oracle-test", "--suite", "2", "--grid", "64", "--backend", "conformal",
                     "--out", str(out)]) in (0, 1)
        idx = [int(r[0]) for r in rows(out)[1:]]
        assert idx == sorted(idx) and set(idx) == {0, 1, 2}


def test_demo_l1(tmp_path):
    out = tmp_path / "l1.csv"
    assert main(["demo-l1", "--out", str(out)]) == 0
    table = rows(out)
    assert table[0] == ["N", "ratio"] and len(table) == 5
    ratios = [float(r[1]) for r in table[1:]]
    assert ratios == sorted(ratios)
    assert main(["demo-l1", "--n-list", "500"]) == 2


def test_sweep(tmp_path):
    out = tmp_path / "sw.csv"
    assert main(["sweep", "--amplitudes", "0,0.1,0.2", "--wavenumbers", "1,2,3",
                 "--out", str(out)]) == 0
    assert len(rows(out)) == 1 + 9


def test_optimize_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["optimize", "--budget", "60", "--seed", "4", "--out", str(a)]) == 0
    assert main(["optimize", "--budget", "60", "--seed", "4", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert main(["optimize", "--budget", "10"]) == 2


def test_optimize_anomaly_exit(tmp_path, monkeypatch, capsys):
    from rellich_lab import explorer
    monkeypatch.setattr(explorer, "evaluate", lambda *a, **k: explorer.Evaluation(2.0, False))
    assert main(["optimize", "--budget", "50", "--out", str(tmp_path / "x.csv")]) == 1
    assert "anomaly" in capsys.readouterr().err


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "rellich_lab.cli", "demo-l1", "--n-list", "8,16"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "N,ratio"
