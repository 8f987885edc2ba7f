"""Command-line drivers: oracle tests, verification runs, sweeps, searches and the L^1 demo.

Exit codes: 0 success, 1 a mathematical check failed (or an anomaly was
flagged), 2 invalid input.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import jsonschema
import numpy as np

from . import explorer, rellich
from .conformal import ConformalSolveError, theodorsen_solve
from .dtn import EllipticConfig, EllipticSolver, dtn_conformal, harmonic_oracle
from .spectral import GridError, PeriodicGrid, fourier_series
from .suite import standard_surfaces
from .surface import SurfaceGeometry, build_surface

log = logging.getLogger("rellich_lab")

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2

_wavenumber = {"oneOf": [{"type": "integer"},
                         {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2}]}
_fourier_spec = {"type": "array", "items": {
    "type": "array", "prefixItems": [_wavenumber, {"type": "number"}, {"type": "number"}],
    "minItems": 3, "maxItems": 3}}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "surface": {"oneOf": [{"const": "flat"}, _fourier_spec]},
        "zeta": {"oneOf": [_fourier_spec, {
            "type": "object", "additionalProperties": False, "required": ["oracle"],
            "properties": {"oracle": {
                "type": "object", "additionalProperties": False, "required": ["k"],
                "properties": {"k": _wavenumber, "phase": {"enum": ["cos", "sin"]}}}}}]},
        "grid": {"type": "object", "additionalProperties": False, "required": ["m"],
                 "properties": {"m": {"type": "integer"}, "m2": {"type": "integer"}}},
        "backend": {"enum": ["conformal", "fd"]},
        "fd": {"type": "object", "additionalProperties": False,
               "properties": {"depth": {"type": "number", "exclusiveMinimum": 0},
                              "ny": {"type": "integer", "minimum": 4},
                              "bottom": {"enum": ["zero-dirichlet", "zero-neumann"]}}},
        "conformal": {"type": "object", "additionalProperties": False,
                      "properties": {"tol": {"type": "number", "exclusiveMinimum": 0},
                                     "max_iter": {"type": "integer", "minimum": 1},
                                     "relax": {"type": "number", "exclusiveMinimum": 0,
                                               "maximum": 1}}},
        "p_list": {"type": "array",
                   "items": {"type": "number", "exclusiveMinimum": 1, "maximum": 2}},
        "tol_rel": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer"},
    },
}

DEFAULTS = {
    "surface": "flat",
    "zeta": [[1, 1.0, 0.0]],
    "grid": {"m": 128},
    "backend": "conformal",
    "fd": {"depth": 2.0 * math.pi, "ny": 128, "bottom": "zero-neumann"},
    "conformal": {"tol": 1e-13, "max_iter": 2000, "relax": 0.5},
    "p_list": [1.5, 2.0],
    "seed": 0,
}

# per-backend budgets: relative L2 error against the oracle, identity residual, inequality slack
BUDGETS = {
    "conformal": {"oracle": 1e-8, "identity": 1e-8, "tol_rel": 1e-6},
    "fd": {"oracle": 1e-2, "identity": 1e-2, "tol_rel": 1e-3},
}


class InputError(ValueError):
    pass


@dataclass
class RunConfig:
    raw: dict
    grid: PeriodicGrid
    backend: str
    fd: EllipticConfig
    conformal: dict
    p_list: list
    tol_rel: float
    seed: int
    surface_spec: list | None
    zeta_spec: list | None
    oracle: dict | None = field(default=None)

    @property
    def dim(self) -> int:
        return self.grid.dim

    def surface(self, spec=None) -> SurfaceGeometry:
        spec = self.surface_spec if spec is None else spec
        if not spec:
            return build_surface(self.grid.constant(0.0))
        return build_surface(spec, self.grid)

    def to_json(self) -> str:
        return json.dumps(self.raw, sort_keys=True)


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = {**out[k], **v}
        else:
            out[k] = v
    return out


def _spec(raw) -> list:
    return [(tuple(k) if isinstance(k, list) else k, float(a), float(b)) for k, a, b in raw]


def parse_config(data: dict, overrides: dict | None = None) -> RunConfig:
    """Validate a JSON-like config dict and fill in defaults."""
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise InputError(f"invalid config: {exc.message}") from None
    raw = _merge(DEFAULTS, data)
    for k, v in (overrides or {}).items():
        if v is not None:
            raw = _merge(raw, {k: v})
    try:
        sizes = (raw["grid"]["m"],) + ((raw["grid"]["m2"],) if "m2" in raw["grid"] else ())
        grid = PeriodicGrid(sizes)
        fd = EllipticConfig(raw["fd"]["depth"], raw["fd"]["ny"], raw["fd"]["bottom"])
    except (GridError, ValueError) as exc:
        raise InputError(str(exc)) from None
    backend = raw["backend"]
    if backend == "conformal" and grid.dim != 1:
        raise InputError("the conformal backend requires d = 1")
    surface_spec = None if raw["surface"] == "flat" else _spec(raw["surface"])
    zeta_spec, oracle = None, None
    if isinstance(raw["zeta"], dict):
        oracle = {"k": raw["zeta"]["oracle"]["k"], "phase": raw["zeta"]["oracle"].get("phase", "cos")}
        if not np.any(np.atleast_1d(oracle["k"])):
            raise InputError("oracle wavevector must be nonzero")
    else:
        zeta_spec = _spec(raw["zeta"])
    for spec in (surface_spec or []) + (zeta_spec or []):
        if np.atleast_1d(spec[0]).size != grid.dim:
            raise InputError(f"wavenumber {spec[0]!r} does not match grid dimension {grid.dim}")
    if oracle is not None and np.atleast_1d(oracle["k"]).size != grid.dim:
        raise InputError(f"oracle wavevector {oracle['k']!r} does not match grid dimension")
    tol_rel = raw.get("tol_rel", BUDGETS[backend]["tol_rel"])
    return RunConfig(raw, grid, backend, fd, dict(raw["conformal"]), list(raw["p_list"]),
                     float(tol_rel), int(raw["seed"]), surface_spec, zeta_spec, oracle)


def load_config(path: str | None, overrides: dict | None = None) -> RunConfig:
    data = {}
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise InputError("config must be a JSON object")
    return parse_config(data, overrides)


# ------------------------------------------------------------------ output

def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17e")
    return str(x)


def write_csv(rows: list, header: list, out: str | None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("RELLICH_THREADS", "1")))
    except ValueError:
        return 1


def _parallel_map(fn, items) -> list:
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        return list(pool.map(fn, items))  # map preserves input order


# ---------------------------------------------------------------- commands

def _traces(cfg: RunConfig, s: SurfaceGeometry, zeta, cb=None):
    if cfg.backend == "conformal":
        cb = cb or theodorsen_solve(s, **cfg.conformal)
        return dtn_conformal(cb, s, zeta)
    return EllipticSolver(s, cfg.fd).traces(zeta)


def _rel(a, b) -> float:
    nb = float(np.linalg.norm(b))
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / nb) if nb else float(np.linalg.norm(a))


def cmd_oracle_test(cfg: RunConfig, suite: int = 0) -> tuple[int, list]:
    """Compare every applicable backend with exact oracle traces."""
    surfaces = [cfg.surface_spec or []]
    surfaces += standard_surfaces(suite) if suite else []
    if cfg.oracle is not None:
        modes = [(cfg.oracle["k"], cfg.oracle["phase"])]
    elif cfg.dim == 1:
        modes = [(k, ph) for k in (1, 2, 3) for ph in ("cos", "sin")]
    else:
        modes = [((1, 0), "cos"), ((0, 1), "cos"), ((1, 1), "cos"), ((1, -1), "sin")]
    backends = ["conformal", "fd"] if cfg.dim == 1 else ["fd"]

    def run(item):
        idx, spec = item
        s = cfg.surface(spec)
        rows = []
        for backend in backends:
            try:
                if backend == "conformal":
                    solve = partial(dtn_conformal, theodorsen_solve(s, **cfg.conformal), s)
                else:
                    solver = EllipticSolver(s, cfg.fd)
                    solve = solver.traces
            except ConformalSolveError as exc:
                log.warning("surface %d: %s", idx, exc)
                rows.extend((idx, str(k), ph, backend, math.inf, BUDGETS[backend]["oracle"], False)
                            for k, ph in modes)
                continue
            for k, ph in modes:
                zeta, exact = harmonic_oracle(s, k, ph)
                err = _rel(solve(zeta).g_zeta.values, exact.g_zeta.values)
                budget = BUDGETS[backend]["oracle"]
                rows.append((idx, str(k).replace(" ", ""), ph, backend, err, budget, err <= budget))
        return rows

    rows = [r for chunk in _parallel_map(run, list(enumerate(surfaces))) for r in chunk]
    return (EXIT_OK if all(r[-1] for r in rows) else EXIT_VIOLATION), rows


ORACLE_HEADER = ["surface", "k", "phase", "backend", "rel_error", "budget", "pass"]
REPORT_HEADER = ["name", "p", "lhs", "rhs_times_constant", "constant", "ratio", "pass"]


def _identity_row(r: rellich.IdentityReport) -> tuple:
    # ratio <= 1 iff the normalised residual is within tolerance
    return (r.name, 2.0, abs(r.value), r.tol * r.scale, r.tol, r.normalized / r.tol, r.passed)


def _report_row(r: rellich.InequalityReport) -> tuple:
    return (r.name, r.p, r.lhs, r.rhs_times_constant, r.constant, r.ratio, r.passed)


def cmd_verify(cfg: RunConfig) -> tuple[int, list]:
    """Evaluate every identity and inequality on the configured data."""
    s = cfg.surface()
    cb = None
    if cfg.backend == "conformal":
        cb = theodorsen_solve(s, **cfg.conformal)
    if cfg.oracle is not None:
        zeta, _ = harmonic_oracle(s, cfg.oracle["k"], cfg.oracle["phase"])
    else:
        zeta = fourier_series(cfg.grid, cfg.zeta_spec)
    t = _traces(cfg, s, zeta, cb)
    id_tol = BUDGETS[cfg.backend]["identity"]
    rows = [_identity_row(rellich.flux_residual(t, id_tol))]
    if cfg.dim == 1:
        rows.append(_identity_row(rellich.rellich_identity_1d(t, id_tol)))
    rows += [_report_row(r) for r in rellich.check_thm_1_1(t, cfg.tol_rel)]
    if cfg.dim == 1:
        rows += [_report_row(r) for r in rellich.check_thm_1_5(t, cfg.tol_rel)]
        rows.append(_report_row(rellich.check_coro_1_6(s, cfg.backend, cfg.tol_rel, cb=cb, fd=cfg.fd)))
        for p in cfg.p_list:
            rows += [_report_row(r) for r in rellich.check_thm_1_7(t, float(p), cfg.tol_rel)]
    ok = all(r[-1] for r in rows)
    return (EXIT_OK if ok else EXIT_VIOLATION), rows


def _violation(cfg: RunConfig, what: str) -> None:
    sys.stderr.write(f"VIOLATION: {what}\nreproducing config: {cfg.to_json()}\n")


def _parse_list(text: str, cast=float) -> list:
    try:
        return [cast(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"cannot parse list {text!r}") from None


def _parse_grid(text: str | None) -> dict | None:
    if text is None:
        return None
    parts = text.lower().split("x")
    try:
        sizes = [int(p) for p in parts]
    except ValueError:
        raise InputError(f"cannot parse grid {text!r}") from None
    if len(sizes) == 1:
        return {"m": sizes[0]}
    if len(sizes) == 2:
        return {"m": sizes[0], "m2": sizes[1]}
    raise InputError(f"grid must be M or MxM2, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="CSV output path (default: stdout)")
    common.add_argument("--backend", choices=["conformal", "fd"])
    common.add_argument("--grid", help="grid size M (d = 1) or MxM2 (d = 2)")
    common.add_argument("--seed", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="rellich-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("oracle-test", parents=[common], help="backend errors against exact traces")
    p.add_argument("--suite", type=int, default=0, help="also run N standard random surfaces")

    p = sub.add_parser("verify", parents=[common], help="evaluate all identities and inequalities")
    p.add_argument("--p", help="comma-separated exponents in (1, 2] (overrides p_list)")

    p = sub.add_parser("sweep", parents=[common], help="ratio over h = a cos(k x)")
    p.add_argument("--ineq", default="g_by_zeta_x", choices=rellich.INEQUALITIES)
    p.add_argument("--amplitudes", default="0,0.1,0.2")
    p.add_argument("--wavenumbers", default="1,2,3")
    p.add_argument("--p", type=float, default=2.0)

    p = sub.add_parser("optimize", parents=[common], help="Nelder-Mead search for extremal ratios")
    p.add_argument("--ineq", default="g_by_zeta_x", choices=rellich.INEQUALITIES)
    p.add_argument("--budget", type=int, default=500)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--modes-h", type=int, default=2)
    p.add_argument("--modes-zeta", type=int, default=2)
    p.add_argument("--slope-cap", type=float)

    p = sub.add_parser("demo-l1", parents=[common], help="unboundedness of H on L^1")
    p.add_argument("--n-list", default="8,16,32,64")
    p.add_argument("--m", type=int, default=1024)
    return parser


def _overrides(args) -> dict:
    return {"backend": args.backend, "grid": _parse_grid(args.grid), "seed": args.seed}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except InputError as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT


def _dispatch(args) -> int:
    if args.command == "demo-l1":
        n_list = _parse_list(args.n_list, int)
        try:
            rows = rellich.l1_failure_demo(n_list, args.m)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        write_csv(rows, ["N", "ratio"], args.out)
        ratios = [r for _, r in rows]
        if any(b <= a for a, b in zip(ratios, ratios[1:])):
            sys.stderr.write("VIOLATION: L^1 ratios are not strictly increasing\n")
            return EXIT_VIOLATION
        return EXIT_OK

    overrides = _overrides(args)
    if args.command == "verify" and args.p:
        overrides["p_list"] = _parse_list(args.p)
    cfg = load_config(args.config, overrides)

    if args.command == "oracle-test":
        code, rows = cmd_oracle_test(cfg, args.suite)
        write_csv(rows, ORACLE_HEADER, args.out)
        if code:
            _violation(cfg, "oracle error above backend budget")
        return code

    if args.command == "verify":
        try:
            code, rows = cmd_verify(cfg)
        except ConformalSolveError as exc:
            raise InputError(f"conformal solve failed: {exc}") from None
        write_csv(rows, REPORT_HEADER, args.out)
        if code:
            bad = ", ".join(r[0] for r in rows if not r[-1])
            _violation(cfg, f"failed checks: {bad}")
        return code

    if cfg.dim != 1:
        raise InputError(f"{args.command} is implemented for d = 1 only")
    zeta_spec = cfg.zeta_spec or [(cfg.oracle["k"], 1.0, 0.0)]

    if args.command == "sweep":
        rows = explorer.sweep(_parse_list(args.amplitudes), _parse_list(args.wavenumbers, int),
                              args.ineq, args.p, cfg.backend, zeta_spec, cfg.grid.sizes[0], cfg.fd)
        write_csv(rows, ["amplitude", "wavenumber", "ratio"], args.out)
        return EXIT_OK

    if args.command == "optimize":
        cap = args.slope_cap
        if cap is None:
            cap = 0.75 if cfg.backend == "conformal" else 3.0
        try:
            res = explorer.optimize(args.ineq, args.p, args.modes_h, args.modes_zeta, args.budget,
                                    cfg.seed, cap, cfg.backend, cfg.grid.sizes[0], fd=cfg.fd)
        except explorer.AnomalyError as exc:
            _violation(cfg, f"anomaly: {exc}; params {json.dumps(exc.params.to_dict())}")
            return EXIT_VIOLATION
        except ValueError as exc:
            raise InputError(str(exc)) from None
        write_csv(res.trace, ["evaluation", "best_ratio"], args.out)
        summary = {"ineq": args.ineq, "best_ratio": res.best_ratio, "evaluations": res.evaluations,
                   "rejected": res.rejected, "best_params": res.best_params.to_dict()}
        sys.stderr.write(json.dumps(summary, default=float) + "\n")
        return EXIT_OK

    raise InputError(f"unknown command {args.command}")  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
