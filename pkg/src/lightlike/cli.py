"""Command line front end: ``ljet analyze | gauge-check | cartan | model``.

Exit codes: 0 success, 2 invalid input or violated precondition, 3 a
degenerate verdict (special-type point, singular chart point, gauge residual
above tolerance).  Reports are deterministic: keys sorted, floats printed by
``repr``, no timestamps.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import cartan_test, flat_model, gauge, pipeline
from .invariants import singular_points
from .jet_model import JetError, load_jet, save_jet
from .tolerances import PROFILE_ENV, Tolerances, parse_override, profile

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_DEGENERATE = 3


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    inputs: tuple = ()
    out: str | None = None
    tol: Tolerances = field(default_factory=profile)
    jobs: int = 1
    fmt: str = "json"
    seed: int = 0

    def __post_init__(self):
        if self.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        if self.fmt not in ("json", "csv"):
            raise UsageError("--format must be json or csv")


# -- serialisation --------------------------------------------------------------------


def jsonable(obj):
    """Plain JSON types for reports; complex numbers become ``[re, im]``."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    return obj


def dumps(report) -> str:
    return json.dumps(jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _flatten(prefix, obj, rows):
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], rows)
    elif isinstance(obj, list) and any(isinstance(v, (dict, list)) for v in obj):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, rows)
    elif isinstance(obj, list):
        rows.append((prefix, " ".join(repr(v) for v in obj)))
    else:
        rows.append((prefix, repr(obj) if isinstance(obj, float) else str(obj)))


def to_csv(report) -> str:
    """Long format, one ``key,value`` row per leaf of the report."""
    rows: list = []
    _flatten("", jsonable(report), rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    w.writerows(rows)
    return buf.getvalue()


def _emit(cfg: RunConfig, report) -> None:
    text = to_csv(report) if cfg.fmt == "csv" else dumps(report)
    if cfg.out is None or cfg.out == "-":
        sys.stdout.write(text)
    else:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _pmap(cfg: RunConfig, fn, items):
    items = list(items)
    if cfg.jobs == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        return list(pool.map(fn, items))


def _err(msg: str) -> None:
    print(f"ljet: {msg}", file=sys.stderr)


# -- analyze --------------------------------------------------------------------------


def _analysis_dict(rep: pipeline.AnalysisReport) -> dict:
    out = {
        "classification": rep.classification,
        "foci": {"s": rep.foci.s, "distinct": rep.foci.distinct,
                 "multiplicities": rep.foci.multiplicities,
                 "harmonic_pole": rep.foci.pole_coordinate},
        "pole": rep.pole,
        "normalization": rep.normalization,
        "residuals": rep.residuals,
        "notes": list(rep.notes),
    }
    if rep.connection is not None:
        c = rep.connection
        out["connection"] = {
            "torsion": c.torsion, "curvature": c.curvature,
            "integrable_S": c.integrability.integrable_S,
            "integrable_Stilde": c.integrability.integrable_Stilde,
            "integrability": c.integrability,
        }
    else:
        out["connection"] = None
    return out


def cmd_analyze(cfg: RunConfig) -> int:
    if not cfg.inputs:
        raise UsageError("analyze needs at least one --input jet file")

    def one(path):
        try:
            jet = load_jet(path, tol=cfg.tol)
        except (JetError, OSError) as exc:
            kind = getattr(exc, "category", "io")
            return path, None, f"{kind} error: {exc}"
        return path, pipeline.analyze(jet, tol=cfg.tol), None

    results = _pmap(cfg, one, cfg.inputs)
    code = EXIT_OK
    reports = []
    for path, rep, error in results:
        if error is not None:
            _err(f"{path}: {error}")
            reports.append({"input": str(path), "error": error})
            code = EXIT_INVALID
            continue
        d = _analysis_dict(rep)
        d["input"] = str(path)
        reports.append(d)
        if rep.degenerate and code == EXIT_OK:
            code = EXIT_DEGENERATE
    _emit(cfg, {"command": "analyze", "reports": reports})
    return code


# -- gauge-check ----------------------------------------------------------------------

# the weight probe only uses the A_0 / A_1 scalings
WEIGHT_PROBE = gauge.GaugeParams(pi00=0.2, pi11=-0.3)


def _gauge_report(jet, params: gauge.GaugeParams, t: float, steps: int, tol: Tolerances):
    flow = gauge.integrate_gauge_flow(jet, params, t, steps, tol=tol)
    checks = {}
    for name, value in flow.residuals.items():
        checks[f"law:{name}"] = (value, tol.gauge_law)
    comp = gauge.composition_residual(jet, params, 0.5 * t, 0.5 * t, steps, tol=tol)
    checks["composition"] = (comp, tol.composition)
    p = params.full(jet.m)
    if not (np.any(p.pi_ab) or np.any(p.pi_a0) or np.any(p.pi_a1) or p.pi_n0):
        checks["focus_invariance"] = (gauge.check_focus_invariance(jet, params, t, steps), tol.gauge_law)
    weights = {}
    for name in sorted(gauge.WEIGHTS):
        try:
            w = gauge.check_weight(name, jet, WEIGHT_PROBE, 1.0, steps, tol=tol)
        except ValueError:
            continue
        weights[name] = {"measured": w.weight, "expected": w.expected, "error": w.error}
        checks[f"weight:{name}"] = (w.error, tol.weight)
    table = {k: {"residual": v, "tolerance": tl, "ok": bool(v <= tl)} for k, (v, tl) in checks.items()}
    return {
        "t": t, "steps": steps, "params": params.to_dict(),
        "checks": table, "weights": weights,
        "ok": all(row["ok"] for row in table.values()),
    }


def cmd_gauge_check(cfg: RunConfig, params_path: str | None, t: float, steps: int) -> int:
    if len(cfg.inputs) != 1:
        raise UsageError("gauge-check needs exactly one --input jet file")
    if steps < gauge.MIN_STEPS:
        raise UsageError(f"--steps must be at least {gauge.MIN_STEPS}")
    try:
        jet = load_jet(cfg.inputs[0], tol=cfg.tol)
    except (JetError, OSError) as exc:
        _err(f"{cfg.inputs[0]}: {getattr(exc, 'category', 'io')} error: {exc}")
        return EXIT_INVALID
    params = gauge.GaugeParams()
    if params_path is not None:
        try:
            with open(params_path, encoding="utf-8") as fh:
                params = gauge.GaugeParams.from_dict(json.load(fh))
            params.full(jet.m)
        except (OSError, ValueError, TypeError) as exc:
            _err(f"{params_path}: invalid gauge parameters: {exc}")
            return EXIT_INVALID
    rep = _gauge_report(jet, params, t, steps, cfg.tol)
    rep["input"] = str(cfg.inputs[0])
    _emit(cfg, {"command": "gauge-check", "report": rep})
    if not rep["ok"]:
        bad = sorted(k for k, v in rep["checks"].items() if not v["ok"])
        _err(f"residuals above tolerance: {', '.join(bad)}")
        return EXIT_DEGENERATE
    return EXIT_OK


# -- cartan ---------------------------------------------------------------------------


def cmd_cartan(cfg: RunConfig, dims) -> int:
    for n in dims:
        if n < 4:
            _err(f"n must be at least 4, got {n}")
            return EXIT_INVALID
    reports = _pmap(cfg, lambda n: cartan_test.characters(
        n, seed=cfg.seed, threshold=cfg.tol.pivot).to_dict(), dims)
    _emit(cfg, {"command": "cartan", "reports": reports})
    return EXIT_OK


# -- model ----------------------------------------------------------------------------


def _default_generators(spec: flat_model.ModelSpec, count: int, rng):
    m = spec.m
    lo = np.full(m, 0.4)
    hi = np.full(m, np.pi - 0.4)
    hi[-1] = 2 * np.pi - 0.4      # the last angle runs round the circle
    return [lo + (hi - lo) * rng.random(m) for _ in range(count)]


def _model_item(spec, u, t0, t1, steps):
    p = np.concatenate([[t0], u])
    sample = flat_model.sample_point(spec, p)
    raw = sample.jet.replace(lam=sample.raw_lambda, harmonic_normalized=False)
    foci = singular_points(raw).s
    dev = flat_model.develop_along_generator(spec, u, t0, t1, steps)
    return sample, foci, dev


def cmd_model(cfg: RunConfig) -> int:
    if len(cfg.inputs) != 1:
        raise UsageError("model needs exactly one --input spec file")
    if cfg.out is None:
        raise UsageError("model needs --out DIR")
    try:
        with open(cfg.inputs[0], encoding="utf-8") as fh:
            raw = json.load(fh)
        gens = raw.pop("generators", None)
        count = int(raw.pop("count", 4))
        t0, t1 = (float(x) for x in raw.pop("t_range", (0.0, 1.0)))
        steps = int(raw.pop("steps", 200))
        spec = flat_model.ModelSpec.from_dict(raw)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        _err(f"{cfg.inputs[0]}: invalid model spec: {exc}")
        return EXIT_INVALID
    rng = np.random.default_rng(cfg.seed)
    gens = _default_generators(spec, count, rng) if gens is None else [np.asarray(g, float) for g in gens]
    for u in gens:
        if u.shape != (spec.m,):
            _err(f"generator needs {spec.m} angles, got {u.shape[0]}")
            return EXIT_INVALID
    try:
        items = _pmap(cfg, lambda u: _model_item(spec, u, t0, t1, steps), gens)
    except flat_model.SingularChartPoint as exc:
        _err(str(exc))
        return EXIT_DEGENERATE
    os.makedirs(cfg.out, exist_ok=True)
    summary = []
    for i, (sample, foci, dev) in enumerate(items):
        jet_name = f"jet_{i:03d}.json"
        traj_name = f"trajectory_{i:03d}.csv"
        save_jet(sample.jet, os.path.join(cfg.out, jet_name))
        flat_model.write_trajectory_csv(os.path.join(cfg.out, traj_name), dev)
        summary.append({
            "generator": i, "u": sample.point[1:], "t": sample.point[0],
            "jet": jet_name, "trajectory": traj_name, "foci": foci,
            "harmonic_pole": sample.lambda_mean,
            "principal_angle": dev.max_angle, "gram_defect": dev.gram_defect,
            "diagnostics": sample.diagnostics,
        })
    flat_model.write_foci_csv(os.path.join(cfg.out, "foci.csv"),
                              [(i, foci) for i, (_, foci, _) in enumerate(items)])
    report = {"command": "model", "spec": spec.to_dict(), "seed": cfg.seed, "generators": summary}
    name = "report.csv" if cfg.fmt == "csv" else "report.json"
    with open(os.path.join(cfg.out, name), "w", encoding="utf-8") as fh:
        fh.write(to_csv(report) if cfg.fmt == "csv" else dumps(report))
    return EXIT_OK


# -- entry point ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", "-i", action="append", default=[], metavar="PATH",
                        help="input file (repeat for several)")
    common.add_argument("--out", "-o", metavar="PATH", help="output file (directory for model)")
    common.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
    common.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                        help=f"override a tolerance; preset from ${PROFILE_ENV}")
    common.add_argument("--jobs", "-j", type=int, default=1)
    common.add_argument("--seed", type=int, default=0)

    ap = argparse.ArgumentParser(prog="ljet", description="Invariant normalization of lightlike hypersurface jets.")
    sub = ap.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", parents=[common], help="foci, normalization and connection of jets")
    a.add_argument("paths", nargs="*", help="jet files (same as --input)")
    g = sub.add_parser("gauge-check", parents=[common], help="transformation laws along a gauge flow")
    g.add_argument("--params", metavar="PATH", help="JSON with pi00, pi11, pi01, pi_ab, pi_a0, pi_a1, pi_n0")
    g.add_argument("--t", type=float, default=1.0)
    g.add_argument("--steps", type=int, default=1000)
    c = sub.add_parser("cartan", parents=[common], help="Cartan characters of the defining system")
    c.add_argument("-n", "--dim", type=int, nargs="+", required=True)
    sub.add_parser("model", parents=[common], help="flat-model fixtures, trajectories and foci")
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        tol = profile()
        overrides = dict(parse_override(t) for t in args.tol)
        tol = tol.with_overrides(overrides)
        inputs = tuple(args.input) + tuple(getattr(args, "paths", ()) or ())
        cfg = RunConfig(command=args.command, inputs=inputs, out=args.out, tol=tol,
                        jobs=args.jobs, fmt=args.fmt, seed=args.seed)
        if args.command == "analyze":
            return cmd_analyze(cfg)
        if args.command == "gauge-check":
            return cmd_gauge_check(cfg, args.params, args.t, args.steps)
        if args.command == "cartan":
            return cmd_cartan(cfg, args.dim)
        return cmd_model(cfg)
    except (UsageError, KeyError, ValueError) as exc:
        _err(str(exc.args[0]) if exc.args else str(exc))
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
