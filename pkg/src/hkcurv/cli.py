"""Command-line driver: ``hkcurv quotient|nahm|catalog ...``.

Each run writes ``<name>.json`` (report envelope) and ``<name>.csv`` (flat
samples) into ``--output-dir``, ``$HKCURV_OUTPUT_DIR`` or ``./hkcurv-out``.
Exit codes: 0 all checks pass, 1 an inequality is violated, 2 bad
configuration, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import os
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, curv, nahm
from .catalog import CatalogEntry, EXAMPLES, NahmExample, catalog_ids, load_catalog_example
from .chart import chart_sectional_curvature
from .errors import HKCurvError, UnknownExample
from .hkquot import GroupActionSpec, project_to_level

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
OUTPUT_ENV = "HKCURV_OUTPUT_DIR"
SLACK = 1e-8


class ConfigError(ValueError):
    pass


def load_schema(name):
    text = resources.files("hkcurv").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _fmt(x):
    """17 significant digits for CSV cells."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _check(margin, slack=SLACK):
    m = None if margin is None or not math.isfinite(margin) else float(margin)
    return {"margin": m, "passed": bool(m is None or m >= -slack)}


def recompute_passed(report):
    """Pass/fail flags from the stored margins alone."""
    slack = report["slack"]
    flags = {k: (v["margin"] is None or v["margin"] >= -slack) for k, v in report["checks"].items()}
    return flags, all(flags.values())


def _spec_from_inline(d):
    gens = np.asarray(d["generators"], float)
    kw = {"name": d.get("name", "inline"), "null_cone_locally_free": d.get("null_cone_locally_free")}
    if d["kind"] == "quaternionic":
        if gens.ndim == 3:
            gens = gens[None]
        return GroupActionSpec.quaternionic(gens, **kw)
    imag = np.asarray(d.get("generators_imag", np.zeros_like(gens)), float)
    cm = gens + 1j * imag
    if cm.ndim == 2:
        cm = cm[None]
    return GroupActionSpec.complex(cm, **kw)


def _quotient_entry(cfg):
    if "spec" in cfg:
        spec = _spec_from_inline(cfg["spec"])
        if "level" not in cfg:
            raise ConfigError("inline spec needs a level")
        level = np.asarray(cfg["level"], float)
        base = np.asarray(cfg.get("base_point", np.eye(spec.n)[0]), float)
        entry = CatalogEntry("inline", "inline spec", spec, level, base)
    elif "example" in cfg:
        entry = load_catalog_example(cfg["example"])
        if not isinstance(entry, CatalogEntry):
            raise ConfigError(f"{cfg['example']} is not a quotient example")
        if "level" in cfg:
            entry = CatalogEntry(entry.id, entry.description, entry.spec,
                                 np.asarray(cfg["level"], float), entry.base_point, entry.ray_factory)
    else:
        raise ConfigError("need --example or an inline spec")
    if entry.level.shape != (entry.spec.m, entry.spec.k):
        raise ConfigError(f"level must have shape {(entry.spec.m, entry.spec.k)}")
    return entry


def _points(entry, count, rng):
    """The base point, then projections of random perturbations of it."""
    pts = [project_to_level(entry.spec, entry.base_point, entry.level)]
    while len(pts) < count:
        q0 = entry.base_point + 0.5 * rng.standard_normal(entry.spec.n)
        pts.append(project_to_level(entry.spec, q0, entry.level))
    return pts


def run_quotient_verify(cfg):
    entry = _quotient_entry(cfg)
    rng = np.random.default_rng(cfg["seed"])
    slack = cfg.get("tolerances", {}).get("slack", SLACK)
    planes = cfg.get("planes", 1000)
    restarts = cfg.get("restarts", 32)
    rows, points, checks = [], [], {}
    for pid, p in enumerate(_points(entry, cfg.get("points", 1), rng)):
        rep = curv.verify_bounds(p, planes, seed=int(rng.integers(2 ** 31)), restarts=restarts)
        for name, (_, margin) in rep.checks().items():
            prev = checks.get(name)
            if prev is None or margin < prev:
                checks[name] = margin
        V2 = rep.V ** 2
        for j in range(rep.n_planes):
            rows.append([pid, j, rep.K_Q[j], rep.K_level[j], rep.vertical_sq[j], rep.V,
                         rep.euclidean.F, rep.euclidean.l, rep.quotient_factor * V2,
                         rep.quotient_factor * V2 - abs(rep.K_Q[j])])
        points.append({
            "point_id": pid, "q": p.q, "residual": p.residual, "dim_h": p.dim_h,
            "max_abs_K_Q": float(np.max(np.abs(rep.K_Q), initial=0.0)),
            "estimators": {r.norm_choice: {"V": r.V, "F": r.F, "l": r.l, "Cnorm": r.Cnorm,
                                           "l_bound1": r.l_bound1, "l_bound2": r.l_bound2,
                                           "restarts": r.restarts, "iterations": r.iterations}
                           for r in (rep.euclidean, rep.metric)},
            "kahler_best_K_Q": rep.kahler_best,
        })
        if rep.kahler_best is not None:
            # the lower bound is reported, never failed, from sampling
            points[-1]["kahler_best_over_V"] = rep.kahler_best / rep.V if rep.V > 0 else None
    header = ["point_id", "plane_id", "K_Q", "K_level", "A_sq", "V", "F", "l", "bound", "margin"]
    results = {"example": entry.id, "mode": "kahler" if entry.spec.is_kahler else "hyperkahler",
               "points": points, "planes": planes,
               "violations": int(sum(r[-1] < -slack for r in rows))}
    return results, {k: _check(v, slack) for k, v in checks.items()}, header, rows


def run_quotient_curvature(cfg):
    entry = _quotient_entry(cfg)
    rng = np.random.default_rng(cfg["seed"])
    p = _points(entry, cfg.get("points", 1), rng)[-1]
    planes = cfg.get("planes", 10)
    oracle = cfg.get("oracle", False)
    x, y = curv.sample_planes(p.dim_h, planes, rng) if p.dim_h >= 2 else (np.zeros((0, 0)),) * 2
    rows, worst = [], 0.0
    for j in range(len(x)):
        s = curv.sectional_curvature(p, p.horizontal @ x[j], p.horizontal @ y[j])
        row = [j, s.K_Q, s.K_level, s.vertical_sq]
        if oracle:
            k = chart_sectional_curvature(p, x[j], y[j])
            rel = abs(s.K_Q - k) / max(abs(k), 1e-12)
            worst = max(worst, rel)
            row += [k, rel]
        rows.append(row)
    header = ["plane_id", "K_Q", "K_level", "A_sq"] + (["K_chart", "rel_diff"] if oracle else [])
    checks = {"K_Q-K_level>=0": _check(min((r[1] - r[2] for r in rows), default=math.inf))}
    if oracle:
        checks["chart_oracle_rel<=1e-4"] = _check(1e-4 - worst, 0.0)
    results = {"example": entry.id, "q": p.q, "residual": p.residual, "dim_h": p.dim_h}
    return results, checks, header, rows


def run_quotient_scan(cfg):
    entry = _quotient_entry(cfg)
    rng = np.random.default_rng(cfg["seed"])
    radii = cfg.get("radii", [2, 4, 8, 16])
    ray = entry.ray(rng)
    table = curv.asymptotic_scan(entry.spec, entry.level, ray, radii, cfg.get("planes", 200),
                                 seed=cfg["seed"], restarts=cfg.get("restarts", 16))
    factor = 5.0 if entry.spec.is_kahler else 9.0
    rows = [[r.radius, r.norm_q, r.max_abs_K, r.V, r.l, r.F, r.residual] for r in table]
    header = ["radius", "norm_q", "max_abs_K_Q", "V", "l", "F", "residual"]
    checks = {"max|K_Q|<=%gV^2" % factor: _check(min(factor * r.V ** 2 - r.max_abs_K for r in table))}
    results = {"example": entry.id, "null_cone_locally_free": entry.spec.null_cone_locally_free,
               "rows": [dict(zip(header, r)) for r in rows]}
    if len(table) > 1:
        results["decay_ratio"] = table[-1].max_abs_K / table[0].max_abs_K if table[0].max_abs_K else None
    return results, checks, header, rows


def _nahm_interval(cfg):
    a = float(cfg.get("a", 0.0))
    b = float(cfg.get("b", 1.0))
    if not b > a:
        raise ConfigError("need b > a")
    return a, b, int(cfg.get("nodes", 96))


def run_nahm_green(cfg):
    a, b, n = _nahm_interval(cfg)
    spec = cfg.get("lambda", "zero")
    config = nahm.NahmConfig(a, b, n=n)
    if spec == "zero":
        lam = 0.0
    elif spec == "axial":
        lam = nahm.lambda_floor(nahm.make_axial_solution(a, b, n))
    else:
        lam = float(spec.split(":", 1)[1])
        if lam < 0:
            raise ConfigError("const lambda must be nonnegative")
    ge = nahm.compute_N(config, lam)
    rng = np.random.default_rng(cfg["seed"])
    s = np.linspace(a, b, 101)[1:-1]
    G = ge.kernel(s[:, None], s[None, :])
    ratios = ge.forcing_check(rng, 20)
    L = b - a
    results = {"a": a, "b": b, "lambda": spec, "N": ge.N, "s_star": ge.s_star, "W": ge.W,
               "kappa": list(ge.kappa), "N_zero": L / 4, "forcing_ratios": ratios}
    if spec.startswith("const:"):
        k = float(spec.split(":", 1)[1])
        results["N_closed_form"] = math.tanh(k * L / 2) / (2 * k) if k > 0 else L / 4
    scale = max(abs(G).max(), 1e-300)
    checks = {
        "kernel_symmetric": _check(1e-10 - float(np.max(np.abs(G - G.T))) / scale, 0.0),
        "kernel_one_sign": _check(-float(np.max(G)), 0.0),
        "N<=N(0)": _check(L / 4 - ge.N),
        "forcing<=N": _check(1.0 - float(ratios.max())),
    }
    rows = [[t, -ge.kernel(t, t)] for t in s]
    return results, checks, ["s", "G_diag_abs"], rows


def run_nahm_bound(cfg):
    a, b, n = _nahm_interval(cfg)
    tol = cfg.get("tolerances", {}).get("residual", 1e-8)
    sol = nahm.make_axial_solution(a, b, n)
    lam = nahm.lambda_floor(sol)
    rep = nahm.curvature_bound(sol, lam)
    res = nahm.nahm_residual(sol)
    rng = np.random.default_rng(cfg["seed"])
    gauge_dev = 0.0
    for _ in range(cfg.get("gauges", 0)):
        g = nahm.gauge_transform(sol, nahm.random_gauge(sol.config, rng))
        r2 = nahm.curvature_bound(g)
        gauge_dev = max(gauge_dev, abs(r2.N - rep.N), abs(r2.stated - rep.stated),
                        abs(r2.composed - rep.composed), float(np.max(np.abs(nahm.lambda_floor(g) - lam))))
    L = b - a
    results = {"a": a, "b": b, "nodes": n, "residual": res, "N": rep.N, "statedBound": rep.stated,
               "composedBound": rep.composed, "coarseBound": rep.coarse,
               "identityDefect": rep.identity_defect, "lambda_min": rep.lam_min,
               "gauge_deviation": gauge_dev}
    checks = {
        "residual<=tol": _check(tol - res, 0.0),
        "N<=N(0)": _check(L / 4 - rep.N),
        "stated<=coarse": _check(rep.coarse - rep.stated),
        "identity": _check(1e-12 * max(1.0, rep.coarse) - rep.identity_defect, 0.0),
        "gauge_invariance": _check(1e-8 - gauge_dev, 0.0),
    }
    rows = [[t, l] for t, l in zip(sol.config.nodes, lam)]
    return results, checks, ["s", "lambda"], rows


def run_catalog_list(cfg):
    rows = []
    for cid in catalog_ids():
        e = EXAMPLES[cid]()
        kind = "nahm" if isinstance(e, NahmExample) else ("kahler" if e.spec.is_kahler else "hyperkahler")
        rows.append([cid, kind, e.description])
    return {"examples": [r[0] for r in rows]}, {}, ["id", "kind", "description"], rows


COMMANDS = {
    "quotient verify": run_quotient_verify,
    "quotient curvature": run_quotient_curvature,
    "quotient scan": run_quotient_scan,
    "nahm green": run_nahm_green,
    "nahm bound": run_nahm_bound,
    "catalog list": run_catalog_list,
}


def build_parser():
    p = argparse.ArgumentParser(prog="hkcurv", description="Curvature of hyperkähler and Kähler quotients.")
    top = p.add_subparsers(dest="group", required=True)

    def common(sp, seed_required):
        sp.add_argument("--config", help="RunConfig JSON file; explicit flags override it")
        sp.add_argument("--seed", type=int, required=False,
                        help="random seed" + (" (required)" if seed_required else " (default 0)"))
        sp.add_argument("--output-dir", dest="output_dir")

    q = top.add_parser("quotient").add_subparsers(dest="action", required=True)
    for name in ("verify", "curvature", "scan"):
        sp = q.add_parser(name)
        common(sp, True)
        sp.add_argument("--example")
        sp.add_argument("--planes", type=int)
        sp.add_argument("--points", type=int)
        sp.add_argument("--restarts", type=int)
        if name == "scan":
            sp.add_argument("--radii", type=lambda s: [float(v) for v in s.split(",")])
        if name == "curvature":
            sp.add_argument("--oracle", action="store_true", default=None)
    nh = top.add_parser("nahm").add_subparsers(dest="action", required=True)
    for name in ("bound", "green"):
        sp = nh.add_parser(name)
        common(sp, False)
        sp.add_argument("--a", type=float)
        sp.add_argument("--b", type=float)
        sp.add_argument("--nodes", type=int)
        if name == "green":
            sp.add_argument("--lambda", dest="lambda_", metavar="{zero,axial,const:K}")
        else:
            sp.add_argument("--gauges", type=int)
    cat = top.add_parser("catalog").add_subparsers(dest="action", required=True)
    common(cat.add_parser("list"), False)
    return p


def config_from_args(args):
    command = f"{args.group} {args.action}"
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        if cfg.get("command", command) != command:
            raise ConfigError(f"config is for {cfg['command']!r}, not {command!r}")
    cfg["command"] = command
    for key, val in vars(args).items():
        if key in ("group", "action", "config") or val is None:
            continue
        cfg["lambda" if key == "lambda_" else key] = val
    if "seed" not in cfg:
        if args.group == "quotient":
            raise ConfigError("a seed is required (--seed or \"seed\" in the config)")
        cfg["seed"] = 0
    try:
        jsonschema.validate(cfg, load_schema("run_config"))
    except jsonschema.ValidationError as exc:
        raise ConfigError(exc.message) from exc
    return cfg


def output_dir(cfg):
    return Path(cfg.get("output_dir") or os.environ.get(OUTPUT_ENV) or "hkcurv-out")


def write_outputs(cfg, results, checks, header, rows):
    out = output_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    stem = cfg["command"].replace(" ", "-")
    if cfg.get("example"):
        stem += "-" + cfg["example"]
    csv_path = out / f"{stem}.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    report = _jsonable({
        "tool": "hkcurv",
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "config": cfg,
        "results": results,
        "checks": checks,
        "slack": cfg.get("tolerances", {}).get("slack", SLACK),
        "passed": all(c["passed"] for c in checks.values()),
        "csv": csv_path.name,
    })
    jsonschema.validate(report, load_schema("report"))
    json_path = out / f"{stem}.json"
    # repr floats are the shortest strings that parse back to the same double
    json_path.write_text(json.dumps(report, indent=2, allow_nan=False) + "\n")
    return report, json_path, csv_path


def run_command(argv=None):
    """Parse, run and write reports; returns (exit code, report or None)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (EXIT_OK if exc.code == 0 else EXIT_CONFIG), None
    try:
        cfg = config_from_args(args)
        results, checks, header, rows = COMMANDS[cfg["command"]](cfg)
    except UnknownExample as exc:
        print(f"hkcurv: configuration error: unknown example {exc}", file=sys.stderr)
        return EXIT_CONFIG, None
    except HKCurvError as exc:
        print(f"hkcurv: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC, None
    except (ConfigError, ValueError) as exc:
        print(f"hkcurv: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG, None
    except np.linalg.LinAlgError as exc:
        print(f"hkcurv: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC, None
    report, json_path, csv_path = write_outputs(cfg, results, checks, header, rows)
    if cfg["command"] == "catalog list":
        for r in rows:
            print(f"{r[0]:16s} {r[1]:12s} {r[2]}")
    failed = [k for k, v in checks.items() if not v["passed"]]
    status = "FAIL " + ", ".join(failed) if failed else "ok"
    print(f"{cfg['command']}: {status} -> {json_path}")
    return (EXIT_VIOLATION if failed else EXIT_OK), report


def main(argv=None):
    code, _ = run_command(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
