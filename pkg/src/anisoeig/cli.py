"""Configuration-driven command line: single runs, corpora, and reports.

Subcommands: ``eig`` (solve), ``geom`` (diameter/inradius only), ``model1d``
(profile tables), ``check`` (identity/inequality sweeps), ``corpus`` (batch
runs + CSV summary), ``report`` (re-render a stored report).  Exit codes:
0 all requested checks pass, 1 a check failed, 2 configuration error,
3 numerical failure.

Reports are JSON with full-precision floats; the corpus summary is a CSV
with one row per run in config order, so identical (config, seed, version)
reproduce it byte for byte.  Wall-clock time is recorded in the report's
environment block and is the one field excluded from reproducibility
comparisons.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import math
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator

from . import __version__, analysis, domain, model1d, norms
from .dual_geometry import dual_norm
from .eigensolver import EigenProblem, SolverOptions, refine_and_solve, richardson_extrapolate
from .errors import AnisoeigError, ConfigurationError, NumericalError
from .model1d import OneDModel

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_NORM_SCHEMA = {
    "type": "object",
    "properties": {
        "family": {"enum": ["euclidean", "pnorm", "quadratic", "regularized"]},
        "p": {"type": "number", "exclusiveMinimum": 1.0},
        "A": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
            "minItems": 2,
            "maxItems": 2,
        },
        "base": {"$ref": "#/$defs/norm"},
        "eps": {"type": "number", "exclusiveMinimum": 0.0},
    },
    "required": ["family"],
    "additionalProperties": False,
}

_CHECK_SCHEMA = {
    "type": "object",
    "properties": {
        "name": {
            "enum": [
                "poincare_bound",
                "gradient_comparison",
                "neumann_gradient_bound",
                "dirichlet_gradient_bound",
            ]
        },
        "threshold": {"type": "number", "exclusiveMinimum": 0.0},
        "alphas": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0.0}},
    },
    "required": ["name"],
    "additionalProperties": False,
}

_SOLVER_SCHEMA = {
    "type": "object",
    "properties": {
        "bc": {"enum": ["dirichlet", "neumann"]},
        "levels": {"type": "array", "items": {"type": "integer", "minimum": 0, "maximum": 10},
                   "minItems": 1},
        "grad_tol": {"type": "number", "exclusiveMinimum": 0.0},
        "max_iters": {"type": "integer", "minimum": 1},
        "restarts": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "eps_schedule": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0.0}},
    },
    "required": ["bc", "levels"],
    "additionalProperties": False,
}

RUN_SCHEMA = {
    "$defs": {"norm": _NORM_SCHEMA},
    "type": "object",
    "properties": {
        "norm": {"$ref": "#/$defs/norm"},
        "polygon": {
            "type": "object",
            "properties": {
                "vertices": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "number"},
                              "minItems": 2, "maxItems": 2},
                    "minItems": 3,
                }
            },
            "required": ["vertices"],
            "additionalProperties": False,
        },
        "solver": _SOLVER_SCHEMA,
        "checks": {"type": "array", "items": _CHECK_SCHEMA},
        "output": {
            "type": "object",
            "properties": {
                "out_dir": {"type": "string"},
                "dump_mesh": {"type": "string"},
                "dump_eigenfunction": {"type": "string"},
            },
            "additionalProperties": False,
        },
    },
    "required": ["norm", "polygon", "solver"],
    "additionalProperties": False,
}

CORPUS_SCHEMA = {
    "$defs": {"norm": _NORM_SCHEMA},
    "type": "object",
    "properties": {
        "runs": {"type": "array", "items": RUN_SCHEMA, "minItems": 1},
        "generator": {
            "type": "object",
            "properties": {
                "count": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "n_points": {"type": "integer", "minimum": 3},
                "norms": {"type": "array", "items": {"$ref": "#/$defs/norm"}, "minItems": 1},
                "solver": _SOLVER_SCHEMA,
                "checks": {"type": "array", "items": _CHECK_SCHEMA},
            },
            "required": ["count", "seed", "norms", "solver"],
            "additionalProperties": False,
        },
    },
    "oneOf": [{"required": ["runs"]}, {"required": ["generator"]}],
    "additionalProperties": False,
}


def norm_to_config(spec: norms.NormSpec) -> dict:
    if spec.family == "euclidean":
        return {"family": "euclidean"}
    if spec.family == "p_norm":
        return {"family": "pnorm", "p": spec.p}
    if spec.family == "quadratic":
        return {"family": "quadratic", "A": spec.A.tolist()}
    return {"family": "regularized", "base": norm_to_config(spec.base), "eps": spec.eps}


def norm_from_config(cfg: dict) -> norms.NormSpec:
    fam = cfg["family"]
    if fam == "euclidean":
        return norms.euclidean()
    if fam == "pnorm":
        if "p" not in cfg:
            raise ConfigurationError("pnorm requires a 'p' entry")
        return norms.p_norm(cfg["p"])
    if fam == "quadratic":
        if "A" not in cfg:
            raise ConfigurationError("quadratic requires an 'A' entry")
        return norms.quadratic(cfg["A"])
    if "base" not in cfg or "eps" not in cfg:
        raise ConfigurationError("regularized requires 'base' and 'eps'")
    return norms.regularize(norm_from_config(cfg["base"]), cfg["eps"])


def validate_config(cfg: dict, schema: dict = RUN_SCHEMA) -> None:
    errors = sorted(Draft202012Validator(schema).iter_errors(cfg), key=str)
    if errors:
        first = errors[0]
        path = "/".join(str(p) for p in first.absolute_path) or "<root>"
        raise ConfigurationError(f"config invalid at {path}: {first.message}")


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def run(cfg: dict, seed_override: int | None = None, levels_override=None) -> dict:
    """Execute one configuration: geometry, eigen solves, matched model, checks."""
    validate_config(cfg)
    t_start = time.perf_counter()
    spec = norm_from_config(cfg["norm"])
    try:
        poly = domain.ConvexPolygon(cfg["polygon"]["vertices"])
    except ConfigurationError:
        raise
    scfg = cfg["solver"]
    seed = seed_override if seed_override is not None else scfg.get("seed", 0)
    levels = list(levels_override) if levels_override is not None else list(scfg["levels"])
    opts = SolverOptions(
        max_iters=scfg.get("max_iters", 50000),
        grad_tol=scfg.get("grad_tol", 1e-6),
        restarts=scfg.get("restarts", 2),
        seed=seed,
        eps_schedule=tuple(scfg.get("eps_schedule", ())),
    )
    bc = scfg["bc"]

    d_f = domain.diameter(poly, spec)
    i_f, center = domain.inscribed_wulff_radius(poly, spec)

    problem = EigenProblem(poly, spec, bc, options=opts)
    results = refine_and_solve(problem, levels)
    final = results[-1]
    mesh = domain.triangulate(poly, levels[-1])

    checks = []
    model_echo = None
    for chk in cfg.get("checks", []):
        name = chk["name"]
        if name == "poincare_bound":
            if bc == "neumann":
                rep = analysis.poincare_bound_report(final.lam, d_f, "neumann_diameter")
            else:
                rep = analysis.poincare_bound_report(final.lam, i_f, "dirichlet_inradius")
        elif name == "gradient_comparison":
            if bc != "neumann":
                raise ConfigurationError("gradient_comparison applies to Neumann runs")
            model = model1d.match_model(2, final.lam, float(final.nodal_values.max()))
            sol = model1d.solution_for(model)
            model_echo = {"kind": model.kind, "a": model.a, "clamped": model.clamped,
                          "m": sol.m, "delta": sol.delta}
            rep = analysis.gradient_comparison_check(
                mesh, spec, final, sol, threshold=chk.get("threshold", 0.05))
        elif name == "neumann_gradient_bound":
            if bc != "neumann":
                raise ConfigurationError("neumann_gradient_bound applies to Neumann runs")
            rep = analysis.neumann_gradient_bound_check(
                mesh, spec, final, rel_threshold=chk.get("threshold", 0.05))
        elif name == "dirichlet_gradient_bound":
            if bc != "dirichlet":
                raise ConfigurationError("dirichlet_gradient_bound applies to Dirichlet runs")
            for alpha in chk.get("alphas", [0.01, 0.1, 1.0]):
                rep = analysis.dirichlet_gradient_bound_check(
                    mesh, spec, final, alpha, rel_threshold=chk.get("threshold", 0.05))
                checks.append(rep)
            continue
        checks.append(rep)

    report = {
        "config": cfg,
        "geometry": {"d_F": d_f, "i_F": i_f, "i_F_center": center.tolist(),
                     "area": poly.area(), "n_vertices": poly.n_vertices},
        "eigen": [
            {
                "level": r.level,
                "lambda": r.lam,
                "energy": r.energy,
                "mass": r.mass,
                "mean": r.mean,
                "converged": r.converged,
                "iterations": int(len(r.trace)),
                "final_grad_norm": float(r.trace[-1][1]),
                "zero_grad_area": r.zero_grad_area,
            }
            for r in results
        ],
        "richardson_lambda": richardson_extrapolate(results),
        "model1d": model_echo,
        "checks": [asdict(c) for c in checks],
        "all_checks_passed": all(c.passed for c in checks),
        "environment": {
            "version": __version__,
            "seed": seed,
            "wall_time_s": time.perf_counter() - t_start,
        },
    }

    out = cfg.get("output", {})
    if "dump_mesh" in out:
        domain.dump_mesh(mesh, out["dump_mesh"])
    if "dump_eigenfunction" in out:
        _dump_eigenfunction(mesh, final.nodal_values, out["dump_eigenfunction"])
    if "out_dir" in out:
        path = Path(out["out_dir"])
        path.mkdir(parents=True, exist_ok=True)
        write_report(report, path / "report.json")
    return report


def _dump_eigenfunction(mesh, values, path):
    with open(path, "w") as fh:
        fh.write("# eigenfunction: x y u\n")
        for (x, y), v in zip(mesh.nodes, values):
            fh.write(f"{_fmt(x)} {_fmt(y)} {_fmt(v)}\n")


def write_report(report: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def render_report(report: dict) -> str:
    lines = [f"anisoeig report (version {report['environment']['version']})"]
    geo = report["geometry"]
    lines.append(f"  polygon: {geo['n_vertices']} vertices, area {geo['area']:.6g}")
    lines.append(f"  d_F = {geo['d_F']:.9g}   i_F = {geo['i_F']:.9g}")
    for row in report["eigen"]:
        lines.append(
            f"  level {row['level']}: lambda = {row['lambda']:.9g} "
            f"({'converged' if row['converged'] else 'NOT converged'}, "
            f"{row['iterations']} iterations)"
        )
    if report.get("model1d"):
        m = report["model1d"]
        lines.append(f"  matched 1-D model: kind={m['kind']} a={m['a']:.6g} m={m['m']:.9g}")
    for c in report["checks"]:
        status = "pass" if c["passed"] else "FAIL"
        extra = ""
        if "ratio" in c.get("metadata", {}):
            extra = f" ratio={c['metadata']['ratio']:.9g}"
        lines.append(
            f"  check {c['name']}: {status} worst={c['worst_violation']:.3e} "
            f"threshold={c['threshold']:.3e}{extra}"
        )
    lines.append(f"  all checks passed: {report['all_checks_passed']}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# corpus
# ---------------------------------------------------------------------------


def expand_corpus(cfg: dict) -> list[dict]:
    validate_config(cfg, CORPUS_SCHEMA)
    if "runs" in cfg:
        return cfg["runs"]
    gen = cfg["generator"]
    rng = np.random.default_rng(gen["seed"])
    polys = [
        domain.random_convex_polygon(rng, gen.get("n_points", 8))
        for _ in range(gen["count"])
    ]
    runs = []
    for poly in polys:
        for ncfg in gen["norms"]:
            runs.append(
                {
                    "norm": ncfg,
                    "polygon": {"vertices": poly.vertices.tolist()},
                    "solver": gen["solver"],
                    "checks": gen.get("checks", [{"name": "poincare_bound"}]),
                }
            )
    return runs


def _corpus_one(args):
    idx, cfg, seed_override = args
    try:
        rep = run(cfg, seed_override=seed_override)
        return idx, rep, None
    except AnisoeigError as exc:
        return idx, None, f"{type(exc).__name__}: {exc}"


def corpus(run_cfgs: list[dict], parallelism: int = 1, out_dir=None,
           seed_override: int | None = None):
    """Run a list of configurations; returns (summary rows, reports, exit code).

    Rows are ordered by config index regardless of completion order.
    """
    if not run_cfgs:
        raise ConfigurationError("corpus needs at least one run configuration")
    jobs = [(i, cfg, seed_override) for i, cfg in enumerate(run_cfgs)]
    results = [None] * len(jobs)
    if parallelism > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=parallelism) as pool:
            for idx, rep, err in pool.map(_corpus_one, jobs):
                results[idx] = (rep, err)
    else:
        for job in jobs:
            idx, rep, err = _corpus_one(job)
            results[idx] = (rep, err)

    rows = []
    for i, (rep, err) in enumerate(results):
        if err is not None:
            rows.append({"index": i, "error": err})
            continue
        final = rep["eigen"][-1]
        ratios = [c["metadata"]["ratio"] for c in rep["checks"] if "ratio" in c["metadata"]]
        rows.append(
            {
                "index": i,
                "norm": json.dumps(rep["config"]["norm"], sort_keys=True),
                "bc": rep["config"]["solver"]["bc"],
                "level": final["level"],
                "lambda": final["lambda"],
                "d_F": rep["geometry"]["d_F"],
                "i_F": rep["geometry"]["i_F"],
                "ratio": ratios[0] if ratios else math.nan,
                "converged": final["converged"],
                "passed": rep["all_checks_passed"],
            }
        )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for i, (rep, err) in enumerate(results):
            if rep is not None:
                write_report(rep, out / f"run_{i:04d}.json")
        write_summary_csv(rows, out / "summary.csv")
    failed = any("error" in r or not r.get("passed", False) for r in rows)
    return rows, [r for r, _ in results], (EXIT_CHECK_FAILED if failed else EXIT_OK)


_CSV_FIELDS = ["index", "norm", "bc", "level", "lambda", "d_F", "i_F", "ratio",
               "converged", "passed", "error"]


def write_summary_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_CSV_FIELDS)
        writer.writeheader()
        for row in rows:
            out = dict(row)
            for key in ("lambda", "d_F", "i_F", "ratio"):
                if key in out and out[key] is not None and not isinstance(out[key], str):
                    out[key] = _fmt(out[key])
            writer.writerow({k: out.get(k, "") for k in _CSV_FIELDS})


# ---------------------------------------------------------------------------
# identity / inequality sweep driver for the `check` subcommand
# ---------------------------------------------------------------------------


def check_sweeps(spec: norms.NormSpec, n_samples: int, seed: int) -> list[analysis.CheckReport]:
    rng = np.random.default_rng(seed)
    reports = []

    worst = (-np.inf, None)
    homog = (-np.inf, None)
    for _ in range(n_samples):
        u = analysis.random_polynomial(rng, 3)
        x = analysis.safe_probe_point(spec, u, rng)
        g = u.grad(x)
        t = norms.eval_tensors(spec, g, want_a3=True)
        scale = 1.0 + abs(float(np.einsum("ij,ij->", t.a, u.hess(x))))
        r = analysis.bochner_residual(spec, u, x) / scale
        h = float(np.abs(np.einsum("ijk,k->ij", t.a3, g)).max())
        if r > worst[0]:
            worst = (r, x)
        if h > homog[0]:
            homog = (h, x)
    reports.append(analysis.make_report("bochner_identity", n_samples, worst[0], worst[1], 1e-8))
    reports.append(analysis.make_report("a3_homogeneity", n_samples, homog[0], homog[1], 1e-10))

    for name, fn in (("kato", analysis.kato_gap), ("extended_cd", analysis.extended_cd_gap)):
        low = (np.inf, None)
        for _ in range(n_samples):
            u = analysis.random_polynomial(rng, 3)
            x = analysis.safe_probe_point(spec, u, rng)
            gap = fn(spec, u, x)
            scale = 1.0 + abs(gap)
            if gap / scale < low[0]:
                low = (gap / scale, x)
        reports.append(analysis.make_report(f"{name}_nonnegative", n_samples, -low[0], low[1], 1e-10))

    low = (np.inf, None)
    for _ in range(n_samples):
        xi = rng.standard_normal(2)
        eta = rng.standard_normal(2)
        from .dual_geometry import cauchy_schwarz_gap

        gap = cauchy_schwarz_gap(spec, xi, eta)
        scale = norms.eval_norm(spec, xi) * dual_norm(spec, eta).value + 1e-300
        if gap / scale < low[0]:
            low = (gap / scale, xi)
    reports.append(analysis.make_report("cauchy_schwarz_nonnegative", n_samples, -low[0], low[1], 1e-10))
    return reports


# ---------------------------------------------------------------------------
# argparse front end
# ---------------------------------------------------------------------------


def _load_config(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigurationError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from exc


def _parse_levels(text):
    return [int(tok) for tok in text.split(",") if tok]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="anisoeig",
                                     description="anisotropic first-eigenvalue laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eig = sub.add_parser("eig", help="solve one eigenvalue run from a config")
    p_eig.add_argument("--config", required=True)
    p_eig.add_argument("--seed", type=int)
    p_eig.add_argument("--levels", type=_parse_levels)
    p_eig.add_argument("--out")
    p_eig.add_argument("--dump-mesh")
    p_eig.add_argument("--dump-eigenfunction")

    p_geom = sub.add_parser("geom", help="diameter and inscribed radius only")
    p_geom.add_argument("--config", required=True)

    p_model = sub.add_parser("model1d", help="1-D profile tables")
    p_model.add_argument("--n", type=int, default=2)
    p_model.add_argument("--lam", type=float, default=1.0)
    p_model.add_argument("--a-values", default="0,0.1,1,10,100")
    p_model.add_argument("--dump-solution", help="CSV of (t, v, v') for the first a value")
    p_model.add_argument("--out")

    p_check = sub.add_parser("check", help="identity/inequality sweeps")
    p_check.add_argument("--config", required=True, help="config with a 'norm' entry")
    p_check.add_argument("--samples", type=int, default=100)
    p_check.add_argument("--seed", type=int, default=0)

    p_corpus = sub.add_parser("corpus", help="run a batch of configs")
    p_corpus.add_argument("--config", required=True)
    p_corpus.add_argument("--parallelism", type=int, default=1)
    p_corpus.add_argument("--seed", type=int)
    p_corpus.add_argument("--out", required=True)

    p_report = sub.add_parser("report", help="re-render a stored report")
    p_report.add_argument("--report", required=True)

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def _dispatch(args) -> int:
    if args.command == "eig":
        cfg = _load_config(args.config)
        if args.dump_mesh or args.dump_eigenfunction or args.out:
            out = dict(cfg.get("output", {}))
            if args.dump_mesh:
                out["dump_mesh"] = args.dump_mesh
            if args.dump_eigenfunction:
                out["dump_eigenfunction"] = args.dump_eigenfunction
            if args.out:
                out["out_dir"] = args.out
            cfg["output"] = out
        rep = run(cfg, seed_override=args.seed, levels_override=args.levels)
        print(render_report(rep))
        return EXIT_OK if rep["all_checks_passed"] else EXIT_CHECK_FAILED

    if args.command == "geom":
        cfg = _load_config(args.config)
        validate_config(cfg)
        spec = norm_from_config(cfg["norm"])
        poly = domain.ConvexPolygon(cfg["polygon"]["vertices"])
        d_f = domain.diameter(poly, spec)
        i_f, center = domain.inscribed_wulff_radius(poly, spec)
        print(f"d_F = {_fmt(d_f)}")
        print(f"i_F = {_fmt(i_f)} at center ({_fmt(center[0])}, {_fmt(center[1])})")
        return EXIT_OK

    if args.command == "model1d":
        a_values = [float(tok) for tok in args.a_values.split(",") if tok]
        lines = ["a,b,delta,m"]
        first_sol = None
        for a in a_values:
            model = OneDModel(args.n, args.lam, "T_radial", a)
            sol = model1d.solve_model(model)
            if first_sol is None:
                first_sol = sol
            lines.append(f"{_fmt(a)},{_fmt(sol.b)},{_fmt(sol.delta)},{_fmt(sol.m)}")
        table = "\n".join(lines) + "\n"
        if args.out:
            Path(args.out).write_text(table)
        else:
            sys.stdout.write(table)
        if args.dump_solution and first_sol is not None:
            with open(args.dump_solution, "w", newline="") as fh:
                fh.write("t,v,v_prime\n")
                for t, v, vp in zip(first_sol.t_grid, first_sol.v, first_sol.v_prime):
                    fh.write(f"{_fmt(t)},{_fmt(v)},{_fmt(vp)}\n")
        return EXIT_OK

    if args.command == "check":
        cfg = _load_config(args.config)
        if "norm" not in cfg:
            raise ConfigurationError("check config needs a 'norm' entry")
        validate_config(cfg["norm"], {**_NORM_SCHEMA, "$defs": {"norm": _NORM_SCHEMA}})
        spec = norm_from_config(cfg["norm"])
        reports = check_sweeps(spec, args.samples, args.seed)
        ok = True
        for rep in reports:
            status = "pass" if rep.passed else "FAIL"
            print(f"{rep.name}: {status} worst={rep.worst_violation:.3e} "
                  f"threshold={rep.threshold:.3e} samples={rep.sample_count}")
            ok &= rep.passed
        return EXIT_OK if ok else EXIT_CHECK_FAILED

    if args.command == "corpus":
        cfg = _load_config(args.config)
        runs = expand_corpus(cfg)
        rows, _, code = corpus(runs, parallelism=args.parallelism, out_dir=args.out,
                               seed_override=args.seed)
        n_failed = sum(1 for r in rows if "error" in r or not r.get("passed", False))
        print(f"corpus: {len(rows)} runs, {n_failed} failed; summary in {args.out}/summary.csv")
        return code

    if args.command == "report":
        with open(args.report) as fh:
            print(render_report(json.load(fh)))
        return EXIT_OK

    raise ConfigurationError(f"unknown command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
