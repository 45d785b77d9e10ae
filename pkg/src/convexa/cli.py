"""Command-line entry point: ``convexa {compute, verify, sweep, formulas}``.

Exit codes: 0 success, 1 a check failed, 2 configuration error, 3 numeric
error.  Errors are reported as one JSON object on stderr.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys
from collections import Counter

import numpy as np

from . import bodies as B
from . import bounds as BD
from . import harness as H
from . import measures as MS
from .errors import NumericError
from .functionals import mean_norm, mean_width, volumetric_profile, vrad
from .sampling import RngStream

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

FUNCTIONALS = ("mean_norm", "mean_width", "vrad", "profile:w_k", "profile:v_k_minus",
               "isotropic_constant", "centroid_support", "psi_alpha")
BODY_FUNCTIONALS = FUNCTIONALS[:5]
SEQUENCE_PARAMS = {"semiaxes", "w_profile", "v_minus_profile", "e_profile"}


class ConfigError(ValueError):
    pass


def _emit(obj, fh=None):
    fh = fh or sys.stdout
    fh.write(json.dumps(H._clean(obj), sort_keys=True, allow_nan=False) + "\n")


def _error(kind, exc, code):
    _emit({"schema_version": H.SCHEMA_VERSION, "error": kind, "type": type(exc).__name__,
           "message": str(exc)}, sys.stderr)
    return code


def _load_json(arg, what):
    """Parse ``arg`` as a path to a JSON file, or as inline JSON."""
    try:
        if os.path.exists(arg):
            with open(arg) as fh:
                return json.load(fh)
        if arg.lstrip().startswith(("{", "[")):
            return json.loads(arg)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what}: invalid JSON ({exc})") from exc
    raise ConfigError(f"{what}: no such file {arg!r}")


def _parse_dir(text, n):
    text = text.strip()
    if text.startswith("e") and text[1:].isdigit():
        i = int(text[1:])
        if not 1 <= i <= n:
            raise ConfigError(f"--dir {text} outside 1..{n}")
        y = np.zeros(n)
        y[i - 1] = 1.0
        return y
    try:
        y = np.array([float(t) for t in text.split(",")])
    except ValueError as exc:
        raise ConfigError(f"--dir must be eN or a comma list, got {text!r}") from exc
    if y.shape != (n,) or not np.linalg.norm(y) > 0:
        raise ConfigError(f"--dir needs {n} entries, not all zero")
    return y / np.linalg.norm(y)


def _floats(text, what):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"{what} must be a comma list of numbers") from exc


# -- compute -------------------------------------------------------------------

def _profile_json(prof):
    return {"schema_version": H.SCHEMA_VERSION, "index_name": prof.index_name,
            "bias_note": prof.bias_note,
            "points": [{"index": i, **est.to_dict()} for i, est in prof.points]}


def cmd_compute(args):
    if (args.body is None) == (args.measure is None):
        raise ConfigError("give exactly one of --body or --measure")
    f = args.functional
    if f not in FUNCTIONALS:
        raise ConfigError(f"unknown functional {f!r}; choose from {', '.join(FUNCTIONALS)}")
    rng = RngStream(args.seed)
    N = args.samples
    if args.body is not None:
        if f not in BODY_FUNCTIONALS:
            raise ConfigError(f"{f} needs --measure")
        body = B.body_from_spec(_load_json(args.body, "--body"))
        if f == "mean_norm":
            out = mean_norm(body, N, rng, args.method)
        elif f == "mean_width":
            out = mean_width(body, N, rng, args.method)
        elif f == "vrad":
            out = vrad(body, N, rng, args.method)
        else:
            ks = [int(k) for k in _floats(args.k_list, "--k-list")] if args.k_list \
                else list(range(1, body.dim + 1))
            prof = volumetric_profile(body, f.split(":")[1], ks, args.trials, N, rng,
                                      args.refine_steps)
            _emit(_profile_json(prof))
            return EXIT_OK
    else:
        if f in BODY_FUNCTIONALS:
            raise ConfigError(f"{f} needs --body")
        mu = MS.measure_from_spec(_load_json(args.measure, "--measure"))
        if f == "isotropic_constant":
            out = MS.isotropic_constant(mu, N, rng)
        elif f == "centroid_support":
            if args.q is None:
                raise ConfigError("centroid_support needs --q")
            out = MS.centroid_body_support(mu, args.q, _parse_dir(args.dir, mu.dim), N, rng,
                                           args.method)
        else:
            grid = _floats(args.q_grid, "--q-grid")
            out = MS.psi_alpha_constant(mu, args.alpha, grid, args.dirs, N, rng)
    _emit(dict(out.to_dict(), schema_version=H.SCHEMA_VERSION))
    return EXIT_OK


# -- verify --------------------------------------------------------------------

def _workers(args):
    if args.workers is not None:
        w = args.workers
    else:
        env = os.environ.get("CONVEXA_WORKERS")
        try:
            w = int(env) if env else 1
        except ValueError as exc:
            raise ConfigError("CONVEXA_WORKERS must be an integer") from exc
    if w < 1:
        raise ConfigError("--workers must be >= 1")
    return w


def cmd_verify(args):
    raw = _load_json(args.config, "--config")
    if args.seed is not None:
        items = raw["experiments"] if isinstance(raw, dict) and "experiments" in raw else raw
        for d in items if isinstance(items, list) else [items]:
            if isinstance(d, dict):
                d["seed"] = args.seed
    cfgs = H.load_configs(raw)
    only = set()
    for o in args.only or []:
        only.update(x for x in o.split(",") if x)
    bad = only - set(H.CHECKS)
    if bad:
        raise ConfigError(f"--only names unknown checks {sorted(bad)}")
    workers = _workers(args)
    os.makedirs(args.out, exist_ok=True)
    if not os.access(args.out, os.W_OK):
        raise ConfigError(f"--out {args.out!r} is not writable")
    records = H.run_all(cfgs, workers, only or None)
    H.write_jsonl(records, os.path.join(args.out, "report.jsonl"))
    H.write_summary_csv(records, os.path.join(args.out, "summary.csv"))
    tally = {}
    for r in records:
        tally.setdefault((r.experiment_id, r.check), Counter())[r.verdict] += 1
    for (eid, check), c in tally.items():
        print(f"{eid:<28} {check:<22} pass={c['pass']:<4} inconclusive={c['inconclusive']:<4} "
              f"fail={c['fail']}")
    kinds = {r.error["kind"] for r in records if r.error}
    if "config" in kinds:
        return EXIT_CONFIG
    if "numeric" in kinds:
        return EXIT_NUMERIC
    return EXIT_FAIL if any(r.verdict == "fail" for r in records) else EXIT_OK


# -- sweep ---------------------------------------------------------------------

def _grid_rows(grid):
    if not isinstance(grid, dict) or not grid:
        raise ConfigError("--grid must be a nonempty JSON object")
    axes = []
    for name, vals in grid.items():
        if name in SEQUENCE_PARAMS:
            # a flat list of numbers is one value; a list of lists is an axis
            if isinstance(vals, list) and vals and all(isinstance(v, list) for v in vals):
                axes.append([(name, v) for v in vals])
            else:
                axes.append([(name, vals)])
        else:
            vals = vals if isinstance(vals, list) else [vals]
            axes.append([(name, v) for v in vals])
    return [dict(combo) for combo in itertools.product(*axes)]


def cmd_sweep(args):
    if args.formula not in BD.REGISTRY:
        raise ConfigError(f"unknown formula {args.formula!r}; registry: "
                          f"{', '.join(sorted(BD.REGISTRY))}")
    rows = _grid_rows(_load_json(args.grid, "--grid"))
    need = BD.formula_params(args.formula)
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", newline="")
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(need + ["value", "valid", "interpolated", "formula_id"])
        for row in rows:
            bv = BD.evaluate(args.formula, **row)
            w.writerow([json.dumps(row[p]) if isinstance(row[p], list) else row[p]
                        for p in need] + [repr(bv.value), bv.valid, bv.interpolated,
                                          bv.formula_id])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_formulas(args):
    _emit({"schema_version": H.SCHEMA_VERSION, "formulas": BD.registry_table()})
    return EXIT_OK


# -- entry point ---------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="convexa", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", help="one functional of one body or measure")
    c.add_argument("--body")
    c.add_argument("--measure")
    c.add_argument("--functional", required=True)
    c.add_argument("--samples", type=int, default=100_000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--method", choices=["closed_form", "quadrature", "monte_carlo"])
    c.add_argument("--q", type=float)
    c.add_argument("--dir", default="e1")
    c.add_argument("--k-list")
    c.add_argument("--trials", type=int, default=16)
    c.add_argument("--refine-steps", type=int, default=30)
    c.add_argument("--alpha", type=float, default=2.0)
    c.add_argument("--q-grid", default="2,4,8")
    c.add_argument("--dirs", type=int, default=200)
    c.set_defaults(func=cmd_compute)

    v = sub.add_parser("verify", help="run experiment checks and write reports")
    v.add_argument("--config", required=True)
    v.add_argument("--out", default=".")
    v.add_argument("--only", action="append")
    v.add_argument("--seed", type=int)
    v.add_argument("--workers", type=int)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", help="tabulate a bound evaluator over a grid")
    s.add_argument("--formula", required=True)
    s.add_argument("--grid", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    f = sub.add_parser("formulas", help="list the bound registry")
    f.set_defaults(func=cmd_formulas)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if getattr(args, "samples", 1) is not None and getattr(args, "samples", 1) < 1:
        return _error("config", ConfigError("--samples must be >= 1"), EXIT_CONFIG)
    try:
        return args.func(args)
    except NumericError as exc:
        return _error("numeric", exc, EXIT_NUMERIC)
    except (ValueError, TypeError, KeyError, OSError) as exc:
        return _error("config", exc, EXIT_CONFIG)


if __name__ == "__main__":
    sys.exit(main())
