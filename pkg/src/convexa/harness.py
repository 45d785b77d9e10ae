"""Experiment runner: measured functionals against bound evaluators.

A run takes an :class:`ExperimentConfig`, expands it into grid points, runs
the selected check on each point (concurrently, each on its own random
stream) and returns a flat list of :class:`ReportRecord`.

Verdicts.  An inequality ``a <= b`` with standard errors ``sa, sb`` is
judged on ``d = b - a`` with ``s = hypot(sa, sb)``: pass when ``d >= -sigma s``
up to rounding, fail when ``d + sigma s < 0`` and inconclusive in between.
Bounds with unspecified constants are checked through a fitted constant: a
point passes when the constant is finite and positive, and summary records
test its stability and the fitted log-log slope.
"""
from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import isotonic_regression

from . import bodies as B
from . import bounds as BD
from . import measures as MS
from .errors import NumericError
from .functionals import (
    EstimateCI, _floor_err, best_projection_in_radius, covering_number_greedy,
    entropy_number_greedy, gelfand_upper, mean_norm, mean_width, volumetric_profile, vrad,
)
from .sampling import RngStream, sample_grassmannian, sample_sphere

SCHEMA_VERSION = "1"

BODY_CHECKS = ("sandwich", "santalo", "vk_monotone", "zn_equiv", "thm42_witness",
               "thm31_covering", "low_mstar_crosscheck")
MEASURE_CHECKS = ("zq_inclusions", "zq_vrad_scaling", "MZq_scaling", "lemma61_profile",
                  "psi_alpha_suite", "conditional_suite")
CHECKS = BODY_CHECKS + MEASURE_CHECKS

DEFAULT_BUDGETS = {
    "sphere_samples": 20_000,
    "measure_samples": 20_000,
    "subspace_trials": 16,
    "dirs": 200,
    "vrad_budget": 4000,
    "refine_steps": 30,
}
VERDICTS = ("pass", "inconclusive", "fail")
STABILITY_FACTOR = 3.0
MZQ_SLOPE_MAX = -0.15
SEARCH_RTOL = 1e-2   # relative tolerance granted to finite sup/inf searches
TIGHT = 1e-9         # rounding slack for closed-form comparisons


# -- config ------------------------------------------------------------------

def _sorted_grid(name, grid, kind):
    if grid is None:
        return None
    if not isinstance(grid, (list, tuple)) or not grid:
        raise ValueError(f"{name} must be a nonempty list")
    vals = [kind(g) for g in grid]
    if kind is int and any(v != g for v, g in zip(vals, grid)):
        raise ValueError(f"{name} must hold integers")
    if any(v <= 0 for v in vals):
        raise ValueError(f"{name} entries must be positive")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ValueError(f"{name} must be strictly increasing")
    return vals


@dataclass
class ExperimentConfig:
    experiment_id: str
    check: str
    subject: list
    n_list: list | None = None
    k_list: list | None = None
    q_list: list | None = None
    budgets: dict = field(default_factory=dict)
    seed: int = 0
    tolerance_policy: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.experiment_id, str) or not self.experiment_id:
            raise ValueError("experiment_id must be a nonempty string")
        if self.check not in CHECKS:
            raise ValueError(f"unknown check {self.check!r}; choose from {', '.join(CHECKS)}")
        subj = self.subject if isinstance(self.subject, list) else [self.subject]
        if not subj:
            raise ValueError("subject list is empty")
        want = "body" if self.check in BODY_CHECKS else "measure"
        norm = []
        for s in subj:
            if not isinstance(s, dict):
                raise ValueError("each subject must be an object")
            if set(s) == {want}:
                spec = s[want]
            elif "variant" in s and not ({"body", "measure"} & set(s)):
                spec = s
            else:
                raise ValueError(f"check {self.check!r} needs subjects of the form "
                                 f"{{{want!r}: spec}}")
            if not isinstance(spec, dict) or "variant" not in spec:
                raise ValueError(f"{want} spec must be an object with a 'variant'")
            norm.append(spec)
        self.subject = norm
        self.n_list = _sorted_grid("n_list", self.n_list, int)
        self.k_list = _sorted_grid("k_list", self.k_list, int)
        self.q_list = _sorted_grid("q_list", self.q_list, float)
        unknown = set(self.budgets) - set(DEFAULT_BUDGETS)
        if unknown:
            raise ValueError(f"unknown budget keys {sorted(unknown)}")
        b = dict(DEFAULT_BUDGETS, **self.budgets)
        for key, v in b.items():
            if int(v) != v or v < (0 if key == "refine_steps" else 1):
                raise ValueError(f"budget {key} must be a positive integer")
            b[key] = int(v)
        self.budgets = b
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self.seed = int(self.seed)
        tp = {"ci_sigma": 3.0, "fit_window": "upper_half", "invert": False}
        tp.update(self.tolerance_policy or {})
        if not float(tp["ci_sigma"]) > 0:
            raise ValueError("ci_sigma must be positive")
        tp["ci_sigma"] = float(tp["ci_sigma"])
        if tp["fit_window"] != "upper_half" and not isinstance(tp["fit_window"], list):
            raise ValueError("fit_window must be 'upper_half' or a list of grid values")
        self.tolerance_policy = tp
        if not isinstance(self.params, dict):
            raise ValueError("params must be an object")

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ValueError("experiment config must be an object")
        known = {"experiment_id", "check", "subject", "n_list", "k_list", "q_list",
                 "budgets", "seed", "tolerance_policy", "params"}
        extra = set(d) - known - {"schema_version", "description"}
        if extra:
            raise ValueError(f"unknown config keys {sorted(extra)}")
        missing = {"experiment_id", "check", "subject"} - set(d)
        if missing:
            raise ValueError(f"config is missing {sorted(missing)}")
        return cls(**{k: v for k, v in d.items() if k in known})


def load_configs(obj):
    """A config file holds one experiment object, a list, or {"experiments": [...]}."""
    if isinstance(obj, dict) and "experiments" in obj:
        obj = obj["experiments"]
    items = obj if isinstance(obj, list) else [obj]
    cfgs = [ExperimentConfig.from_dict(d) for d in items]
    ids = [c.experiment_id for c in cfgs]
    if len(set(ids)) != len(ids):
        raise ValueError("experiment_id values must be unique")
    return cfgs


# -- records -----------------------------------------------------------------

def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, EstimateCI):
        return _clean(x.to_dict())
    if isinstance(x, BD.BoundValue):
        return _clean(x.to_dict())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    return x


@dataclass
class ReportRecord:
    experiment_id: str
    check: str
    subject_digest: str
    grid_point: dict
    measured: object
    bound: object
    fitted_constant: float | None
    verdict: str
    runtime_ms: float
    seed: int
    details: dict = field(default_factory=dict)
    error: dict | None = None
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"bad verdict {self.verdict!r}")

    def to_dict(self):
        return _clean({
            "schema_version": self.schema_version,
            "experiment_id": self.experiment_id,
            "check": self.check,
            "subject_digest": self.subject_digest,
            "grid_point": self.grid_point,
            "measured": self.measured,
            "bound": self.bound,
            "fitted_constant": self.fitted_constant,
            "verdict": self.verdict,
            "runtime_ms": self.runtime_ms,
            "seed": self.seed,
            "details": self.details,
            "error": self.error,
        })

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, allow_nan=False)


def _scalar(x):
    if isinstance(x, EstimateCI):
        return x.value
    if isinstance(x, BD.BoundValue):
        return x.value
    if isinstance(x, dict):
        return json.dumps({k: _scalar(v) for k, v in x.items()}, sort_keys=True)
    if isinstance(x, float) and not math.isfinite(x):
        return ""
    return "" if x is None else x


def write_jsonl(records, path):
    with open(path, "w") as fh:
        for r in records:
            fh.write(r.to_json() + "\n")


def write_summary_csv(records, path):
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["experiment_id", "check", "grid_point", "measured", "bound",
                    "fitted_constant", "verdict"])
        for r in records:
            w.writerow([r.experiment_id, r.check, json.dumps(r.grid_point, sort_keys=True),
                        _scalar(r.measured), _scalar(r.bound), _scalar(r.fitted_constant),
                        r.verdict])


# -- verdict helpers ---------------------------------------------------------

def worst(*verdicts):
    return max(verdicts, key=VERDICTS.index) if verdicts else "inconclusive"


def compare_le(a, sa, b, sb, sigma, invert=False):
    """Verdict for ``a <= b`` given standard errors (``b <= a`` if ``invert``)."""
    if invert:
        a, sa, b, sb = b, sb, a, sa
    d = b - a
    s = math.hypot(sa, sb)
    tol = TIGHT * max(1.0, abs(a), abs(b))
    if d - sigma * s >= -tol:
        return "pass"
    if d + sigma * s < -tol:
        return "fail"
    return "inconclusive"


def compare_within(v, s, lo, hi, sigma):
    """Verdict for ``lo <= v <= hi``."""
    if lo <= v - sigma * s and v + sigma * s <= hi:
        return "pass"
    if v + sigma * s < lo or v - sigma * s > hi:
        return "fail"
    return "inconclusive"


def _ci(value, err, n, seed, closed):
    """EstimateCI honoring the zero-error-iff-closed-form rule."""
    if closed:
        return EstimateCI.exact(float(value), seed)
    return EstimateCI(float(value), _floor_err(err, value), int(n), seed, "monte_carlo")


def _closed(*ests):
    return all(e.method == "closed_form" for e in ests)


def loglog_slope(x, ests, seed=None):
    """Least-squares slope of log value on log x, error propagated from the estimates."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log([e.value for e in ests])
    rel = np.array([e.std_err / e.value for e in ests])
    c = lx - lx.mean()
    sxx = float(c @ c)
    if sxx == 0:
        raise ValueError("slope needs at least two distinct grid values")
    slope = float(c @ ly / sxx)
    err = float(np.sqrt(np.sum((c / sxx) ** 2 * rel**2)))
    n = min(e.n_samples for e in ests)
    return _ci(slope, err, n, seed, _closed(*ests))


def _fit_window(values, policy):
    """Indices of the grid values used for stability of fitted constants."""
    fw = policy["fit_window"]
    if fw == "upper_half":
        return list(range(len(values) // 2, len(values)))
    keep = {float(v) for v in fw}
    return [i for i, v in enumerate(values) if float(v) in keep]


def _stability(fitted, idx):
    vals = [fitted[i] for i in idx if fitted[i] is not None and math.isfinite(fitted[i])]
    if len(vals) < len(idx) or not vals:
        return math.inf
    return max(vals) / min(vals)


def _finite_positive(c):
    return c is not None and math.isfinite(c) and c > 0


# -- execution ---------------------------------------------------------------

@dataclass
class Ctx:
    cfg: ExperimentConfig
    stream: RngStream
    n: int
    spec: dict

    @property
    def b(self):
        return self.cfg.budgets

    @property
    def sigma(self):
        return self.cfg.tolerance_policy["ci_sigma"]

    @property
    def invert(self):
        return bool(self.cfg.tolerance_policy["invert"])

    @property
    def params(self):
        return self.cfg.params

    def dirs(self, label, dim=None, size=None):
        return sample_sphere(dim or self.n, self.stream.child(label),
                             size=size or self.b["dirs"])

    def body(self):
        return B.body_from_spec(self.spec, self.n or None)

    def measure(self):
        return MS.measure_from_spec(self.spec, self.n or None)


def subject_digest(spec, n):
    full = dict(spec)
    full.setdefault("dim", n)
    blob = json.dumps(full, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _powers_of_two(lo, hi):
    out, v = [], lo
    while v <= hi + 1e-12:
        out.append(v)
        v *= 2
    return out


def _k_grid(cfg, n, top):
    ks = cfg.k_list if cfg.k_list is not None else [int(k) for k in _powers_of_two(1, top)]
    return ks


def _q_grid(cfg, hi=None):
    if cfg.q_list is not None:
        return cfg.q_list
    cap = MS.q_cap(cfg.budgets["measure_samples"])
    if hi is not None:
        cap = min(cap, hi)
    return _powers_of_two(2.0, max(2.0, cap))


def grid_points(cfg: ExperimentConfig):
    """(grid_point, spec, n) triples in a fixed order."""
    out = []
    for s, spec in enumerate(cfg.subject):
        if "dim" in spec:
            ns = [int(spec["dim"])]
        elif cfg.n_list is not None:
            ns = cfg.n_list
        else:
            ns = [_implicit_dim(cfg, spec)]
        for n in ns:
            base = {"subject": s, "n": n}
            if cfg.check == "zq_inclusions":
                for p, q in _pq_pairs(cfg):
                    out.append((dict(base, p=p, q=q), spec, n))
            elif cfg.check == "thm42_witness":
                for k in _k_grid(cfg, n, n // 2):
                    out.append((dict(base, k=k), spec, n))
            elif cfg.check in ("thm31_covering", "low_mstar_crosscheck"):
                for k in _k_grid(cfg, n, n if cfg.check == "thm31_covering" else n - 1):
                    out.append((dict(base, k=k), spec, n))
            else:
                out.append((base, spec, n))
    return out


def _implicit_dim(cfg, spec):
    """Dimension fixed by the parameters (semiaxes, rows, ...), else 0."""
    build = B.body_from_spec if cfg.check in BODY_CHECKS else MS.measure_from_spec
    try:
        return int(build(spec).dim)
    except (ValueError, TypeError, KeyError):
        return 0  # the grid point reports the construction error


def _pq_pairs(cfg):
    pairs = cfg.params.get("p_q_pairs")
    if pairs is not None:
        out = [(float(p), float(q)) for p, q in pairs]
        if any(not 1 <= p <= q for p, q in out):
            raise ValueError("p_q_pairs need 1 <= p <= q")
        return out
    qs = _q_grid(cfg)
    if len(qs) == 1:
        return [(qs[0], qs[0])]
    out = list(zip(qs, qs[1:]))
    if (qs[0], qs[-1]) not in out:
        out.append((qs[0], qs[-1]))
    return out


def point_stream(cfg, grid_point):
    return RngStream(cfg.seed).child(cfg.experiment_id,
                                     json.dumps(grid_point, sort_keys=True))


def _run_point(cfg, gp, spec, n):
    stream = point_stream(cfg, gp)
    digest = subject_digest(spec, n)
    t0 = time.perf_counter()
    try:
        ctx = Ctx(cfg, stream, n, spec)
        parts = CHECK_FUNCS[cfg.check](ctx, gp)
        error = None
    except (ValueError, TypeError, KeyError, NumericError) as exc:
        kind = "numeric" if isinstance(exc, NumericError) else "config"
        error = {"kind": kind, "type": type(exc).__name__, "message": str(exc)}
        parts = [({}, None, None, None, "fail", {})]
    ms = (time.perf_counter() - t0) * 1e3
    recs = []
    for extra, measured, bound, fitted, verdict, details in parts:
        recs.append(ReportRecord(cfg.experiment_id, cfg.check, digest, dict(gp, **extra),
                                 measured, bound, fitted, verdict, round(ms, 3), cfg.seed,
                                 details, error))
    return recs


def run(config, workers: int = 1, on_record=None):
    """Run one experiment; records come back in grid order whatever ``workers`` is."""
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    pts = grid_points(cfg)
    out = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for recs in pool.map(lambda p: _run_point(cfg, *p), pts):
            for r in recs:
                if on_record is not None:
                    on_record(r)
                out.append(r)
    return out


def run_all(configs, workers: int = 1, only=None, on_record=None):
    out = []
    for cfg in configs:
        if only and cfg.check not in only:
            continue
        out.extend(run(cfg, workers, on_record))
    return out


# -- body checks -------------------------------------------------------------

def check_sandwich(ctx, gp):
    K = ctx.body()
    b = ctx.b
    M = mean_norm(K, b["sphere_samples"], ctx.stream.child("dirs"))
    Ms = mean_width(K, b["sphere_samples"], ctx.stream.child("dirs"))
    v = vrad(K, b["vrad_budget"], ctx.stream.child("vrad"))
    lower = _ci(1.0 / M.value, M.std_err / M.value**2, M.n_samples, M.seed, _closed(M))
    v1 = compare_le(lower.value, lower.std_err, v.value, v.std_err, ctx.sigma, ctx.invert)
    v2 = compare_le(v.value, v.std_err, Ms.value, Ms.std_err, ctx.sigma, ctx.invert)
    details = {"lower_verdict": v1, "upper_verdict": v2, "M": M, "M_star": Ms}
    return [({}, v, {"lower": lower, "upper": Ms}, None, worst(v1, v2), details)]


def check_santalo(ctx, gp):
    K = ctx.body()
    v = vrad(K, ctx.b["vrad_budget"], ctx.stream.child("vrad"))
    vp = vrad(B.polar(K), ctx.b["vrad_budget"], ctx.stream.child("vrad_polar"))
    prod = v.value * vp.value
    err = prod * math.hypot(v.std_err / v.value, vp.std_err / vp.value)
    P = _ci(prod, err, min(v.n_samples, vp.n_samples), v.seed, _closed(v, vp))
    verdict = compare_le(P.value, P.std_err, 1.0, 0.0, ctx.sigma, ctx.invert)
    return [({}, P, EstimateCI.exact(1.0), None, verdict,
             {"vrad": v, "vrad_polar": vp, "observed_lower_constant": prod})]


def _candidates(ctx):
    c = ctx.params.get("candidates")
    if c not in (None, "axes"):
        raise ValueError("params.candidates must be 'axes' or absent")
    return c


def check_vk_monotone(ctx, gp):
    K = ctx.body()
    ks = ctx.cfg.k_list or list(range(1, ctx.n + 1))
    if ks[-1] > ctx.n:
        raise ValueError(f"k_list exceeds n={ctx.n}")
    b = ctx.b
    rtol = float(ctx.params.get("search_rtol", SEARCH_RTOL))
    out = []
    for which, increasing in (("v_k", False), ("w_k_minus", True)):
        prof = volumetric_profile(K, which, ks, b["subspace_trials"], b["vrad_budget"],
                                  ctx.stream.child(which), b["refine_steps"], _candidates(ctx))
        vals, errs = prof.values, prof.std_errs
        iso = isotonic_regression(vals, increasing=increasing).x
        slack = ctx.sigma * float(errs.max()) + rtol * float(np.abs(vals).max())
        for i, k in enumerate(ks):
            resid = abs(vals[i] - iso[i])
            if resid <= slack + TIGHT * abs(vals[i]):
                verdict = "pass"
            else:
                verdict = "inconclusive" if prof.bias_note != "unbiased" else "fail"
            out.append(({"profile": which, "k": k}, prof.points[i][1],
                         EstimateCI.exact(float(iso[i])), None, verdict,
                         {"residual": resid, "slack": slack, "bias_note": prof.bias_note,
                          "direction": "non-decreasing" if increasing else "non-increasing"}))
    return out


def _volume_one(K, budget, stream):
    """K scaled to unit volume, with the scale's relative error."""
    v = vrad(K, budget, stream)
    log_vol = K.dim * math.log(v.value) + B.log_unit_ball_volume(K.dim)
    factor = math.exp(-log_vol / K.dim)
    return B.scaled(K, factor), v


def check_zn_equiv(ctx, gp):
    K0 = ctx.body()
    n = ctx.n
    K, v = _volume_one(K0, ctx.b["vrad_budget"], ctx.stream.child("vrad"))
    lam = MS.UniformOnBody(K)
    N = ctx.b["measure_samples"]
    Z = MS.centroid_body(lam, float(n), N, ctx.stream.child("Z"))
    U = ctx.dirs("dirs")
    hK = K.support(U)
    if hasattr(Z, "support_ci"):
        hZ, eZ = Z.support_ci(U)
    else:
        hZ, eZ = Z.support(U), np.zeros(len(U))
    # the scale is common to hZ and hK, so only the moment error enters
    verdicts = [compare_le(hZ[i], eZ[i], hK[i], 0.0, ctx.sigma, ctx.invert)
                for i in range(len(U))]
    ratio = hZ / hK
    i = int(np.argmin(ratio))
    c = _ci(ratio[i], eZ[i] / hK[i], N, ctx.stream.seed, not np.any(eZ))
    # M(K) against M(Z_n(lambda_K)): scale-free, so the ratio needs no L_K
    m_dirs = ctx.b["dirs"]
    MK = mean_norm(K, m_dirs, ctx.stream.child("mdirs"))
    MZ = mean_norm(Z, m_dirs, ctx.stream.child("mdirs"))
    details = {"max_ratio": float(ratio.max()), "ratio_spread": float(ratio.max() - ratio.min()),
               "M_K": MK, "M_Zn": MZ, "M_ratio": MK.value / MZ.value, "vrad_K": v}
    verdict = worst(*verdicts)
    if verdict == "pass" and not _finite_positive(c.value):
        verdict = "fail"
    return [({}, c, EstimateCI.exact(1.0), c.value, verdict, details)]


def check_thm42_witness(ctx, gp):
    K = ctx.body()
    n, k = ctx.n, gp["k"]
    if not 1 <= 2 * k <= n:
        raise ValueError(f"thm42 needs 1 <= k <= n/2, got k={k}, n={n}")
    b = ctx.b
    cand = _candidates(ctx)
    if n - 2 * k == 0:
        raise ValueError("F would be the zero subspace")
    inr, F = best_projection_in_radius(K, n - 2 * k, b["subspace_trials"], b["dirs"],
                                       ctx.stream.child("inradius"), cand, b["refine_steps"])
    prof = volumetric_profile(K, "v_k_minus", [k], b["subspace_trials"], b["vrad_budget"],
                              ctx.stream.child("v_minus"), b["refine_steps"], cand)
    vm = prof.points[0][1]
    bound = BD.inradius_bound_thm42(vm.value, k, n)
    fitted = inr / bound.value
    measured = EstimateCI(inr, _floor_err(0.0, inr), b["subspace_trials"] * b["dirs"],
                          ctx.stream.seed, "optimization_upper_bound")
    # dual witness: out-radius of the best codimension-2k section
    out_r, _ = gelfand_upper(K, 2 * k, b["subspace_trials"], b["dirs"],
                             ctx.stream.child("outradius"), cand, b["refine_steps"])
    wprof = volumetric_profile(K, "w_k", [k], b["subspace_trials"], b["vrad_budget"],
                               ctx.stream.child("w"), b["refine_steps"], cand)
    dual = BD.gelfand_bound_thm42(wprof.values[0], k, n)
    details = {"v_k_minus": vm, "witness_basis": F.basis,
               "holds_with_unit_constant": bool(inr >= bound.value),
               "dual_out_radius": out_r, "dual_bound": dual,
               "dual_fitted_constant": out_r.value / dual.value}
    verdict = "pass" if _finite_positive(fitted) else "fail"
    return [({}, measured, bound, fitted, verdict, details)]


def _t_grid_counts(K, L, t_grid):
    counts = [covering_number_greedy(K, L, float(t)) for t in t_grid]
    mono = all(b <= a for a, b in zip(counts, counts[1:]))
    return counts, mono


def check_thm31_covering(ctx, gp):
    K = ctx.body()
    n, k = ctx.n, gp["k"]
    b = ctx.b
    ball = B.EuclideanBall(n)
    top = min(k, n)
    wprof = volumetric_profile(K, "w_k", range(1, top + 1), b["subspace_trials"],
                               b["vrad_budget"], ctx.stream.child("w"), b["refine_steps"],
                               _candidates(ctx))
    vprof = volumetric_profile(K, "v_k_minus", range(1, top + 1), b["subspace_trials"],
                               b["vrad_budget"], ctx.stream.child("v_minus"), b["refine_steps"],
                               _candidates(ctx))
    bound = BD.covering_bound_thm31(wprof, k, n)
    dual = BD.covering_bound_thm31_dual(vprof, k, n)
    details = {"dual_bound": dual}
    if n > 4:
        details["note"] = "no covering measurement above dimension 4; bound values only"
        return [({}, None, bound, None, "inconclusive", details)]
    e = entropy_number_greedy(K, ball, k)
    e_dual = entropy_number_greedy(ball, K, k)
    measured = EstimateCI(e, _floor_err(0.0, e), 1, ctx.stream.seed, "optimization_upper_bound")
    fitted = e / bound.value
    details.update({"e_k_dual": e_dual, "dual_fitted_constant": e_dual / dual.value,
                    "holds_with_unit_constant": bool(e <= bound.value)})
    verdict = "pass" if _finite_positive(fitted) else "fail"
    t_grid = ctx.params.get("t_grid")
    if t_grid:
        counts, mono = _t_grid_counts(K, ball, sorted(t_grid))
        details.update({"t_grid": sorted(t_grid), "t_grid_counts": counts,
                        "t_grid_monotone": mono})
        if not mono:
            verdict = worst(verdict, "inconclusive")
    return [({}, measured, bound, fitted, verdict, details)]


def check_low_mstar_crosscheck(ctx, gp):
    K = ctx.body()
    n, k = ctx.n, gp["k"]
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got k={k}, n={n}")
    b = ctx.b
    cand = _candidates(ctx)
    witness, _ = gelfand_upper(K, k, b["subspace_trials"], b["dirs"],
                               ctx.stream.child("gelfand"), cand, b["refine_steps"])
    Ms = mean_width(K, b["sphere_samples"], ctx.stream.child("dirs"))
    bound = BD.low_Mstar_bound(n, k, Ms.value)
    fitted = witness.value / bound.value
    details = {"M_star": Ms, "holds_with_unit_constant": bool(witness.value <= bound.value)}
    if k % 2 == 0:
        w = volumetric_profile(K, "w_k", [k // 2], b["subspace_trials"], b["vrad_budget"],
                               ctx.stream.child("w"), b["refine_steps"], cand)
        t42 = BD.gelfand_bound_thm42(w.values[0], k // 2, n)
        details["thm42_bound"] = t42
        details["sharper"] = "low_Mstar" if bound.value <= t42.value else "thm42"
    verdict = "pass" if _finite_positive(fitted) else "fail"
    return [({}, witness, bound, fitted, verdict, details)]


# -- measure checks ----------------------------------------------------------

def _zq(ctx, mu, q):
    # one label for every q: all Z_q share the same sample matrix
    return MS.centroid_body(mu, q, ctx.b["measure_samples"], ctx.stream.child("Z"))


def _support_ci(Z, U):
    if hasattr(Z, "support_ci"):
        return Z.support_ci(U)
    return Z.support(U), np.zeros(len(U))


def check_zq_inclusions(ctx, gp):
    mu = ctx.measure()
    p, q = gp["p"], gp["q"]
    U = ctx.dirs("dirs")
    hp, ep = _support_ci(_zq(ctx, mu, p), U)
    hq, eq = _support_ci(_zq(ctx, mu, q), U)
    verdicts = [compare_le(hp[i], ep[i], hq[i], eq[i], ctx.sigma, ctx.invert)
                for i in range(len(U))]
    ratio = hq / hp
    i = int(np.argmax(ratio))
    err = ratio[i] * math.hypot(ep[i] / hp[i], eq[i] / hq[i])
    closed = not (np.any(ep) or np.any(eq))
    r = _ci(ratio[i], err, ctx.b["measure_samples"], ctx.stream.seed, closed)
    fitted = r.value / (q / p)
    details = {"min_ratio": float(ratio.min()), "reverse_within_2": bool(fitted <= 2.0)}
    return [({}, r, EstimateCI.exact(q / p), fitted, worst(*verdicts), details)]


def _sample_vrad_sd(n, N):
    """Spread of vrad(Z_2) = det(Cov_N)^{1/2n} caused by sampling the measure itself."""
    return 1.0 / math.sqrt(2.0 * n * N)


def check_zq_vrad_scaling(ctx, gp):
    mu = ctx.measure()
    n = ctx.n
    qs = _q_grid(ctx.cfg, math.sqrt(n))
    b = ctx.b
    out, vs, ws = [], [], []
    for j, q in enumerate(qs):
        Z = _zq(ctx, mu, q)
        v = vrad(Z, b["vrad_budget"], ctx.stream.child("vrad"))
        w = mean_width(Z, b["dirs"], ctx.stream.child("mdirs"))
        vs.append(v)
        ws.append(w)
        details = {"M_star": w}
        if j == 0:
            if q == 2.0 and ctx.params.get("isotropic", True):
                s_mu = 0.0 if _closed(v) else _sample_vrad_sd(n, b["measure_samples"])
                verdict = compare_within(v.value, math.hypot(v.std_err, s_mu), 1.0, 1.0,
                                         ctx.sigma)
                details["anchor"] = "Z_2 is the Euclidean ball"
                bound = EstimateCI.exact(1.0)
            else:
                verdict, bound = "pass", None
        else:
            prev = vs[j - 1]
            verdict = compare_le(prev.value, prev.std_err, v.value, v.std_err, ctx.sigma,
                                 ctx.invert)
            bound = prev
        out.append(({"q": q}, v, bound, None, verdict, details))
    if len(qs) < 2:
        out.append(({"fit": "vrad_slope"}, None, None, None, "inconclusive",
                    {"note": "slope needs at least two q values in [2, sqrt n]"}))
        return out
    slope = loglog_slope(qs, vs, ctx.stream.seed)
    wslope = loglog_slope(qs, ws, ctx.stream.seed)
    slack = float(ctx.params.get("slope_slack", 0.05 if _closed(*vs) else 0.1))
    verdict = compare_within(slope.value, slope.std_err, 0.5 - slack, 0.5 + slack, ctx.sigma)
    out.append(({"fit": "vrad_slope"}, slope, EstimateCI.exact(0.5), None, verdict,
                {"slack": slack, "q_list": qs, "M_star_slope": wslope}))
    return out


def check_MZq_scaling(ctx, gp):
    mu = ctx.measure()
    n = ctx.n
    qs = _q_grid(ctx.cfg)
    b = ctx.b
    out, Ms, fitted, used = [], [], [], []
    for j, q in enumerate(qs):
        Z = _zq(ctx, mu, q)
        M = mean_norm(Z, b["dirs"], ctx.stream.child("mdirs"))
        bound = BD.M_Zq_bound(n, q) if q > 1 else None
        c = M.value / bound.value if bound is not None and bound.value > 0 else None
        verdict = "pass" if _finite_positive(c) else "inconclusive"
        if j > 0:
            prev = Ms[-1]
            verdict = worst(verdict, compare_le(M.value, M.std_err, prev.value, prev.std_err,
                                                ctx.sigma, ctx.invert))
        Ms.append(M)
        fitted.append(c)
        in_fit = bound is not None and (bound.valid or _closed(M))
        if in_fit:
            used.append(j)
        out.append(({"q": q}, M, bound, c, verdict,
                     {"in_fit": in_fit, "bound_valid": bound.valid if bound else False}))
    if len(used) < 2:
        out.append(({"fit": "M_slope"}, None, None, None, "inconclusive",
                    {"note": "fewer than two grid points in the valid range"}))
        return out
    xq = [qs[j] for j in used]
    slope = loglog_slope(xq, [Ms[j] for j in used], ctx.stream.seed)
    if slope.value + ctx.sigma * slope.std_err <= MZQ_SLOPE_MAX:
        v_slope = "pass"
    elif slope.value - ctx.sigma * slope.std_err > MZQ_SLOPE_MAX:
        v_slope = "fail"
    else:
        v_slope = "inconclusive"
    window = [used[i] for i in _fit_window(xq, ctx.cfg.tolerance_policy)]
    spread = _stability(fitted, window)
    if spread < STABILITY_FACTOR:
        v_stab = "pass"
    else:
        v_stab = "fail" if all(_closed(Ms[j]) for j in window) else "inconclusive"
    gap = None
    if any(not out[j][2].valid for j in range(len(qs)) if out[j][2] is not None):
        gap = "q beyond q0 = (n log(e+n))^{2/5}: bound not claimed there"
    details = {"slope_max": MZQ_SLOPE_MAX, "stability_ratio": spread,
               "fit_q": [qs[j] for j in window], "q0": BD.q0_threshold(n), "q0_gap": gap,
               "slope_verdict": v_slope, "stability_verdict": v_stab}
    out.append(({"fit": "M_slope"}, slope, None, None, worst(v_slope, v_stab), details))
    return out


def _inradius_witness(ctx, Z, k, label):
    b = ctx.b
    return best_projection_in_radius(Z, ctx.n - k, b["subspace_trials"], b["dirs"],
                                     ctx.stream.child(label, k), _candidates(ctx),
                                     b["refine_steps"])[0]


def _entropy_proxy(ctx, Z, k):
    """e_k(B_2^n, Z_q) by greedy covering, only where Z_q has an exact oracle."""
    if ctx.n > 4 or isinstance(Z, MS.CentroidBody):
        return None
    try:
        return entropy_number_greedy(B.EuclideanBall(ctx.n), Z, k)
    except NumericError as exc:
        return str(exc)


def _fit_summary(ctx, tag, fitted, closed, extra=None):
    window = _fit_window(list(range(len(fitted))), ctx.cfg.tolerance_policy) \
        if ctx.cfg.tolerance_policy["fit_window"] == "upper_half" else list(range(len(fitted)))
    spread = _stability(fitted, window)
    if spread < STABILITY_FACTOR:
        verdict = "pass"
    else:
        verdict = "fail" if closed else "inconclusive"
    details = {"stability_ratio": spread, "window": window}
    details.update(extra or {})
    return ({"fit": tag}, None, None, None, verdict, details)


def _k_list_measure(ctx, top=None):
    ks = ctx.cfg.k_list or [int(k) for k in _powers_of_two(1, top or ctx.n)]
    if ks[-1] > ctx.n:
        raise ValueError(f"k_list exceeds n={ctx.n}")
    return ks


def check_lemma61_profile(ctx, gp):
    mu = ctx.measure()
    n = ctx.n
    qs = _q_grid(ctx.cfg)
    ks = _k_list_measure(ctx)
    b = ctx.b
    A = {}
    n_marg = int(ctx.params.get("A_k_marginals", 4))
    for k in ks:
        best = None
        subs = list(sample_grassmannian(n, k, ctx.stream.child("marginals", k), size=n_marg)) \
            if k < n else []
        for H in subs or [None]:
            nu = mu if H is None else MS.marginal(mu, H)
            try:
                L = MS.isotropic_constant(nu, b["measure_samples"], ctx.stream.child("L", k))
            except NumericError:
                L = MS.marginal_isotropic_constant(nu, b["measure_samples"],
                                                   ctx.stream.child("L", k))
            if best is None or L.value > best.value:
                best = L
        A[k] = best
    out = []
    for q in qs:
        Z = _zq(ctx, mu, q)
        prof = volumetric_profile(Z, "v_k_minus", ks, b["subspace_trials"], b["vrad_budget"],
                                  ctx.stream.child("v_minus", q), b["refine_steps"],
                                  _candidates(ctx))
        fitted = []
        for i, k in enumerate(ks):
            est = prof.points[i][1]
            shape1 = math.sqrt(min(q, math.sqrt(k)))
            shape2 = math.sqrt(min(q, k)) / A[k].value
            c1 = est.value / shape1
            fitted.append(c1)
            verdict = "pass" if _finite_positive(c1) else "fail"
            out.append(({"q": q, "k": k}, est, EstimateCI.exact(shape1), c1, verdict,
                        {"A_k": A[k], "second_shape": shape2,
                         "second_fitted_constant": est.value / shape2,
                         "bias_note": prof.bias_note}))
        closed = all(p[1].method == "closed_form" for p in prof.points)
        out.append(_fit_summary(ctx, f"lemma61_q{q:g}", fitted, closed))
    return out


def _radius_suite(ctx, mu, R_fn, tag, extra_details=None):
    n = ctx.n
    qs = _q_grid(ctx.cfg)
    ks = _k_list_measure(ctx, top=n - 1)
    if ks[-1] >= n:
        raise ValueError("k must be < n so that F in G_{n,n-k} is nonzero")
    out = []
    for q in qs:
        Z = _zq(ctx, mu, q)
        fitted, closed = [], not isinstance(Z, MS.CentroidBody)
        for k in ks:
            R = R_fn(k, q)
            inr = _inradius_witness(ctx, Z, k, f"inradius_q{q:g}")
            measured = EstimateCI(inr, _floor_err(0.0, inr), ctx.b["dirs"], ctx.stream.seed,
                                  "optimization_upper_bound")
            c = inr * R.value
            fitted.append(c)
            details = {"inradius_shape": 1.0 / R.value, "holds_with_unit_constant":
                       bool(inr * R.value >= 1.0)}
            e = _entropy_proxy(ctx, Z, k)
            if isinstance(e, str):
                details["e_k_note"] = e
            elif e is not None:
                details.update({"e_k": e, "e_k_fitted_constant": e / R.value})
            out.append(({"q": q, "k": k}, measured, R, c,
                        "pass" if _finite_positive(c) else "fail", details))
        out.append(_fit_summary(ctx, f"{tag}_q{q:g}", fitted, closed, extra_details))
    return out


def check_psi_alpha_suite(ctx, gp):
    mu = ctx.measure()
    n = ctx.n
    alpha = float(ctx.params.get("alpha", 2.0))
    qs = _q_grid(ctx.cfg)
    bq = MS.psi_alpha_constant(mu, alpha, qs, ctx.b["dirs"], ctx.b["measure_samples"],
                               ctx.stream.child("b_alpha"))
    R0 = BD.R_kq_psi_alpha(n, 1, qs[0], alpha, bq.value)
    head = ({"b_alpha": alpha}, bq, None, None,
            "pass" if _finite_positive(bq.value) else "fail",
            {"bias_note": "lower_biased (finite q-grid and direction sample)",
             "q_valid_max": R0.extras["q_valid_max"],
             "validity_exponent": 2 * alpha / (alpha + 4)})
    suite = _radius_suite(ctx, mu, lambda k, q: BD.R_kq_psi_alpha(n, k, q, alpha, bq.value),
                          "psi_alpha")
    return [head] + suite


def check_conditional_suite(ctx, gp):
    mu = ctx.measure()
    n = ctx.n
    L = MS.isotropic_constant(mu, ctx.b["measure_samples"], ctx.stream.child("L"))
    head = ({"L_mu": True}, L, None, None, "pass" if _finite_positive(L.value) else "fail",
            {"assumption": "L_mu bounded by a universal constant"})
    suite = _radius_suite(ctx, mu, lambda k, q: BD.R_k_conditional(n, k, q), "conditional")
    return [head] + suite


CHECK_FUNCS = {
    "sandwich": check_sandwich,
    "santalo": check_santalo,
    "vk_monotone": check_vk_monotone,
    "zq_inclusions": check_zq_inclusions,
    "zn_equiv": check_zn_equiv,
    "zq_vrad_scaling": check_zq_vrad_scaling,
    "MZq_scaling": check_MZq_scaling,
    "thm42_witness": check_thm42_witness,
    "thm31_covering": check_thm31_covering,
    "lemma61_profile": check_lemma61_profile,
    "psi_alpha_suite": check_psi_alpha_suite,
    "conditional_suite": check_conditional_suite,
    "low_mstar_crosscheck": check_low_mstar_crosscheck,
}
