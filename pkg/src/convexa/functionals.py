"""Scalar functionals of bodies: mean-norm, mean-width, volume radius,
volumetric profiles, section/projection radii, Gelfand-number upper bounds
and small-dimension covering numbers.
"""
from __future__ import annotations

import csv
import heapq
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import csc_matrix, csr_matrix
from scipy.special import logsumexp

from .bodies import Body, EuclideanBall, LinearImage, Scaled, project, section
from .errors import DegenerateError, NumericError, UnsupportedError
from .sampling import (
    RngStream,
    Subspace,
    as_generator,
    coordinate_subspaces,
    direction_grid,
    perturb_subspace,
    sample_grassmannian,
    sample_sphere,
    seed_of,
)

METHODS = ("monte_carlo", "closed_form", "quadrature", "optimization_upper_bound")
VRAD_MC_DIM_CAP = 32
CHUNK = 1 << 16


@dataclass(frozen=True)
class EstimateCI:
    value: float
    std_err: float
    n_samples: int
    seed: int | None
    method: str

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.std_err < 0 or self.n_samples < 1:
            raise ValueError("std_err must be >= 0 and n_samples >= 1")
        if (self.std_err == 0) != (self.method == "closed_form"):
            raise ValueError("std_err is zero exactly for closed-form values")

    @classmethod
    def exact(cls, value, seed=None):
        return cls(float(value), 0.0, 1, seed, "closed_form")

    def to_dict(self):
        return asdict(self)


def _floor_err(err, value):
    return max(float(err), 1e-15 * abs(value), 1e-300)


@dataclass
class ProfileCurve:
    """k -> EstimateCI (or q -> EstimateCI) with an explicit bias direction."""

    index_name: str
    points: list
    body_or_measure_id: str = ""
    bias_note: str = "unbiased"
    witnesses: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.index_name not in ("k", "q"):
            raise ValueError("index_name must be 'k' or 'q'")
        if self.bias_note not in ("unbiased", "upper_biased", "lower_biased"):
            raise ValueError(f"bad bias_note {self.bias_note!r}")
        idx = [p[0] for p in self.points]
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("profile indices must be strictly increasing")

    @property
    def indices(self):
        return np.array([p[0] for p in self.points], dtype=float)

    @property
    def values(self):
        return np.array([p[1].value for p in self.points])

    @property
    def std_errs(self):
        return np.array([p[1].std_err for p in self.points])

    @property
    def mixed_methods(self):
        return len({p[1].method for p in self.points}) > 1

    def value_at(self, index):
        for i, est in self.points:
            if i == index:
                return est
        raise KeyError(index)

    def to_csv(self, fh=None):
        out = fh or io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["index", "value", "std_err", "n_samples", "bias_note"])
        for i, est in self.points:
            w.writerow([i, repr(est.value), repr(est.std_err), est.n_samples, self.bias_note])
        return out.getvalue() if fh is None else None

    @classmethod
    def from_values(cls, values, index_name="k", start=1, bias_note="unbiased", ident=""):
        pts = [(start + i, EstimateCI.exact(v)) for i, v in enumerate(values)]
        return cls(index_name, pts, ident, bias_note)


# -- sphere averages -----------------------------------------------------------

def _sphere_average(fn, dim, n_samples, rng):
    gen = as_generator(rng)
    total, total_sq, done = 0.0, 0.0, 0
    while done < n_samples:
        m = min(CHUNK, n_samples - done)
        vals = np.asarray(fn(sample_sphere(dim, gen, size=m)), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise DegenerateError("oracle returned a non-finite value")
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        done += m
    mean = total / n_samples
    var = max(total_sq / n_samples - mean * mean, 0.0) * n_samples / max(n_samples - 1, 1)
    return mean, math.sqrt(var / n_samples)


def _grid_average(fn, dim, resolution):
    if dim == 2:
        vals = np.asarray(fn(direction_grid(2, resolution)))
        coarse = vals[::2].mean()
        fine = vals.mean()
    else:
        fine = np.asarray(fn(direction_grid(3, resolution))).mean()
        coarse = np.asarray(fn(direction_grid(3, max(resolution // 2, 1)))).mean()
    return float(fine), abs(fine - coarse)


def _average(body, oracle, n_samples, rng, method, closed):
    if n_samples < 10:
        raise ValueError("n_samples must be >= 10")
    fn = getattr(body, oracle)
    dim = body.dim
    if method is None:
        if closed is not None:
            method = "closed_form"
        elif dim <= 2:
            method = "quadrature"
        else:
            method = "monte_carlo"
    seed = seed_of(rng)
    if method == "closed_form":
        if closed is None and dim == 1:
            closed = 0.5 * (fn(np.array([1.0])) + fn(np.array([-1.0])))
        if closed is None:
            raise UnsupportedError(f"no closed form for {oracle} average of {body!r}")
        return EstimateCI.exact(closed, seed)
    if method == "quadrature":
        if dim == 1:
            return _average(body, oracle, n_samples, rng, "closed_form", closed)
        if dim > 3:
            raise UnsupportedError("deterministic quadrature only for dim <= 3")
        value, err = _grid_average(fn, dim, n_samples)
        return EstimateCI(value, _floor_err(err, value), n_samples, seed, "quadrature")
    if method == "monte_carlo":
        value, err = _sphere_average(fn, dim, n_samples, rng)
        return EstimateCI(value, _floor_err(err, value), n_samples, seed, "monte_carlo")
    raise ValueError(f"unknown method {method!r}")


def mean_norm(body: Body, n_samples: int = 100_000, rng=0, method=None) -> EstimateCI:
    """M(K): average of ||theta||_K over the uniform measure on the sphere.

    ``method=None`` picks the closed form for balls, an equal-angle grid in
    the plane and Monte-Carlo otherwise.
    """
    closed = 1.0 / body.radius if isinstance(body, EuclideanBall) else None
    return _average(body, "gauge", n_samples, rng, method, closed)


def mean_width(body: Body, n_samples: int = 100_000, rng=0, method=None) -> EstimateCI:
    """M*(K): average of h_K over the sphere.  Same directions as mean_norm(polar(K))."""
    closed = body.radius if isinstance(body, EuclideanBall) else None
    return _average(body, "support", n_samples, rng, method, closed)


# -- volume radius ---------------------------------------------------------------

def vrad(body: Body, budget: int = 100_000, rng=0, method=None) -> EstimateCI:
    """Volume radius (|K| / |B_2^n|)^{1/n}.

    Exact for balls, L_p balls, ellipsoids, parallelotopes and their zonotope
    projections, small V-polytopes and linear images of any of these.
    Otherwise vrad^n is the sphere average of rho^n = ||theta||^{-n}; the mean
    is accumulated in log space and the error propagated by the delta method.
    """
    seed = seed_of(rng)
    n = body.dim
    if method in (None, "closed_form"):
        closed = body.closed_vrad()
        if closed is None and n == 1:
            closed = body.support(np.array([1.0]))
        if closed is not None:
            return EstimateCI.exact(closed, seed)
        if method == "closed_form":
            raise UnsupportedError(f"no closed-form volume radius for {body!r}")
    if isinstance(body, (LinearImage, Scaled)):
        factor = math.exp(body.logdet / n) if isinstance(body, LinearImage) else body.factor
        inner = vrad(body.inner, budget, rng, method)
        return EstimateCI(factor * inner.value, factor * inner.std_err, inner.n_samples,
                          inner.seed, inner.method)
    if method is None:
        method = "quadrature" if n == 2 else "monte_carlo"
    if method == "quadrature":
        if n not in (2, 3):
            raise UnsupportedError("deterministic quadrature only for dim 2 or 3")
        if budget < 10:
            raise ValueError("budget must be >= 10")
        fn = lambda th: np.exp(-n * np.log(_checked_gauge(body, th)))
        value, err = _grid_average(fn, n, budget)
        v = value ** (1.0 / n)
        return EstimateCI(v, _floor_err(v * err / (n * value), v), budget, seed, "quadrature")
    if method != "monte_carlo":
        raise ValueError(f"unknown method {method!r}")
    if budget < 100:
        raise ValueError("Monte-Carlo volume radius needs budget >= 100")
    if n > VRAD_MC_DIM_CAP:
        raise UnsupportedError(
            f"Monte-Carlo volume radius is capped at dim {VRAD_MC_DIM_CAP} (got {n}); "
            "use a variant with a closed form")
    gen = as_generator(rng)
    logs = []
    done = 0
    while done < budget:
        m = min(CHUNK, budget - done)
        th = sample_sphere(n, gen, size=m)
        logs.append(-n * np.log(_checked_gauge(body, th)))
        done += m
    L = np.concatenate(logs)
    log_mean = logsumexp(L) - math.log(budget)
    w = np.exp(L - L.max())
    rel = w.std(ddof=1) / (w.mean() * math.sqrt(budget))
    v = math.exp(log_mean / n)
    return EstimateCI(v, _floor_err(v * rel / n, v), budget, seed, "monte_carlo")


def _checked_gauge(body, th):
    g = body.gauge(th)
    bad = ~(g > 0) | ~np.isfinite(g)
    if bad.any():
        i = int(np.argmax(bad))
        raise DegenerateError(f"gauge is {g[i]} in direction {th[i].tolist()}", direction=th[i])
    return g


# -- volumetric profiles ---------------------------------------------------------

PROFILE_KINDS = {
    "w_k": ("section", max, "lower_biased"),
    "v_k": ("projection", max, "lower_biased"),
    "w_k_minus": ("section", min, "upper_biased"),
    "v_k_minus": ("projection", min, "upper_biased"),
}


def _restrict(body, sub, kind):
    return section(body, sub) if kind == "section" else project(body, sub)


def volumetric_profile(body: Body, which: str, k_list, trials_per_k: int = 16,
                       budget: int = 4000, rng=0, refine_steps: int = 100,
                       candidates=None, ident: str = "") -> ProfileCurve:
    """Extremal volume radii of k-dimensional sections / projections.

    For each k, ``trials_per_k`` Haar subspaces (plus ``candidates``, or all
    coordinate subspaces when ``candidates == "axes"``) are scored, then the
    best one is improved by ``refine_steps`` random geodesic moves with a
    shrinking step.  Every subspace is scored with the same random stream so
    comparisons are not swamped by Monte-Carlo noise.  A finite max is a lower
    bound on a sup, a finite min an upper bound on an inf; ``bias_note`` says
    which.
    """
    if which not in PROFILE_KINDS:
        raise ValueError(f"which must be one of {sorted(PROFILE_KINDS)}")
    k_list = sorted(set(int(k) for k in k_list))
    if not k_list:
        raise ValueError("k_list is empty")
    n = body.dim
    if k_list[0] < 1 or k_list[-1] > n:
        raise ValueError(f"k must lie in [1, {n}]")
    if trials_per_k < 1:
        raise ValueError("trials_per_k must be >= 1")
    kind, pick, bias = PROFILE_KINDS[which]
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng or 0))
    points, witnesses = [], []
    for k in k_list:
        sk = stream.child("profile", which, k)
        score_rng = sk.child("score")
        if k == n:
            est = vrad(body, budget, score_rng)
            points.append((k, est))
            witnesses.append(Subspace(np.eye(n), check=False))
            continue

        def score(E):
            return vrad(_restrict(body, E, kind), budget, score_rng)

        cands = list(sample_grassmannian(n, k, sk.child("trials"), size=trials_per_k))
        if candidates == "axes":
            cands += coordinate_subspaces(n, k)
        elif candidates:
            cands += [c for c in candidates if c.k == k]
        best_sub, best = _extremize(cands, score, pick)
        best_sub, best = _refine_subspace(best_sub, best, score, pick, refine_steps,
                                          sk.child("refine"))
        points.append((k, best))
        witnesses.append(best_sub)
    return ProfileCurve("k", points, ident, bias, witnesses)


def _better(a, b, pick):
    return a > b if pick is max else a < b


def _extremize(cands, score, pick):
    best_sub, best = None, None
    for E in cands:
        est = score(E)
        if best is None or _better(est.value, best.value, pick):  # ties: first occurrence
            best_sub, best = E, est
    return best_sub, best


def _step_schedule(steps, start=0.5, stop=1e-3):
    if steps <= 1:
        return [start] * steps
    return [start * (stop / start) ** (i / (steps - 1)) for i in range(steps)]


def _refine_subspace(sub, est, score, pick, steps, rng):
    if steps <= 0 or sub.k == sub.ambient_dim:
        return sub, est
    gen = as_generator(rng)
    for step in _step_schedule(steps):
        cand = perturb_subspace(sub, step, gen)
        c_est = score(cand)
        if _better(c_est.value, est.value, pick):
            sub, est = cand, c_est
    return sub, est


# -- radii of sections and projections ------------------------------------------------

def _sphere_extreme(fn, k, n_dirs, rng, pick, restarts=5, steps=100):
    """Extremize fn over S^{k-1}: sampling, then local search from the best few."""
    if n_dirs < 1:
        raise ValueError("n_dirs must be >= 1")
    if k == 1:
        vals = fn(np.array([[1.0], [-1.0]]))
        return float(pick(vals)), np.array([1.0 if vals[0] == pick(vals) else -1.0])
    gen = as_generator(rng)
    th = sample_sphere(k, gen, size=n_dirs)
    vals = np.asarray(fn(th))
    order = np.argsort(-vals if pick is max else vals, kind="stable")[:restarts]
    best_val, best_dir = float(vals[order[0]]), th[order[0]]
    for i in order:
        cur, cur_val = th[i], float(vals[i])
        for step in _step_schedule(steps, 0.3, 1e-4):
            prop = cur + step * gen.standard_normal(k)
            prop /= np.linalg.norm(prop)
            pv = float(fn(prop[None, :])[0])
            if _better(pv, cur_val, pick):
                cur, cur_val = prop, pv
        if _better(cur_val, best_val, pick):
            best_val, best_dir = cur_val, cur
    return best_val, best_dir


def out_radius_section(body: Body, sub: Subspace, n_dirs: int = 1000, rng=0) -> float:
    """max over theta in S_F of the radial function of K.

    A lower bound on diam_{B_F}(K ∩ F); exact when dim F = 1.
    """
    B = sub.basis
    fn = lambda th: 1.0 / body.gauge(th @ B.T)
    return _sphere_extreme(fn, sub.k, n_dirs, rng, max)[0]


def in_radius_projection(body: Body, sub: Subspace, n_dirs: int = 1000, rng=0) -> float:
    """min over theta in S_F of h_K(theta): the in-radius of P_F K (an upper bound)."""
    B = sub.basis
    fn = lambda th: body.support(th @ B.T)
    return _sphere_extreme(fn, sub.k, n_dirs, rng, min)[0]


def gelfand_upper(body: Body, codim: int, subspace_trials: int = 32, n_dirs: int = 500,
                  rng=0, candidates=None, refine_steps: int = 0):
    """Upper bound on the Gelfand number c_codim(K) with its witness subspace.

    min over sampled F in G_{n, n-codim} of the (sampled) out-radius of K ∩ F.
    Returns ``(EstimateCI, Subspace)``.  The reported ``std_err`` is the size
    of the last improvement found during the search, a convergence indicator.
    """
    n = body.dim
    if not 0 <= codim < n:
        raise ValueError(f"codim must lie in [0, {n - 1}]")
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng or 0))
    k = n - codim
    dir_rng = stream.child("dirs")
    score = lambda F: out_radius_section(body, F, n_dirs, dir_rng)
    if k == n:
        F = Subspace(np.eye(n), check=False)
        val = score(F)
        return EstimateCI(val, _floor_err(0.0, val), n_dirs, stream.seed,
                          "optimization_upper_bound"), F
    cands = list(sample_grassmannian(n, k, stream.child("trials"), size=subspace_trials))
    if candidates == "axes":
        cands += coordinate_subspaces(n, k)
    elif candidates:
        cands += [c for c in candidates if c.k == k]
    vals = [score(F) for F in cands]
    i = int(np.argmin(vals))
    best_F, best = cands[i], vals[i]
    last_gain = 0.0
    gen = as_generator(stream.child("refine"))
    for step in _step_schedule(refine_steps, 0.3, 1e-3):
        F = perturb_subspace(best_F, step, gen)
        v = score(F)
        if v < best:
            last_gain = best - v
            best_F, best = F, v
    est = EstimateCI(best, _floor_err(last_gain, best), subspace_trials * n_dirs,
                     stream.seed, "optimization_upper_bound")
    return est, best_F


def best_projection_in_radius(body: Body, k: int, subspace_trials: int = 32,
                              n_dirs: int = 500, rng=0, candidates=None,
                              refine_steps: int = 0):
    """Search F in G_{n,k} maximizing the in-radius of P_F K.  Returns (value, F)."""
    n = body.dim
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng or 0))
    dir_rng = stream.child("dirs")
    score = lambda F: in_radius_projection(body, F, n_dirs, dir_rng)
    if k == n:
        F = Subspace(np.eye(n), check=False)
        return score(F), F
    cands = list(sample_grassmannian(n, k, stream.child("trials"), size=subspace_trials))
    if candidates == "axes":
        cands += coordinate_subspaces(n, k)
    elif candidates:
        cands += [c for c in candidates if c.k == k]
    vals = [score(F) for F in cands]
    i = int(np.argmax(vals))
    best_F, best = cands[i], vals[i]
    gen = as_generator(stream.child("refine"))
    for step in _step_schedule(refine_steps, 0.3, 1e-3):
        F = perturb_subspace(best_F, step, gen)
        v = score(F)
        if v > best:
            best_F, best = F, v
    return best, best_F


# -- covering numbers ----------------------------------------------------------------

COVER_DIM_CAP = 4
COVER_POINT_GUARD = 10_000_000
COVER_WORK_GUARD = 50_000_000


def _int_box(m):
    """All integer vectors z with |z_i| <= m_i."""
    axes = [np.arange(-int(mi), int(mi) + 1) for mi in m]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(m))


def _cover_sets(K, L, t, pitch, stride=1):
    """Lattice points of K and, per candidate centre, the points its tL covers.

    Points live on pitch*Z^n and centres on the sublattice (stride*pitch)*Z^n,
    so coverage depends only on the offset: one stencil of offsets inside tL
    serves every centre.
    Returns (number of points, CSR incidence centre -> point, lattice size).
    """
    n = K.dim
    eye = np.eye(n)
    mK = np.floor(K.support(eye) / pitch + 1e-9).astype(int)
    mL = np.floor(t * L.support(eye) / pitch + 1e-9).astype(int)
    pts = _int_box(mK)
    pts = pts[K.gauge(pts * pitch) <= 1.0 + 1e-12]
    ext = (mK + mL) // stride
    size = len(pts) + int(np.prod(2 * ext + 1))
    if size > COVER_POINT_GUARD:
        raise NumericError(f"covering lattice has {size} points, above the guard "
                           f"{COVER_POINT_GUARD}")
    off = _int_box(mL)
    off = off[L.gauge(off * (pitch / t)) <= 1.0 + 1e-12]
    cands = _int_box(ext) * stride
    if len(cands) * len(off) > COVER_WORK_GUARD:
        raise NumericError("covering incidence exceeds the work guard")
    pad = ext * stride + mL
    grid = -np.ones(tuple(2 * pad + 1), dtype=np.int64)
    grid[tuple((pts + pad).T)] = np.arange(len(pts))
    rows, cols = [], []
    for lo in range(0, len(cands), 4096):
        c = cands[lo:lo + 4096]
        idx = grid[tuple((c[:, None, :] + off[None, :, :] + pad).transpose(2, 0, 1))]
        r, j = np.nonzero(idx >= 0)
        rows.append(r + lo)
        cols.append(idx[r, j])
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    A = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)),
                   shape=(len(cands), len(pts)))
    A = A[np.diff(A.indptr) > 0]
    A.sort_indices()
    return len(pts), A, size


def _greedy_cover(A, n_pts):
    """Two greedy covers, keeping the smaller after pruning redundant centres.

    One picks the centre with the largest new coverage; the other first picks
    the uncovered point with the fewest candidate centres, then the best centre
    among those (this one hugs corners and boundaries).
    """
    rows = [A.indices[A.indptr[i]:A.indptr[i + 1]] for i in range(A.shape[0])]
    return min(_prune(_max_coverage(rows, n_pts), rows, n_pts),
               _prune(_critical_point(A, rows, n_pts), rows, n_pts))


def _max_coverage(rows, n_pts):
    uncovered = np.ones(n_pts, dtype=bool)
    heap = [(-len(r), i) for i, r in enumerate(rows)]
    heapq.heapify(heap)
    remaining, chosen = n_pts, []
    while remaining:
        _, i = heapq.heappop(heap)
        gain = int(uncovered[rows[i]].sum())
        if gain == 0:
            continue
        if heap and gain < -heap[0][0]:
            heapq.heappush(heap, (-gain, i))
            continue
        chosen.append(i)
        uncovered[rows[i]] = False
        remaining -= gain
    return chosen


def _critical_point(A, rows, n_pts):
    C = csc_matrix(A)
    degree = np.diff(C.indptr)
    order = np.argsort(degree, kind="stable")
    uncovered = np.ones(n_pts, dtype=bool)
    chosen = []
    for p in order:
        if not uncovered[p]:
            continue
        cands = C.indices[C.indptr[p]:C.indptr[p + 1]]
        gains = [int(uncovered[rows[i]].sum()) for i in cands]
        best = int(cands[int(np.argmax(gains))])
        chosen.append(best)
        uncovered[rows[best]] = False
    return chosen


def _prune(chosen, rows, n_pts):
    counts = np.zeros(n_pts, dtype=int)
    for i in chosen:
        counts[rows[i]] += 1
    kept = 0
    for i in reversed(chosen):
        if np.all(counts[rows[i]] >= 2):
            counts[rows[i]] -= 1
        else:
            kept += 1
    return kept


ILP_NNZ_CAP = 40_000
ILP_NODE_LIMIT = 500


def _ilp_cover_count(A, upper):
    """Exact set cover over the lattice candidates (HiGHS, node-limited).

    Points covered by the same set of centres give identical constraints and
    are merged first; with a fixed candidate set their number stays bounded as
    the lattice is refined.  Any feasible incumbent is a valid cover, so the
    greedy count is only ever improved.  Limits are on problem size and nodes,
    not time, so the result does not depend on machine speed.
    """
    M = csr_matrix(A.T)
    M.sort_indices()
    keys = {}
    for i in range(M.shape[0]):
        keys.setdefault(M.indices[M.indptr[i]:M.indptr[i + 1]].tobytes(), i)
    M = M[np.array(sorted(keys.values()))]
    if M.nnz > ILP_NNZ_CAP:
        return upper
    M = csc_matrix(M.astype(float))
    res = milp(np.ones(A.shape[0]), constraints=LinearConstraint(M, 1, np.inf),
               integrality=np.ones(A.shape[0]), bounds=Bounds(0, 1),
               options={"node_limit": ILP_NODE_LIMIT})
    if res.x is None:
        return upper
    x = np.round(res.x)
    if np.any(M @ x < 1):
        return upper
    return min(upper, int(x.sum()))


def _cover_count(K, L, t, pitch, polish, stride=1):
    n_pts, A, size = _cover_sets(K, L, t, pitch, stride)
    count = _greedy_cover(A, n_pts)
    if polish and count > 1:
        count = _ilp_cover_count(A, count)
    return count, size


def covering_number_greedy(K: Body, L: Body, t: float, pitch: float | None = None,
                           polish: bool = True, refine: bool = True) -> int:
    """Count of translates of tL covering the lattice points of K.

    This covers the discretized set K ∩ h Z^n, so when t is within about one
    pitch of a value at which few translates swallow every lattice point
    (e.g. K = L and t close to 1) the count can undershoot N(K, tL) and even
    the volumetric lower bound.
    Centres are chosen greedily (largest new coverage first, redundant centres
    pruned), then, if ``polish``, improved by a bounded exact set-cover solve
    over the same candidates.  With ``refine`` the lattice pitch is halved
    until two successive counts agree; NumericError if the lattice guard is hit
    first.
    """
    if K.dim != L.dim:
        raise ValueError("bodies must share a dimension")
    if K.dim > COVER_DIM_CAP:
        raise UnsupportedError(f"greedy covering supports dim <= {COVER_DIM_CAP}")
    if t <= 0:
        raise ValueError("t must be positive")
    n = K.dim
    eye = np.eye(n)
    r_L = 1.0 / np.max(L.gauge(np.vstack([eye, -eye])))
    h = pitch or t * r_L / (4.0 if n <= 2 else 2.0)
    count, _ = _cover_count(K, L, t, h, polish)
    stride = 1
    while refine:
        h /= 2.0
        stride *= 2
        try:
            new, _ = _cover_count(K, L, t, h, polish, stride)
        except NumericError as exc:
            raise NumericError(f"covering count did not stabilize (last count {count}): "
                               f"{exc}") from None
        if new == count:
            break
        count = new
    return count


def covering_lower_volumetric(K: Body, L: Body, t: float, budget: int = 100_000,
                              rng=0) -> float:
    """(vrad K / (t vrad L))^n, the volume obstruction to N(K, tL)."""
    if t <= 0:
        raise ValueError("t must be positive")
    if K.dim != L.dim:
        raise ValueError("bodies must share a dimension")
    vk = vrad(K, budget, rng).value
    vl = vrad(L, budget, rng).value
    return (vk / (t * vl)) ** K.dim


def entropy_number_greedy(K: Body, L: Body, k: int, tol: float = 1e-2,
                          pitch_ratio: float = 8.0) -> float:
    """Smallest t (to ``tol`` relative) with a cover of K by 2^k translates of tL.

    Each count uses one lattice of pitch t r_L / ``pitch_ratio`` (no
    refinement), so the search is deterministic and bounded; the result is an
    upper estimate of e_k(K, L) up to lattice resolution.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    target = 2**k
    eye = np.vstack([np.eye(K.dim), -np.eye(K.dim)])
    r_L = 1.0 / np.max(L.gauge(eye))

    def fits(t):
        return covering_number_greedy(K, L, t, pitch=t * r_L / pitch_ratio,
                                      refine=False) <= target

    hi = float(np.max(K.support(eye)) / r_L) * (1 + 1e-9)
    while not fits(hi):
        hi *= 2.0
    lo = hi / 2.0
    while fits(lo):
        hi, lo = lo, lo / 2.0
        if hi < 1e-6:
            return hi
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if fits(mid):
            hi = mid
        else:
            lo = mid
    return hi
