"""Even log-concave probability measures.

Sampling, marginals, isotropic normalization, isotropic constants,
L_q-centroid bodies and psi_alpha constants.  Closed forms are used wherever
a variant has one; everything else falls back on sample moments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh
from scipy.special import gammaln, logsumexp

from . import bodies as B
from .errors import ConvergenceError, UnsupportedError
from .functionals import EstimateCI, _floor_err, vrad
from .sampling import RngStream, Subspace, as_generator, sample_sphere, seed_of


def q_cap(n_samples: int) -> float:
    """Largest moment order estimable from ``n_samples`` draws: 2 log2(N)."""
    return 2.0 * math.log2(max(n_samples, 2))


def gaussian_moment_radius(q: float) -> float:
    """(E|g|^q)^{1/q} for a standard normal g."""
    log_m = 0.5 * q * math.log(2.0) + gammaln((q + 1) / 2) - 0.5 * math.log(math.pi)
    return math.exp(log_m / q)


# -- one-dimensional laws ------------------------------------------------------------

@dataclass(frozen=True)
class Law1D:
    """Even log-concave law on R: gaussian(sigma), symmetric_exponential(lam), uniform(a)."""

    kind: str
    param: float

    def __post_init__(self):
        if self.kind not in ("gaussian", "symmetric_exponential", "uniform"):
            raise ValueError(f"unknown 1-D law {self.kind!r}")
        if not self.param > 0 or not math.isfinite(self.param):
            raise ValueError("law parameter must be positive and finite")

    def sample(self, gen, size):
        if self.kind == "gaussian":
            return self.param * gen.standard_normal(size)
        if self.kind == "symmetric_exponential":
            return gen.laplace(0.0, 1.0 / self.param, size)
        return gen.uniform(-self.param, self.param, size)

    @property
    def variance(self):
        if self.kind == "gaussian":
            return self.param**2
        if self.kind == "symmetric_exponential":
            return 2.0 / self.param**2
        return self.param**2 / 3.0

    @property
    def log_density_sup(self):
        if self.kind == "gaussian":
            return -0.5 * math.log(2 * math.pi * self.param**2)
        if self.kind == "symmetric_exponential":
            return math.log(self.param / 2.0)
        return -math.log(2.0 * self.param)

    def log_abs_moment(self, q):
        """log E|X|^q."""
        if self.kind == "gaussian":
            return q * math.log(self.param * gaussian_moment_radius(q))
        if self.kind == "symmetric_exponential":
            return gammaln(q + 1) - q * math.log(self.param)
        return q * math.log(self.param) - math.log(q + 1)

    @classmethod
    def isotropic(cls, kind):
        param = {"gaussian": 1.0, "symmetric_exponential": math.sqrt(2.0),
                 "uniform": math.sqrt(3.0)}[kind]
        return cls(kind, param)


# -- measures ------------------------------------------------------------------------------

class LogConcaveMeasure:
    dim: int

    def sample(self, n_samples, rng):
        if n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        return self._sample(int(n_samples), as_generator(rng))

    def covariance(self):
        """Exact covariance, or None when only sampling can tell."""
        return None

    @property
    def log_density_sup(self):
        """log sup f, or None when unknown."""
        return None

    @property
    def density_sup(self):
        v = self.log_density_sup
        return None if v is None else math.exp(v)

    def closed_support(self, q, Y):
        """h_{Z_q}(y) for rows of Y when a closed form exists, else None."""
        return None

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class StandardGaussian(LogConcaveMeasure):
    def __init__(self, dim):
        if int(dim) < 1:
            raise ValueError("dimension must be >= 1")
        self.dim = int(dim)

    def _sample(self, m, gen):
        return gen.standard_normal((m, self.dim))

    def covariance(self):
        return np.eye(self.dim)

    @property
    def log_density_sup(self):
        return -0.5 * self.dim * math.log(2 * math.pi)

    def closed_support(self, q, Y):
        return gaussian_moment_radius(q) * np.linalg.norm(Y, axis=1)


class ProductLaw(LogConcaveMeasure):
    def __init__(self, laws):
        laws = list(laws)
        if not laws:
            raise ValueError("ProductLaw needs at least one component")
        self.laws = tuple(laws)
        self.dim = len(laws)

    def _sample(self, m, gen):
        return np.column_stack([law.sample(gen, m) for law in self.laws])

    def covariance(self):
        return np.diag([law.variance for law in self.laws])

    @property
    def log_density_sup(self):
        return sum(law.log_density_sup for law in self.laws)

    def closed_support(self, q, Y):
        nz = np.abs(Y) > 0
        if all(law.kind == "gaussian" for law in self.laws):
            sig = np.array([law.param for law in self.laws])
            return gaussian_moment_radius(q) * np.linalg.norm(Y * sig, axis=1)
        if np.all(nz.sum(axis=1) <= 1):
            idx = np.argmax(nz, axis=1)
            rad = np.array([math.exp(law.log_abs_moment(q) / q) for law in self.laws])
            return np.abs(Y[np.arange(len(Y)), idx]) * rad[idx]
        return None


class UniformOnBody(LogConcaveMeasure):
    """Normalized Lebesgue measure on a body.

    Exact samplers for L_p balls, ellipsoids and their linear images; hit-and-run
    otherwise.
    """

    def __init__(self, body, vrad_budget=200_000, vrad_rng=None):
        self.body = body
        self.dim = body.dim
        self._vrad_budget = vrad_budget
        self._vrad_rng = vrad_rng if vrad_rng is not None else RngStream(0, 0x766F6C)
        self._vrad = None

    # exact routes
    def _exact_sampler(self):
        chain = []
        body = self.body
        while isinstance(body, (B.LinearImage, B.Scaled)):
            chain.append(body.matrix if isinstance(body, B.LinearImage) else body.factor)
            body = body.inner
        if isinstance(body, (B.LpBall, B.EuclideanBall)):
            p = body.p if isinstance(body, B.LpBall) else 2.0
            base = lambda m, gen: body.radius * _sample_lp_ball(body.dim, p, m, gen)
        elif isinstance(body, B.Ellipsoid):
            L = np.linalg.cholesky(body.matrix)
            base = lambda m, gen: _sample_lp_ball(body.dim, 2.0, m, gen) @ L.T
        else:
            return None

        def run(m, gen):
            X = base(m, gen)
            for op in reversed(chain):
                X = X * op if np.isscalar(op) else X @ op.T
            return X
        return run

    def _sample(self, m, gen):
        exact = self._exact_sampler()
        if exact is not None:
            return exact(m, gen)
        return hit_and_run(self.body, m, gen)

    def volume_radius(self):
        if self._vrad is None:
            self._vrad = vrad(self.body, self._vrad_budget, self._vrad_rng)
        return self._vrad

    @property
    def log_density_sup(self):
        v = self.volume_radius()
        if v.method != "closed_form":
            return None
        return -(self.dim * math.log(v.value) + B.log_unit_ball_volume(self.dim))

    def covariance(self):
        body, chain = self.body, []
        while isinstance(body, (B.LinearImage, B.Scaled)):
            chain.append(body.matrix if isinstance(body, B.LinearImage)
                         else body.factor * np.eye(body.dim))
            body = body.inner
        n = body.dim
        if isinstance(body, B.EuclideanBall):
            C = body.radius**2 / (n + 2) * np.eye(n)
        elif isinstance(body, B.LpBall):
            p, r = body.p, body.radius
            if p == math.inf:
                var = r * r / 3.0
            else:
                var = r * r * math.exp(gammaln(3 / p) + gammaln(n / p + 1)
                                       - gammaln(1 / p) - gammaln((n + 2) / p + 1))
            C = var * np.eye(n)
        elif isinstance(body, B.Ellipsoid):
            C = body.matrix / (n + 2)
        else:
            return None
        for T in reversed(chain):
            C = T @ C @ T.T
        return C

    def closed_support(self, q, Y):
        body = self.body
        if isinstance(body, B.LpBall) and body.p == math.inf:
            return ProductLaw([Law1D("uniform", body.radius)] * self.dim).closed_support(q, Y)
        return None

    def __repr__(self):
        return f"UniformOnBody({self.body!r})"


class LinearImageMeasure(LogConcaveMeasure):
    def __init__(self, inner, matrix):
        T = np.array(matrix, dtype=float)
        if T.shape != (inner.dim, inner.dim):
            raise ValueError(f"matrix must be {inner.dim}x{inner.dim}")
        sign, logdet = np.linalg.slogdet(T)
        if sign == 0 or not np.isfinite(logdet):
            raise ValueError("linear image needs an invertible matrix")
        self.inner, self.matrix, self.dim, self.logdet = inner, T, inner.dim, logdet

    def _sample(self, m, gen):
        return self.inner._sample(m, gen) @ self.matrix.T

    def covariance(self):
        C = self.inner.covariance()
        return None if C is None else self.matrix @ C @ self.matrix.T

    @property
    def log_density_sup(self):
        v = self.inner.log_density_sup
        return None if v is None else v - self.logdet

    def closed_support(self, q, Y):
        return self.inner.closed_support(q, Y @ self.matrix)


class Marginal(LogConcaveMeasure):
    """Push-forward of ``inner`` under the projection onto ``sub`` (in subspace coordinates)."""

    def __init__(self, inner, sub):
        if sub.ambient_dim != inner.dim:
            raise ValueError("subspace and measure dimensions differ")
        self.inner, self.sub, self.dim = inner, sub, sub.k

    def _sample(self, m, gen):
        return self.inner._sample(m, gen) @ self.sub.basis

    def covariance(self):
        C = self.inner.covariance()
        Bm = self.sub.basis
        return None if C is None else Bm.T @ C @ Bm

    def closed_support(self, q, Y):
        return self.inner.closed_support(q, Y @ self.sub.basis.T)


def _sample_lp_ball(n, p, m, gen):
    """Uniform points of B_p^n.

    p = inf is the cube; otherwise G / (sum |G_i|^p + W)^{1/p} with G_i of
    density proportional to exp(-|t|^p) and W standard exponential.
    """
    if p == math.inf:
        return gen.uniform(-1.0, 1.0, (m, n))
    if p == 2.0:
        g = gen.standard_normal((m, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        return g * gen.random((m, 1)) ** (1.0 / n)
    G = gen.gamma(1.0 / p, 1.0, (m, n)) ** (1.0 / p) * gen.choice([-1.0, 1.0], (m, n))
    W = gen.exponential(1.0, (m, 1))
    return G / (np.sum(np.abs(G) ** p, axis=1, keepdims=True) + W) ** (1.0 / p)


def _chord(body, X, D):
    """Largest s with X + s D in the body, for each row (X inside)."""
    if isinstance(body, B.HPolytope):
        a = X @ body.rows.T
        b = D @ body.rows.T
        with np.errstate(divide="ignore"):
            lim = np.where(b > 0, (1 - a) / b, np.where(b < 0, (-1 - a) / b, np.inf))
        return lim.min(axis=1)
    hi = np.ones(len(X))
    for _ in range(200):
        out = body.gauge(X + hi[:, None] * D) > 1.0
        if out.all():
            break
        hi = np.where(out, hi, 2 * hi)
    else:
        raise ConvergenceError("hit-and-run chord search did not leave the body", 200)
    lo = np.zeros(len(X))
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        inside = body.gauge(X + mid[:, None] * D) <= 1.0
        lo, hi = np.where(inside, mid, lo), np.where(inside, hi, mid)
    return lo


def hit_and_run(body, n_samples, rng, chains=64, thin=None, burn_in=None):
    """Hit-and-run over the membership oracle, started at 0.

    ``chains`` independent walks run in lock step; each output is taken after
    ``thin`` (default n^2) steps, after ``burn_in`` (default 10 n^2) steps.
    """
    gen = as_generator(rng)
    n = body.dim
    thin = n * n if thin is None else thin
    burn_in = 10 * n * n if burn_in is None else burn_in
    c = min(chains, n_samples)
    X = np.zeros((c, n))

    def step(X):
        D = sample_sphere(n, gen, size=c)
        up, down = _chord(body, X, D), _chord(body, X, -D)
        s = gen.uniform(-down, up)
        return X + s[:, None] * D

    for _ in range(burn_in):
        X = step(X)
    out = []
    while sum(len(o) for o in out) < n_samples:
        for _ in range(max(thin, 1)):
            X = step(X)
        out.append(X.copy())
    return np.vstack(out)[:n_samples]


# -- constructors -------------------------------------------------------------------------

def standard_gaussian(n):
    return StandardGaussian(n)


def product_law(kind, dim, param=None, isotropic=False):
    law = Law1D.isotropic(kind) if isotropic or param is None else Law1D(kind, param)
    return ProductLaw([law] * int(dim))


def uniform_on_body(body, **kw):
    return UniformOnBody(body, **kw)


def linear_image_measure(measure, matrix):
    T = np.asarray(matrix, dtype=float)
    if isinstance(measure, LinearImageMeasure):
        return LinearImageMeasure(measure.inner, T @ measure.matrix)
    return LinearImageMeasure(measure, T)


def sample(measure: LogConcaveMeasure, n_samples: int, rng) -> np.ndarray:
    return measure.sample(n_samples, rng)


def marginal(measure: LogConcaveMeasure, sub: Subspace) -> LogConcaveMeasure:
    """pi_E mu in subspace coordinates; Gaussians stay standard Gaussian."""
    if sub.ambient_dim != measure.dim:
        raise ValueError("subspace and measure dimensions differ")
    if isinstance(measure, StandardGaussian):
        return StandardGaussian(sub.k)
    if isinstance(measure, Marginal):
        return Marginal(measure.inner, Subspace(measure.sub.basis @ sub.basis, check=False))
    return Marginal(measure, sub)


def sample_covariance(X):
    """Second-moment matrix for even measures (barycentre 0 by symmetry)."""
    return X.T @ X / len(X)


def _inv_sqrt(C):
    w, V = eigh(C)
    if np.min(w) <= 0:
        raise ConvergenceError("covariance is not positive definite")
    return (V / np.sqrt(w)) @ V.T


@dataclass
class IsotropicReport:
    matrix: np.ndarray
    rounds: int
    residual: float


def isotropic_normalize(measure, n_samples=100_000, tol=0.05, rng=0, exact=True,
                        max_rounds=20):
    """Map ``measure`` to isotropic position.

    Each round whitens with Cov^{-1/2} of the current image; it stops when the
    re-estimated covariance is within ``tol`` of the identity entrywise.
    Exact covariances are used when the variant has one (unless ``exact`` is
    False).  Returns (isotropic measure, IsotropicReport).
    """
    if not 0 < tol <= 0.1:
        raise ValueError("tol must lie in (0, 0.1]")
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng or 0))
    total = np.eye(measure.dim)
    current = measure
    residual = math.inf
    for r in range(1, max_rounds + 1):
        C = current.covariance() if exact else None
        if C is None:
            C = sample_covariance(current.sample(n_samples, stream.child("iso", r)))
        residual = float(np.max(np.abs(C - np.eye(measure.dim))))
        if residual < tol:
            return current, IsotropicReport(total, r, residual)
        T = _inv_sqrt(C)
        total = T @ total
        current = linear_image_measure(measure, total)
    raise ConvergenceError(f"covariance residual {residual:.3g} after {max_rounds} rounds",
                           max_rounds, residual)


def isotropic_constant(measure, n_samples=100_000, rng=0, batches=20) -> EstimateCI:
    """L_mu = (sup f)^{1/n} det(Cov)^{1/2n}.

    Exact when density supremum and covariance are both closed; otherwise the
    covariance log-determinant comes from batch means and, for bodies without a
    closed volume, the volume radius error is folded in.
    """
    n = measure.dim
    seed = seed_of(rng)
    log_sup, sup_err = measure.log_density_sup, 0.0
    if log_sup is None and isinstance(measure, UniformOnBody):
        v = measure.volume_radius()
        log_sup = -(n * math.log(v.value) + B.log_unit_ball_volume(n))
        sup_err = n * v.std_err / v.value
    if log_sup is None:
        raise UnsupportedError(f"density supremum unknown for {measure!r}")
    C = measure.covariance()
    if C is not None and sup_err == 0.0:
        return EstimateCI.exact(math.exp(log_sup / n + np.linalg.slogdet(C)[1] / (2 * n)), seed)
    if C is not None:
        logdets, ld_err = np.array([np.linalg.slogdet(C)[1]]), 0.0
    else:
        X = measure.sample(n_samples, rng)
        logdets = np.array([np.linalg.slogdet(sample_covariance(b))[1]
                            for b in np.array_split(X, batches)])
        ld_err = logdets.std(ddof=1) / math.sqrt(batches)
    log_L = log_sup / n + logdets.mean() / (2 * n)
    L = math.exp(log_L)
    err = L * math.hypot(sup_err / n, ld_err / (2 * n))
    return EstimateCI(L, _floor_err(err, L), n_samples, seed, "monte_carlo")


def density_at_zero_knn(measure, n_samples=100_000, rng=0, k=None) -> EstimateCI:
    """f(0) from the distance to the k-th nearest sample (k ~ sqrt N).

    For even log-concave measures f(0) is the supremum of the density.
    """
    X = measure.sample(n_samples, rng)
    n = measure.dim
    k = int(k or max(10, math.isqrt(n_samples)))
    r = np.sort(np.linalg.norm(X, axis=1))[k - 1]
    f0 = k / (n_samples * math.exp(B.log_unit_ball_volume(n) + n * math.log(r)))
    return EstimateCI(f0, f0 / math.sqrt(k), n_samples, seed_of(rng), "monte_carlo")


def marginal_isotropic_constant(measure, n_samples=100_000, rng=0) -> EstimateCI:
    """Isotropic constant with the density supremum estimated by nearest neighbours.

    Used for marginals, whose densities have no closed form.
    """
    n = measure.dim
    C = measure.covariance()
    X = measure.sample(n_samples, rng)
    if C is None:
        C = sample_covariance(X)
    # whitening first keeps the nearest-neighbour ball well shaped
    W = _inv_sqrt(C)
    Xw = X @ W.T
    r = np.sort(np.linalg.norm(Xw, axis=1))
    k = max(10, math.isqrt(n_samples))
    log_f0 = math.log(k / n_samples) - B.log_unit_ball_volume(n) - n * math.log(r[k - 1])
    # the whitened measure has identity covariance, so L = f_w(0)^{1/n}
    L = math.exp(log_f0 / n)
    return EstimateCI(L, _floor_err(L / (n * math.sqrt(k)), L), n_samples, seed_of(rng),
                      "monte_carlo")


# -- L_q-centroid bodies -------------------------------------------------------------------

def _check_q(q, n_samples):
    if q < 1:
        raise ValueError("q must be >= 1")
    cap = q_cap(n_samples)
    if q > cap:
        need = math.ceil(2 ** (q / 2))
        raise ValueError(f"q={q} exceeds the moment cap {cap:.2f} for {n_samples} samples; "
                         f"at least {need} samples are required")


def _moment_support(X, q, Y):
    """(mean |X y|^q)^{1/q} per row of Y with delta-method standard errors."""
    Z = np.abs(X @ Y.T)
    logZ = np.log(np.maximum(Z, 1e-300)) * q
    N = len(X)
    lm = logsumexp(logZ, axis=0) - math.log(N)          # log mean |z|^q
    w = np.exp(logZ - lm)                               # |z|^q / mean
    rel = w.std(axis=0, ddof=1) / math.sqrt(N)          # std error of mean / mean
    h = np.exp(lm / q)
    return h, h * rel / q


class CentroidBody(B.Body):
    """Z_q(mu) built on one shared sample matrix."""

    def __init__(self, measure, q, n_samples=20_000, rng=0):
        _check_q(q, n_samples)
        self.measure, self.q, self.dim = measure, float(q), measure.dim
        self.n_samples = int(n_samples)
        self.rng = rng if isinstance(rng, RngStream) else RngStream(int(rng or 0))
        self._X = None

    @property
    def samples(self):
        if self._X is None:
            X = self.measure.sample(self.n_samples, self.rng.child("centroid"))
            X.setflags(write=False)
            self._X = X
        return self._X

    def support_ci(self, U):
        U = np.atleast_2d(np.asarray(U, dtype=float))
        out_h, out_e = [], []
        for i in range(0, len(U), 256):
            h, e = _moment_support(self.samples, self.q, U[i:i + 256])
            out_h.append(h)
            out_e.append(e)
        return np.concatenate(out_h), np.concatenate(out_e)

    def _support(self, U):
        return self.support_ci(U)[0]

    def _gauge(self, X):
        return _centroid_gauge(self.samples, self.q, X)

    def _make_projection(self, sub):
        return CentroidBody(marginal(self.measure, sub), self.q, self.n_samples, self.rng)

    def __repr__(self):
        return f"CentroidBody({self.measure!r}, q={self.q:g})"


def _centroid_gauge(X, q, D, rtol=1e-13, max_iter=80, hess_rows=None):
    """||d||_{Z_q} = sup_y <d,y>/h(y), via Newton on F(y) = mean|Xy|^q / q - <d,y>.

    The ratio <d,y>/h(y) is a lower bound for every y and is exact, to second
    order, at the minimizer of F; iteration stops once it settles to ``rtol``.
    The Hessian uses the first ``hess_rows`` samples; gradient and objective
    use all of them, so the fixed point is exact for the full sample.
    """
    if q < 2:
        raise UnsupportedError("centroid-body gauge is implemented for q >= 2")
    N, n = X.shape
    out = np.empty(len(D))
    Xh = X if hess_rows is None else X[:hess_rows]
    scale_h = N / len(Xh)

    def ratio(y, z):
        return (d @ y) / np.mean(np.abs(z) ** q) ** (1 / q)

    for j, d in enumerate(D):
        nd = np.linalg.norm(d)
        if nd == 0:
            out[j] = 0.0
            continue
        u = d / nd
        h_u = np.mean(np.abs(X @ u) ** q) ** (1 / q)
        y = u * (nd / h_u**q) ** (1 / (q - 1))
        z = X @ y
        F = np.mean(np.abs(z) ** q) / q - d @ y
        val = ratio(y, z)
        for it in range(max_iter):
            g = X.T @ (np.abs(z) ** (q - 1) * np.sign(z)) / N - d
            zh = z[:len(Xh)]
            H = (q - 1) * (Xh.T * np.abs(zh) ** (q - 2)) @ Xh * scale_h / N
            step = np.linalg.solve(H + 1e-14 * np.trace(H) / n * np.eye(n), g)
            dec = g @ step
            a = 1.0
            while a >= 1e-12:
                y_new = y - a * step
                z_new = X @ y_new
                F_new = np.mean(np.abs(z_new) ** q) / q - d @ y_new
                if F_new <= F - 0.25 * a * dec:
                    break
                a *= 0.5
            else:
                break  # no further decrease representable: converged to precision
            y, z, F = y_new, z_new, F_new
            new_val = ratio(y, z)
            done = abs(new_val - val) <= rtol * abs(new_val)
            val = max(val, new_val)
            if done:
                break
        else:
            raise ConvergenceError("centroid-body gauge Newton did not converge",
                                   max_iter, float(dec))
        out[j] = val
    return out


def centroid_body(measure, q, n_samples=20_000, rng=0):
    """Z_q(mu) as a body.  Gaussian images are exact ellipsoids (balls)."""
    if q < 1:
        raise ValueError("q must be >= 1")
    base, T = measure, np.eye(measure.dim)
    while isinstance(base, (LinearImageMeasure, Marginal)):
        if isinstance(base, LinearImageMeasure):
            T = T @ base.matrix
            base = base.inner
        else:
            T = T @ base.sub.basis.T
            base = base.inner
    gaussian = isinstance(base, StandardGaussian) or (
        isinstance(base, ProductLaw) and all(l.kind == "gaussian" for l in base.laws))
    if gaussian:
        c = gaussian_moment_radius(q)
        if isinstance(base, ProductLaw):
            T = T @ np.diag([l.param for l in base.laws])
        A = T @ T.T
        if np.allclose(A, np.eye(measure.dim), atol=1e-14):
            return B.EuclideanBall(measure.dim, c)
        return B.Ellipsoid(c * c * A)
    return CentroidBody(measure, q, n_samples, rng)


def centroid_body_support(measure, q, y, n_samples=100_000, rng=0,
                          method=None) -> EstimateCI:
    """h_{Z_q(mu)}(y) with a delta-method CI.

    Closed forms are used where available unless ``method="monte_carlo"``.
    """
    _check_q(q, n_samples)
    if method not in (None, "closed_form", "monte_carlo"):
        raise ValueError("method must be 'closed_form' or 'monte_carlo'")
    y = np.asarray(y, dtype=float)
    if y.shape != (measure.dim,):
        raise ValueError(f"direction must have length {measure.dim}")
    closed = None if method == "monte_carlo" else measure.closed_support(q, y[None, :])
    if method == "closed_form" and closed is None:
        raise UnsupportedError(f"no closed form for Z_q of {measure!r}")
    if closed is not None:
        return EstimateCI.exact(float(closed[0]), seed_of(rng))
    X = measure.sample(n_samples, rng)
    h, e = _moment_support(X, q, y[None, :])
    return EstimateCI(float(h[0]), _floor_err(e[0], h[0]), n_samples, seed_of(rng),
                      "monte_carlo")


def psi_alpha_constant(measure, alpha, q_grid, n_dirs=200, n_samples=100_000, rng=0,
                       directions=None) -> EstimateCI:
    """max over q in q_grid and probed theta of h_{Z_q}(theta) / (q^{1/alpha} h_{Z_2}(theta)).

    A finite maximum, hence a lower estimate of b_alpha.  Probed directions are
    ``directions`` if given, else ``n_dirs`` uniform ones.
    """
    if not 1 <= alpha <= 2:
        raise ValueError("alpha must lie in [1, 2]")
    q_grid = sorted(float(q) for q in q_grid)
    if not q_grid or q_grid[0] < 2:
        raise ValueError("q_grid must be nonempty with every q >= 2")
    _check_q(q_grid[-1], n_samples)
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng or 0))
    if directions is None:
        U = sample_sphere(measure.dim, stream.child("dirs"), size=n_dirs)
    else:
        U = np.atleast_2d(np.asarray(directions, dtype=float))
    h2 = measure.closed_support(2.0, U)
    if h2 is not None and all(measure.closed_support(q, U) is not None for q in q_grid):
        ratios = [measure.closed_support(q, U) / (q ** (1 / alpha) * h2) for q in q_grid]
        return EstimateCI.exact(float(np.max(ratios)), stream.seed)
    X = measure.sample(n_samples, stream.child("samples"))
    h2, e2 = _moment_support(X, 2.0, U)
    best, best_err = -math.inf, 0.0
    for q in q_grid:
        hq, eq = _moment_support(X, q, U)
        r = hq / (q ** (1 / alpha) * h2)
        i = int(np.argmax(r))
        if r[i] > best:
            best = float(r[i])
            best_err = best * math.hypot(eq[i] / hq[i], e2[i] / h2[i])
    return EstimateCI(best, _floor_err(best_err, best), n_samples, stream.seed, "monte_carlo")


# -- JSON specs ---------------------------------------------------------------------------

def measure_from_spec(spec: dict, dim: int | None = None) -> LogConcaveMeasure:
    """Build a measure from a JSON-style dict.

    variants: standard_gaussian; product {law, param | isotropic}; uniform_on_body
    {body: body spec}; linear_image {inner: measure spec, matrix}.
    """
    if not isinstance(spec, dict) or "variant" not in spec:
        raise ValueError("measure spec must be an object with a 'variant'")
    kind = spec["variant"]
    n = spec.get("dim", dim)
    params = spec.get("params", {})
    if kind == "standard_gaussian":
        if n is None:
            raise ValueError("standard_gaussian needs 'dim'")
        return StandardGaussian(int(n))
    if kind == "product":
        if n is None:
            raise ValueError("product needs 'dim'")
        return product_law(params.get("law", "uniform"), int(n), params.get("param"),
                           bool(params.get("isotropic", False)))
    if kind == "uniform_on_body":
        body = B.body_from_spec(params["body"], n)
        return UniformOnBody(body)
    if kind == "linear_image":
        inner = measure_from_spec(params["inner"], n)
        return linear_image_measure(inner, params["matrix"])
    raise ValueError(f"unknown measure variant {kind!r}")
