"""Centrally-symmetric convex bodies given by support / gauge oracles.

A :class:`Body` answers two questions about a symmetric convex body K in R^n:

* ``support(u)`` -- h_K(u) = max_{x in K} <u, x>
* ``gauge(x)``   -- ||x||_K = min {t >= 0 : x in tK}

Both accept a single vector of shape ``(n,)`` or a batch ``(m, n)``.
Structural transforms (:func:`polar`, :func:`section`, :func:`project`,
:func:`linear_image`) return new bodies; whenever the result has an exact
description (ball, ellipsoid, H/V-polytope) that description is returned
instead of a generic wrapper.
"""
from __future__ import annotations

import math
from itertools import combinations

import numpy as np
from scipy import linalg as sla
from scipy.optimize import linprog, minimize
from scipy.special import gammaln

from .errors import ConvergenceError
from .sampling import Subspace

__all__ = [
    "Body",
    "EuclideanBall",
    "LpBall",
    "Ellipsoid",
    "HPolytope",
    "VPolytope",
    "LinearImage",
    "Scaled",
    "Polar",
    "Section",
    "Projection",
    "support",
    "gauge",
    "polar",
    "section",
    "project",
    "membership",
    "linear_image",
    "scaled",
    "cube",
    "cross_polytope",
    "body_from_spec",
    "log_unit_ball_volume",
]

LP_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}
ZONOTOPE_SUBSET_CAP = 200_000
HULL_DIM_CAP = 6


def log_unit_ball_volume(n: int) -> float:
    """log |B_2^n|."""
    return 0.5 * n * math.log(math.pi) - gammaln(0.5 * n + 1.0)


def _as_batch(v, dim):
    arr = np.asarray(v, dtype=float)
    single = arr.ndim == 1
    arr2 = np.atleast_2d(arr)
    if arr2.ndim != 2 or arr2.shape[1] != dim:
        raise ValueError(f"expected vectors of length {dim}, got shape {arr.shape}")
    return arr2, single


class Body:
    """Base class. Subclasses implement ``_support`` / ``_gauge`` on (m, n) batches."""

    dim: int

    def support(self, u):
        U, single = _as_batch(u, self.dim)
        out = self._support(U)
        return float(out[0]) if single else out

    def gauge(self, x):
        X, single = _as_batch(x, self.dim)
        out = self._gauge(X)
        return float(out[0]) if single else out

    def radial(self, x):
        """Radial function 1/||x||_K."""
        with np.errstate(divide="ignore"):
            return 1.0 / self.gauge(x)

    # structural hooks, overridden where an exact answer exists
    def polytope(self):
        """``("H", A)`` for K = {|Ax| <= 1}, ``("V", V)`` for K = conv(+-rows of V), or None."""
        return None

    def zonotope(self):
        """Generator matrix G (n x m) with K = G [-1, 1]^m, or None."""
        return None

    def closed_vrad(self):
        """Exact volume radius if one is available, else None."""
        return None

    def _make_polar(self):
        return Polar(self)

    def _make_section(self, sub):
        return Section(self, sub)

    def _make_projection(self, sub):
        return Projection(self, sub)

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class EuclideanBall(Body):
    def __init__(self, dim, radius=1.0):
        if dim < 1 or radius <= 0:
            raise ValueError("need dim >= 1 and radius > 0")
        self.dim, self.radius = int(dim), float(radius)

    def _support(self, U):
        return self.radius * np.linalg.norm(U, axis=1)

    def _gauge(self, X):
        return np.linalg.norm(X, axis=1) / self.radius

    def closed_vrad(self):
        return self.radius

    def _make_polar(self):
        return EuclideanBall(self.dim, 1.0 / self.radius)

    def _make_section(self, sub):
        return EuclideanBall(sub.k, self.radius)

    _make_projection = _make_section


def _conjugate(p):
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


class LpBall(Body):
    """radius * B_p^n for p in [1, inf]."""

    def __init__(self, dim, p, radius=1.0):
        p = float(p)
        if dim < 1 or radius <= 0 or p < 1:
            raise ValueError("need dim >= 1, radius > 0, p >= 1")
        self.dim, self.p, self.radius = int(dim), p, float(radius)

    @staticmethod
    def _pnorm(X, p):
        if math.isinf(p):
            return np.max(np.abs(X), axis=1)
        if p == 1:
            return np.sum(np.abs(X), axis=1)
        if p == 2:
            return np.linalg.norm(X, axis=1)
        return np.linalg.norm(X, ord=p, axis=1)

    def _gauge(self, X):
        return self._pnorm(X, self.p) / self.radius

    def _support(self, U):
        return self.radius * self._pnorm(U, _conjugate(self.p))

    def polytope(self):
        if math.isinf(self.p):
            return ("H", np.eye(self.dim) / self.radius)
        if self.p == 1:
            return ("V", np.eye(self.dim) * self.radius)
        return None

    def zonotope(self):
        if math.isinf(self.p):
            return np.eye(self.dim) * self.radius
        return None

    def closed_vrad(self):
        n, p = self.dim, self.p
        if math.isinf(p):
            log_vol = n * math.log(2.0)
        else:
            log_vol = n * (math.log(2.0) + gammaln(1.0 + 1.0 / p)) - gammaln(1.0 + n / p)
        return self.radius * math.exp((log_vol - log_unit_ball_volume(n)) / n)

    def _make_polar(self):
        return LpBall(self.dim, _conjugate(self.p), 1.0 / self.radius)

    def _make_section(self, sub):
        if self.p == 2:
            return EuclideanBall(sub.k, self.radius)
        if math.isinf(self.p):
            return HPolytope(sub.basis / self.radius)
        return Section(self, sub)

    def _make_projection(self, sub):
        if self.p == 2:
            return EuclideanBall(sub.k, self.radius)
        if self.p == 1:
            return VPolytope(sub.basis * self.radius)
        return Projection(self, sub)

    def __repr__(self):
        return f"LpBall(dim={self.dim}, p={self.p}, radius={self.radius})"


class Ellipsoid(Body):
    """{x : x^T A^{-1} x <= 1} for a symmetric positive-definite A."""

    def __init__(self, matrix):
        A = np.array(matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("ellipsoid matrix must be square")
        if not np.allclose(A, A.T, rtol=1e-10, atol=1e-12 * max(1.0, np.abs(A).max())):
            raise ValueError("ellipsoid matrix must be symmetric")
        A = 0.5 * (A + A.T)
        try:
            self._chol = np.linalg.cholesky(A)
        except np.linalg.LinAlgError as exc:
            raise ValueError("ellipsoid matrix is not positive definite") from exc
        A.setflags(write=False)
        self.matrix = A
        self.dim = A.shape[0]

    @classmethod
    def from_semiaxes(cls, semiaxes, rotation=None):
        a = np.asarray(semiaxes, dtype=float)
        if a.ndim != 1 or a.size == 0 or not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise ValueError("semiaxes must be a nonempty list of positive numbers")
        A = np.diag(a**2)
        if rotation is not None:
            R = np.asarray(rotation, dtype=float)
            A = R @ A @ R.T
        return cls(A)

    def semiaxes(self):
        return np.sqrt(np.linalg.eigvalsh(self.matrix))[::-1]

    def _support(self, U):
        return np.linalg.norm(U @ self._chol, axis=1)

    def _gauge(self, X):
        return np.linalg.norm(sla.solve_triangular(self._chol, X.T, lower=True), axis=0)

    def closed_vrad(self):
        return math.exp(np.sum(np.log(np.diag(self._chol))) / self.dim)

    def _make_polar(self):
        return Ellipsoid(np.linalg.inv(self.matrix))

    def _make_section(self, sub):
        B = sub.basis
        W = sla.solve_triangular(self._chol, B, lower=True)
        return Ellipsoid(np.linalg.inv(W.T @ W))

    def _make_projection(self, sub):
        B = sub.basis
        return Ellipsoid(B.T @ self.matrix @ B)


# -- linear programs ---------------------------------------------------------

def _lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None):
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs", options=LP_OPTIONS)
    return res


def _v_gauge(V, X):
    """Gauge of conv(+-rows of V): min sum|lam| s.t. V^T lam = x."""
    m = V.shape[0]
    A_eq = np.hstack([V.T, -V.T])
    c = np.ones(2 * m)
    out = np.empty(len(X))
    for i, x in enumerate(X):
        if not np.any(x):
            out[i] = 0.0
            continue
        res = _lp(c, A_eq=A_eq, b_eq=x, bounds=(0, None))
        if res.status == 2:
            out[i] = np.inf
        elif res.status != 0:
            raise ConvergenceError(f"V-polytope gauge LP failed: {res.message}",
                                   iterations=getattr(res, "nit", None))
        else:
            out[i] = res.fun
    return out


def _h_projection_gauge(A, sub, Y):
    """Gauge of P_E {|Ax| <= 1} at y: min t s.t. |A(By + Nw)| <= t."""
    B, N = sub.basis, sub.complement_basis()
    AN = A @ N
    m, d = AN.shape
    ones = np.ones((m, 1))
    A_ub = np.vstack([np.hstack([AN, -ones]), np.hstack([-AN, -ones])])
    c = np.zeros(d + 1)
    c[-1] = 1.0
    bounds = [(None, None)] * d + [(0, None)]
    out = np.empty(len(Y))
    for i, y in enumerate(Y):
        Ay = A @ (B @ y)
        if d == 0:
            out[i] = np.max(np.abs(Ay))
            continue
        res = _lp(c, A_ub=A_ub, b_ub=np.concatenate([-Ay, Ay]), bounds=bounds)
        if res.status != 0:
            raise ConvergenceError(f"projection gauge LP failed: {res.message}",
                                   iterations=getattr(res, "nit", None))
        out[i] = res.fun
    return out


def _generic_projection_gauge(inner, sub, Y, rtol=1e-8):
    """min over z in E^perp of ||By + z||_inner by derivative-free minimization."""
    B, N = sub.basis, sub.complement_basis()
    d = N.shape[1]
    out = np.empty(len(Y))
    for i, y in enumerate(Y):
        x0 = B @ y
        if d == 0 or not np.any(y):
            out[i] = inner.gauge(x0)
            continue
        f = lambda w: inner.gauge(x0 + N @ w)
        best = None
        w0 = np.zeros(d)
        total_iter = 0
        for method in ("Powell", "Nelder-Mead", "Powell"):
            opts = {"xtol": 1e-12, "ftol": 1e-15, "maxiter": 20000}
            if method == "Nelder-Mead":
                opts = {"xatol": 1e-12, "fatol": 1e-15, "maxiter": 20000, "adaptive": True}
            res = minimize(f, w0, method=method, options=opts)
            total_iter += int(getattr(res, "nit", 0))
            if best is not None and abs(best - res.fun) <= rtol * max(abs(res.fun), 1e-300):
                best = min(best, res.fun)
                break
            best = res.fun if best is None else min(best, res.fun)
            w0 = res.x
        else:
            raise ConvergenceError("projection gauge minimization did not settle",
                                   iterations=total_iter)
        out[i] = best
    return out


class HPolytope(Body):
    """{x : |<a_i, x>| <= 1 for every row a_i of A}."""

    def __init__(self, rows):
        A = np.array(rows, dtype=float)
        if A.ndim != 2 or A.shape[0] == 0:
            raise ValueError("H-polytope needs a non-empty 2-D row matrix")
        if np.linalg.matrix_rank(A) < A.shape[1]:
            raise ValueError("H-polytope rows do not span R^n: body is unbounded")
        A.setflags(write=False)
        self.rows = A
        self.dim = A.shape[1]
        self._inv = np.linalg.inv(A) if A.shape[0] == A.shape[1] else None

    def _gauge(self, X):
        return np.max(np.abs(X @ self.rows.T), axis=1)

    def _support(self, U):
        if self._inv is not None:
            return np.sum(np.abs(U @ self._inv), axis=1)
        return _v_gauge(self.rows, U)

    def polytope(self):
        return ("H", self.rows)

    def zonotope(self):
        return self._inv

    def closed_vrad(self):
        if self._inv is not None:
            return _zonotope_vrad(self._inv)
        return None

    def _make_polar(self):
        return VPolytope(self.rows)

    def _make_section(self, sub):
        return HPolytope(self.rows @ sub.basis)


class VPolytope(Body):
    """conv{+-v_j} for the rows v_j of V."""

    def __init__(self, vertices):
        V = np.array(vertices, dtype=float)
        if V.ndim != 2 or V.shape[0] == 0:
            raise ValueError("V-polytope needs a non-empty 2-D vertex matrix")
        if np.linalg.matrix_rank(V) < V.shape[1]:
            raise ValueError("V-polytope vertices do not span R^n: body is flat")
        V.setflags(write=False)
        self.vertices = V
        self.dim = V.shape[1]
        self._inv = np.linalg.inv(V) if V.shape[0] == V.shape[1] else None

    def _support(self, U):
        return np.max(np.abs(U @ self.vertices.T), axis=1)

    def _gauge(self, X):
        if self._inv is not None:
            return np.sum(np.abs(X @ self._inv), axis=1)
        return _v_gauge(self.vertices, X)

    def polytope(self):
        return ("V", self.vertices)

    def closed_vrad(self):
        n = self.dim
        if self._inv is not None:
            b1 = LpBall(n, 1).closed_vrad()
            return abs(np.linalg.det(self.vertices)) ** (1.0 / n) * b1
        if n == 1:
            return float(np.max(np.abs(self.vertices)))
        if n <= HULL_DIM_CAP and self.vertices.shape[0] <= 4000:
            from scipy.spatial import ConvexHull

            vol = ConvexHull(np.vstack([self.vertices, -self.vertices])).volume
            return math.exp((math.log(vol) - log_unit_ball_volume(n)) / n)
        return None

    def _make_polar(self):
        return HPolytope(self.vertices)

    def _make_projection(self, sub):
        return VPolytope(self.vertices @ sub.basis)


def _zonotope_vrad(G):
    """vrad of G[-1,1]^m (G is n x m): |Z| = 2^n sum over n-subsets of |det G_S|."""
    n, m = G.shape
    if math.comb(m, n) > ZONOTOPE_SUBSET_CAP:
        return None
    if m == n:
        _, logdet = np.linalg.slogdet(G)
        log_vol = n * math.log(2.0) + logdet
    else:
        idx = np.array(list(combinations(range(m), n)))
        dets = np.abs(np.linalg.det(np.transpose(G[:, idx], (1, 0, 2))))
        total = dets.sum()
        if total <= 0:
            return 0.0
        log_vol = n * math.log(2.0) + math.log(total)
    return math.exp((log_vol - log_unit_ball_volume(n)) / n)


class LinearImage(Body):
    """T K for an invertible n x n matrix T."""

    def __init__(self, inner, matrix):
        T = np.array(matrix, dtype=float)
        if T.shape != (inner.dim, inner.dim):
            raise ValueError(f"matrix must be {inner.dim}x{inner.dim}")
        sign, logdet = np.linalg.slogdet(T)
        if sign == 0 or not np.isfinite(logdet):
            raise ValueError("linear image matrix is singular")
        T.setflags(write=False)
        self.inner, self.matrix, self.dim = inner, T, inner.dim
        self.logdet = logdet
        self._lu = sla.lu_factor(T)

    def _gauge(self, X):
        return self.inner._gauge(sla.lu_solve(self._lu, X.T).T)

    def _support(self, U):
        return self.inner._support(U @ self.matrix)

    def polytope(self):
        p = self.inner.polytope()
        if p is None:
            return None
        kind, M = p
        if kind == "H":
            return ("H", sla.lu_solve(self._lu, M.T, trans=1).T)  # M T^{-1}
        return ("V", M @ self.matrix.T)

    def zonotope(self):
        G = self.inner.zonotope()
        return None if G is None else self.matrix @ G

    def closed_vrad(self):
        v = self.inner.closed_vrad()
        return None if v is None else math.exp(self.logdet / self.dim) * v

    def _make_polar(self):
        return LinearImage(polar(self.inner), np.linalg.inv(self.matrix).T)


class Scaled(Body):
    def __init__(self, inner, factor):
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        self.inner, self.factor, self.dim = inner, float(factor), inner.dim

    def _gauge(self, X):
        return self.inner._gauge(X) / self.factor

    def _support(self, U):
        return self.factor * self.inner._support(U)

    def polytope(self):
        p = self.inner.polytope()
        if p is None:
            return None
        kind, M = p
        return (kind, M / self.factor) if kind == "H" else (kind, M * self.factor)

    def zonotope(self):
        G = self.inner.zonotope()
        return None if G is None else G * self.factor

    def closed_vrad(self):
        v = self.inner.closed_vrad()
        return None if v is None else self.factor * v

    def _make_polar(self):
        return Scaled(polar(self.inner), 1.0 / self.factor)

    def _make_section(self, sub):
        return Scaled(section(self.inner, sub), self.factor)

    def _make_projection(self, sub):
        return Scaled(project(self.inner, sub), self.factor)


class Polar(Body):
    """K° with the two oracles swapped."""

    def __init__(self, inner):
        self.inner, self.dim = inner, inner.dim

    def _support(self, U):
        return self.inner._gauge(U)

    def _gauge(self, X):
        return self.inner._support(X)

    def polytope(self):
        p = self.inner.polytope()
        if p is None:
            return None
        return ("V" if p[0] == "H" else "H", p[1])

    def _make_polar(self):
        return self.inner


class Section(Body):
    """K ∩ E in the k coordinates of E's basis."""

    def __init__(self, inner, sub):
        _check_sub(inner, sub)
        self.inner, self.sub, self.dim = inner, sub, sub.k

    def _gauge(self, X):
        return self.inner._gauge(X @ self.sub.basis.T)

    def _support(self, U):
        # h_{K ∩ E} = ||.||_{P_E K°}
        return polar(self)._gauge(U)

    def polytope(self):
        p = self.inner.polytope()
        if p is not None and p[0] == "H":
            return ("H", p[1] @ self.sub.basis)
        return None

    def _make_polar(self):
        return project(polar(self.inner), self.sub)


class Projection(Body):
    """P_E K in the k coordinates of E's basis."""

    def __init__(self, inner, sub):
        _check_sub(inner, sub)
        self.inner, self.sub, self.dim = inner, sub, sub.k

    def _support(self, U):
        return self.inner._support(U @ self.sub.basis.T)

    def _gauge(self, X):
        p = self.inner.polytope()
        if p is not None and p[0] == "H":
            return _h_projection_gauge(p[1], self.sub, X)
        if p is not None:
            return _v_gauge(p[1] @ self.sub.basis, X)
        return _generic_projection_gauge(self.inner, self.sub, X)

    def polytope(self):
        p = self.inner.polytope()
        if p is not None and p[0] == "V":
            return ("V", p[1] @ self.sub.basis)
        return None

    def zonotope(self):
        G = self.inner.zonotope()
        return None if G is None else self.sub.basis.T @ G

    def closed_vrad(self):
        G = self.zonotope()
        if G is not None:
            return _zonotope_vrad(G)
        p = self.polytope()
        if p is not None:
            try:
                return VPolytope(p[1]).closed_vrad()
            except ValueError:
                return None
        return None

    def _make_polar(self):
        return section(polar(self.inner), self.sub)


def _check_sub(body, sub):
    if not isinstance(sub, Subspace):
        raise TypeError("expected a Subspace")
    if sub.ambient_dim != body.dim:
        raise ValueError(f"subspace lives in R^{sub.ambient_dim}, body in R^{body.dim}")


# -- public operations -------------------------------------------------------

def support(body: Body, u):
    """h_K(u); accepts one vector or a batch of row vectors."""
    return body.support(u)


def gauge(body: Body, x):
    """||x||_K; accepts one vector or a batch of row vectors."""
    return body.gauge(x)


def polar(body: Body) -> Body:
    """Polar body. polar(polar(K)) returns the very same object K."""
    cached = body.__dict__.get("_polar_cache")
    if cached is not None:
        return cached
    P = body._make_polar()
    # initialize-once cache in both directions
    body.__dict__["_polar_cache"] = P
    P.__dict__.setdefault("_polar_cache", body)
    return P


def section(body: Body, sub: Subspace) -> Body:
    """K ∩ E as a k-dimensional body: gauge(y) = ||B y||_K."""
    _check_sub(body, sub)
    return body._make_section(sub)


def project(body: Body, sub: Subspace) -> Body:
    """P_E K as a k-dimensional body: support(y) = h_K(B y)."""
    _check_sub(body, sub)
    return body._make_projection(sub)


def membership(body: Body, x, tol: float = 1e-9):
    if tol <= 0:
        raise ValueError("tol must be positive")
    g = body.gauge(x)
    return bool(g <= 1.0 + tol) if np.ndim(g) == 0 else g <= 1.0 + tol


def linear_image(body: Body, matrix) -> Body:
    """T K, simplified to an exact variant where possible."""
    T = np.asarray(matrix, dtype=float)
    if T.shape != (body.dim, body.dim):
        raise ValueError(f"matrix must be {body.dim}x{body.dim}")
    if abs(np.linalg.det(T)) == 0:
        raise ValueError("linear image matrix is singular")
    if isinstance(body, EuclideanBall):
        return Ellipsoid(body.radius**2 * T @ T.T)
    if isinstance(body, Ellipsoid):
        return Ellipsoid(T @ body.matrix @ T.T)
    if isinstance(body, HPolytope):
        return HPolytope(np.linalg.solve(T.T, body.rows.T).T)
    if isinstance(body, VPolytope):
        return VPolytope(body.vertices @ T.T)
    if isinstance(body, LinearImage):
        return LinearImage(body.inner, T @ body.matrix)
    return LinearImage(body, T)


def scaled(body: Body, factor: float) -> Body:
    if isinstance(body, EuclideanBall):
        return EuclideanBall(body.dim, body.radius * factor)
    if isinstance(body, LpBall):
        return LpBall(body.dim, body.p, body.radius * factor)
    if isinstance(body, Scaled):
        return Scaled(body.inner, body.factor * factor)
    return Scaled(body, factor)


def cube(n: int, half_width: float = 1.0) -> LpBall:
    """[-a, a]^n."""
    return LpBall(n, math.inf, half_width)


def cross_polytope(n: int, radius: float = 1.0) -> LpBall:
    return LpBall(n, 1.0, radius)


def sampled_radii(body: Body, directions):
    """(r, R) with r B ⊆ K ⊆ R B estimated on the given unit directions."""
    return 1.0 / np.max(body.gauge(directions)), float(np.max(body.support(directions)))


# -- JSON specs --------------------------------------------------------------

def _parse_p(p):
    if isinstance(p, str):
        if p.lower() in ("inf", "infinity"):
            return math.inf
        return float(p)
    return float(p)


def body_from_spec(spec: dict, dim: int | None = None) -> Body:
    """Build a body from its JSON description.

    ``{"variant": ..., "dim": n, "params": {...}}``. ``dim`` may be omitted
    from the description and supplied by the caller (grid sweeps over n).
    """
    from .sampling import RngStream, as_generator

    if not isinstance(spec, dict) or "variant" not in spec:
        raise ValueError("body spec must be an object with a 'variant' field")
    variant = spec["variant"]
    params = spec.get("params", {}) or {}
    n = spec.get("dim", dim)

    def need_dim():
        if n is None:
            raise ValueError(f"body variant {variant!r} needs 'dim'")
        return int(n)

    if variant == "euclidean_ball":
        return EuclideanBall(need_dim(), params.get("radius", 1.0))
    if variant == "lp_ball":
        if "p" not in params:
            raise ValueError("lp_ball needs params.p")
        return LpBall(need_dim(), _parse_p(params["p"]), params.get("radius", 1.0))
    if variant == "cube":
        return cube(need_dim(), params.get("half_width", 1.0))
    if variant == "cross_polytope":
        return cross_polytope(need_dim(), params.get("radius", 1.0))
    if variant == "ellipsoid":
        if "semiaxes" in params:
            body = Ellipsoid.from_semiaxes(params["semiaxes"])
        elif "matrix" in params:
            body = Ellipsoid(params["matrix"])
        else:
            raise ValueError("ellipsoid needs params.matrix or params.semiaxes")
        _check_dim(body, n)
        return body
    if variant == "h_polytope":
        body = HPolytope(params["rows"])
        _check_dim(body, n)
        return body
    if variant == "v_polytope":
        body = VPolytope(params["vertices"])
        _check_dim(body, n)
        return body
    if variant == "random_ellipsoid":
        d = need_dim()
        gen = as_generator(RngStream(int(params.get("seed", 0))))
        lo, hi = params.get("log_axis_range", [-1.0, 1.0])
        axes = np.exp(gen.uniform(lo, hi, d))
        q, r = np.linalg.qr(gen.standard_normal((d, d)))
        return Ellipsoid.from_semiaxes(axes, q * np.sign(np.diag(r)))
    if variant == "random_linear_image":
        d = need_dim()
        inner = body_from_spec(params["inner"], d)
        gen = as_generator(RngStream(int(params.get("seed", 0))))
        cond = float(params.get("max_condition", 10.0))
        return linear_image(inner, random_matrix(d, gen, cond))
    if variant == "linear_image":
        inner = body_from_spec(params["inner"], n)
        return linear_image(inner, params["matrix"])
    if variant == "polar":
        return polar(body_from_spec(params["inner"], n))
    if variant == "scaled":
        return scaled(body_from_spec(params["inner"], n), float(params["factor"]))
    raise ValueError(f"unknown body variant {variant!r}")


def random_matrix(n, gen, max_condition=10.0):
    """U diag(s) V^T with singular values log-uniform in [1, max_condition]."""
    u, _ = np.linalg.qr(gen.standard_normal((n, n)))
    v, _ = np.linalg.qr(gen.standard_normal((n, n)))
    s = np.exp(gen.uniform(0.0, math.log(max_condition), n))
    s[0], s[-1] = 1.0, max_condition
    return u @ np.diag(s) @ v.T


def _check_dim(body, n):
    if n is not None and body.dim != int(n):
        raise ValueError(f"description says dim={n} but parameters give dim={body.dim}")
