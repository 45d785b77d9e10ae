import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from convexa import bodies as B
from convexa import measures as MS
from convexa.errors import ConvergenceError, UnsupportedError
from convexa.sampling import RngStream, Subspace, sample_sphere


def _mean_ok(x, target, k=3.0):
    return abs(x.mean() - target) <= k * x.std(ddof=1) / math.sqrt(len(x))


# -- sampling -----------------------------------------------------------------------

def test_gaussian_moments():
    X = MS.sample(MS.standard_gaussian(8), 100_000, RngStream(1))
    for j in range(8):
        assert _mean_ok(X[:, j], 0.0)
        assert _mean_ok(X[:, j] ** 2, 1.0)
    off = X[:, 0] * X[:, 1]
    assert _mean_ok(off, 0.0)


def test_uniform_cube_variance():
    mu = MS.uniform_on_body(B.LpBall(3, math.inf, 0.5))
    X = mu.sample(100_000, RngStream(2))
    for j in range(3):
        assert _mean_ok(X[:, j] ** 2, 1 / 12)
    assert np.allclose(mu.covariance(), np.eye(3) / 12)


def test_gaussian_marginal_is_gaussian():
    mu = MS.standard_gaussian(6)
    sub = Subspace(np.linalg.qr(np.random.default_rng(3).standard_normal((6, 2)))[0])
    m = MS.marginal(mu, sub)
    assert isinstance(m, MS.StandardGaussian) and m.dim == 2
    # the explicit Marginal push-forward samples a standard Gaussian too
    X = MS.Marginal(mu, sub).sample(20_000, RngStream(4))
    assert stats.kstest(X[:, 0], "norm").pvalue > 0.01


def test_coordinate_marginal_of_uniform_product():
    mu = MS.product_law("uniform", 3, 0.5)
    m = MS.marginal(mu, Subspace(np.eye(3)[:, :1]))
    X = m.sample(20_000, RngStream(5))[:, 0]
    assert stats.kstest(X, stats.uniform(loc=-0.5, scale=1.0).cdf).pvalue > 0.01


def test_marginal_of_isotropic_is_isotropic():
    mu = MS.product_law("symmetric_exponential", 5, isotropic=True)
    sub = Subspace(np.linalg.qr(np.random.default_rng(6).standard_normal((5, 3)))[0])
    m = MS.marginal(mu, sub)
    assert np.allclose(m.covariance(), np.eye(3), atol=1e-12)
    X = m.sample(100_000, RngStream(7))
    C = MS.sample_covariance(X)
    se = math.sqrt(5.0 / 100_000) * 3  # generous bound on the entrywise standard error
    assert np.max(np.abs(C - np.eye(3))) < 3 * se


@pytest.mark.parametrize("mu", [
    MS.standard_gaussian(3),
    MS.product_law("symmetric_exponential", 3, 1.0),
    MS.uniform_on_body(B.cross_polytope(3)),
])
def test_evenness(mu):
    rng = RngStream(8)
    theta = sample_sphere(3, rng.child("theta"))
    a = mu.sample(4000, rng.child("a")) @ theta
    b = -(mu.sample(4000, rng.child("b")) @ theta)
    assert stats.ks_2samp(a, b).pvalue > 0.001


def test_hit_and_run_moments():
    # cross-polytope B_1^3: E x_1^2 = 2 / ((n+1)(n+2)) = 0.1
    X = MS.hit_and_run(B.cross_polytope(3), 6000, RngStream(9))
    assert np.all(np.abs(X).sum(axis=1) <= 1 + 1e-9)
    assert abs((X[:, 0] ** 2).mean() - 0.1) < 0.01


def test_law_validation():
    with pytest.raises(ValueError):
        MS.Law1D("cauchy", 1.0)
    with pytest.raises(ValueError):
        MS.Law1D("uniform", -1.0)
    with pytest.raises(ValueError):
        MS.ProductLaw([])
    with pytest.raises(ValueError):
        MS.linear_image_measure(MS.standard_gaussian(2), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        MS.sample(MS.standard_gaussian(2), 0, RngStream(0))


# -- isotropic position -----------------------------------------------------------------

def test_isotropic_normalize_gaussian_is_identity():
    mu, rep = MS.isotropic_normalize(MS.standard_gaussian(4), tol=0.01)
    assert rep.rounds == 1 and np.allclose(rep.matrix, np.eye(4))


def test_isotropic_normalize_scaled_gaussian():
    mu0 = MS.linear_image_measure(MS.standard_gaussian(2), np.diag([2.0, 1.0]))
    for exact in (True, False):
        mu, rep = MS.isotropic_normalize(mu0, 200_000, tol=0.02, rng=RngStream(10), exact=exact)
        T = rep.matrix @ np.diag([2.0, 1.0])
        assert np.allclose(T.T @ T, np.eye(2), atol=0.03)
        C = MS.sample_covariance(mu.sample(200_000, RngStream(11)))
        assert np.max(np.abs(C - np.eye(2))) < 0.03


def test_isotropic_normalize_cube():
    mu0 = MS.uniform_on_body(B.cube(3))
    assert np.allclose(mu0.covariance(), np.eye(3) / 3)
    mu, rep = MS.isotropic_normalize(mu0, tol=0.05, exact=False, rng=RngStream(12))
    assert np.allclose(rep.matrix, math.sqrt(3) * np.eye(3), atol=0.05 * math.sqrt(3))
    C = MS.sample_covariance(mu.sample(100_000, RngStream(13)))
    assert np.max(np.abs(C - np.eye(3))) < 0.05


def test_isotropic_normalize_errors():
    with pytest.raises(ValueError):
        MS.isotropic_normalize(MS.standard_gaussian(2), tol=0.5)
    with pytest.raises(ConvergenceError):
        MS.isotropic_normalize(MS.product_law("uniform", 2, 1.0), 50, tol=1e-6, exact=False,
                               max_rounds=3)


# -- isotropic constant -----------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 3, 10])
def test_isotropic_constant_closed(n):
    cube = MS.uniform_on_body(B.LpBall(n, math.inf, 0.5))
    assert MS.isotropic_constant(cube).value == pytest.approx(12 ** -0.5, rel=1e-12)
    g = MS.isotropic_constant(MS.standard_gaussian(n))
    assert g.value == pytest.approx((2 * math.pi) ** -0.5, rel=1e-12)
    assert g.method == "closed_form"


def test_isotropic_constant_affine_invariance():
    gen = np.random.default_rng(14)
    base = MS.product_law("symmetric_exponential", 3, 1.0)
    L0 = MS.isotropic_constant(base).value
    for _ in range(3):
        T = gen.standard_normal((3, 3))
        if np.linalg.cond(T) > 10:
            continue
        est = MS.isotropic_constant(MS.linear_image_measure(base, T))
        assert est.value == pytest.approx(L0, rel=1e-10)


def test_isotropic_constant_sampled_covariance():
    # a body without closed covariance: the square rotated by 30 degrees as an H-polytope
    c, s = math.cos(math.pi / 6), math.sin(math.pi / 6)
    sq = B.HPolytope(np.array([[c, s], [-s, c]]))
    est = MS.isotropic_constant(MS.uniform_on_body(sq), 40_000, RngStream(15))
    assert est.method == "monte_carlo"
    assert abs(est.value - 12 ** -0.5) <= 3 * est.std_err + 1e-3


def test_isotropic_constant_unknown_sup():
    m = MS.Marginal(MS.product_law("uniform", 3, 1.0), Subspace(np.eye(3)[:, :2]))
    with pytest.raises(UnsupportedError):
        MS.isotropic_constant(m)


def test_marginal_isotropic_constant_knn():
    est = MS.marginal_isotropic_constant(MS.standard_gaussian(2), 200_000, RngStream(16))
    assert abs(est.value - (2 * math.pi) ** -0.5) <= 3 * est.std_err


# -- centroid bodies ---------------------------------------------------------------------

def test_z2_is_ball_for_isotropic():
    for mu in (MS.standard_gaussian(5), MS.product_law("uniform", 5, isotropic=True)):
        U = sample_sphere(5, RngStream(17), size=20)
        for u in U:
            est = MS.centroid_body_support(mu, 2, u, 100_000, RngStream(18),
                                           method="monte_carlo")
            assert abs(est.value - 1.0) <= 3 * est.std_err
    Z = MS.centroid_body(MS.standard_gaussian(5), 2)
    assert np.allclose(Z.support(sample_sphere(5, RngStream(19), size=10)), 1.0)


def test_gaussian_z4():
    y = np.zeros(8)
    y[0] = 1
    closed = MS.centroid_body_support(MS.standard_gaussian(8), 4, y)
    assert closed.method == "closed_form"
    assert closed.value == pytest.approx(3 ** 0.25, rel=1e-12)
    mc = MS.centroid_body_support(MS.standard_gaussian(8), 4, y, 1_000_000, RngStream(20),
                                  method="monte_carlo")
    assert abs(mc.value - 3 ** 0.25) <= 3 * mc.std_err


def test_cube_z4_after_normalization():
    iso, _ = MS.isotropic_normalize(MS.uniform_on_body(B.LpBall(4, math.inf, 0.5)))
    e1 = np.eye(4)[0]
    closed = MS.centroid_body_support(iso, 4, e1)
    assert closed.value == pytest.approx((9 / 5) ** 0.25, rel=1e-12)
    mc = MS.centroid_body_support(iso, 4, e1, 200_000, RngStream(21), method="monte_carlo")
    assert abs(mc.value - (9 / 5) ** 0.25) <= 3 * mc.std_err


def test_centroid_support_errors():
    with pytest.raises(ValueError, match="samples are required"):
        MS.centroid_body_support(MS.standard_gaussian(2), 40, [1, 0], 1000)
    with pytest.raises(ValueError):
        MS.centroid_body_support(MS.standard_gaussian(2), 0.5, [1, 0])
    with pytest.raises(ValueError):
        MS.centroid_body_support(MS.standard_gaussian(2), 2, [1, 0, 0])
    m = MS.uniform_on_body(B.cross_polytope(2))
    with pytest.raises(UnsupportedError):
        MS.centroid_body_support(m, 2, [1, 0], method="closed_form")
    assert MS.q_cap(1024) == 20.0


def test_projection_marginal_identity():
    mu = MS.product_law("symmetric_exponential", 4, isotropic=True)
    sub = Subspace(np.linalg.qr(np.random.default_rng(22).standard_normal((4, 2)))[0])
    q = 3.0
    proj = B.project(MS.CentroidBody(mu, q, 40_000, RngStream(23)), sub)
    direct = MS.CentroidBody(MS.marginal(mu, sub), q, 40_000, RngStream(24))
    U = sample_sphere(2, RngStream(25), size=50)
    h1, e1 = proj.support_ci(U)
    h2, e2 = direct.support_ci(U)
    assert np.all(np.abs(h1 - h2) <= 3 * np.hypot(e1, e2))


def test_zq_chain_and_reverse_constant():
    mu = MS.product_law("symmetric_exponential", 3, isotropic=True)
    U = np.eye(3)
    qs = [1.0, 2.0, 4.0, 8.0]
    h = [mu.closed_support(q, U) for q in qs]
    for a, b in zip(h, h[1:]):
        assert np.all(a <= b + 1e-12)
    C = max(np.max(h[j] / ((qs[j] / qs[i]) * h[i])) for i in range(4) for j in range(i + 1, 4))
    assert C <= 2


def test_centroid_body_gauge_and_polar_duality():
    Z = MS.centroid_body(MS.product_law("uniform", 3, isotropic=True), 4, 20_000,
                         RngStream(26))
    U = sample_sphere(3, RngStream(27), size=5)
    g = Z.gauge(U * Z.support(U)[:, None])
    # the support point direction lies outside or on Z at the support level
    assert np.all(g >= 1 - 1e-9)
    X = sample_sphere(3, RngStream(28), size=5)
    # ||x||_Z <= 1 at its radial point
    r = 1.0 / Z.gauge(X)
    assert np.allclose(Z.gauge(X * r[:, None]), 1.0, rtol=1e-8)


def test_gaussian_centroid_body_is_ellipsoid():
    mu = MS.linear_image_measure(MS.standard_gaussian(2), np.diag([2.0, 1.0]))
    Z = MS.centroid_body(mu, 4)
    assert isinstance(Z, B.Ellipsoid)
    assert Z.support(np.array([[1.0, 0.0]]))[0] == pytest.approx(2 * 3 ** 0.25)


def test_lambda_cube_zn_constant():
    n = 4
    mu = MS.uniform_on_body(B.LpBall(n, math.inf, 0.5))
    U = sample_sphere(n, RngStream(29), size=30)
    Z = MS.centroid_body(mu, n, 50_000, RngStream(30))
    hz = Z.support(U)
    hk = 0.5 * np.abs(U).sum(axis=1)
    assert np.all(hz <= hk * (1 + 1e-9))
    assert np.min(hz / hk) >= 0.1


# -- psi_alpha ---------------------------------------------------------------------------

def test_psi2_gaussian():
    est = MS.psi_alpha_constant(MS.standard_gaussian(4), 2.0, [2, 4, 8, 16], 20,
                                rng=RngStream(31))
    assert est.method == "closed_form"
    assert est.value == pytest.approx(2 ** -0.5, rel=1e-12)


def test_psi1_exponential_finite():
    mu = MS.product_law("symmetric_exponential", 3, 1.0)
    est = MS.psi_alpha_constant(mu, 1.0, [2, 4, 8, 16], directions=np.eye(3))
    assert math.isfinite(est.value) and est.value > 0
    ratios = [mu.closed_support(q, np.eye(3)[:1])[0] / q for q in (2, 4, 8, 16)]
    assert max(ratios) < 2 * min(ratios) + 1


@settings(max_examples=10)
@given(st.integers(0, 10_000))
def test_psi_alpha_monotone_in_alpha(seed):
    mu = MS.product_law("uniform", 3, isotropic=True)
    kw = dict(q_grid=[2, 4, 8], n_dirs=10, n_samples=5000, rng=RngStream(seed))
    b1 = MS.psi_alpha_constant(mu, 1.0, **kw)
    b2 = MS.psi_alpha_constant(mu, 2.0, **kw)
    assert b1.value <= b2.value + 1e-12


def test_psi_alpha_errors():
    g = MS.standard_gaussian(2)
    with pytest.raises(ValueError):
        MS.psi_alpha_constant(g, 3.0, [2, 4])
    with pytest.raises(ValueError):
        MS.psi_alpha_constant(g, 2.0, [1, 4])
    with pytest.raises(ValueError):
        MS.psi_alpha_constant(g, 2.0, [2, 64], n_samples=1000)


# -- specs ---------------------------------------------------------------------------------

def test_measure_from_spec():
    m = MS.measure_from_spec({"variant": "product", "dim": 3,
                              "params": {"law": "uniform", "isotropic": True}})
    assert np.allclose(m.covariance(), np.eye(3))
    m = MS.measure_from_spec({"variant": "linear_image", "dim": 2,
                              "params": {"inner": {"variant": "standard_gaussian"},
                                         "matrix": [[2, 0], [0, 1]]}})
    assert np.allclose(m.covariance(), np.diag([4.0, 1.0]))
    m = MS.measure_from_spec({"variant": "uniform_on_body", "dim": 2,
                              "params": {"body": {"variant": "cube"}}})
    assert isinstance(m, MS.UniformOnBody)
    with pytest.raises(ValueError):
        MS.measure_from_spec({"variant": "cauchy", "dim": 2})
    with pytest.raises(ValueError):
        MS.measure_from_spec({"variant": "standard_gaussian"})
