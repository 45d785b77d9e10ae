import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from convexa.sampling import (
    RngStream, Subspace, as_generator, coordinate_subspaces, direction_grid, perturb_subspace,
    sample_grassmannian, sample_sphere,
)


def test_stream_reproducible():
    s = RngStream(7, 3)
    a = s.generator().standard_normal(50)
    b = s.generator().standard_normal(50)
    assert np.array_equal(a, b)


def test_child_streams_differ():
    s = RngStream(7)
    a = s.child("x").generator().random(8)
    b = s.child("y").generator().random(8)
    assert not np.array_equal(a, b)
    assert s.child("x") == s.child("x")


def test_stream_rejects_bad_seed():
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(2**64)


def test_as_generator_types():
    assert isinstance(as_generator(3), np.random.Generator)
    g = np.random.default_rng(0)
    assert as_generator(g) is g
    with pytest.raises(TypeError):
        as_generator("seed")


def test_sphere_n1_two_points():
    x = sample_sphere(1, RngStream(1), size=10_000)
    assert set(np.unique(x)) == {-1.0, 1.0}
    frac = np.mean(x > 0)
    assert abs(frac - 0.5) <= 3 * 0.5 / 100


def test_sphere_n3_moments():
    m = 100_000
    x = sample_sphere(3, RngStream(2), size=m)
    # Var(x_i) = 1/3 and Var(x_i^2) = E x^4 - 1/9 = 1/5 - 1/9
    assert np.all(np.abs(x.mean(axis=0)) <= 3 * np.sqrt(1 / 3 / m))
    cov = x.T @ x / m
    diag_err = 3 * np.sqrt((1 / 5 - 1 / 9) / m)
    assert np.all(np.abs(np.diag(cov) - 1 / 3) <= diag_err)
    off = cov[~np.eye(3, dtype=bool)]
    assert np.all(np.abs(off) <= 3 * np.sqrt(1 / 15 / m))


def test_sphere_single_and_errors():
    x = sample_sphere(5, 0)
    assert x.shape == (5,)
    assert abs(np.linalg.norm(x) - 1) < 1e-12
    with pytest.raises(ValueError):
        sample_sphere(0, 0)


@given(st.integers(1, 12), st.integers(0, 2**32))
def test_sphere_points_unit(n, seed):
    x = sample_sphere(n, RngStream(seed), size=20)
    assert np.allclose(np.linalg.norm(x, axis=1), 1.0, atol=1e-12)


def test_grassmannian_full_space_orthogonal():
    E = sample_grassmannian(5, 5, RngStream(3))
    assert np.allclose(E.basis.T @ E.basis, np.eye(5), atol=1e-10)


def test_grassmannian_mean_projector():
    n, k, m = 4, 2, 10_000
    subs = sample_grassmannian(n, k, RngStream(4), size=m)
    P = np.array([E.projector() for E in subs])
    mean, sd = P.mean(axis=0), P.std(axis=0) / np.sqrt(m)
    assert np.all(np.abs(mean - (k / n) * np.eye(n)) <= 3 * sd + 1e-12)


def test_grassmannian_deterministic_and_errors():
    a = sample_grassmannian(6, 3, RngStream(5))
    b = sample_grassmannian(6, 3, RngStream(5))
    assert np.array_equal(a.basis, b.basis)
    with pytest.raises(ValueError):
        sample_grassmannian(3, 4, 0)


@given(st.integers(1, 8), st.data())
def test_grassmannian_orthonormal(n, data):
    k = data.draw(st.integers(1, n))
    E = sample_grassmannian(n, k, RngStream(data.draw(st.integers(0, 1000))))
    assert E.basis.shape == (n, k)
    assert np.allclose(E.basis.T @ E.basis, np.eye(k), atol=1e-10)
    C = E.complement_basis()
    assert C.shape == (n, n - k)
    assert np.allclose(E.basis.T @ C, 0, atol=1e-10)


def test_direction_grid():
    g = direction_grid(2, 4)
    assert np.allclose(g, [[1, 0], [0, 1], [-1, 0], [0, -1]], atol=1e-15)
    s = direction_grid(3, 777)
    assert np.allclose(np.linalg.norm(s, axis=1), 1.0, atol=1e-12)
    with pytest.raises(ValueError):
        direction_grid(4, 10)


def test_direction_grid_square_average():
    g = direction_grid(2, 100_000)
    assert abs(np.abs(g).max(axis=1).mean() - 2 * np.sqrt(2) / np.pi) < 1e-4


def test_subspace_validation():
    with pytest.raises(ValueError):
        Subspace(np.ones((3, 2)))
    with pytest.raises(ValueError):
        Subspace.span(np.array([[1.0, 2.0], [1.0, 2.0], [0.0, 0.0]]))
    E = Subspace.span(np.array([1.0, 1.0, 0.0]))
    assert E.k == 1 and E.ambient_dim == 3
    assert np.allclose(E.basis[:, 0], [2**-0.5, 2**-0.5, 0])


def test_coordinate_subspaces_and_perturb():
    subs = coordinate_subspaces(4, 2)
    assert len(subs) == 6
    F = perturb_subspace(subs[0], 0.1, np.random.default_rng(0))
    assert np.allclose(F.basis.T @ F.basis, np.eye(2), atol=1e-10)
    assert np.linalg.norm(F.projector() - subs[0].projector()) < 1.0
