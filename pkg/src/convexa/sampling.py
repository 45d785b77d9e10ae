"""Seeded sphere, Grassmannian and direction-grid generation.

Every random routine takes an :class:`RngStream`.  A stream is an immutable
``(seed, stream_id)`` key for a counter-based Philox generator, so the same
stream always reproduces the same draws no matter how work is scheduled.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RngStream",
    "Subspace",
    "as_generator",
    "sample_sphere",
    "sample_grassmannian",
    "direction_grid",
    "coordinate_subspaces",
]

_MASK64 = (1 << 64) - 1


def _hash64(*parts) -> int:
    blob = json.dumps(parts, sort_keys=True, default=str).encode()
    return int.from_bytes(hashlib.blake2b(blob, digest_size=8).digest(), "little")


@dataclass(frozen=True)
class RngStream:
    """Immutable key for a reproducible random stream.

    ``generator()`` returns a *fresh* generator positioned at counter zero,
    so two calls with the same stream yield identical draws.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= self.seed <= _MASK64 and 0 <= self.stream_id <= _MASK64):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, *labels) -> "RngStream":
        """Derive an independent stream labelled by ``labels``."""
        return RngStream(self.seed, _hash64(self.stream_id, *labels))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return RngStream(int(rng or 0) & _MASK64).generator()
    raise TypeError(f"cannot build a generator from {type(rng).__name__}")


def seed_of(rng):
    return rng.seed if isinstance(rng, RngStream) else None


class Subspace:
    """A k-dimensional linear subspace of R^n, stored as an n x k orthonormal basis."""

    __slots__ = ("basis", "_complement")

    def __init__(self, basis, check=True):
        basis = np.array(basis, dtype=float)
        if basis.ndim == 1:
            basis = basis[:, None]
        if basis.ndim != 2 or basis.shape[1] == 0 or basis.shape[1] > basis.shape[0]:
            raise ValueError(f"basis must be n x k with 1 <= k <= n, got {basis.shape}")
        if check:
            err = np.max(np.abs(basis.T @ basis - np.eye(basis.shape[1])))
            if err > 1e-10:
                raise ValueError(f"basis columns are not orthonormal (error {err:.2e})")
        basis.setflags(write=False)
        self.basis = basis
        self._complement = None

    @classmethod
    def span(cls, vectors) -> "Subspace":
        """Orthonormalize the columns of ``vectors`` (n x k) and wrap them."""
        v = np.array(vectors, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        q, r = np.linalg.qr(v)
        if np.min(np.abs(np.diag(r))) < 1e-12:
            raise ValueError("spanning vectors are linearly dependent")
        return cls(q * np.sign(np.diag(r)), check=False)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def k(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def complement_basis(self) -> np.ndarray:
        """Orthonormal basis (n x (n-k)) of the orthogonal complement."""
        if self._complement is None:
            n, k = self.basis.shape
            q, _ = np.linalg.qr(np.hstack([self.basis, np.eye(n)]))
            comp = q[:, k:n]
            comp.setflags(write=False)
            self._complement = comp
        return self._complement

    def __repr__(self):
        return f"Subspace(n={self.ambient_dim}, k={self.k})"


def sample_sphere(n: int, rng, size: int | None = None) -> np.ndarray:
    """Uniform point(s) on S^{n-1}: normalized standard Gaussians.

    Returns shape ``(n,)`` when ``size`` is None, else ``(size, n)``.
    """
    if n < 1:
        raise ValueError("sphere dimension must be >= 1")
    gen = as_generator(rng)
    m = 1 if size is None else int(size)
    g = gen.standard_normal((m, n))
    norms = np.linalg.norm(g, axis=1)
    while np.any(norms == 0):  # measure-zero, but n = 1 makes it cheap to guard
        bad = norms == 0
        g[bad] = gen.standard_normal((int(bad.sum()), n))
        norms = np.linalg.norm(g, axis=1)
    g /= norms[:, None]
    return g[0] if size is None else g


def _qr_positive(g: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(g)
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return q * d


def sample_grassmannian(n: int, k: int, rng, size: int | None = None):
    """Haar-random k-dimensional subspace(s) of R^n.

    The basis is the Q factor of an n x k Gaussian matrix with the sign
    convention diag(R) > 0.
    """
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    gen = as_generator(rng)
    m = 1 if size is None else int(size)
    out = [Subspace(_qr_positive(gen.standard_normal((n, k))), check=False) for _ in range(m)]
    return out[0] if size is None else out


def direction_grid(n: int, resolution: int) -> np.ndarray:
    """Deterministic unit directions: equal angles on S^1, Fibonacci points on S^2."""
    if resolution < 1:
        raise ValueError("resolution must be positive")
    if n == 2:
        theta = 2.0 * np.pi * np.arange(resolution) / resolution
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if n == 3:
        i = np.arange(resolution) + 0.5
        z = 1.0 - 2.0 * i / resolution
        phi = np.pi * (3.0 - np.sqrt(5.0)) * i
        r = np.sqrt(1.0 - z * z)
        pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
        return pts / np.linalg.norm(pts, axis=1, keepdims=True)
    raise ValueError("direction_grid supports n in {2, 3} only")


def coordinate_subspaces(n: int, k: int, limit: int = 2000) -> list[Subspace]:
    """All coordinate subspaces span(e_i : i in S), |S| = k (at most ``limit``)."""
    from itertools import combinations, islice

    eye = np.eye(n)
    return [Subspace(eye[:, list(c)], check=False) for c in islice(combinations(range(n), k), limit)]


def perturb_subspace(sub: Subspace, step: float, gen: np.random.Generator) -> Subspace:
    """Random nearby subspace: Gaussian step of size ``step`` then re-orthonormalize."""
    n, k = sub.basis.shape
    return Subspace(_qr_positive(sub.basis + step * gen.standard_normal((n, k))), check=False)
