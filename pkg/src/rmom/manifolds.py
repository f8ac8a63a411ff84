"""Riemannian geometry kernels: sphere, SPD matrices, and flat space.

Each manifold provides exact exponential/logarithm maps, parallel
transport along geodesics, the metric inner product, geodesic distance,
and conversion of ambient (Euclidean) gradients to Riemannian ones.
Points and tangent vectors are plain numpy arrays; the owning manifold
object carries the metric and the validity checks.

Curvature conventions: the unit sphere has constant sectional curvature
K = 1, flat space K = 0, and the SPD manifold with the trace metric
g_X(U, V) = tr(X^-1 U X^-1 V) has K in [-1/2, 0].
"""

from __future__ import annotations

import numpy as np

from .curvature import CurvatureBounds
from .linalg import sym_eig, symmetrize

# Below this tangent norm, exp returns the base point and transport the
# unchanged vector (avoids 0/0 in the sphere sine formula).
SMALL_NORM = 1e-12

# Geodesic uniqueness guard on the sphere: log requires dist < pi - this.
ANTIPODAL_GUARD = 1e-6


class ManifoldDomainError(ValueError):
    """Input outside the domain of a geometric map (antipodal points,
    non-SPD matrix, ...)."""


class Manifold:
    """Common interface; subclasses fill in the geometry."""

    name = "manifold"
    k_min = 0.0
    k_max = 0.0

    def curvature_bounds(self, diameter: float) -> CurvatureBounds:
        """Sectional curvature bounds paired with a working-domain diameter."""
        return CurvatureBounds(self.k_min, self.k_max, diameter)

    def inner(self, x, u, v) -> float:
        raise NotImplementedError

    def norm(self, x, v) -> float:
        return float(np.sqrt(max(self.inner(x, v, v), 0.0)))

    def exp(self, x, v):
        raise NotImplementedError

    def log(self, x, y):
        raise NotImplementedError

    def transport(self, x, y, v):
        raise NotImplementedError

    def dist(self, x, y) -> float:
        raise NotImplementedError

    def project_tangent(self, x, w):
        """Convert an ambient gradient to the Riemannian gradient at x."""
        raise NotImplementedError

    def zero_tangent(self, x):
        return np.zeros_like(x)

    def random_point(self, rng):
        raise NotImplementedError

    def random_tangent(self, rng, x):
        """Random tangent vector at x, not normalized."""
        raise NotImplementedError

    def unit_tangent(self, rng, x):
        v = self.random_tangent(rng, x)
        n = self.norm(x, v)
        if n < SMALL_NORM:
            return self.unit_tangent(rng, x)
        return v / n

    def tangent_basis(self, x):
        """Orthonormal basis of the tangent space at x (metric at x)."""
        raise NotImplementedError

    def check_point(self, x) -> None:
        raise NotImplementedError

    def check_tangent(self, x, v, atol: float = 1e-10) -> None:
        raise NotImplementedError


class Euclidean(Manifold):
    """Flat R^d; every operation reduces to plain vector arithmetic."""

    name = "euclidean"
    k_min = 0.0
    k_max = 0.0

    def __init__(self, dim: int):
        self.dim = int(dim)

    def inner(self, x, u, v):
        return float(np.dot(u, v))

    def exp(self, x, v):
        return x + v

    def log(self, x, y):
        return y - x

    def transport(self, x, y, v):
        return v

    def dist(self, x, y):
        return float(np.linalg.norm(y - x))

    def project_tangent(self, x, w):
        return np.asarray(w, dtype=np.float64)

    def random_point(self, rng):
        return rng.standard_normal(self.dim)

    def random_tangent(self, rng, x):
        return rng.standard_normal(self.dim)

    def tangent_basis(self, x):
        return [e for e in np.eye(self.dim)]

    def check_point(self, x):
        if x.shape != (self.dim,) or not np.all(np.isfinite(x)):
            raise ManifoldDomainError(f"invalid point for {self.name}({self.dim})")

    def check_tangent(self, x, v, atol=1e-10):
        if v.shape != (self.dim,) or not np.all(np.isfinite(v)):
            raise ManifoldDomainError(f"invalid tangent for {self.name}({self.dim})")


class Sphere(Manifold):
    """Unit sphere S^{d-1} in R^d with the round metric (K = 1).

    The logarithm is restricted to dist(x, y) < pi - 1e-6 so that the
    connecting geodesic is unique.
    """

    name = "sphere"
    k_min = 1.0
    k_max = 1.0

    def __init__(self, dim: int):
        # ambient dimension; the manifold is S^{dim-1}
        self.dim = int(dim)

    def inner(self, x, u, v):
        return float(np.dot(u, v))

    def exp(self, x, v):
        theta = float(np.linalg.norm(v))
        if theta < SMALL_NORM:
            return x.copy()
        y = np.cos(theta) * x + np.sin(theta) * (v / theta)
        return y / np.linalg.norm(y)

    def _angle(self, x, y) -> float:
        c = float(np.clip(np.dot(x, y), -1.0, 1.0))
        return float(np.arccos(c))

    def log(self, x, y):
        if np.array_equal(x, y):
            return np.zeros_like(x)
        theta = self._angle(x, y)
        if theta >= np.pi - ANTIPODAL_GUARD:
            raise ManifoldDomainError(
                f"log undefined: points at distance {theta:.6f} >= pi - {ANTIPODAL_GUARD}"
            )
        w = y - np.dot(x, y) * x
        w = w - np.dot(x, w) * x  # cheap insurance on tangency
        s = float(np.linalg.norm(w))
        if s < SMALL_NORM or theta < SMALL_NORM:
            return w
        return (theta / s) * w

    def transport(self, x, y, v):
        if np.array_equal(x, y):
            return v.copy()
        u = self.log(x, y)
        d = float(np.linalg.norm(u))
        if d < SMALL_NORM:
            return v.copy()
        e = u / d
        a = float(np.dot(v, e))
        # the (x, e) plane rotates by the angle d; the orthogonal part is fixed
        return v - a * e + a * (np.cos(d) * e - np.sin(d) * x)

    def dist(self, x, y):
        if np.array_equal(x, y):
            return 0.0
        theta = self._angle(x, y)
        if theta >= np.pi - ANTIPODAL_GUARD:
            raise ManifoldDomainError(
                f"distance {theta:.6f} reaches the antipodal guard (geodesic not unique)"
            )
        return theta

    def project_tangent(self, x, w):
        w = np.asarray(w, dtype=np.float64)
        return w - np.dot(x, w) * x

    def random_point(self, rng):
        v = rng.standard_normal(self.dim)
        return v / np.linalg.norm(v)

    def random_tangent(self, rng, x):
        return self.project_tangent(x, rng.standard_normal(self.dim))

    def tangent_basis(self, x):
        # columns of Q orthogonal to x from a QR of [x | I]
        m = np.concatenate([x[:, None], np.eye(self.dim)], axis=1)
        q, _ = np.linalg.qr(m)
        return [q[:, j] for j in range(1, self.dim)]

    def check_point(self, x):
        if x.shape != (self.dim,):
            raise ManifoldDomainError(f"expected shape ({self.dim},), got {x.shape}")
        r = abs(float(np.linalg.norm(x)) - 1.0)
        if not np.all(np.isfinite(x)) or r > 1e-10:
            raise ManifoldDomainError(f"point not on unit sphere: | |x| - 1 | = {r:.3e}")

    def check_tangent(self, x, v, atol=1e-10):
        if abs(float(np.dot(x, v))) > atol * max(1.0, float(np.linalg.norm(v))):
            raise ManifoldDomainError("vector is not tangent to the sphere at x")


class SPD(Manifold):
    """Symmetric positive definite d x d matrices with the trace metric.

    g_X(U, V) = tr(X^-1 U X^-1 V); geodesically complete with sectional
    curvature in [-1/2, 0].
    """

    name = "spd"
    k_min = -0.5
    k_max = 0.0

    def __init__(self, dim: int):
        self.dim = int(dim)

    def _roots(self, x):
        w, v = sym_eig(x)
        if w[0] <= 0.0:
            raise ManifoldDomainError(
                f"matrix is not positive definite: smallest eigenvalue {w[0]:.6e}"
            )
        sq = symmetrize((v * np.sqrt(w)) @ v.T)
        isq = symmetrize((v / np.sqrt(w)) @ v.T)
        return sq, isq

    def inner(self, x, u, v):
        a = np.linalg.solve(x, u)
        b = np.linalg.solve(x, v)
        return float(np.trace(a @ b))

    def norm(self, x, v):
        _, isq = self._roots(x)
        return float(np.linalg.norm(isq @ v @ isq))

    def exp(self, x, v):
        sq, isq = self._roots(x)
        s = symmetrize(isq @ v @ isq)
        if np.linalg.norm(s) < SMALL_NORM:
            return x.copy()
        w, q = np.linalg.eigh(s)
        with np.errstate(over="ignore", invalid="ignore"):
            # overflow surfaces as a domain error at the next consumer
            e = symmetrize((q * np.exp(w)) @ q.T)
            return symmetrize(sq @ e @ sq)

    def log(self, x, y):
        if np.array_equal(x, y):
            return np.zeros_like(x)
        sq, isq = self._roots(x)
        s = symmetrize(isq @ y @ isq)
        w, q = np.linalg.eigh(s)
        if w[0] <= 0.0:
            raise ManifoldDomainError(
                f"log target is not positive definite relative to base "
                f"(eigenvalue {w[0]:.6e})"
            )
        l = symmetrize((q * np.log(w)) @ q.T)
        return symmetrize(sq @ l @ sq)

    def transport(self, x, y, v):
        if np.array_equal(x, y):
            return v.copy()
        # E = (y x^-1)^(1/2) computed as x^(1/2) (x^-1/2 y x^-1/2)^(1/2) x^-1/2
        sq, isq = self._roots(x)
        a = symmetrize(isq @ y @ isq)
        w, q = np.linalg.eigh(a)
        if w[0] <= 0.0:
            raise ManifoldDomainError(
                f"transport target not positive definite (eigenvalue {w[0]:.6e})"
            )
        b = symmetrize((q * np.sqrt(w)) @ q.T)
        e = sq @ b @ isq
        return symmetrize(e @ v @ e.T)

    def dist(self, x, y):
        if np.array_equal(x, y):
            return 0.0
        _, isq = self._roots(x)
        s = symmetrize(isq @ y @ isq)
        w = np.linalg.eigvalsh(s)
        if w[0] <= 0.0:
            raise ManifoldDomainError(
                f"distance target not positive definite (eigenvalue {w[0]:.6e})"
            )
        return float(np.linalg.norm(np.log(w)))

    def project_tangent(self, x, w):
        return symmetrize(x @ symmetrize(np.asarray(w, dtype=np.float64)) @ x)

    def random_point(self, rng, spread: float = 1.0):
        g = rng.standard_normal((self.dim, self.dim)) * spread / np.sqrt(self.dim)
        return self.exp(np.eye(self.dim), symmetrize(g))

    def random_tangent(self, rng, x):
        return symmetrize(rng.standard_normal((self.dim, self.dim)))

    def tangent_basis(self, x):
        # X^(1/2) S X^(1/2) over a Frobenius-orthonormal symmetric basis S
        sq, _ = self._roots(x)
        basis = []
        for i in range(self.dim):
            s = np.zeros((self.dim, self.dim))
            s[i, i] = 1.0
            basis.append(sq @ s @ sq)
            for j in range(i + 1, self.dim):
                s = np.zeros((self.dim, self.dim))
                s[i, j] = s[j, i] = 1.0 / np.sqrt(2.0)
                basis.append(symmetrize(sq @ s @ sq))
        return basis

    def check_point(self, x):
        if x.shape != (self.dim, self.dim):
            raise ManifoldDomainError(
                f"expected shape ({self.dim}, {self.dim}), got {x.shape}"
            )
        w = np.linalg.eigvalsh(symmetrize(x))
        if not np.all(np.isfinite(x)) or w[0] <= 0.0:
            raise ManifoldDomainError(
                f"matrix is not positive definite (smallest eigenvalue {w[0]:.6e})"
            )

    def check_tangent(self, x, v, atol=1e-10):
        if np.max(np.abs(v - v.T)) > atol:
            raise ManifoldDomainError("SPD tangent vectors must be symmetric")
