"""Benchmark objectives and instance generators.

Three problems, matching the benchmark suite:

* Rayleigh quotient on the sphere: f(x) = -x^T A x / 2, minimized by the
  dominant eigenvector of A.
* Karcher mean of SPD matrices: f(X) = (1/2m) sum_i d(A_i, X)^2 under the
  trace metric.
* Operator-scaling log-capacity: f(X) = log det T(X) - log det X with
  T(X) = sum_i A_i X A_i^T, plus the alternating-normalization baseline
  and the distance to double stochasticity.

Instances are deterministic functions of their seed. Serialization uses
JSON with base64-encoded little-endian float64 matrix payloads.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import invsqrtm, sqrtm, sym_eig, symmetrize
from .manifolds import ManifoldDomainError, Sphere, SPD


def _rng_instance(seed: int) -> np.random.Generator:
    # instance stream; initialization uses ([seed, 1]) -- see cli module
    return np.random.default_rng([int(seed), 0])


@dataclass
class RayleighProblem:
    """Minimize -x^T A x / 2 on the unit sphere."""

    a: np.ndarray
    lipschitz: float = field(init=False)
    mu_hint: float = field(init=False)

    def __post_init__(self):
        self.a = symmetrize(np.asarray(self.a, dtype=np.float64))
        w, _ = sym_eig(self.a)
        if w[0] < -1e-10 * max(1.0, abs(w[-1])):
            raise ValueError(f"matrix must be positive semidefinite, lambda_min={w[0]:.3e}")
        self.lipschitz = float(w[-1])
        self.mu_hint = float(max(w[0], 0.0))
        self.manifold = Sphere(self.a.shape[0])

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    def value(self, x) -> float:
        return -0.5 * float(x @ self.a @ x)

    def grad(self, x):
        ax = self.a @ x
        return -(ax - float(x @ ax) * x)


def gen_rayleigh(d: int, n: int, seed: int) -> RayleighProblem:
    """A = B B^T / d with B a d x n standard Gaussian matrix."""
    if d < 1 or n < 1:
        raise ValueError("d and n must be >= 1")
    rng = _rng_instance(seed)
    b = rng.standard_normal((int(d), int(n)))
    return RayleighProblem(b @ b.T / float(d))


@dataclass
class KarcherProblem:
    """Mean squared geodesic distance to a set of SPD matrices."""

    mats: list

    DEFAULT_L = 5.0
    DEFAULT_MU = 1.0

    def __post_init__(self):
        if len(self.mats) < 1:
            raise ValueError("need at least one matrix")
        self.mats = [symmetrize(np.asarray(a, dtype=np.float64)) for a in self.mats]
        d = self.mats[0].shape[0]
        self.manifold = SPD(d)
        for a in self.mats:
            self.manifold.check_point(a)

    @property
    def m(self) -> int:
        return len(self.mats)

    @property
    def dim(self) -> int:
        return self.mats[0].shape[0]

    def value(self, x) -> float:
        _, isq = self.manifold._roots(x)
        total = 0.0
        for a in self.mats:
            w = np.linalg.eigvalsh(symmetrize(isq @ a @ isq))
            if w[0] <= 0.0:
                raise ManifoldDomainError(f"non-PD inner matrix (eigenvalue {w[0]:.3e})")
            total += float(np.sum(np.log(w) ** 2))
        return total / (2.0 * self.m)

    def grad(self, x):
        # -(1/m) sum_i log_x(A_i); vanishes at the Karcher mean
        sq, isq = self.manifold._roots(x)
        acc = np.zeros_like(x)
        for a in self.mats:
            s = symmetrize(isq @ a @ isq)
            w, q = np.linalg.eigh(s)
            if w[0] <= 0.0:
                raise ManifoldDomainError(f"non-PD inner matrix (eigenvalue {w[0]:.3e})")
            acc += symmetrize(sq @ ((q * np.log(w)) @ q.T) @ sq)
        return -acc / self.m


def gen_spd_set(m: int, d: int, cond: float, seed: int) -> KarcherProblem:
    """m random d x d SPD matrices with condition number exactly ``cond``.

    Eigenvalues are log-uniform in [1, cond] with both endpoints pinned;
    eigenvectors come from a Haar-ish random orthogonal matrix.
    """
    if cond < 1.0:
        raise ValueError(f"cond must be >= 1, got {cond}")
    if m < 1 or d < 1:
        raise ValueError("m and d must be >= 1")
    if cond > 1.0 and d < 2:
        raise ValueError("cond > 1 requires d >= 2")
    rng = _rng_instance(seed)
    mats = []
    for _ in range(int(m)):
        logs = np.zeros(int(d))
        if cond > 1.0:
            logs[-1] = np.log(cond)
            if d > 2:
                logs[1:-1] = rng.uniform(0.0, np.log(cond), size=int(d) - 2)
        q, r = np.linalg.qr(rng.standard_normal((int(d), int(d))))
        q = q * np.sign(np.diag(r))  # fix sign convention
        mats.append(symmetrize((q * np.exp(logs)) @ q.T))
    return KarcherProblem(mats)


@dataclass
class ScalingProblem:
    """Log-capacity of the completely positive map T(X) = sum A_i X A_i^T."""

    ops: list

    DEFAULT_L = 1.0

    def __post_init__(self):
        if len(self.ops) < 1:
            raise ValueError("need at least one operator matrix")
        self.ops = [np.asarray(a, dtype=np.float64) for a in self.ops]
        d = self.ops[0].shape[0]
        if any(a.shape != (d, d) for a in self.ops):
            raise ValueError("all operator matrices must be square of equal size")
        self.manifold = SPD(d)
        w = np.linalg.eigvalsh(self.apply_t(np.eye(d)))
        if w[0] <= 0.0:
            raise ValueError(
                f"T(I) is not positive definite (eigenvalue {w[0]:.3e}); "
                "operator does not map SPD to SPD"
            )

    @property
    def m(self) -> int:
        return len(self.ops)

    @property
    def dim(self) -> int:
        return self.ops[0].shape[0]

    def apply_t(self, x):
        return symmetrize(sum(a @ x @ a.T for a in self.ops))

    def apply_t_star(self, y):
        return symmetrize(sum(a.T @ y @ a for a in self.ops))

    def value(self, x) -> float:
        s1, ld1 = np.linalg.slogdet(self.apply_t(x))
        s2, ld2 = np.linalg.slogdet(x)
        if s1 <= 0.0 or s2 <= 0.0:
            raise ManifoldDomainError("T(X) or X is singular or indefinite")
        return float(ld1 - ld2)

    def grad(self, x):
        tx = self.apply_t(x)
        w = np.linalg.eigvalsh(tx)
        if w[0] <= 0.0:
            raise ManifoldDomainError(f"T(X) not positive definite (eigenvalue {w[0]:.3e})")
        g = self.apply_t_star(np.linalg.inv(tx)) - np.linalg.inv(x)
        return symmetrize(x @ symmetrize(g) @ x)

    def ds_distance(self, x, y) -> float:
        """Squared-residual distance of the scaled tuple to double
        stochasticity, with symmetric scaling roots Y^(-1/2), X^(1/2)."""
        return ds_distance(self, x, y)

    def ds_at(self, x) -> float:
        """ds_distance for the scaling implied by iterate X, i.e. Y = T(X)."""
        return ds_distance(self, x, self.apply_t(x))


def ds_distance(problem: ScalingProblem, x, y) -> float:
    yi = invsqrtm(symmetrize(y))
    xs = sqrtm(symmetrize(x))
    scaled = [yi @ a @ xs for a in problem.ops]
    eye = np.eye(problem.dim)
    r1 = sum(a @ a.T for a in scaled) - eye
    r2 = sum(a.T @ a for a in scaled) - eye
    return float(np.trace(r1 @ r1) + np.trace(r2 @ r2))


def gen_scaling(m: int, d: int, seed: int) -> ScalingProblem:
    """Random scalable operator: Gaussian A_i with entries ~ N(0, 1/d)."""
    if m < 1 or d < 1:
        raise ValueError("m and d must be >= 1")
    rng = _rng_instance(seed)
    ops = [rng.standard_normal((int(d), int(d))) / np.sqrt(float(d)) for _ in range(int(m))]
    return ScalingProblem(ops)


@dataclass
class GurvitsState:
    """Tuple state of the alternating-normalization baseline.

    ``right`` accumulates the right scaling factors, so the capacity
    iterate implied by the state is X = right @ right.T.
    """

    mats: list
    right: np.ndarray


def gurvits_init(problem: ScalingProblem) -> GurvitsState:
    return GurvitsState([a.copy() for a in problem.ops], np.eye(problem.dim))


def gurvits_step(state: GurvitsState) -> GurvitsState:
    """One right + left normalization sweep.

    After the right half-step sum A^T A = I exactly; after the left
    half-step sum A A^T = I exactly.
    """
    g = symmetrize(sum(a.T @ a for a in state.mats))
    if np.linalg.eigvalsh(g)[0] <= 0.0:
        raise ManifoldDomainError("Gram matrix singular: instance not scalable")
    gi = invsqrtm(g)
    mats = [a @ gi for a in state.mats]
    right = state.right @ gi

    h = symmetrize(sum(a @ a.T for a in mats))
    if np.linalg.eigvalsh(h)[0] <= 0.0:
        raise ManifoldDomainError("Gram matrix singular: instance not scalable")
    hi = invsqrtm(h)
    mats = [hi @ a for a in mats]
    return GurvitsState(mats, right)


def gurvits_ds(state: GurvitsState, dim: int) -> float:
    eye = np.eye(dim)
    r1 = sum(a @ a.T for a in state.mats) - eye
    r2 = sum(a.T @ a for a in state.mats) - eye
    return float(np.trace(r1 @ r1) + np.trace(r2 @ r2))


# ---------------------------------------------------------------------------
# instance serialization: {kind, d, n|m, cond, seed, matrices[]}

def _encode(m: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(m, dtype="<f8").tobytes()).decode("ascii")


def _decode(s: str, d: int) -> np.ndarray:
    raw = np.frombuffer(base64.b64decode(s.encode("ascii")), dtype="<f8")
    return raw.reshape(d, d).astype(np.float64)


def instance_to_dict(problem, seed: int, n: int | None = None, cond: float | None = None) -> dict:
    if isinstance(problem, RayleighProblem):
        return {
            "kind": "rayleigh",
            "d": problem.dim,
            "n": n,
            "m": None,
            "cond": None,
            "seed": seed,
            "matrices": [_encode(problem.a)],
        }
    if isinstance(problem, KarcherProblem):
        return {
            "kind": "karcher",
            "d": problem.dim,
            "n": None,
            "m": problem.m,
            "cond": cond,
            "seed": seed,
            "matrices": [_encode(a) for a in problem.mats],
        }
    if isinstance(problem, ScalingProblem):
        return {
            "kind": "scaling",
            "d": problem.dim,
            "n": None,
            "m": problem.m,
            "cond": None,
            "seed": seed,
            "matrices": [_encode(a) for a in problem.ops],
        }
    raise TypeError(f"unknown problem type {type(problem)!r}")


def instance_from_dict(doc: dict):
    kind = doc["kind"]
    d = int(doc["d"])
    mats = [_decode(s, d) for s in doc["matrices"]]
    if kind == "rayleigh":
        return RayleighProblem(mats[0])
    if kind == "karcher":
        return KarcherProblem(mats)
    if kind == "scaling":
        return ScalingProblem(mats)
    raise ValueError(f"unknown instance kind {kind!r}")


def save_instance(path, problem, seed: int, n: int | None = None, cond: float | None = None):
    doc = instance_to_dict(problem, seed, n=n, cond=cond)
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_instance(path):
    with open(path) as fh:
        return instance_from_dict(json.load(fh))
