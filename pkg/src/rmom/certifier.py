"""Runtime certification of the convergence-proof inequalities.

Given a full-point trace of a momentum run (points x_k, v_k, y_k and the
gradients at y_k), an optimum witness and curvature bounds, this module
re-evaluates, step by step:

* C1: A_k f(x_k) <= psi_k*, with psi* the explicit estimate-sequence
  minima psi*_{k+1} = psi*_k + a_{k+1} f(y_k) - (zeta a_{k+1}^2 / 2) |g_k|^2;
* C2 at x*: psi_{k+1}(x*) <= psi_k(x*) + a_{k+1}(f(y_k) +
  <g_k, log_{y_k}(x*)> - E_k(x*));
* the curvature-error bound: -E_k(x*) <= |g_k| max{zeta-1, 1-delta} D + eps;
* the suboptimality bound: f(x_k) - f* <= 2 zeta L d(x0,x*)^2 / k^2 +
  4 max{zeta-1, 1-delta} zeta L D^2 / k + eps;
* the trigonometric distance bound on sampled geodesic triangles;
* finite-difference eigenvalue probes of the squared-distance Hessian,
  whose spectrum must lie in [delta, zeta] evaluated at the probe distance.

A run is certified when every margin is >= -1e-9 times the magnitude of
the larger side. The inexactness eps entering the bounds is the achieved
one: the largest observed violation of the search stationarity condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curvature import CurvatureBounds, CurvatureConstants, delta as delta_of, zeta as zeta_of
from .manifolds import ManifoldDomainError
from .optimizers import OptConfig, Trace

TOL_REL = 1e-9


class ProbeError(RuntimeError):
    """Finite-difference Hessian probe broke down (asymmetry beyond tolerance)."""


@dataclass(frozen=True)
class OptimumWitness:
    """A reference optimum with its provenance; the gradient at x_star is
    verified to be <= 1e-10 at construction time."""

    x_star: np.ndarray
    f_star: float
    provenance: str


def make_witness(problem, x_star, f_star, provenance, grad_tol: float = 1e-10) -> OptimumWitness:
    g = problem.grad(x_star)
    gn = problem.manifold.norm(x_star, g)
    if gn > grad_tol:
        raise ValueError(f"witness gradient norm {gn:.3e} exceeds {grad_tol:.1e}")
    return OptimumWitness(np.asarray(x_star, dtype=np.float64), float(f_star), provenance)


def rayleigh_witness(problem) -> OptimumWitness:
    """Exact optimum from the eigendecomposition of the quadratic form."""
    from .linalg import sym_eig

    w, v = sym_eig(problem.a)
    x = v[:, -1].copy()
    j = int(np.argmax(np.abs(x)))
    if x[j] < 0:
        x = -x
    return make_witness(problem, x, -0.5 * w[-1], "eigendecomposition")


def presolve_witness(problem, lipschitz: float, max_iters: int, grad_tol: float = 1e-13,
                     x0=None) -> OptimumWitness:
    """High-precision gradient-descent presolve, independent of the
    optimizer under test."""
    man = problem.manifold
    x = np.eye(problem.dim) if x0 is None else np.array(x0, dtype=np.float64)
    for _ in range(max_iters):
        g = problem.grad(x)
        if man.norm(x, g) <= grad_tol:
            break
        x = man.exp(x, -(1.0 / lipschitz) * g)
    return make_witness(problem, x, float(problem.value(x)), "high-precision presolve")


@dataclass
class CheckReport:
    name: str
    margins: np.ndarray
    scales: np.ndarray
    skipped: list = field(default_factory=list)

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margins)) if len(self.margins) else 0.0

    @property
    def min_rel(self) -> float:
        if not len(self.margins):
            return 0.0
        rel = [m / s if s > 0 else 0.0 for m, s in zip(self.margins, self.scales)]
        return float(min(rel))

    @property
    def passed(self) -> bool:
        return all(
            m >= -TOL_REL * max(s, 0.0)
            for m, s in zip(self.margins, self.scales)
        )

    def to_dict(self) -> dict:
        return {
            "min_margin": self.min_margin,
            "min_rel": self.min_rel,
            "passed": self.passed,
            "checked": int(len(self.margins)),
            "skipped": list(self.skipped),
        }


def achieved_eps_tilde(trace: Trace) -> float:
    """Largest observed violation of the search stationarity condition."""
    worst = 0.0
    for r in trace.rows:
        if math.isfinite(r.cond2_margin):
            worst = min(worst, r.cond2_margin)
    return abs(worst)


def psi_star_sequence(rows, zeta: float) -> np.ndarray:
    """Estimate-sequence minima psi_0*, ..., psi_n* along a trace."""
    psis = [0.0]
    for r in rows:
        psis.append(
            psis[-1] + r.a_next * r.f_y - 0.5 * zeta * r.a_next**2 * r.grad_norm_y**2
        )
    return np.array(psis)


def check_c1(trace: Trace, psis: np.ndarray) -> CheckReport:
    """A_k f(x_k) <= psi_k* for every k (k = 0 is 0 <= 0)."""
    margins, scales = [0.0], [0.0]
    for k, r in enumerate(trace.rows, start=1):
        lhs = r.big_a * r.f_x
        margins.append(psis[k] - lhs)
        scales.append(max(abs(lhs), abs(psis[k])))
    return CheckReport("c1", np.array(margins), np.array(scales))


def _require_points(trace: Trace):
    if trace.xs is None or trace.vs is None or trace.ys is None or trace.grads is None:
        raise ValueError("full-point trace required: rerun with collect_points=True")


def error_term(man, y, v, g, x_star):
    """E_k(x*) = <g, log_y(x*) - transport of log_v(x*)> at y."""
    diff = man.log(y, x_star) - man.transport(v, y, man.log(v, x_star))
    return man.inner(y, g, diff)


def curvature_part(man, y, v, g, x_star):
    """The purely geometric part of E_k: subtracting log_y(v) removes the
    search-inexactness component; identically zero in flat space."""
    diff = man.log(y, x_star) - man.transport(v, y, man.log(v, x_star)) - man.log(y, v)
    return man.inner(y, g, diff)


def check_c2_at(trace: Trace, witness: OptimumWitness, man, zeta: float) -> CheckReport:
    """psi_{k+1}(x*) <= psi_k(x*) + a_{k+1}(f(y_k) + <g_k, log_{y_k}(x*)> - E_k(x*))."""
    _require_points(trace)
    psis = psi_star_sequence(trace.rows, zeta)
    xs = witness.x_star
    margins, scales, skipped = [], [], []
    for k, r in enumerate(trace.rows):
        v_k, v_next, y, g = trace.vs[k], trace.vs[k + 1], trace.ys[k], trace.grads[k]
        try:
            psi_k = psis[k] + 0.5 * man.norm(v_k, man.log(v_k, xs)) ** 2
            psi_next = psis[k + 1] + 0.5 * man.norm(v_next, man.log(v_next, xs)) ** 2
            e_k = error_term(man, y, v_k, g, xs)
            rhs = psi_k + r.a_next * (
                r.f_y + man.inner(y, g, man.log(y, xs)) - e_k
            )
        except ManifoldDomainError:
            skipped.append(k)
            continue
        margins.append(rhs - psi_next)
        scales.append(max(abs(rhs), abs(psi_next)))
    return CheckReport("c2", np.array(margins), np.array(scales), skipped)


def check_lemma1(trace: Trace, witness: OptimumWitness, man,
                 geom: CurvatureConstants, eps_tilde: float, diameter: float) -> CheckReport:
    """-E_k(x*) <= |g_k| max{zeta-1, 1-delta} D + eps_tilde."""
    _require_points(trace)
    cap = max(geom.zeta - 1.0, 1.0 - geom.delta)
    xs = witness.x_star
    margins, scales, skipped = [], [], []
    for k, r in enumerate(trace.rows):
        try:
            e_k = error_term(man, trace.ys[k], trace.vs[k], trace.grads[k], xs)
        except ManifoldDomainError:
            skipped.append(k)
            continue
        rhs = r.grad_norm_y * cap * diameter + eps_tilde
        margins.append(rhs + e_k)
        scales.append(max(abs(rhs), abs(e_k)))
    return CheckReport("lemma1", np.array(margins), np.array(scales), skipped)


def check_theorem1(trace: Trace, witness: OptimumWitness, man,
                   geom: CurvatureConstants, zeta_alg: float, lipschitz: float,
                   eps_tilde: float, diameter: float) -> CheckReport:
    """f(x_k) - f* <= 2 zeta L d(x0,x*)^2/k^2 + 4 max{.} zeta L D^2/k + eps.

    The 1/k^2 term carries the algorithm's zeta (it enters through the
    momentum-weight lower bound A_k >= k^2/(4 zeta L)); the curvature gap
    max{zeta-1, 1-delta} may come from tighter observed geometry.
    """
    cap = max(geom.zeta - 1.0, 1.0 - geom.delta)
    d0 = man.dist(trace.x0, witness.x_star)
    margins, scales = [], []
    for r in trace.rows:
        k = r.k
        rhs = (
            2.0 * zeta_alg * lipschitz * d0**2 / k**2
            + 4.0 * cap * zeta_alg * lipschitz * diameter**2 / k
            + eps_tilde
        )
        lhs = r.f_x - witness.f_star
        margins.append(rhs - lhs)
        scales.append(max(abs(rhs), abs(lhs)))
    return CheckReport("theorem1", np.array(margins), np.array(scales))


def check_trig_bound(man, zeta: float, rng, n_samples: int = 1000,
                     radius: float = 0.5, base=None) -> CheckReport:
    """1/2 |log_v(x)|^2 - <log_v(w), log_v(x)> >=
    1/2 |log_w(x)|^2 - zeta/2 |log_v(w)|^2 on random geodesic triangles
    sampled inside a ball of the given radius (pairwise distance <= 2r <= D)."""
    if base is None:
        base = np.eye(man.dim) if man.name == "spd" else man.random_point(rng)
    margins, scales = [], []
    done = 0
    while done < n_samples:
        pts = []
        for _ in range(3):
            u = man.unit_tangent(rng, base)
            pts.append(man.exp(base, rng.uniform(0.0, radius) * u))
        v, w, x = pts
        try:
            lvx = man.log(v, x)
            lvw = man.log(v, w)
            lhs = 0.5 * man.inner(v, lvx, lvx) - man.inner(v, lvw, lvx)
            rhs = 0.5 * man.norm(w, man.log(w, x)) ** 2 - 0.5 * zeta * man.inner(v, lvw, lvw)
        except ManifoldDomainError:
            continue  # triple left the uniqueness/precision domain; resample
        margins.append(lhs - rhs)
        scales.append(max(abs(lhs), abs(rhs)))
        done += 1
    return CheckReport("trig", np.array(margins), np.array(scales))


def _trig_radius(man, diameter: float) -> float:
    # stay well inside the uniqueness domain (sphere) and the eigenvalue
    # range where SPD log/exp keep full relative precision
    if man.name == "sphere":
        return min(diameter, math.pi - 0.1) / 2.0
    if man.name == "spd":
        return min(diameter / 2.0, 5.0)
    return diameter / 2.0


def hessian_eig_probe(man, x_star, distance: float, rng, fd_step: float = 1e-5,
                      asym_tol: float = 1e-4) -> tuple[float, float]:
    """Finite-difference spectrum of the squared-distance Hessian.

    Builds the operator v -> -d/dh [log_{exp_x(hv)}(x*) transported back
    to x] at a probe point x at the given distance from x_star,
    symmetrizes it in an orthonormal tangent basis and returns the
    eigenvalue range. Raises ProbeError when the finite differences lose
    symmetry beyond tolerance.
    """
    u = man.unit_tangent(rng, x_star)
    x = man.exp(x_star, distance * u)
    basis = man.tangent_basis(x)
    n = len(basis)
    h = np.zeros((n, n))
    for j, ej in enumerate(basis):
        xp = man.exp(x, fd_step * ej)
        xm = man.exp(x, -fd_step * ej)
        wp = man.transport(xp, x, man.log(xp, x_star))
        wm = man.transport(xm, x, man.log(xm, x_star))
        col = -(wp - wm) / (2.0 * fd_step)
        for i, ei in enumerate(basis):
            h[i, j] = man.inner(x, col, ei)
    asym = float(np.max(np.abs(h - h.T)))
    if asym > asym_tol * max(1.0, float(np.max(np.abs(h)))):
        raise ProbeError(f"finite-difference operator asymmetry {asym:.3e} beyond tolerance")
    w = np.linalg.eigvalsh(0.5 * (h + h.T))
    return float(w[0]), float(w[-1])


def probe_bounds(man, distance: float) -> tuple[float, float]:
    """(delta, zeta) evaluated at the probe's actual distance."""
    b = CurvatureBounds(man.k_min, man.k_max, max(distance, 1e-300))
    return delta_of(b), zeta_of(b)


def observed_diameter(trace: Trace, witness: OptimumWitness, man) -> float:
    """Max pairwise distance among all stored points and x_star."""
    _require_points(trace)
    pts = list(trace.xs) + list(trace.vs) + list(trace.ys) + [witness.x_star]
    if man.name == "sphere":
        arr = np.stack(pts)
        gram = np.clip(arr @ arr.T, -1.0, 1.0)
        return float(np.max(np.arccos(gram)))
    best = 0.0
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            best = max(best, man.dist(pts[i], pts[j]))
    return best


@dataclass
class Certificate:
    c1: CheckReport
    c2: CheckReport
    lemma1: CheckReport
    theorem1: CheckReport
    trig: CheckReport
    hessian: dict
    eps_tilde: float
    diameter: float
    constants: CurvatureConstants

    @property
    def verdict(self) -> str:
        ok = all(
            rep.passed for rep in (self.c1, self.c2, self.lemma1, self.theorem1, self.trig)
        )
        return "pass" if ok else "fail"

    def to_dict(self) -> dict:
        return {
            "c1": self.c1.to_dict(),
            "c2": self.c2.to_dict(),
            "lemma1": self.lemma1.to_dict(),
            "theorem1": self.theorem1.to_dict(),
            "trig": self.trig.to_dict(),
            "hessian": self.hessian,
            "eps_tilde": self.eps_tilde,
            "diameter": self.diameter,
            "verdict": self.verdict,
        }


def certify_run(trace: Trace, problem, witness: OptimumWitness, cfg: OptConfig,
                bounds: CurvatureBounds, *, use_observed_diameter: bool = False,
                trig_samples: int = 1000, hessian_distance: float | None = None,
                hessian_probes: int = 3, seed: int = 0) -> Certificate:
    """Run every check on a completed full-point trace.

    ``bounds`` must be the curvature bounds the run was configured with;
    with ``use_observed_diameter`` the curvature-gap terms are evaluated
    at the observed pairwise diameter instead of the configured one
    (tighter, valid when the iterates stayed inside the domain).
    """
    man = problem.manifold
    zeta_alg = cfg.curvature.zeta
    eps = achieved_eps_tilde(trace)
    if use_observed_diameter:
        diameter = observed_diameter(trace, witness, man)
        geom = CurvatureConstants.from_bounds(
            CurvatureBounds(man.k_min, man.k_max, diameter)
        )
    else:
        diameter = bounds.diameter
        geom = CurvatureConstants.from_bounds(bounds)

    psis = psi_star_sequence(trace.rows, zeta_alg)
    rng = np.random.default_rng([seed, 2])  # certification stream

    r_probe = hessian_distance if hessian_distance is not None else min(0.5, diameter / 2.0)
    lam_min, lam_max, attempts = math.nan, math.nan, 0
    while attempts < hessian_probes:
        try:
            lo, hi = hessian_eig_probe(man, witness.x_star, r_probe, rng)
        except ProbeError:
            attempts += 1
            continue
        lam_min = lo if math.isnan(lam_min) else min(lam_min, lo)
        lam_max = hi if math.isnan(lam_max) else max(lam_max, hi)
        attempts += 1
    d_bound, z_bound = probe_bounds(man, r_probe)
    hessian = {
        "lambda_min_obs": lam_min,
        "lambda_max_obs": lam_max,
        "delta_bound": d_bound,
        "zeta_bound": z_bound,
        "distance": r_probe,
        "within_bounds": bool(
            not math.isnan(lam_min)
            and lam_min >= d_bound - 1e-3
            and lam_max <= z_bound + 1e-3
        ),
    }

    radius = _trig_radius(man, diameter)
    return Certificate(
        c1=check_c1(trace, psis),
        c2=check_c2_at(trace, witness, man, zeta_alg),
        lemma1=check_lemma1(trace, witness, man, geom, eps, diameter),
        theorem1=check_theorem1(trace, witness, man, geom, zeta_alg, cfg.lipschitz, eps, diameter),
        trig=check_trig_bound(man, geom.zeta, rng, trig_samples, radius, base=witness.x_star),
        hessian=hessian,
        eps_tilde=eps,
        diameter=diameter,
        constants=geom,
    )
