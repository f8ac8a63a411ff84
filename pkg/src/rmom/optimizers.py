"""Iteration engines: momentum method with geodesic search (RAGDsDR),
its restarted variant for weakly-quasi-convex objectives, and baselines
(Riemannian gradient descent, constant-momentum RAGD, alternating
normalization for operator scaling).

One trace row is produced per step. Row ``k`` describes the state after
step k: f_x = f(x_k), f_y and grad_norm_y refer to the coupled point
y_{k-1} where the gradient was taken, a_next = a_k and big_a = A_k. For
restarted runs ``k`` is the within-segment index (A resets at restarts)
and the global position is the row's position in the trace; the restart
indices are recorded separately.

Traces serialize to CSV with the fixed header
``k,f_x,f_y,grad_norm_y,beta,a_next,big_a,cond2_margin,dist_x0,wall_ns``
and, for restarted runs, a JSON sidecar ``{"restarts": [...]}``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .curvature import CurvatureConstants
from .linalg import MatrixDomainError
from .manifolds import ManifoldDomainError
from .search import SearchConfig, SearchError, search_geodesic

TRACE_HEADER = "k,f_x,f_y,grad_norm_y,beta,a_next,big_a,cond2_margin,dist_x0,wall_ns"


class NumericalAbort(RuntimeError):
    """Run aborted: a geometric map left its domain, the objective turned
    non-finite, or a configured budget was exhausted."""


@dataclass(frozen=True)
class OptConfig:
    lipschitz: float
    curvature: CurvatureConstants
    beta_rule: str = "search"  # "search" | "nesterov"
    search_cfg: SearchConfig = field(default_factory=SearchConfig)
    max_iters: int = 100
    grad_tol: float = 1e-10

    def __post_init__(self):
        if self.lipschitz <= 0.0:
            raise ValueError("lipschitz must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.beta_rule not in ("search", "nesterov"):
            raise ValueError(f"unknown beta rule {self.beta_rule!r}")


@dataclass
class OptState:
    x: np.ndarray
    v: np.ndarray
    big_a: float = 0.0
    k: int = 0


@dataclass
class IterRecord:
    k: int
    f_x: float
    f_y: float
    grad_norm_y: float
    beta: float
    a_next: float
    big_a: float
    cond2_margin: float
    dist_x0: float
    wall_ns: int = 0


@dataclass(frozen=True)
class RestartConfig:
    """Restart rule for weakly-quasi-convex objectives.

    The inner loop breaks when the suboptimality contracts by the factor
    (1 - alpha/c) relative to the segment start; f_star must be a valid
    lower value along the trajectory.
    """

    alpha: float
    f_star: float
    c: float = 2.0
    target_eps: float = 0.0
    inner_budget: int | None = None

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError("alpha must be in (0, 1]")
        if self.c <= 1.0:
            raise ValueError("c must be > 1")


@dataclass
class Trace:
    rows: list
    x0: np.ndarray
    f_x0: float
    restarts: list = field(default_factory=list)
    # full-point mode (certification): points and gradients per step
    xs: list | None = None
    vs: list | None = None
    ys: list | None = None
    grads: list | None = None
    # per-iterate distance to double stochasticity (scaling runs only)
    ds: list | None = None

    @property
    def steps(self) -> int:
        return len(self.rows)

    def f_values(self):
        """f(x_k) for k = 0..n as one array."""
        return np.array([self.f_x0] + [r.f_x for r in self.rows])


def a_next(big_a: float, zeta: float, lipschitz: float) -> float:
    """Positive root of zeta*L*a^2 - a - A = 0."""
    zl = zeta * lipschitz
    return (1.0 + math.sqrt(1.0 + 4.0 * zl * big_a)) / (2.0 * zl)


def rgd_step(manifold, x, grad, lipschitz: float):
    """One gradient step exp_x(-grad/L)."""
    return manifold.exp(x, -(1.0 / lipschitz) * grad)


def ragdsdr_step(state: OptState, problem, cfg: OptConfig, x0):
    """One momentum step; returns (new state, record, y, grad at y).

    Executes: coupling point y by the beta rule, gradient step from y,
    momentum-weight update a/A, and the v update by a transported
    gradient step.
    """
    man = problem.manifold
    v_k, x_k = state.v, state.x

    if cfg.beta_rule == "search":
        res = search_geodesic(problem, v_k, x_k, cfg.search_cfg)
        beta, y, f_y = res.beta, res.y, res.f_y
    else:
        beta = state.k / (state.k + 2.0)
        y = man.exp(v_k, beta * man.log(v_k, x_k))
        f_y = float(problem.value(y))

    g = problem.grad(y)
    gnorm = man.norm(y, g)
    cond2 = man.inner(y, g, man.log(y, v_k))

    x_new = man.exp(y, -(1.0 / cfg.lipschitz) * g)
    a = a_next(state.big_a, cfg.curvature.zeta, cfg.lipschitz)
    big_a = state.big_a + a
    v_new = man.exp(v_k, -a * man.transport(y, v_k, g))

    record = IterRecord(
        k=state.k + 1,
        f_x=float(problem.value(x_new)),
        f_y=f_y,
        grad_norm_y=gnorm,
        beta=beta,
        a_next=a,
        big_a=big_a,
        cond2_margin=cond2,
        dist_x0=man.dist(x0, x_new),
    )
    return OptState(x_new, v_new, big_a, state.k + 1), record, y, g


def _wrap_abort(k: int, err: Exception) -> NumericalAbort:
    return NumericalAbort(f"iteration {k}: {err}")


def run_ragdsdr(problem, x0, cfg: OptConfig, collect_points: bool = False) -> Trace:
    """Drive the momentum method from x0 until grad_norm_y <= grad_tol or
    max_iters. With collect_points the trace stores x/v/y points and the
    gradients at y, as required for certification."""
    man = problem.manifold
    x0 = np.array(x0, dtype=np.float64)
    state = OptState(x0, x0.copy())
    trace = Trace(rows=[], x0=x0, f_x0=float(problem.value(x0)))
    ds_fn = getattr(problem, "ds_at", None)
    if collect_points:
        trace.xs, trace.vs, trace.ys, trace.grads = [x0], [x0.copy()], [], []
    if ds_fn is not None:
        trace.ds = [float(ds_fn(x0))]
    t0 = time.perf_counter_ns()
    for k in range(cfg.max_iters):
        try:
            state, record, y, g = ragdsdr_step(state, problem, cfg, x0)
        except (ManifoldDomainError, MatrixDomainError, SearchError) as err:
            raise _wrap_abort(k, err) from err
        record.wall_ns = time.perf_counter_ns() - t0
        trace.rows.append(record)
        if collect_points:
            trace.xs.append(state.x)
            trace.vs.append(state.v)
            trace.ys.append(y)
            trace.grads.append(g)
        if ds_fn is not None:
            trace.ds.append(float(ds_fn(state.x)))
        if record.grad_norm_y <= cfg.grad_tol:
            break
    return trace


def restart_segment_bound(
    eps_i: float,
    alpha: float,
    c: float,
    discrepancy: float,
    zeta: float,
    lipschitz: float,
    diameter: float,
    eps_tilde: float = 0.0,
) -> float:
    """Worst-case step count of one restart segment whose starting
    suboptimality is eps_i. Infinite when the contraction target cannot
    absorb the search inexactness."""
    gap = ((c - 1.0) * alpha / c) * eps_i - eps_tilde
    if gap <= 0.0:
        return math.inf
    t = discrepancy * zeta * lipschitz * diameter**2 / (2.0 * gap)
    return math.ceil(t + math.sqrt(t * t + 4.0 * zeta * lipschitz * diameter**2 / gap))


def run_restarted(
    problem, x0, cfg: OptConfig, rcfg: RestartConfig, diameter: float,
    collect_points: bool = False,
) -> Trace:
    """Momentum method with warm restarts.

    Each segment starts with A = 0 and v at the segment's start point and
    breaks once f(x_k) - f_star <= (1 - alpha/c) (f(segment start) - f_star).
    Trace.restarts records the (1-based) global row indices of the breaks.
    """
    man = problem.manifold
    x0 = np.array(x0, dtype=np.float64)
    f0 = float(problem.value(x0))
    tol_fstar = 1e-12 * max(1.0, abs(rcfg.f_star))
    if f0 < rcfg.f_star - tol_fstar:
        raise NumericalAbort(f"f(x0) = {f0} below f_star = {rcfg.f_star}: invalid witness")
    eps0 = f0 - rcfg.f_star
    zeta = cfg.curvature.zeta
    budget = rcfg.inner_budget
    if budget is None:
        n0 = restart_segment_bound(
            eps0, rcfg.alpha, rcfg.c, cfg.curvature.discrepancy, zeta,
            cfg.lipschitz, diameter,
        )
        budget = int(min(10 * max(n0, 1), 10 * cfg.max_iters))

    trace = Trace(rows=[], x0=x0, f_x0=f0)
    if collect_points:
        trace.xs, trace.vs, trace.ys, trace.grads = [x0], [x0.copy()], [], []
    contraction = 1.0 - rcfg.alpha / rcfg.c
    t0 = time.perf_counter_ns()
    x_seg = x0
    total = 0
    while total < cfg.max_iters:
        f_seg = float(problem.value(x_seg))
        if f_seg - rcfg.f_star <= rcfg.target_eps:
            break
        state = OptState(np.array(x_seg), np.array(x_seg))
        seg_steps = 0
        while total < cfg.max_iters:
            try:
                state, record, y, g = ragdsdr_step(state, problem, cfg, x0)
            except (ManifoldDomainError, MatrixDomainError, SearchError) as err:
                raise _wrap_abort(total, err) from err
            record.wall_ns = time.perf_counter_ns() - t0
            trace.rows.append(record)
            if collect_points:
                trace.xs.append(state.x)
                trace.vs.append(state.v)
                trace.ys.append(y)
                trace.grads.append(g)
            total += 1
            seg_steps += 1
            if record.f_x < rcfg.f_star - tol_fstar:
                raise NumericalAbort(
                    f"iteration {total}: f = {record.f_x} below f_star = {rcfg.f_star}"
                )
            if record.f_x - rcfg.f_star <= contraction * (f_seg - rcfg.f_star):
                trace.restarts.append(total)
                break
            if seg_steps >= budget:
                raise NumericalAbort(
                    f"restart contraction not reached within inner budget {budget} "
                    f"(segment started at suboptimality {f_seg - rcfg.f_star:.3e})"
                )
        x_seg = state.x
        if float(problem.value(x_seg)) - rcfg.f_star <= rcfg.target_eps:
            break
    return trace


def _baseline_record(problem, man, k, x_new, f_y, gnorm, x0) -> IterRecord:
    return IterRecord(
        k=k,
        f_x=float(problem.value(x_new)),
        f_y=f_y,
        grad_norm_y=gnorm,
        beta=math.nan,
        a_next=math.nan,
        big_a=math.nan,
        cond2_margin=math.nan,
        dist_x0=man.dist(x0, x_new),
    )


def run_rgd(problem, x0, cfg: OptConfig, collect_points: bool = False) -> Trace:
    """Plain Riemannian gradient descent with step 1/L."""
    man = problem.manifold
    x0 = np.array(x0, dtype=np.float64)
    x = x0
    trace = Trace(rows=[], x0=x0, f_x0=float(problem.value(x0)))
    ds_fn = getattr(problem, "ds_at", None)
    if collect_points:
        trace.xs = [x0]
    if ds_fn is not None:
        trace.ds = [float(ds_fn(x0))]
    t0 = time.perf_counter_ns()
    for k in range(cfg.max_iters):
        try:
            f_here = float(problem.value(x))
            g = problem.grad(x)
            gnorm = man.norm(x, g)
            x = rgd_step(man, x, g, cfg.lipschitz)
            record = _baseline_record(problem, man, k + 1, x, f_here, gnorm, x0)
        except (ManifoldDomainError, MatrixDomainError) as err:
            raise _wrap_abort(k, err) from err
        record.wall_ns = time.perf_counter_ns() - t0
        trace.rows.append(record)
        if collect_points:
            trace.xs.append(x)
        if ds_fn is not None:
            trace.ds.append(float(ds_fn(x)))
        if gnorm <= cfg.grad_tol:
            break
    return trace


def ragd_baseline_step(state: OptState, problem, lipschitz: float, mu: float, zeta: float):
    """One step of the constant-momentum strongly-convex baseline.

    Three-sequence constant scheme with gamma = mu, written in the
    tangent space at the coupled point; reduces to the classical
    Euclidean constant-momentum method when the geometry is flat.
    """
    if mu <= 0.0:
        raise ValueError("baseline requires a strong-convexity modulus mu > 0")
    man = problem.manifold
    alpha = math.sqrt(mu / (zeta * lipschitz))
    if alpha >= 1.0:
        alpha = 0.5  # mu >= zeta L is out of regime; fall back to a damped value
    coef = alpha / (1.0 + alpha)
    y = man.exp(state.x, coef * man.log(state.x, state.v))
    g = problem.grad(y)
    gnorm = man.norm(y, g)
    x_new = man.exp(y, -(1.0 / lipschitz) * g)
    v_new = man.exp(y, (1.0 - alpha) * man.log(y, state.v) - (alpha / mu) * g)
    return OptState(x_new, v_new, 0.0, state.k + 1), y, gnorm


def run_ragd(problem, x0, cfg: OptConfig, mu: float) -> Trace:
    """Drive the constant-momentum baseline (needs mu > 0)."""
    if mu <= 0.0:
        raise ValueError("baseline requires a strong-convexity modulus mu > 0")
    man = problem.manifold
    x0 = np.array(x0, dtype=np.float64)
    state = OptState(x0, x0.copy())
    trace = Trace(rows=[], x0=x0, f_x0=float(problem.value(x0)))
    ds_fn = getattr(problem, "ds_at", None)
    if ds_fn is not None:
        trace.ds = [float(ds_fn(x0))]
    t0 = time.perf_counter_ns()
    for k in range(cfg.max_iters):
        try:
            state, y, gnorm = ragd_baseline_step(
                state, problem, cfg.lipschitz, mu, cfg.curvature.zeta
            )
            record = _baseline_record(
                problem, man, k + 1, state.x, float(problem.value(y)), gnorm, x0
            )
        except (ManifoldDomainError, MatrixDomainError) as err:
            raise _wrap_abort(k, err) from err
        record.wall_ns = time.perf_counter_ns() - t0
        trace.rows.append(record)
        if ds_fn is not None:
            trace.ds.append(float(ds_fn(state.x)))
        if gnorm <= cfg.grad_tol:
            break
    return trace


def run_gurvits(problem, max_iters: int, ds_tol: float = 0.0) -> Trace:
    """Alternating-normalization baseline for operator scaling.

    The capacity iterate implied by the accumulated right factors is
    X_t = R_t R_t^T, so rows carry the log-capacity value at X_t; the
    per-step distance to double stochasticity goes to Trace.ds.
    """
    from .problems import gurvits_ds, gurvits_init, gurvits_step

    man = problem.manifold
    x0 = np.eye(problem.dim)
    state = gurvits_init(problem)
    trace = Trace(rows=[], x0=x0, f_x0=float(problem.value(x0)))
    trace.ds = [gurvits_ds(state, problem.dim)]
    t0 = time.perf_counter_ns()
    for k in range(max_iters):
        try:
            state = gurvits_step(state)
        except (ManifoldDomainError, MatrixDomainError) as err:
            raise _wrap_abort(k, err) from err
        x_t = state.right @ state.right.T
        ds = gurvits_ds(state, problem.dim)
        record = _baseline_record(
            problem, man, k + 1, x_t, float(problem.value(x_t)), math.nan, x0
        )
        record.wall_ns = time.perf_counter_ns() - t0
        trace.rows.append(record)
        trace.ds.append(ds)
        if ds <= ds_tol:
            break
    return trace


# ---------------------------------------------------------------------------
# trace CSV / sidecar I/O

def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def trace_csv_text(trace: Trace) -> str:
    lines = [TRACE_HEADER]
    for r in trace.rows:
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    r.k, r.f_x, r.f_y, r.grad_norm_y, r.beta, r.a_next,
                    r.big_a, r.cond2_margin, r.dist_x0, r.wall_ns,
                )
            )
        )
    return "\n".join(lines) + "\n"


def write_trace_csv(path, trace: Trace) -> None:
    with open(path, "w") as fh:
        fh.write(trace_csv_text(trace))


def read_trace_csv(path) -> list:
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != TRACE_HEADER:
            raise ValueError(f"unexpected trace header: {header!r}")
        for line in fh:
            parts = line.strip().split(",")
            rows.append(
                IterRecord(
                    k=int(parts[0]),
                    f_x=float(parts[1]),
                    f_y=float(parts[2]),
                    grad_norm_y=float(parts[3]),
                    beta=float(parts[4]),
                    a_next=float(parts[5]),
                    big_a=float(parts[6]),
                    cond2_margin=float(parts[7]),
                    dist_x0=float(parts[8]),
                    wall_ns=int(parts[9]),
                )
            )
    return rows
