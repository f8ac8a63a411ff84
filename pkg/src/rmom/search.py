"""Geodesic search: derivative-free minimization of f along the geodesic
from v to x over beta in [0, 1].

Golden-section search on the interior, with both endpoints always
evaluated and eligible. Endpoint evaluation happens at the actual points
v and x, which makes the descent condition f(y) <= f(x) hold exactly
rather than up to exp/log round-trip error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0  # 0.618...


class SearchError(RuntimeError):
    """Objective returned a non-finite value during the search."""


@dataclass(frozen=True)
class SearchConfig:
    """Budget of the geodesic search.

    max_iters counts golden-section bracket shrinks; the bracket width
    after the search is at most INVPHI**max_iters. eps_tilde is the
    inexactness budget for the stationarity condition at the returned
    point, used only for reporting and certification.
    """

    max_iters: int = 10
    bracket_tol: float = 1e-6
    eps_tilde: float = 0.0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.eps_tilde < 0.0:
            raise ValueError("eps_tilde must be >= 0")


@dataclass(frozen=True)
class SearchResult:
    beta: float
    y: np.ndarray
    f_y: float
    evals: int


def golden_section(phi, cfg: SearchConfig) -> tuple[float, int]:
    """Minimize phi on [0, 1]; returns (best beta, evaluation count).

    The best point is taken over every evaluated candidate, endpoints
    included, so boundary minima are returned exactly. Evaluation count
    is at most max_iters + 3 (two endpoints, two interior seeds, one new
    point per shrink after the first).
    """
    evals = 0

    def ev(t: float) -> float:
        nonlocal evals
        val = float(phi(t))
        evals += 1
        if not math.isfinite(val):
            raise SearchError(f"objective returned non-finite value {val} at beta={t}")
        return val

    best_t, best_f = 0.0, ev(0.0)
    f_right = ev(1.0)
    if f_right < best_f:
        best_t, best_f = 1.0, f_right

    a, b = 0.0, 1.0
    x1 = b - INVPHI * (b - a)
    x2 = a + INVPHI * (b - a)
    f1, f2 = ev(x1), ev(x2)
    for t, f in ((x1, f1), (x2, f2)):
        if f < best_f:
            best_t, best_f = t, f

    for i in range(cfg.max_iters):
        last = i == cfg.max_iters - 1
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            if not last and b - a > cfg.bracket_tol:
                x1 = b - INVPHI * (b - a)
                f1 = ev(x1)
                if f1 < best_f:
                    best_t, best_f = x1, f1
        else:
            a, x1, f1 = x1, x2, f2
            if not last and b - a > cfg.bracket_tol:
                x2 = a + INVPHI * (b - a)
                f2 = ev(x2)
                if f2 < best_f:
                    best_t, best_f = x2, f2
        if b - a <= cfg.bracket_tol:
            break

    return best_t, evals


def search_geodesic(problem, v, x, cfg: SearchConfig) -> SearchResult:
    """Minimize the objective along the geodesic t -> exp_v(t log_v(x)).

    Guarantees f(y) <= f(x) and f(y) <= f(v): both endpoints are
    evaluated at the given points themselves and are eligible winners.
    """
    man = problem.manifold
    u = man.log(v, x)
    cache: dict[float, tuple[np.ndarray, float]] = {}

    def phi(t: float) -> float:
        if t == 0.0:
            y = v
        elif t == 1.0:
            y = x
        else:
            y = man.exp(v, t * u)
        val = float(problem.value(y))
        cache[t] = (y, val)
        return val

    beta, evals = golden_section(phi, cfg)
    y, f_y = cache[beta]
    return SearchResult(beta=beta, y=y, f_y=f_y, evals=evals)


def verify_conditions(problem, y, x, v, eps_tilde: float) -> tuple[bool, float]:
    """Check the two search conditions at y.

    Returns (cond1, cond2_margin): cond1 is the descent condition
    f(y) <= f(x) up to 1e-12 relative slack; cond2_margin is
    <grad f(y), log_y(v)>, which passes when >= -eps_tilde.
    """
    man = problem.manifold
    f_y = float(problem.value(y))
    f_x = float(problem.value(x))
    cond1 = f_y <= f_x + 1e-12 * abs(f_x)
    g = problem.grad(y)
    margin = man.inner(y, g, man.log(y, v))
    return cond1, float(margin)
