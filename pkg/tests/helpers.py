"""Shared test fixtures: a flat quadratic problem and independent
reference implementations used as oracles (plain-numpy accelerated
method with line search, and the textbook constant-momentum method)."""

from __future__ import annotations

import math

import numpy as np

from rmom.manifolds import Euclidean

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class QuadraticProblem:
    """f(x) = 1/2 x^T Q x on flat space, Q diagonal PSD."""

    def __init__(self, q):
        self.q = np.asarray(q, dtype=np.float64)
        self.manifold = Euclidean(len(self.q))
        self.lipschitz = float(np.max(self.q))

    def value(self, x):
        return 0.5 * float(x @ (self.q * x))

    def grad(self, x):
        return self.q * x


def golden_reference(phi, max_iters):
    """Independent golden-section minimizer on [0, 1] with endpoint
    inclusion, mirroring the classical shrink schedule."""
    best_t, best_f = 0.0, phi(0.0)
    f1v = phi(1.0)
    if f1v < best_f:
        best_t, best_f = 1.0, f1v
    a, b = 0.0, 1.0
    x1 = b - INVPHI * (b - a)
    x2 = a + INVPHI * (b - a)
    f1, f2 = phi(x1), phi(x2)
    for t, f in ((x1, f1), (x2, f2)):
        if f < best_f:
            best_t, best_f = t, f
    for i in range(max_iters):
        last = i == max_iters - 1
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            if not last:
                x1 = b - INVPHI * (b - a)
                f1 = phi(x1)
                if f1 < best_f:
                    best_t, best_f = x1, f1
        else:
            a, x1, f1 = x1, x2, f2
            if not last:
                x2 = a + INVPHI * (b - a)
                f2 = phi(x2)
                if f2 < best_f:
                    best_t, best_f = x2, f2
    return best_t


def agmsdr_reference(problem: QuadraticProblem, x0, lipschitz, iters, gs_iters):
    """Plain-numpy accelerated gradient method with small-dimensional
    relaxation: line search for the coupling weight, gradient step, and
    the dual-point update v <- v - a * grad. Returns the list of iterates."""
    L = lipschitz
    x = np.array(x0, dtype=np.float64)
    v = x.copy()
    big_a = 0.0
    xs, vs = [x.copy()], [v.copy()]
    for _ in range(iters):
        u = x - v
        beta = golden_reference(lambda t: problem.value(v + t * u), gs_iters)
        if beta == 0.0:
            y = v
        elif beta == 1.0:
            y = x
        else:
            y = v + beta * u
        g = problem.grad(y)
        x = y + (-(1.0 / L) * g)
        a = (1.0 + math.sqrt(1.0 + 4.0 * L * big_a)) / (2.0 * L)
        big_a = big_a + a
        v = v + (-a * g)
        xs.append(x.copy())
        vs.append(v.copy())
    return xs, vs


def euclidean_agd_reference(problem: QuadraticProblem, x0, lipschitz, mu, iters):
    """Textbook constant-momentum accelerated method for strongly convex
    quadratics (three-sequence form with gamma = mu)."""
    alpha = math.sqrt(mu / lipschitz)
    coef = alpha / (1.0 + alpha)
    x = np.array(x0, dtype=np.float64)
    v = x.copy()
    xs = [x.copy()]
    for _ in range(iters):
        y = x + coef * (v - x)
        g = problem.grad(y)
        x = y - (1.0 / lipschitz) * g
        v = (1.0 - alpha) * v + alpha * y - (alpha / mu) * g
        xs.append(x.copy())
    return xs


def fd_directional(problem, x, u, h=1e-5):
    """Central finite difference of f along the geodesic through x with
    velocity u."""
    man = problem.manifold
    return (problem.value(man.exp(x, h * u)) - problem.value(man.exp(x, -h * u))) / (2.0 * h)


def check_gradient_fd(problem, x, rng, n_dirs=5, h=1e-5, rel_tol=1e-5):
    """Spec-style finite-difference validation at one base point."""
    man = problem.manifold
    g = problem.grad(x)
    worst = 0.0
    for _ in range(n_dirs):
        u = man.unit_tangent(rng, x)
        analytic = man.inner(x, g, u)
        numeric = fd_directional(problem, x, u, h)
        err = abs(analytic - numeric) / (1.0 + abs(analytic))
        worst = max(worst, err)
    return worst
