"""Curvature-dependent constants of the convergence analysis.

From sectional curvature bounds (K_min, K_max) and a working-domain
diameter D we derive:

    zeta  = sqrt(-K_min) D coth(sqrt(-K_min) D)   if K_min < 0, else 1
    delta = sqrt(K_max) D cot(sqrt(K_max) D)      if K_max > 0, else 1

the manifold discrepancy 4 max{zeta - 1, 1 - delta}, and the acceleration
horizon 2/discrepancy (infinite in flat space).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# switch to the series of x*coth(x), x*cot(x) below this to avoid cancellation
_SERIES_CUTOFF = 1e-4


@dataclass(frozen=True)
class CurvatureBounds:
    """Sectional curvature bounds and diameter of the working domain."""

    k_min: float
    k_max: float
    diameter: float

    def __post_init__(self):
        if not (self.k_min <= self.k_max):
            raise ValueError(f"k_min={self.k_min} exceeds k_max={self.k_max}")
        if not (self.diameter > 0.0 and math.isfinite(self.diameter)):
            raise ValueError(f"diameter must be a positive finite real, got {self.diameter}")


@dataclass(frozen=True)
class CurvatureConstants:
    """zeta >= 1, delta <= 1, the discrepancy and the acceleration horizon."""

    zeta: float
    delta: float
    discrepancy: float
    horizon: float

    @classmethod
    def from_bounds(cls, b: CurvatureBounds) -> "CurvatureConstants":
        return cls(zeta(b), delta(b), discrepancy(b), accel_horizon(b))


def _xcothx(x: float) -> float:
    if x < _SERIES_CUTOFF:
        x2 = x * x
        return 1.0 + x2 / 3.0 - x2 * x2 / 45.0
    return x / math.tanh(x)


def _xcotx(x: float) -> float:
    if x < _SERIES_CUTOFF:
        x2 = x * x
        return 1.0 - x2 / 3.0 - x2 * x2 / 45.0
    return x / math.tan(x)


def zeta(b: CurvatureBounds) -> float:
    """Negative-curvature penalty factor, >= 1."""
    if b.k_min >= 0.0:
        return 1.0
    return _xcothx(math.sqrt(-b.k_min) * b.diameter)


def delta(b: CurvatureBounds) -> float:
    """Positive-curvature penalty factor, <= 1.

    Requires sqrt(K_max) * D < pi (cot pole).
    """
    if b.k_max <= 0.0:
        return 1.0
    x = math.sqrt(b.k_max) * b.diameter
    if x >= math.pi:
        raise ValueError(
            f"delta undefined: sqrt(K_max)*D = {x:.6f} >= pi (cot pole)"
        )
    return _xcotx(x)


def discrepancy(b: CurvatureBounds) -> float:
    """4 max{zeta - 1, 1 - delta}; exactly 0 in flat space."""
    return 4.0 * max(zeta(b) - 1.0, 1.0 - delta(b))


def accel_horizon(b: CurvatureBounds) -> float:
    """2/discrepancy: how many steps enjoy the 1/k^2 regime. inf when flat."""
    d = discrepancy(b)
    if d == 0.0:
        return math.inf
    return 2.0 / d


def rgd_dominance_check(b: CurvatureBounds) -> bool:
    """True when the momentum method has a better worst-case bound than
    plain Riemannian gradient descent: max{zeta-1, 1-delta} < 1/16.

    In particular true whenever |K| * D^2 <= 0.16.
    """
    return max(zeta(b) - 1.0, 1.0 - delta(b)) < 1.0 / 16.0
