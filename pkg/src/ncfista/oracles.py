"""Composite-problem abstraction: oracles for the smooth part, the convex
part, the feasible set, and curvature metadata.

A problem is ``min f(z) + h(z)`` where f is smooth (possibly nonconvex)
with Lipschitz gradient on a closed convex set containing dom h, and h is
proper closed convex with a cheap resolvent.  The resolvent here is
parameterized by the quadratic coefficient c:

    resolvent(center, c) = argmin_u { h(u) + (c/2) ||u - center||^2 }

so c = 1/tau for the classical (I + tau dh)^{-1} map.  Solvers pass
composite coefficients such as 1/step + weight/momentum directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from .point import Point


@dataclass(frozen=True)
class SmoothOracle:
    """Value and gradient of the smooth term f."""

    value: Callable[[Point], float]
    grad: Callable[[Point], Point]


@dataclass(frozen=True)
class ConvexPartOracle:
    """Value (possibly +inf) and resolvent of the convex term h."""

    value: Callable[[Point], float]
    resolvent: Callable[[Point, float], Point]


@dataclass(frozen=True)
class OmegaProjector:
    """Euclidean projection onto the closed convex set where f is smooth."""

    project: Callable[[Point], Point]


def identity_projector() -> OmegaProjector:
    """Projector for an unconstrained smoothness domain (whole space)."""
    return OmegaProjector(project=lambda p: p)


@dataclass(frozen=True)
class CurvatureInfo:
    """Known curvature bounds of the smooth part, if any.

    ``lipschitz`` bounds ||grad f(z') - grad f(z)|| / ||z' - z||;
    ``weak_convexity`` is the smallest m >= 0 making f + (m/2)||.||^2
    convex on the domain; ``domain_diameter`` is the Euclidean diameter
    of dom h.  Any of them may be unknown (None).
    """

    lipschitz: Optional[float] = None
    weak_convexity: Optional[float] = None
    domain_diameter: Optional[float] = None

    def __post_init__(self):
        if self.lipschitz is not None and self.lipschitz <= 0:
            raise ValueError("lipschitz bound must be positive")
        if self.weak_convexity is not None and self.weak_convexity < 0:
            raise ValueError("weak_convexity bound must be nonnegative")
        if self.domain_diameter is not None and self.domain_diameter <= 0:
            raise ValueError("domain_diameter must be positive")
        if (
            self.lipschitz is not None
            and self.weak_convexity is not None
            and self.weak_convexity > self.lipschitz * (1 + 1e-12)
        ):
            raise ValueError("weak_convexity cannot exceed the lipschitz bound")


@dataclass(frozen=True)
class ProblemInstance:
    """A composite problem bundle; shareable read-only across solver runs."""

    smooth: SmoothOracle
    convex_part: ConvexPartOracle
    omega: OmegaProjector
    curvature: CurvatureInfo = field(default_factory=CurvatureInfo)
    initial_point: Point = None
    label: str = ""

    def __post_init__(self):
        if self.initial_point is None:
            raise ValueError("problem needs an initial point")
        if not math.isfinite(self.convex_part.value(self.initial_point)):
            raise ValueError("initial point must lie in the domain of the convex part")

    def objective(self, z: Point) -> float:
        """Full objective f(z) + h(z); +inf outside dom h."""
        hz = self.convex_part.value(z)
        if not math.isfinite(hz):
            return math.inf
        return self.smooth.value(z) + hz


def linearize(f: SmoothOracle, z: Point, at: Point) -> float:
    """First-order model of f at ``at`` evaluated at ``z``."""
    return f.value(at) + f.grad(at).inner(z - at)


def prox_step(problem: ProblemInstance, center: Point, coeff: float) -> Point:
    """Minimize the linearized-f-plus-h model with quadratic weight ``coeff``.

    Returns argmin_u { f(center) + <grad f(center), u - center> + h(u)
    + (coeff/2) ||u - center||^2 }, computed through one resolvent call.
    """
    if coeff <= 0:
        raise ValueError(f"prox coefficient must be positive, got {coeff}")
    g = problem.smooth.grad(center)
    return problem.convex_part.resolvent(center - (1.0 / coeff) * g, coeff)


def residual_check(problem: ProblemInstance, y: Point, v: Point, tol: float) -> bool:
    """Verify v is an approximate element of grad f(y) + dh(y).

    Uses the fixed-point identity: the inclusion holds exactly iff y is the
    unit-coefficient resolvent of y + v - grad f(y).  The comparison is
    relative to 1 + ||y||.
    """
    g = problem.smooth.grad(y)
    back = problem.convex_part.resolvent(y + v - g, 1.0)
    return (back - y).norm() <= tol * (1.0 + y.norm())


def relative_stationarity(v: Point, grad_at_start: Point) -> float:
    """Residual norm scaled by the gradient norm at the starting point."""
    return v.norm() / (grad_at_start.norm() + 1.0)
