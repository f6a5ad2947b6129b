"""Shared solver plumbing: termination rules, per-iteration records, results."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

from .point import Point

STATUS_CONVERGED = "converged"
STATUS_MAX_ITER = "max_iter"


@dataclass(frozen=True)
class Termination:
    """Stopping rule on the stationarity residual v.

    kind "abs": stop when ||v|| <= tol.
    kind "rel": stop when ||v|| / (||grad f(y0)|| + 1) <= tol.
    """

    kind: str = "abs"
    tol: float = 1e-7

    def __post_init__(self):
        if self.kind not in ("abs", "rel"):
            raise ValueError(f"unknown termination kind {self.kind!r}")
        if not (self.tol > 0):
            raise ValueError("termination tolerance must be positive")

    def satisfied(self, v_norm: float, rel_scale: float) -> bool:
        if self.kind == "abs":
            return v_norm <= self.tol
        return v_norm / rel_scale <= self.tol


@dataclass
class TrajectoryRecord:
    """Diagnostics for one outer iteration (values after the update)."""

    k: int
    v_norm: float
    objective: float  # f + h at the new iterate; nan when not evaluated
    step: float  # proximal stepsize used for this iterate
    step_in: float  # stepsize at iteration start (restarts reset it)
    weight: float  # weak-convexity weight used for this iterate
    momentum: float  # momentum coefficient of this iteration
    curvature: float  # model curvature along the accepted displacement
    weight_floor: float  # lower curvature estimate; nan for fixed-step runs
    resolvents: int  # cumulative resolvent evaluations
    lipschitz_ratio: float = math.nan  # secant gradient ratio of the step
    restarted: bool = False  # iterate rejected by the restart rule


@dataclass
class SolverResult:
    """Output pair, status, work counters, and optional trajectory."""

    y_hat: Point
    v_hat: Optional[Point]
    status: str
    iterations: int
    resolvent_evals: int
    grad_evals: int
    projections: int
    v_norm: float
    rel_residual: float
    objective: float
    restarts: int = 0
    trajectory: Optional[List[TrajectoryRecord]] = field(default=None)

    @property
    def converged(self) -> bool:
        return self.status == STATUS_CONVERGED
