"""Fixed-parameter accelerated proximal gradient method for nonconvex
composite problems.

The method runs a FISTA-style momentum recursion with a constant stepsize
1/lipschitz and adds a weak-convexity compensation term weight/momentum to
the proximal coefficient.  With ``weak_convexity = 0`` the recursion is
exactly FISTA.  Each iteration costs one resolvent evaluation of the
convex part, two gradient evaluations, and one projection onto the
smoothness domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

from .oracles import ProblemInstance
from .point import Point
from .results import (
    STATUS_CONVERGED,
    STATUS_MAX_ITER,
    SolverResult,
    Termination,
    TrajectoryRecord,
)


def damping_ratio(accumulator_init: float) -> float:
    """Weight ratio applied to the weak-convexity compensation.

    Equals mom0 / (mom0 - 1) where mom0 is the first momentum coefficient;
    always greater than 1.  Requires a positive accumulator seed.
    """
    if accumulator_init <= 0:
        raise ValueError("accumulator seed must be positive")
    root = math.sqrt(1.0 + 4.0 * accumulator_init)
    return (1.0 + root) / (root - 1.0)


def advance_accumulator(acc: float) -> Tuple[float, float]:
    """One step of the momentum recursion: returns (mom, acc + mom).

    The new accumulator equals mom**2, which keeps the interpolation
    weights of the momentum recursion consistent.
    """
    if acc < 0:
        raise ValueError("accumulator must be nonnegative")
    mom = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * acc))
    return mom, acc + mom


@dataclass(frozen=True)
class NcFistaConfig:
    """Parameters of the fixed-step solver.

    ``lipschitz`` must upper-bound the gradient Lipschitz constant with
    some margin and ``weak_convexity`` must bound the weak-convexity
    modulus for the stationarity guarantees to apply; neither condition
    can be verified without ground truth, so any lipschitz >= weak
    convexity >= 0 is accepted.  ``weak_convexity = 0`` gives plain FISTA.
    """

    lipschitz: float
    weak_convexity: float
    accumulator_init: float = 2.0
    termination: Termination = Termination()
    max_iter: int = 50_000
    log_trajectory: bool = False

    def __post_init__(self):
        if not (self.lipschitz > 0):
            raise ValueError("lipschitz must be positive")
        if not (0 <= self.weak_convexity <= self.lipschitz):
            raise ValueError("need 0 <= weak_convexity <= lipschitz")
        if not (self.accumulator_init > 0):
            raise ValueError("accumulator_init must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")


@dataclass
class NcFistaState:
    """Per-iteration solver state plus caches from the latest step."""

    k: int
    acc: float  # momentum accumulator
    x: Point  # projected extrapolation sequence
    y: Point  # proximal sequence (always in dom h)
    damp: float  # damping ratio, fixed per run
    step: float  # 1 / lipschitz, fixed per run
    mom: float = math.nan  # momentum coefficient of the last step
    x_mid: Optional[Point] = None  # interpolated probe point of the last step
    grad_mid: Optional[Point] = None
    grad_y: Optional[Point] = None


def init_state(problem: ProblemInstance, config: NcFistaConfig) -> NcFistaState:
    y0 = problem.initial_point
    return NcFistaState(
        k=0,
        acc=config.accumulator_init,
        x=y0,
        y=y0,
        damp=damping_ratio(config.accumulator_init),
        step=1.0 / config.lipschitz,
    )


def nc_fista_step(
    problem: ProblemInstance, config: NcFistaConfig, state: NcFistaState
) -> Tuple[NcFistaState, Point]:
    """Advance one iteration; returns the new state and the residual v.

    Exactly one resolvent evaluation and one domain projection happen per
    call.  The residual satisfies v in grad f(y_new) + dh(y_new) by the
    optimality condition of the proximal subproblem.
    """
    mom, acc_next = advance_accumulator(state.acc)
    x_mid = (state.acc / acc_next) * state.y + (mom / acc_next) * state.x

    coeff = 1.0 / state.step + state.damp * config.weak_convexity / mom
    grad_mid = problem.smooth.grad(x_mid)
    y_next = problem.convex_part.resolvent(x_mid - (1.0 / coeff) * grad_mid, coeff)
    grad_y = problem.smooth.grad(y_next)
    v = coeff * (x_mid - y_next) + grad_y - grad_mid

    blend = state.damp * config.weak_convexity * state.step
    x_hat = (1.0 / (blend + 1.0)) * ((mom + blend) * y_next - (mom - 1.0) * state.y)
    x_next = problem.omega.project(x_hat)

    new_state = replace(
        state,
        k=state.k + 1,
        acc=acc_next,
        x=x_next,
        y=y_next,
        mom=mom,
        x_mid=x_mid,
        grad_mid=grad_mid,
        grad_y=grad_y,
    )
    return new_state, v


def run_nc_fista(problem: ProblemInstance, config: NcFistaConfig) -> SolverResult:
    """Iterate until the stationarity residual meets the termination rule.

    On budget exhaustion the returned pair is the best iterate seen
    (smallest residual norm); with a zero budget the result carries the
    initial point and no residual.
    """
    state = init_state(problem, config)
    grad0 = problem.smooth.grad(problem.initial_point)
    rel_scale = grad0.norm() + 1.0

    grad_evals = 1
    resolvents = 0
    projections = 0
    best: Optional[Tuple[float, Point, Point]] = None
    trajectory = [] if config.log_trajectory else None
    status = STATUS_MAX_ITER

    for _ in range(config.max_iter):
        prev_x_mid_needed = config.log_trajectory
        state, v = nc_fista_step(problem, config, state)
        grad_evals += 2
        resolvents += 1
        projections += 1
        v_norm = v.norm()

        if best is None or v_norm < best[0]:
            best = (v_norm, state.y, v)

        if trajectory is not None:
            trajectory.append(
                _record(problem, config, state, v_norm, prev_x_mid_needed)
            )

        if config.termination.satisfied(v_norm, rel_scale):
            status = STATUS_CONVERGED
            best = (v_norm, state.y, v)
            break

    if best is None:
        y_hat, v_hat, v_norm = problem.initial_point, None, math.inf
    else:
        v_norm, y_hat, v_hat = best

    return SolverResult(
        y_hat=y_hat,
        v_hat=v_hat,
        status=status,
        iterations=state.k,
        resolvent_evals=resolvents,
        grad_evals=grad_evals,
        projections=projections,
        v_norm=v_norm,
        rel_residual=v_norm / rel_scale if math.isfinite(v_norm) else math.inf,
        objective=problem.objective(y_hat),
        trajectory=trajectory,
    )


def _record(
    problem: ProblemInstance,
    config: NcFistaConfig,
    state: NcFistaState,
    v_norm: float,
    with_curvature: bool,
) -> TrajectoryRecord:
    disp = state.y - state.x_mid
    disp_norm = disp.norm()
    curvature = math.nan
    lips_ratio = math.nan
    if with_curvature and disp_norm > 0:
        gap = problem.smooth.value(state.y) - (
            problem.smooth.value(state.x_mid) + state.grad_mid.inner(disp)
        )
        curvature = 2.0 * gap / disp_norm**2
        lips_ratio = (state.grad_y - state.grad_mid).norm() / disp_norm
    elif with_curvature:
        curvature = 0.0
    return TrajectoryRecord(
        k=state.k,
        v_norm=v_norm,
        objective=problem.objective(state.y),
        step=state.step,
        step_in=state.step,
        weight=config.weak_convexity,
        momentum=state.mom,
        curvature=curvature,
        weight_floor=math.nan,
        resolvents=state.k,
        lipschitz_ratio=lips_ratio,
    )
