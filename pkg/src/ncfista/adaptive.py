"""Adaptive accelerated proximal gradient method.

Unlike the fixed-step solver, this variant needs no curvature bounds: it
maintains a stepsize and a weak-convexity weight, and an inner search
shrinks the stepsize geometrically and doubles the weight until two
model-fit conditions hold.  Optional behaviours:

* restart: reject any iterate that does not decrease the objective and
  restart the momentum recursion from the previous iterate;
* bb: seed the inner search with a Barzilai-Borwein secant stepsize
  instead of the previously accepted one.

Most outer iterations cost a single resolvent evaluation; the total
number of extra inner passes is logarithmically bounded because every
stepsize update shrinks it by at least the backtracking factor and every
weight update doubles it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Tuple

from .nc_fista import advance_accumulator
from .oracles import ProblemInstance, SmoothOracle, linearize, prox_step
from .point import Point
from .results import (
    STATUS_CONVERGED,
    STATUS_MAX_ITER,
    SolverResult,
    Termination,
    TrajectoryRecord,
)

ACCUMULATOR_INIT = 2.0  # fixed seed; keeps every momentum coefficient >= 2
FIT_MARGIN = 0.9  # required bound on step * model curvature


class InnerSearchError(RuntimeError):
    """Inner search exceeded its pass budget; indicates a bug or a broken
    oracle, since the number of parameter updates is provably finite."""


@dataclass(frozen=True)
class AdaptiveConfig:
    """Parameters of the adaptive solver.

    The initial pair (lipschitz_init, weak_convexity_init) may be an
    arbitrary positive guess; the solver corrects it on the fly.
    """

    lipschitz_init: float = 1.0
    weak_convexity_init: float = 1.0
    stepsize_shrink: float = 1.25
    termination: Termination = Termination()
    restart: bool = False
    bb: bool = False
    max_outer: int = 50_000
    max_inner_per_outer: int = 200
    log_trajectory: bool = False

    def __post_init__(self):
        if not (self.weak_convexity_init > 0):
            raise ValueError("weak_convexity_init must be positive")
        if not (self.lipschitz_init >= self.weak_convexity_init):
            raise ValueError("need lipschitz_init >= weak_convexity_init")
        if not (self.stepsize_shrink > 1):
            raise ValueError("stepsize_shrink must exceed 1")
        if self.max_outer < 0 or self.max_inner_per_outer < 1:
            raise ValueError("invalid iteration budgets")


@dataclass
class AdaptiveState:
    """Outer-iteration state plus caches from the latest step."""

    k: int
    acc: float  # momentum accumulator
    x: Point
    y: Point
    anchor: Point  # momentum anchor; moves only on restart
    step: float  # accepted stepsize
    weight: float  # weak-convexity weight (never decreases)
    resolvents: int = 0  # cumulative resolvent evaluations
    mom: float = math.nan
    step_in: float = math.nan  # stepsize at the start of the last step
    x_mid: Optional[Point] = None
    grad_mid: Optional[Point] = None
    grad_y: Optional[Point] = None
    curvature: float = math.nan  # accepted model curvature
    weight_floor: float = math.nan  # lower curvature estimate of the last step
    f_y: float = math.nan  # smooth value at the accepted iterate
    passes: int = 0  # inner passes of the last step
    bb_s: Optional[Point] = None  # secant displacement cache
    bb_g: Optional[Point] = None  # secant gradient-difference cache


class SearchOutcome(NamedTuple):
    step: float
    weight: float
    y: Point
    curvature: float
    passes: int
    f_y: float


def lower_curvature_estimate(f: SmoothOracle, x_mid: Point, y_mid: Point) -> float:
    """Concavity of f along the segment from x_mid to y_mid, clipped at 0.

    Returns 0 for a coincident pair; on a problem with weak-convexity
    modulus m the value always lies in [0, m].
    """
    disp = y_mid - x_mid
    dn2 = disp.norm() ** 2
    if dn2 == 0.0:
        return 0.0
    return max(2.0 * (linearize(f, y_mid, x_mid) - f.value(y_mid)) / dn2, 0.0)


def model_curvature(
    problem: ProblemInstance, x_mid: Point, step: float, weight: float, mom: float
) -> Tuple[Point, float]:
    """Proximal candidate for (step, weight) and its model curvature.

    The candidate minimizes the linearized objective plus the quadratic
    (1/step + 2*weight/mom)/2 * ||u - x_mid||^2; the curvature is the
    second-order difference of f along the resulting displacement
    (0 for a zero displacement).  Costs one resolvent evaluation.
    """
    coeff = 1.0 / step + 2.0 * weight / mom
    y = prox_step(problem, x_mid, coeff)
    disp = y - x_mid
    dn2 = disp.norm() ** 2
    if dn2 == 0.0:
        return y, 0.0
    return y, 2.0 * (problem.smooth.value(y) - linearize(problem.smooth, y, x_mid)) / dn2


def bb_stepsize(s: Point, g: Point, fallback: float) -> float:
    """Barzilai-Borwein secant stepsize <s, g> / ||g||^2, or the fallback.

    The fallback is used when the ratio is nonpositive or undefined.
    """
    if fallback <= 0:
        raise ValueError("fallback stepsize must be positive")
    den = g.inner(g)
    if den == 0.0:
        return fallback
    val = s.inner(g) / den
    if not math.isfinite(val) or val <= 0.0:
        return fallback
    return val


def model_fit_search(
    problem: ProblemInstance,
    x_mid: Point,
    step_in: float,
    weight_in: float,
    mom: float,
    weight_floor: float,
    shrink: float,
    step_start: Optional[float] = None,
    max_passes: int = 200,
    f_mid: Optional[float] = None,
    grad_mid: Optional[Point] = None,
) -> SearchOutcome:
    """Find a (step, weight) pair whose proximal candidate fits the model.

    Starting from (step_in, weight_in) — or from step_start when seeding
    with a secant stepsize — each pass evaluates one proximal candidate
    and tests two conditions: the curvature fit step * curvature <= 0.9,
    and the weight floor 2*weight*(step_in - step/mom) >= floor * step.
    A failed fit shrinks the stepsize to min(step/shrink, 0.9/curvature);
    a failed floor doubles the weight.  Both updates may fire in the same
    pass.  When the tested stepsize is so large that the floor condition
    cannot be fixed by any weight (nonpositive coefficient), the stepsize
    is shrunk instead; this only arises with secant seeding.
    """
    if f_mid is None:
        f_mid = problem.smooth.value(x_mid)
    if grad_mid is None:
        grad_mid = problem.smooth.grad(x_mid)

    step = step_in if step_start is None else step_start
    weight = weight_in
    for passes in range(1, max_passes + 1):
        coeff = 1.0 / step + 2.0 * weight / mom
        y = problem.convex_part.resolvent(x_mid - (1.0 / coeff) * grad_mid, coeff)
        disp = y - x_mid
        dn2 = disp.norm() ** 2
        f_y = problem.smooth.value(y)
        if dn2 == 0.0:
            curv = 0.0
        else:
            curv = 2.0 * (f_y - (f_mid + grad_mid.inner(disp))) / dn2

        fit_ok = step * curv <= FIT_MARGIN
        margin = step_in - step / mom
        floor_ok = 2.0 * weight * margin >= weight_floor * step
        if fit_ok and floor_ok:
            return SearchOutcome(step, weight, y, curv, passes, f_y)
        if not fit_ok:
            step = min(step / shrink, FIT_MARGIN / curv)
        if not floor_ok:
            if margin > 0:
                weight = 2.0 * weight
            elif fit_ok:
                step = step / shrink
    raise InnerSearchError(
        f"no admissible (step, weight) within {max_passes} passes "
        f"(step_in={step_in:.3e}, weight_in={weight_in:.3e})"
    )


def adaptive_step(
    problem: ProblemInstance, config: AdaptiveConfig, state: AdaptiveState
) -> Tuple[AdaptiveState, Point]:
    """Advance one outer iteration; returns the new state and residual v.

    When the starting pair already fits the model, exactly one resolvent
    evaluation occurs.  Gradient cost is two evaluations per call.
    """
    mom, acc_next = advance_accumulator(state.acc)
    x_mid = (state.acc / acc_next) * state.y + (mom / acc_next) * state.x
    y_mid = (state.acc / acc_next) * state.y + (mom / acc_next) * state.anchor

    f_mid = problem.smooth.value(x_mid)
    grad_mid = problem.smooth.grad(x_mid)

    disp = y_mid - x_mid
    dn2 = disp.norm() ** 2
    if dn2 == 0.0:
        floor = 0.0
    else:
        floor = max(
            2.0 * ((f_mid + grad_mid.inner(disp)) - problem.smooth.value(y_mid)) / dn2,
            0.0,
        )

    step_start = None
    if config.bb and state.bb_s is not None:
        step_start = bb_stepsize(
            state.bb_s, state.bb_g, 1.0 / config.lipschitz_init
        )

    found = model_fit_search(
        problem,
        x_mid,
        state.step,
        state.weight,
        mom,
        floor,
        config.stepsize_shrink,
        step_start=step_start,
        max_passes=config.max_inner_per_outer,
        f_mid=f_mid,
        grad_mid=grad_mid,
    )

    coeff = 1.0 / found.step + 2.0 * found.weight / mom
    grad_y = problem.smooth.grad(found.y)
    v = coeff * (x_mid - found.y) + grad_y - grad_mid

    blend = 2.0 * found.weight * found.step
    x_hat = (1.0 / (blend + 1.0)) * ((mom + blend) * found.y - (mom - 1.0) * state.y)
    x_next = problem.omega.project(x_hat)

    new_state = replace(
        state,
        k=state.k + 1,
        acc=acc_next,
        x=x_next,
        y=found.y,
        step=found.step,
        weight=found.weight,
        resolvents=state.resolvents + found.passes,
        mom=mom,
        step_in=state.step,
        x_mid=x_mid,
        grad_mid=grad_mid,
        grad_y=grad_y,
        curvature=found.curvature,
        weight_floor=floor,
        f_y=found.f_y,
        passes=found.passes,
        bb_s=x_mid - found.y,
        bb_g=grad_mid - grad_y,
    )
    return new_state, v


def restart_if_ascent(
    state: AdaptiveState,
    y_prev: Point,
    phi_prev: float,
    phi_new: float,
    step_init: float,
) -> Tuple[AdaptiveState, bool]:
    """Reject the latest iterate if it did not decrease the objective.

    On a restart (phi_new >= phi_prev, inclusive) the iterate reverts to
    the previous one, the momentum recursion is reseeded from it, and the
    stepsize returns to its initial value; the weak-convexity weight, the
    iteration counter, and the work counters are kept.  Secant caches are
    cleared.
    """
    if phi_new < phi_prev:
        return state, False
    return (
        replace(
            state,
            x=y_prev,
            y=y_prev,
            anchor=y_prev,
            acc=ACCUMULATOR_INIT,
            step=step_init,
            bb_s=None,
            bb_g=None,
        ),
        True,
    )


def init_state(problem: ProblemInstance, config: AdaptiveConfig) -> AdaptiveState:
    y0 = problem.initial_point
    return AdaptiveState(
        k=0,
        acc=ACCUMULATOR_INIT,
        x=y0,
        y=y0,
        anchor=y0,
        step=1.0 / config.lipschitz_init,
        weight=config.weak_convexity_init,
    )


def run_adaptive(problem: ProblemInstance, config: AdaptiveConfig) -> SolverResult:
    """Run the adaptive solver until termination or the outer budget.

    The stationarity check runs before the restart rule: an iterate whose
    residual meets the tolerance is a valid output even if it increased
    the objective.  On budget exhaustion the best iterate (smallest
    residual norm) is returned.
    """
    state = init_state(problem, config)
    step_init = 1.0 / config.lipschitz_init
    grad0 = problem.smooth.grad(problem.initial_point)
    rel_scale = grad0.norm() + 1.0

    grad_evals = 1
    projections = 0
    restarts = 0
    best: Optional[Tuple[float, Point, Point]] = None
    trajectory = [] if config.log_trajectory else None
    status = STATUS_MAX_ITER

    need_phi = config.restart or config.log_trajectory
    phi_prev = problem.objective(problem.initial_point) if config.restart else math.nan

    for _ in range(config.max_outer):
        y_prev = state.y
        state, v = adaptive_step(problem, config, state)
        grad_evals += 2
        projections += 1
        v_norm = v.norm()

        phi_new = math.nan
        if need_phi:
            phi_new = state.f_y + problem.convex_part.value(state.y)

        # Record fields must come from the post-step state: a restart below
        # would overwrite the accepted stepsize and iterate.
        rec = _record(state, v_norm, phi_new) if trajectory is not None else None

        if best is None or v_norm < best[0]:
            best = (v_norm, state.y, v)

        if config.termination.satisfied(v_norm, rel_scale):
            status = STATUS_CONVERGED
            best = (v_norm, state.y, v)
            if rec is not None:
                trajectory.append(rec)
            break

        if config.restart:
            state, restarted = restart_if_ascent(
                state, y_prev, phi_prev, phi_new, step_init
            )
            if restarted:
                restarts += 1
                if rec is not None:
                    rec.restarted = True
            else:
                phi_prev = phi_new

        if rec is not None:
            trajectory.append(rec)

    if best is None:
        y_hat, v_hat, v_norm = problem.initial_point, None, math.inf
    else:
        v_norm, y_hat, v_hat = best

    return SolverResult(
        y_hat=y_hat,
        v_hat=v_hat,
        status=status,
        iterations=state.k,
        resolvent_evals=state.resolvents,
        grad_evals=grad_evals,
        projections=projections,
        v_norm=v_norm,
        rel_residual=v_norm / rel_scale if math.isfinite(v_norm) else math.inf,
        objective=problem.objective(y_hat),
        restarts=restarts,
        trajectory=trajectory,
    )


def _record(state: AdaptiveState, v_norm: float, phi_new: float) -> TrajectoryRecord:
    disp = (state.y - state.x_mid).norm() if state.x_mid is not None else math.nan
    lips_ratio = math.nan
    if disp and disp > 0:
        lips_ratio = (state.grad_y - state.grad_mid).norm() / disp
    return TrajectoryRecord(
        k=state.k,
        v_norm=v_norm,
        objective=phi_new,
        step=state.step,
        step_in=state.step_in,
        weight=state.weight,
        momentum=state.mom,
        curvature=state.curvature,
        weight_floor=state.weight_floor,
        resolvents=state.resolvents,
        lipschitz_ratio=lips_ratio,
    )
