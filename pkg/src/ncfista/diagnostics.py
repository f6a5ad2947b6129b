"""Trajectory invariant checks for solver runs on calibrated problems.

Each check inspects the per-iteration records of a finished run and
returns a signed margin (nonnegative means the invariant held, with the
stated tolerance already folded in).  Checks that depend on ground-truth
curvature are skipped when the problem carries no metadata; checks whose
derivation breaks under secant seeding or restarts are scoped to the
variants where they are valid:

* the stepsize ordering and the stepsize/weight bounds assume the search
  starts from the previously accepted stepsize, so they are skipped for
  secant-seeded runs;
* the resolvent budget assumes the stepsize never resets, so it applies
  only to runs without restarts and without secant seeding;
* the frozen-weight check applies when the initial weight already bounds
  the weak-convexity modulus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

from .adaptive import ACCUMULATOR_INIT, FIT_MARGIN, AdaptiveConfig
from .nc_fista import NcFistaConfig, damping_ratio
from .oracles import ProblemInstance, residual_check
from .results import SolverResult

_REL_EPS = 1e-12
_RANGE_SLACK = 1.0001  # multiplicative slack on curvature range checks
_RESIDUAL_TOL = 1e-8


@dataclass
class CheckOutcome:
    name: str
    passed: bool
    margin: float
    detail: str = ""

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag} {self.name:28s} margin={self.margin:+.3e} {self.detail}"


def _outcome(name: str, margin: float, detail: str = "") -> CheckOutcome:
    return CheckOutcome(name=name, passed=margin >= 0, margin=margin, detail=detail)


def check_common(problem: ProblemInstance, result: SolverResult) -> List[CheckOutcome]:
    """Termination and final-inclusion checks shared by all solvers."""
    out = [
        _outcome(
            "terminated",
            0.0 if result.converged else -1.0,
            f"status={result.status}, residual={result.v_norm:.3e}",
        )
    ]
    if result.v_hat is None:
        out.append(_outcome("final_residual", -1.0, "no residual available"))
    else:
        ok = residual_check(problem, result.y_hat, result.v_hat, _RESIDUAL_TOL)
        out.append(_outcome("final_residual", 0.0 if ok else -1.0, f"tol={_RESIDUAL_TOL:g}"))
    return out


def _curvature_range(records, lipschitz: float, weak: float) -> CheckOutcome:
    worst = math.inf
    for rec in records:
        if not math.isfinite(rec.curvature):
            continue
        upper = _RANGE_SLACK * lipschitz - rec.curvature
        lower = rec.curvature + _RANGE_SLACK * weak
        worst = min(worst, upper / lipschitz, lower / lipschitz)
    if worst is math.inf:
        return _outcome("model_curvature_range", 0.0, "no curvature samples")
    return _outcome("model_curvature_range", worst, f"n={len(records)}")


def check_nc_run(
    problem: ProblemInstance, result: SolverResult, config: NcFistaConfig
) -> List[CheckOutcome]:
    """Invariants of a fixed-step run (needs a logged trajectory)."""
    records = result.trajectory or []
    out = check_common(problem, result)

    out.append(
        _outcome(
            "resolvent_accounting",
            0.0 if result.resolvent_evals == result.iterations else -1.0,
            f"resolvents={result.resolvent_evals}, iterations={result.iterations}",
        )
    )

    worst = math.inf
    prev_acc = config.accumulator_init
    for rec in records:
        acc_next = rec.momentum**2
        rel = abs(acc_next - prev_acc - rec.momentum) / acc_next
        worst = min(worst, 1e-9 - rel)
        prev_acc = acc_next
    out.append(_outcome("accumulator_identity", 0.0 if not records else worst))

    curv = problem.curvature
    if curv.weak_convexity is not None and records:
        weak_true = curv.weak_convexity
        if config.weak_convexity >= weak_true * (1 - _REL_EPS) and config.weak_convexity > 0:
            damp = damping_ratio(config.accumulator_init)
            m = config.weak_convexity
            worst = min(
                (m * (1 + _REL_EPS) - (weak_true / damp + m / rec.momentum)) / m
                for rec in records
            )
            out.append(_outcome("weak_convexity_inequality", worst))
        if curv.lipschitz is not None:
            out.append(_curvature_range(records, curv.lipschitz, weak_true))
    return out


def resolvent_budget(config: AdaptiveConfig, lipschitz: float, weak: float) -> int:
    """Cap on extra inner passes: every stepsize update shrinks by the
    backtracking factor and every weight update doubles, so only
    logarithmically many can fire over a whole run."""
    step0 = 1.0 / config.lipschitz_init
    theta = config.stepsize_shrink
    lam_term = math.ceil(
        math.log(max(1.0, theta * step0 * lipschitz / FIT_MARGIN)) / math.log(theta)
    )
    m_term = math.ceil(math.log2(max(1.0, 2.0 * weak / config.weak_convexity_init)))
    return lam_term + m_term + 2


def check_adaptive_run(
    problem: ProblemInstance, result: SolverResult, config: AdaptiveConfig
) -> List[CheckOutcome]:
    """Invariants of an adaptive run (needs a logged trajectory)."""
    records = result.trajectory or []
    out = check_common(problem, result)
    if not records:
        return out

    worst = min(
        (FIT_MARGIN * (1 + _REL_EPS) - rec.step * rec.curvature) / FIT_MARGIN
        for rec in records
    )
    out.append(_outcome("fit_condition", worst))

    worst = math.inf
    for rec in records:
        lhs = 2.0 * rec.weight * (rec.step_in - rec.step / rec.momentum)
        rhs = rec.weight_floor * rec.step
        scale = max(1.0, abs(lhs), abs(rhs))
        worst = min(worst, (lhs - rhs) / scale + _REL_EPS)
    out.append(_outcome("floor_condition", worst))

    worst = min(
        (records[j].weight - records[j - 1].weight) / records[j].weight
        for j in range(1, len(records))
    ) if len(records) > 1 else 0.0
    out.append(_outcome("weight_nondecreasing", worst))

    if not config.bb:
        worst = min(
            (rec.step_in * (1 + _REL_EPS) - rec.step) / rec.step_in for rec in records
        )
        out.append(_outcome("step_nonincreasing", worst))

    curv = problem.curvature
    has_truth = curv.lipschitz is not None and curv.weak_convexity is not None
    if has_truth:
        lipschitz, weak = curv.lipschitz, curv.weak_convexity
        out.append(_curvature_range(records, lipschitz, weak))

        worst = min(
            (_RANGE_SLACK * weak - rec.weight_floor) / max(weak, 1.0)
            for rec in records
            if math.isfinite(rec.weight_floor)
        )
        floor_min = min(rec.weight_floor for rec in records if math.isfinite(rec.weight_floor))
        worst = min(worst, floor_min / max(weak, 1.0) + _REL_EPS)
        out.append(_outcome("floor_range", worst))

        if not config.bb:
            step_floor = min(FIT_MARGIN / (config.stepsize_shrink * lipschitz), 1.0 / config.lipschitz_init)
            worst = min((rec.step - step_floor * (1 - 1e-9)) / step_floor for rec in records)
            out.append(_outcome("step_floor", worst))

            cap = max(2.0 * weak, config.weak_convexity_init)
            worst = min((cap * (1 + _REL_EPS) - rec.weight) / cap for rec in records)
            out.append(_outcome("weight_cap", worst))

        if not config.bb and result.restarts == 0:
            budget = resolvent_budget(config, lipschitz, weak)
            extra = result.resolvent_evals - result.iterations
            out.append(
                _outcome(
                    "resolvent_budget",
                    float(budget - extra),
                    f"extra={extra}, budget={budget}",
                )
            )

        if not config.bb and config.weak_convexity_init >= weak:
            frozen = all(rec.weight == config.weak_convexity_init for rec in records)
            out.append(
                _outcome(
                    "weight_frozen",
                    0.0 if frozen else -1.0,
                    f"weight_init={config.weak_convexity_init:g}",
                )
            )
    return out
