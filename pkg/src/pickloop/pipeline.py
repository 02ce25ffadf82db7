"""Run the integrated, robust and two-stage planning flows end to end."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

from pickloop.core import Instance, Solution
from pickloop.evaluate import EvaluationReport, evaluate
from pickloop.layout import Layout
from pickloop.model import (InfeasibleModelError, MilpModel, SolveParams, build_assignment_stage,
                            build_integrated, build_robust, build_selection_stage)
from pickloop.solver import SolveControl, solve

MODES = ("integrated", "robust", "sequential")


@dataclass
class ModeResult:
    mode: str
    solution: Solution
    report: EvaluationReport | None = None
    stages: dict = field(default_factory=dict)
    error: str | None = None


def control_from(params: SolveParams, solver: str = "exact", workers: int = 1) -> SolveControl:
    return SolveControl(mode=solver, gap_target=params.gap_target, time_limit_s=params.time_limit_s,
                        seed=params.seed, workers=workers)


def build_mode_model(instance: Instance, layout: Layout, params: SolveParams, mode: str) -> MilpModel:
    """The single model behind a one-shot mode (the two-stage flow builds two)."""
    if mode == "integrated":
        return build_integrated(instance, layout, params)
    if mode == "robust":
        return build_robust(instance, layout, params)
    if mode == "sequential":
        return build_selection_stage(instance, layout, params)
    raise ValueError(f"unknown mode {mode!r}")


def solve_sequential(instance: Instance, layout: Layout, params: SolveParams,
                     control: SolveControl) -> tuple[Solution, dict]:
    """Select by importance score alone, then place the selection with removal allowed."""
    start = time.perf_counter()
    first = solve(build_selection_stage(instance, layout, params), control)
    stages = {"stage1_objective": first.objective, "stage1_status": first.status,
              "stage1_selected": first.n_selected}
    if first.status == "infeasible":
        return first, stages
    remaining = max(control.time_limit_s - first.runtime_s, 1e-3)
    second_model = build_assignment_stage(instance, layout, params, first.assignment, allow_removal=True)
    second = solve(second_model, replace(control, time_limit_s=remaining))
    stages.update({"stage2_objective": second.objective, "stage2_status": second.status})
    meta = dict(second.meta, **stages)
    return replace(second, runtime_s=time.perf_counter() - start, meta=meta), stages


def run_mode(instance: Instance, layout: Layout, params: SolveParams, mode: str,
             control: SolveControl | None = None) -> ModeResult:
    control = control or control_from(params)
    if mode == "sequential":
        solution, stages = solve_sequential(instance, layout, params, control)
    else:
        solution, stages = solve(build_mode_model(instance, layout, params, mode), control), {}
    solution = replace(solution, meta=dict(solution.meta, mode=mode))
    report = evaluate(instance, layout, solution, params, per_day=mode == "robust")
    return ModeResult(mode, solution, report, stages)


def compare_modes(instance: Instance, layout: Layout, params: SolveParams,
                  control: SolveControl | None = None, modes=MODES) -> list[ModeResult]:
    """One result per mode; a failing mode is recorded and the others still run."""
    out = []
    for mode in modes:
        try:
            out.append(run_mode(instance, layout, params, mode, control))
        except (InfeasibleModelError, RuntimeError, ValueError) as exc:
            out.append(ModeResult(mode, Solution(status="infeasible", meta={"mode": mode}), error=str(exc)))
    return out
