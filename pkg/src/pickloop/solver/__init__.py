"""Exact, heuristic and exhaustive solvers for storage-assignment models, plus MPS export."""

from pickloop.solver.bnb import BranchAndBound, solve_exact
from pickloop.solver.common import SolveControl, SolverError
from pickloop.solver.heuristic import fractional_bound, solve_heuristic
from pickloop.solver.mps import export_mps, render_mps
from pickloop.solver.oracle import brute_force_oracle


def solve(model, control: SolveControl | None = None):
    """Dispatch on ``control.mode``."""
    control = control or SolveControl()
    if control.mode == "heuristic":
        return solve_heuristic(model, control)
    if control.mode == "oracle":
        return brute_force_oracle(model)
    return solve_exact(model, control)


__all__ = [
    "BranchAndBound", "SolveControl", "SolverError", "brute_force_oracle", "export_mps",
    "fractional_bound", "render_mps", "solve", "solve_exact", "solve_heuristic",
]
