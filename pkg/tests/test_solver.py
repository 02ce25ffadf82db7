import math

import numpy as np
import pytest

from pickloop.core import Instance, Sku, ValidationError
from pickloop.evaluate import audit_assignment
from pickloop.layout import Layout, Shelf, scale_layout
from pickloop.model import SolveParams, build_assignment_stage, build_integrated, build_robust
from pickloop.scenarios import selection_trap
from pickloop.solver import (SolveControl, SolverError, brute_force_oracle, export_mps, fractional_bound,
                             render_mps, solve, solve_exact, solve_heuristic)
from pickloop.solver.mps import read_mps_summary
from pickloop.synth import GeneratorConfig, generate_instance, tiny_instance

REFERENCE_PLAN = (("A", "r2"), ("B", "r1"))


@pytest.mark.parametrize("solver", [solve_exact, solve_heuristic, brute_force_oracle])
def test_reference_optimum(pair, pair_params, solver):
    inst, layout = pair
    sol = solver(build_integrated(inst, layout, pair_params))
    assert sol.objective == pytest.approx(1.775, abs=1e-12)
    assert tuple(map(tuple, sol.placements)) == REFERENCE_PLAN
    if solver is not solve_heuristic:
        assert sol.status == "optimal"
        assert sol.gap == pytest.approx(0.0, abs=1e-12)


def test_single_sku_with_zero_alpha_scores_its_importance():
    inst = Instance((Sku.from_day_picks("a", 0.37, 100, 50, [3] * 6),), 20)
    layout = Layout(1, (Shelf("r", 1, 250, 100, 1.5),))
    sol = solve_exact(build_integrated(inst, layout, SolveParams(alpha=0.0)))
    assert sol.objective == pytest.approx(0.37)
    assert sol.assignment == {"a": "r"}


@pytest.mark.parametrize("solver", [solve_exact, brute_force_oracle])
def test_over_capacity_mandatory_stage_is_infeasible(solver):
    inst, layout = selection_trap()
    model = build_assignment_stage(inst, layout, SolveParams(), {"X", "Y", "Z"}, allow_removal=False)
    sol = solver(model)
    assert sol.status == "infeasible"
    assert sol.placements == ()


def test_heuristic_without_clean_plan_reports_time_limit():
    inst, layout = selection_trap()
    # X and Y alone cannot be balanced within 1%
    model = build_assignment_stage(inst, layout, SolveParams(), {"X", "Y"}, allow_removal=False)
    sol = solve_heuristic(model)
    assert sol.status == "time_limit"
    assert sol.placements == ()


def test_heuristic_never_beats_exact_on_tiny_instances():
    for seed in range(30):
        inst, layout = tiny_instance(seed)
        params = SolveParams(alpha=1.0, delta=0.3, delta_day=0.5)
        model = build_integrated(inst, layout, params)
        exact = solve_exact(model, SolveControl(gap_target=0.0))
        heur = solve_heuristic(model)
        assert heur.objective <= exact.objective + 1e-9
        assert exact.objective <= heur.bound + 1e-9
        if heur.placements:
            assert audit_assignment(inst, layout, heur, params) == []


@pytest.fixture(scope="module")
def medium():
    inst = generate_instance(GeneratorConfig(n_skus=200, seed=11))
    return inst, scale_layout(2), SolveParams()


def test_heuristic_close_to_exact_on_generated_instance(medium):
    inst, layout, params = medium
    model = build_integrated(inst, layout, params)
    heur = solve_heuristic(model, SolveControl(mode="heuristic", time_limit_s=20))
    exact = solve_exact(model, SolveControl(gap_target=0.01, time_limit_s=30))
    assert audit_assignment(inst, layout, heur, params) == []
    assert audit_assignment(inst, layout, exact, params) == []
    assert heur.objective >= 0.95 * exact.objective
    # the pooled LP bound certifies both
    assert exact.objective <= heur.bound + 1e-6
    assert heur.objective >= 0.95 * heur.bound


def test_robust_heuristic_is_audit_clean_per_day(medium):
    inst, layout, params = medium
    sol = solve_heuristic(build_robust(inst, layout, params), SolveControl(mode="heuristic", time_limit_s=20))
    assert sol.n_selected > 0
    assert audit_assignment(inst, layout, sol, params, per_day=True) == []


def test_fractional_bound_dominates_oracle():
    for seed in range(20):
        inst, layout = tiny_instance(seed)
        model = build_integrated(inst, layout, SolveParams(alpha=2.0, delta=1.0))
        assert brute_force_oracle(model).objective <= fractional_bound(model) + 1e-9


def test_exact_is_deterministic(medium):
    inst, layout, params = medium
    model = build_integrated(inst, layout, params)
    runs = [solve_exact(model, SolveControl(gap_target=0.02, time_limit_s=30)) for _ in range(2)]
    assert runs[0].placements == runs[1].placements
    assert runs[0].objective == runs[1].objective


def test_dispatch_by_mode(pair, pair_params):
    inst, layout = pair
    model = build_integrated(inst, layout, pair_params)
    for mode in ("exact", "heuristic", "oracle"):
        assert solve(model, SolveControl(mode=mode)).objective == pytest.approx(1.775)


def test_oracle_guards_candidate_count():
    inst = generate_instance(GeneratorConfig(n_skus=30, seed=1))
    model = build_integrated(inst, scale_layout(1), SolveParams(delta=1.0))
    with pytest.raises(SolverError):
        brute_force_oracle(model)


def test_control_validation():
    with pytest.raises(ValidationError):
        SolveControl(mode="magic")
    with pytest.raises(ValidationError):
        SolveControl(time_limit_s=0)


# --- MPS export --------------------------------------------------------------

def test_reference_mps_sections(pair, pair_params):
    inst, layout = pair
    text = render_mps(build_integrated(inst, layout, pair_params))
    lines = text.splitlines()
    assert lines[lines.index("RHS") + 1:lines.index("BOUNDS")] == [
        "    RHS       R0000001             1   R0000002             1",
        "    RHS       R0000010           170   R0000011           170",
    ]
    assert lines[lines.index("BOUNDS") + 1:] == [
        " BV BND       C0000001", " BV BND       C0000002", " BV BND       C0000003",
        " BV BND       C0000004", " FX BND       C0000005             1", "ENDATA",
    ]
    # objective negated for a minimising reader
    assert "    C0000003  OBJ              -1.15   R0000002             1" in lines
    assert read_mps_summary(text) == {"columns": 6, "rows": 11, "rhs_nonzeros": 4}


def test_mps_export_writes_file(tmp_path, pair, pair_params):
    inst, layout = pair
    model = build_integrated(inst, layout, pair_params)
    n = export_mps(model, tmp_path / "m.mps")
    data = (tmp_path / "m.mps").read_bytes()
    assert n == len(data)
    assert data.decode() == render_mps(model)


def test_mps_column_values_match_matrix(pair, pair_params):
    inst, layout = pair
    model = build_integrated(inst, layout, pair_params)
    parsed: dict[tuple[str, str], float] = {}
    section = None
    for line in render_mps(model).splitlines():
        if not line.startswith(" "):
            section = line.split()[0] if line and not line.startswith("*") else section
            continue
        if section == "COLUMNS":
            f = line.split()
            for name, val in zip(f[1::2], f[2::2]):
                parsed[f[0], name] = float(val)
    A = model.A.toarray()
    for (col, row), val in parsed.items():
        j = int(col[1:]) - 1
        expected = -model.objective[j] if row == "OBJ" else A[int(row[1:]) - 1, j]
        assert math.isclose(val, expected, rel_tol=1e-12)
    assert len(parsed) == np.count_nonzero(A) + np.count_nonzero(model.objective)


@pytest.mark.parametrize("solver", [solve_exact, solve_heuristic, brute_force_oracle])
def test_model_without_placements_gives_empty_plan(solver):
    inst = Instance((Sku.from_day_picks("t", 0.5, 900, 50, [1] * 6),), 20)
    layout = Layout(1, (Shelf("r", 1, 250, 100, 1.0),))
    sol = solver(build_robust(inst, layout, SolveParams()))
    assert sol.placements == ()
    assert sol.objective == 0.0
