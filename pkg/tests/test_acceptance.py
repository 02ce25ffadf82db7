"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import time

from pickloop import io
from pickloop.cli import main
from pickloop.core import DAYS, Solution
from pickloop.layout import scale_layout
from pickloop.evaluate import FAMILIES, audit_assignment, combine, evaluate
from pickloop.model import SolveParams, build_integrated, build_robust, model_stats
from pickloop.pipeline import run_mode
from pickloop.scenarios import friday_clusters, reference_pair, selection_trap
from pickloop.solver import SolveControl, brute_force_oracle, export_mps, render_mps, solve_exact
from pickloop.solver.mps import read_mps_summary
from pickloop.synth import GeneratorConfig, calibration_report, generate_instance, tiny_instance

from conftest import audit_fixture, mutations, record_criterion

EXACT = SolveControl(gap_target=0.0)


def test_criterion_1_objective_combiner():
    rows = [(26.56, 0.1864, 73.165), (26.49, 0.1857, 72.916)]
    got = [combine(p1, p2, 250.0) for p1, p2, _ in rows]
    errs = [abs(g - ref) for g, (_, _, ref) in zip(got, rows)]
    ok = all(e <= 0.01 for e in errs)
    record_criterion(1, "objective combiner reproduces reported totals", ok,
                     f"{got[0]:.3f} vs 73.165, {got[1]:.3f} vs 72.916, max err {max(errs):.4f}")
    assert ok


def _oracle_params(seed: int) -> tuple[SolveParams, bool]:
    robust = seed % 4 == 0
    return SolveParams(alpha=float(seed % 3), delta=(0.1, 0.3, 1.0)[seed % 3], delta_day=0.5), robust


def test_criterion_2_oracle_equivalence():
    start = time.perf_counter()
    mismatches, audit_failures, nonempty = [], [], 0
    for seed in range(100):
        inst, layout = tiny_instance(seed)
        params, robust = _oracle_params(seed)
        model = (build_robust if robust else build_integrated)(inst, layout, params)
        exact = solve_exact(model, EXACT)
        oracle = brute_force_oracle(model)
        if exact.objective != oracle.objective:
            mismatches.append(seed)
        nonempty += bool(exact.placements)
        if audit_assignment(inst, layout, exact, params, per_day=robust):
            audit_failures.append(seed)
    elapsed = time.perf_counter() - start
    ok = not mismatches and not audit_failures and elapsed < 60
    record_criterion(2, "exact solver equals exhaustive oracle on 100 tiny instances", ok,
                     f"{len(mismatches)} mismatches, {len(audit_failures)} audit failures, "
                     f"{nonempty} nonempty plans, {elapsed:.1f}s")
    assert ok, (mismatches, audit_failures, elapsed)


def test_criterion_3_integrated_dominates_sequential():
    start = time.perf_counter()
    worse = []
    strict_seeds = 0
    for seed in range(200, 225):
        inst, layout = tiny_instance(seed)
        params = SolveParams(alpha=250.0, delta=(0.05, 0.2, 0.5)[seed % 3], gap_target=0.0)
        integ = run_mode(inst, layout, params, "integrated", EXACT).solution
        seq = run_mode(inst, layout, params, "sequential", EXACT).solution
        if not integ.objective >= seq.objective:
            worse.append(seed)
        strict_seeds += integ.objective > seq.objective
    inst, layout = selection_trap()
    params = SolveParams(delta=0.01, gap_target=0.0)
    trap_integ = run_mode(inst, layout, params, "integrated", EXACT).solution.objective
    trap_seq = run_mode(inst, layout, params, "sequential", EXACT).solution.objective
    elapsed = time.perf_counter() - start
    ok = not worse and trap_integ > trap_seq and elapsed < 120
    record_criterion(3, "integrated plan never loses to the two-stage plan", ok,
                     f"{len(worse)} violations in 25, strict on {strict_seeds} random seeds, "
                     f"constructed case {trap_integ:.3f} > {trap_seq:.3f}, {elapsed:.1f}s")
    assert ok


def test_criterion_4_robust_plan_balances_every_day():
    start = time.perf_counter()
    inst, layout = friday_clusters()
    params = SolveParams(alpha=1.0, delta=0.01, delta_day=0.01, gap_target=0.0)
    agnostic = run_mode(inst, layout, params, "integrated", EXACT).solution
    robust = run_mode(inst, layout, params, "robust", EXACT).solution
    rep_a = evaluate(inst, layout, agnostic, params, per_day=True)
    rep_r = evaluate(inst, layout, robust, params, per_day=True)
    loss = (agnostic.objective - robust.objective) / agnostic.objective
    elapsed = time.perf_counter() - start
    ok = (any(v.family == "balance_day" for v in rep_a.audit) and rep_a.max_day_dev > 0.01
          and rep_r.max_day_dev <= 0.01 and rep_r.audit == [] and 0 <= loss <= 0.01 and elapsed < 60)
    record_criterion(4, "robust plan meets per-day balance at small cost", ok,
                     f"agnostic max day dev {rep_a.max_day_dev:.2%}, robust {rep_r.max_day_dev:.2%}, "
                     f"objective loss {loss:.3%}, {elapsed:.1f}s")
    assert ok


def test_criterion_5_feasibility_nesting():
    violations, nonempty = [], 0
    for seed in range(100):
        inst, layout = tiny_instance(seed)
        d = (0.1, 0.3, 0.6, 1.0)[seed % 4]
        params = SolveParams(alpha=float(1 + seed % 2), delta=d, delta_day=d)
        sol = solve_exact(build_robust(inst, layout, params), EXACT)
        nonempty += bool(sol.placements)
        if audit_assignment(inst, layout, sol, params, per_day=False):
            violations.append(seed)
    ok = not violations
    record_criterion(5, "per-day balanced plans are balanced on average", ok,
                     f"{len(violations)} violations over 100 instances, {nonempty} nonempty plans")
    assert ok


def test_criterion_6_generator_calibration():
    start = time.perf_counter()
    inst = generate_instance(GeneratorConfig(n_skus=4693))
    rep = calibration_report(inst)
    elapsed = time.perf_counter() - start
    shares = [rep[f"share_{d}"] for d in DAYS]
    checks = {
        "log score mean": abs(rep["log_score_mean"] + 7.81) <= 0.1,
        "log score sd": abs(rep["log_score_sd"] - 2.34) <= 0.1,
        "type-2 fraction": abs(rep["type2_only_frac"] - 0.174) <= 0.02,
        "level correlation": abs(rep["score_picks_corr"] - 0.718) <= 0.05,
        "day shares": all(0.15 <= s <= 0.18 for s in shares),
        "runtime": elapsed < 10,
    }
    ok = all(checks.values())
    record_criterion(6, "generator matches calibration targets", ok,
                     f"mean {rep['log_score_mean']:.3f}, sd {rep['log_score_sd']:.3f}, "
                     f"type-2 {rep['type2_only_frac']:.3f}, corr {rep['score_picks_corr']:.3f}, "
                     f"shares {min(shares):.3f}-{max(shares):.3f}, {elapsed:.1f}s"
                     + ("" if ok else f", failed: {[k for k, v in checks.items() if not v]}"))
    assert ok


def test_criterion_7_mutation_audit():
    inst, layout, base, params = audit_fixture()
    clean = Solution.from_mapping(base)
    baseline = audit_assignment(inst, layout, clean, params) + audit_assignment(inst, layout, clean, params,
                                                                                 per_day=True)
    outcomes = {}
    for family, sol in mutations(base).items():
        found = audit_assignment(inst, layout, sol, params, per_day=family == "balance_day")
        outcomes[family] = [v.family for v in found]
    ok = baseline == [] and all(v == [k] for k, v in outcomes.items()) \
        and set(outcomes) == set(FAMILIES) - {"reference"}
    record_criterion(7, "each targeted mutation trips exactly its own family", ok,
                     ", ".join(f"{k}:{len(v)}" for k, v in outcomes.items()))
    assert ok, outcomes


def test_criterion_8_determinism(tmp_path):
    files_equal = True
    for args in (["--n", "4693", "--seed", "7"], ["--n", "300", "--seed", "21", "--stations", "2"]):
        outs = []
        for rep in ("a", "b"):
            out = tmp_path / f"{args[1]}-{rep}"
            assert main(["generate", *args, "--out", str(out)]) == 0
            outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        files_equal &= outs[0] == outs[1]
    solve_equal = True
    cases = [tiny_instance(3), (generate_instance(GeneratorConfig(n_skus=200, seed=11)), scale_layout(2))]
    for inst, layout in cases:
        model = build_integrated(inst, layout, SolveParams())
        control = SolveControl(gap_target=0.02, time_limit_s=60, workers=1, seed=5)
        blobs = {io.solution_bytes(solve_exact(model, control)) for _ in range(2)}
        solve_equal &= len(blobs) == 1
    ok = files_equal and solve_equal
    record_criterion(8, "generate and exact solve are byte-reproducible", ok,
                     f"generated files identical: {files_equal}, solutions identical: {solve_equal}")
    assert ok


def test_criterion_9_mps_round_trip(tmp_path):
    inst, layout = reference_pair()
    params = SolveParams(alpha=1.0, delta=1.0)
    model = build_integrated(inst, layout, params)
    stats = model_stats(model)
    export_mps(model, tmp_path / "a.mps")
    export_mps(build_integrated(inst, layout, params), tmp_path / "b.mps")
    first = (tmp_path / "a.mps").read_bytes()
    summary = read_mps_summary(first.decode())
    ok = (summary["columns"] == 6 == stats["variables"] and summary["rows"] == stats["constraints"]
          and summary["rhs_nonzeros"] == stats["rhs_nonzeros"]
          and first == (tmp_path / "b.mps").read_bytes() == render_mps(model).encode())
    record_criterion(9, "MPS export of the reference model is consistent and stable", ok,
                     f"{summary['columns']} columns, {summary['rows']} rows, "
                     f"{summary['rhs_nonzeros']} nonzero RHS, re-export identical: "
                     f"{first == (tmp_path / 'b.mps').read_bytes()}")
    assert ok
