"""Command-line entry point: generate, solve, evaluate and compare."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from pickloop import io, plotting
from pickloop.core import DAYS, Solution, ValidationError
from pickloop.evaluate import distance_histogram, evaluate
from pickloop.layout import scale_layout
from pickloop.model import InfeasibleModelError, SolveParams
from pickloop.pipeline import MODES, build_mode_model, compare_modes, control_from, run_mode
from pickloop.solver import SolverError, export_mps
from pickloop.synth import GeneratorConfig, calibration_report, generate_instance

log = logging.getLogger("pickloop")

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=250.0, help="weight of the picking-efficiency term")
    p.add_argument("--delta", type=float, default=0.01, help="allowed relative deviation of average workload")
    p.add_argument("--delta-day", type=float, default=0.01, help="allowed relative deviation per weekday")
    p.add_argument("--gap", type=float, default=0.005, help="relative optimality gap at which to stop")
    p.add_argument("--time-limit", type=float, default=60.0, help="wall-clock limit in seconds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1, help="parallel branch-and-bound workers")


def _params(args) -> SolveParams:
    return SolveParams(alpha=args.alpha, delta=args.delta, delta_day=args.delta_day, gap_target=args.gap,
                       time_limit_s=args.time_limit, seed=args.seed)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pickloop", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic instance, a layout and a calibration table")
    g.add_argument("--n", type=int, default=GeneratorConfig.n_skus, help="number of SKUs")
    g.add_argument("--seed", type=int, default=GeneratorConfig.seed)
    g.add_argument("--stations", type=int, default=8)
    g.add_argument("--out", default=".", help="output directory")

    s = sub.add_parser("solve", help="solve one planning mode and write a solution file")
    s.add_argument("instance")
    s.add_argument("layout")
    s.add_argument("--mode", choices=MODES, default="integrated")
    s.add_argument("--solver", choices=("exact", "heuristic", "oracle", "export"), default="exact")
    _add_params(s)
    s.add_argument("--out", default=None, help="solution (or MPS) file path")

    e = sub.add_parser("evaluate", help="score and audit a solution, writing CSV tables and figures")
    e.add_argument("instance")
    e.add_argument("layout")
    e.add_argument("solution")
    e.add_argument("--per-day", action="store_true", help="audit balance on every weekday")
    _add_params(e)
    e.add_argument("--out", default=".", help="report directory")

    c = sub.add_parser("compare", help="run integrated, sequential and robust planning on one instance")
    c.add_argument("instance")
    c.add_argument("layout")
    c.add_argument("--solver", choices=("exact", "heuristic", "oracle"), default="exact")
    _add_params(c)
    c.add_argument("--out", default=".", help="report directory")
    return parser


def cmd_generate(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    inst = generate_instance(GeneratorConfig(n_skus=args.n, seed=args.seed))
    path = io.write_instance(inst, out / "instance.json")
    io.write_layout(scale_layout(args.stations), out / "layout.json")
    report = calibration_report(inst) if len(inst) else {}
    io.write_csv(out / "calibration.csv", ["statistic", "value"], report.items())
    print(f"wrote {path} ({len(inst)} SKUs), layout.json, calibration.csv")
    return path


def cmd_solve(args) -> tuple[Path, Solution | None]:
    inst, layout = io.read_instance(args.instance), io.read_layout(args.layout)
    params = _params(args)
    if args.solver == "export":
        out = Path(args.out or f"{args.mode}.mps")
        n = export_mps(build_mode_model(inst, layout, params, args.mode), out)
        print(f"wrote {out} ({n} bytes)")
        return out, None
    result = run_mode(inst, layout, params, args.mode, control_from(params, args.solver, args.workers))
    sol = result.solution
    sol = Solution(sol.placements, sol.objective, sol.bound, sol.gap, sol.runtime_s, sol.status,
                   dict(sol.meta, solver=args.solver, params=vars(params)))
    out = io.write_solution(sol, args.out or "solution.json")
    print(f"{args.mode}/{args.solver}: status={sol.status} objective={sol.objective:.6f} "
          f"bound={sol.bound:.6f} gap={sol.gap:.4%} selected={sol.n_selected} -> {out}")
    return out, sol


def write_evaluation(inst, layout, sol, params, per_day: bool, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    rep = evaluate(inst, layout, sol, params, per_day=per_day)
    paths = [io.write_csv(out / "objective.csv",
                          ["n_selected", "part1", "part2", "alpha", "combined", "max_avg_dev", "max_day_dev"],
                          [[rep.n_selected, rep.part1, rep.part2, rep.alpha, rep.combined,
                            rep.max_rel_dev, rep.max_day_dev]])]
    rows = [[f"K{k + 1}", *map(float, rep.deviation_by_day[k])] for k in range(len(rep.deviation_by_day))]
    rows.append(["min", *(rep.max_rel_dev_by_day[d][0] for d in DAYS)])
    rows.append(["max", *(rep.max_rel_dev_by_day[d][1] for d in DAYS)])
    paths.append(io.write_csv(out / "deviation_by_day.csv", ["station", *DAYS], rows))
    paths.append(io.write_csv(out / "station_workload.csv", ["station", "average", *DAYS],
                              [[f"K{k + 1}", float(rep.station_picks[k]), *map(float, rep.station_picks_by_day[k])]
                               for k in range(len(rep.station_picks))]))
    hist = distance_histogram(inst, layout, sol)
    paths.append(io.write_csv(out / "distance_histogram.csv", ["distance_m", "picks", "n_skus"], hist))
    paths.append(io.write_csv(out / "distance_histogram_by_day.csv", ["day", "distance_m", "picks", "n_skus"],
                              distance_histogram(inst, layout, sol, per_day=True)))
    paths.append(io.write_csv(out / "audit.csv", ["family", "subject", "message"],
                              [[v.family, v.subject, v.message] for v in rep.audit]))
    paths.append(plotting.plot_distance_histogram(hist, out / "distance_histogram.png"))
    paths.append(plotting.plot_day_deviation(rep.deviation_by_day, out / "deviation_by_day.png",
                                             params.delta_day))
    print(f"combined={rep.combined:.6f} part1={rep.part1:.6f} part2={rep.part2:.6f} "
          f"selected={rep.n_selected} max_day_dev={rep.max_day_dev:.4%} violations={len(rep.audit)}")
    for v in rep.audit[:20]:
        print(f"  {v}")
    return paths


def cmd_evaluate(args) -> list[Path]:
    inst, layout = io.read_instance(args.instance), io.read_layout(args.layout)
    sol = io.read_solution(args.solution)
    return write_evaluation(inst, layout, sol, _params(args), args.per_day, Path(args.out))


COMPARE_HEADER = ["mode", "status", "n_selected", "part1", "part2", "combined", "max_avg_dev",
                  "max_day_dev", "runtime_s", "gap", "error"]


def cmd_compare(args) -> Path:
    inst, layout = io.read_instance(args.instance), io.read_layout(args.layout)
    params = _params(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = compare_modes(inst, layout, params, control_from(params, args.solver, args.workers),
                            modes=("integrated", "sequential", "robust"))
    rows = []
    for r in results:
        rep, sol = r.report, r.solution
        if rep is None:
            rows.append([r.mode, sol.status, 0, "", "", "", "", "", "", "", r.error or ""])
            continue
        rows.append([r.mode, sol.status, rep.n_selected, rep.part1, rep.part2, rep.combined, rep.max_rel_dev,
                     rep.max_day_dev, sol.runtime_s, sol.gap, ""])
        print(f"{r.mode:<11} status={sol.status:<11} combined={rep.combined:.6f} "
              f"max_avg_dev={rep.max_rel_dev:.4%} max_day_dev={rep.max_day_dev:.4%}")
    path = io.write_csv(out / "comparison.csv", COMPARE_HEADER, rows)
    ok = [r for r in results if r.report is not None]
    plotting.plot_comparison([r.mode for r in ok], [r.report.part1 for r in ok],
                             [r.report.alpha * r.report.part2 for r in ok], out / "comparison.png")
    return path


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "generate":
            cmd_generate(args)
        elif args.command == "solve":
            _, sol = cmd_solve(args)
            if sol is not None and sol.status == "infeasible":
                return EXIT_INFEASIBLE
        elif args.command == "evaluate":
            cmd_evaluate(args)
        elif args.command == "compare":
            cmd_compare(args)
    except InfeasibleModelError as exc:
        print(f"pickloop: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except io.FileFormatError as exc:
        print(f"pickloop: bad file: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"pickloop: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValidationError, SolverError) as exc:
        print(f"pickloop: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
