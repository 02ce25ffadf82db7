"""Scoring and auditing of storage assignments, computed directly from domain data."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np

from pickloop.core import DAYS, Instance, Solution, ValidationError, Violation, total_picks
from pickloop.layout import Layout
from pickloop.model import SolveParams

AUDIT_RTOL = 1e-9

FAMILIES = ("reference", "uniqueness", "height", "width", "precedence", "balance", "balance_day")


@dataclass
class EvaluationReport:
    part1: float
    part2: float
    combined: float
    alpha: float
    n_selected: int
    station_picks: np.ndarray
    station_picks_by_day: np.ndarray
    deviation: np.ndarray
    deviation_by_day: np.ndarray
    max_rel_dev: float
    max_rel_dev_by_day: dict[str, tuple[float, float]]
    audit: list[Violation] = field(default_factory=list)

    @property
    def max_day_dev(self) -> float:
        return float(np.max(np.abs(self.deviation_by_day))) if self.deviation_by_day.size else 0.0


def _resolve(instance: Instance, layout: Layout, solution: Solution):
    skus = instance.by_id()
    shelves = layout.by_id()
    out = []
    for v, r in solution.assignment.items():
        if v not in skus:
            raise ValidationError(f"solution references unknown SKU {v!r}")
        if r not in shelves:
            raise ValidationError(f"solution references unknown shelf {r!r}")
        out.append((skus[v], shelves[r]))
    return out


def objective_parts(instance: Instance, layout: Layout, solution: Solution,
                    alpha: float) -> tuple[float, float, float]:
    """(importance score sum, efficiency per pick, part1 + alpha * part2)."""
    placed = _resolve(instance, layout, solution)
    if not placed:
        return 0.0, 0.0, 0.0
    part1 = math.fsum(s.score for s, _ in placed)
    part2 = math.fsum(s.picks_avg / r.distance for s, r in placed) / total_picks(instance)
    return part1, part2, combine(part1, part2, alpha)


def combine(part1: float, part2: float, alpha: float) -> float:
    return part1 + alpha * part2


def station_workloads(instance: Instance, layout: Layout,
                      solution: Solution) -> tuple[np.ndarray, np.ndarray]:
    """Average picks per station and the station x weekday pick matrix."""
    K = layout.n_stations
    z = np.zeros(K)
    zt = np.zeros((K, len(DAYS)))
    for s, r in _resolve(instance, layout, solution):
        z[r.station - 1] += s.picks_avg
        zt[r.station - 1] += s.picks_by_day
    return z, zt


def relative_deviation(z: np.ndarray) -> np.ndarray:
    """Deviation of each station from the cross-station mean, column by column.

    Accepts a vector (one period) or a stations x days matrix; periods with no
    picks give zero deviation.
    """
    z = np.asarray(z, dtype=float)
    mean = z.mean(axis=0) if z.size else np.zeros(z.shape[1:])
    with np.errstate(divide="ignore", invalid="ignore"):
        dev = np.where(mean > 0, z / np.where(mean > 0, mean, 1.0) - 1.0, 0.0)
    return dev


def deviation_table(zt: np.ndarray) -> tuple[np.ndarray, dict[str, tuple[float, float]]]:
    dev = relative_deviation(zt)
    extremes = {}
    for t, day in enumerate(DAYS[: dev.shape[1]]):
        col = dev[:, t] if dev.size else np.zeros(1)
        extremes[day] = (float(col.min()), float(col.max()))
    return dev, extremes


def _balance_violations(z: np.ndarray, delta: float, family: str, label: str) -> list[Violation]:
    K = len(z)
    if K == 0:
        return []
    mean = math.fsum(z) / K
    out = []
    for k, zk in enumerate(z, start=1):
        tol = AUDIT_RTOL * max(1.0, mean)
        if zk > (1 + delta) * mean + tol:
            out.append(Violation(family, f"station {k}{label}",
                                 f"workload {zk:g} above {(1 + delta) * mean:g}"))
        elif zk < (1 - delta) * mean - tol:
            out.append(Violation(family, f"station {k}{label}",
                                 f"workload {zk:g} below {(1 - delta) * mean:g}"))
    return out


def audit_assignment(instance: Instance, layout: Layout, solution: Solution,
                     params: SolveParams, per_day: bool = False,
                     balance: bool = True, precedence: bool = True) -> list[Violation]:
    """Check a solution against every constraint family; empty means feasible.

    Repeated entries for one SKU are reported once under ``uniqueness`` and
    only its smallest shelf id is used for the remaining checks.
    """
    skus = instance.by_id()
    shelves = layout.by_id()
    out: list[Violation] = []
    counts = Counter(v for v, _ in solution.placements)
    for v, n in sorted(counts.items()):
        if n > 1:
            out.append(Violation("uniqueness", v, f"assigned to {n} shelves"))
    placed = []
    for v, r in solution.assignment.items():
        if v not in skus or r not in shelves:
            out.append(Violation("reference", v, f"unknown SKU or shelf {r!r}"))
            continue
        placed.append((skus[v], shelves[r]))

    gap = instance.separator_gap_mm
    load: dict[str, float] = defaultdict(float)
    for s, r in placed:
        if s.height_mm > r.height_mm:
            out.append(Violation("height", s.id, f"height {s.height_mm} mm exceeds shelf {r.id} ({r.height_mm} mm)"))
        load[r.id] += s.width_mm + gap
    for r_id, used in sorted(load.items()):
        cap = shelves[r_id].width_mm + gap
        if used > cap:
            out.append(Violation("width", r_id, f"width plus separators {used - gap:g} mm exceeds {shelves[r_id].width_mm} mm"))

    if precedence:
        lo: dict[int, int] = {}
        hi: dict[int, int] = {}
        for s, r in placed:
            lo[s.rank] = min(lo.get(s.rank, r.station), r.station)
            hi[s.rank] = max(hi.get(s.rank, r.station), r.station)
        for o in sorted(hi):
            if o + 1 in lo and hi[o] > lo[o + 1]:
                out.append(Violation("precedence", f"ranks {o}/{o + 1}",
                                     f"rank {o} used up to station {hi[o]} but rank {o + 1} starts at {lo[o + 1]}"))

    if balance:
        valid = Solution(placements=tuple((s.id, r.id) for s, r in placed))
        z, zt = station_workloads(instance, layout, valid)
        if per_day:
            for t, day in enumerate(DAYS):
                out.extend(_balance_violations(zt[:, t], params.delta_day, "balance_day", f" on {day}"))
        else:
            out.extend(_balance_violations(z, params.delta, "balance", ""))
    return out


def evaluate(instance: Instance, layout: Layout, solution: Solution, params: SolveParams,
             per_day: bool = False) -> EvaluationReport:
    part1, part2, combined = objective_parts(instance, layout, solution, params.alpha)
    z, zt = station_workloads(instance, layout, solution)
    dev = relative_deviation(z)
    dev_day, extremes = deviation_table(zt)
    return EvaluationReport(
        part1=part1, part2=part2, combined=combined, alpha=params.alpha,
        n_selected=solution.n_selected, station_picks=z, station_picks_by_day=zt,
        deviation=dev, deviation_by_day=dev_day,
        max_rel_dev=float(np.max(np.abs(dev))) if dev.size else 0.0,
        max_rel_dev_by_day=extremes,
        audit=audit_assignment(instance, layout, solution, params, per_day=per_day),
    )


def distance_histogram(instance: Instance, layout: Layout, solution: Solution,
                       height_cap_mm: int | None = 250, per_day: bool = False) -> list[tuple]:
    """Picks and SKU counts per shelf distance, for SKUs no taller than the cap.

    Rows are ``(distance, picks, n_skus)`` sorted by distance, or
    ``(day, distance, picks, n_skus)`` when ``per_day`` is set.
    """
    acc: dict[tuple, list] = {}
    for s, r in _resolve(instance, layout, solution):
        if height_cap_mm is not None and s.height_mm > height_cap_mm:
            continue
        keys = [((day, r.distance), s.picks_by_day[t]) for t, day in enumerate(DAYS)] if per_day \
            else [((r.distance,), s.picks_avg)]
        for key, p in keys:
            row = acc.setdefault(key, [0.0, 0])
            row[0] += p
            row[1] += 1
    if per_day:
        order = {d: i for i, d in enumerate(DAYS)}
        return [(d, dist, p, n) for (d, dist), (p, n) in sorted(acc.items(), key=lambda kv: (order[kv[0][0]], kv[0][1]))]
    return [(dist, p, n) for (dist,), (p, n) in sorted(acc.items())]
