"""JSON files for instances, layouts and solutions; CSV writers for reports."""

from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path
from typing import Iterable, Sequence

from pickloop.core import DAYS, Instance, Sku, Solution, ValidationError
from pickloop.layout import Layout, Shelf


class FileFormatError(ValidationError):
    """A file exists but does not hold the expected structure."""


def _dump(obj, path: str | os.PathLike) -> Path:
    path = Path(path)
    text = json.dumps(obj, indent=1, ensure_ascii=False, allow_nan=False) + "\n"
    path.write_text(text, encoding="utf-8")
    return path


def _load(path: str | os.PathLike, kind: str) -> dict:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict) or data.get("format") != kind:
        raise FileFormatError(f"{path}: expected a {kind!r} file")
    return data


def _num(x: float):
    """Integers stay integers in the file; other floats keep full precision."""
    return int(x) if float(x).is_integer() and abs(x) < 2**53 else float(x)


def instance_to_dict(instance: Instance) -> dict:
    skus = []
    for s in instance.skus:
        rec = {"id": s.id, "score": s.score, "height_mm": s.height_mm, "width_mm": s.width_mm,
               "rank": s.rank, "picks_avg": s.picks_avg, "picks_by_day": [_num(p) for p in s.picks_by_day]}
        if s.target_stock is not None:
            rec["target_stock"] = s.target_stock
        skus.append(rec)
    return {"format": "pickloop-instance", "version": 1, "days": list(DAYS),
            "separator_gap_mm": instance.separator_gap_mm, "skus": skus}


def instance_from_dict(data: dict) -> Instance:
    try:
        skus = []
        for rec in data["skus"]:
            days = rec["picks_by_day"]
            sku = Sku.from_day_picks(str(rec["id"]), float(rec["score"]), int(rec["height_mm"]),
                                     int(rec["width_mm"]), days, rank=int(rec.get("rank", 2)),
                                     target_stock=rec.get("target_stock"))
            if "picks_avg" in rec and len(days) == len(DAYS):
                sku = Sku(sku.id, sku.score, sku.height_mm, sku.width_mm, float(rec["picks_avg"]),
                          sku.picks_by_day, sku.rank, sku.target_stock)
            skus.append(sku)
        return Instance(tuple(skus), separator_gap_mm=int(data.get("separator_gap_mm", 0)))
    except (KeyError, TypeError) as exc:
        raise FileFormatError(f"instance record missing or malformed field: {exc}") from exc


def write_instance(instance: Instance, path) -> Path:
    return _dump(instance_to_dict(instance), path)


def read_instance(path) -> Instance:
    return instance_from_dict(_load(path, "pickloop-instance"))


def layout_to_dict(layout: Layout) -> dict:
    return {"format": "pickloop-layout", "version": 1, "stations": layout.n_stations,
            "shelves": [{"id": r.id, "station": r.station, "kind": r.kind, "height_mm": r.height_mm,
                         "width_mm": r.width_mm, "distance_m": r.distance} for r in layout.shelves]}


def layout_from_dict(data: dict) -> Layout:
    try:
        shelves = tuple(Shelf(str(r["id"]), int(r["station"]), int(r["height_mm"]), int(r["width_mm"]),
                              float(r["distance_m"]), str(r.get("kind", "type1"))) for r in data["shelves"])
        return Layout(int(data["stations"]), shelves)
    except (KeyError, TypeError) as exc:
        raise FileFormatError(f"layout record missing or malformed field: {exc}") from exc


def write_layout(layout: Layout, path) -> Path:
    return _dump(layout_to_dict(layout), path)


def read_layout(path) -> Layout:
    return layout_from_dict(_load(path, "pickloop-layout"))


def _finite(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {str(k): _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    return x


def solution_to_dict(solution: Solution, include_runtime: bool = True) -> dict:
    out = {"format": "pickloop-solution", "version": 1, "status": solution.status,
           "objective": solution.objective, "bound": _finite(solution.bound), "gap": _finite(solution.gap)}
    if include_runtime:
        out["runtime_s"] = solution.runtime_s
    out["meta"] = _finite(dict(solution.meta))
    out["placements"] = [[v, r] for v, r in solution.placements]
    return out


def _real(value, missing: float) -> float:
    # unbounded bound and gap are written as null
    return missing if value is None else float(value)


def solution_from_dict(data: dict) -> Solution:
    try:
        return Solution(placements=tuple((str(v), str(r)) for v, r in data["placements"]),
                        objective=float(data.get("objective", 0.0)),
                        bound=_real(data.get("bound", 0.0), math.inf), gap=_real(data.get("gap", 0.0), math.inf), runtime_s=float(data.get("runtime_s", 0.0)),
                        status=str(data.get("status", "optimal")), meta=dict(data.get("meta", {})))
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"solution record missing or malformed field: {exc}") from exc


def write_solution(solution: Solution, path) -> Path:
    return _dump(solution_to_dict(solution), path)


def read_solution(path) -> Solution:
    return solution_from_dict(_load(path, "pickloop-solution"))


def solution_bytes(solution: Solution) -> bytes:
    """Canonical encoding without wall-clock runtime, for reproducibility checks."""
    return json.dumps(solution_to_dict(solution, include_runtime=False), sort_keys=True,
                      allow_nan=False).encode("utf-8")


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def read_csv(path) -> list[dict[str, str]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _cell(v):
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    return v
