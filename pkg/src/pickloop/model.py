"""Solver-agnostic MILP construction for the integrated, robust and sequential models.

Variables are declared in the order x, y, z. Constraint rows are stored as a
CSR matrix with a relation and right-hand side per row and a family tag:

    assign          sum_r x[v,r] <= 1   (== 1 for mandatory SKUs)
    precedence_max  k_r x[v,r] - y[o_v] <= 0
    precedence_min  (k_r - |K|) x[v,r] - y[o_v - 1] >= -|K|
    workload        z[k(,t)] - sum p x = 0
    balance_upper   z[k] - (1 + d)/|K| sum_j z[j] <= 0
    balance_lower   z[k] - (1 - d)/|K| sum_j z[j] >= 0
    capacity        sum_v (w_v + g) x[v,r] <= w_r + g
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from pickloop.core import (DAYS, Instance, Sku, ValidationError, eligible_shelves,
                           rank_width_demand, total_picks, validate_instance)
from pickloop.layout import Layout

BINARY, INTEGER, CONTINUOUS = "binary", "integer", "continuous"
LE, EQ, GE = "<=", "=", ">="


class InfeasibleModelError(ValidationError):
    """A model that provably has no feasible point was requested."""


@dataclass(frozen=True)
class SolveParams:
    alpha: float = 250.0
    delta: float = 0.01
    delta_day: float = 0.01
    gap_target: float = 0.005
    time_limit_s: float = 60.0
    seed: int = 0

    def __post_init__(self):
        if self.alpha < 0 or self.delta < 0 or self.delta_day < 0:
            raise ValidationError("alpha, delta and delta_day must be nonnegative")
        if self.gap_target < 0:
            raise ValidationError("gap_target must be nonnegative")
        if self.time_limit_s <= 0:
            raise ValidationError("time_limit_s must be positive")


@dataclass(frozen=True)
class ModelContext:
    """Domain data a model was built from; lets heuristics reason in SKU/shelf terms."""

    kind: str
    instance: Instance
    layout: Layout
    params: SolveParams
    sku_ids: tuple[str, ...]
    mandatory: bool = False
    balance: str | None = "average"  # "average", "per_day" or None
    precedence: bool = True
    objective: str = "combined"  # "combined" or "score"


@dataclass
class MilpModel:
    name: str
    var_names: list[str]
    var_kinds: list[str]
    lower: np.ndarray
    upper: np.ndarray
    var_tags: list[tuple]
    objective: np.ndarray
    A: sp.csr_matrix
    senses: np.ndarray
    rhs: np.ndarray
    row_tags: np.ndarray
    context: ModelContext | None = None
    x_sku: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    x_shelf: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    sku_ids: tuple[str, ...] = ()
    shelf_ids: tuple[str, ...] = ()

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def n_x(self) -> int:
        return len(self.x_sku)

    def x_pairs(self) -> list[tuple[str, str]]:
        return [(self.sku_ids[v], self.shelf_ids[r]) for v, r in zip(self.x_sku, self.x_shelf)]

    def objective_value(self, x: np.ndarray) -> float:
        nz = np.flatnonzero(x)
        return math.fsum(float(self.objective[j]) * float(x[j]) for j in nz)

    def row_violations(self, X: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
        """Boolean (rows x candidates) mask of broken rows for column vectors ``X``.

        Tolerance scales with the magnitude of each row's terms so that
        equality and balance rows with large pick counts are judged relative
        to their size.
        """
        act = self.A @ X
        scale = abs(self.A) @ np.abs(X)
        rhs = self.rhs.reshape((-1,) + (1,) * (X.ndim - 1))
        tol = rtol * np.maximum(1.0, np.maximum(scale, np.abs(rhs)))
        senses = self.senses.reshape(rhs.shape)
        return np.where(senses == LE, act > rhs + tol,
                        np.where(senses == GE, act < rhs - tol, np.abs(act - rhs) > tol))

    def violated_rows(self, x: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
        return np.flatnonzero(self.row_violations(x, rtol))

    def is_feasible(self, x: np.ndarray) -> bool:
        if np.any(x < self.lower - 1e-9) or np.any(x > self.upper + 1e-9):
            return False
        return len(self.violated_rows(x)) == 0

    def x_vector(self, placements: Iterable[tuple[str, str]]) -> np.ndarray:
        """Column vector with x[v,r] = 1 for each given pair and zeros elsewhere."""
        index = {pair: j for j, pair in enumerate(self.x_pairs())}
        x = np.zeros(self.n_vars)
        for pair in placements:
            j = index.get(tuple(pair))
            if j is None:
                raise ValidationError(f"no variable for placement {pair}")
            x[j] = 1.0
        return x


class _Rows:
    def __init__(self):
        self.rows: list[np.ndarray] = []
        self.cols: list[np.ndarray] = []
        self.vals: list[np.ndarray] = []
        self.senses: list[np.ndarray] = []
        self.rhs: list[np.ndarray] = []
        self.tags: list[np.ndarray] = []
        self.n = 0

    def add(self, rows, cols, vals, n_new: int, sense: str, rhs, tag: str):
        rows = np.asarray(rows, dtype=np.int64)
        self.rows.append(rows + self.n)
        self.cols.append(np.asarray(cols, dtype=np.int64))
        self.vals.append(np.asarray(vals, dtype=float))
        self.senses.append(np.full(n_new, sense, dtype="<U2"))
        self.rhs.append(np.broadcast_to(np.asarray(rhs, dtype=float), (n_new,)).copy())
        self.tags.append(np.full(n_new, tag, dtype=object))
        self.n += n_new

    def finish(self, n_vars: int):
        cat = lambda xs, dt: np.concatenate(xs) if xs else np.zeros(0, dtype=dt)
        A = sp.csr_matrix((cat(self.vals, float), (cat(self.rows, np.int64), cat(self.cols, np.int64))),
                          shape=(self.n, n_vars))
        A.sum_duplicates()
        A.eliminate_zeros()
        return A, cat(self.senses, "<U2"), cat(self.rhs, float), cat(self.tags, object)


def _build(name: str, instance: Instance, layout: Layout, params: SolveParams, *,
           skus: list[Sku], kind: str, balance: str | None, precedence: bool,
           objective: str, mandatory: bool, prune: bool) -> MilpModel:
    problems = validate_instance(instance)
    if problems:
        raise ValidationError("invalid instance: " + "; ".join(map(str, problems[:5])))
    K = layout.n_stations
    shelves = layout.shelves
    shelf_pos = {r.id: i for i, r in enumerate(shelves)}
    gap = instance.separator_gap_mm

    rank_widths = rank_width_demand(skus, gap) if prune else None
    x_sku, x_shelf = [], []
    missing = []
    for i, s in enumerate(skus):
        elig = eligible_shelves(s, layout, rank_widths, gap)
        if not elig and mandatory:
            missing.append(s.id)
        for r in sorted(elig, key=shelf_pos.__getitem__):
            x_sku.append(i)
            x_shelf.append(shelf_pos[r])
    if missing:
        raise InfeasibleModelError(f"mandatory SKUs without any eligible shelf: {', '.join(missing[:10])}")
    x_sku = np.asarray(x_sku, dtype=np.int64)
    x_shelf = np.asarray(x_shelf, dtype=np.int64)
    nx = len(x_sku)

    sku_ids = tuple(s.id for s in skus)
    shelf_ids = tuple(r.id for r in shelves)
    station_of = np.asarray([r.station for r in shelves], dtype=np.int64)
    names = [f"x[{sku_ids[v]}|{shelf_ids[r]}]" for v, r in zip(x_sku, x_shelf)]
    kinds = [BINARY] * nx
    lower = [0.0] * nx
    upper = [1.0] * nx
    tags: list[tuple] = [("x", sku_ids[v], shelf_ids[r]) for v, r in zip(x_sku, x_shelf)]

    # one y per rank that has a placeable SKU; empty ranks impose nothing
    present = sorted({skus[v].rank for v in set(x_sku.tolist())}) if precedence else []
    y_col = {}
    for o in present:
        y_col[o] = len(names)
        names.append(f"y[{o}]")
        kinds.append(INTEGER)
        lower.append(1.0)
        upper.append(float(K))
        tags.append(("y", o))

    days = range(len(DAYS)) if balance == "per_day" else [None]
    z_col = {}
    if balance is not None:
        for t in days:
            for k in layout.stations:
                z_col[k, t] = len(names)
                names.append(f"z[{k}]" if t is None else f"z[{k},{DAYS[t]}]")
                kinds.append(CONTINUOUS)
                lower.append(0.0)
                upper.append(math.inf)
                tags.append(("z", k) if t is None else ("z", k, DAYS[t]))
    n = len(names)

    c = np.zeros(n)
    scores = np.asarray([s.score for s in skus], dtype=float)
    picks = np.asarray([s.picks_avg for s in skus], dtype=float)
    if nx:
        c[:nx] = scores[x_sku]
        if objective == "combined" and params.alpha:
            eff = np.asarray([1.0 / r.distance for r in shelves])
            c[:nx] += params.alpha * eff[x_shelf] * picks[x_sku] / total_picks(instance)

    rows = _Rows()
    xcols = np.arange(nx)
    # each SKU on at most (exactly, if mandatory) one shelf
    if len(skus):
        rows.add(x_sku, xcols, np.ones(nx), len(skus), EQ if mandatory else LE, 1.0, "assign")

    if precedence and nx:
        ranks = np.asarray([s.rank for s in skus], dtype=np.int64)[x_sku]
        k_r = station_of[x_shelf].astype(float)
        ycol = np.asarray([y_col[o] for o in ranks], dtype=np.int64)
        # y[o] bounds the last station used by rank o
        rows.add(np.repeat(xcols, 2), np.column_stack([xcols, ycol]).ravel(),
                 np.column_stack([k_r, -np.ones(nx)]).ravel(), nx, LE, 0.0, "precedence_max")
        # big-M link: a placed rank-o SKU sits at or after y[o-1]
        sel = np.flatnonzero(np.isin(ranks - 1, present))
        prev = np.asarray([y_col[o - 1] for o in ranks[sel]], dtype=np.int64)
        m = len(sel)
        rows.add(np.repeat(np.arange(m), 2), np.column_stack([sel, prev]).ravel(),
                 np.column_stack([k_r[sel] - K, -np.ones(m)]).ravel(), m, GE, -float(K),
                 "precedence_min")

    if balance is not None:
        x_station = station_of[x_shelf] if nx else np.zeros(0, dtype=np.int64)
        delta = params.delta if balance == "average" else params.delta_day
        for t in days:
            day_picks = picks if t is None else np.asarray([s.picks_by_day[t] for s in skus], dtype=float)
            zc = np.asarray([z_col[k, t] for k in layout.stations], dtype=np.int64)
            # station workload definition
            for i, k in enumerate(layout.stations):
                on_k = np.flatnonzero(x_station == k)
                rr = np.zeros(len(on_k) + 1, dtype=np.int64)
                rows.add(rr, np.concatenate([[zc[i]], on_k]),
                         np.concatenate([[1.0], -day_picks[x_sku[on_k]]]), 1, EQ, 0.0, "workload")
            # balance bands with the station mean substituted
            for sense, factor, tag in ((LE, 1.0 + delta, "balance_upper"), (GE, 1.0 - delta, "balance_lower")):
                for i in range(K):
                    vals = np.full(K, -factor / K)
                    vals[i] += 1.0
                    rows.add(np.zeros(K, dtype=np.int64), zc, vals, 1, sense, 0.0,
                             tag if t is None else tag + "_day")

    # width plus separators per shelf
    if nx:
        widths = np.asarray([s.width_mm + gap for s in skus], dtype=float)
        used = np.unique(x_shelf)
        row_of = {r: i for i, r in enumerate(used)}
        rr = np.asarray([row_of[r] for r in x_shelf], dtype=np.int64)
        cap = np.asarray([shelves[r].width_mm + gap for r in used], dtype=float)
        rows.add(rr, xcols, widths[x_sku], len(used), LE, cap, "capacity")

    A, senses, rhs, rtags = rows.finish(n)
    ctx = ModelContext(kind, instance, layout, params, sku_ids, mandatory, balance, precedence, objective)
    return MilpModel(name, names, kinds, np.asarray(lower), np.asarray(upper), tags, c, A, senses,
                     rhs, rtags, ctx, x_sku, x_shelf, sku_ids, shelf_ids)


def build_integrated(instance: Instance, layout: Layout, params: SolveParams) -> MilpModel:
    return _build("integrated", instance, layout, params, skus=list(instance.skus), kind="integrated",
                  balance="average", precedence=True, objective="combined", mandatory=False, prune=False)


def build_robust(instance: Instance, layout: Layout, params: SolveParams) -> MilpModel:
    """Integrated model with workload balance enforced separately on every weekday."""
    return _build("robust", instance, layout, params, skus=list(instance.skus), kind="robust",
                  balance="per_day", precedence=True, objective="combined", mandatory=False, prune=False)


def build_selection_stage(instance: Instance, layout: Layout, params: SolveParams) -> MilpModel:
    """Forward-reserve style selection: importance score under shelf capacity only."""
    return _build("selection", instance, layout, params, skus=list(instance.skus), kind="selection",
                  balance=None, precedence=False, objective="score", mandatory=False, prune=False)


def build_assignment_stage(instance: Instance, layout: Layout, params: SolveParams,
                           selected: Iterable[str], allow_removal: bool,
                           prune: bool | None = None) -> MilpModel:
    """Integrated model restricted to a preselected SKU set.

    With ``allow_removal`` false every selected SKU must be placed; station
    eligibility is then pruned by the precedence width argument unless
    ``prune`` is set to false.
    """
    selected = set(selected)
    unknown = selected - {s.id for s in instance.skus}
    if unknown:
        raise ValidationError(f"selected SKUs not in instance: {sorted(unknown)[:5]}")
    skus = [s for s in instance.skus if s.id in selected]
    return _build("assignment", instance, layout, params, skus=skus, kind="assignment",
                  balance="average", precedence=True, objective="combined",
                  mandatory=not allow_removal, prune=(not allow_removal) if prune is None else prune)


def model_stats(model: MilpModel) -> dict:
    kinds = Counter(model.var_kinds)
    tags = Counter(model.row_tags.tolist())
    return {
        "variables": model.n_vars,
        "binary": kinds.get(BINARY, 0),
        "integer": kinds.get(INTEGER, 0),
        "continuous": kinds.get(CONTINUOUS, 0),
        "x": sum(1 for t in model.var_tags if t[0] == "x"),
        "y": sum(1 for t in model.var_tags if t[0] == "y"),
        "z": sum(1 for t in model.var_tags if t[0] == "z"),
        "constraints": model.n_rows,
        "by_tag": dict(sorted(tags.items())),
        "nonzeros": int(model.A.nnz),
        "objective_nonzeros": int(np.count_nonzero(model.objective)),
        "rhs_nonzeros": int(np.count_nonzero(model.rhs)),
    }
