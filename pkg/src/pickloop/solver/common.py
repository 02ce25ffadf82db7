from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from pickloop.core import Solution, ValidationError, relative_gap
from pickloop.model import BINARY, EQ, GE, INTEGER, LE, MilpModel


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolveControl:
    mode: str = "exact"
    gap_target: float = 0.0
    time_limit_s: float = 60.0
    seed: int = 0
    workers: int = 1
    warm_start: bool = True

    def __post_init__(self):
        if self.mode not in ("exact", "heuristic", "oracle"):
            raise ValidationError(f"unknown solve mode {self.mode!r}")
        if self.gap_target < 0:
            raise ValidationError("gap_target must be nonnegative")
        if not self.time_limit_s > 0:
            raise ValidationError("time_limit_s must be positive")
        if self.workers < 1:
            raise ValidationError("workers must be positive")


def check_model(model: MilpModel) -> None:
    n = model.n_vars
    if model.A.shape[1] != n or len(model.objective) != n or len(model.lower) != n:
        raise SolverError("malformed model: dimension mismatch")
    if model.A.shape[0] != len(model.rhs) or len(model.senses) != len(model.rhs):
        raise SolverError("malformed model: row data mismatch")
    if np.any(model.lower > model.upper):
        raise SolverError("malformed model: lower bound above upper bound")


class Completion:
    """Fill the non-x variables implied by a 0/1 choice of the x variables.

    Continuous variables are read off equality rows in which they are the
    only non-x entry (the workload rows); integer variables take the smallest
    value allowed by rows where they are the only non-x entry (the
    precedence rows). Rows touching several non-x variables are left to the
    final feasibility check.
    """

    def __init__(self, model: MilpModel):
        self.model = model
        nx = model.n_x
        A = model.A.tocsr()
        B = A[:, nx:].tocsr()
        single = np.flatnonzero(np.diff(B.indptr) == 1)
        cols = B.indices[B.indptr[single]] + nx
        coef = B.data[B.indptr[single]]
        is_int = np.asarray([model.var_kinds[j] in (INTEGER, BINARY) for j in cols], dtype=bool)
        is_eq = model.senses[single] == EQ
        dfn = ~is_int & is_eq
        self.def_rows, self.def_cols, self.def_coef = single[dfn], cols[dfn], coef[dfn]
        self.A_def = A[self.def_rows]
        self.int_rows, self.int_cols, self.int_coef = single[is_int], cols[is_int], coef[is_int]
        self.A_int = A[self.int_rows]
        senses = model.senses[self.int_rows]
        # +1: row bounds the variable from above, -1: from below, 0: both
        up = (senses == LE) == (self.int_coef > 0)
        self.int_dir = np.where(senses == EQ, 0, np.where(up, 1, -1))
        self.int_vars = np.flatnonzero([k == INTEGER for k in model.var_kinds[nx:]]) + nx

    def complete(self, x_part: np.ndarray) -> np.ndarray | None:
        model = self.model
        full = np.zeros(model.n_vars)
        full[: model.n_x] = np.round(x_part)
        if len(self.def_rows):
            act = self.A_def @ full
            full[self.def_cols] = (model.rhs[self.def_rows] - act) / self.def_coef
        if len(self.int_vars):
            lo = model.lower.copy()
            hi = model.upper.copy()
            if len(self.int_rows):
                bound = (model.rhs[self.int_rows] - self.A_int @ full) / self.int_coef
                m = self.int_dir >= 0
                np.minimum.at(hi, self.int_cols[m], bound[m])
                m = self.int_dir <= 0
                np.maximum.at(lo, self.int_cols[m], bound[m])
            val = np.ceil(lo[self.int_vars] - 1e-9)
            if np.any(val > hi[self.int_vars] + 1e-9):
                return None
            full[self.int_vars] = val
        if model.violated_rows(full).size:
            return None
        return full


def solution_from_vector(model: MilpModel, full: np.ndarray | None, *, bound: float,
                         runtime_s: float, status: str, meta: dict | None = None) -> Solution:
    meta = dict(meta or {})
    meta.setdefault("model", model.name)
    if full is None:
        return Solution((), objective=0.0, bound=bound if math.isfinite(bound) else 0.0, gap=0.0,
                        runtime_s=runtime_s, status=status, meta=meta)
    chosen = np.flatnonzero(full[: model.n_x] > 0.5)
    pairs = [(model.sku_ids[model.x_sku[j]], model.shelf_ids[model.x_shelf[j]]) for j in chosen]
    obj = model.objective_value(full)
    bound = max(bound, obj)
    return Solution(tuple(pairs), objective=obj, bound=bound, gap=relative_gap(bound, obj),
                    runtime_s=runtime_s, status=status, meta=meta)
