"""Exhaustive enumeration of x assignments, used to verify the other solvers."""

from __future__ import annotations

import itertools
import math
import time

import numpy as np

from pickloop.core import Solution
from pickloop.model import EQ, INTEGER, LE, MilpModel
from pickloop.solver.common import SolverError, check_model

MAX_CANDIDATES = 10_000_000
_CHUNK = 8192


def _candidate_count(options: list[np.ndarray], mandatory: list[bool]) -> int:
    total = 1
    for opts, must in zip(options, mandatory):
        total *= len(opts) + (0 if must else 1)
    return total


def brute_force_oracle(model: MilpModel, max_candidates: int = MAX_CANDIDATES) -> Solution:
    """True optimum by enumerating every way of putting each SKU on at most one shelf.

    Assignments are grown SKU by SKU and discarded as soon as a packing row
    (nonnegative x-only row with ``<=``) is exceeded; every surviving full
    assignment is checked against all rows for every combination of the
    integer variables.
    """
    check_model(model)
    start = time.perf_counter()
    nx = model.n_x
    n_sku = len(model.sku_ids)
    options = [np.flatnonzero((model.x_sku == v) & (model.upper[:nx] > 0.5)) for v in range(n_sku)]
    forced = [np.flatnonzero((model.x_sku == v) & (model.lower[:nx] > 0.5)) for v in range(n_sku)]
    mandatory = [len(f) > 0 for f in forced]
    for v, f in enumerate(forced):
        if len(f) > 1:
            return _infeasible(model, start)
        if len(f) == 1:
            options[v] = f
    if _candidate_count(options, mandatory) > max_candidates:
        raise SolverError("instance too large for oracle")

    A = model.A.tocsr()
    xpart = A[:, :nx].tocsc()
    has_other = np.diff(A[:, nx:].tocsr().indptr) > 0
    xcoo = A[:, :nx].tocoo()
    has_negative = np.zeros(model.n_rows, dtype=bool)
    has_negative[xcoo.row[xcoo.data < 0]] = True
    packing = np.flatnonzero((model.senses == LE) & ~has_other & ~has_negative)
    P = A[packing][:, :nx].toarray()
    cap = model.rhs[packing] + 1e-6 * np.maximum(1.0, np.abs(model.rhs[packing]))

    # frontier of partial assignments: chosen x column per SKU (-1 = none)
    choice = np.zeros((1, 0), dtype=np.int64)
    load = np.zeros((1, len(packing)))
    for v in range(n_sku):
        opts = list(options[v]) if mandatory[v] else [-1] + list(options[v])
        new_choice, new_load = [], []
        for j in opts:
            l2 = load if j < 0 else load + P[:, j]
            ok = np.all(l2 <= cap, axis=1)
            if not ok.any():
                continue
            new_choice.append(np.column_stack([choice[ok], np.full(ok.sum(), j)]))
            new_load.append(l2[ok])
        if not new_choice:
            return _infeasible(model, start)
        choice = np.concatenate(new_choice)
        load = np.concatenate(new_load)

    int_cols = [j for j in range(nx, model.n_vars) if model.var_kinds[j] == INTEGER]
    y_ranges = [range(int(math.ceil(model.lower[j])), int(math.floor(model.upper[j])) + 1) for j in int_cols]
    others = A[:, nx:].tocsr()
    cont = [j for j in range(nx, model.n_vars) if model.var_kinds[j] != INTEGER]
    defining = {}
    for j in cont:
        col = others[:, j - nx].tocoo()
        for i in col.row:
            if model.senses[i] == EQ and np.diff(others.indptr)[i] == 1:
                defining[j] = int(i)
                break

    best_val, best_X = -math.inf, []
    for lo in range(0, len(choice), _CHUNK):
        ch = choice[lo:lo + _CHUNK]
        B = len(ch)
        X = np.zeros((model.n_vars, B))
        rows, cols = np.nonzero(ch >= 0)
        X[ch[rows, cols], rows] = 1.0
        for j, i in defining.items():
            X[j] = (model.rhs[i] - xpart[i] @ X[:nx]) / A[i, j]
        for ys in itertools.product(*y_ranges):
            for j, val in zip(int_cols, ys):
                X[j] = val
            ok = ~model.row_violations(X).any(axis=0)
            if not ok.any():
                continue
            vals = model.objective @ X[:, ok]
            top = vals.max()
            if top < best_val - 1e-9 * max(1.0, abs(best_val)):
                continue
            for c in np.flatnonzero(vals >= top - 1e-9 * max(1.0, abs(top))):
                cand = X[:, ok][:, c].copy()
                exact = model.objective_value(cand)
                if exact > best_val:
                    best_val, best_X = exact, [cand]
                elif exact == best_val:
                    best_X.append(cand)
    if not best_X:
        return _infeasible(model, start)
    best = min(best_X, key=lambda x: tuple(np.flatnonzero(x[:nx] > 0.5)))
    chosen = np.flatnonzero(best[:nx] > 0.5)
    pairs = [(model.sku_ids[model.x_sku[j]], model.shelf_ids[model.x_shelf[j]]) for j in chosen]
    return Solution(tuple(pairs), objective=best_val, bound=best_val, gap=0.0,
                    runtime_s=time.perf_counter() - start, status="optimal",
                    meta={"model": model.name, "solver": "oracle", "candidates": int(len(choice))})


def _infeasible(model: MilpModel, start: float) -> Solution:
    return Solution((), objective=0.0, bound=0.0, gap=0.0, runtime_s=time.perf_counter() - start,
                    status="infeasible", meta={"model": model.name, "solver": "oracle"})
