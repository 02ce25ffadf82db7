"""Depth-first branch and bound over the binary x variables.

Node bounds come from the LP relaxation (x in [0, 1], y continuous, balance
rows kept), solved with HiGHS through ``scipy.optimize.linprog``.
"""

from __future__ import annotations

import logging
import math
import threading
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from pickloop.core import Solution, relative_gap
from pickloop.model import BINARY, EQ, GE, INTEGER, LE, MilpModel
from pickloop.solver.common import Completion, SolveControl, SolverError, check_model, solution_from_vector

log = logging.getLogger(__name__)

INT_TOL = 1e-6
PRUNE_RTOL = 1e-9


@dataclass
class Node:
    lower: np.ndarray
    upper: np.ndarray
    bound: float
    depth: int = 0


class _Relaxation:
    def __init__(self, model: MilpModel):
        A = model.A.tocsr()
        le = model.senses == LE
        ge = model.senses == GE
        eq = model.senses == EQ
        ub_rows = sp.vstack([A[le], -A[ge]]).tocsr()
        self.A_ub = ub_rows if ub_rows.shape[0] else None
        self.b_ub = np.concatenate([model.rhs[le], -model.rhs[ge]]) if ub_rows.shape[0] else None
        self.A_eq = A[eq] if eq.any() else None
        self.b_eq = model.rhs[eq] if eq.any() else None
        self.c = -model.objective

    def solve(self, lower: np.ndarray, upper: np.ndarray):
        if len(self.c) == 0:
            return 0.0, np.zeros(0)
        res = linprog(self.c, A_ub=self.A_ub, b_ub=self.b_ub, A_eq=self.A_eq, b_eq=self.b_eq,
                      bounds=np.column_stack([lower, upper]), method="highs")
        if res.status == 2:
            return None
        if res.status != 0:
            raise SolverError(f"LP relaxation failed: {res.message}")
        return -res.fun, res.x


class BranchAndBound:
    def __init__(self, model: MilpModel, control: SolveControl,
                 on_node: Callable[[Node, float | None], None] | None = None):
        check_model(model)
        self.model = model
        self.control = control
        self.on_node = on_node
        self.lp = _Relaxation(model)
        self.completion = Completion(model)
        self.nx = model.n_x
        self.int_cols = np.asarray([j for j, k in enumerate(model.var_kinds) if k in (BINARY, INTEGER)],
                                   dtype=np.int64)
        names = np.asarray(model.var_names)
        # most-fractional first, then larger objective coefficient, then name
        self._tiebreak = np.lexsort((names, -model.objective))
        self._rank = np.empty(model.n_vars, dtype=np.int64)
        self._rank[self._tiebreak] = np.arange(model.n_vars)
        self.best_x: np.ndarray | None = None
        self.best_val = -math.inf
        self.nodes = 0
        self.lock = threading.Lock()

    def _offer(self, full: np.ndarray | None) -> None:
        if full is None:
            return
        val = self.model.objective_value(full)
        with self.lock:
            if val > self.best_val:
                self.best_val, self.best_x = val, full

    def _prunable(self, bound: float) -> bool:
        return bound <= self.best_val + PRUNE_RTOL * max(1.0, abs(self.best_val))

    def _branch_var(self, x: np.ndarray) -> int | None:
        vals = x[self.int_cols]
        frac = np.abs(vals - np.round(vals))
        cand = self.int_cols[frac > INT_TOL]
        if not len(cand):
            return None
        binaries = cand[cand < self.nx]
        pool = binaries if len(binaries) else cand
        dist = np.abs(x[pool] - np.floor(x[pool]) - 0.5)
        best = np.flatnonzero(dist <= dist.min() + 1e-12)
        return int(pool[best[np.argmin(self._rank[pool[best]])]])

    def process(self, node: Node) -> list[Node]:
        """Solve one node; returns its children (up branch last, so it is explored first)."""
        if self._prunable(node.bound):
            return []
        relaxed = self.lp.solve(node.lower, node.upper)
        self.nodes += 1
        if self.on_node is not None:
            self.on_node(node, None if relaxed is None else relaxed[0])
        if relaxed is None:
            return []
        val, x = relaxed
        if self._prunable(val):
            return []
        j = self._branch_var(x)
        if j is None:
            full = self.completion.complete(x[: self.nx])
            if full is not None:
                self._offer(full)
                return []
            log.warning("integral relaxation could not be completed; node dropped")
            return []
        if j < self.nx:
            # cheap rounding: drop every fractional placement
            self._offer(self.completion.complete(np.where(x[: self.nx] > 1 - INT_TOL, 1.0, 0.0)))
        down_u = node.upper.copy()
        up_l = node.lower.copy()
        f = math.floor(x[j])
        down_u[j] = f
        up_l[j] = f + 1
        return [Node(node.lower, down_u, val, node.depth + 1),
                Node(up_l, node.upper, val, node.depth + 1)]

    def run(self) -> Solution:
        start = time.perf_counter()
        deadline = start + self.control.time_limit_s
        model = self.model
        warm = self._warm_start(deadline)
        root = Node(model.lower.copy(), model.upper.copy(), math.inf)
        stack = [root]
        status = None
        if self.control.workers == 1:
            while stack:
                if time.perf_counter() > deadline:
                    status = "time_limit"
                    break
                if self._gap_reached(stack):
                    status = "gap_reached"
                    break
                stack.extend(self.process(stack.pop()))
        else:
            status = self._run_parallel(stack, deadline)
        open_bound = max((n.bound for n in stack), default=-math.inf)
        if status is None:
            status = "optimal" if self.best_x is not None else "infeasible"
        bound = max(self.best_val, open_bound)
        if self.best_x is None and status == "time_limit":
            bound = open_bound
        meta = {"solver": "exact", "nodes": self.nodes, "workers": self.control.workers}
        if warm is not None:
            meta["warm_start_objective"] = warm
        return solution_from_vector(model, self.best_x, bound=bound,
                                    runtime_s=time.perf_counter() - start, status=status, meta=meta)

    def _warm_start(self, deadline: float) -> float | None:
        """Seed the incumbent with the construct-and-improve heuristic when domain data is present."""
        if not self.control.warm_start or self.model.context is None or self.nx == 0:
            return None
        from pickloop.solver.heuristic import solve_heuristic
        budget = max(0.25 * (deadline - time.perf_counter()), 1e-3)
        sol = solve_heuristic(self.model, SolveControl(mode="heuristic", time_limit_s=budget,
                                                       seed=self.control.seed))
        if sol.status == "time_limit" and not sol.placements and sol.objective == 0:
            full = self.completion.complete(np.zeros(self.nx))
        else:
            full = self.completion.complete(self.model.x_vector(sol.placements)[: self.nx])
        self._offer(full)
        return None if full is None else self.model.objective_value(full)

    def _gap_reached(self, stack: list[Node], active: float = -math.inf) -> bool:
        if self.best_x is None or not stack and active == -math.inf:
            return False
        bound = max(self.best_val, active, max((n.bound for n in stack), default=-math.inf))
        return relative_gap(bound, self.best_val) <= self.control.gap_target and self.control.gap_target > 0

    def _run_parallel(self, stack: list[Node], deadline: float) -> str | None:
        cond = threading.Condition()
        active: dict[int, float] = {}
        outcome: list[str | None] = [None]
        errors: list[BaseException] = []

        def worker(wid: int):
            while True:
                with cond:
                    while True:
                        if outcome[0] is not None or errors:
                            return
                        if time.perf_counter() > deadline:
                            outcome[0] = "time_limit"
                            cond.notify_all()
                            return
                        act = max(active.values(), default=-math.inf)
                        if self._gap_reached(stack, act):
                            outcome[0] = "gap_reached"
                            cond.notify_all()
                            return
                        if stack:
                            node = stack.pop()
                            active[wid] = node.bound
                            break
                        if not active:
                            cond.notify_all()
                            return
                        cond.wait(0.05)
                try:
                    children = self.process(node)
                except BaseException as exc:  # surfaced after join
                    with cond:
                        errors.append(exc)
                        cond.notify_all()
                    return
                with cond:
                    stack.extend(children)
                    del active[wid]
                    cond.notify_all()

        threads = [threading.Thread(target=worker, args=(w,)) for w in range(self.control.workers)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        if errors:
            raise errors[0]
        return outcome[0]


def solve_exact(model: MilpModel, control: SolveControl | None = None, **kwargs) -> Solution:
    """Branch and bound to the requested relative gap or time limit."""
    return BranchAndBound(model, control or SolveControl(), **kwargs).run()
