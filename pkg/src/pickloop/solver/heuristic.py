"""Greedy construction plus feasibility-preserving local search for large instances.

The search works in SKU/shelf terms (through the model's domain context) on
dense SKU x shelf coefficient matrices, so candidate moves are scored in
vectorised form. The final assignment is re-checked against the model rows.
"""

from __future__ import annotations

import time

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from pickloop.core import DAYS, Solution, relative_gap
from pickloop.model import MilpModel
from pickloop.solver.common import Completion, SolveControl, SolverError, check_model, solution_from_vector

_BAL_RTOL = 1e-9
_EPS = 1e-12
_LP_MAX_COLS = 200_000


class _State:
    """One assignment plus the incremental data needed to test moves quickly."""

    def __init__(self, model: MilpModel):
        ctx = model.context
        if ctx is None:
            raise SolverError("heuristic needs a model built with domain context")
        self.model = model
        inst = ctx.instance.by_id()
        layout = ctx.layout
        skus = [inst[v] for v in model.sku_ids]
        gap = ctx.instance.separator_gap_mm
        self.n, self.R, self.K = len(skus), len(layout.shelves), layout.n_stations
        self.width = np.asarray([s.width_mm + gap for s in skus], dtype=float)
        self.rank = np.asarray([s.rank for s in skus], dtype=np.int64)
        self.cap = np.asarray([r.width_mm + gap for r in layout.shelves], dtype=float)
        self.station = np.asarray([r.station - 1 for r in layout.shelves], dtype=np.int64)
        if ctx.balance == "per_day":
            self.P = np.asarray([s.picks_by_day for s in skus], dtype=float).reshape(self.n, len(DAYS))
            self.delta = ctx.params.delta_day
        else:
            self.P = np.asarray([s.picks_avg for s in skus], dtype=float).reshape(self.n, 1)
            self.delta = ctx.params.delta
        self.balance = ctx.balance is not None
        self.precedence = ctx.precedence
        self.mandatory = ctx.mandatory

        nx = model.n_x
        self.C = np.full((self.n, self.R), -np.inf)
        self.J = np.full((self.n, self.R), -1, dtype=np.int64)
        self.C[model.x_sku, model.x_shelf] = model.objective[:nx]
        self.J[model.x_sku, model.x_shelf] = np.arange(nx)

        self.shelf_of = np.full(self.n, -1, dtype=np.int64)
        self.load = np.zeros(self.R)
        self.Z = np.zeros((self.K, self.P.shape[1]))
        self.rank_count = [[0] * self.K for _ in range(4)]

    # -- bookkeeping --------------------------------------------------------
    def place(self, v: int, r: int) -> None:
        self.shelf_of[v] = r
        self.load[r] += self.width[v]
        k = self.station[r]
        self.Z[k] += self.P[v]
        self.rank_count[self.rank[v]][k] += 1

    def remove(self, v: int) -> int:
        r = int(self.shelf_of[v])
        self.shelf_of[v] = -1
        self.load[r] -= self.width[v]
        k = self.station[r]
        self.Z[k] -= self.P[v]
        self.rank_count[self.rank[v]][k] -= 1
        return r

    def objective(self) -> float:
        placed = np.flatnonzero(self.shelf_of >= 0)
        return float(self.C[placed, self.shelf_of[placed]].sum())

    # -- feasibility --------------------------------------------------------
    def interval(self, o: int) -> tuple[int, int]:
        """Stations open to a rank-o SKU given the SKUs of ranks o-1 and o+1 placed so far."""
        if not self.precedence:
            return 0, self.K - 1
        lo, hi = 0, self.K - 1
        if o > 1:
            below = self.rank_count[o - 1]
            for k in range(self.K - 1, -1, -1):
                if below[k]:
                    lo = k
                    break
        if o < 3:
            above = self.rank_count[o + 1]
            for k in range(self.K):
                if above[k]:
                    hi = k
                    break
        return lo, hi

    def _excess(self, Z: np.ndarray, mean: np.ndarray) -> np.ndarray:
        """Band violation per row of ``Z`` (any leading shape, last axis = periods)."""
        tol = _BAL_RTOL * np.maximum(1.0, mean)
        over = np.clip(Z - (1 + self.delta) * mean - tol, 0, None)
        under = np.clip((1 - self.delta) * mean - tol - Z, 0, None)
        return (over + under).sum(axis=-1)

    def violation(self) -> float:
        if not self.balance:
            return 0.0
        return float(self._excess(self.Z, self.Z.mean(axis=0)).sum())

    def insert_stations_ok(self, v: int) -> np.ndarray:
        """Stations where adding SKU v keeps every workload inside its band."""
        if not self.balance:
            return np.ones(self.K, dtype=bool)
        Z = np.broadcast_to(self.Z, (self.K,) + self.Z.shape).copy()
        Z[np.arange(self.K), np.arange(self.K)] += self.P[v]
        mean = Z.mean(axis=1, keepdims=True)
        return self._excess(Z, mean).sum(axis=1) <= 0

    def pair_excess(self, k1: int, k2: int, d: np.ndarray) -> np.ndarray:
        """Total violation after moving workload rows ``d`` from station k1 to k2 (mean fixed)."""
        mean = self.Z.mean(axis=0)
        base = self._excess(self.Z, mean)
        rest = base.sum() - base[k1] - base[k2]
        return rest + self._excess(self.Z[k1] - d, mean) + self._excess(self.Z[k2] + d, mean)

    def best_insert(self, v: int, min_value: float = -np.inf) -> int:
        """Most valuable feasible shelf for unplaced SKU v, strictly above ``min_value``; -1 if none."""
        c = self.C[v]
        ok = (c > min_value + _EPS) & (self.load + self.width[v] <= self.cap + 1e-9)
        if not ok.any():
            return -1
        lo, hi = self.interval(int(self.rank[v]))
        st_ok = self.insert_stations_ok(v)
        st_ok[:lo] = False
        st_ok[hi + 1:] = False
        ok &= st_ok[self.station]
        if not ok.any():
            return -1
        cand = np.flatnonzero(ok)
        return int(cand[np.argmax(c[cand])])

    def feasible_now(self) -> bool:
        if self.balance and self.violation() > 0:
            return False
        if self.mandatory and np.any(self.shelf_of < 0):
            return False
        if not self.precedence:
            return True
        for o in (1, 2):
            a = [k for k in range(self.K) if self.rank_count[o][k]]
            b = [k for k in range(self.K) if self.rank_count[o + 1][k]]
            if a and b and max(a) > min(b):
                return False
        return True


def _best_values(state: _State, rows=None) -> np.ndarray:
    C = state.C if rows is None else state.C[rows]
    if not C.size:
        return np.full(C.shape[0], -np.inf)
    return C.max(axis=1)


def _rank_ranges(state: _State) -> dict[int, tuple[int, int]]:
    """Contiguous station blocks per rank, sized by the width of SKUs worth placing."""
    K = state.K
    if not state.precedence:
        return {o: (0, K - 1) for o in (1, 2, 3)}
    useful = _best_values(state) > 0
    demand = np.asarray([state.width[useful & (state.rank == o)].sum() for o in (1, 2, 3)])
    total = demand.sum()
    if total <= 0:
        return {o: (0, K - 1) for o in (1, 2, 3)}
    # adjacent blocks share the station where the cumulative demand crosses over
    cum = np.cumsum(demand) / total
    b1 = int(np.clip(np.floor(K * cum[0] - 1e-9), 0, K - 1))
    b2 = int(np.clip(np.floor(K * cum[1] - 1e-9), b1, K - 1))
    return {1: (0, b1), 2: (b1, b2), 3: (b2, K - 1)}


def _construct(state: _State) -> None:
    """Densest SKUs first, each on its most valuable shelf, ties to the least-loaded station."""
    ranges = _rank_ranges(state)
    best = _best_values(state)
    order = np.lexsort((np.arange(state.n), -(best / state.width)))
    share = state.P.sum(axis=0)
    share = np.where(share > 0, share, 1.0)
    for v in order:
        if not best[v] > 0 and not state.mandatory:
            break
        plo, phi = state.interval(int(state.rank[v]))
        lo, hi = ranges[int(state.rank[v])]
        c = state.C[v]
        room = np.isfinite(c) & (state.load + state.width[v] <= state.cap + 1e-9)
        ok = room & (state.station >= max(lo, plo)) & (state.station <= min(hi, phi))
        if not ok.any():
            ok = room & (state.station >= plo) & (state.station <= phi)
        if not ok.any():
            continue
        cand = np.flatnonzero(ok)
        top = c[cand].max()
        cand = cand[c[cand] >= top - 1e-12 * max(1.0, abs(top))]
        # running balance: among equally valuable shelves take the least-loaded station
        rel = (state.Z[state.station[cand]] / share).max(axis=1)
        state.place(int(v), int(cand[np.lexsort((cand, rel))[0]]))


def _repair(state: _State, deadline: float) -> None:
    """Restore workload balance by relocations and swaps, dropping SKUs only as a last resort."""
    while time.perf_counter() < deadline:
        viol = state.violation()
        if viol <= 0:
            return
        mean = state.Z.mean(axis=0)
        scaled = state.Z / np.where(mean > 0, mean, 1.0)
        moved = False
        for k1 in np.argsort(-scaled.max(axis=1), kind="stable"):
            for k2 in np.argsort(scaled.min(axis=1), kind="stable"):
                if k1 != k2 and _balance_move(state, int(k1), int(k2), viol):
                    moved = True
                    break
            if moved:
                break
        if moved:
            continue
        if state.mandatory:
            return
        # drop the SKU on the most loaded station that costs least per unit of relief
        k1 = int(np.argmax(scaled.max(axis=1)))
        on = np.flatnonzero((state.shelf_of >= 0) & (state.station[np.maximum(state.shelf_of, 0)] == k1))
        if not len(on):
            return
        loss = state.C[on, state.shelf_of[on]] / np.maximum(state.P[on].sum(axis=1), 1e-12)
        state.remove(int(on[np.argmin(loss)]))


def _balance_move(state: _State, k1: int, k2: int, viol: float) -> bool:
    """Apply the best violation-reducing relocation or swap from station k1 to k2."""
    placed = state.shelf_of >= 0
    at = state.station[np.maximum(state.shelf_of, 0)]
    on1 = np.flatnonzero(placed & (at == k1))
    on2 = np.flatnonzero(placed & (at == k2))
    if not len(on1):
        return False
    reds, gains, kinds, aa, bb = [], [], [], [], []

    shelves2 = np.flatnonzero(state.station == k2)
    r1 = state.shelf_of[on1]
    C = state.C[np.ix_(on1, shelves2)]
    fits = state.load[shelves2][None, :] + state.width[on1][:, None] <= state.cap[shelves2][None, :] + 1e-9
    ok = np.isfinite(C) & fits
    if ok.any():
        red = viol - state.pair_excess(k1, k2, state.P[on1])
        delta = np.where(ok, C - state.C[on1, r1][:, None], -np.inf)
        j = np.argmax(delta, axis=1)
        sel = np.flatnonzero(ok.any(axis=1) & (red > _EPS))
        reds.append(red[sel]); gains.append(delta[sel, j[sel]]); kinds.append(np.zeros(len(sel), int))
        aa.append(on1[sel]); bb.append(shelves2[j[sel]])

    if len(on2):
        r2 = state.shelf_of[on2]
        d = state.P[on1][:, None, :] - state.P[on2][None, :, :]
        red = viol - state.pair_excess(k1, k2, d)
        gain = state.C[on1[:, None], r2[None, :]] + state.C[on2[None, :], r1[:, None]] \
            - state.C[on1, r1][:, None] - state.C[on2, r2][None, :]
        w1, w2 = state.width[on1][:, None], state.width[on2][None, :]
        fit = (state.load[r1][:, None] - w1 + w2 <= state.cap[r1][:, None] + 1e-9) \
            & (state.load[r2][None, :] - w2 + w1 <= state.cap[r2][None, :] + 1e-9)
        ii, jj = np.nonzero(np.isfinite(gain) & fit & (red > _EPS))
        reds.append(red[ii, jj]); gains.append(gain[ii, jj]); kinds.append(np.ones(len(ii), int))
        aa.append(on1[ii]); bb.append(on2[jj])
    if not reds:
        return False
    red, gain, kind = np.concatenate(reds), np.concatenate(gains), np.concatenate(kinds)
    a_arr, b_arr = np.concatenate(aa), np.concatenate(bb)
    if not len(red):
        return False
    # moves that cost nothing first (largest relief), then least objective lost per unit of relief
    free = gain >= -1e-12
    score = np.where(free, -red, -gain / red)
    order = np.lexsort((b_arr, a_arr, kind, score, ~free))[:50]
    for i in order:
        a, b = int(a_arr[i]), int(b_arr[i])
        if kind[i] == 0:
            plan = ([a], [(a, b)])
        else:
            plan = ([a, b], [(a, int(state.shelf_of[b])), (b, int(state.shelf_of[a]))])
        if _try(state, *plan, max_viol=viol):
            return True
    return False


def _try(state: _State, out: list[int], moves: list[tuple[int, int]], require_balance: bool = False,
         max_viol: float | None = None) -> bool:
    """Apply removals then placements; keep them if precedence holds and balance is kept or improved."""
    before = state.violation() if max_viol is None else max_viol
    old = [(v, int(state.shelf_of[v])) for v in out]
    for v in out:
        state.remove(v)
    done = []
    ok = True
    for v, r in moves:
        lo, hi = state.interval(int(state.rank[v]))
        if not (lo <= state.station[r] <= hi) or state.load[r] + state.width[v] > state.cap[r] + 1e-9 \
                or not np.isfinite(state.C[v, r]):
            ok = False
            break
        state.place(v, r)
        done.append(v)
    if ok:
        after = state.violation()
        ok = after <= 0 if require_balance else (after < before - _EPS or after <= 0)
    if ok:
        return True
    for v in done:
        state.remove(v)
    for v, r in old:
        state.place(v, r)
    return False


def _local_search(state: _State, deadline: float, rng: np.random.Generator) -> None:
    """Improving moves that keep every constraint satisfied, until none is left."""
    while time.perf_counter() < deadline:
        improved = _insert_pass(state, deadline)
        improved |= _relocate_pass(state, deadline, rng)
        improved |= _swap_pass(state, deadline, rng)
        if not state.mandatory:
            improved |= _eject_pass(state, deadline)
        if not improved:
            return


def _insert_pass(state: _State, deadline: float) -> bool:
    improved = False
    unplaced = np.flatnonzero(state.shelf_of < 0)
    dens = _best_values(state, unplaced) / state.width[unplaced]
    for v in unplaced[np.argsort(-dens, kind="stable")]:
        if time.perf_counter() > deadline:
            break
        r = state.best_insert(int(v), 0.0)
        if r >= 0:
            state.place(int(v), r)
            improved = True
    return improved


def _relocate_pass(state: _State, deadline: float, rng: np.random.Generator) -> bool:
    improved = False
    for v in rng.permutation(np.flatnonzero(state.shelf_of >= 0)):
        if time.perf_counter() > deadline:
            break
        v = int(v)
        r0 = state.remove(v)
        r = state.best_insert(v, float(state.C[v, r0]))
        state.place(v, r if r >= 0 else r0)
        improved |= r >= 0
    return improved


def _swap_pass(state: _State, deadline: float, rng: np.random.Generator) -> bool:
    """Exchange two placed SKUs when that raises the objective (more picks onto nearer shelves)."""
    improved = False
    for a in rng.permutation(np.flatnonzero(state.shelf_of >= 0)):
        if time.perf_counter() > deadline:
            break
        a = int(a)
        ra = int(state.shelf_of[a])
        placed = np.flatnonzero(state.shelf_of >= 0)
        rb = state.shelf_of[placed]
        gain = state.C[a, rb] + state.C[placed, ra] - state.C[a, ra] - state.C[placed, rb]
        ok = np.isfinite(gain) & (gain > 1e-12) & (rb != ra)
        ok &= state.load[rb] - state.width[placed] + state.width[a] <= state.cap[rb] + 1e-9
        ok &= state.load[ra] - state.width[a] + state.width[placed] <= state.cap[ra] + 1e-9
        if not ok.any():
            continue
        ka = state.station[ra]
        idx = np.flatnonzero(ok)
        for i in idx[np.argsort(-gain[idx], kind="stable")][:20]:
            b = int(placed[i])
            kb = state.station[rb[i]]
            if state.balance and ka != kb and state.pair_excess(ka, kb, state.P[a] - state.P[b]) > 0:
                continue
            if _try(state, [a, b], [(a, int(rb[i])), (b, ra)], require_balance=True):
                improved = True
                break
    return improved


def _eject_pass(state: _State, deadline: float) -> bool:
    """Replace a placed SKU by a more valuable unplaced one on the same shelf."""
    improved = False
    for u in np.flatnonzero(state.shelf_of < 0):
        if time.perf_counter() > deadline:
            break
        u = int(u)
        placed = np.flatnonzero(state.shelf_of >= 0)
        if not len(placed):
            break
        r = state.shelf_of[placed]
        gain = state.C[u, r] - state.C[placed, r]
        ok = np.isfinite(gain) & (gain > 1e-12)
        ok &= state.load[r] - state.width[placed] + state.width[u] <= state.cap[r] + 1e-9
        if not ok.any():
            continue
        idx = np.flatnonzero(ok)
        for i in idx[np.argsort(-gain[idx], kind="stable")][:10]:
            if _try(state, [int(placed[i])], [(u, int(r[i]))], require_balance=True):
                improved = True
                break
    return improved


def fractional_bound(model: MilpModel) -> float:
    """Upper bound from pooling identical shelves into one continuous knapsack per class.

    Shelves sharing height, width and distance form a class whose capacity is
    their total width; each SKU may be split across classes up to one unit in
    total. Station, precedence and balance rows are dropped, so every
    feasible assignment is also feasible here.
    """
    ctx = model.context
    if ctx is None:
        raise SolverError("fractional bound needs a model built with domain context")
    if model.n_x == 0:
        return 0.0
    gap = ctx.instance.separator_gap_mm
    shelves = ctx.layout.shelves
    keys = [(r.height_mm, r.width_mm, r.distance) for r in shelves]
    classes = {k: i for i, k in enumerate(sorted(set(keys)))}
    cls = np.asarray([classes[k] for k in keys], dtype=np.int64)
    cap = np.zeros(len(classes))
    np.add.at(cap, cls, [r.width_mm + gap for r in shelves])
    inst = ctx.instance.by_id()
    width = np.asarray([inst[v].width_mm + gap for v in model.sku_ids], dtype=float)

    pair = model.x_sku * len(classes) + cls[model.x_shelf]
    uniq, first = np.unique(pair, return_index=True)
    sku, cl, coef = uniq // len(classes), uniq % len(classes), model.objective[first]
    keep = coef > 0
    sku, cl, coef = sku[keep], cl[keep], coef[keep]
    if not len(coef):
        return 0.0
    if len(coef) > _LP_MAX_COLS:
        return _knapsack_bound(coef, sku, width, float(cap.sum()))
    m = len(coef)
    rows_sku, row_idx = np.unique(sku, return_inverse=True)
    A_sku = sp.csr_matrix((np.ones(m), (row_idx, np.arange(m))), shape=(len(rows_sku), m))
    A_cap = sp.csr_matrix((width[sku], (cl, np.arange(m))), shape=(len(cap), m))
    res = linprog(-coef, A_ub=sp.vstack([A_sku, A_cap]).tocsr(),
                  b_ub=np.concatenate([np.ones(len(rows_sku)), cap]), bounds=(0, 1), method="highs")
    if res.status != 0:
        return _knapsack_bound(coef, sku, width, float(cap.sum()))
    # small relative slack keeps the value an upper bound under LP tolerances
    return -res.fun * (1 + 1e-9) + 1e-9


def _knapsack_bound(coef, sku, width, room: float) -> float:
    best = np.full(width.shape[0], -np.inf)
    np.maximum.at(best, sku, coef)
    has = best > 0
    val, w = best[has], width[has]
    total = 0.0
    for i in np.argsort(-val / w, kind="stable"):
        take = min(1.0, room / w[i])
        total += take * val[i]
        room -= take * w[i]
        if room <= 0:
            break
    return total


def solve_heuristic(model: MilpModel, control: SolveControl | None = None) -> Solution:
    """Greedy fill, balance repair, then insert/relocate/swap/eject moves until none improves."""
    control = control or SolveControl(mode="heuristic")
    check_model(model)
    start = time.perf_counter()
    deadline = start + control.time_limit_s
    rng = np.random.default_rng(control.seed)
    state = _State(model)
    _construct(state)
    _repair(state, deadline)
    if state.feasible_now():
        _local_search(state, deadline, rng)
    timed_out = time.perf_counter() >= deadline

    x = np.zeros(model.n_x)
    placed = np.flatnonzero(state.shelf_of >= 0)
    x[state.J[placed, state.shelf_of[placed]]] = 1.0
    full = Completion(model).complete(x) if state.feasible_now() else None
    bound = fractional_bound(model)
    meta = {"solver": "heuristic", "seed": control.seed, "stopped_by_time": timed_out}
    runtime = time.perf_counter() - start
    if full is None:
        return solution_from_vector(model, None, bound=bound, runtime_s=runtime, status="time_limit", meta=meta)
    obj = model.objective_value(full)
    gap = relative_gap(max(bound, obj), obj)
    status = "optimal" if gap <= _EPS else ("gap_reached" if gap <= control.gap_target else "time_limit")
    return solution_from_vector(model, full, bound=bound, runtime_s=runtime, status=status, meta=meta)
