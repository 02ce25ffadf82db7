"""Domain types for SKU catalogues and storage-assignment solutions."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Mapping, NamedTuple, Sequence

if TYPE_CHECKING:
    from pickloop.layout import Layout, Shelf

DAYS: tuple[str, ...] = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat")
RANKS: tuple[int, ...] = (1, 2, 3)
STATUSES = ("optimal", "gap_reached", "time_limit", "infeasible")

_MEAN_RTOL = 1e-9


class ValidationError(ValueError):
    """Raised when inputs break a precondition that cannot be reported as data."""


@dataclass(frozen=True)
class Sku:
    id: str
    score: float
    height_mm: int
    width_mm: int
    picks_avg: float
    picks_by_day: tuple[float, ...]
    rank: int = 2
    target_stock: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "picks_by_day", tuple(float(p) for p in self.picks_by_day))

    @classmethod
    def from_day_picks(cls, id: str, score: float, height_mm: int, width_mm: int,
                       picks_by_day: Sequence[float], rank: int = 2,
                       target_stock: int | None = None) -> "Sku":
        """Build a SKU whose average picks is the mean of its daily picks.

        A 7-entry sequence is read as Monday..Sunday; Sunday picks are
        spill-over from Saturday and are folded into it.
        """
        days = fold_sunday(picks_by_day)
        return cls(id, score, height_mm, width_mm, sum(days) / len(DAYS), days, rank,
                   target_stock)


def fold_sunday(picks: Sequence[float]) -> tuple[float, ...]:
    picks = tuple(float(p) for p in picks)
    if len(picks) == 7:
        return picks[:5] + (picks[5] + picks[6],)
    if len(picks) != len(DAYS):
        raise ValidationError(f"expected 6 or 7 daily pick values, got {len(picks)}")
    return picks


@dataclass(frozen=True)
class Instance:
    skus: tuple[Sku, ...]
    separator_gap_mm: int = 0
    days: tuple[str, ...] = DAYS

    def __post_init__(self):
        object.__setattr__(self, "skus", tuple(self.skus))

    def __len__(self):
        return len(self.skus)

    def by_id(self) -> dict[str, Sku]:
        return {s.id: s for s in self.skus}


@dataclass(frozen=True)
class Violation:
    """One broken rule; ``family`` groups violations for audits."""

    family: str
    subject: str
    message: str

    def __str__(self):
        return f"[{self.family}] {self.subject}: {self.message}"


class Placement(NamedTuple):
    sku_id: str
    shelf_id: str


@dataclass(frozen=True)
class Solution:
    """Assignment of SKUs to shelves plus solve metadata.

    ``placements`` is kept as a sequence of pairs rather than a dict so that
    externally produced solutions with a SKU listed twice can be audited.
    """

    placements: tuple[Placement, ...] = ()
    objective: float = 0.0
    bound: float = 0.0
    gap: float = 0.0
    runtime_s: float = 0.0
    status: str = "optimal"
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        pairs = tuple(Placement(str(v), str(r)) for v, r in self.placements)
        object.__setattr__(self, "placements", tuple(sorted(pairs)))
        if self.status not in STATUSES:
            raise ValidationError(f"unknown status {self.status!r}")

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str], **kwargs) -> "Solution":
        return cls(placements=tuple(mapping.items()), **kwargs)

    @property
    def assignment(self) -> dict[str, str]:
        """SKU id to shelf id; a duplicated SKU keeps its smallest shelf id."""
        out: dict[str, str] = {}
        for v, r in self.placements:
            out.setdefault(v, r)
        return out

    @property
    def n_selected(self) -> int:
        return len(self.assignment)


def relative_gap(bound: float, objective: float, eps: float = 1e-12) -> float:
    """Relative distance between best bound and incumbent of a maximisation."""
    if math.isinf(bound) and bound > 0:
        return math.inf
    return max(0.0, (bound - objective) / max(abs(bound), eps))


def validate_instance(instance: Instance) -> list[Violation]:
    """Return every broken invariant of ``instance``; empty when valid."""
    out: list[Violation] = []
    if len(instance.days) != len(DAYS):
        out.append(Violation("instance", "days", f"expected {len(DAYS)} days, got {len(instance.days)}"))
    if instance.separator_gap_mm < 0:
        out.append(Violation("instance", "separator_gap_mm", "separator gap must be nonnegative"))
    counts = Counter(s.id for s in instance.skus)
    for sku_id, n in sorted(counts.items()):
        if n > 1:
            out.append(Violation("sku", sku_id, f"duplicate id ({n} occurrences)"))
    for s in instance.skus:
        if not (0.0 < s.score <= 1.0) or math.isnan(s.score):
            out.append(Violation("sku", s.id, f"score {s.score} outside (0, 1]"))
        if s.height_mm <= 0:
            out.append(Violation("sku", s.id, "height_mm must be positive"))
        if s.width_mm <= 0:
            out.append(Violation("sku", s.id, "width_mm must be positive"))
        if s.rank not in RANKS:
            out.append(Violation("sku", s.id, f"rank {s.rank} not in {RANKS}"))
        if len(s.picks_by_day) != len(DAYS):
            out.append(Violation("sku", s.id, f"picks_by_day has {len(s.picks_by_day)} entries"))
            continue
        if any(p < 0 or math.isnan(p) for p in s.picks_by_day) or s.picks_avg < 0:
            out.append(Violation("sku", s.id, "negative picks"))
            continue
        mean = math.fsum(s.picks_by_day) / len(DAYS)
        if not math.isclose(s.picks_avg, mean, rel_tol=_MEAN_RTOL):
            out.append(Violation("sku", s.id, f"picks_avg {s.picks_avg} != mean(picks_by_day) {mean}"))
    return out


def total_picks(instance: Instance) -> float:
    """Sum of average picks over the whole catalogue, selected or not."""
    total = math.fsum(s.picks_avg for s in instance.skus)
    if total <= 0:
        raise ValidationError("zero total picks")
    return total


def rank_width_demand(skus: Iterable[Sku], gap_mm: int) -> dict[int, float]:
    """Total width including one separator per SKU, by precedence rank."""
    out = {o: 0.0 for o in RANKS}
    for s in skus:
        out[s.rank] = out.get(s.rank, 0.0) + s.width_mm + gap_mm
    return out


def eligible_shelves(sku: Sku, layout: "Layout",
                     rank_widths: Mapping[int, float] | None = None,
                     gap_mm: int = 0) -> frozenset[str]:
    """Shelves that can physically hold ``sku``, optionally pruned by precedence.

    ``rank_widths`` gives, per rank, the width demand (SKU width plus one
    separator each) of SKUs that *must* be placed. A rank-o SKU at station k
    forces the mandatory SKUs of ranks o-1, o-2, ... (down to the first empty
    rank) into stations 1..k, and symmetrically the higher ranks into
    stations k..|K|; station k is dropped when either group cannot fit in the
    capacity ``sum(w_r + g)`` of those stations.
    Without ``rank_widths`` no pruning is done, since optional SKUs never make
    a station infeasible.
    """
    fits = [r for r in layout.shelves if sku.height_mm <= r.height_mm and sku.width_mm <= r.width_mm]
    if not rank_widths:
        return frozenset(r.id for r in fits)
    cap = station_capacity(layout, gap_mm)
    stations = layout.stations
    below = _chained_demand(rank_widths, sku.rank, -1)
    above = _chained_demand(rank_widths, sku.rank, +1)
    allowed = set()
    prefix = 0.0
    total = sum(cap.values())
    for k in stations:
        prefix += cap[k]
        suffix = total - prefix + cap[k]
        if below <= prefix and above <= suffix:
            allowed.add(k)
    return frozenset(r.id for r in fits if r.station in allowed)


def _chained_demand(rank_widths: Mapping[int, float], rank: int, step: int) -> float:
    # ordering only propagates through ranks that actually hold SKUs
    total = 0.0
    o = rank + step
    while rank_widths.get(o, 0.0) > 0:
        total += rank_widths[o]
        o += step
    return total


def station_capacity(layout: "Layout", gap_mm: int) -> dict[int, float]:
    cap = {k: 0.0 for k in layout.stations}
    for r in layout.shelves:
        cap[r.station] += r.width_mm + gap_mm
    return cap
