"""Picking-loop geometry: stations, racks, shelves and picker distances."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from pickloop.core import ValidationError

TYPE1_HEIGHT_MM = 250
TYPE2_HEIGHT_MM = 450
TYPE1_WIDTH_MM = 1000
TYPE2_WIDTH_MM = 1200

# metres, keyed by (rack group, is face-level row)
DEFAULT_DISTANCES = {
    ("front_inner", True): 0.95,
    ("front_inner", False): 1.90,
    ("front_outer", True): 1.90,
    ("front_outer", False): 2.85,
    ("back", True): 2.85,
    ("back", False): 3.80,
}


@dataclass(frozen=True)
class Shelf:
    id: str
    station: int
    height_mm: int
    width_mm: int
    distance: float
    kind: str = "type1"

    @property
    def efficiency(self) -> float:
        return picking_efficiency(self)


@dataclass(frozen=True)
class ShelfTemplate:
    """A shelf position within one station, replicated by ``scale_layout``."""

    label: str
    height_mm: int
    width_mm: int
    distance: float
    kind: str


@dataclass(frozen=True)
class Layout:
    """Stations numbered 1..K (an int K is accepted) and their shelves."""

    stations: tuple[int, ...]
    shelves: tuple[Shelf, ...]

    def __post_init__(self):
        stations = range(1, self.stations + 1) if isinstance(self.stations, int) else self.stations
        object.__setattr__(self, "stations", tuple(stations))
        object.__setattr__(self, "shelves", tuple(self.shelves))
        ids = [r.id for r in self.shelves]
        if len(set(ids)) != len(ids):
            raise ValidationError("shelf ids must be unique")
        known = set(self.stations)
        if list(self.stations) != list(range(1, len(self.stations) + 1)):
            raise ValidationError("stations must be numbered 1..|K|")
        for r in self.shelves:
            if r.station not in known:
                raise ValidationError(f"shelf {r.id} references unknown station {r.station}")
            if r.distance <= 0:
                raise ValidationError(f"shelf {r.id} has nonpositive distance")
            if r.width_mm <= 0 or r.height_mm <= 0:
                raise ValidationError(f"shelf {r.id} has nonpositive dimensions")

    @property
    def n_stations(self) -> int:
        return len(self.stations)

    def by_id(self) -> dict[str, Shelf]:
        return {r.id: r for r in self.shelves}

    def station_shelves(self, k: int) -> list[Shelf]:
        return [r for r in self.shelves if r.station == k]


def default_station_pattern() -> tuple[ShelfTemplate, ...]:
    """24 shelves: 4 front racks (2 inner, 2 outer) of type 1, 2 back racks of type 2."""
    racks = [("FI1", "front_inner"), ("FI2", "front_inner"),
             ("FO1", "front_outer"), ("FO2", "front_outer"),
             ("B1", "back"), ("B2", "back")]
    out = []
    for rack, group in racks:
        back = group == "back"
        for row in (1, 2, 3, 4):
            out.append(ShelfTemplate(
                label=f"{rack}-{row}",
                height_mm=TYPE2_HEIGHT_MM if back else TYPE1_HEIGHT_MM,
                width_mm=TYPE2_WIDTH_MM if back else TYPE1_WIDTH_MM,
                distance=DEFAULT_DISTANCES[group, row in (2, 3)],
                kind="type2" if back else "type1",
            ))
    return tuple(out)


def scale_layout(n_stations: int, pattern: Sequence[ShelfTemplate] | None = None) -> Layout:
    """Replicate one station's shelf pattern over ``n_stations`` stations."""
    if n_stations < 1:
        raise ValidationError("need at least one station")
    pattern = default_station_pattern() if pattern is None else tuple(pattern)
    if not pattern:
        raise ValidationError("station pattern has zero shelves")
    shelves = [
        Shelf(f"K{k}-{t.label}", k, t.height_mm, t.width_mm, t.distance, t.kind)
        for k in range(1, n_stations + 1)
        for t in pattern
    ]
    return Layout(tuple(range(1, n_stations + 1)), tuple(shelves))


def build_default_layout() -> Layout:
    return scale_layout(8)


def picking_efficiency(shelf: Shelf) -> float:
    if shelf.distance <= 0:
        raise ValidationError(f"shelf {shelf.id} has nonpositive distance {shelf.distance}")
    return 1.0 / shelf.distance
