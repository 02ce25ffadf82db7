"""Small hand-built instances with known answers, for tests, demos and the CLI docs."""

from __future__ import annotations

from pickloop.core import Instance, Sku
from pickloop.layout import Layout, Shelf


def reference_pair() -> tuple[Instance, Layout]:
    """Two SKUs and two shelves on one station.

    Only one SKU fits per shelf (100 + 20 > 150 / 2), so with alpha = 1 the
    best plan puts the busier SKU B on the near shelf and A on the far one.
    """
    skus = (Sku.from_day_picks("A", 0.5, 100, 100, [10] * 6),
            Sku.from_day_picks("B", 0.4, 100, 100, [30] * 6))
    shelves = (Shelf("r1", 1, 250, 150, 1.0), Shelf("r2", 1, 250, 150, 2.0))
    return Instance(skus, separator_gap_mm=20), Layout(1, shelves)


def friday_clusters() -> tuple[Instance, Layout]:
    """Two Friday-peaked SKUs and two Tuesday-peaked SKUs on two stations.

    The Friday pair has slightly more average picks, so an average-balanced
    plan puts both on the near station; weekday balance forces pairing each
    Friday SKU with a Tuesday SKU instead.
    """
    friday = [51, 51, 51, 50, 109, 51]
    tuesday = [50, 107, 50, 50, 50, 50]
    skus = (Sku.from_day_picks("A", 0.5, 200, 400, friday),
            Sku.from_day_picks("B", 0.5, 200, 400, friday),
            Sku.from_day_picks("C", 0.5, 200, 400, tuesday),
            Sku.from_day_picks("D", 0.5, 200, 400, tuesday))
    shelves = (Shelf("K1-a", 1, 250, 500, 1.0), Shelf("K1-b", 1, 250, 500, 1.0),
               Shelf("K2-a", 2, 250, 500, 2.0), Shelf("K2-b", 2, 250, 500, 2.0))
    return Instance(skus, separator_gap_mm=20), Layout(2, shelves)


def selection_trap() -> tuple[Instance, Layout]:
    """Score-only selection picks two SKUs whose workloads cannot be balanced.

    X and Z carry equal picks and balance perfectly on the two stations, but
    Y's score is a shade higher than Z's, so selecting by score takes X and Y.
    """
    skus = (Sku.from_day_picks("X", 0.50, 200, 400, [100] * 6),
            Sku.from_day_picks("Y", 0.49, 200, 400, [10] * 6),
            Sku.from_day_picks("Z", 0.48, 200, 400, [100] * 6))
    shelves = (Shelf("K1-a", 1, 250, 500, 1.0), Shelf("K2-a", 2, 250, 500, 1.0))
    return Instance(skus, separator_gap_mm=20), Layout(2, shelves)
