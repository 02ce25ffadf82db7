from __future__ import annotations

import pytest

from pickloop.core import Instance, Sku, Solution
from pickloop.layout import Layout, Shelf
from pickloop.model import SolveParams
from pickloop.scenarios import reference_pair

FLAT = [10] * 6
# same weekly total as FLAT, with the surplus concentrated on Friday
FRIDAY_HEAVY = [9, 9, 9, 9, 14, 10]


@pytest.fixture
def pair():
    return reference_pair()


@pytest.fixture
def pair_params():
    return SolveParams(alpha=1.0)


def audit_fixture():
    """Three stations, a feasible plan and one spare SKU, built so that
    single edits break exactly one constraint family.

    Every station has two 300 mm shelves and one low 100 mm shelf; each SKU is
    200 mm tall and 200 mm wide, so a shelf holds one SKU. Ranks run 1,2 | 2,2 | 2,3
    across the stations and every placed SKU has flat weekday picks.
    """
    ranks = {"S1": 1, "S2": 2, "S3": 2, "S4": 2, "S5": 2, "S6": 3, "U": 2}
    skus = tuple(Sku.from_day_picks(v, 0.5, 200, 200, FRIDAY_HEAVY if v == "U" else FLAT, rank=o)
                 for v, o in ranks.items())
    shelves = []
    for k in (1, 2, 3):
        shelves += [Shelf(f"K{k}-a", k, 250, 300, 1.0), Shelf(f"K{k}-b", k, 250, 300, 2.0),
                    Shelf(f"K{k}-low", k, 100, 300, 2.0)]
    base = {"S1": "K1-a", "S2": "K1-b", "S3": "K2-a", "S4": "K2-b", "S5": "K3-a", "S6": "K3-b"}
    params = SolveParams(alpha=1.0, delta=0.25, delta_day=0.10)
    return Instance(skus, separator_gap_mm=20), Layout(3, tuple(shelves)), base, params


def mutations(base: dict[str, str]) -> dict[str, Solution]:
    """One targeted edit of the feasible plan per constraint family."""
    def edit(**changes):
        m = dict(base)
        for v, r in changes.items():
            if r is None:
                m.pop(v)
            else:
                m[v] = r
        return Solution.from_mapping(m)

    return {
        "uniqueness": Solution(placements=tuple(base.items()) + (("S4", "K2-low"),)),
        "height": edit(S2="K1-low"),
        "width": edit(S2="K1-a"),
        "precedence": edit(S1="K2-a", S3="K1-a"),
        "balance": edit(S1=None),
        "balance_day": edit(S4=None, U="K2-b"),
    }


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
