import math

import pytest

from pickloop.core import (DAYS, Instance, Sku, Solution, ValidationError, eligible_shelves, fold_sunday,
                           relative_gap, station_capacity, total_picks, validate_instance)
from pickloop.layout import Layout, Shelf


def test_sunday_folds_into_saturday():
    assert fold_sunday([1, 2, 3, 4, 5, 6, 7]) == (1, 2, 3, 4, 5, 13)
    assert fold_sunday([1] * 6) == (1,) * 6
    with pytest.raises(ValidationError):
        fold_sunday([1] * 5)


def test_average_picks_is_mean_over_six_days():
    s = Sku.from_day_picks("a", 0.1, 100, 100, [6, 0, 0, 0, 0, 0, 6])
    assert s.picks_by_day == (6.0, 0.0, 0.0, 0.0, 0.0, 6.0)
    assert s.picks_avg == pytest.approx(2.0)
    assert len(DAYS) == 6


def test_solution_sorts_pairs_and_keeps_duplicates():
    sol = Solution(placements=(("b", "r2"), ("a", "r1"), ("b", "r1")))
    assert [tuple(p) for p in sol.placements] == [("a", "r1"), ("b", "r1"), ("b", "r2")]
    assert sol.assignment == {"a": "r1", "b": "r1"}
    assert sol.n_selected == 2
    with pytest.raises(ValidationError):
        Solution(status="done")


def test_relative_gap():
    assert relative_gap(10.0, 10.0) == 0.0
    assert relative_gap(11.0, 10.0) == pytest.approx(1 / 11)
    assert relative_gap(math.inf, 10.0) == math.inf
    assert relative_gap(0.0, 0.0) == 0.0


def test_validation_reports_bad_records():
    bad = Instance((Sku("a", -1.0, 100, 100, 1.0, (1.0,) * 6), Sku("a", 0.5, 0, 100, 1.0, (1.0,) * 6)))
    families = {v.subject for v in validate_instance(bad)}
    assert "a" in families
    assert validate_instance(Instance((Sku.from_day_picks("a", 0.5, 100, 100, [1] * 6),))) == []


def test_total_picks(pair):
    inst, _ = pair
    assert total_picks(inst) == pytest.approx(40.0)


def test_eligible_shelves_respects_height_and_width(pair):
    inst, layout = pair
    a = inst.skus[0]
    assert eligible_shelves(a, layout) == frozenset({"r1", "r2"})
    tall = Sku.from_day_picks("t", 0.5, 300, 100, [1] * 6)
    wide = Sku.from_day_picks("w", 0.5, 100, 200, [1] * 6)
    assert eligible_shelves(tall, layout) == frozenset()
    assert eligible_shelves(wide, layout) == frozenset()


def test_precedence_pruning_keeps_room_for_lower_ranks():
    layout = Layout(2, (Shelf("a", 1, 250, 100, 1.0), Shelf("b", 2, 250, 100, 1.0)))
    late = Sku.from_day_picks("late", 0.5, 100, 50, [1] * 6, rank=3)
    # 150 mm of mandatory rank-2 width cannot fit into station 1 alone
    assert eligible_shelves(late, layout, {1: 0.0, 2: 150.0, 3: 70.0}, 20) == frozenset({"b"})
    assert eligible_shelves(late, layout, {1: 0.0, 2: 100.0, 3: 70.0}, 20) == frozenset({"a", "b"})


def test_station_capacity_adds_one_separator_per_shelf():
    layout = Layout(2, (Shelf("a", 1, 250, 100, 1.0), Shelf("b", 1, 250, 50, 1.0), Shelf("c", 2, 250, 70, 1.0)))
    cap = station_capacity(layout, 20)
    assert cap == {1: pytest.approx(190.0), 2: pytest.approx(90.0)}
