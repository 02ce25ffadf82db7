import json
import math

import pytest

from pickloop import io
from pickloop.core import Solution
from pickloop.layout import scale_layout
from pickloop.synth import GeneratorConfig, generate_instance


def test_instance_round_trip(tmp_path):
    inst = generate_instance(GeneratorConfig(n_skus=50, seed=2))
    path = io.write_instance(inst, tmp_path / "i.json")
    assert io.read_instance(path) == inst
    data = json.loads(path.read_text())
    assert data["skus"][0]["picks_by_day"] == [int(p) for p in inst.skus[0].picks_by_day]
    assert "width_mm" in data["skus"][0]


def test_layout_round_trip(tmp_path):
    layout = scale_layout(3)
    assert io.read_layout(io.write_layout(layout, tmp_path / "l.json")) == layout


def test_solution_round_trip_keeps_duplicates(tmp_path):
    sol = Solution(placements=(("a", "r1"), ("a", "r2")), objective=1.5, bound=math.inf, gap=math.inf,
                   runtime_s=0.25, status="time_limit", meta={"x": math.nan, "nested": {"k": 1}})
    back = io.read_solution(io.write_solution(sol, tmp_path / "s.json"))
    assert back.placements == sol.placements
    assert (back.objective, back.bound, back.gap) == (1.5, math.inf, math.inf)
    assert (back.runtime_s, back.status) == (0.25, "time_limit")
    assert back.meta == {"x": None, "nested": {"k": 1}}


def test_solution_bytes_ignore_runtime():
    a = Solution(placements=(("a", "r"),), objective=1.0, runtime_s=1.0)
    b = Solution(placements=(("a", "r"),), objective=1.0, runtime_s=9.0)
    assert io.solution_bytes(a) == io.solution_bytes(b)


def test_wrong_kind_and_bad_json(tmp_path):
    path = io.write_layout(scale_layout(1), tmp_path / "l.json")
    with pytest.raises(io.FileFormatError):
        io.read_instance(path)
    (tmp_path / "bad.json").write_text("{nope")
    with pytest.raises(io.FileFormatError):
        io.read_solution(tmp_path / "bad.json")
    (tmp_path / "short.json").write_text(json.dumps({"format": "pickloop-instance", "skus": [{"id": "a"}]}))
    with pytest.raises(io.FileFormatError):
        io.read_instance(tmp_path / "short.json")


def test_csv_round_trip(tmp_path):
    path = io.write_csv(tmp_path / "t.csv", ["a", "b"], [[1, 0.1], ["x", math.nan]])
    assert io.read_csv(path) == [{"a": "1", "b": "0.1"}, {"a": "x", "b": ""}]
