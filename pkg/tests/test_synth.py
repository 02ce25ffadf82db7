from collections import Counter

import numpy as np
import pytest

from pickloop.core import DAYS, ValidationError, validate_instance
from pickloop.layout import TYPE1_HEIGHT_MM
from pickloop.solver.oracle import MAX_CANDIDATES
from pickloop.synth import (GeneratorConfig, apportion, calibration_report, generate_day_profiles,
                            generate_instance, tiny_instance)


@pytest.fixture(scope="module")
def full():
    return generate_instance()


def test_apportion_is_exact_and_proportional():
    assert apportion(10, [1, 1, 1]).tolist() == [4, 3, 3]
    assert apportion(0, [1, 2]).tolist() == [0, 0]
    assert apportion(600, [1] * 6).tolist() == [100] * 6
    row = apportion(101, [0.2, 0.3, 0.5])
    assert row.sum() == 101


def test_day_profiles_preserve_weekly_totals():
    cfg = GeneratorConfig()
    picks = np.arange(0, 400, 3)
    days = generate_day_profiles(cfg, picks, np.random.default_rng(0))
    assert days.shape == (len(picks), len(DAYS))
    assert np.array_equal(days.sum(axis=1), picks)
    assert days.min() >= 0


def test_exceptional_profiles_peak_above_a_quarter():
    cfg = GeneratorConfig()
    picks = np.array([1, 2, 3, 7, 13, 50, 333])
    days = generate_day_profiles(cfg, picks, np.random.default_rng(1), kinds=["exceptional"] * len(picks))
    fri = DAYS.index("Fri")
    assert np.all(days[:, fri] * 4 > picks)


def test_profile_mix_is_exact(full):
    # counted through the recognisable Friday peak of exceptional SKUs
    days = np.asarray([s.picks_by_day for s in full.skus])
    share = days[:, DAYS.index("Fri")] / np.maximum(days.sum(axis=1), 1)
    assert np.mean(share > 0.28) == pytest.approx(0.04, abs=0.01)


def test_generator_is_deterministic_and_valid():
    a = generate_instance(GeneratorConfig(n_skus=300, seed=5))
    b = generate_instance(GeneratorConfig(n_skus=300, seed=5))
    c = generate_instance(GeneratorConfig(n_skus=300, seed=6))
    assert a == b
    assert a != c
    assert validate_instance(a) == []


def test_structural_fractions(full):
    n = len(full)
    assert n == 4693
    assert Counter(s.rank for s in full.skus) == {1: 469, 2: 3755, 3: 469}
    assert sum(s.height_mm > TYPE1_HEIGHT_MM for s in full.skus) == round(0.174 * n)
    assert all(0 < s.score <= 1 for s in full.skus)


def test_widths_follow_stock(full):
    for s in full.skus[:500]:
        per_unit = s.width_mm / -(-s.target_stock // 3)
        assert per_unit == int(per_unit) and 20 <= per_unit <= 70


def test_stock_bands(full):
    rep = calibration_report(full)
    assert rep["stock_frac_below_20"] == pytest.approx(0.91, abs=0.005)
    assert rep["stock_max"] <= 252
    assert 6 <= rep["stock_mean_below_20"] <= 11


def test_calibration_report_fields(full):
    rep = calibration_report(full)
    assert rep["log_score_mean"] == pytest.approx(-7.81, abs=0.1)
    assert rep["log_score_sd"] == pytest.approx(2.34, abs=0.1)
    assert sum(rep[f"share_{d}"] for d in DAYS) == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        calibration_report(generate_instance(GeneratorConfig(n_skus=0)))


@pytest.mark.parametrize("bad", [dict(n_skus=-1), dict(log_corr=1.5), dict(exceptional_share=0.2),
                                 dict(rank_shares=(0.5, 0.5, 0.5)), dict(exceptional_day="Sun")])
def test_config_validation(bad):
    with pytest.raises(ValidationError):
        GeneratorConfig(**bad)


def test_tiny_instances_fit_oracle_limits():
    for seed in range(50):
        inst, layout = tiny_instance(seed)
        assert layout.n_stations == 2
        assert all(len(layout.station_shelves(k)) <= 4 for k in layout.stations)
        assert 1 <= len(inst) <= 8
        assert (len(layout.shelves) + 1) ** len(inst) <= min(200_000, MAX_CANDIDATES)
        assert validate_instance(inst) == []


def test_baseline_without_noise_splits_evenly():
    cfg = GeneratorConfig(day_profile_mix={"baseline": 1.0}, day_noise=0.0)
    picks = np.array([6, 60, 600, 7])
    days = generate_day_profiles(cfg, picks, np.random.default_rng(0))
    assert np.all(days[:3] == picks[:3, None] // 6)
    # a total not divisible by six differs from a sixth by less than one pick
    assert np.all(np.abs(days[3] - 7 / 6) < 1)
