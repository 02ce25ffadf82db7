"""Synthetic SKU assortments with realistic score, demand, size and weekday structure."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from pickloop.core import DAYS, Instance, Sku, ValidationError, validate_instance
from pickloop.layout import TYPE1_HEIGHT_MM, TYPE2_HEIGHT_MM, Layout, Shelf

PROFILE_KINDS = ("baseline", "early_week", "late_week", "exceptional")

# relative weekday weights, Monday first
_EARLY_WEEK = (1.10, 1.45, 1.05, 0.95, 0.95, 0.90)
_LATE_WEEK = (0.95, 0.95, 1.00, 1.10, 1.45, 0.95)


@dataclass(frozen=True)
class GeneratorConfig:
    """Distribution parameters of the synthetic assortment.

    ``log_corr`` is the correlation of the log-score and log-picks normals.
    It is pinned by :func:`calibrate_log_correlation` so that the level-scale
    Pearson correlation of score and picks lands on ``score_picks_corr``.
    """

    n_skus: int = 4693
    seed: int = 7
    log_score_mean: float = -7.81
    log_score_sd: float = 2.34
    score_cap: float = 1.0
    log_picks_mean: float = 6.84
    log_picks_sd: float = 0.85
    score_picks_corr: float = 0.718
    log_corr: float = 0.995
    type2_only_frac: float = 0.174
    rank_shares: tuple[float, float, float] = (0.10, 0.80, 0.10)
    day_profile_mix: dict = field(default_factory=lambda: {
        "baseline": 0.61, "early_week": 0.22, "late_week": 0.13, "exceptional": 0.04})
    day_noise: float = 0.05
    exceptional_day: str = "Fri"
    exceptional_share: float = 0.30
    # target stock in units: body below 20, a middle band, and the widest 1%
    stock_body_frac: float = 0.91
    stock_body_log_mean: float = 2.12
    stock_body_log_sd: float = 0.45
    stock_mid_range: tuple[int, int] = (20, 50)
    stock_tail_frac: float = 0.01
    stock_tail_shift: float = 50.0
    stock_tail_mean: float = 100.35
    stock_max: int = 252
    stacking_factor: int = 3
    unit_width_range_mm: tuple[int, int] = (20, 70)
    separator_gap_mm: int = 20

    def __post_init__(self):
        if self.n_skus < 0:
            raise ValidationError("n_skus must be nonnegative")
        for name in ("type2_only_frac", "stock_body_frac", "stock_tail_frac"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1]")
        if self.stock_body_frac + self.stock_tail_frac > 1.0:
            raise ValidationError("stock band fractions exceed 1")
        if not -1.0 <= self.log_corr <= 1.0:
            raise ValidationError("log_corr must lie in [-1, 1]")
        if self.log_score_sd < 0 or self.log_picks_sd < 0 or self.day_noise < 0:
            raise ValidationError("standard deviations must be nonnegative")
        if len(self.rank_shares) != 3 or min(self.rank_shares) < 0 or not math.isclose(sum(self.rank_shares), 1.0):
            raise ValidationError("rank_shares must be three nonnegative weights summing to 1")
        mix = self.day_profile_mix
        if set(mix) - set(PROFILE_KINDS) or min(mix.values(), default=0) < 0 \
                or not math.isclose(sum(mix.values()), 1.0):
            raise ValidationError(f"day_profile_mix must weight {PROFILE_KINDS} and sum to 1")
        if self.exceptional_day not in DAYS:
            raise ValidationError(f"exceptional_day must be one of {DAYS}")
        if not 0.25 < self.exceptional_share <= 1.0:
            raise ValidationError("exceptional_share must exceed 0.25")
        lo, hi = self.unit_width_range_mm
        if not 0 < lo <= hi:
            raise ValidationError("unit_width_range_mm must be a positive range")
        if self.stacking_factor < 1:
            raise ValidationError("stacking_factor must be positive")


def _stratified_normals(rng: np.random.Generator, n: int) -> np.ndarray:
    """Standard normals from one uniform per equal-probability stratum, shuffled."""
    if n == 0:
        return np.zeros(0)
    return ndtri((rng.permutation(n) + rng.random(n)) / n)


def _exact_counts(shares, n: int) -> np.ndarray:
    """Largest-remainder split of ``n`` items by ``shares``."""
    quota = np.asarray(shares, dtype=float) * n
    counts = np.floor(quota).astype(np.int64)
    rest = n - counts.sum()
    order = np.lexsort((np.arange(len(quota)), -(quota - counts)))
    counts[order[:rest]] += 1
    return counts


def apportion(total: int, weights) -> np.ndarray:
    """Integer split of ``total`` proportional to ``weights`` (largest remainder, ties to earlier)."""
    w = np.asarray(weights, dtype=float)
    if total == 0 or w.sum() <= 0:
        return np.zeros(len(w), dtype=np.int64)
    return _exact_counts(w / w.sum(), int(total))


def draw_scores_picks(config: GeneratorConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Capped lognormal scores and integer weekly picks with correlated logs."""
    n = config.n_skus
    z1 = _stratified_normals(rng, n)
    z2 = _stratified_normals(rng, n)
    rho = config.log_corr
    scores = np.minimum(np.exp(config.log_score_mean + config.log_score_sd * z1), config.score_cap)
    log_p = config.log_picks_mean + config.log_picks_sd * (rho * z1 + math.sqrt(1 - rho * rho) * z2)
    picks = np.maximum(np.rint(np.exp(log_p)), 1).astype(np.int64)
    return scores, picks


def draw_target_stock(config: GeneratorConfig, rng: np.random.Generator) -> np.ndarray:
    n = config.n_skus
    n_body, n_mid, n_tail = _exact_counts(
        [config.stock_body_frac, 1 - config.stock_body_frac - config.stock_tail_frac, config.stock_tail_frac], n)
    body = np.clip(np.rint(np.exp(config.stock_body_log_mean + config.stock_body_log_sd
                                  * _stratified_normals(rng, n_body))), 1, config.stock_mid_range[0] - 1)
    lo, hi = config.stock_mid_range
    mid = rng.integers(lo, hi, size=n_mid)
    u = (rng.permutation(n_tail) + rng.random(n_tail)) / max(n_tail, 1)
    tail = config.stock_tail_shift - (config.stock_tail_mean - config.stock_tail_shift) * np.log1p(-u)
    tail = np.clip(np.rint(tail), hi, config.stock_max)
    stock = np.concatenate([body, mid, tail]).astype(np.int64)
    return stock[rng.permutation(n)]


def generate_day_profiles(config: GeneratorConfig, picks, rng: np.random.Generator | None = None,
                          kinds: list[str] | None = None) -> np.ndarray:
    """Split each weekly pick total over the six weekdays.

    Profile kinds are assigned in exact proportion to ``day_profile_mix``
    unless ``kinds`` is given. Rows sum to the weekly totals exactly.
    """
    picks = np.asarray(picks, dtype=np.int64)
    if np.any(picks < 0):
        raise ValidationError("weekly picks must be nonnegative")
    n = len(picks)
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    if kinds is None:
        counts = _exact_counts([config.day_profile_mix.get(k, 0.0) for k in PROFILE_KINDS], n)
        kinds = list(np.repeat(PROFILE_KINDS, counts)[rng.permutation(n)]) if n else []
    ex_day = DAYS.index(config.exceptional_day)
    ex = np.full(len(DAYS), (1 - config.exceptional_share) / (len(DAYS) - 1))
    ex[ex_day] = config.exceptional_share
    base = {"baseline": np.ones(len(DAYS)), "early_week": np.asarray(_EARLY_WEEK),
            "late_week": np.asarray(_LATE_WEEK), "exceptional": ex}
    noise = np.exp(config.day_noise * rng.standard_normal((n, len(DAYS)))) if config.day_noise else np.ones((n, len(DAYS)))
    out = np.zeros((n, len(DAYS)), dtype=np.int64)
    for i, (total, kind) in enumerate(zip(picks, kinds)):
        w = base[kind] / base[kind].sum()
        if kind != "exceptional":
            w = w * noise[i]
        row = apportion(int(total), w)
        if kind == "exceptional":
            # rounding must not pull the peak day back to a quarter or less
            while total and row[ex_day] * 4 <= total:
                donor = int(np.argmax(np.where(np.arange(len(DAYS)) == ex_day, -1, row)))
                row[donor] -= 1
                row[ex_day] += 1
        out[i] = row
    return out


def generate_instance(config: GeneratorConfig | None = None) -> Instance:
    """Draw a full assortment; the same config always yields the same instance."""
    config = config or GeneratorConfig()
    rng = np.random.default_rng(config.seed)
    n = config.n_skus
    scores, weekly = draw_scores_picks(config, rng)
    stock = draw_target_stock(config, rng)
    n_type2 = int(round(config.type2_only_frac * n))
    tall = np.zeros(n, dtype=bool)
    tall[rng.permutation(n)[:n_type2]] = True
    heights = np.where(tall, rng.integers(TYPE1_HEIGHT_MM + 1, TYPE2_HEIGHT_MM + 1, size=n),
                       rng.integers(60, TYPE1_HEIGHT_MM + 1, size=n))
    lo, hi = config.unit_width_range_mm
    unit_w = rng.integers(lo, hi + 1, size=n)
    widths = unit_w * np.ceil(stock / config.stacking_factor).astype(np.int64)
    ranks = np.repeat([1, 2, 3], _exact_counts(config.rank_shares, n))[rng.permutation(n)] if n else np.zeros(0, int)
    days = generate_day_profiles(config, weekly, rng)
    digits = max(5, len(str(n)))
    skus = tuple(
        Sku.from_day_picks(f"S{i + 1:0{digits}d}", float(scores[i]), int(heights[i]), int(widths[i]),
                           [int(v) for v in days[i]], rank=int(ranks[i]), target_stock=int(stock[i]))
        for i in range(n)
    )
    inst = Instance(skus, separator_gap_mm=config.separator_gap_mm)
    problems = validate_instance(inst)
    if problems:
        raise ValidationError(f"generator produced an invalid instance: {problems[0]}")
    return inst


def calibration_report(instance: Instance) -> dict[str, float]:
    """Summary statistics used to check a generated assortment against its targets."""
    if len(instance) == 0:
        raise ValidationError("calibration report needs at least one SKU")
    skus = instance.skus
    scores = np.asarray([s.score for s in skus])
    picks = np.asarray([s.picks_avg for s in skus])
    days = np.asarray([s.picks_by_day for s in skus], dtype=float)
    weekly = days.sum(axis=1)
    log_s = np.log(scores)
    report = {
        "n_skus": float(len(skus)),
        "log_score_mean": float(log_s.mean()),
        "log_score_sd": float(log_s.std(ddof=1)) if len(skus) > 1 else 0.0,
        "log_picks_mean": float(np.log(weekly[weekly > 0]).mean()) if np.any(weekly > 0) else math.nan,
        "score_picks_corr": float(np.corrcoef(scores, picks)[0, 1]) if len(skus) > 1 and scores.std() > 0
        and picks.std() > 0 else math.nan,
        "type2_only_frac": float(np.mean([s.height_mm > TYPE1_HEIGHT_MM for s in skus])),
    }
    stock = np.asarray([s.target_stock for s in skus if s.target_stock is not None], dtype=float)
    if len(stock):
        report["stock_frac_below_20"] = float(np.mean(stock < 20))
        report["stock_mean_below_20"] = float(stock[stock < 20].mean()) if np.any(stock < 20) else math.nan
        top = np.sort(stock)[::-1][: max(1, int(round(0.01 * len(stock))))]
        report["stock_top1pct_mean"] = float(top.mean())
        report["stock_max"] = float(stock.max())
        for q in (0.5, 0.9, 0.99):
            report[f"stock_q{int(q * 100)}"] = float(np.quantile(stock, q))
    total = days.sum()
    for t, day in enumerate(DAYS):
        report[f"share_{day}"] = float(days[:, t].sum() / total) if total > 0 else math.nan
    return report


def calibrate_log_correlation(config: GeneratorConfig | None = None, grid=None, n_seeds: int = 50,
                              ) -> tuple[float, list[tuple[float, float, float]]]:
    """Pick the log-scale correlation whose median level correlation is nearest the target.

    Returns the chosen value and rows ``(log_corr, median, pass_rate)`` where
    the pass rate counts seeds within 0.05 of the target.
    """
    config = config or GeneratorConfig()
    grid = np.round(np.arange(0.95, 1.0001, 0.005), 4) if grid is None else grid
    rows = []
    for rho in grid:
        cfg = _replace(config, log_corr=float(rho))
        vals = []
        for s in range(n_seeds):
            sc, pk = draw_scores_picks(cfg, np.random.default_rng(s))
            vals.append(np.corrcoef(sc, pk)[0, 1])
        vals = np.asarray(vals)
        rows.append((float(rho), float(np.median(vals)),
                     float(np.mean(np.abs(vals - config.score_picks_corr) <= 0.05))))
    best = min(rows, key=lambda r: (abs(r[1] - config.score_picks_corr), -r[2]))
    return best[0], rows


def _replace(config: GeneratorConfig, **changes) -> GeneratorConfig:
    from dataclasses import replace
    return replace(config, **changes)


def tiny_instance(seed: int, n_stations: int = 2, max_shelves: int = 4, max_skus: int = 8,
                  max_candidates: int = 200_000) -> tuple[Instance, Layout]:
    """Small random instance whose full assignment space is cheap to enumerate.

    Shelves hold one or two SKUs, heights mix both shelf types, ranks and
    weekday picks are random. The SKU count is capped so that
    ``(shelves + 1) ** n_skus`` stays within ``max_candidates``.
    """
    rng = np.random.default_rng(seed)
    per = int(rng.integers(1, max_shelves + 1))
    m = per * n_stations
    cap = max(1, min(max_skus, int(math.log(max_candidates) / math.log(m + 1))))
    n = int(rng.integers(2 if cap >= 2 else 1, cap + 1))
    shelves = []
    for k in range(1, n_stations + 1):
        for j in range(per):
            tall = bool(rng.random() < 0.35)
            shelves.append(Shelf(f"K{k}-{j + 1}", k, TYPE2_HEIGHT_MM if tall else TYPE1_HEIGHT_MM,
                                 int(rng.choice([200, 300, 420])), float(rng.choice([0.95, 1.9, 2.85, 3.8])),
                                 "type2" if tall else "type1"))
    skus = []
    for i in range(n):
        days = rng.integers(0, 12, size=len(DAYS))
        if days.sum() == 0:
            days[int(rng.integers(len(DAYS)))] = 1
        skus.append(Sku.from_day_picks(
            f"V{i + 1}", float(np.round(rng.uniform(0.05, 1.0), 3)),
            int(rng.choice([120, 240, 400])), int(rng.choice([80, 120, 180, 260])),
            [int(d) for d in days], rank=int(rng.choice([1, 2, 2, 3]))))
    return Instance(tuple(skus), separator_gap_mm=20), Layout(n_stations, tuple(shelves))
