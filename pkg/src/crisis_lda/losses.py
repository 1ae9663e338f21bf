"""Output-loss measures for crisis episodes.

Thirteen measures are supported. Twelve compare observed GDP with a
counterfactual path (HP-filtered or average-growth trend, 3- or 10-year
window) and end the episode either when growth regains its pre-crisis average
(``perc``) or when the GDP level regains the counterfactual (``trend``).
``ABS`` uses no counterfactual and accumulates shortfalls against the
pre-crisis GDP level.
"""
from __future__ import annotations

import csv
import enum
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InsufficientHistory, ValidationError
from .ingest import CountryMeta, CrisisEpisode, CrisisKind, GdpPanel, GdpSeries, IncomeGroup, Region
from .trend import DEFAULT_HP_LAMBDA, Counterfactual, TrendMethod, TrendSpec, build_counterfactual

GROWTH_TIE_TOL = 1e-12
# relative slack when comparing GDP with a counterfactual level; absorbs round-off in exp(log trend)
LEVEL_TIE_TOL = 1e-12
ABS_CAP_YEARS = 10


class EndRule(enum.Enum):
    GROWTH = "perc"
    LEVEL = "trend"
    ABSOLUTE = "abs"


class MeasureId(enum.Enum):
    HP10perc = "HP10perc"
    HP10trend = "HP10trend"
    HP3perc = "HP3perc"
    HP3trend = "HP3trend"
    AG10_5perc = "AG10_5perc"
    AG10_5trend = "AG10_5trend"
    AG3_5perc = "AG3_5perc"
    AG3_5trend = "AG3_5trend"
    AG10_10perc = "AG10_10perc"
    AG10_10trend = "AG10_10trend"
    AG3_10perc = "AG3_10perc"
    AG3_10trend = "AG3_10trend"
    ABS = "ABS"

    @classmethod
    def parse(cls, token: str) -> "MeasureId":
        key = token.strip().replace(" ", "").replace("(", "").replace(")", "").lower()
        for m in cls:
            if m.value.lower().replace("_", "") == key.replace("_", ""):
                return m
        raise ValidationError(f"unknown loss measure {token!r}")

    @property
    def method(self) -> TrendMethod | None:
        if self is MeasureId.ABS:
            return None
        return TrendMethod.HP_FILTERED if self.value.startswith("HP") else TrendMethod.AVERAGE_GROWTH

    @property
    def window_years(self) -> int | None:
        if self is MeasureId.ABS:
            return None
        return 10 if self.value[2:4] == "10" else 3

    @property
    def end_rule(self) -> EndRule:
        if self is MeasureId.ABS:
            return EndRule.ABSOLUTE
        return EndRule.GROWTH if self.value.endswith("perc") else EndRule.LEVEL

    @property
    def cap_years(self) -> int:
        if self is MeasureId.ABS:
            return ABS_CAP_YEARS
        if self.value.startswith("AG"):
            return 5 if "_5" in self.value else 10
        return 10

    def trend_spec(self, smoothing=DEFAULT_HP_LAMBDA, history="full", anchor="observed") -> TrendSpec | None:
        if self is MeasureId.ABS:
            return None
        return TrendSpec(self.method, self.window_years, smoothing, history, anchor)


ALL_MEASURES = tuple(MeasureId)
HP_MEASURES = (MeasureId.HP10perc, MeasureId.HP10trend, MeasureId.HP3perc, MeasureId.HP3trend)


@dataclass(frozen=True)
class LossOptions:
    """Knobs shared by all measures.

    ``gaps``: ``"net"`` adds signed annual gaps, ``"positive-only"`` adds only
    shortfalls. ``scale``: GDP the loss fraction is expressed against,
    ``"pre-onset"`` (year before onset) or ``"onset"``.
    """

    gaps: str = "net"
    scale: str = "pre-onset"
    hp_lambda: float = DEFAULT_HP_LAMBDA
    history: str = "full"
    anchor: str = "observed"

    def __post_init__(self):
        if self.gaps not in ("net", "positive-only"):
            raise ValidationError(f"gaps must be 'net' or 'positive-only', got {self.gaps!r}")
        if self.scale not in ("pre-onset", "onset"):
            raise ValidationError(f"scale must be 'pre-onset' or 'onset', got {self.scale!r}")

    def spec_for(self, measure: MeasureId) -> TrendSpec | None:
        return measure.trend_spec(self.hp_lambda, self.history, self.anchor)


@dataclass(frozen=True)
class LossRecord:
    episode: CrisisEpisode
    measure: MeasureId
    duration_years: int
    loss_fraction: float
    loss_usd: float
    recovered: bool
    reference_gdp: float
    # signed annual shortfall (counterfactual minus observed) from onset to end, USD
    gaps: tuple = field(default=(), repr=False, compare=False)
    gap_mode: str = field(default="net", repr=False, compare=False)

    @property
    def country_id(self) -> str:
        return self.episode.country_id

    @property
    def onset_year(self) -> int:
        return self.episode.start_year

    @property
    def end_year(self) -> int:
        return self.onset_year + self.duration_years - 1

    def truncated(self, years: int) -> "LossRecord":
        """Same record with accumulation stopped after ``years`` years."""
        if years >= self.duration_years:
            return self
        gaps = self.gaps[:years]
        usd = _accumulate(gaps, self.gap_mode, self.measure)
        return replace(self, duration_years=years, recovered=False, gaps=gaps,
                       loss_usd=usd, loss_fraction=usd / self.reference_gdp)


def _accumulate(gaps: Sequence[float], mode: str, measure: MeasureId) -> float:
    g = np.asarray(gaps, dtype=float)
    if measure is MeasureId.ABS or mode == "positive-only":
        g = np.maximum(g, 0.0)
    return max(float(g.sum()), 0.0)


def _require(series: GdpSeries, start: int, end: int, episode: CrisisEpisode):
    if not series.covers(start, end):
        raise InsufficientHistory(
            f"{episode.country_id} {episode.start_year}: needs GDP for {start}-{end}")


def _counterfactual(episode, series, measure, options) -> Counterfactual | None:
    spec = options.spec_for(measure)
    if spec is None:
        _require(series, episode.start_year - 1, episode.start_year, episode)
        return None
    _require(series, episode.start_year, episode.start_year, episode)
    return build_counterfactual(series, episode.start_year, spec)


def is_contractionary(episode: CrisisEpisode, series: GdpSeries, measure: MeasureId,
                      options: LossOptions = LossOptions()) -> bool:
    """Whether onset-year output falls short of the measure's benchmark.

    Raises :class:`~crisis_lda.errors.InsufficientHistory` when the episode
    cannot be evaluated under this measure.
    """
    onset = episode.start_year
    cf = _counterfactual(episode, series, measure, options)
    if cf is None:
        return series[onset] < series[onset - 1]
    return series[onset] < cf.level(onset) * (1 - LEVEL_TIE_TOL)


def crisis_end_year(episode: CrisisEpisode, series: GdpSeries, measure: MeasureId,
                    options: LossOptions = LossOptions()) -> tuple[int, bool]:
    """Last year of the episode and whether the end rule was met.

    The end year is the first year (from onset) satisfying the measure's
    recovery rule. When the rule is not met before the cap or before the
    data run out, the episode is closed at whichever comes first and flagged
    as not recovered.
    """
    onset = episode.start_year
    cf = _counterfactual(episode, series, measure, options)
    last = min(onset + measure.cap_years - 1, series.last_year)
    rule = measure.end_rule
    for year in range(onset, last + 1):
        gdp = series[year]
        if rule is EndRule.ABSOLUTE:
            done = gdp >= series[onset - 1]
        elif rule is EndRule.LEVEL:
            done = gdp >= cf.level(year) * (1 - LEVEL_TIE_TOL)
        else:
            done = gdp / series[year - 1] >= cf.growth_rate - GROWTH_TIE_TOL
        if done:
            return year, True
    return last, False


def compute_loss(episode: CrisisEpisode, series: GdpSeries, measure: MeasureId,
                 options: LossOptions = LossOptions()) -> LossRecord | None:
    """Loss record of one episode under one measure, or ``None`` if the
    episode is not contractionary under it."""
    if not is_contractionary(episode, series, measure, options):
        return None
    onset = episode.start_year
    end, recovered = crisis_end_year(episode, series, measure, options)
    observed = series.window(onset, end)
    if measure is MeasureId.ABS:
        benchmark = np.full(observed.size, series[onset - 1])
    else:
        cf = _counterfactual(episode, series, measure, options)
        benchmark = cf.levels(observed.size)
    gaps = benchmark - observed
    ref = series[onset - 1] if options.scale == "pre-onset" else series[onset]
    usd = _accumulate(gaps, options.gaps, measure)
    return LossRecord(episode, measure, int(observed.size), usd / ref, usd, recovered, ref,
                      tuple(float(g) for g in gaps), options.gaps)


def reassign_overlapping(episodes: Iterable[CrisisEpisode],
                         records: Iterable[LossRecord]) -> list[LossRecord]:
    """Cut each record short where a later episode of the same country begins.

    Losses after the later onset belong to the later episode, which measures
    them against its own counterfactual.
    """
    starts = defaultdict(list)
    for ep in episodes:
        starts[ep.country_id].append(ep.start_year)
    for years in starts.values():
        years.sort()
    out = []
    for rec in records:
        later = [y for y in starts.get(rec.country_id, ()) if y > rec.onset_year]
        if later and later[0] <= rec.end_year:
            rec = rec.truncated(later[0] - rec.onset_year)
        out.append(rec)
    return out


@dataclass
class LossTable:
    """All loss records of a run plus exclusion diagnostics."""

    records: list
    meta: Mapping[str, CountryMeta] = field(default_factory=dict)
    exclusions: dict = field(default_factory=dict)
    not_contractionary: dict = field(default_factory=dict)
    options: LossOptions = field(default_factory=LossOptions)
    episodes_without_gdp: int = 0

    def for_measure(self, measure: MeasureId) -> list[LossRecord]:
        return [r for r in self.records if r.measure is measure]

    @property
    def measures(self) -> list[MeasureId]:
        present = {r.measure for r in self.records}
        return [m for m in MeasureId if m in present]

    def values(self, measure: MeasureId, unit: str = "fraction") -> np.ndarray:
        attr = {"fraction": "loss_fraction", "usd": "loss_usd"}[unit]
        return np.array([getattr(r, attr) for r in self.for_measure(measure)])

    def counts(self) -> dict[str, int]:
        c = Counter(r.measure for r in self.records)
        return {m.value: c.get(m, 0) for m in MeasureId if m in c or m.value in self.exclusions}

    def episodes(self) -> list[CrisisEpisode]:
        return sorted({r.episode for r in self.records}, key=lambda e: (e.country_id, e.start_year))

    def diagnostics(self) -> dict:
        return {
            "records": self.counts(),
            "insufficient_history": dict(self.exclusions),
            "not_contractionary": dict(self.not_contractionary),
            "episodes_without_gdp": self.episodes_without_gdp,
        }

    def to_csv(self, path) -> None:
        write_losses_csv(self, path)


def run_all_measures(panel: GdpPanel, episodes: Iterable[CrisisEpisode],
                     measures: Iterable[MeasureId] = ALL_MEASURES,
                     options: LossOptions = LossOptions()) -> LossTable:
    episodes = sorted(episodes, key=lambda e: (e.country_id, e.start_year))
    measures = [m for m in MeasureId if m in set(measures)]
    exclusions = Counter()
    quiet = Counter()
    missing_country = 0
    records = []
    for m in measures:
        exclusions[m.value] = 0
        quiet[m.value] = 0
        recs = []
        for ep in episodes:
            if ep.country_id not in panel:
                if m is measures[0]:
                    missing_country += 1
                exclusions[m.value] += 1
                continue
            try:
                rec = compute_loss(ep, panel[ep.country_id], m, options)
            except InsufficientHistory:
                exclusions[m.value] += 1
                continue
            if rec is None:
                quiet[m.value] += 1
            else:
                recs.append(rec)
        records.extend(reassign_overlapping(episodes, recs))
    return LossTable(records, dict(panel.meta), dict(exclusions), dict(quiet), options, missing_country)


LOSSES_HEADER = ("country", "onset_year", "kinds", "twin", "measure", "duration", "recovered",
                 "loss_fraction", "loss_usd", "region", "income_group")


def write_losses_csv(table: LossTable, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOSSES_HEADER)
        for r in table.records:
            meta = table.meta.get(r.country_id)
            w.writerow([
                r.country_id, r.onset_year, r.episode.kinds_label, str(r.episode.twin).lower(),
                r.measure.value, r.duration_years, str(r.recovered).lower(),
                repr(r.loss_fraction), repr(r.loss_usd),
                meta.region.value if meta else "", meta.income_group.value if meta else "",
            ])


def read_losses_csv(path) -> LossTable:
    """Rebuild a :class:`LossTable` from ``losses.csv`` (per-year gaps are not stored)."""
    records = []
    meta = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in LOSSES_HEADER[:9] if c not in (reader.fieldnames or ())]
        if missing:
            raise ValidationError(f"{path}: missing columns {', '.join(missing)}")
        for row in reader:
            kinds = frozenset(CrisisKind.parse(k) for k in row["kinds"].split("+"))
            ep = CrisisEpisode(row["country"], int(row["onset_year"]), kinds)
            frac = float(row["loss_fraction"])
            usd = float(row["loss_usd"])
            ref = usd / frac if frac > 0 else math.nan
            records.append(LossRecord(ep, MeasureId.parse(row["measure"]), int(row["duration"]),
                                      frac, usd, row["recovered"] == "true", ref))
            if row.get("region") and row.get("income_group"):
                meta[ep.country_id] = CountryMeta(ep.country_id, Region.parse(row["region"]),
                                                  IncomeGroup.parse(row["income_group"]))
    return LossTable(records, meta)
