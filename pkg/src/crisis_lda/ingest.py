"""Loading and validation of the GDP panel, country metadata and crisis catalog.

All files are comma separated UTF-8 with one header row:

* ``gdp.csv``: ``country,year,gdp_const2005usd`` (long format)
* ``crises.csv``: ``country,start_year,kind``
* ``meta.csv``: ``country,region,income_group``
"""
from __future__ import annotations

import csv
import enum
import math
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    DuplicateEvent,
    InteriorGap,
    MalformedRow,
    NonPositiveGdp,
    UnknownEnumValue,
    UnknownKind,
    ValidationError,
)

GDP_HEADER = ("country", "year", "gdp_const2005usd")
CRISES_HEADER = ("country", "start_year", "kind")
META_HEADER = ("country", "region", "income_group")


class _ParseMixin:
    @classmethod
    def parse(cls, token: str):
        key = token.strip().replace(" ", "").replace("_", "").lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        raise UnknownEnumValue(f"{token!r} is not a valid {cls.__name__}")


class CrisisKind(_ParseMixin, enum.Enum):
    BANKING = "Banking"
    CURRENCY = "Currency"
    DEBT = "Debt"


class Region(_ParseMixin, enum.Enum):
    AFRICA = "Africa"
    EUROPE = "Europe"
    LATIN_AMERICA = "LatinAmerica"
    ASIA = "Asia"
    NORTH_AMERICA = "NorthAmerica"
    OCEANIA = "Oceania"


class IncomeGroup(_ParseMixin, enum.Enum):
    LOW = "Low"
    MIDDLE = "Middle"
    HIGH = "High"


@dataclass(frozen=True)
class CountryMeta:
    country_id: str
    region: Region
    income_group: IncomeGroup


@dataclass(frozen=True, eq=False)
class GdpSeries:
    """Annual real GDP of one country on consecutive years."""

    country_id: str
    first_year: int
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise ValidationError(f"{self.country_id}: a GDP series needs at least 2 values")
        bad = np.flatnonzero(~(values > 0))
        if bad.size:
            i = int(bad[0])
            raise NonPositiveGdp(self.country_id, self.first_year + i, float(values[i]))
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def last_year(self) -> int:
        return self.first_year + self.values.size - 1

    @property
    def years(self) -> np.ndarray:
        return np.arange(self.first_year, self.last_year + 1)

    def covers(self, start: int, end: int) -> bool:
        return self.first_year <= start and end <= self.last_year

    def __getitem__(self, year: int) -> float:
        if not self.first_year <= year <= self.last_year:
            raise KeyError(year)
        return float(self.values[year - self.first_year])

    def window(self, start: int, end: int) -> np.ndarray:
        """Values for the inclusive year range ``[start, end]``."""
        return self.values[start - self.first_year:end - self.first_year + 1]

    def scaled(self, factor: float) -> "GdpSeries":
        return GdpSeries(self.country_id, self.first_year, self.values * factor)

    def __eq__(self, other):
        if not isinstance(other, GdpSeries):
            return NotImplemented
        return (self.country_id == other.country_id
                and self.first_year == other.first_year
                and np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash((self.country_id, self.first_year, self.values.tobytes()))


@dataclass(frozen=True)
class GdpPanel:
    series: Mapping[str, GdpSeries]
    meta: Mapping[str, CountryMeta] = field(default_factory=dict)

    def __getitem__(self, country_id: str) -> GdpSeries:
        return self.series[country_id]

    def __contains__(self, country_id) -> bool:
        return country_id in self.series

    def __iter__(self):
        return iter(self.series)

    def __len__(self):
        return len(self.series)

    def with_meta(self, meta: Mapping[str, CountryMeta]) -> "GdpPanel":
        return GdpPanel(self.series, dict(meta))


@dataclass(frozen=True)
class CrisisEvent:
    country_id: str
    start_year: int
    kind: CrisisKind

    @property
    def key(self):
        return (self.country_id, self.start_year, self.kind)


@dataclass(frozen=True)
class CrisisEpisode:
    country_id: str
    start_year: int
    kinds: frozenset

    def __post_init__(self):
        if not self.kinds:
            raise ValidationError("an episode needs at least one crisis kind")
        object.__setattr__(self, "kinds", frozenset(self.kinds))

    @property
    def twin(self) -> bool:
        return len(self.kinds) >= 2

    @property
    def kinds_label(self) -> str:
        return "+".join(k.value for k in sorted(self.kinds, key=_KIND_ORDER.index))


_KIND_ORDER = [CrisisKind.BANKING, CrisisKind.CURRENCY, CrisisKind.DEBT]


@dataclass
class LoadReport:
    """Counters collected while loading; serialisable as plain JSON."""

    rows_read: int = 0
    duplicates_dropped: int = 0
    edge_rows_trimmed: int = 0
    short_series_dropped: list = field(default_factory=list)

    def as_dict(self):
        return {
            "rows_read": self.rows_read,
            "duplicates_dropped": self.duplicates_dropped,
            "edge_rows_trimmed": self.edge_rows_trimmed,
            "short_series_dropped": list(self.short_series_dropped),
        }


def _rows(path, header):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise MalformedRow(path, 1, "empty file, header expected") from None
        got = tuple(h.strip().lstrip("﻿") for h in got)
        if got[:len(header)] != header:
            raise MalformedRow(path, 1, f"expected header {','.join(header)}, got {','.join(got)}")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(header):
                raise MalformedRow(path, reader.line_num, f"expected {len(header)} fields, got {len(row)}")
            yield reader.line_num, [c.strip() for c in row[:len(header)]]


def _int(path, line, token, what):
    try:
        return int(token)
    except ValueError:
        raise MalformedRow(path, line, f"{what} {token!r} is not an integer") from None


def load_gdp_panel(path, meta_path=None, report: LoadReport | None = None) -> GdpPanel:
    """Read a long-format GDP file into a :class:`GdpPanel`.

    Empty GDP cells at either end of a country's coverage are trimmed. Empty
    cells or missing years between two observations raise
    :class:`~crisis_lda.errors.InteriorGap`; zero or negative values raise
    :class:`~crisis_lda.errors.NonPositiveGdp`. Countries left with fewer than
    two observations are dropped and listed in ``report``.
    """
    report = report if report is not None else LoadReport()
    by_country: dict[str, dict[int, float | None]] = defaultdict(dict)
    for line, (country, year_tok, gdp_tok) in _rows(path, GDP_HEADER):
        report.rows_read += 1
        if not country:
            raise MalformedRow(path, line, "empty country code")
        year = _int(path, line, year_tok, "year")
        if year in by_country[country]:
            raise MalformedRow(path, line, f"duplicate row for {country} {year}")
        if gdp_tok == "" or gdp_tok.upper() in ("NA", "NAN"):
            by_country[country][year] = None
            continue
        try:
            value = float(gdp_tok)
        except ValueError:
            raise MalformedRow(path, line, f"GDP {gdp_tok!r} is not numeric") from None
        if not math.isfinite(value):
            raise MalformedRow(path, line, f"GDP {gdp_tok!r} is not finite")
        if value <= 0:
            raise NonPositiveGdp(country, year, value)
        by_country[country][year] = value

    series = {}
    for country in sorted(by_country):
        obs = by_country[country]
        present = sorted(y for y, v in obs.items() if v is not None)
        report.edge_rows_trimmed += sum(
            1 for y, v in obs.items() if v is None and (not present or y < present[0] or y > present[-1]))
        if len(present) < 2:
            report.short_series_dropped.append(country)
            continue
        first, last = present[0], present[-1]
        for y in range(first, last + 1):
            if obs.get(y) is None:
                raise InteriorGap(country, y)
        series[country] = GdpSeries(country, first, [obs[y] for y in range(first, last + 1)])

    meta = load_meta(meta_path) if meta_path is not None else {}
    return GdpPanel(series, meta)


def load_meta(path) -> dict[str, CountryMeta]:
    meta = {}
    for line, (country, region, income) in _rows(path, META_HEADER):
        if country in meta:
            raise MalformedRow(path, line, f"duplicate metadata for {country}")
        try:
            meta[country] = CountryMeta(country, Region.parse(region), IncomeGroup.parse(income))
        except UnknownEnumValue as exc:
            raise MalformedRow(path, line, str(exc)) from None
    return meta


def load_crisis_catalog(path, report: LoadReport | None = None) -> list[CrisisEvent]:
    """Read the crisis catalog; duplicates are dropped with a warning."""
    report = report if report is not None else LoadReport()
    seen = set()
    events = []
    for line, (country, year_tok, kind_tok) in _rows(path, CRISES_HEADER):
        report.rows_read += 1
        year = _int(path, line, year_tok, "start_year")
        try:
            kind = CrisisKind.parse(kind_tok)
        except UnknownEnumValue:
            raise UnknownKind(f"{path}:{line}: unknown crisis kind {kind_tok!r}") from None
        event = CrisisEvent(country, year, kind)
        if event.key in seen:
            report.duplicates_dropped += 1
            warnings.warn(f"{path}:{line}: duplicate event {country} {year} {kind.value} dropped",
                          DuplicateEvent, stacklevel=2)
            continue
        seen.add(event.key)
        events.append(event)
    return sorted(events, key=_event_sort_key)


def _event_sort_key(e: CrisisEvent):
    return (e.country_id, e.start_year, _KIND_ORDER.index(e.kind))


def merge_episodes(events: Iterable[CrisisEvent], twin_window_years: int = 0) -> list[CrisisEpisode]:
    """Group events of one country into episodes.

    With the default window of 0 only events sharing the start year merge.
    A positive window merges an event into the current episode when it starts
    at most ``twin_window_years`` after the episode's first year.
    """
    if twin_window_years < 0:
        raise ValueError("twin_window_years must be >= 0")
    unique = sorted({e.key: e for e in events}.values(), key=_event_sort_key)
    episodes = []
    current = None
    for e in unique:
        if (current is not None and current[0] == e.country_id
                and e.start_year - current[1] <= twin_window_years):
            current[2].add(e.kind)
            continue
        if current is not None:
            episodes.append(CrisisEpisode(current[0], current[1], frozenset(current[2])))
        current = [e.country_id, e.start_year, {e.kind}]
    if current is not None:
        episodes.append(CrisisEpisode(current[0], current[1], frozenset(current[2])))
    return episodes


def kind_counts(events: Iterable[CrisisEvent]) -> dict[str, int]:
    counts = Counter(e.kind.value for e in events)
    return {k.value: counts.get(k.value, 0) for k in _KIND_ORDER}


def write_gdp_panel(panel: GdpPanel, path) -> None:
    # repr() of a float round-trips exactly
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GDP_HEADER)
        for country in sorted(panel.series):
            s = panel.series[country]
            for year, v in zip(s.years, s.values):
                w.writerow([country, int(year), repr(float(v))])


def write_meta(meta: Mapping[str, CountryMeta], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(META_HEADER)
        for country in sorted(meta):
            m = meta[country]
            w.writerow([country, m.region.value, m.income_group.value])


def write_crisis_catalog(events: Iterable[CrisisEvent], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CRISES_HEADER)
        for e in sorted(events, key=_event_sort_key):
            w.writerow([e.country_id, e.start_year, e.kind.value])
