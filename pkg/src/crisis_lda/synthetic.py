"""Synthetic GDP panels and crisis catalogs for examples and tests.

Each country grows at its own trend rate with Gaussian noise in log growth.
Crisis onsets subtract a growth shock that partly reverses in the following
years, leaving a permanent level loss.
"""
from __future__ import annotations

import numpy as np

from .ingest import CountryMeta, CrisisEvent, CrisisKind, GdpPanel, GdpSeries, IncomeGroup, Region

_ALPHABET = np.array(list("ABCDEFGHIJKLMNOPQRSTUVWXYZ"))


def country_codes(n: int) -> list[str]:
    return ["".join(_ALPHABET[[i // 676 % 26, i // 26 % 26, i % 26]]) for i in range(n)]


def make_synthetic_panel(n_countries: int = 40, first_year: int = 1960, last_year: int = 2010,
                         crisis_rate: float = 0.06, crisis_years=(1970, 2008), seed: int = 0):
    """Return ``(panel, events)``; ``panel`` carries region and income metadata."""
    rng = np.random.default_rng(seed)
    years = np.arange(first_year, last_year + 1)
    regions = list(Region)
    incomes = list(IncomeGroup)
    kinds = list(CrisisKind)
    series, meta, events = {}, {}, []
    for code in country_codes(n_countries):
        trend = rng.uniform(0.01, 0.05)
        log_growth = trend + rng.normal(0.0, 0.015, years.size)
        onsets = [y for y in range(*crisis_years) if rng.random() < crisis_rate]
        for y in onsets:
            i = y - first_year
            shock = rng.uniform(0.02, 0.12)
            log_growth[i] -= shock
            rebound = shock * rng.uniform(0.0, 0.6)
            span = int(rng.integers(1, 5))
            log_growth[i + 1:i + 1 + span] += rebound / span
            n_kinds = 1 + int(rng.random() < 0.2) + int(rng.random() < 0.05)
            for k in rng.choice(len(kinds), size=n_kinds, replace=False):
                events.append(CrisisEvent(code, int(y), kinds[int(k)]))
        level = np.exp(rng.uniform(np.log(1e9), np.log(1e12)) + np.cumsum(log_growth) - log_growth[0])
        series[code] = GdpSeries(code, first_year, level)
        meta[code] = CountryMeta(code, regions[int(rng.integers(len(regions)))],
                                 incomes[int(rng.integers(len(incomes)))])
    events.sort(key=lambda e: (e.country_id, e.start_year, e.kind.value))
    return GdpPanel(series, meta), events
