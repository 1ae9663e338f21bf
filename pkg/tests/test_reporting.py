import csv
import importlib.util

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crisis_lda.fitting import mean_excess, negbin_model, poisson_model, severity_model
from crisis_lda.ingest import CountryMeta, CrisisEpisode, CrisisKind, IncomeGroup, Region, merge_episodes
from crisis_lda.lda import RiskSummary, risk_summary, simulate_aggregate
from crisis_lda.losses import HP_MEASURES, LossRecord, LossTable, MeasureId, run_all_measures
from crisis_lda.reporting import (
    GroupingAxis,
    PeriodGrid,
    emit_plot_data,
    format_percent,
    insurance_coverage,
    lda_table_text,
    observation_band_check,
    severity_table,
    to_world_gdp_share,
    world_share_table_text,
)

B, C, D = CrisisKind.BANKING, CrisisKind.CURRENCY, CrisisKind.DEBT


def record(country, year, kinds, loss, measure=MeasureId.HP10perc):
    ep = CrisisEpisode(country, year, frozenset(kinds))
    return LossRecord(ep, measure, 2, loss, loss * 1e9, True, 1e9)


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_single_record_stats():
    t = LossTable([record("AAA", 1990, {B}, 0.2)])
    c = severity_table(t).cell("All", MeasureId.HP10perc)
    assert (c.n, c.mean, c.median, c.min, c.max, c.std) == (1, 0.2, 0.2, 0.2, 0.2, 0.0)


def test_table_matches_numpy():
    rng = np.random.default_rng(0)
    losses = rng.exponential(0.15, 40)
    t = LossTable([record(f"C{i:02d}", 1970 + i, {B}, v) for i, v in enumerate(losses)])
    c = severity_table(t).cell("All", MeasureId.HP10perc)
    assert c.mean == pytest.approx(losses.mean())
    assert c.median == pytest.approx(np.median(losses))
    assert c.std == pytest.approx(losses.std(ddof=1))


def test_type_and_twin_cells():
    recs = [record("AAA", 1990, {B}, 0.1), record("BBB", 1991, {C, D}, 0.3),
            record("CCC", 1992, {B, C, D}, 0.5), record("DDD", 1993, {D}, 0.7)]
    t = LossTable(recs)
    by_type = severity_table(t, axis=GroupingAxis.CRISIS_TYPE)
    assert by_type.cell("Debt", MeasureId.HP10perc).n == 3
    assert by_type.cell("Banking", MeasureId.HP10perc).n == 2
    twin = severity_table(t, axis=GroupingAxis.TWIN_TYPE)
    assert twin.cell("AllTwin", MeasureId.HP10perc).n == 2
    # the triple crisis sits in every pair cell
    assert twin.cell("Currency+Debt", MeasureId.HP10perc).n == 2
    assert twin.cell("Debt+Banking", MeasureId.HP10perc).n == 1
    assert twin.cell("Currency+Banking", MeasureId.HP10perc).n == 1


def test_region_income_and_period_partition(synthetic):
    panel, events = synthetic
    table = run_all_measures(panel, merge_episodes(events), HP_MEASURES)
    total = severity_table(table)
    for axis in (GroupingAxis.REGION, GroupingAxis.INCOME_GROUP):
        st_ = severity_table(table, axis=axis)
        for m in HP_MEASURES:
            n = sum(st_.cell(g, m).n for g in st_.groups if st_.cell(g, m))
            assert n == total.cell("All", m).n
    grid = PeriodGrid(1970, 2010, 5)
    by_period = severity_table(table, axis=GroupingAxis.PERIOD_5Y, periods=grid)
    for m in HP_MEASURES:
        n = sum(c.n for (g, mm), c in by_period.cells.items() if mm is m)
        assert n == sum(1 for r in table.for_measure(m) if 1970 <= r.onset_year < 2010)
    assert PeriodGrid().labels == ["1970-75", "1975-80", "1980-85", "1985-90", "1990-95", "1995-00", "2000-05"]


def test_empty_cells_print_dashes():
    t = LossTable([record("AAA", 1990, {B}, 0.1)], meta={"AAA": CountryMeta("AAA", Region.ASIA, IncomeGroup.LOW)})
    text = severity_table(t, axis=GroupingAxis.REGION).to_text()
    assert "-" in text.splitlines()[2]


def test_observation_band_check():
    recs = [record(f"C{i:03d}", 1980, {B}, 0.1, m) for m in HP_MEASURES for i in range(210)]
    check = observation_band_check(LossTable(recs))
    assert all(v["in_band"] and v["n"] == 210 for v in check.values())


@pytest.mark.parametrize("usd,percent", [(3.0e12, "6.81%"), (1.7e12, "3.86%"), (2.0e12, "4.54%"), (0.0, "0.00%")])
def test_world_share_reference_pairs(usd, percent):
    assert format_percent(to_world_gdp_share(usd)) == percent


def test_world_share_of_summary():
    s = RiskSummary({0.5: 1.9e11, 0.99: 1.7e12, 0.999: 3.0e12}, 4.0e11, 5.0e11, 500_000)
    shares = to_world_gdp_share(s)
    assert format_percent(shares["99.9 percentile"]) == "6.81%"
    assert format_percent(shares["99 percentile"]) == "3.86%"
    assert "6.81%" in world_share_table_text({"HP10perc": s})
    assert "99.9 percentile" in lda_table_text({"HP10perc": s})
    with pytest.raises(ValueError):
        to_world_gdp_share(1.0, world_gdp=0.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1e15), st.floats(1e10, 1e15))
def test_world_share_inverts(x, world):
    assert to_world_gdp_share(x, world) * world / 100 == pytest.approx(x, rel=1e-9, abs=1e-9)


def test_insurance_coverage_reference_columns():
    hp10perc = RiskSummary({0.5: 1.9e11, 0.99: 1.7e12, 0.999: 3.0e12}, 0.0, 0.0, 1)
    hp10trend = RiskSummary({0.5: 2.2e11, 0.99: 2.0e12, 0.999: 3.6e12}, 0.0, 0.0, 1)
    assert insurance_coverage(hp10perc, 0.99).usd == 1.51e12
    assert insurance_coverage(hp10trend, 0.999).usd == 3.38e12
    degenerate = risk_summary(np.full(100, 5.0))
    assert insurance_coverage(degenerate, 0.999).usd == 0


def test_plot_csv_rows(tmp_path):
    curve = mean_excess([1.0, 2.0, 3.0, 4.0], thresholds=[0.0, 1.0, 2.0], min_exceedances=1)
    assert len(rows(emit_plot_data(curve, tmp_path / "me.csv"))) == 4

    models = [severity_model("Weibull", shape=0.7, scale=0.1), severity_model("Exponential", scale=0.14)]
    r = rows(emit_plot_data(models, tmp_path / "sev.csv"))
    assert float(r[-1][0]) == pytest.approx(1.5)
    assert r[0] == ["loss", "pdf_Weibull", "pdf_Exponential"]

    freqs = [poisson_model(25.0), negbin_model(1.5, 0.06)]
    r = rows(emit_plot_data(freqs, tmp_path / "freq.csv"))
    pmf = np.array([[float(v) for v in row[1:]] for row in r[1:]])
    assert (pmf.sum(axis=0) > 1 - 1e-5).all()

    d = simulate_aggregate(poisson_model(2.0), models[1], 1000, seed=0)
    assert len(rows(emit_plot_data(d, tmp_path / "agg.csv", bins=40))) == 41
    with pytest.raises(TypeError):
        emit_plot_data(42, tmp_path / "x.csv")


@pytest.mark.skipif(importlib.util.find_spec("matplotlib") is None, reason="matplotlib not installed")
def test_svg_is_reproducible(tmp_path):
    curve = mean_excess(np.arange(1.0, 30.0))
    a = emit_plot_data(curve, tmp_path / "a.csv", svg=True).with_suffix(".svg").read_bytes()
    b = emit_plot_data(curve, tmp_path / "b.csv", svg=True).with_suffix(".svg").read_bytes()
    assert a == b and a.startswith(b"<?xml")
