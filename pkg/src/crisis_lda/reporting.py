"""Severity tables, world-GDP conversions, insurance coverage and plot data."""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .fitting import FittedFrequencyModel, FittedSeverityModel, MeanExcessCurve
from .ingest import CrisisKind, IncomeGroup, Region
from .lda import AggregateLossDistribution, RiskSummary
from .losses import HP_MEASURES, LossRecord, LossTable, MeasureId

WORLD_GDP_2005USD = 4.405e13
HP_OBS_BAND = (203, 219)


class GroupingAxis(enum.Enum):
    CRISIS_TYPE = "CrisisType"
    TWIN_TYPE = "TwinType"
    REGION = "Region"
    INCOME_GROUP = "IncomeGroup"
    PERIOD_5Y = "Period5y"
    ALL = "All"

    @classmethod
    def parse(cls, token: str) -> "GroupingAxis":
        key = token.strip().lower().replace("_", "").replace("-", "")
        for a in cls:
            if a.value.lower() == key:
                return a
        raise ValueError(f"unknown grouping axis {token!r}")


TWIN_CELLS = {
    "Currency+Debt": {CrisisKind.CURRENCY, CrisisKind.DEBT},
    "Currency+Banking": {CrisisKind.CURRENCY, CrisisKind.BANKING},
    "Debt+Banking": {CrisisKind.DEBT, CrisisKind.BANKING},
}


@dataclass(frozen=True)
class PeriodGrid:
    start_year: int = 1970
    end_year: int = 2005
    length: int = 5

    @property
    def labels(self) -> list[str]:
        return [self.label(s) for s in range(self.start_year, self.end_year, self.length)]

    def label(self, start: int) -> str:
        return f"{start}-{(start + self.length) % 100:02d}"

    def label_of(self, year: int) -> str | None:
        if not self.start_year <= year < self.end_year:
            return None
        return self.label(self.start_year + (year - self.start_year) // self.length * self.length)


def group_labels(axis: GroupingAxis, periods: PeriodGrid = PeriodGrid()) -> list[str]:
    if axis is GroupingAxis.ALL:
        return ["All"]
    if axis is GroupingAxis.CRISIS_TYPE:
        return [k.value for k in (CrisisKind.CURRENCY, CrisisKind.BANKING, CrisisKind.DEBT)]
    if axis is GroupingAxis.TWIN_TYPE:
        return list(TWIN_CELLS) + ["AllTwin"]
    if axis is GroupingAxis.REGION:
        return [r.value for r in Region]
    if axis is GroupingAxis.INCOME_GROUP:
        return [g.value for g in (IncomeGroup.HIGH, IncomeGroup.MIDDLE, IncomeGroup.LOW)]
    return periods.labels


def groups_of(record: LossRecord, axis: GroupingAxis, meta: Mapping, periods: PeriodGrid = PeriodGrid()) -> list[str]:
    """Cells a record falls in; twin and type cells may overlap."""
    ep = record.episode
    if axis is GroupingAxis.ALL:
        return ["All"]
    if axis is GroupingAxis.CRISIS_TYPE:
        return [k.value for k in ep.kinds]
    if axis is GroupingAxis.TWIN_TYPE:
        if not ep.twin:
            return []
        return [name for name, pair in TWIN_CELLS.items() if pair <= ep.kinds] + ["AllTwin"]
    if axis is GroupingAxis.PERIOD_5Y:
        label = periods.label_of(ep.start_year)
        return [label] if label else []
    m = meta.get(ep.country_id)
    if m is None:
        return []
    return [m.region.value if axis is GroupingAxis.REGION else m.income_group.value]


@dataclass(frozen=True)
class CellStats:
    n: int
    mean: float
    median: float
    std: float
    min: float
    max: float

    @classmethod
    def of(cls, values) -> "CellStats":
        x = np.asarray(values, dtype=float)
        std = float(x.std(ddof=1)) if x.size > 1 else 0.0
        return cls(int(x.size), float(x.mean()), float(np.median(x)), std, float(x.min()), float(x.max()))


@dataclass
class SeverityTable:
    axis: GroupingAxis
    unit: str
    groups: list
    measures: list
    cells: dict = field(default_factory=dict)

    def cell(self, group: str, measure: MeasureId) -> CellStats | None:
        return self.cells.get((group, measure))

    def rows(self) -> list[dict]:
        out = []
        for g in self.groups:
            for m in self.measures:
                c = self.cells.get((g, m))
                row = {"group": g, "measure": m.value}
                if c is None:
                    row.update(n=0, mean=None, median=None, std=None, min=None, max=None)
                else:
                    row.update(n=c.n, mean=c.mean, median=c.median, std=c.std, min=c.min, max=c.max)
                out.append(row)
        return out

    def to_csv(self, path) -> None:
        cols = ["group", "measure", "n", "mean", "median", "std", "min", "max"]
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for row in self.rows():
                w.writerow(["" if row[c] is None else (repr(row[c]) if isinstance(row[c], float) else row[c])
                            for c in cols])

    def to_text(self, digits: int = 4) -> str:
        head = ["Group", "Loss Measure", "Obs.", "Mean", "Median", "Std. Dev.", "Min", "Max"]
        lines = []
        for g in self.groups:
            for m in self.measures:
                c = self.cells.get((g, m))
                if c is None:
                    lines.append([g, m.value, "0"] + ["-"] * 5)
                else:
                    fmt = (lambda v: f"{v:.{digits}f}") if self.unit == "fraction" else (lambda v: f"{v:.3e}")
                    lines.append([g, m.value, str(c.n)] + [fmt(v) for v in (c.mean, c.median, c.std, c.min, c.max)])
        return _align([head] + lines)


def _align(rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    out = []
    for k, r in enumerate(rows):
        out.append("  ".join(c.ljust(w) if i < 2 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))).rstrip())
        if k == 0:
            out.append("-" * len(out[0]))
    return "\n".join(out) + "\n"


def severity_table(table: LossTable, measures: Iterable[MeasureId] = HP_MEASURES,
                   axis: GroupingAxis = GroupingAxis.ALL, unit: str = "fraction",
                   periods: PeriodGrid = PeriodGrid()) -> SeverityTable:
    """Descriptive statistics of losses per group and measure.

    Standard deviations are sample standard deviations (``ddof=1``; zero for
    a single record).
    """
    attr = {"fraction": "loss_fraction", "usd": "loss_usd"}[unit]
    measures = list(measures)
    labels = group_labels(axis, periods)
    buckets = {}
    for rec in table.records:
        if rec.measure not in measures:
            continue
        for g in groups_of(rec, axis, table.meta, periods):
            buckets.setdefault((g, rec.measure), []).append(getattr(rec, attr))
    cells = {key: CellStats.of(v) for key, v in buckets.items()}
    return SeverityTable(axis, unit, labels, measures, cells)


def observation_band_check(table: LossTable, band=HP_OBS_BAND) -> dict:
    """Record counts of the HP measures and whether each lies in ``band``.

    Only meaningful on real GDP and crisis data.
    """
    lo, hi = band
    out = {}
    for m in HP_MEASURES:
        n = len(table.for_measure(m))
        out[m.value] = {"n": n, "in_band": lo <= n <= hi}
    return out


# ---------------------------------------------------------------------------
# LDA tables
# ---------------------------------------------------------------------------

SUMMARY_ROWS = (("99.9 percentile", 0.999), ("99 percentile", 0.99), ("median", 0.5), ("mean", None))


def _summary_value(summary: RiskSummary, q):
    return summary.mean if q is None else summary.percentile(q)


def to_world_gdp_share(value, world_gdp: float = WORLD_GDP_2005USD):
    """Express USD amounts as percent of world GDP.

    ``value`` is a number or a :class:`RiskSummary`; for a summary a dict
    keyed like the rows of the LDA table is returned.
    """
    if not world_gdp > 0:
        raise ValueError("world_gdp must be positive")
    if isinstance(value, RiskSummary):
        return {label: 100.0 * _summary_value(value, q) / world_gdp for label, q in SUMMARY_ROWS}
    return 100.0 * float(value) / world_gdp


def format_percent(x: float) -> str:
    return f"{x:.2f}%"


@dataclass(frozen=True)
class Coverage:
    q: float
    usd: float
    percent_of_world_gdp: float


def insurance_coverage(summary: RiskSummary, q: float, world_gdp: float = WORLD_GDP_2005USD) -> Coverage:
    """Coverage needed to insure aggregate losses up to percentile ``q``:
    that percentile minus the median."""
    usd = summary.percentile(q) - summary.median
    return Coverage(q, usd, to_world_gdp_share(usd, world_gdp))


def lda_table_text(summaries: Mapping[str, RiskSummary]) -> str:
    names = list(summaries)
    rows = [[""] + names]
    for label, q in SUMMARY_ROWS:
        rows.append([label] + [f"{_summary_value(summaries[n], q):.1e}" for n in names])
    rows.append(["Std deviation"] + [f"{summaries[n].std:.1e}" for n in names])
    return _align_plain(rows)


def world_share_table_text(summaries: Mapping[str, RiskSummary], world_gdp: float = WORLD_GDP_2005USD) -> str:
    names = list(summaries)
    shares = {n: to_world_gdp_share(summaries[n], world_gdp) for n in names}
    rows = [[""] + names]
    for label, _ in SUMMARY_ROWS:
        rows.append([label] + [format_percent(shares[n][label]) for n in names])
    return _align_plain(rows)


def coverage_table_text(summaries: Mapping[str, RiskSummary], qs=(0.99, 0.999),
                        world_gdp: float = WORLD_GDP_2005USD) -> str:
    names = list(summaries)
    rows = [[""] + names]
    for q in qs:
        covs = [insurance_coverage(summaries[n], q, world_gdp) for n in names]
        rows.append([f"coverage q={q} (USD)"] + [f"{c.usd:.2e}" for c in covs])
        rows.append([f"coverage q={q} (% world GDP)"] + [format_percent(c.percent_of_world_gdp) for c in covs])
    return _align_plain(rows)


def _align_plain(rows):
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))).rstrip()
                     for r in rows) + "\n"


# ---------------------------------------------------------------------------
# plot data
# ---------------------------------------------------------------------------

def _write_columns(path, header, columns) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def mean_excess_csv(curve: MeanExcessCurve, path) -> Path:
    return _write_columns(path, ["threshold", "mean_excess", "n_exceed", "std_error"],
                          [curve.thresholds, curve.mean_excess, curve.n_exceed.tolist(), curve.std_error])


def frequency_pmf_csv(models: Sequence[FittedFrequencyModel], path, mass: float = 1 - 1e-6) -> Path:
    top = max(m.support_max(mass) for m in models)
    n = np.arange(top + 1)
    return _write_columns(path, ["n"] + [f"pmf_{m.family.value}" for m in models],
                          [n.tolist()] + [m.pmf(n) for m in models])


def severity_density_csv(models: Sequence[FittedSeverityModel], path, cut: float = 1.5,
                         points: int = 300) -> Path:
    x = np.linspace(cut / points, cut, points)
    return _write_columns(path, ["loss"] + [f"pdf_{m.family.value}" for m in models],
                          [x] + [m.pdf(x) for m in models])


def aggregate_histogram_csv(dist: AggregateLossDistribution, path, bins: int = 200) -> Path:
    density, edges = np.histogram(dist.samples, bins=bins, density=True)
    return _write_columns(path, ["bin_left", "bin_right", "density"], [edges[:-1], edges[1:], density])


def loss_histogram_csv(table: LossTable, measure: MeasureId, path, unit: str = "fraction", bins: int = 50) -> Path:
    density, edges = np.histogram(table.values(measure, unit), bins=bins, density=True)
    return _write_columns(path, ["bin_left", "bin_right", "density"], [edges[:-1], edges[1:], density])


def emit_plot_data(obj, path, svg: bool = False, **kwargs) -> Path:
    """Write the plotted coordinates of ``obj`` as CSV, optionally an SVG too.

    ``obj`` may be a :class:`MeanExcessCurve`, an
    :class:`AggregateLossDistribution`, a :class:`LossTable` (pass
    ``measure=``), or a list of fitted frequency or severity models.
    """
    if isinstance(obj, MeanExcessCurve):
        out = mean_excess_csv(obj, path)
    elif isinstance(obj, AggregateLossDistribution):
        out = aggregate_histogram_csv(obj, path, **kwargs)
    elif isinstance(obj, LossTable):
        out = loss_histogram_csv(obj, kwargs.pop("measure"), path, **kwargs)
    elif obj and all(isinstance(m, FittedFrequencyModel) for m in obj):
        out = frequency_pmf_csv(list(obj), path, **kwargs)
    elif obj and all(isinstance(m, FittedSeverityModel) for m in obj):
        out = severity_density_csv(list(obj), path, **kwargs)
    else:
        raise TypeError(f"no plot data for {type(obj).__name__}")
    if svg:
        render_svg(out)
    return out


def render_svg(csv_path, log_axes: bool = False) -> Path:
    """Static line plot of every column against the first one."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "crisis-lda"
    csv_path = Path(csv_path)
    data = np.genfromtxt(csv_path, delimiter=",", names=True)
    names = data.dtype.names
    fig, ax = plt.subplots(figsize=(6, 4))
    for name in names[1:]:
        if name in ("n_exceed", "std_error", "bin_right"):
            continue
        ax.plot(data[names[0]], data[name], label=name)
    if log_axes:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel(names[0])
    ax.legend()
    fig.tight_layout()
    out = csv_path.with_suffix(".svg")
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out
