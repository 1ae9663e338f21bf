"""Workspace-based stages and the end-to-end pipeline.

A workspace is a directory holding the normalised inputs written by
:func:`ingest_workspace` (``gdp.csv``, ``crises.csv``, optional ``meta.csv``)
and every artifact produced downstream.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CrisisLdaError, ValidationError
from .fitting import (
    FittedFrequencyModel,
    FittedSeverityModel,
    FrequencyFamily,
    SeverityFamily,
    build_frequency_sample,
    fit_all_severity,
    fit_negbin,
    fit_poisson,
    frequency_chi2_pvalue,
    mean_excess,
    select_severity_model,
)
from .ingest import (
    LoadReport,
    kind_counts,
    load_crisis_catalog,
    load_gdp_panel,
    merge_episodes,
    write_crisis_catalog,
    write_gdp_panel,
    write_meta,
)
from .lda import (
    DEFAULT_PERCENTILES,
    GENERATOR_VERSION,
    default_panjer_step,
    kolmogorov_distance,
    panjer_compound,
    read_lda_json,
    simulate_aggregate,
    write_lda_json,
)
from .losses import HP_MEASURES, LossOptions, MeasureId, read_losses_csv, run_all_measures
from .reporting import (
    WORLD_GDP_2005USD,
    GroupingAxis,
    PeriodGrid,
    coverage_table_text,
    emit_plot_data,
    lda_table_text,
    observation_band_check,
    severity_table,
    world_share_table_text,
)

log = logging.getLogger(__name__)


class StageError(CrisisLdaError):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


@dataclass(frozen=True)
class PipelineConfig:
    hp_lambda: float = 100.0
    anchor: str = "observed"
    history: str = "full"
    gaps: str = "net"
    scale: str = "pre-onset"
    twin_window_years: int = 0
    measures: tuple = tuple(m.value for m in MeasureId)
    lda_measures: tuple = tuple(m.value for m in HP_MEASURES)
    unit: str = "usd"
    select: str = "benchmark"
    frequency: str = "NegativeBinomial"
    freq_start: int = 1970
    freq_end: int = 2005
    period_length: int = 5
    sims: int = 500_000
    seed: int = 42
    workers: int = 1
    percentiles: tuple = DEFAULT_PERCENTILES
    quantile_method: str = "nearest-rank"
    world_gdp: float = WORLD_GDP_2005USD
    oracle: str = "none"
    svg: bool = False

    def loss_options(self) -> LossOptions:
        return LossOptions(self.gaps, self.scale, self.hp_lambda, self.history, self.anchor)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    def hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    def updated(self, **overrides) -> "PipelineConfig":
        return dataclasses.replace(self, **{k: v for k, v in overrides.items() if v is not None})


def _coerce(name, raw: str):
    f = PipelineConfig.__dataclass_fields__[name]
    default = f.default
    if isinstance(default, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        items = [t.strip() for t in raw.split(",") if t.strip()]
        if name == "percentiles":
            return tuple(float(t) for t in items)
        if items == ["all"]:
            return tuple(m.value for m in MeasureId)
        return tuple(MeasureId.parse(t).value for t in items)
    return raw.strip()


def load_config(path=None, **overrides) -> PipelineConfig:
    """Read a ``key = value`` config file; ``#`` starts a comment."""
    values = {}
    if path is not None:
        for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{n}: expected key=value")
            key, raw = (t.strip() for t in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in PipelineConfig.__dataclass_fields__:
                raise ValidationError(f"{path}:{n}: unknown config key {key!r}")
            try:
                values[key] = _coerce(key, raw)
            except ValueError as exc:
                raise ValidationError(f"{path}:{n}: {exc}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig(**values)


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _dump(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------

def ingest_workspace(gdp_path, crises_path, out_dir, meta_path=None, twin_window_years: int = 0) -> dict:
    """Validate the raw inputs and write their normalised copies to ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gdp_report, crisis_report = LoadReport(), LoadReport()
    panel = load_gdp_panel(gdp_path, meta_path, gdp_report)
    events = load_crisis_catalog(crises_path, crisis_report)
    episodes = merge_episodes(events, twin_window_years)
    write_gdp_panel(panel, out / "gdp.csv")
    write_crisis_catalog(events, out / "crises.csv")
    if panel.meta:
        write_meta(panel.meta, out / "meta.csv")
    report = {
        "countries": len(panel),
        "events": len(events),
        "events_by_kind": kind_counts(events),
        "episodes": len(episodes),
        "twin_episodes": sum(e.twin for e in episodes),
        "countries_with_meta": len(panel.meta),
        "gdp": gdp_report.as_dict(),
        "crises": crisis_report.as_dict(),
    }
    _dump(report, out / "ingest_report.json")
    return report


def load_workspace(workspace, twin_window_years: int = 0):
    ws = Path(workspace)
    meta = ws / "meta.csv"
    panel = load_gdp_panel(ws / "gdp.csv", meta if meta.exists() else None)
    episodes = merge_episodes(load_crisis_catalog(ws / "crises.csv"), twin_window_years)
    return panel, episodes


def losses_stage(workspace, config: PipelineConfig, out=None):
    panel, episodes = load_workspace(workspace, config.twin_window_years)
    measures = [MeasureId.parse(m) for m in config.measures]
    table = run_all_measures(panel, episodes, measures, config.loss_options())
    out = Path(out) if out is not None else Path(workspace) / "losses.csv"
    table.to_csv(out)
    _dump(table.diagnostics(), out.with_name(out.stem + "_diagnostics.json"))
    return table


def fit_document(table, measure: MeasureId, config: PipelineConfig) -> dict:
    """Frequency and severity fits for one measure, as a JSON-ready dict."""
    sample = build_frequency_sample(table, measure, config.freq_start, config.freq_end, config.period_length)
    freq_models = [fit_poisson(sample), fit_negbin(sample)]
    losses = table.values(measure, config.unit)
    sev = fit_all_severity(losses)
    chosen = select_severity_model(sev, config.select)
    return {
        "measure": measure.value,
        "unit": config.unit,
        "frequency": {
            "period_length": sample.period_length_years,
            "periods": [list(p) for p in sample.periods],
            "counts": sample.counts.tolist(),
            "mean": sample.mean,
            "variance_to_mean": sample.dispersion,
            "models": {m.family.value: {**m.to_dict(), "chi2_pvalue": frequency_chi2_pvalue(m, sample)}
                       for m in freq_models},
            "selected": config.frequency,
        },
        "severity": {
            "n": int(losses.size),
            "sample_max": float(losses.max()) if losses.size else 0.0,
            "models": {f.value: m.to_dict() for f, m in sev.fits.items()},
            "failures": {f.value: msg for f, msg in sev.failures.items()},
            "ranking_aic": [m.family.value for m in sev.ranking()],
            "policy": config.select,
            "selected": chosen.family.value,
        },
    }


def models_from_fit_document(doc) -> tuple[FittedFrequencyModel, FittedSeverityModel]:
    freq = doc["frequency"]
    sev = doc["severity"]
    return (FittedFrequencyModel.from_dict(freq["models"][FrequencyFamily(freq["selected"]).value]),
            FittedSeverityModel.from_dict(sev["models"][SeverityFamily(sev["selected"]).value]))


def fit_stage(losses_path, measure: MeasureId, config: PipelineConfig, out) -> dict:
    table = read_losses_csv(losses_path)
    doc = fit_document(table, measure, config)
    _dump(doc, out)
    return doc


def lda_stage(fits_path, config: PipelineConfig, out) -> dict:
    doc = json.loads(Path(fits_path).read_text(encoding="utf-8"))
    freq, sev = models_from_fit_document(doc)
    dist = simulate_aggregate(freq, sev, config.sims, config.seed, config.workers)
    extra = {
        "measure": doc.get("measure"),
        "unit": doc.get("unit"),
        "frequency": freq.to_dict(),
        "severity": sev.to_dict(),
    }
    if config.oracle == "panjer":
        step = default_panjer_step(doc["severity"]["sample_max"])
        compound = panjer_compound(freq, sev, step)
        extra["oracle"] = {"method": "panjer", "step": step,
                           "kolmogorov_distance": kolmogorov_distance(dist, compound)}
    return write_lda_json(dist, out, config.percentiles, config.quantile_method, sidecar=True, extra=extra)


def report_stage(workspace, config: PipelineConfig, out_dir=None) -> list[Path]:
    ws = Path(workspace)
    out = Path(out_dir) if out_dir is not None else ws / "reports"
    out.mkdir(parents=True, exist_ok=True)
    plots = out / "plots"
    plots.mkdir(exist_ok=True)
    table = read_losses_csv(ws / "losses.csv")
    periods = PeriodGrid(config.freq_start, config.freq_end, config.period_length)
    written = []
    hp = [m for m in HP_MEASURES if table.for_measure(m)]
    others = [m for m in MeasureId if m not in HP_MEASURES and table.for_measure(m)]
    for measures, tag in ((hp, "hp"), (others, "other")):
        if not measures:
            continue
        for axis in GroupingAxis:
            st = severity_table(table, measures, axis, "fraction", periods)
            stem = f"severity_{tag}_{axis.value}"
            (out / f"{stem}.txt").write_text(st.to_text(), encoding="utf-8")
            st.to_csv(out / f"{stem}.csv")
            written += [out / f"{stem}.txt", out / f"{stem}.csv"]
    _dump(observation_band_check(table), out / "observation_counts.json")
    written.append(out / "observation_counts.json")

    summaries = {}
    for m in (MeasureId.parse(t) for t in config.lda_measures):
        lda_path = ws / f"lda_{m.value}.json"
        if lda_path.exists():
            summaries[m.value] = read_lda_json(lda_path)["summary"]
        fits_path = ws / f"fits_{m.value}.json"
        if fits_path.exists():
            freq_doc = json.loads(fits_path.read_text(encoding="utf-8"))
            freq_models = [FittedFrequencyModel.from_dict(d) for d in freq_doc["frequency"]["models"].values()]
            written.append(emit_plot_data(freq_models, plots / f"frequency_pmf_{m.value}.csv", svg=config.svg))
        fractions = table.values(m, "fraction")
        if fractions.size:
            try:
                curve = mean_excess(fractions)
                written.append(emit_plot_data(curve, plots / f"mean_excess_{m.value}.csv", svg=config.svg))
            except CrisisLdaError as exc:
                log.warning("mean excess for %s skipped: %s", m.value, exc)
            try:
                fits = fit_all_severity(fractions)
                written.append(emit_plot_data(list(fits.fits.values()), plots / f"severity_pdf_{m.value}.csv",
                                              svg=config.svg, cut=1.5))
            except CrisisLdaError as exc:
                log.warning("severity densities for %s skipped: %s", m.value, exc)
    if summaries:
        for name, text in (("lda_summary", lda_table_text(summaries)),
                           ("lda_world_gdp_share", world_share_table_text(summaries, config.world_gdp)),
                           ("insurance_coverage", coverage_table_text(summaries, world_gdp=config.world_gdp))):
            (out / f"{name}.txt").write_text(text, encoding="utf-8")
            written.append(out / f"{name}.txt")
    return written


def run_pipeline(workspace, config: PipelineConfig = PipelineConfig()) -> dict:
    """losses, fits, LDA and reports for an ingested workspace, plus ``manifest.json``.

    Failures are re-raised as :class:`StageError` carrying the stage name.
    """
    ws = Path(workspace)

    def stage(name, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except Exception as exc:
            raise StageError(name, exc) from exc

    for required in ("gdp.csv", "crises.csv"):
        if not (ws / required).exists():
            raise StageError("ingest", ValidationError(f"{ws / required} not found; run ingest first"))
    stage("losses", losses_stage, ws, config)
    artifacts = [ws / "losses.csv", ws / "losses_diagnostics.json"]
    for token in config.lda_measures:
        m = MeasureId.parse(token)
        fits = ws / f"fits_{m.value}.json"
        stage("fit", fit_stage, ws / "losses.csv", m, config, fits)
        lda = ws / f"lda_{m.value}.json"
        stage("lda", lda_stage, fits, config, lda)
        artifacts += [fits, lda, lda.with_suffix(".json.bin")]
    artifacts += stage("report", report_stage, ws, config)
    manifest = {
        "package_version": __version__,
        "numpy_version": np.__version__,
        "generator": GENERATOR_VERSION,
        "seed": config.seed,
        "config": config.to_dict(),
        "config_hash": config.hash(),
        "artifacts": {str(Path(p).relative_to(ws)): _sha256(p) for p in sorted(set(artifacts))},
    }
    _dump(manifest, ws / "manifest.json")
    return manifest
