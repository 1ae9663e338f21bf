"""Loss distribution approach for output losses of financial crises.

Pipeline: GDP panel and crisis catalog (:mod:`crisis_lda.ingest`),
counterfactual trends (:mod:`crisis_lda.trend`), per-episode loss measures
(:mod:`crisis_lda.losses`), frequency and severity fits
(:mod:`crisis_lda.fitting`), aggregate loss simulation
(:mod:`crisis_lda.lda`) and tables (:mod:`crisis_lda.reporting`).
"""

__version__ = "0.1.0"

from .errors import CrisisLdaError, InsufficientHistory, NumericalError, ValidationError  # noqa: E402
from .fitting import (  # noqa: E402
    FittedFrequencyModel,
    FittedSeverityModel,
    FrequencySample,
    MeanExcessCurve,
    SeverityFamily,
    build_frequency_sample,
    fit_negbin,
    fit_poisson,
    fit_severity,
    mean_excess,
    select_severity_model,
)
from .ingest import (  # noqa: E402
    CrisisEpisode,
    CrisisEvent,
    CrisisKind,
    GdpPanel,
    GdpSeries,
    load_crisis_catalog,
    load_gdp_panel,
    merge_episodes,
)
from .lda import AggregateLossDistribution, panjer_compound, risk_summary, simulate_aggregate  # noqa: E402
from .losses import LossOptions, LossRecord, LossTable, MeasureId, compute_loss, run_all_measures  # noqa: E402
from .reporting import insurance_coverage, severity_table, to_world_gdp_share  # noqa: E402
from .trend import TrendMethod, TrendSpec, build_counterfactual, hp_filter, precrisis_growth  # noqa: E402
