"""
Risk tables and insurance coverage
==================================

Express simulated percentiles as shares of world GDP and size the coverage
needed to insure losses up to a high percentile.
"""

from crisis_lda.fitting import negbin_model, severity_model
from crisis_lda.ingest import merge_episodes
from crisis_lda.lda import simulate_aggregate
from crisis_lda.losses import HP_MEASURES, run_all_measures
from crisis_lda.reporting import (
    GroupingAxis,
    coverage_table_text,
    lda_table_text,
    severity_table,
    world_share_table_text,
)
from crisis_lda.synthetic import make_synthetic_panel

panel, events = make_synthetic_panel(n_countries=80, seed=2)
table = run_all_measures(panel, merge_episodes(events), HP_MEASURES)
print(severity_table(table, axis=GroupingAxis.REGION).to_text())

summaries = {}
for name, scale in (("mild", 1.5e10), ("severe", 5.0e10)):
    dist = simulate_aggregate(negbin_model(1.5, 0.06), severity_model("Weibull", shape=0.7, scale=scale),
                              n_sims=100_000, seed=1)
    summaries[name] = dist.summary()

print(lda_table_text(summaries))
print(world_share_table_text(summaries))
print(coverage_table_text(summaries))
