"""
Thirteen loss measures
======================

Compute every loss measure on a synthetic panel and look at how the end
rule and the trend choice move the typical loss.
"""

import numpy as np

from crisis_lda.ingest import kind_counts, merge_episodes
from crisis_lda.losses import ALL_MEASURES, LossOptions, run_all_measures
from crisis_lda.synthetic import make_synthetic_panel

panel, events = make_synthetic_panel(n_countries=60, seed=3)
episodes = merge_episodes(events)
print(f"{len(events)} crisis events {kind_counts(events)} -> {len(episodes)} episodes, "
      f"{sum(e.twin for e in episodes)} twin")

table = run_all_measures(panel, episodes)
diag = table.diagnostics()
print(f"\n{'measure':<13}{'obs':>5}{'excl':>6}{'quiet':>7}{'mean':>8}{'median':>8}{'max':>8}")
for m in ALL_MEASURES:
    x = table.values(m)
    print(f"{m.value:<13}{x.size:>5}{diag['insufficient_history'][m.value]:>6}"
          f"{diag['not_contractionary'][m.value]:>7}{x.mean():>8.3f}{np.median(x):>8.3f}{x.max():>8.3f}")

# counting only shortfalls instead of netting them can only raise losses
shortfall = run_all_measures(panel, episodes, options=LossOptions(gaps="positive-only"))
for m in ALL_MEASURES[:2]:
    print(f"{m.value}: net mean {table.values(m).mean():.3f}, "
          f"positive-only mean {shortfall.values(m).mean():.3f}")
