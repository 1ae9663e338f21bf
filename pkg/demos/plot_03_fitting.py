"""
Frequency and severity fits
===========================

Count contractionary crises per five-year period, fit Poisson and negative
binomial laws, then fit six severity families to the HP10trend losses.
"""

import numpy as np

from crisis_lda.fitting import (
    build_frequency_sample,
    fit_all_severity,
    fit_negbin,
    fit_poisson,
    mean_excess,
    select_severity_model,
)
from crisis_lda.ingest import merge_episodes
from crisis_lda.losses import MeasureId, run_all_measures
from crisis_lda.synthetic import make_synthetic_panel

panel, events = make_synthetic_panel(n_countries=120, seed=7)
table = run_all_measures(panel, merge_episodes(events), [MeasureId.HP10trend])

sample = build_frequency_sample(table, MeasureId.HP10trend)
print("periods:", [f"{a}-{b}" for a, b in sample.periods])
print("counts: ", sample.counts.tolist(), f" variance/mean {sample.dispersion:.2f}")
for model in (fit_poisson(sample), fit_negbin(sample)):
    print(f"{model.family.value:>17}: {model.params}  logL {model.log_likelihood:.2f}  AIC {model.aic:.2f}")

losses = table.values(MeasureId.HP10trend)
fits = fit_all_severity(losses)
print(f"\n{losses.size} losses; AIC ranking:")
for m in fits.ranking():
    params = ", ".join(f"{k}={v:.4g}" for k, v in m.params.items())
    print(f"  {m.family.value:<18} AIC {m.aic:9.2f}  KS {m.ks_statistic:.3f}  {params}")
for fam, why in fits.failures.items():
    print(f"  {fam.value:<18} failed: {why}")
print("benchmark choice:", select_severity_model(fits).family.value)
print("AIC choice:      ", select_severity_model(fits, "aic").family.value)

# the mean excess over a rising threshold: an upward drift signals a heavy tail
curve = mean_excess(losses, np.quantile(losses, [0.0, 0.25, 0.5, 0.75, 0.9]))
for u, e, n in zip(curve.thresholds, curve.mean_excess, curve.n_exceed):
    print(f"  u={u:.3f}  mean excess {e:.3f}  ({n} exceedances)")
