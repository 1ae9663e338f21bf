"""
Counterfactual output paths
===========================

Build the pre-crisis trends that output losses are measured against.
"""

import numpy as np

from crisis_lda.synthetic import make_synthetic_panel
from crisis_lda.trend import TrendMethod, TrendSpec, build_counterfactual, hp_filter

panel, events = make_synthetic_panel(n_countries=10, seed=4)
event = events[0]
series = panel[event.country_id]
print(f"{event.country_id}: {event.kind.value} crisis in {event.start_year}")

# HP trend of log GDP up to the year before onset (lambda = 100 for annual data)
pre = np.log(series.window(series.first_year, event.start_year - 1))
trend = hp_filter(pre, 100.0)
print("last five years, log GDP vs trend:")
for y, obs, t in zip(range(event.start_year - 5, event.start_year), pre[-5:], trend[-5:]):
    print(f"  {y}  {obs:.4f}  {t:.4f}")

# four counterfactuals: HP or plain average growth, over 3 or 10 years
for method in TrendMethod:
    for window in (3, 10):
        cf = build_counterfactual(series, event.start_year, TrendSpec(method, window))
        path = cf.levels(5) / series[event.start_year - 1]
        print(f"{method.value:>14} {window:>2}y  growth {cf.growth_rate:.4f}  "
              f"path/base {np.array2string(path, precision=3)}")

# observed output in the same years, relative to the pre-onset level
observed = series.window(event.start_year, event.start_year + 4) / series[event.start_year - 1]
print(f"{'observed':>18}  {'':13} path/base {np.array2string(observed, precision=3)}")
