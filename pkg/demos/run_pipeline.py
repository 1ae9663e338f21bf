"""
End to end on a workspace
=========================

Write a synthetic panel to CSV, then run ingest, losses, fits, simulation
and reports exactly as the command line does.
"""

import sys
import tempfile
from pathlib import Path

from crisis_lda.cli import main
from crisis_lda.ingest import write_crisis_catalog, write_gdp_panel, write_meta
from crisis_lda.synthetic import make_synthetic_panel

root = Path(sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="crisis-lda-"))
root.mkdir(parents=True, exist_ok=True)
panel, events = make_synthetic_panel(n_countries=60, seed=3)
write_gdp_panel(panel, root / "raw_gdp.csv")
write_crisis_catalog(events, root / "raw_crises.csv")
write_meta(panel.meta, root / "raw_meta.csv")

code = main(["pipeline", "--workspace", str(root / "ws"),
             "--gdp", str(root / "raw_gdp.csv"), "--crises", str(root / "raw_crises.csv"),
             "--meta", str(root / "raw_meta.csv"), "--sims", "100000"])
print((root / "ws" / "reports" / "lda_summary.txt").read_text())
print((root / "ws" / "reports" / "insurance_coverage.txt").read_text())
print("outputs in", root / "ws")
sys.exit(code)
