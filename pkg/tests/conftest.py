import numpy as np
import pytest

from crisis_lda.ingest import CrisisEpisode, CrisisKind, GdpSeries, write_crisis_catalog, write_gdp_panel, write_meta
from crisis_lda.synthetic import make_synthetic_panel


@pytest.fixture(scope="session")
def synthetic():
    return make_synthetic_panel(n_countries=30, seed=11)


@pytest.fixture
def workspace_inputs(tmp_path, synthetic):
    panel, events = synthetic
    paths = {"gdp": tmp_path / "gdp.csv", "crises": tmp_path / "crises.csv", "meta": tmp_path / "meta.csv"}
    write_gdp_panel(panel, paths["gdp"])
    write_crisis_catalog(events, paths["crises"])
    write_meta(panel.meta, paths["meta"])
    return paths


def episode(country="XXX", year=2000, *kinds):
    return CrisisEpisode(country, year, frozenset(kinds or (CrisisKind.BANKING,)))


def series_from_levels(levels, first_year=1980, country="XXX"):
    return GdpSeries(country, first_year, np.asarray(levels, dtype=float))


def dip_series():
    """Flat at 100 for twelve years, 90 at onset (1992) and 1993, back to 100 from 1994."""
    levels = [100.0] * 12 + [90.0, 90.0] + [100.0] * 6
    return series_from_levels(levels, first_year=1980)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def record(criterion, ok, detail=""):
        lines.append(f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
