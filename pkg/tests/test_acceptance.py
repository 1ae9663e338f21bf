"""Acceptance criteria, each checked at its stated tolerance.

Every test records one PASS/FAIL line, printed in the pytest terminal
summary under "acceptance criteria".
"""
import hashlib
import json
import os
import time
import warnings

import numpy as np
import pytest
from scipy import stats

from crisis_lda.fitting import (
    FrequencySample,
    SeverityFamily,
    fit_negbin,
    fit_poisson,
    fit_severity,
    mean_excess,
    negbin_model,
    poisson_model,
    severity_model,
)
from crisis_lda.ingest import load_crisis_catalog, load_gdp_panel, merge_episodes
from crisis_lda.lda import RiskSummary, kolmogorov_distance, panjer_compound, simulate_aggregate, write_lda_json
from crisis_lda.losses import ALL_MEASURES, MeasureId, compute_loss, run_all_measures, write_losses_csv
from crisis_lda.reporting import (
    GroupingAxis,
    insurance_coverage,
    observation_band_check,
    severity_table,
    to_world_gdp_share,
)
from crisis_lda.synthetic import make_synthetic_panel
from crisis_lda.trend import hp_filter

from conftest import dip_series, episode

pytestmark = pytest.mark.acceptance


def test_1_hp_filter_exactness(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    affine_err = 0.0
    for lam in (1e-4, 6.25, 100.0, 1600.0, 1e6):
        for n in (4, 5, 20, 51):
            a, b = rng.normal(size=2) * 100
            y = a + b * np.arange(n)
            affine_err = max(affine_err, np.max(np.abs(hp_filter(y, lam) - y)))
    dense_err = 0.0
    for seed in range(10):
        y = np.random.default_rng(seed).normal(size=20)
        d = np.diff(np.eye(20), n=2, axis=0)
        ref = np.linalg.solve(np.eye(20) + 100.0 * d.T @ d, y)
        dense_err = max(dense_err, np.max(np.abs(hp_filter(y, 100.0) - ref)))
    elapsed = time.perf_counter() - t0
    ok = affine_err <= 1e-9 and dense_err <= 1e-8 and elapsed < 1.0
    acceptance(1, ok, f"affine max err {affine_err:.2e} (<=1e-9), dense max err {dense_err:.2e} (<=1e-8), "
                      f"{elapsed:.3f}s (<1s)")
    assert ok


def _five_country_losses(path):
    panel, events = make_synthetic_panel(n_countries=5, crisis_rate=0.15, seed=5)
    table = run_all_measures(panel, merge_episodes(events), ALL_MEASURES)
    write_losses_csv(table, path)
    return path.read_bytes(), table


def test_2_loss_measure_arithmetic(acceptance, tmp_path):
    rec = compute_loss(episode(year=1992), dip_series(), MeasureId.AG10_10trend)
    a, table = _five_country_losses(tmp_path / "a.csv")
    b, _ = _five_country_losses(tmp_path / "b.csv")
    ok = rec.loss_fraction == 0.20 and a == b and len(table.measures) == 13
    acceptance(2, ok, f"dip fixture loss_fraction={rec.loss_fraction!r} (==0.20), "
                      f"5-country 13-measure rerun byte-identical={a == b} "
                      f"({len(table.records)} records, sha256 {hashlib.sha256(a).hexdigest()[:12]})")
    assert ok


SEVERITY_TRUTH = {
    SeverityFamily.EXPONENTIAL: ({"scale": 2.0}, stats.expon(scale=2.0)),
    SeverityFamily.LOGNORMAL: ({"mu": 0.5, "sigma": 1.2}, stats.lognorm(1.2, scale=np.exp(0.5))),
    SeverityFamily.GAMMA: ({"shape": 0.7, "scale": 0.3}, stats.gamma(0.7, scale=0.3)),
    SeverityFamily.WEIBULL: ({"shape": 0.8, "scale": 1.5}, stats.weibull_min(0.8, scale=1.5)),
    SeverityFamily.GEV: ({"shape": 0.2, "loc": 1.0, "scale": 0.5}, stats.genextreme(-0.2, loc=1.0, scale=0.5)),
    SeverityFamily.GENERALIZED_PARETO: ({"shape": 0.3, "scale": 0.8}, stats.genpareto(0.3, scale=0.8)),
}


def test_3_mle_recovery(acceptance):
    t0 = time.perf_counter()
    worst = {}
    ok = True
    for k, (fam, (truth, dist)) in enumerate(SEVERITY_TRUTH.items()):
        x = dist.rvs(size=10_000, random_state=np.random.default_rng(100 + k))
        fit = fit_severity(x, fam)
        for name, value in truth.items():
            if name == "shape" and fam in (SeverityFamily.GEV, SeverityFamily.GENERALIZED_PARETO):
                err, tol = abs(fit.params[name] - value), 0.05
            else:
                err, tol = abs(fit.params[name] / value - 1), 0.05
            ok &= err <= tol
            worst[f"{fam.value}.{name}"] = err
    counts = stats.poisson(25.0).rvs(size=10_000, random_state=np.random.default_rng(200))
    lam = fit_poisson(FrequencySample(5, 1970, counts)).params["lam"]
    worst["Poisson.lam"] = abs(lam / 25.0 - 1)
    counts = stats.nbinom(2.0, 0.1).rvs(size=10_000, random_state=np.random.default_rng(201))
    nb = fit_negbin(FrequencySample(5, 1970, counts))
    worst["NegBin.r"] = abs(nb.params["r"] / 2.0 - 1)
    worst["NegBin.p"] = abs(nb.params["p"] / 0.1 - 1)
    ok &= max(worst["Poisson.lam"], worst["NegBin.r"], worst["NegBin.p"]) <= 0.05
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 30
    top = max(worst, key=worst.get)
    acceptance(3, ok, f"6 severity + 2 frequency families, largest error {top}={worst[top]:.4f}, "
                      f"{elapsed:.2f}s (<30s)")
    assert ok, worst


def test_4_compound_moments(acceptance):
    t0 = time.perf_counter()
    d = simulate_aggregate(poisson_model(4.0), severity_model("Exponential", scale=2.0), 500_000, seed=42)
    elapsed = time.perf_counter() - t0
    mean, var = d.samples.mean(), d.samples.var()
    ok = abs(mean / 8 - 1) <= 0.01 and abs(var / 32 - 1) <= 0.02 and elapsed < 10
    acceptance(4, ok, f"mean {mean:.4f} (8 +-1%), variance {var:.3f} (32 +-2%), {elapsed:.2f}s (<10s)")
    assert ok


def _brute_force(count_pmf, f, size):
    out, conv = np.zeros(size), np.zeros(size)
    conv[0] = 1.0
    for p_n in count_pmf:
        out += p_n * conv
        conv = np.convolve(conv, f)[:size]
    return out


def test_5_oracle_equivalence(acceptance):
    pairs = [
        ("Poisson(4)+Exponential(2)", poisson_model(4.0), severity_model("Exponential", scale=2.0), 0.01),
        ("NegBin(2,0.3)+Gamma(1.5,1)", negbin_model(2.0, 0.3), severity_model("Gamma", shape=1.5, scale=1.0), 0.02),
        ("NegBin(3,0.4)+Weibull(1.3,0.8)", negbin_model(3.0, 0.4),
         severity_model("Weibull", shape=1.3, scale=0.8), 0.005),
    ]
    ks = {}
    for name, freq, sev, step in pairs:
        d = simulate_aggregate(freq, sev, 500_000, seed=42)
        ks[name] = kolmogorov_distance(d, panjer_compound(freq, sev, step))
    f = np.zeros(9)
    f[1:] = 0.5 ** np.arange(1, 9)
    f /= f.sum()
    comp = panjer_compound(negbin_model(2.0, 0.5), f, max_mass=1 - 1e-13)
    brute = _brute_force(stats.nbinom(2.0, 0.5).pmf(np.arange(51)), f, comp.pmf.size)
    conv_err = float(np.max(np.abs(comp.pmf - brute)))
    ok = max(ks.values()) <= 0.005 and conv_err <= 1e-8
    acceptance(5, ok, "KS " + ", ".join(f"{k} {v:.4f}" for k, v in ks.items())
               + f" (<=0.005); n-fold convolution vs Panjer max err {conv_err:.1e} (<=1e-8)")
    assert ok


def test_6_reference_number_cross_checks(acceptance):
    share_hi, share_99 = to_world_gdp_share(3.0e12), to_world_gdp_share(1.7e12)
    a = abs(share_hi - 6.81) <= 0.05 and abs(share_99 - 3.86) <= 0.05
    column = RiskSummary({0.5: 1.9e11, 0.99: 1.7e12, 0.999: 3.0e12}, 0.0, 0.0, 500_000)
    cover = insurance_coverage(column, 0.99).usd
    b = cover == 1.51e12
    rate = 0.5
    x = stats.expon(scale=1 / rate).rvs(size=100_000, random_state=np.random.default_rng(6))
    curve = mean_excess(x, thresholds=[0.0, 0.5, 1.0, 2.0, 3.0])
    z = np.abs(curve.mean_excess - 1 / rate) / curve.std_error
    c = len(curve) == 5 and bool((z <= 2).all())
    ok = a and b and c
    acceptance(6, ok, f"(a) {share_hi:.2f}% / {share_99:.2f}% vs 6.81% / 3.86% (+-0.05pp); "
                      f"(b) coverage {cover:.4g} (==1.51e12); (c) mean excess max |z| {z.max():.2f} (<=2)")
    assert ok


def test_7_determinism_under_parallelism(acceptance, tmp_path):
    freq, sev = negbin_model(1.5, 0.06), severity_model("Weibull", shape=0.6, scale=5e10)
    hashes = []
    for workers in (1, 8):
        d = simulate_aggregate(freq, sev, 200_000, seed=42, workers=workers)
        path = tmp_path / f"lda_{workers}.json"
        write_lda_json(d, path)
        hashes.append(hashlib.sha256(path.read_bytes()).hexdigest())
    ok = hashes[0] == hashes[1]
    acceptance(7, ok, f"summary JSON sha256 1 worker {hashes[0][:12]}, 8 workers {hashes[1][:12]}")
    assert ok


GDP_ENV, CRISES_ENV, META_ENV = "CRISIS_LDA_GDP", "CRISIS_LDA_CRISES", "CRISIS_LDA_META"


@pytest.mark.realdata
@pytest.mark.skipif(not (os.environ.get(GDP_ENV) and os.environ.get(CRISES_ENV)),
                    reason=f"set {GDP_ENV} and {CRISES_ENV} to run the real-data soft check")
def test_8_real_data_observation_band(acceptance, tmp_path):
    meta = os.environ.get(META_ENV)
    panel = load_gdp_panel(os.environ[GDP_ENV], meta or None)
    episodes = merge_episodes(load_crisis_catalog(os.environ[CRISES_ENV]))
    table = run_all_measures(panel, episodes)
    text = severity_table(table, axis=GroupingAxis.ALL).to_text()
    (tmp_path / "table1.txt").write_text(text)
    check = observation_band_check(table)
    ok = all(v["in_band"] for v in check.values())
    acceptance(8, ok, "HP observation counts " + ", ".join(f"{k} {v['n']}" for k, v in check.items())
               + " (band 203-219; data-dependent soft check)")
    print(text)
    if not ok:
        warnings.warn("HP observation counts outside the 203-219 band; see table1 output", UserWarning)
