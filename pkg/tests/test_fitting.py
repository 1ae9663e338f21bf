import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from crisis_lda.errors import EmptySample, NoExceedances, NonConvergence, Underdispersed
from crisis_lda.fitting import (
    FittedSeverityModel,
    FrequencyFamily,
    FrequencySample,
    SeverityFamily,
    SeverityFits,
    build_frequency_sample,
    fit_all_severity,
    fit_negbin,
    fit_poisson,
    fit_severity,
    frequency_chi2_pvalue,
    mean_excess,
    negbin_model,
    poisson_model,
    select_severity_model,
    severity_model,
)
from crisis_lda.ingest import merge_episodes
from crisis_lda.losses import MeasureId, run_all_measures

from conftest import episode

# generating distributions written directly in scipy terms, independent of the
# package's own parameter mapping
GENERATORS = {
    SeverityFamily.EXPONENTIAL: ({"scale": 2.0}, stats.expon(scale=2.0)),
    SeverityFamily.LOGNORMAL: ({"mu": -1.5, "sigma": 1.2}, stats.lognorm(1.2, scale=math.exp(-1.5))),
    SeverityFamily.GAMMA: ({"shape": 0.7, "scale": 0.3}, stats.gamma(0.7, scale=0.3)),
    SeverityFamily.WEIBULL: ({"shape": 0.8, "scale": 1.5}, stats.weibull_min(0.8, scale=1.5)),
    SeverityFamily.GEV: ({"shape": 0.2, "loc": 1.0, "scale": 0.5}, stats.genextreme(-0.2, loc=1.0, scale=0.5)),
    SeverityFamily.GENERALIZED_PARETO: ({"shape": 0.3, "scale": 0.8}, stats.genpareto(0.3, scale=0.8)),
}


def draws(family, n=10_000, seed=20):
    return GENERATORS[family][1].rvs(size=n, random_state=np.random.default_rng(seed))


@pytest.fixture(scope="module")
def recovered():
    return {fam: fit_severity(draws(fam), fam) for fam in GENERATORS}


@pytest.mark.parametrize("family", list(GENERATORS))
def test_severity_recovery(recovered, family):
    fit = recovered[family]
    truth = GENERATORS[family][0]
    assert set(fit.params) == set(truth)
    for name, value in truth.items():
        if name == "shape" and family in (SeverityFamily.GEV, SeverityFamily.GENERALIZED_PARETO):
            assert abs(fit.params[name] - value) <= 0.05, (name, fit.params)
        elif name == "mu":
            assert abs(fit.params[name] - value) <= 0.05 * abs(value)
        else:
            assert fit.params[name] == pytest.approx(value, rel=0.05), (name, fit.params)


@pytest.mark.parametrize("family", list(GENERATORS))
def test_fit_improves_on_start(recovered, family):
    fit = recovered[family]
    x = draws(family)
    assert fit.log_likelihood == pytest.approx(fit.dist.logpdf(x).sum(), rel=1e-10)
    if not math.isnan(fit.start_log_likelihood):
        assert fit.log_likelihood >= fit.start_log_likelihood - 1e-9
    assert fit.ks_statistic == pytest.approx(stats.kstest(x, fit.dist.cdf).statistic)
    assert fit.aic == pytest.approx(2 * fit.n_params - 2 * fit.log_likelihood)


@pytest.mark.parametrize("family", list(GENERATORS))
def test_cdf_is_a_distribution(recovered, family):
    fit = recovered[family]
    grid = np.linspace(fit.ppf(1e-9), fit.ppf(1 - 1e-9), 1000)
    cdf = fit.cdf(grid)
    assert (np.diff(cdf) >= 0).all()
    assert cdf[0] < 1e-6 and cdf[-1] > 1 - 1e-6
    assert (fit.pdf(grid) >= 0).all()


@pytest.mark.parametrize("family", [SeverityFamily.GAMMA, SeverityFamily.WEIBULL, SeverityFamily.EXPONENTIAL])
def test_mle_is_scipy_stationary_point(recovered, family):
    # the closed form and Newton fits should agree with scipy's generic optimiser
    x = draws(family)
    fit = recovered[family]
    dist = {SeverityFamily.GAMMA: stats.gamma, SeverityFamily.WEIBULL: stats.weibull_min,
            SeverityFamily.EXPONENTIAL: stats.expon}[family]
    ref = dist(*dist.fit(x, floc=0))
    assert fit.log_likelihood >= ref.logpdf(x).sum() - 1e-6


def test_exponential_mean_within_3_percent(recovered):
    assert recovered[SeverityFamily.EXPONENTIAL].mean() == pytest.approx(2.0, rel=0.03)


def test_constant_sample():
    x = np.full(50, 0.3)
    assert fit_severity(x, SeverityFamily.EXPONENTIAL).mean() == pytest.approx(0.3)
    for fam in (SeverityFamily.GAMMA, SeverityFamily.WEIBULL):
        with pytest.raises(NonConvergence):
            fit_severity(x, fam)
    fits = fit_all_severity(x)
    assert SeverityFamily.EXPONENTIAL in fits.fits
    assert SeverityFamily.WEIBULL in fits.failures


def test_too_few_observations():
    with pytest.raises(EmptySample):
        fit_severity([0.1, 0.2, 0.3], SeverityFamily.WEIBULL)


def test_zero_losses_dropped():
    x = np.append(draws(SeverityFamily.WEIBULL, 500), [0.0, 0.0])
    fit = fit_severity(x, SeverityFamily.WEIBULL)
    assert fit.n_obs == 500 and fit.n_dropped == 2


def test_scale_equivariance():
    x = draws(SeverityFamily.WEIBULL, 2000)
    a = fit_severity(x, SeverityFamily.WEIBULL)
    b = fit_severity(x * 1e12, SeverityFamily.WEIBULL)
    assert b.params["shape"] == pytest.approx(a.params["shape"], rel=1e-8)
    assert b.params["scale"] == pytest.approx(a.params["scale"] * 1e12, rel=1e-8)


def test_selection_policies(recovered):
    fits = dict(recovered)
    assert select_severity_model(fits).family is SeverityFamily.WEIBULL
    best = min(fits.values(), key=lambda m: m.aic)
    assert select_severity_model(fits, "aic") is best
    del fits[SeverityFamily.WEIBULL]
    assert select_severity_model(fits).aic == min(m.aic for m in fits.values())
    only = {SeverityFamily.EXPONENTIAL: recovered[SeverityFamily.EXPONENTIAL]}
    assert select_severity_model(only).family is SeverityFamily.EXPONENTIAL
    with pytest.raises(EmptySample):
        select_severity_model(SeverityFits())
    ranking = SeverityFits(dict(recovered)).ranking()
    assert [m.aic for m in ranking] == sorted(m.aic for m in ranking)


def test_round_trip(recovered):
    for fit in recovered.values():
        again = FittedSeverityModel.from_dict(fit.to_dict())
        assert again.params == fit.params and again.family is fit.family


def test_sampler_matches_distribution():
    rng = np.random.default_rng(5)
    for fam, (params, dist) in GENERATORS.items():
        x = severity_model(fam, **params).sample(rng, 20_000)
        assert stats.kstest(x, dist.cdf).pvalue > 1e-3, fam


# ---------------------------------------------------------------------------
# frequency
# ---------------------------------------------------------------------------

def sample(counts):
    return FrequencySample(5, 1970, np.asarray(counts))


def test_poisson_examples():
    assert fit_poisson(sample([3, 3, 3])).params["lam"] == 3
    assert fit_poisson(sample([0, 2, 4])).params["lam"] == 2
    assert sample([3, 3, 3]).dispersion == 0
    with pytest.raises(EmptySample):
        fit_poisson(sample([0, 0, 0]))


def test_negbin_underdispersed():
    with pytest.warns(Underdispersed):
        m = fit_negbin(sample([3, 3, 3]))
    assert m.underdispersed
    assert m.mean() == pytest.approx(3.0, rel=1e-6)


def test_negbin_recovery():
    counts = stats.nbinom(2, 0.1).rvs(size=10_000, random_state=np.random.default_rng(8))
    m = fit_negbin(sample(counts))
    assert m.params["r"] == pytest.approx(2.0, rel=0.05)
    assert m.params["p"] == pytest.approx(0.1, rel=0.05)
    assert m.mean() == pytest.approx(counts.mean(), rel=1e-6)
    # the maximum is a stationary point of scipy's log-likelihood
    ll = lambda r, p: stats.nbinom(r, p).logpmf(counts).sum()
    r, p = m.params["r"], m.params["p"]
    assert m.log_likelihood == pytest.approx(ll(r, p), rel=1e-12)
    for dr, dp in ((1.01, 1), (0.99, 1), (1, 1.01), (1, 0.99)):
        assert ll(r * dr, p * dp) <= m.log_likelihood


def test_poisson_recovery():
    counts = stats.poisson(25).rvs(size=10_000, random_state=np.random.default_rng(9))
    assert fit_poisson(sample(counts)).params["lam"] == pytest.approx(25, rel=0.05)


def test_negbin_beats_poisson_when_overdispersed():
    counts = [5, 40, 12, 30, 8, 45, 20]
    nb, po = fit_negbin(sample(counts)), fit_poisson(sample(counts))
    assert nb.log_likelihood > po.log_likelihood
    assert nb.aic < po.aic
    p = frequency_chi2_pvalue(nb, sample(counts))
    assert math.isnan(p) or 0 <= p <= 1


@pytest.mark.parametrize("model", [poisson_model(4.0), negbin_model(2.0, 0.3), negbin_model(0.5, 0.05)])
def test_pmf_sums_to_one(model):
    n = np.arange(model.support_max(1 - 1e-12) + 1)
    assert abs(model.pmf(n).sum() - 1) < 1e-9
    assert model.mean() == pytest.approx((n * model.pmf(n)).sum(), rel=1e-8)


def test_frequency_sample_periods(synthetic):
    panel, events = synthetic
    eps = merge_episodes(events)
    s = build_frequency_sample(eps, start_year=1970, end_year=2005, period_length=5)
    assert len(s.periods) == 7
    assert s.periods[0] == (1970, 1975) and s.periods[-1] == (2000, 2005)
    expected = [sum(1 for e in eps if a <= e.start_year < b) for a, b in s.periods]
    assert s.counts.tolist() == expected
    table = run_all_measures(panel, eps, [MeasureId.HP10trend])
    t = build_frequency_sample(table, MeasureId.HP10trend)
    assert (t.counts <= s.counts).all()


def test_no_crises_gives_zero_counts():
    s = build_frequency_sample([], start_year=1970, end_year=2005)
    assert s.counts.tolist() == [0] * 7
    with pytest.raises(EmptySample):
        fit_negbin(s)


# ---------------------------------------------------------------------------
# mean excess
# ---------------------------------------------------------------------------

def test_mean_excess_arithmetic():
    c = mean_excess([1.0, 2.0, 3.0], thresholds=[0.0], min_exceedances=1)
    assert c.mean_excess.tolist() == [2.0]
    c = mean_excess([1.0, 2.0, 3.0], thresholds=[0.0, 1.0, 2.0], min_exceedances=1)
    assert len(c) == 3
    np.testing.assert_allclose(c.mean_excess, [2.0, 1.5, 1.0])


def test_mean_excess_drops_thin_thresholds():
    x = np.arange(1.0, 11.0)
    c = mean_excess(x)
    assert (c.n_exceed >= 5).all()
    assert (np.diff(c.thresholds) > 0).all()
    with pytest.raises(NoExceedances):
        mean_excess(x, thresholds=[100.0])
    with pytest.raises(ValueError):
        mean_excess(x, thresholds=[2.0, 1.0])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1e3), min_size=1, max_size=60), st.floats(-10, 1e3))
def test_mean_excess_matches_direct_formula(xs, u):
    x = np.array(xs)
    exc = x[x > u]
    if exc.size == 0:
        return
    c = mean_excess(x, thresholds=[u], min_exceedances=1)
    assert c.mean_excess[0] == pytest.approx((exc - u).mean(), rel=1e-9, abs=1e-9)


def test_mean_excess_exponential_is_flat():
    rate = 0.5
    x = stats.expon(scale=1 / rate).rvs(size=100_000, random_state=np.random.default_rng(3))
    c = mean_excess(x, thresholds=[0.0, 0.5, 1.0, 2.0, 4.0])
    assert (np.abs(c.mean_excess - 1 / rate) <= 2 * c.std_error).all()


def test_mean_excess_slopes_up_for_heavy_tail():
    x = stats.genpareto(0.4, scale=1.0).rvs(size=20_000, random_state=np.random.default_rng(4))
    c = mean_excess(x, thresholds=np.quantile(x, [0.5, 0.9, 0.98]))
    assert (np.diff(c.mean_excess) > 0).all()
