"""Frequency and severity distribution fitting.

Frequency models (Poisson, negative binomial) are fitted to crisis counts per
reference period; severity models (six continuous families) are fitted by
maximum likelihood to per-episode losses.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy import optimize, special, stats

from .errors import EmptySample, NoExceedances, NonConvergence, SupportViolation, Underdispersed
from .ingest import CrisisEpisode
from .losses import LossTable, MeasureId

MAX_ITER = 10_000
ZERO_LOSS_FLOOR = 1e-9
MIN_SEVERITY_OBS = 10
NEGBIN_R_CAP = 1e6
EULER_GAMMA = 0.5772156649015329


# ---------------------------------------------------------------------------
# frequency
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrequencySample:
    period_length_years: int
    start_year: int
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 1 or counts.size < 2:
            raise ValueError("a frequency sample needs at least 2 periods")
        if (counts < 0).any():
            raise ValueError("counts must be nonnegative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def periods(self) -> list[tuple[int, int]]:
        L = self.period_length_years
        return [(self.start_year + i * L, self.start_year + (i + 1) * L) for i in range(self.counts.size)]

    @property
    def mean(self) -> float:
        return float(self.counts.mean())

    @property
    def dispersion(self) -> float:
        """Variance-to-mean ratio (sample variance, ``ddof=1``)."""
        m = self.mean
        return float(self.counts.var(ddof=1) / m) if m > 0 else math.nan


class FrequencyFamily(enum.Enum):
    POISSON = "Poisson"
    NEGATIVE_BINOMIAL = "NegativeBinomial"


@dataclass(frozen=True)
class FittedFrequencyModel:
    """Fitted count distribution.

    Negative binomial uses ``P(N=n) = C(n+r-1, n) p**r (1-p)**n``, which is
    the parameterisation of :data:`scipy.stats.nbinom`.
    """

    family: FrequencyFamily
    params: Mapping[str, float]
    log_likelihood: float
    n_obs: int
    underdispersed: bool = False

    @property
    def dist(self):
        if self.family is FrequencyFamily.POISSON:
            return stats.poisson(self.params["lam"])
        return stats.nbinom(self.params["r"], self.params["p"])

    @property
    def n_params(self) -> int:
        return 1 if self.family is FrequencyFamily.POISSON else 2

    @property
    def aic(self) -> float:
        return 2 * self.n_params - 2 * self.log_likelihood

    def mean(self) -> float:
        if self.family is FrequencyFamily.POISSON:
            return self.params["lam"]
        r, p = self.params["r"], self.params["p"]
        return r * (1 - p) / p

    def var(self) -> float:
        if self.family is FrequencyFamily.POISSON:
            return self.params["lam"]
        r, p = self.params["r"], self.params["p"]
        return r * (1 - p) / p ** 2

    def pmf(self, n):
        return self.dist.pmf(n)

    def support_max(self, mass: float = 1 - 1e-12) -> int:
        """Smallest ``N`` with ``P(N' <= N) >= mass``."""
        n = int(self.dist.ppf(mass))
        while self.dist.cdf(n) < mass:
            n += 1
        return n

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.family is FrequencyFamily.POISSON:
            return rng.poisson(self.params["lam"], size)
        return rng.negative_binomial(self.params["r"], self.params["p"], size)

    def panjer_ab(self) -> tuple[float, float]:
        """Coefficients of the ``(a, b, 0)`` recursion ``p_n = (a + b/n) p_{n-1}``."""
        if self.family is FrequencyFamily.POISSON:
            return 0.0, self.params["lam"]
        r, p = self.params["r"], self.params["p"]
        return 1 - p, (r - 1) * (1 - p)

    def pgf(self, s: float) -> float:
        if self.family is FrequencyFamily.POISSON:
            return math.exp(self.params["lam"] * (s - 1))
        r, p = self.params["r"], self.params["p"]
        return (p / (1 - (1 - p) * s)) ** r

    def to_dict(self) -> dict:
        return {"family": self.family.value, "params": dict(self.params),
                "log_likelihood": self.log_likelihood, "aic": self.aic, "n_obs": self.n_obs,
                "underdispersed": self.underdispersed}

    @classmethod
    def from_dict(cls, d) -> "FittedFrequencyModel":
        return cls(FrequencyFamily(d["family"]), dict(d["params"]), d["log_likelihood"],
                   d.get("n_obs", 0), d.get("underdispersed", False))


def poisson_model(lam: float) -> FittedFrequencyModel:
    return FittedFrequencyModel(FrequencyFamily.POISSON, {"lam": float(lam)}, math.nan, 0)


def negbin_model(r: float, p: float) -> FittedFrequencyModel:
    return FittedFrequencyModel(FrequencyFamily.NEGATIVE_BINOMIAL, {"r": float(r), "p": float(p)}, math.nan, 0)


def build_frequency_sample(source, measure: MeasureId | None = None, start_year: int = 1970,
                           end_year: int = 2005, period_length: int = 5) -> FrequencySample:
    """Count contractionary episodes per period.

    ``source`` is a :class:`LossTable` (episodes with a record under
    ``measure`` are counted) or an iterable of :class:`CrisisEpisode`.
    Periods are half-open, ``[start, start + period_length)``.
    """
    span = end_year - start_year
    if period_length <= 0 or span <= 0 or span % period_length:
        raise ValueError("end_year - start_year must be a positive multiple of period_length")
    if isinstance(source, LossTable):
        if measure is None:
            raise ValueError("a measure is required when counting from a LossTable")
        onsets = [r.onset_year for r in source.for_measure(measure)]
    else:
        onsets = [e.start_year for e in source]
    onsets = np.asarray(onsets, dtype=np.int64)
    onsets = onsets[(onsets >= start_year) & (onsets < end_year)]
    counts = np.bincount((onsets - start_year) // period_length, minlength=span // period_length)
    return FrequencySample(period_length, start_year, counts)


def _counts(sample) -> np.ndarray:
    counts = sample.counts if isinstance(sample, FrequencySample) else np.asarray(sample, dtype=np.int64)
    if counts.size == 0 or counts.sum() == 0:
        raise EmptySample("no events to fit a frequency model to")
    return counts


def fit_poisson(sample) -> FittedFrequencyModel:
    counts = _counts(sample)
    lam = float(counts.mean())
    ll = float(stats.poisson.logpmf(counts, lam).sum())
    return FittedFrequencyModel(FrequencyFamily.POISSON, {"lam": lam}, ll, int(counts.size))


def _negbin_profile(r, counts, m):
    n = counts.size
    return float(special.gammaln(counts + r).sum() - n * special.gammaln(r) - special.gammaln(counts + 1).sum()
                 + n * r * math.log(r / (r + m)) + counts.sum() * math.log(m / (r + m)))


def fit_negbin(sample) -> FittedFrequencyModel:
    """Negative binomial MLE via Newton iterations on the profile likelihood in ``log r``.

    Given ``r`` the MLE of ``p`` is ``r / (r + mean)``, so the fitted mean
    always equals the sample mean. Samples with variance not exceeding the
    mean have no finite MLE; they get ``r = 1e6`` and an
    :class:`~crisis_lda.errors.Underdispersed` warning.
    """
    counts = _counts(sample).astype(float)
    n = counts.size
    m = counts.mean()
    v = counts.var()
    if v <= m:
        warnings.warn(f"sample variance {v:.4g} does not exceed mean {m:.4g}; "
                      "negative binomial degenerates to Poisson", Underdispersed, stacklevel=2)
        r = NEGBIN_R_CAP
        return FittedFrequencyModel(FrequencyFamily.NEGATIVE_BINOMIAL, {"r": float(r), "p": float(r / (r + m))},
                                    _negbin_profile(r, counts, m), n, underdispersed=True)

    theta = math.log(m * m / (v - m))
    ll = _negbin_profile(math.exp(theta), counts, m)
    for _ in range(MAX_ITER):
        r = math.exp(theta)
        d1 = special.digamma(counts + r).sum() - n * special.digamma(r) + n * math.log(r / (r + m))
        d2 = special.polygamma(1, counts + r).sum() - n * special.polygamma(1, r) + n * m / (r * (r + m))
        g = r * d1
        h = r * d1 + r * r * d2
        step = -g / h if h < 0 else math.copysign(1.0, g)
        while True:
            cand = theta + step
            if cand > math.log(NEGBIN_R_CAP):
                cand = math.log(NEGBIN_R_CAP)
            ll_new = _negbin_profile(math.exp(cand), counts, m)
            if ll_new >= ll - 1e-14 or abs(step) < 1e-14:
                break
            step /= 2
        delta = ll_new - ll
        theta, ll = cand, max(ll, ll_new)
        if abs(delta) < 1e-10 and abs(step) < 1e-8:
            break
        if theta >= math.log(NEGBIN_R_CAP):
            break
    else:
        raise NonConvergence("negative binomial profile likelihood did not converge")
    r = math.exp(theta)
    return FittedFrequencyModel(FrequencyFamily.NEGATIVE_BINOMIAL, {"r": float(r), "p": float(r / (r + m))}, ll, n)


def frequency_chi2_pvalue(model: FittedFrequencyModel, sample, n_bins: int = 5) -> float:
    """Pearson chi-square goodness-of-fit p-value.

    Bins are contiguous count ranges with roughly equal probability under the
    fitted model; NaN when there are no degrees of freedom left.
    """
    counts = _counts(sample)
    k = min(n_bins, counts.size)
    dof = k - 1 - model.n_params
    if dof < 1:
        return math.nan
    edges = [int(model.dist.ppf(i / k)) for i in range(1, k)]
    edges = sorted(set(edges))
    bounds = [-1] + edges + [np.inf]
    observed = np.array([((counts > lo) & (counts <= hi)).sum() for lo, hi in zip(bounds[:-1], bounds[1:])])
    cdf = np.array([model.dist.cdf(b) if np.isfinite(b) else 1.0 for b in bounds])
    expected = np.diff(cdf) * counts.size
    dof = len(observed) - 1 - model.n_params
    if dof < 1:
        return math.nan
    chi2 = float(((observed - expected) ** 2 / expected).sum())
    return float(stats.chi2.sf(chi2, dof))


# ---------------------------------------------------------------------------
# severity
# ---------------------------------------------------------------------------

class SeverityFamily(enum.Enum):
    GAMMA = "Gamma"
    EXPONENTIAL = "Exponential"
    GEV = "GEV"
    GENERALIZED_PARETO = "GeneralizedPareto"
    LOGNORMAL = "LogNormal"
    WEIBULL = "Weibull"

    @classmethod
    def parse(cls, token: str) -> "SeverityFamily":
        key = token.strip().lower().replace("_", "").replace("-", "").replace(" ", "")
        aliases = {"gpd": cls.GENERALIZED_PARETO, "genpareto": cls.GENERALIZED_PARETO,
                   "lognorm": cls.LOGNORMAL, "exp": cls.EXPONENTIAL}
        if key in aliases:
            return aliases[key]
        for f in cls:
            if f.value.lower() == key:
                return f
        raise ValueError(f"unknown severity family {token!r}")


_N_PARAMS = {SeverityFamily.EXPONENTIAL: 1, SeverityFamily.LOGNORMAL: 2, SeverityFamily.GAMMA: 2,
             SeverityFamily.WEIBULL: 2, SeverityFamily.GENERALIZED_PARETO: 2, SeverityFamily.GEV: 3}


@dataclass(frozen=True)
class FittedSeverityModel:
    """Fitted loss-severity distribution.

    Parameters are stored by name. For GEV and generalized Pareto ``shape``
    is the tail index with positive values meaning heavy tails (SciPy's
    ``genextreme`` uses the opposite sign). The generalized Pareto
    location is fixed at zero.
    """

    family: SeverityFamily
    params: Mapping[str, float]
    log_likelihood: float = math.nan
    ks_statistic: float = math.nan
    n_obs: int = 0
    n_dropped: int = 0
    start_log_likelihood: float = math.nan

    @property
    def dist(self):
        p = self.params
        f = self.family
        if f is SeverityFamily.EXPONENTIAL:
            return stats.expon(scale=p["scale"])
        if f is SeverityFamily.LOGNORMAL:
            return stats.lognorm(p["sigma"], scale=math.exp(p["mu"]))
        if f is SeverityFamily.GAMMA:
            return stats.gamma(p["shape"], scale=p["scale"])
        if f is SeverityFamily.WEIBULL:
            return stats.weibull_min(p["shape"], scale=p["scale"])
        if f is SeverityFamily.GEV:
            return stats.genextreme(-p["shape"], loc=p["loc"], scale=p["scale"])
        return stats.genpareto(p["shape"], scale=p["scale"])

    @property
    def n_params(self) -> int:
        return _N_PARAMS[self.family]

    @property
    def aic(self) -> float:
        return 2 * self.n_params - 2 * self.log_likelihood

    def pdf(self, x):
        return self.dist.pdf(x)

    def cdf(self, x):
        return self.dist.cdf(x)

    def ppf(self, q):
        return self.dist.ppf(q)

    def mean(self) -> float:
        return float(self.dist.mean())

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw losses; inverse-CDF except for the gamma family."""
        p = self.params
        f = self.family
        if f is SeverityFamily.GAMMA:
            return rng.gamma(p["shape"], p["scale"], size)
        u = rng.random(size)
        if f is SeverityFamily.EXPONENTIAL:
            return -p["scale"] * np.log1p(-u)
        if f is SeverityFamily.WEIBULL:
            return p["scale"] * (-np.log1p(-u)) ** (1.0 / p["shape"])
        if f is SeverityFamily.LOGNORMAL:
            return np.exp(p["mu"] + p["sigma"] * special.ndtri(u))
        xi = p["shape"]
        if f is SeverityFamily.GENERALIZED_PARETO:
            if abs(xi) < 1e-12:
                return -p["scale"] * np.log1p(-u)
            return p["scale"] * np.expm1(-xi * np.log1p(-u)) / xi
        e = -np.log(u)
        if abs(xi) < 1e-12:
            return p["loc"] - p["scale"] * np.log(e)
        return p["loc"] + p["scale"] * np.expm1(-xi * np.log(e)) / xi

    def to_dict(self) -> dict:
        return {"family": self.family.value, "params": dict(self.params),
                "log_likelihood": self.log_likelihood, "aic": self.aic,
                "ks_statistic": self.ks_statistic, "n_obs": self.n_obs, "n_dropped": self.n_dropped}

    @classmethod
    def from_dict(cls, d) -> "FittedSeverityModel":
        return cls(SeverityFamily(d["family"]), dict(d["params"]), d.get("log_likelihood", math.nan),
                   d.get("ks_statistic", math.nan), d.get("n_obs", 0), d.get("n_dropped", 0))


def severity_model(family, **params) -> FittedSeverityModel:
    """Model with given parameters and no fit attached."""
    family = family if isinstance(family, SeverityFamily) else SeverityFamily.parse(family)
    return FittedSeverityModel(family, {k: float(v) for k, v in params.items()})


def _gev_nll(theta, x):
    xi, mu, log_sigma = theta
    sigma = math.exp(log_sigma)
    z = (x - mu) / sigma
    if abs(xi) < 1e-9:
        return x.size * log_sigma + z.sum() + np.exp(-z).sum()
    t = 1.0 + xi * z
    if (t <= 0).any():
        return np.inf
    lt = np.log(t)
    return x.size * log_sigma + (1.0 + 1.0 / xi) * lt.sum() + np.exp(-lt / xi).sum()


def _gpd_nll(theta, x):
    xi, log_sigma = theta
    z = x / math.exp(log_sigma)
    if abs(xi) < 1e-9:
        return x.size * log_sigma + z.sum()
    t = 1.0 + xi * z
    if (t <= 0).any():
        return np.inf
    return x.size * log_sigma + (1.0 + 1.0 / xi) * np.log(t).sum()


def _gev_start(x):
    xs = np.sort(x)
    n = xs.size
    j = np.arange(n)
    b0 = xs.mean()
    b1 = (j / (n - 1) * xs).mean()
    b2 = (j * (j - 1) / ((n - 1) * (n - 2)) * xs).mean()
    c = (2 * b1 - b0) / (3 * b2 - b0) - math.log(2) / math.log(3)
    k = 7.8590 * c + 2.9554 * c * c
    if abs(k) < 1e-6:
        sigma = (2 * b1 - b0) / math.log(2)
        return np.array([0.0, b0 - EULER_GAMMA * sigma, math.log(sigma)])
    g = special.gamma(1 + k)
    sigma = (2 * b1 - b0) * k / (g * (1 - 2.0 ** (-k)))
    mu = b0 + sigma * (g - 1) / k
    return np.array([-k, mu, math.log(sigma)])


def _gpd_start(x):
    xs = np.sort(x)
    n = xs.size
    a0 = xs.mean()
    a1 = ((1 - (np.arange(1, n + 1) - 0.35) / n) * xs).mean()
    k = a0 / (a0 - 2 * a1) - 2
    sigma = 2 * a0 * a1 / (a0 - 2 * a1)
    return np.array([-k, math.log(sigma)])


def _nelder_mead(nll, start, x):
    """Restarted Nelder-Mead; restarts stop once a pass gains less than 1e-9."""
    best, f_best = np.asarray(start, dtype=float), nll(start, x)
    for _ in range(50):
        res = optimize.minimize(nll, best, args=(x,), method="Nelder-Mead",
                                options={"maxiter": MAX_ITER, "maxfev": 2 * MAX_ITER,
                                         "xatol": 1e-9, "fatol": 1e-9})
        gain = f_best - res.fun
        if res.fun < f_best:
            best, f_best = res.x, res.fun
        if gain < 1e-9:
            return best, f_best
    raise NonConvergence("Nelder-Mead did not converge")


def _fit_scaled(family: SeverityFamily, x: np.ndarray) -> tuple[dict, float]:
    """MLE on data of order one; returns params and the start log-likelihood."""
    if family is SeverityFamily.EXPONENTIAL:
        scale = x.mean()
        return {"scale": scale}, math.nan
    if np.ptp(x) == 0:
        raise NonConvergence(f"{family.value} fit is degenerate for a constant sample")
    logx = np.log(x)
    if family is SeverityFamily.LOGNORMAL:
        return {"mu": logx.mean(), "sigma": logx.std()}, math.nan

    if family is SeverityFamily.GAMMA:
        s = math.log(x.mean()) - logx.mean()
        k = (3 - s + math.sqrt((s - 3) ** 2 + 24 * s)) / (12 * s)
        start_ll = float(stats.gamma.logpdf(x, k, scale=x.mean() / k).sum())
        for _ in range(MAX_ITER):
            f = math.log(k) - special.digamma(k) - s
            fp = 1 / k - special.polygamma(1, k)
            k_new = k - f / fp
            if k_new <= 0:
                k_new = k / 2
            if abs(k_new - k) <= 1e-13 * k:
                k = k_new
                break
            k = k_new
        else:
            raise NonConvergence("gamma shape iteration did not converge")
        return {"shape": k, "scale": x.mean() / k}, start_ll

    if family is SeverityFamily.WEIBULL:
        mean_log = logx.mean()
        shape = 1.2825 / logx.std()
        y = logx - logx.max()

        def score(c):
            w = np.exp(c * y)
            sw = w.sum()
            a = (w * logx).sum() / sw
            b = (w * logx * logx).sum() / sw
            return a - 1 / c - mean_log, (b - a * a) + 1 / (c * c)

        start_ll = float(stats.weibull_min.logpdf(x, shape, scale=np.mean(x ** shape) ** (1 / shape)).sum())
        for _ in range(MAX_ITER):
            g, gp = score(shape)
            new = shape - g / gp
            if new <= 0:
                new = shape / 2
            if abs(new - shape) <= 1e-13 * shape:
                shape = new
                break
            shape = new
        else:
            raise NonConvergence("Weibull shape iteration did not converge")
        scale = float(np.exp(logx.max()) * np.mean(np.exp(shape * y)) ** (1 / shape))
        return {"shape": shape, "scale": scale}, start_ll

    if family is SeverityFamily.GEV:
        start = _gev_start(x)
        if not np.isfinite(_gev_nll(start, x)):
            sigma = x.std() * math.sqrt(6) / math.pi
            start = np.array([0.1, x.mean() - EULER_GAMMA * sigma, math.log(sigma)])
            if not np.isfinite(_gev_nll(start, x)):
                raise SupportViolation("no feasible GEV starting point")
        theta, nll = _nelder_mead(_gev_nll, start, x)
        return ({"shape": float(theta[0]), "loc": float(theta[1]), "scale": math.exp(theta[2])},
                -float(_gev_nll(start, x)))

    start = _gpd_start(x)
    if not np.isfinite(_gpd_nll(start, x)):
        start = np.array([0.1, math.log(x.std())])
        if not np.isfinite(_gpd_nll(start, x)):
            raise SupportViolation("no feasible generalized Pareto starting point")
    theta, nll = _nelder_mead(_gpd_nll, start, x)
    return {"shape": float(theta[0]), "scale": math.exp(theta[1])}, -float(_gpd_nll(start, x))


def _rescale(family, params, s):
    p = dict(params)
    if family is SeverityFamily.LOGNORMAL:
        p["mu"] += math.log(s)
    else:
        p["scale"] *= s
        if "loc" in p:
            p["loc"] *= s
    return {k: float(v) for k, v in p.items()}


def prepare_losses(losses) -> tuple[np.ndarray, int]:
    """Drop near-zero losses, returning the kept values and how many were dropped."""
    x = np.asarray(losses, dtype=float).ravel()
    if (x < 0).any() or not np.isfinite(x).all():
        raise ValueError("losses must be finite and nonnegative")
    keep = x >= ZERO_LOSS_FLOOR
    return x[keep], int((~keep).sum())


def fit_severity(losses, family) -> FittedSeverityModel:
    """Maximum likelihood fit of one severity family.

    Exponential and log-normal use closed forms, gamma a Newton iteration on
    the digamma equation, Weibull a Newton iteration on the profile score in
    the shape, GEV and generalized Pareto a Nelder-Mead search started from
    probability-weighted-moment estimates. Data are rescaled by their median
    before fitting so that USD-sized losses are handled as well as fractions.
    """
    family = family if isinstance(family, SeverityFamily) else SeverityFamily.parse(family)
    x, dropped = prepare_losses(losses)
    if x.size < MIN_SEVERITY_OBS:
        raise EmptySample(f"need at least {MIN_SEVERITY_OBS} positive losses, got {x.size}")
    s = float(np.median(x))
    params, start_ll = _fit_scaled(family, x / s)
    shift = x.size * math.log(s)
    model = FittedSeverityModel(family, _rescale(family, params, s))
    ll = float(model.dist.logpdf(x).sum())
    if not np.isfinite(ll):
        raise SupportViolation(f"{family.value} fit leaves observations outside the support")
    ks = float(stats.kstest(x, model.dist.cdf).statistic)
    return FittedSeverityModel(family, model.params, ll, ks, int(x.size), dropped,
                               start_ll - shift if np.isfinite(start_ll) else math.nan)


@dataclass
class SeverityFits:
    """Results of fitting every family to one sample."""

    fits: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)

    def ranking(self) -> list[FittedSeverityModel]:
        return sorted(self.fits.values(), key=lambda m: m.aic)


def fit_all_severity(losses, families: Iterable = tuple(SeverityFamily)) -> SeverityFits:
    out = SeverityFits()
    for fam in families:
        fam = fam if isinstance(fam, SeverityFamily) else SeverityFamily.parse(fam)
        try:
            out.fits[fam] = fit_severity(losses, fam)
        except (NonConvergence, SupportViolation) as exc:
            out.failures[fam] = str(exc)
    return out


def select_severity_model(fits, policy: str = "benchmark") -> FittedSeverityModel:
    """Pick the severity model used for aggregation.

    ``"benchmark"`` returns the Weibull fit when available and falls back to
    the lowest AIC otherwise; ``"aic"`` always returns the lowest AIC.
    """
    if isinstance(fits, SeverityFits):
        fits = fits.fits
    if not fits:
        raise EmptySample("no successful severity fit to select from")
    if policy not in ("benchmark", "aic"):
        raise ValueError(f"unknown selection policy {policy!r}")
    if policy == "benchmark" and SeverityFamily.WEIBULL in fits:
        return fits[SeverityFamily.WEIBULL]
    return min(fits.values(), key=lambda m: m.aic)


# ---------------------------------------------------------------------------
# mean excess
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeanExcessCurve:
    thresholds: np.ndarray
    mean_excess: np.ndarray
    n_exceed: np.ndarray
    std_error: np.ndarray

    def __len__(self):
        return self.thresholds.size


def mean_excess(losses, thresholds=None, min_exceedances: int = 5) -> MeanExcessCurve:
    """Sample mean excess over each threshold.

    For threshold ``u`` the value is the average of ``x - u`` over the
    observations with ``x > u``. Thresholds with fewer than
    ``min_exceedances`` exceedances are dropped. By default every distinct
    sample value is used as a threshold.
    """
    x = np.sort(np.asarray(losses, dtype=float).ravel())
    if x.size == 0:
        raise NoExceedances("empty loss sample")
    if thresholds is None:
        u = np.unique(x)
    else:
        u = np.asarray(thresholds, dtype=float).ravel()
        if u.size > 1 and (np.diff(u) <= 0).any():
            raise ValueError("thresholds must be strictly increasing")
    # suffix sums give every threshold in one pass
    suffix = np.concatenate([np.cumsum(x[::-1])[::-1], [0.0]])
    suffix_sq = np.concatenate([np.cumsum((x * x)[::-1])[::-1], [0.0]])
    first = np.searchsorted(x, u, side="right")
    n_exc = x.size - first
    keep = n_exc >= max(min_exceedances, 1)
    if not keep.any():
        raise NoExceedances("no threshold has enough exceedances")
    u, first, n_exc = u[keep], first[keep], n_exc[keep]
    s1 = suffix[first]
    s2 = suffix_sq[first]
    me = s1 / n_exc - u
    var = np.maximum(s2 / n_exc - (s1 / n_exc) ** 2, 0.0)
    se = np.sqrt(var * n_exc / np.maximum(n_exc - 1, 1) / n_exc)
    return MeanExcessCurve(u, me, n_exc, se)
