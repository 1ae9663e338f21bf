"""Aggregate loss distribution: Monte Carlo compounding and a Panjer oracle.

The aggregate loss over one reference period is the sum of ``N`` severities,
``N`` drawn from the frequency model. :func:`simulate_aggregate` samples it
directly; :func:`panjer_compound` computes the same distribution on a lattice
and serves as an independent check.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import QuantileMissing, StepTooCoarse
from .fitting import FittedFrequencyModel, FittedSeverityModel, FrequencyFamily

DEFAULT_SIMS = 500_000
DEFAULT_PERCENTILES = (0.5, 0.99, 0.999)
BLOCK_SIZE = 8192
GENERATOR_VERSION = f"numpy-{np.__version__}/Philox4x64/SeedSequence(seed,spawn_key=(block,))/block={BLOCK_SIZE}"


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


@dataclass(frozen=True)
class RiskSummary:
    percentiles: Mapping[float, float]
    mean: float
    std: float
    n: int
    method: str = "nearest-rank"

    def percentile(self, q: float) -> float:
        for key, value in self.percentiles.items():
            if math.isclose(key, q, rel_tol=0, abs_tol=1e-12):
                return value
        raise QuantileMissing(f"percentile {q} was not computed")

    @property
    def median(self) -> float:
        return self.percentile(0.5)

    @property
    def right_skewed(self) -> bool:
        """Mean at or above the median; a diagnostic only."""
        return self.mean >= self.median

    def to_dict(self) -> dict:
        return {
            "percentiles": {repr(float(q)): float(v) for q, v in self.percentiles.items()},
            "mean": float(self.mean),
            "std": float(self.std),
            "n": int(self.n),
            "method": self.method,
        }

    @classmethod
    def from_dict(cls, d) -> "RiskSummary":
        return cls({float(q): float(v) for q, v in d["percentiles"].items()},
                   float(d["mean"]), float(d["std"]), int(d["n"]), d.get("method", "nearest-rank"))


def risk_summary(samples, percentiles: Sequence[float] = DEFAULT_PERCENTILES,
                 method: str = "nearest-rank") -> RiskSummary:
    """Empirical percentiles, mean and population standard deviation.

    ``"nearest-rank"`` returns the ``ceil(q n)``-th smallest sample;
    ``"interpolated"`` uses linear interpolation between order statistics.
    """
    if isinstance(samples, AggregateLossDistribution):
        samples = samples.samples
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("risk_summary needs at least one sample")
    out = {}
    for q in percentiles:
        if not 0 < q <= 1:
            raise ValueError(f"percentile {q} outside (0, 1]")
        if method == "nearest-rank":
            out[float(q)] = float(x[max(math.ceil(q * n - 1e-9), 1) - 1])
        elif method == "interpolated":
            out[float(q)] = float(np.quantile(x, q))
        else:
            raise ValueError(f"unknown quantile method {method!r}")
    return RiskSummary(out, float(x.mean()), float(x.std()), n, method)


@dataclass(frozen=True, eq=False)
class AggregateLossDistribution:
    samples: np.ndarray
    seed: int
    n_sims: int
    generator: str = GENERATOR_VERSION

    def summary(self, percentiles: Sequence[float] = DEFAULT_PERCENTILES,
                method: str = "nearest-rank") -> RiskSummary:
        return risk_summary(self.samples, percentiles, method)

    def ecdf(self, x) -> np.ndarray:
        s = np.sort(self.samples)
        return np.searchsorted(s, x, side="right") / s.size


def _simulate_block(freq, sev, seed, block, size):
    rng = _block_rng(seed, block)
    counts = freq.sample(rng, size)
    total = int(counts.sum())
    if total == 0:
        return np.zeros(size)
    z = sev.sample(rng, total)
    return np.bincount(np.repeat(np.arange(size), counts), weights=z, minlength=size)


def simulate_aggregate(freq: FittedFrequencyModel, sev: FittedSeverityModel,
                       n_sims: int = DEFAULT_SIMS, seed: int = 42, workers: int = 1) -> AggregateLossDistribution:
    """Monte Carlo aggregate losses: draw a count, draw that many severities, sum.

    Replications are split into fixed blocks of ``BLOCK_SIZE``; each block
    has its own counter-based Philox stream keyed by ``(seed, block)``, so
    results do not depend on ``workers``.
    """
    if n_sims < 1:
        raise ValueError("n_sims must be >= 1")
    n_blocks = -(-n_sims // BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, n_sims - b * BLOCK_SIZE) for b in range(n_blocks)]
    if workers <= 1:
        parts = [_simulate_block(freq, sev, seed, b, sizes[b]) for b in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _simulate_block(freq, sev, seed, b, sizes[b]), range(n_blocks)))
    samples = np.concatenate(parts)
    samples.setflags(write=False)
    return AggregateLossDistribution(samples, int(seed), int(n_sims))


# ---------------------------------------------------------------------------
# Panjer recursion
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DiscretizedCompound:
    step: float
    pmf: np.ndarray

    @property
    def support(self) -> np.ndarray:
        return self.step * np.arange(self.pmf.size)

    def cdf(self, x) -> np.ndarray:
        idx = np.floor(np.asarray(x, dtype=float) / self.step + 1e-9).astype(np.int64)
        cum = np.cumsum(self.pmf)
        return np.where(idx < 0, 0.0, cum[np.clip(idx, 0, cum.size - 1)])

    def mean(self) -> float:
        return float((self.support * self.pmf).sum())


def discretize_severity(sev: FittedSeverityModel, step: float, tail: float = 1e-12,
                        max_points: int = 2_000_000) -> np.ndarray:
    """Rounding discretisation on ``{0, step, 2 step, ...}``.

    Mass of ``((k - 1/2) step, (k + 1/2) step]`` goes to ``k step``. The
    lattice stops where the survival function drops below ``tail``.
    """
    upper = float(sev.ppf(1 - tail))
    k = int(min(math.ceil(upper / step) + 2, max_points))
    edges = (np.arange(k) + 0.5) * step
    cdf = sev.cdf(edges)
    return np.diff(np.concatenate([[0.0], cdf]))


def panjer_compound(freq: FittedFrequencyModel, severity, step: float | None = None,
                    max_mass: float = 1 - 1e-9, max_points: int = 4_000_000) -> DiscretizedCompound:
    """Compound distribution by Panjer recursion.

    ``severity`` is either a fitted continuous model, discretised here by
    rounding at ``step``, or an array of lattice probabilities already on
    ``{0, step, ...}``. The recursion runs until the accumulated mass reaches
    ``max_mass``.
    """
    if freq.family not in (FrequencyFamily.POISSON, FrequencyFamily.NEGATIVE_BINOMIAL):
        raise ValueError("Panjer recursion needs a Poisson or negative binomial frequency")
    if isinstance(severity, FittedSeverityModel):
        if step is None:
            raise ValueError("a lattice step is required for a continuous severity")
        f = discretize_severity(severity, step)
        true_mean = severity.mean()
        if np.isfinite(true_mean) and true_mean > 0:
            disc_mean = float((np.arange(f.size) * f).sum() * step)
            if abs(disc_mean - true_mean) > 1e-3 * true_mean:
                raise StepTooCoarse(f"discretised severity mean {disc_mean:.6g} is off "
                                    f"the model mean {true_mean:.6g} by more than 0.1%")
    else:
        f = np.asarray(severity, dtype=float)
        step = 1.0 if step is None else step
    if (f < 0).any():
        raise ValueError("severity probabilities must be nonnegative")

    a, b = freq.panjer_ab()
    f0 = f[0]
    m = f.size
    jf = np.arange(m) * f
    g = np.zeros(min(max_points, 1024))
    g[0] = freq.pgf(f0)
    total = g[0]
    denom = 1.0 - a * f0
    k = 0
    while total < max_mass:
        k += 1
        if k >= max_points:
            raise StepTooCoarse(f"Panjer recursion exceeded {max_points} lattice points")
        if k >= g.size:
            g = np.concatenate([g, np.zeros(g.size)])
        lo = max(0, k - m + 1)
        tail = g[lo:k][::-1]  # g[k-1], ..., g[lo]
        j = slice(1, k - lo + 1)
        s = a * np.dot(f[j], tail) + b / k * np.dot(jf[j], tail)
        g[k] = s / denom
        total += g[k]
    return DiscretizedCompound(float(step), g[:k + 1].copy())


def kolmogorov_distance(dist: AggregateLossDistribution, compound: DiscretizedCompound) -> float:
    """Sup distance between the Monte Carlo ECDF and the lattice CDF.

    Lattice point ``k`` carries the mass rounded into
    ``((k - 1/2) step, (k + 1/2) step]``, so the ECDF is read at the
    cell's upper edge.
    """
    edges = (np.arange(compound.pmf.size) + 0.5) * compound.step
    return float(np.max(np.abs(dist.ecdf(edges) - np.cumsum(compound.pmf))))


def default_panjer_step(max_loss: float) -> float:
    return max_loss / 4096


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def write_lda_json(dist: AggregateLossDistribution, path, percentiles=DEFAULT_PERCENTILES,
                   method: str = "nearest-rank", sidecar: bool = False, extra: Mapping | None = None) -> dict:
    """Write the summary to ``path``; optionally the samples to ``<path>.bin``
    as little-endian float64."""
    path = Path(path)
    doc = {
        "summary": dist.summary(percentiles, method).to_dict(),
        "seed": dist.seed,
        "n_sims": dist.n_sims,
        "generator": dist.generator,
    }
    if extra:
        doc.update(extra)
    if sidecar:
        bin_path = path.with_suffix(path.suffix + ".bin")
        np.asarray(dist.samples, dtype="<f8").tofile(bin_path)
        doc["samples_file"] = bin_path.name
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return doc


def read_lda_json(path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    doc["summary"] = RiskSummary.from_dict(doc["summary"])
    return doc


def read_samples(path) -> np.ndarray:
    return np.fromfile(path, dtype="<f8")
