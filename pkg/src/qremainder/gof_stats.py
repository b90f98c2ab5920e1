"""Chi-square uniformity tests on digit blocks and rejection-rate experiments."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .density_models import UnitDensity
from .digits import FixedPointReal, digit_codes, digits_of
from .errors import DomainError
from .remainder import benford_digit_gap
from .special import chi2_sf
from .streams import default_threads

FULL_SAMPLE_SIZE = 1000
FULL_REPLICATIONS = 10000
DESK_REPLICATIONS = 2000
# replications per RNG substream; fixed so results do not depend on thread count
BLOCK = 50
# caps the draws held in memory by one block
BLOCK_DRAWS = 2_000_000


def chi_square_counts(counts):
    """Pearson statistic against equal cell probabilities, and its p-value.

    ``counts`` may be 1-D or a stack of count rows (last axis = categories).
    """
    counts = np.asarray(counts, dtype=float)
    cats = counts.shape[-1]
    total = counts.sum(axis=-1, keepdims=True)
    if np.any(total == 0):
        raise DomainError("empty sample")
    expected = total / cats
    stat = np.sum((counts - expected) ** 2 / expected, axis=-1)
    p = chi2_sf(stat, cats - 1)
    if np.ndim(stat) == 0:
        return float(stat), float(p)
    return stat, p


def _block_codes(samples, q, n, k):
    if len(samples) == 0:
        raise DomainError("empty sample")
    first = samples[0]
    if isinstance(first, FixedPointReal):
        codes = []
        for s in samples:
            d = digits_of(s, q, n + k - 1).digits[n - 1 :]
            code = 0
            for v in d:
                code = code * q + v
            codes.append(code)
        return np.asarray(codes, dtype=np.int64)
    return digit_codes(np.asarray(samples, dtype=float), q, k, start=n)


def chi_square_uniform_digits(samples, q, n, k):
    """Chi-square test that the block (X_n, ..., X_{n+k-1}) is uniform over q**k values.

    Digits are extracted exactly from each sample.

    Returns
    -------
    statistic, p_value : float
    """
    if n < 1 or k < 1:
        raise DomainError("need n >= 1 and k >= 1")
    cats = q**k
    codes = _block_codes(samples, q, n, k)
    if codes.size / cats < 5:
        warnings.warn(f"expected count {codes.size / cats:.2f} per category is below 5", stacklevel=2)
    return chi_square_counts(np.bincount(codes, minlength=cats))


@dataclass(frozen=True)
class GofExperiment:
    """Repeated chi-square tests of digit-block uniformity for samples from ``model``."""

    model: UnitDensity
    q: int = 2
    n: int = 1
    k: int = 1
    sample_size: int = FULL_SAMPLE_SIZE
    replications: int = DESK_REPLICATIONS
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.q**self.k < 2:
            raise DomainError("need at least two categories")
        if self.n < 1 or self.k < 1:
            raise DomainError("need n >= 1 and k >= 1")
        if self.sample_size < 1 or self.replications < 1:
            raise DomainError("sample size and replications must be positive")
        if not 0 < self.alpha < 1:
            raise DomainError("significance level must lie in (0, 1)")
        if self.sample_size / self.q**self.k < 5:
            warnings.warn("expected count per category is below 5", stacklevel=2)


@dataclass(frozen=True)
class GofResult:
    rejection_rate: float
    rejections: int
    replications: int
    stat_mean: float
    stat_sd: float
    p_mean: float

    @property
    def standard_error(self):
        r = self.rejection_rate
        return math.sqrt(r * (1.0 - r) / self.replications)

    def to_dict(self):
        d = asdict(self)
        d["standard_error"] = self.standard_error
        return d


@dataclass
class _Tally:
    rejections: int = 0
    count: int = 0
    stats: list = field(default_factory=list)
    pvals: list = field(default_factory=list)

    def result(self):
        stats = np.concatenate(self.stats)
        pvals = np.concatenate(self.pvals)
        return GofResult(
            rejection_rate=self.rejections / self.count,
            rejections=self.rejections,
            replications=self.count,
            stat_mean=float(np.mean(stats)),
            stat_sd=float(np.std(stats)),
            p_mean=float(np.mean(pvals)),
        )


def _run_block(model, q, cells, sample_size, reps, alpha, seed_seq):
    rng = np.random.default_rng(seed_seq)
    x = np.asarray(model.sample((reps, sample_size), rng), dtype=float).ravel()
    rows = np.repeat(np.arange(reps), sample_size)
    out = {}
    for n, k in cells:
        cats = q**k
        codes = digit_codes(x, q, k, start=n)
        counts = np.bincount(rows * cats + codes, minlength=reps * cats).reshape(reps, cats)
        stat, p = chi_square_counts(counts)
        out[(n, k)] = (int(np.sum(p < alpha)), stat, p)
    return out


def rejection_table(model, q, cells, sample_size=FULL_SAMPLE_SIZE, replications=DESK_REPLICATIONS,
                    alpha=0.05, seed=0, threads=None):
    """Rejection rates for several (n, k) digit blocks tested on shared samples.

    Every replication draws one sample and tests each block in ``cells``.
    Returns a dict mapping ``(n, k)`` to ``GofResult``.
    """
    cells = [(int(n), int(k)) for n, k in cells]
    per = max(1, min(BLOCK, BLOCK_DRAWS // sample_size))
    nblocks = -(-replications // per)
    sizes = [min(per, replications - i * per) for i in range(nblocks)]
    children = np.random.SeedSequence(seed).spawn(nblocks)
    threads = threads or default_threads()

    def job(i):
        return _run_block(model, q, cells, sample_size, sizes[i], alpha, children[i])

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(job, range(nblocks)))
    else:
        parts = [job(i) for i in range(nblocks)]
    tallies = {c: _Tally() for c in cells}
    for part, size in zip(parts, sizes):
        for c, (rej, stat, p) in part.items():
            t = tallies[c]
            t.rejections += rej
            t.count += size
            t.stats.append(stat)
            t.pvals.append(p)
    return {c: t.result() for c, t in tallies.items()}


def rejection_rate(exp, threads=None):
    """Fraction of replications whose chi-square test rejects at level ``exp.alpha``."""
    table = rejection_table(exp.model, exp.q, [(exp.n, exp.k)], exp.sample_size,
                            exp.replications, exp.alpha, exp.seed, threads)
    return table[(exp.n, exp.k)]


def digit_gap_curve(q, n_max):
    """P(X_n = 0) - P(X_n = q - 1) under the Benford law for n = 1..n_max."""
    return np.array([benford_digit_gap(q, n) for n in range(1, n_max + 1)])
