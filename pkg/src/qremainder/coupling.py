"""Coupling of X with a stopping digit count N.

Conditionally on N = n the digits X_1..X_n are independent of the remainder
T^n(X), which is exactly uniform. The construction is driven by the ladder of
cell infima of the density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .density_models import DEFAULT_BUDGET, check_budget
from .digits import cell_index_array, digits_of
from .errors import DepthError, RejectionBudgetError, UnsupportedModelError, ZeroDensityError
from .streams import make_rng

OVERFLOW = -1
MAX_PROPOSALS = 10**6


def default_depth(q):
    if q == 2:
        return 12
    if q == 10:
        return 4
    return max(1, int(math.floor(math.log(1e4) / math.log(q))))


@dataclass(frozen=True)
class InfimumLadder:
    """Cell infima of ``model`` and their increments up to ``depth``.

    ``infima[n][k]`` is the infimum over the 0-based cell k at depth n and
    ``levels[n][k]`` the increment over its parent cell; ``cumulative[n]`` is
    P(N <= n).
    """

    model: object
    q: int
    depth: int
    infima: tuple
    levels: tuple
    cumulative: np.ndarray

    def _check(self, n):
        if not 0 <= n <= self.depth:
            raise DepthError(f"depth {n} outside 0..{self.depth} of this ladder")

    @property
    def residual_mass(self):
        return 1.0 - float(self.cumulative[-1])


def build_ladder(model, q, depth, budget=DEFAULT_BUDGET):
    if depth < 0:
        raise DepthError("depth must be nonnegative")
    check_budget(q**depth, budget)
    infima = [np.asarray(model.cell_infima(q, 0), dtype=float)]
    levels = [infima[0].copy()]
    for n in range(1, depth + 1):
        parent = np.repeat(infima[-1], q)
        # infima over nested cells never decrease; also absorbs endpoint rounding
        inf_n = np.maximum(np.asarray(model.cell_infima(q, n), dtype=float), parent)
        infima.append(inf_n)
        levels.append(inf_n - parent)
    cumulative = np.array([math.fsum(v) / q**n for n, v in enumerate(infima)])
    cumulative = np.minimum(cumulative, 1.0)
    for arr in infima + levels:
        arr.setflags(write=False)
    cumulative.setflags(write=False)
    return InfimumLadder(model, q, depth, tuple(infima), tuple(levels), cumulative)


def prob_N_le(ladder, n):
    """P(N <= n) = q^-n times the sum of depth-n cell infima."""
    ladder._check(n)
    return float(ladder.cumulative[n])


def prob_N_gt(ladder, n):
    return 1.0 - prob_N_le(ladder, n)


def cond_prob_N_le(ladder, x, n):
    """P(N <= n | X = x): the ladder increments along the digit path of x over f(x)."""
    ladder._check(n)
    digits = digits_of(x, ladder.q, n)
    fx = float(ladder.model._pdf(float(x)))
    if not fx > 0:
        raise ZeroDensityError(f"f(x) = {fx} at x = {float(x)}")
    if math.isinf(fx):
        return 0.0
    path = digits.prefix_indices()
    total = math.fsum(float(ladder.levels[k][path[k]]) for k in range(n + 1))
    return min(total / fx, 1.0)


def cond_prob_N_le_array(ladder, x, n):
    """Vectorized P(N <= n | X = x) for floats x with f(x) > 0."""
    ladder._check(n)
    x = np.asarray(x, dtype=float)
    fx = np.asarray(ladder.model._pdf(x), dtype=float)
    if np.any(fx <= 0):
        raise ZeroDensityError("f(x) = 0 at some query point")
    total = np.zeros(x.shape)
    for k in range(n + 1):
        idx = cell_index_array(x, ladder.q, k).reshape(x.shape)
        total = total + ladder.levels[k][idx]
    with np.errstate(invalid="ignore"):
        out = np.where(np.isinf(fx), 0.0, total / fx)
    return np.minimum(out, 1.0)


@dataclass(frozen=True)
class PiecewiseLinear:
    knots_x: np.ndarray
    knots_y: np.ndarray

    def __call__(self, x):
        return np.interp(x, self.knots_x, self.knots_y)


def cond_tail_upper_envelope(ladder, n):
    """Upper envelope of x -> P(N > n | X = x) through its left-endpoint values.

    Valid when the tail is convex decreasing on every depth-n cell; the
    model must declare that shape.
    """
    ladder._check(n)
    model = ladder.model
    if not model.convex_decreasing:
        raise UnsupportedModelError(f"{model.spec} does not declare a convex decreasing tail")
    size = ladder.q**n
    left = np.arange(size) / size
    with np.errstate(divide="ignore", invalid="ignore"):
        fa = np.asarray(model._pdf(left), dtype=float)
        ratio = np.where(np.isinf(fa), 0.0, ladder.infima[n] / fa)
    ys = np.clip(1.0 - ratio, 0.0, 1.0)
    return PiecewiseLinear(np.append(left, 1.0), np.append(ys, 0.0))


@dataclass(frozen=True)
class CouplingSample:
    """One draw (N, K, U) and its output X = (K + U) q^-N.

    ``n`` is ``OVERFLOW`` (and ``k``, ``u`` undefined) when N exceeded the
    ladder depth and X came from the residual density.
    """

    n: int
    k: int
    u: float
    x: float

    @property
    def overflow(self):
        return self.n == OVERFLOW


@dataclass(frozen=True)
class CoupledDraws:
    n: np.ndarray
    k: np.ndarray
    u: np.ndarray
    x: np.ndarray

    def __len__(self):
        return self.x.size

    def __getitem__(self, i):
        return CouplingSample(int(self.n[i]), int(self.k[i]), float(self.u[i]), float(self.x[i]))


def sample_coupled_many(ladder, size, rng, max_proposals=MAX_PROPOSALS):
    """Draw ``size`` outputs of the coupling sampler.

    Uniform consumption: one (size, 3) block for (N, K, U), then the residual
    branch draws proposal/acceptance pairs in batches.
    """
    rng = make_rng(rng)
    if ladder.residual_mass >= 1.0:
        raise UnsupportedModelError("P(N <= depth) = 0: the ladder carries no mass")
    q = ladder.q
    u = rng.random((size, 3))
    n = np.searchsorted(ladder.cumulative, u[:, 0], side="right")
    k = np.full(size, -1, dtype=np.int64)
    x = np.empty(size)
    for level in np.unique(n):
        if level > ladder.depth:
            continue
        sel = n == level
        weights = np.cumsum(ladder.levels[level])
        draw = u[sel, 1] * weights[-1]
        kk = np.minimum(np.searchsorted(weights, draw, side="right"), weights.size - 1)
        k[sel] = kk
        x[sel] = (kk + u[sel, 2]) / q**level
    over = n > ladder.depth
    n = np.where(over, OVERFLOW, n).astype(np.int64)
    uu = np.where(over, np.nan, u[:, 2])
    if over.any():
        x[over] = _sample_residual(ladder, int(over.sum()), rng, max_proposals)
    return CoupledDraws(n, k, uu, x)


def sample_coupled(ladder, rng, max_proposals=MAX_PROPOSALS):
    """One draw of the coupling sampler."""
    return sample_coupled_many(ladder, 1, rng, max_proposals)[0]


def _sample_residual(ladder, count, rng, max_proposals):
    """Rejection sampling from f minus the depth-D ladder, with proposals from f."""
    model = ladder.model
    depth = ladder.depth
    accept_rate = max(ladder.residual_mass, 1e-6)
    out = []
    used = 0
    need = count
    while need > 0:
        batch = int(min(max(1024, 2 * need / accept_rate), max_proposals - used))
        if batch <= 0:
            raise RejectionBudgetError(
                f"residual sampling used {used} proposals; increase the ladder depth"
            )
        prop = model.sample(batch, rng)
        acc_u = rng.random(batch)
        used += batch
        fx = np.asarray(model._pdf(prop), dtype=float)
        idx = cell_index_array(prop, ladder.q, depth)
        with np.errstate(divide="ignore", invalid="ignore"):
            keep_prob = np.where(np.isinf(fx), 1.0, 1.0 - ladder.infima[depth][idx] / fx)
        keep = acc_u < keep_prob
        got = prop[keep][:need]
        out.append(got)
        need -= got.size
    return np.concatenate(out)
