"""Densities on the unit interval and unit cube.

Every model is immutable. Vectorized internals (``_pdf``, ``_cdf``, ``_deriv``)
accept the closed interval and skip validation; the public ``pdf``/``cdf``
entry points check their domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import BudgetError, DomainError, UnsupportedModelError

MONOTONICITIES = ("increasing", "decreasing", "piecewise-constant", "general")

# returned by PowerDensity.pdf(0) when the density blows up at the origin
PDF_SENTINEL = 1e300

# grid points per cell for certified infima of general densities
CERT_GRID = 20001

DEFAULT_BUDGET = 2**24


def _num(v):
    """Shortest round-tripping text for a float, without a trailing ".0"."""
    text = repr(float(v))
    return text[:-2] if text.endswith(".0") else text


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def cell_edges(q, n, cells=None):
    """Left and right endpoints of the base-``q`` cells of depth ``n``.

    ``cells`` holds 0-based cell indices; all ``q**n`` cells when omitted.
    """
    size = q**n
    if cells is None:
        cells = np.arange(size)
    cells = np.asarray(cells, dtype=np.int64)
    if cells.size and (cells.min() < 0 or cells.max() >= size):
        raise DomainError(f"cell index out of range for q={q}, n={n}")
    return cells / size, (cells + 1) / size


def check_budget(terms, budget=DEFAULT_BUDGET):
    if terms > budget:
        raise BudgetError(
            f"{terms} terms exceeds the evaluation budget of {budget}; "
            "use the coupling bound or lower the depth"
        )


class UnitDensity:
    """A probability density on [0, 1) with smoothness metadata.

    Subclasses implement ``_pdf`` and ``_cdf``; the remaining hooks have
    defaults that either use the metadata or refuse.
    """

    monotonicity = "general"
    deriv_sup = None
    deriv2_sup = None
    deriv_l1 = None
    pdf_sup = None
    # |f'| monotone on (0, 1): per-cell derivative sups come from the endpoints
    abs_deriv_monotone = False
    # P(N > n | X = x) convex decreasing on every cell (tail envelopes)
    convex_decreasing = False
    # pdf behaves like x**(e - 1) at 0 when set (integrable singularity)
    singularity_exponent = None

    def _pdf(self, x):
        raise NotImplementedError

    def _cdf(self, x):
        raise NotImplementedError

    def _deriv(self, x):
        raise UnsupportedModelError(f"{self.spec} exposes no derivative")

    @property
    def spec(self):
        return type(self).__name__

    # -- public evaluation -------------------------------------------------

    def pdf(self, x):
        arr, scalar = _as_array(x)
        if np.any(~((arr >= 0) & (arr < 1))):
            raise DomainError("pdf is defined on [0, 1)")
        out = np.asarray(self._pdf(arr), dtype=float)
        return float(out) if scalar else out

    def cdf(self, x):
        arr, scalar = _as_array(x)
        if np.any(~((arr >= 0) & (arr <= 1))):
            raise DomainError("cdf is defined on [0, 1]")
        out = np.clip(np.asarray(self._cdf(arr), dtype=float), 0.0, 1.0)
        out = np.where(arr >= 1, 1.0, np.where(arr <= 0, 0.0, out))
        return float(out) if scalar else out

    def deriv(self, x):
        arr, scalar = _as_array(x)
        if np.any(~((arr >= 0) & (arr <= 1))):
            raise DomainError("deriv is defined on [0, 1]")
        out = np.asarray(self._deriv(arr), dtype=float)
        return float(out) if scalar else out

    def breakpoints(self, q, n):
        """Points of (0, 1) where the depth-``n`` remainder density may jump or kink."""
        return np.empty(0)

    # -- cell statistics ---------------------------------------------------

    def cell_infima(self, q, n, cells=None):
        """Infimum of the pdf over each half-open cell [(k)q^-n, (k+1)q^-n).

        Exact for monotone and piecewise-constant models; a certified lower
        bound (grid minimum minus a Lipschitz correction) otherwise.
        """
        a, b = cell_edges(q, n, cells)
        if self.monotonicity == "decreasing":
            # open right endpoint: infimum is the left limit at b
            return np.asarray(self._pdf(b), dtype=float)
        if self.monotonicity == "increasing":
            return np.asarray(self._pdf(a), dtype=float)
        return self._grid_extrema(a, b, lower=True)

    def cell_sups(self, q, n, cells=None):
        """Supremum of the pdf over each cell (may be ``inf``)."""
        a, b = cell_edges(q, n, cells)
        with np.errstate(divide="ignore"):
            if self.monotonicity == "decreasing":
                return np.asarray(self._pdf(a), dtype=float)
            if self.monotonicity == "increasing":
                return np.asarray(self._pdf(b), dtype=float)
        return self._grid_extrema(a, b, lower=False)

    def _grid_extrema(self, a, b, lower):
        if self.deriv_sup is None:
            raise UnsupportedModelError(
                f"{self.spec}: general density needs deriv_sup to certify cell extrema"
            )
        check_budget(a.size * CERT_GRID, budget=DEFAULT_BUDGET * 16)
        t = np.linspace(0.0, 1.0, CERT_GRID)
        out = np.empty(a.size)
        chunk = max(1, 2**22 // CERT_GRID)
        for s in range(0, a.size, chunk):
            lo, hi = a[s : s + chunk], b[s : s + chunk]
            x = lo[:, None] + (hi - lo)[:, None] * t[None, :]
            vals = np.asarray(self._pdf(x), dtype=float)
            slack = self.deriv_sup * (hi - lo) / (CERT_GRID - 1) / 2
            if lower:
                out[s : s + chunk] = np.maximum(vals.min(axis=1) - slack, 0.0)
            else:
                out[s : s + chunk] = vals.max(axis=1) + slack
        return out

    def cell_deriv_sups(self, q, n, cells=None):
        """Supremum of |f'| over each cell, for the per-cell gradient bound."""
        if self.deriv_sup is None:
            raise UnsupportedModelError(f"{self.spec}: no finite sup of |f'|")
        a, b = cell_edges(q, n, cells)
        if self.abs_deriv_monotone:
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.maximum(np.abs(self._deriv(a)), np.abs(self._deriv(b)))
        if self.deriv2_sup is None:
            return np.full(a.size, float(self.deriv_sup))
        t = np.linspace(0.0, 1.0, 257)
        x = a[:, None] + (b - a)[:, None] * t[None, :]
        vals = np.abs(np.asarray(self._deriv(x), dtype=float)).max(axis=1)
        return np.minimum(vals + self.deriv2_sup * (b - a) / 512, self.deriv_sup)

    def interval_infimum(self, k, n, q):
        """Infimum of the pdf over I_{k;n} with 1-based ``k``."""
        if not 1 <= k <= q**n:
            raise DomainError(f"cell index k={k} outside 1..{q**n}")
        return float(self.cell_infima(q, n, np.array([k - 1]))[0])

    # -- sampling ----------------------------------------------------------

    def ppf(self, u, xtol=1e-14):
        """Inverse CDF by vectorized bisection on ``_cdf``."""
        u = np.asarray(u, dtype=float)
        lo = np.zeros_like(u)
        hi = np.ones_like(u)
        iters = int(math.ceil(math.log2(1.0 / xtol))) + 1
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            below = self._cdf(mid) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return np.minimum(0.5 * (lo + hi), np.nextafter(1.0, 0.0))

    def sample(self, size, rng):
        return self.ppf(rng.random(size))


@dataclass(frozen=True)
class BenfordSignificandDensity(UnitDensity):
    """Fractional part of the base-``q`` significand under the Newcomb-Benford law."""

    q: int = 10

    monotonicity = "decreasing"
    abs_deriv_monotone = True
    convex_decreasing = True

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 2:
            raise DomainError("Benford base must be an integer >= 2")

    @cached_property
    def _j(self):
        return np.arange(1, self.q, dtype=float)

    @property
    def spec(self):
        return f"benford:q={self.q}"

    def _pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.sum(1.0 / (x[..., None] + self._j), axis=-1) / math.log(self.q)

    def _cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.sum(np.log1p(x[..., None] / self._j), axis=-1) / math.log(self.q)

    def _deriv(self, x):
        x = np.asarray(x, dtype=float)
        return -np.sum((x[..., None] + self._j) ** -2.0, axis=-1) / math.log(self.q)

    @property
    def deriv_sup(self):
        return float(np.sum(self._j**-2.0) / math.log(self.q))

    @property
    def deriv2_sup(self):
        return float(2.0 * np.sum(self._j**-3.0) / math.log(self.q))

    @property
    def deriv_l1(self):
        return float(self._pdf(0.0) - self._pdf(1.0))

    @property
    def pdf_sup(self):
        return float(self._pdf(0.0))


@dataclass(frozen=True)
class PowerDensity(UnitDensity):
    """Beta(alpha, 1) density ``alpha * x**(alpha - 1)``."""

    alpha: float = 2.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError("alpha must be positive")

    @property
    def spec(self):
        return f"power:alpha={_num(self.alpha)}"

    @property
    def monotonicity(self):
        return "decreasing" if self.alpha < 1 else "increasing"

    @property
    def abs_deriv_monotone(self):
        return True

    @property
    def convex_decreasing(self):
        return self.alpha <= 1

    @property
    def singularity_exponent(self):
        return self.alpha if self.alpha < 1 else None

    @property
    def deriv_sup(self):
        a = self.alpha
        if a == 1:
            return 0.0
        if a >= 2:
            return a * (a - 1)
        return None

    @property
    def deriv2_sup(self):
        a = self.alpha
        if a in (1, 2):
            return 0.0
        if a >= 3:
            return a * (a - 1) * (a - 2)
        return None

    @property
    def deriv_l1(self):
        # ||f'||_1 = |f(1) - f(0+)|, finite only when f(0+) is
        a = self.alpha
        if a == 1:
            return 0.0
        return a if a > 1 else None

    @property
    def pdf_sup(self):
        return float(self.alpha) if self.alpha >= 1 else None

    def _pdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return self.alpha * x ** (self.alpha - 1)

    def pdf(self, x):
        out = super().pdf(x)
        if self.alpha < 1:
            if np.ndim(out) == 0:
                return PDF_SENTINEL if math.isinf(out) else out
            return np.where(np.isinf(out), PDF_SENTINEL, out)
        return out

    def _cdf(self, x):
        return np.asarray(x, dtype=float) ** self.alpha

    def _deriv(self, x):
        x = np.asarray(x, dtype=float)
        a = self.alpha
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(a == 1, 0.0, a * (a - 1) * x ** (a - 2))

    def ppf(self, u, xtol=None):
        return np.asarray(u, dtype=float) ** (1.0 / self.alpha)


@dataclass(frozen=True)
class PiecewiseConstantDensity(UnitDensity):
    """Density constant on each base-``q`` cell of depth ``m``."""

    q: int = 2
    m: int = 0
    weights: tuple = (1.0,)

    monotonicity = "piecewise-constant"

    def __post_init__(self):
        w = tuple(float(v) for v in np.ravel(self.weights))
        object.__setattr__(self, "weights", w)
        if self.q < 2 or self.m < 0:
            raise DomainError("need q >= 2 and m >= 0")
        if len(w) != self.q**self.m:
            raise DomainError(f"expected {self.q**self.m} weights, got {len(w)}")
        if min(w) < 0:
            raise DomainError("weights must be nonnegative")
        if abs(math.fsum(w) / self.q**self.m - 1.0) > 1e-12:
            raise DomainError("weights must average to one")

    @cached_property
    def _w(self):
        return np.asarray(self.weights)

    @cached_property
    def _cum(self):
        return np.concatenate([[0.0], np.cumsum(self._w)]) / self.q**self.m

    @property
    def spec(self):
        if self.m == 0:
            return "uniform"
        w = ";".join(_num(v) for v in self.weights)
        return f"pwc:q={self.q},m={self.m},w={w}"

    @property
    def flat(self):
        return float(self._w.max() - self._w.min()) == 0.0

    @property
    def deriv_sup(self):
        return 0.0 if self.flat else None

    @property
    def deriv2_sup(self):
        return 0.0 if self.flat else None

    @property
    def deriv_l1(self):
        return 0.0 if self.flat else None

    @property
    def pdf_sup(self):
        return float(self._w.max())

    @property
    def convex_decreasing(self):
        return self.flat

    @property
    def abs_deriv_monotone(self):
        return self.flat

    def _index(self, x):
        size = self.q**self.m
        return np.clip(np.floor(np.asarray(x, dtype=float) * size), 0, size - 1).astype(np.int64)

    def _pdf(self, x):
        return self._w[self._index(x)]

    def _cdf(self, x):
        x = np.asarray(x, dtype=float)
        i = self._index(x)
        return self._cum[i] + self._w[i] * (x - i / self.q**self.m)

    def _deriv(self, x):
        if not self.flat:
            raise UnsupportedModelError("piecewise-constant density is not differentiable")
        return np.zeros_like(np.asarray(x, dtype=float))

    def breakpoints(self, q, n):
        size = self.q**self.m
        if size == 1:
            return np.empty(0)
        check_budget(size)
        i = np.arange(1, size, dtype=object)
        pts = {(int(v) * q**n % size) / size for v in i}
        return np.array(sorted(p for p in pts if p > 0))

    def _reduce_cells(self, q, n, cells, ufunc):
        size = q**n
        big = self.q**self.m
        if cells is None:
            cells = np.arange(size, dtype=np.int64)
        cells = np.asarray(cells, dtype=np.int64)
        cell_edges(q, n, cells)  # range check
        lo = (cells * big) // size
        hi = ((cells + 1) * big + size - 1) // size  # exclusive
        if np.all(hi - lo == 1):
            return self._w[lo].copy()
        return np.array([ufunc.reduce(self._w[a:b]) for a, b in zip(lo, hi)])

    def cell_infima(self, q, n, cells=None):
        return self._reduce_cells(q, n, cells, np.minimum)

    def cell_sups(self, q, n, cells=None):
        return self._reduce_cells(q, n, cells, np.maximum)

    def ppf(self, u, xtol=None):
        u = np.asarray(u, dtype=float)
        i = np.clip(np.searchsorted(self._cum, u, side="right") - 1, 0, len(self._w) - 1)
        w = self._w[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            x = i / self.q**self.m + np.where(w > 0, (u - self._cum[i]) / w, 0.0)
        return np.clip(x, 0.0, np.nextafter(1.0, 0.0))


def uniform():
    """The uniform density as the indicator of [0, 1), so the stopping depth is 0."""
    return PiecewiseConstantDensity(q=2, m=0, weights=(1.0,))


@dataclass(frozen=True)
class PuncturedUniformDensity(UnitDensity):
    """Indicator of [0, 1) minus one point: the same law as uniform, a smaller version of f."""

    x0: float = 0.5

    monotonicity = "general"

    def __post_init__(self):
        if not 0 <= self.x0 < 1:
            raise DomainError("x0 must lie in [0, 1)")

    @property
    def spec(self):
        return f"punctured:x0={_num(self.x0)}"

    def _pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x == self.x0, 0.0, 1.0)

    def _cdf(self, x):
        return np.asarray(x, dtype=float)

    def cell_infima(self, q, n, cells=None):
        if cells is None:
            cells = np.arange(q**n)
        cells = np.asarray(cells, dtype=np.int64)
        cell_edges(q, n, cells)
        hole = min(int(math.floor(self.x0 * q**n)), q**n - 1)
        return np.where(cells == hole, 0.0, 1.0)

    def cell_sups(self, q, n, cells=None):
        if cells is None:
            cells = np.arange(q**n)
        return np.ones(np.asarray(cells).size)

    def ppf(self, u, xtol=None):
        return np.asarray(u, dtype=float)


@dataclass(frozen=True)
class ClippedPowerDensity(UnitDensity):
    """``alpha * max(x, eps)**(alpha - 1)`` renormalized: a Lipschitz proxy for a singular power density."""

    alpha: float = 0.5
    eps: float = 0.01

    def __post_init__(self):
        if not self.alpha > 0 or not 0 < self.eps < 1:
            raise DomainError("need alpha > 0 and 0 < eps < 1")

    @property
    def spec(self):
        return f"clipped-power:alpha={_num(self.alpha)},eps={_num(self.eps)}"

    @cached_property
    def _z(self):
        a, e = self.alpha, self.eps
        return a * e**a + 1.0 - e**a

    @property
    def monotonicity(self):
        return "decreasing" if self.alpha < 1 else "increasing"

    @property
    def deriv_sup(self):
        a, e = self.alpha, self.eps
        if a == 1:
            return 0.0
        if a < 2:
            return a * abs(a - 1) * e ** (a - 2) / self._z
        return a * (a - 1) / self._z

    @property
    def pdf_sup(self):
        return float(max(self._pdf(0.0), self._pdf(1.0)))

    def _pdf(self, x):
        x = np.asarray(x, dtype=float)
        return self.alpha * np.maximum(x, self.eps) ** (self.alpha - 1) / self._z

    def _cdf(self, x):
        x = np.asarray(x, dtype=float)
        a, e = self.alpha, self.eps
        head = a * e ** (a - 1) * x
        tail = a * e**a + np.maximum(x, e) ** a - e**a
        return np.where(x <= e, head, tail) / self._z

    def _deriv(self, x):
        x = np.asarray(x, dtype=float)
        a = self.alpha
        return np.where(x < self.eps, 0.0, a * (a - 1) * np.maximum(x, self.eps) ** (a - 2) / self._z)

    def cell_deriv_sups(self, q, n, cells=None):
        a, b = cell_edges(q, n, cells)
        left = np.maximum(a, self.eps)
        vals = np.maximum(np.abs(self._deriv(left)), np.abs(self._deriv(b)))
        return np.where(b <= self.eps, 0.0, vals)

    def breakpoints(self, q, n):
        # kink of f at eps maps to frac(q**n * eps) in the remainder density
        return np.array([math.fmod(self.eps * q**n, 1.0)])


class GeneralDensity(UnitDensity):
    """A density given by callables.

    Cell infima are certified from ``deriv_sup`` unless ``monotonicity`` is
    declared.
    """

    def __init__(self, pdf, cdf, deriv=None, deriv_sup=None, deriv2_sup=None,
                 monotonicity="general", name="custom"):
        if monotonicity not in MONOTONICITIES:
            raise DomainError(f"unknown monotonicity {monotonicity!r}")
        self._pdf_fn = pdf
        self._cdf_fn = cdf
        self._deriv_fn = deriv
        self.deriv_sup = deriv_sup
        self.deriv2_sup = deriv2_sup
        self.monotonicity = monotonicity
        self._name = name

    @property
    def spec(self):
        return self._name

    def _pdf(self, x):
        return self._pdf_fn(np.asarray(x, dtype=float))

    def _cdf(self, x):
        return self._cdf_fn(np.asarray(x, dtype=float))

    def _deriv(self, x):
        if self._deriv_fn is None:
            return super()._deriv(x)
        return self._deriv_fn(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ProductDensity:
    """Product of univariate densities on the unit cube."""

    factors: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise DomainError("product needs at least one factor")

    @property
    def k(self):
        return len(self.factors)

    @property
    def spec(self):
        return "product:" + "|".join(f.spec for f in self.factors)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.k:
            raise DomainError(f"expected points of dimension {self.k}")
        out = np.ones(x.shape[:-1])
        for i, f in enumerate(self.factors):
            out = out * f.pdf(x[..., i])
        return float(out) if out.ndim == 0 else out

    def _require_metadata(self):
        for f in self.factors:
            if f.deriv_sup is None or f.pdf_sup is None:
                raise UnsupportedModelError(f"factor {f.spec} lacks deriv_sup or pdf_sup")

    @property
    def grad_sup(self):
        """Upper bound on sup |grad f| from the factor sup-norms."""
        self._require_metadata()
        total = 0.0
        for i, f in enumerate(self.factors):
            term = f.deriv_sup
            for j, g in enumerate(self.factors):
                if j != i:
                    term *= g.pdf_sup
            total += term * term
        return math.sqrt(total)

    def cell_grad_sups(self, q, n):
        """Per-cell bound on sup |grad f|, shaped ``(q**n,) * k``."""
        self._require_metadata()
        check_budget(q ** (n * self.k))
        dsups = [f.cell_deriv_sups(q, n) for f in self.factors]
        fsups = [f.cell_sups(q, n) for f in self.factors]
        total = np.zeros((q**n,) * self.k)
        for i in range(self.k):
            term = np.ones(())
            for j in range(self.k):
                term = np.multiply.outer(term, dsups[j] if j == i else fsups[j])
            total = total + term**2
        return np.sqrt(total)
