"""Law of the scaled remainder T^n(X) for X with a density on [0, 1)."""

from __future__ import annotations

import math

import numpy as np

from .density_models import DEFAULT_BUDGET, ProductDensity, UnitDensity, check_budget
from .digits import DigitString, FixedPointReal, apply_T, digits_of  # noqa: F401  (re-exported)
from .errors import DomainError

_BLOCK_ELEMENTS = 2**22


def _compensated_block_sum(x, size, block_fn):
    """Neumaier-compensated sum over ``size`` terms, evaluated in column blocks.

    ``block_fn(x, j)`` returns the term matrix for the integer offsets ``j``.
    """
    x = np.atleast_1d(x)
    total = np.zeros(x.shape, dtype=float)
    comp = np.zeros(x.shape, dtype=float)
    width = max(1, _BLOCK_ELEMENTS // max(x.size, 1))
    for j0 in range(0, size, width):
        j = np.arange(j0, min(size, j0 + width), dtype=float)
        part = np.sum(block_fn(x, j), axis=-1)
        t = total + part
        big = np.abs(total) >= np.abs(part)
        comp += np.where(big, (total - t) + part, (part - t) + total)
        total = t
    return total + comp


class RemainderLaw(UnitDensity):
    """P_n: the law of T^n(X) when X has density ``model``, as a density itself."""

    def __init__(self, model, q, n, budget=DEFAULT_BUDGET):
        if int(q) != q or q < 2:
            raise DomainError("base must be an integer >= 2")
        if int(n) != n or n < 0:
            raise DomainError("depth must be a nonnegative integer")
        self.model = model
        self.q = int(q)
        self.n = int(n)
        self.budget = budget
        self.size = self.q**self.n
        check_budget(self.size, budget)

    def __repr__(self):
        return f"RemainderLaw({self.model.spec}, q={self.q}, n={self.n})"

    @property
    def spec(self):
        return f"remainder[{self.model.spec};q={self.q};n={self.n}]"

    @property
    def monotonicity(self):
        m = self.model.monotonicity
        return m if m in ("increasing", "decreasing") else "general"

    @property
    def deriv_sup(self):
        d = self.model.deriv_sup
        return None if d is None else d / self.size

    @property
    def deriv2_sup(self):
        d = self.model.deriv2_sup
        return None if d is None else d / self.size**2

    @property
    def singularity_exponent(self):
        return self.model.singularity_exponent

    @property
    def abs_deriv_monotone(self):
        return False

    def breakpoints(self, q, n):
        if q == self.q:
            return self.model.breakpoints(self.q, self.n + n)
        return np.empty(0)

    def _pdf(self, x):
        x = np.asarray(x, dtype=float)
        scale = float(self.size)
        f = self.model._pdf
        out = _compensated_block_sum(
            x.ravel(), self.size, lambda xx, j: f((j[None, :] + xx[:, None]) / scale)
        )
        return (out / scale).reshape(x.shape)

    def _cdf(self, x):
        x = np.asarray(x, dtype=float)
        scale = float(self.size)
        F = self.model._cdf

        def block(xx, j):
            return F((j[None, :] + xx[:, None]) / scale) - F(j / scale)[None, :]

        return _compensated_block_sum(x.ravel(), self.size, block).reshape(x.shape)

    def _deriv(self, x):
        x = np.asarray(x, dtype=float)
        scale = float(self.size)
        d = self.model._deriv
        out = _compensated_block_sum(
            x.ravel(), self.size, lambda xx, j: d((j[None, :] + xx[:, None]) / scale)
        )
        return (out / scale**2).reshape(x.shape)


def remainder_cdf(law, x):
    """F_n(x) as the finite sum of base-CDF increments over the q**n cells."""
    return law.cdf(x)


def remainder_pdf(law, x):
    """f_n(x) = q^-n sum_j f(q^-n (j + x)) for 0 < x < 1."""
    arr = np.asarray(x, dtype=float)
    if np.any((arr <= 0) | (arr >= 1)):
        raise DomainError("remainder pdf is evaluated on (0, 1)")
    out = np.asarray(law._pdf(arr), dtype=float)
    return float(out) if out.ndim == 0 else out


def remainder_pdf_multi(model, q, n, x, budget=DEFAULT_BUDGET):
    """k-dimensional f_n(x) of a product density, as the product of factor-wise f_n."""
    if not isinstance(model, ProductDensity):
        raise DomainError("multivariate remainder densities need a ProductDensity")
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.k:
        raise DomainError(f"expected points of dimension {model.k}")
    if np.any((x <= 0) | (x >= 1)):
        raise DomainError("coordinates must lie in (0, 1)")
    check_budget(model.k * q**n, budget)
    out = np.ones(x.shape[:-1])
    for i, factor in enumerate(model.factors):
        out = out * RemainderLaw(factor, q, n, budget)._pdf(x[..., i])
    return float(out) if out.ndim == 0 else out


def benford_digit_marginal(q, n, d, budget=DEFAULT_BUDGET):
    """P(X_n = d) under the extended Newcomb-Benford law in base ``q``.

    Evaluated as a sum of ``log1p`` terms, i.e. the log of the product
    formula, so that deep digits do not overflow.
    """
    if int(q) != q or q < 2:
        raise DomainError("base must be an integer >= 2")
    if n < 1:
        raise DomainError("digit index starts at 1")
    if not 0 <= d < q:
        raise DomainError(f"digit must lie in 0..{q - 1}")
    check_budget((q - 1) * q ** (n - 1), budget)
    base = _benford_block_bases(q, n)
    return float(math.fsum(np.log1p(1.0 / (base + d))) / math.log(q))


def _benford_block_bases(q, n):
    j = np.arange(1, q, dtype=float)[:, None]
    i = np.arange(q ** (n - 1), dtype=float)[None, :]
    return (j * float(q) ** n + i * q).ravel()


def benford_digit_gap(q, n, budget=DEFAULT_BUDGET):
    """P(X_n = 0) - P(X_n = q-1), summed termwise to avoid cancellation."""
    if n < 1:
        raise DomainError("digit index starts at 1")
    check_budget((q - 1) * q ** (n - 1), budget)
    base = _benford_block_bases(q, n)
    # log(1 + 1/b) - log(1 + 1/(b + q - 1)) = log1p((q - 1) / (b (b + q)))
    terms = np.log1p((q - 1) / (base * (base + q)))
    return float(math.fsum(terms) / math.log(q))
