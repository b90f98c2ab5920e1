"""Regularized incomplete gamma function and chi-square tail probabilities."""

import math

import numpy as np

_EPS = 1e-15
_TINY = 1e-300
_MAXITER = 10000


def _lower_series(a, x, lga):
    """P(a, x) by the power series; converges fast for x < a + 1."""
    term = np.full(x.shape, 1.0 / a)
    total = term.copy()
    ap = float(a)
    active = np.ones(x.shape, dtype=bool)
    for _ in range(_MAXITER):
        ap += 1.0
        term = np.where(active, term * x / ap, term)
        total = np.where(active, total + term, total)
        active &= np.abs(term) > np.abs(total) * _EPS
        if not active.any():
            break
    with np.errstate(divide="ignore"):
        return total * np.exp(-x + a * np.log(x) - lga)


def _upper_fraction(a, x, lga):
    """Q(a, x) by the modified Lentz continued fraction; for x >= a + 1."""
    b = x + 1.0 - a
    c = np.full(x.shape, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(1, _MAXITER):
        an = -i * (i - a)
        b = b + 2.0
        d_new = an * d + b
        d_new = np.where(np.abs(d_new) < _TINY, _TINY, d_new)
        c_new = b + an / c
        c_new = np.where(np.abs(c_new) < _TINY, _TINY, c_new)
        d_new = 1.0 / d_new
        delta = d_new * c_new
        d = np.where(active, d_new, d)
        c = np.where(active, c_new, c)
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) > _EPS
        if not active.any():
            break
    return np.exp(-x + a * np.log(x) - lga) * h


def gammaincc(a, x):
    """Regularized upper incomplete gamma Q(a, x) for scalar a > 0 and array x >= 0."""
    if not a > 0:
        raise ValueError("a must be positive")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    lga = math.lgamma(a)
    out = np.ones(x.shape)
    pos = x > 0
    use_series = pos & (x < a + 1.0)
    use_cf = pos & ~use_series
    if use_series.any():
        out[use_series] = 1.0 - _lower_series(a, x[use_series], lga)
    if use_cf.any():
        out[use_cf] = _upper_fraction(a, x[use_cf], lga)
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if scalar else out


def chi2_sf(stat, df):
    """P(chi2_df > stat)."""
    return gammaincc(0.5 * df, 0.5 * np.asarray(stat, dtype=float))
