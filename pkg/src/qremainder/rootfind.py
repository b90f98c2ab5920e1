"""Safeguarded Newton-Raphson root finding."""

from __future__ import annotations

import math

import numpy as np

from .errors import ConvergenceError, DomainError


def find_bracket(func, lo=0.0, hi=1.0, points=64):
    """Scan ``points`` interior grid points for the first sign change of ``func``.

    Returns ``(a, b)`` with ``func(a)`` and ``func(b)`` of opposite sign, or
    ``None`` when the sampled values never change sign.
    """
    grid = lo + (hi - lo) * (np.arange(points) + 0.5) / points
    vals = np.asarray(func(grid), dtype=float)
    sign = np.sign(vals)
    for i in range(points - 1):
        if sign[i] == 0:
            return grid[i], grid[i]
        if sign[i] * sign[i + 1] < 0:
            return grid[i], grid[i + 1]
    if sign[-1] == 0:
        return grid[-1], grid[-1]
    return None


def newton_bisect(func, dfunc, bracket, x0=0.5, xtol=1e-14, ftol=0.0, maxiter=200):
    """Root of ``func`` inside ``bracket`` by Newton steps with bisection fallback.

    A Newton step is taken from the current iterate and rejected in favour of
    bisection whenever it leaves the bracket or fails to halve the bracket
    width. The bracket always shrinks, so the iteration converges.

    Returns ``(root, iterations)``.
    """
    a, b = float(bracket[0]), float(bracket[1])
    fa, fb = float(func(a)), float(func(b))
    if fa == 0.0:
        return a, 0
    if fb == 0.0:
        return b, 0
    if fa * fb > 0:
        raise DomainError(f"no sign change on [{a}, {b}]")
    # orient so that func(a) < 0 < func(b)
    if fa > 0:
        a, b = b, a
    x = x0 if min(a, b) < x0 < max(a, b) else 0.5 * (a + b)
    width_old = abs(b - a)
    for it in range(1, maxiter + 1):
        fx = float(func(x))
        if fx == 0.0 or abs(fx) <= ftol:
            return x, it
        if fx < 0:
            a = x
        else:
            b = x
        dfx = float(dfunc(x))
        step = None
        if dfx != 0.0 and math.isfinite(dfx):
            cand = x - fx / dfx
            if min(a, b) < cand < max(a, b) and abs(cand - x) < 0.5 * width_old:
                step = cand
        if step is None:
            step = 0.5 * (a + b)
        width_old = abs(step - x)
        if abs(step - x) <= xtol * max(1.0, abs(x)):
            return step, it
        if abs(b - a) <= 2 * np.spacing(max(abs(a), abs(b))):
            return step, it
        x = step
    raise ConvergenceError(f"root not found in {maxiter} iterations", estimate=x)
