"""Total variation distance between P_n and the uniform law, and its upper bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coupling import build_ladder, prob_N_le
from .density_models import DEFAULT_BUDGET, PowerDensity, ProductDensity, check_budget
from .errors import ConvergenceError, DomainError, UnsupportedModelError
from .quadrature import adaptive_gauss_legendre, composite_nodes
from .remainder import RemainderLaw
from .rootfind import find_bracket, newton_bisect

XI_RULES = {"left": 0.0, "midpoint": 0.5, "right": 1.0}
SECOND_ORDER_CAVEAT = "asymptotic: excludes O(||f''|| q^-2n)"
CONSISTENCY_SLACK = 1e-9


def _law(model, q, n, budget=DEFAULT_BUDGET):
    return RemainderLaw(model, q, n, budget)


# -- exact values ----------------------------------------------------------


def _sign_change_roots(func, lo, hi, scan=256):
    """All sign changes of ``func`` on a ``scan``-point grid, refined by bisection."""
    grid = np.linspace(lo, hi, scan + 2)[1:-1]
    vals = np.asarray(func(grid), dtype=float)
    roots = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        a, b = grid[i], grid[i + 1]
        fa = vals[i]
        for _ in range(200):
            m = 0.5 * (a + b)
            if m <= a or m >= b:
                break
            fm = float(func(np.array([m]))[0])
            if (fm < 0) == (fa < 0):
                a, fa = m, fm
            else:
                b = m
        roots.append(0.5 * (a + b))
    return roots


def _integrate_abs(func, singular_exponent=None, points=(), tol=1e-11):
    """Integral of |func| over (0, 1), splitting at sign changes."""
    points = np.asarray(points, dtype=float)
    if singular_exponent:
        e = singular_exponent
        inv = 1.0 / e

        def g(s):
            t = s**inv
            return func(t) * inv * s ** (inv - 1.0)

        points = points**e
    else:
        g = func
    roots = _sign_change_roots(g, 0.0, 1.0)
    brk = np.concatenate([points, roots]) if len(roots) else points
    value, _ = adaptive_gauss_legendre(lambda s: np.abs(g(s)), 0.0, 1.0, tol=tol, points=brk)
    return value


def tv_quadrature(model, q, n, tol=1e-10, budget=DEFAULT_BUDGET):
    """1/2 of the L1 distance between f_n and 1, by adaptive quadrature."""
    law = _law(model, q, n, budget)
    return 0.5 * _integrate_abs(
        lambda t: law._pdf(t) - 1.0,
        law.singularity_exponent,
        law.model.breakpoints(q, n),
        tol=2 * tol,
    )


def tv_exact_crossing(model, q, n, budget=DEFAULT_BUDGET):
    """|F_n(x0) - x0| where f_n(x0) = 1, for strictly monotone f.

    The crossing is found by Newton-Raphson seeded at 0.5 with a bisection
    fallback on a bracket from a 64-point scan.
    """
    law = _law(model, q, n, budget)

    def h(x):
        return np.asarray(law._pdf(x), dtype=float) - 1.0

    grid = (np.arange(64) + 0.5) / 64
    if np.max(np.abs(h(grid))) <= 1e-14:
        return 0.0
    if model.monotonicity not in ("increasing", "decreasing"):
        raise UnsupportedModelError(f"{model.spec} is not strictly monotone")
    bracket = find_bracket(h, 0.0, 1.0, points=64)
    if bracket is None:
        ends = np.array([2.0**-60, grid[0], grid[-1], 1.0 - 2.0**-53])
        vals = h(ends)
        if vals[0] * vals[1] < 0:
            bracket = (ends[0], ends[1])
        elif vals[2] * vals[3] < 0:
            bracket = (ends[2], ends[3])
        else:
            raise UnsupportedModelError("f_n - 1 has no sign change: not a single-crossing model")
    x0, _ = newton_bisect(
        lambda x: float(h(np.array([x]))[0]),
        lambda x: float(law._deriv(np.array([x]))[0]),
        bracket,
        x0=0.5,
        xtol=1e-14,
        maxiter=200,
    )
    resid = abs(float(h(np.array([x0]))[0]))
    if resid >= 1e-12:
        raise ConvergenceError(f"|f_n(x0) - 1| = {resid:.3g} at the located crossing", estimate=x0)
    return abs(float(law._cdf(np.array([x0]))[0]) - x0)


def crossing_point(model, q, n, budget=DEFAULT_BUDGET):
    """The x0 used by ``tv_exact_crossing`` (for plotting and diagnostics)."""
    law = _law(model, q, n, budget)
    h = lambda x: np.asarray(law._pdf(x), dtype=float) - 1.0  # noqa: E731
    bracket = find_bracket(h)
    if bracket is None:
        raise UnsupportedModelError("no crossing found")
    return newton_bisect(
        lambda x: float(h(np.array([x]))[0]),
        lambda x: float(law._deriv(np.array([x]))[0]),
        bracket,
    )[0]


def tv_exact(model, q, n, tol=1e-10, budget=DEFAULT_BUDGET):
    """Crossing method for monotone models, adaptive quadrature otherwise.

    Returns ``(value, method)``.
    """
    if model.monotonicity in ("increasing", "decreasing"):
        return tv_exact_crossing(model, q, n, budget), "crossing"
    return tv_quadrature(model, q, n, tol, budget), "quadrature"


def sup_deviation(model, q, n, grid_size=2001, budget=DEFAULT_BUDGET):
    """max |f_n(x) - 1| over a midpoint grid of ``grid_size`` points."""
    law = _law(model, q, n, budget)
    x = (np.arange(grid_size) + 0.5) / grid_size
    return float(np.max(np.abs(law._pdf(x) - 1.0)))


# -- bounds ----------------------------------------------------------------


def _need(value, what, model):
    if value is None:
        raise UnsupportedModelError(f"{model.spec}: missing {what}")
    return value


def tv_bound_gradient(model, q, n, per_cell=False):
    """(1/6) q^-n sup|f'|, or its per-cell refinement (1/6) q^-2n sum_j sup_{cell j}|f'|."""
    d = _need(model.deriv_sup, "deriv_sup", model)
    if not per_cell:
        return d / (6.0 * q**n)
    check_budget(q**n)
    sups = model.cell_deriv_sups(q, n)
    return math.fsum(sups) / (6.0 * q ** (2 * n))


def l1_distance(f, g, tol=1e-11):
    """||f - g||_1 over (0, 1)."""
    exps = [e for e in (f.singularity_exponent, g.singularity_exponent) if e]
    pts = np.concatenate([f.breakpoints(2, 0), g.breakpoints(2, 0)])
    return _integrate_abs(lambda t: f._pdf(t) - g._pdf(t), min(exps) if exps else None, pts, tol)


def tv_bound_mixed(model, proxy, q, n, per_cell=False, tol=1e-11):
    """1/2 ||f - g||_1 plus the gradient bound of a smooth proxy g."""
    _need(proxy.deriv_sup, "deriv_sup of the proxy", proxy)
    return 0.5 * l1_distance(model, proxy, tol) + tv_bound_gradient(proxy, q, n, per_cell)


@dataclass(frozen=True)
class SecondOrderEstimate:
    """Leading term (1/8) q^-2n |sum_j f'(xi_j)| and two companions.

    ``riemann_limit`` replaces the sum by its integral limit f(1) - f(0);
    ``per_cell_sup`` uses sup_{cell j}|f'| in place of f'(xi_j).
    """

    leading: float
    riemann_limit: float
    per_cell_sup: float
    xi_rule: str
    caveat: str = SECOND_ORDER_CAVEAT


def tv_bound_second_order(model, q, n, xi_rule="midpoint"):
    _need(model.deriv2_sup, "deriv2_sup", model)
    if xi_rule not in XI_RULES:
        raise DomainError(f"xi_rule must be one of {sorted(XI_RULES)}")
    size = q**n
    check_budget(size)
    xi = (np.arange(size) + XI_RULES[xi_rule]) / size
    leading = abs(math.fsum(model._deriv(xi))) / (8.0 * size**2)
    ends = np.asarray(model._pdf(np.array([0.0, 1.0])), dtype=float)
    riemann = abs(ends[1] - ends[0]) / (8.0 * size)
    per_cell = math.fsum(model.cell_deriv_sups(q, n)) / (8.0 * size**2)
    return SecondOrderEstimate(leading, riemann, per_cell, xi_rule)


def tv_bound_refined_low_alpha(model, q, n):
    """q^-n (1/2 sup_{first cell} f + 1/6 ||f'||_1) for power densities with 1 < alpha < 2."""
    if not isinstance(model, PowerDensity):
        raise UnsupportedModelError("refined bound is stated for power densities")
    if not 1 < model.alpha < 2:
        raise DomainError("refined bound needs 1 < alpha < 2")
    first_cell_sup = float(model._pdf(1.0 / q**n))
    return (0.5 * first_cell_sup + model.deriv_l1 / 6.0) / q**n


def coupling_tv_bound(ladder, n):
    """P(N > n)."""
    return max(0.0, 1.0 - prob_N_le(ladder, n))


def wasserstein_bounds(ladder, n):
    """(P(N > n), P(N > n) / 4): two upper bounds on W_1(P_n, uniform)."""
    p = coupling_tv_bound(ladder, n)
    return p, p / 4.0


@dataclass(frozen=True)
class MultivariateBound:
    global_bound: float
    per_cell_bound: float


def tv_bound_multivariate(model, q, n):
    """1/2 sqrt(k/3) q^-n sup|grad f| and its per-cell refinement."""
    if not isinstance(model, ProductDensity):
        raise UnsupportedModelError("multivariate bound needs a ProductDensity")
    k = model.k
    c = 0.5 * math.sqrt(k / 3.0)
    glob = c * model.grad_sup / q**n
    cells = model.cell_grad_sups(q, n)
    per_cell = c * math.fsum(cells.ravel()) / q ** (n * (k + 1))
    return MultivariateBound(glob, per_cell)


def tv_quadrature_multi(model, q, n, panels=128, order=8, budget=DEFAULT_BUDGET):
    """1/2 the L1 distance of the k-dimensional f_n from 1 on a tensor Gauss-Legendre grid."""
    if not isinstance(model, ProductDensity):
        raise UnsupportedModelError("tensor quadrature needs a ProductDensity")
    check_budget(model.k * q**n, budget)
    vals, wts = [], []
    for f in model.factors:
        law = RemainderLaw(f, q, n, budget)
        pts = list(f.breakpoints(q, n))
        x, w = composite_nodes(0.0, 1.0, panels, order, pts)
        vals.append(law._pdf(x))
        wts.append(w)
    check_budget(int(np.prod([v.size for v in vals])), budget=2**26)
    dens = np.ones(())
    weight = np.ones(())
    for v, w in zip(vals, wts):
        dens = np.multiply.outer(dens, v)
        weight = np.multiply.outer(weight, w)
    return 0.5 * float(np.sum(weight * np.abs(dens - 1.0)))


# -- report ----------------------------------------------------------------


@dataclass
class TvReport:
    q: int
    n: int
    exact_value: float | None = None
    method: str | None = None
    bounds: dict = field(default_factory=dict)
    estimates: dict = field(default_factory=dict)

    @property
    def consistent(self):
        if self.exact_value is None:
            return True
        return all(self.exact_value <= b + CONSISTENCY_SLACK for b in self.bounds.values())


def tv_report(model, q, n, ladder=None, proxy=None, budget=DEFAULT_BUDGET):
    """Exact distance plus every bound whose preconditions ``model`` meets."""
    report = TvReport(q, n)
    try:
        report.exact_value, report.method = tv_exact(model, q, n, budget=budget)
    except UnsupportedModelError:
        report.exact_value = None

    def attempt(name, fn, target=report.bounds):
        try:
            # distances never exceed 1, so larger bound values carry no information
            target[name] = min(1.0, float(fn()))
        except (UnsupportedModelError, DomainError):
            pass

    attempt("gradient_global", lambda: tv_bound_gradient(model, q, n))
    attempt("gradient_percell", lambda: tv_bound_gradient(model, q, n, per_cell=True))
    attempt("refined_low_alpha", lambda: tv_bound_refined_low_alpha(model, q, n))
    if proxy is not None:
        attempt("mixed", lambda: tv_bound_mixed(model, proxy, q, n))
    if ladder is None:
        try:
            ladder = build_ladder(model, q, n, budget)
        except UnsupportedModelError:
            ladder = None
    if ladder is not None and n <= ladder.depth:
        report.bounds["coupling"] = coupling_tv_bound(ladder, n)
        report.estimates["w1_tv"], report.estimates["w1_quarter"] = wasserstein_bounds(ladder, n)
    try:
        so = tv_bound_second_order(model, q, n)
        report.estimates["second_order"] = so.leading
        report.estimates["second_order_percell"] = so.per_cell_sup
    except (UnsupportedModelError, DomainError):
        pass
    return report
