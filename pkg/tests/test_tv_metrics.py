import math

import numpy as np
import pytest

from qremainder.coupling import build_ladder
from qremainder.density_models import (
    BenfordSignificandDensity,
    ClippedPowerDensity,
    PiecewiseConstantDensity,
    PowerDensity,
    ProductDensity,
    uniform,
)
from qremainder.errors import DomainError, UnsupportedModelError
from qremainder.tv_metrics import (
    coupling_tv_bound,
    l1_distance,
    sup_deviation,
    tv_bound_gradient,
    tv_bound_mixed,
    tv_bound_multivariate,
    tv_bound_refined_low_alpha,
    tv_bound_second_order,
    tv_exact,
    tv_exact_crossing,
    tv_quadrature,
    tv_quadrature_multi,
    tv_report,
    wasserstein_bounds,
)

MONOTONE = [
    BenfordSignificandDensity(2),
    BenfordSignificandDensity(10),
    PowerDensity(0.1),
    PowerDensity(0.5),
    PowerDensity(1.5),
    PowerDensity(2.0),
    PowerDensity(5.0),
    PowerDensity(10.0),
]


def test_power_two_closed_form():
    assert tv_exact_crossing(PowerDensity(2.0), 2, 1) == pytest.approx(0.125, abs=1e-15)
    assert tv_quadrature(PowerDensity(2.0), 2, 1) == pytest.approx(0.125, abs=1e-10)
    # f_n(x) = 2^-n (2x - 1) + 1, so the distance is 2^-n / 4 exactly
    for n in range(12):
        assert tv_exact_crossing(PowerDensity(2.0), 2, n) == pytest.approx(2.0**-n / 4, rel=1e-12)


def test_uniform_is_zero():
    for n in (0, 3):
        assert tv_exact_crossing(uniform(), 2, n) == 0.0
        assert tv_quadrature(uniform(), 2, n) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("m", MONOTONE, ids=lambda m: m.spec)
@pytest.mark.parametrize("n", [0, 1, 3, 5, 8])
def test_crossing_agrees_with_quadrature(m, n):
    q = m.q if isinstance(m, BenfordSignificandDensity) and n <= 4 else 2
    assert abs(tv_exact_crossing(m, q, n) - tv_quadrature(m, q, n)) < 1e-6


def test_benford_ten_n_zero_crossing():
    m = BenfordSignificandDensity(10)
    value = tv_quadrature(m, 10, 0)
    assert 0 < value < 1
    assert value == pytest.approx(tv_exact_crossing(m, 10, 0), abs=1e-10)


def test_crossing_refuses_non_monotone():
    m = PiecewiseConstantDensity(2, 2, (0.4, 1.6, 0.4, 1.6))
    with pytest.raises(UnsupportedModelError):
        tv_exact_crossing(m, 2, 0)
    assert tv_exact(m, 2, 0) == (pytest.approx(0.3, abs=1e-10), "quadrature")


def test_gradient_bounds():
    for n in range(6):
        assert tv_bound_gradient(PowerDensity(2.0), 2, n) == pytest.approx(2.0 / 6 / 2**n)
    assert tv_bound_gradient(uniform(), 2, 3) == 0.0
    b = BenfordSignificandDensity(10)
    assert tv_bound_gradient(b, 10, 1, per_cell=True) < tv_bound_gradient(b, 10, 1)
    with pytest.raises(UnsupportedModelError):
        tv_bound_gradient(PowerDensity(1.5), 2, 1)


def test_mixed_bound():
    f = PowerDensity(5.0)
    assert tv_bound_mixed(f, f, 2, 3) == pytest.approx(tv_bound_gradient(f, 2, 3), abs=1e-12)
    g = PowerDensity(0.5)
    floor = 0.5 * l1_distance(g, uniform())
    assert floor == pytest.approx(0.25, abs=1e-10)
    for n in range(4):
        assert tv_bound_mixed(g, uniform(), 2, n) == pytest.approx(floor, abs=1e-12)
    proxy = ClippedPowerDensity(0.5, 0.01)
    vals = [tv_bound_mixed(g, proxy, 2, n) for n in range(0, 30, 2)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(0.5 * l1_distance(g, proxy), rel=1e-3)


def test_second_order():
    assert tv_bound_second_order(uniform(), 2, 4).leading == 0.0
    so = tv_bound_second_order(PowerDensity(2.0), 2, 6)
    assert so.riemann_limit == pytest.approx(2.0 / 8 / 2**6)
    assert so.leading == pytest.approx(so.riemann_limit)
    assert "asymptotic" in so.caveat
    m = PowerDensity(5.0)
    gaps = [math.log(tv_bound_second_order(m, 2, n).leading) - math.log(tv_exact(m, 2, n)[0])
            for n in range(4, 12)]
    assert abs(gaps[-1]) < abs(gaps[0]) and abs(gaps[-1]) < 0.01
    with pytest.raises(UnsupportedModelError):
        tv_bound_second_order(PowerDensity(1.5), 2, 2)
    with pytest.raises(DomainError):
        tv_bound_second_order(PowerDensity(2.0), 2, 2, xi_rule="bogus")
    left = tv_bound_second_order(m, 2, 3, "left").leading
    right = tv_bound_second_order(m, 2, 3, "right").leading
    assert left < tv_bound_second_order(m, 2, 3).leading < right


def test_refined_low_alpha():
    m = PowerDensity(1.5)
    for n in range(8):
        assert tv_exact(m, 2, n)[0] <= tv_bound_refined_low_alpha(m, 2, n)
    b3, b4 = tv_bound_refined_low_alpha(m, 2, 3), tv_bound_refined_low_alpha(m, 2, 4)
    # ratio oracle: (f(2^-4)/2 + 1/4) / (f(2^-3)/2 + 1/4) / 2
    f = m._pdf
    assert b4 / b3 == pytest.approx((f(2**-4) / 2 + 0.25) / (f(2**-3) / 2 + 0.25) / 2)
    near_two = tv_bound_refined_low_alpha(PowerDensity(1.999), 2, 6)
    assert near_two / tv_bound_gradient(PowerDensity(2.0), 2, 6) < 4
    with pytest.raises(DomainError):
        tv_bound_refined_low_alpha(PowerDensity(2.5), 2, 1)


def test_coupling_and_wasserstein():
    lad = build_ladder(BenfordSignificandDensity(10), 10, 2)
    h10 = sum(1 / j for j in range(1, 11))
    assert coupling_tv_bound(lad, 0) == pytest.approx(1 - (h10 - 1) / math.log(10), rel=1e-13)
    w, w4 = wasserstein_bounds(lad, 1)
    assert w == 4 * w4
    assert wasserstein_bounds(build_ladder(uniform(), 2, 2), 1) == (0.0, 0.0)
    lad2 = build_ladder(PowerDensity(2.0), 2, 3)
    assert wasserstein_bounds(lad2, 2)[1] < coupling_tv_bound(lad2, 2)


def test_multivariate():
    uu = ProductDensity((uniform(), uniform()))
    assert tv_bound_multivariate(uu, 2, 3).global_bound == 0.0
    one = ProductDensity((PowerDensity(2.0),))
    mb = tv_bound_multivariate(one, 2, 3)
    assert mb.global_bound > tv_bound_gradient(PowerDensity(2.0), 2, 3)
    assert mb.global_bound == pytest.approx(0.5 * math.sqrt(1 / 3) * 2 / 8)
    pp = ProductDensity((PowerDensity(2.0), PowerDensity(2.0)))
    for n in (1, 2, 3):
        b = tv_bound_multivariate(pp, 2, n)
        assert tv_quadrature_multi(pp, 2, n) <= b.per_cell_bound + 1e-9 <= b.global_bound + 2e-9
    mixed = ProductDensity((uniform(), PowerDensity(5.0)))
    assert tv_quadrature_multi(mixed, 2, 2) == pytest.approx(tv_exact(PowerDensity(5.0), 2, 2)[0], abs=1e-6)


def test_sup_deviation():
    assert sup_deviation(uniform(), 2, 3) == 0.0
    vals = [sup_deviation(BenfordSignificandDensity(2), 2, n) for n in range(6)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert sup_deviation(BenfordSignificandDensity(10), 10, 3) < 1e-2


@pytest.mark.parametrize("m", MONOTONE + [uniform(), PiecewiseConstantDensity(2, 2, (0.4, 0.4, 1.6, 1.6))],
                         ids=lambda m: m.spec)
@pytest.mark.parametrize("q", [2, 10])
def test_bound_ordering(m, q):
    lad = build_ladder(m, q, 4 if q == 10 else 6)
    for n in range(lad.depth + 1):
        rep = tv_report(m, q, n, ladder=lad)
        assert rep.consistent, rep
        if "gradient_percell" in rep.bounds:
            assert rep.bounds["gradient_percell"] <= rep.bounds["gradient_global"] + 1e-12
        assert all(0 <= v <= 1 for v in rep.bounds.values())


@pytest.mark.parametrize("alpha", [2.0, 5.0, 10.0])
def test_exponential_decay_rate(alpha):
    n = np.arange(2, 11)
    tv = [tv_exact(PowerDensity(alpha), 2, int(k))[0] for k in n]
    slope = np.polyfit(n, np.log(tv), 1)[0]
    assert slope == pytest.approx(-math.log(2), rel=0.1)
