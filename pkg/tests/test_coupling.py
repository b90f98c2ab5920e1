import math

import numpy as np
import pytest

from qremainder.coupling import (
    OVERFLOW,
    build_ladder,
    cond_prob_N_le,
    cond_prob_N_le_array,
    cond_tail_upper_envelope,
    default_depth,
    prob_N_gt,
    prob_N_le,
    sample_coupled,
    sample_coupled_many,
)
from qremainder.density_models import (
    BenfordSignificandDensity,
    PiecewiseConstantDensity,
    PowerDensity,
    PuncturedUniformDensity,
    uniform,
)
from qremainder.digits import digits_of
from qremainder.errors import DepthError, RejectionBudgetError, UnsupportedModelError, ZeroDensityError


def test_uniform_ladder():
    lad = build_ladder(uniform(), 2, 4)
    assert lad.levels[0].tolist() == [1.0]
    assert all(np.all(lad.levels[n] == 0) for n in range(1, 5))
    assert prob_N_le(lad, 0) == 1.0


@pytest.mark.parametrize("q", [2, 3, 10])
def test_punctured_uniform(q):
    lad = build_ladder(PuncturedUniformDensity(0.37), q, 3)
    for n in range(4):
        assert prob_N_le(lad, n) == pytest.approx(1 - q**-n, abs=1e-15)


@pytest.mark.parametrize("q", [2, 10])
def test_benford_tail_formula(q):
    lad = build_ladder(BenfordSignificandDensity(q), q, 3)
    for n in range(4):
        s = math.fsum(1 / (j + k * q**-n) for j in range(1, q) for k in range(1, q**n + 1))
        assert prob_N_le(lad, n) == pytest.approx(s / q**n / math.log(q), rel=1e-13)


def test_benford_ten_n_zero():
    lad = build_ladder(BenfordSignificandDensity(10), 10, 0)
    assert prob_N_le(lad, 0) == pytest.approx(sum(1 / (j + 1) for j in range(1, 10)) / math.log(10))


def test_pwc_level_m_is_certain():
    m = PiecewiseConstantDensity(2, 2, (0.5, 0.25, 1.25, 2.0))
    lad = build_ladder(m, 2, 4)
    assert prob_N_le(lad, 2) == 1.0
    assert prob_N_le(lad, 1) < 1.0


def test_ladder_invariants(model):
    q = 2
    lad = build_ladder(model, q, 6)
    cum = 0.0
    for n in range(7):
        assert np.all(lad.levels[n] >= 0)
        parent = np.repeat(lad.infima[n - 1], q) if n else 0.0
        assert np.allclose(lad.levels[n], lad.infima[n] - parent, atol=0)
        # telescoping: level sums reproduce the cumulative
        cum += math.fsum(np.repeat(lad.levels[n], q ** (6 - n))) / q**6
        assert cum == pytest.approx(prob_N_le(lad, n), abs=1e-14)
    assert np.all(np.diff(lad.cumulative) >= 0)
    assert 0 <= lad.cumulative[0] and lad.cumulative[-1] <= 1


def test_depth_errors():
    lad = build_ladder(PowerDensity(2.0), 2, 3)
    with pytest.raises(DepthError):
        prob_N_le(lad, 4)
    with pytest.raises(DepthError):
        build_ladder(PowerDensity(2.0), 2, -1)


def test_cond_prob_hand_example():
    lad = build_ladder(PowerDensity(2.0), 2, 2)
    # increments along x = 0.9: f(0) = 0, f(1/2) - 0 = 1, f(3/4) - f(1/2) = 0.5
    assert cond_prob_N_le(lad, 0.9, 2) == pytest.approx(1.5 / 1.8, rel=1e-15)


def test_cond_prob_zero_density():
    m = PiecewiseConstantDensity(2, 1, (0.0, 2.0))
    lad = build_ladder(m, 2, 2)
    with pytest.raises(ZeroDensityError):
        cond_prob_N_le(lad, 0.25, 1)
    assert cond_prob_N_le(lad, 0.75, 1) == 1.0


def test_cond_prob_scalar_and_array_agree(model):
    lad = build_ladder(model, 2, 5)
    x = np.random.default_rng(3).uniform(0.01, 0.99, 40)
    fx = model._pdf(x)
    x = x[fx > 0]
    for n in range(6):
        arr = cond_prob_N_le_array(lad, x, n)
        sc = [cond_prob_N_le(lad, float(v), n) for v in x]
        assert np.allclose(arr, sc, rtol=0, atol=1e-15)


def test_cond_prob_monotone_in_n(model):
    lad = build_ladder(model, 2, 6)
    x = np.random.default_rng(4).uniform(0.01, 0.99, 200)
    x = x[model._pdf(x) > 0]
    vals = np.array([cond_prob_N_le_array(lad, x, n) for n in range(7)])
    assert np.all(np.diff(vals, axis=0) >= -1e-15)


def _marginal_by_quadrature(lad, n):
    q = lad.q
    nodes, weights = np.polynomial.legendre.leggauss(20)
    size = q**n
    a = np.arange(size) / size
    x = (a[:, None] + (nodes[None, :] + 1) / (2 * size)).ravel()
    fx = lad.model._pdf(x)
    g = np.zeros_like(x)
    pos = fx > 0
    g[pos] = cond_prob_N_le_array(lad, x[pos], n) * fx[pos]
    return float(np.sum(g.reshape(size, -1) @ weights) / (2 * size))


@pytest.mark.parametrize("q", [2, 10])
def test_conditional_integrates_to_marginal(model, q):
    lad = build_ladder(model, q, 3)
    for n in range(4):
        assert _marginal_by_quadrature(lad, n) == pytest.approx(prob_N_le(lad, n), abs=1e-6)


def test_envelope_benford():
    lad = build_ladder(BenfordSignificandDensity(10), 10, 3)
    env2 = cond_tail_upper_envelope(lad, 2)
    assert np.max(env2.knots_y) < 0.05
    env1 = cond_tail_upper_envelope(lad, 1)
    x = (np.arange(1000) + 0.5) / 1000
    tail = 1 - cond_prob_N_le_array(lad, x, 1)
    assert np.all(env1(x) >= tail - 1e-12)


def test_envelope_uniform_is_zero():
    lad = build_ladder(PowerDensity(1.0), 2, 2)
    assert np.all(cond_tail_upper_envelope(lad, 0).knots_y == 0)


def test_envelope_needs_shape_flag():
    lad = build_ladder(PowerDensity(2.0), 2, 2)
    with pytest.raises(UnsupportedModelError):
        cond_tail_upper_envelope(lad, 1)


def test_default_depths():
    assert default_depth(2) == 12
    assert default_depth(10) == 4


def test_sampler_uniform_indicator():
    lad = build_ladder(uniform(), 2, 3)
    draws = sample_coupled_many(lad, 100, np.random.default_rng(0))
    assert np.all(draws.n == 0)
    assert np.array_equal(draws.x, draws.u)


def test_sampler_output_encodes_cell():
    lad = build_ladder(BenfordSignificandDensity(10), 10, 3)
    draws = sample_coupled_many(lad, 2000, np.random.default_rng(1))
    for i in range(200):
        s = draws[i]
        assert 0 <= s.x < 1
        if not s.overflow:
            assert digits_of(s.x, 10, s.n).cell_index == s.k


@pytest.mark.parametrize(
    "m,q,depth",
    [(BenfordSignificandDensity(10), 10, 3), (PowerDensity(0.5), 2, 12), (PowerDensity(2.0), 2, 8)],
    ids=lambda v: getattr(v, "spec", str(v)),
)
def test_sampler_N_frequencies(m, q, depth):
    lad = build_ladder(m, q, depth)
    size = 100_000
    draws = sample_coupled_many(lad, size, np.random.default_rng(11))
    for n in range(4):
        p = prob_N_le(lad, n) - (prob_N_le(lad, n - 1) if n else 0.0)
        freq = np.mean(draws.n == n)
        assert abs(freq - p) <= 4 * math.sqrt(p * (1 - p) / size) + 1e-12
    assert np.mean(draws.n == OVERFLOW) == pytest.approx(prob_N_gt(lad, depth), abs=0.01)


def test_sampler_marginal_ks():
    scipy_stats = pytest.importorskip("scipy.stats")
    m = PowerDensity(2.0)
    lad = build_ladder(m, 2, 6)
    draws = sample_coupled_many(lad, 20_000, np.random.default_rng(5))
    assert scipy_stats.kstest(draws.x, m.cdf).pvalue > 0.01


def test_sampler_deterministic():
    lad = build_ladder(PowerDensity(0.5), 2, 12)
    a = sample_coupled_many(lad, 500, 42)
    b = sample_coupled_many(lad, 500, 42)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.n, b.n)
    assert sample_coupled(lad, 3) == sample_coupled(lad, 3)


def test_rejection_budget():
    lad = build_ladder(PowerDensity(0.1), 2, 0)
    with pytest.raises(RejectionBudgetError):
        sample_coupled_many(lad, 10_000, np.random.default_rng(0), max_proposals=10)
