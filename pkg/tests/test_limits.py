import math

import numpy as np
import pytest
from scipy import stats as sps

from renyicp import limits
from renyicp.limits import (
    BRIDGE,
    GUMBEL,
    MAX_TWO,
    LimitLaw,
    cdf_gumbel_de,
    cdf_max_two_sup_wiener,
    cdf_sup_abs_wiener,
    cdf_sup_brownian_bridge,
    cdf_sup_wiener,
    mc_sample_limit,
    p_value,
    quantile,
)

LAWS = [MAX_TWO, BRIDGE, GUMBEL]


def theta_series(x, K=60):
    k = np.arange(K)
    return 4 / math.pi * np.sum((-1.0) ** k / (2 * k + 1) * np.exp(-(math.pi**2) * (2 * k + 1) ** 2 / (8 * x * x)))


def reflection_series(x, K=60):
    j = np.arange(K)
    return 1 - 4 * np.sum((-1.0) ** j * sps.norm.sf((2 * j + 1) * x))


def test_sup_abs_wiener_examples():
    assert cdf_sup_abs_wiener(100.0) == pytest.approx(1.0, abs=1e-12)
    assert cdf_sup_abs_wiener(0.0) == 0.0
    assert cdf_sup_abs_wiener(-1.0) == 0.0
    assert cdf_sup_abs_wiener(1.0) == pytest.approx(0.3708, abs=5e-5)


@pytest.mark.parametrize("x", [0.3, 0.5, 0.8, 1.0, 1.49, 1.5, 1.51, 2.0, 3.0, 4.5])
def test_sup_abs_wiener_both_representations(x):
    # the implementation switches representation at one point; each must agree with the other
    assert cdf_sup_abs_wiener(x) == pytest.approx(theta_series(x), abs=1e-13)
    assert cdf_sup_abs_wiener(x) == pytest.approx(reflection_series(x), abs=1e-13)


def test_max_two_is_square():
    xs = np.linspace(0.2, 5, 40)
    assert np.allclose(cdf_max_two_sup_wiener(xs), cdf_sup_abs_wiener(xs) ** 2, atol=1e-15)
    assert cdf_max_two_sup_wiener(1.0) == pytest.approx(0.1375, abs=5e-5)
    assert cdf_max_two_sup_wiener(100.0) == pytest.approx(1.0)


def test_bridge_matches_scipy_kolmogorov():
    xs = np.linspace(0.1, 4, 80)
    assert np.allclose(cdf_sup_brownian_bridge(xs), sps.kstwobign.cdf(xs), atol=1e-13)
    assert cdf_sup_brownian_bridge(0.1) < 1e-8
    assert cdf_sup_brownian_bridge(100.0) == pytest.approx(1.0)
    assert quantile(BRIDGE, 0.95) == pytest.approx(1.358, abs=5e-4)


def test_gumbel_examples():
    assert cdf_gumbel_de(0.0) == pytest.approx(math.exp(-2), rel=1e-14)
    assert quantile(GUMBEL, 0.95) == pytest.approx(-math.log(-math.log(0.95) / 2), abs=1e-9)
    assert quantile(GUMBEL, 0.5) == pytest.approx(1.0596, abs=1e-4)
    assert cdf_gumbel_de(50.0) == pytest.approx(1.0)
    assert p_value(GUMBEL, -1e-9) > 0.86


def test_sup_wiener_half_normal():
    assert cdf_sup_wiener(40.0) == pytest.approx(1.0)
    assert cdf_sup_wiener(1.0) == pytest.approx(2 * sps.norm.cdf(1.0) - 1)
    assert cdf_sup_wiener(-0.5) == 0.0


@pytest.mark.parametrize("law", LAWS, ids=lambda l: l.kind)
def test_cdf_monotone_and_bounded(law):
    xs = np.linspace(-2, 8, 2001)
    F = law.cdf(xs)
    assert np.all((F >= 0) & (F <= 1))
    assert np.all(np.diff(F) >= -1e-15)
    assert np.allclose(law.cdf(xs) + law.sf(xs), 1.0, atol=1e-14)


@pytest.mark.parametrize("law", LAWS, ids=lambda l: l.kind)
def test_quantile_round_trip(law):
    for p in np.arange(0.01, 1.0, 0.01):
        x = quantile(law, p)
        assert abs(law.cdf(x) - p) <= 10 * law.tol


@pytest.mark.parametrize("law", LAWS, ids=lambda l: l.kind)
def test_quantile_recovers_point(law):
    x0 = 1.7
    assert quantile(law, float(law.cdf(x0))) == pytest.approx(x0, abs=1e-8)
    assert p_value(law, quantile(law, 0.95)) == pytest.approx(0.05, abs=1e-9)


def test_quantile_rejects_p():
    for p in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            quantile(MAX_TWO, p)


def test_p_value_examples():
    assert p_value(MAX_TWO, 0.0) == 1.0
    assert p_value(MAX_TWO, 1e6) == 0.0
    assert 0 <= p_value(BRIDGE, 1.0) <= 1
    vals = p_value(MAX_TWO, np.array([0.5, 2.5]))
    assert vals.shape == (2,)


def test_max_two_critical_value():
    assert quantile(MAX_TWO, 0.95) == pytest.approx(2.4932, abs=1e-4)


@pytest.mark.parametrize("kind", ["max-two-sup-wiener", "sup-brownian-bridge"])
def test_truncation_stable(kind):
    xs = np.linspace(0.3, 6, 100)
    assert np.max(np.abs(LimitLaw(kind).cdf(xs) - LimitLaw(kind, terms=400).cdf(xs))) < 1e-10


def test_law_validation():
    with pytest.raises(ValueError):
        LimitLaw("normal")
    with pytest.raises(ValueError):
        LimitLaw("gumbel-de", terms=4)
    with pytest.raises(ValueError):
        LimitLaw("gumbel-de", tol=1e-3)


def test_darling_erdos_norming():
    a, M = limits.darling_erdos_norming(1000)
    y = 1000 / math.log(1000) ** 1.5
    L = math.log(math.log(y))
    assert a == pytest.approx(math.sqrt(2 * L))
    assert M == pytest.approx(2 * L - 0.5 * math.log(L) + 0.5 * math.log(math.pi))
    with pytest.raises(ValueError):
        limits.darling_erdos_norming(8)


def test_sampler_deterministic_and_prefix_stable():
    a = mc_sample_limit(MAX_TWO, 300, 200, seed=5)
    b = mc_sample_limit(MAX_TWO, 300, 200, seed=5)
    assert np.array_equal(a, b)
    assert np.array_equal(mc_sample_limit(MAX_TWO, 100, 200, seed=5), a[:100])
    assert not np.array_equal(mc_sample_limit(MAX_TWO, 300, 200, seed=6), a)


def test_sampler_one_step_grid_is_half_normal():
    # the grid maximum of a one-step walk is |N(0,1)|
    draws = mc_sample_limit(LimitLaw("sup-brownian-bridge"), 4000, 1, seed=1, exact_between_steps=False)
    assert np.all(draws == 0)
    single = limits.LimitLaw("max-two-sup-wiener")
    draws = mc_sample_limit(single, 4000, 1, seed=1, exact_between_steps=False)
    # max of two |N(0,1)| has CDF (2Φ(x) - 1)^2
    ks = sps.kstest(draws, lambda x: (2 * sps.norm.cdf(x) - 1) ** 2).statistic
    assert ks < 0.03


def test_sampler_exact_interpolation_short_walk():
    # with exact between-step maxima even a 50-step walk is close to the continuous law
    draws = mc_sample_limit(BRIDGE, 20_000, 50, seed=3)
    assert sps.kstest(draws, BRIDGE.cdf).statistic < 0.015
    coarse = mc_sample_limit(BRIDGE, 20_000, 50, seed=3, exact_between_steps=False)
    assert np.all(draws >= coarse)


def test_sampler_quantile_example():
    # reps 10^5, steps 10^4 is the acceptance-scale run; a 10^4 x 2000 run keeps this quick
    draws = mc_sample_limit(MAX_TWO, 10_000, 2000, seed=9)
    assert np.quantile(draws, 0.95) == pytest.approx(quantile(MAX_TWO, 0.95), abs=0.05)
