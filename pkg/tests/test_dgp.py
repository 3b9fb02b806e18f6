import numpy as np
import pytest

from renyicp.dgp import (
    DgpSpec,
    garch11_path,
    gen_errors,
    gen_errors_batch,
    inject_change,
    resolve_tstar,
    simulate,
    true_lrv,
)
from renyicp.stats import TrimSpec, renyi_stat

BIG = 1_000_000


def test_deterministic():
    for errors in ("iid-normal", "rademacher", "garch11", "ar1", "arma22"):
        spec = DgpSpec(errors, T=300, seed=4)
        assert np.array_equal(gen_errors(spec), gen_errors(spec))
        assert not np.array_equal(gen_errors(spec), gen_errors(spec.with_(seed=5)))


def test_rademacher_values_and_mean():
    x = gen_errors(DgpSpec("rademacher", T=BIG, seed=1))
    assert set(np.unique(x)) == {-1.0, 1.0}
    assert abs(x.mean()) <= 4 / np.sqrt(BIG)


def test_ar1_zero_innovations():
    spec = DgpSpec("ar1", T=50)
    assert np.array_equal(gen_errors(spec, innovations=np.zeros(550)), np.zeros(50))


def test_garch_zero_innovations_fixed_point():
    e, sig2 = garch11_path(np.zeros(500), 0.5, 0.1, 0.7)
    assert np.all(e == 0)
    assert sig2 == pytest.approx(5 / 3, rel=1e-12)
    spec = DgpSpec("garch11", T=40)
    assert np.array_equal(gen_errors(spec, innovations=np.zeros(540)), np.zeros(40))


def test_garch_recursion_by_hand():
    w = np.array([0.5, -1.0, 2.0])
    e, _ = garch11_path(w, 0.5, 0.1, 0.7)
    s2 = 0.5 / 0.2
    expect = []
    for wi in w:
        expect.append(np.sqrt(s2) * wi)
        s2 = 0.5 + 0.1 * expect[-1] ** 2 + 0.7 * s2
    assert e == pytest.approx(expect, rel=1e-14)


def test_arma_recursion_by_hand():
    spec = DgpSpec("arma22", T=6, burn_in=0)
    w = np.random.default_rng(0).standard_normal(6)
    e = np.zeros(6)
    for t in range(6):
        e[t] = w[t]
        if t >= 1:
            e[t] += 0.4 * e[t - 1] + 0.5 * w[t - 1]
        if t >= 2:
            e[t] += -0.03 * e[t - 2] - 0.6 * w[t - 2]
    assert gen_errors(spec, innovations=w) == pytest.approx(e, rel=1e-13)


def _arma_variance():
    statsmodels = pytest.importorskip("statsmodels.tsa.arima_process")
    return statsmodels.ArmaProcess(ar=[1, -0.4, 0.03], ma=[1, 0.5, -0.6]).acovf(1)[0]


@pytest.mark.parametrize(
    "errors,expected",
    [("iid-normal", 1.0), ("rademacher", 1.0), ("garch11", 2.5), ("ar1", 4 / 3), ("arma22", None)],
)
def test_stationary_variance(errors, expected):
    if expected is None:
        expected = _arma_variance()
    x = gen_errors(DgpSpec(errors, T=BIG, seed=2))
    assert x.var() == pytest.approx(expected, rel=0.05)


def test_true_lrv():
    assert true_lrv(DgpSpec("ar1")) == pytest.approx(4.0)
    assert true_lrv(DgpSpec("iid-normal")) == 1.0
    assert true_lrv(DgpSpec("arma22")) == pytest.approx((0.9 / 0.63) ** 2)
    assert true_lrv(DgpSpec("arma22")) == pytest.approx(2.0408, abs=1e-4)
    assert true_lrv(DgpSpec("garch11")) == pytest.approx(2.5)


def test_arma_lrv_batch_means():
    x = gen_errors(DgpSpec("arma22", T=BIG, seed=3))
    means = x.reshape(1000, 1000).mean(axis=1)
    assert 1000 * means.var() == pytest.approx(true_lrv(DgpSpec("arma22")), rel=0.15)


def test_inject_change():
    e = np.random.default_rng(0).standard_normal(10)
    assert np.array_equal(inject_change(e, 1.5, 0.0, 4), e + 1.5)
    assert inject_change(np.zeros(5), 0.0, 2.0, 3) == pytest.approx([0, 0, 0, 2, 2])
    with pytest.raises(ValueError):
        inject_change(np.zeros(5), 0, 1, 5)
    with pytest.raises(ValueError):
        inject_change(np.zeros(5), 0, 1, 0)


def test_step_renyi_exact():
    x = inject_change(np.zeros(20), 0.0, -2.0, 7)
    out = renyi_stat(x, TrimSpec.explicit(3))
    assert out.raw == 2.0
    assert out.argmax == 7


def test_invalid_parameters():
    with pytest.raises(ValueError):
        DgpSpec("garch11", params={"alpha": 0.5, "beta": 0.6})
    with pytest.raises(ValueError):
        DgpSpec("ar1", params={"rho": 1.0})
    with pytest.raises(ValueError):
        DgpSpec("arma22", params={"phi1": 1.2})
    with pytest.raises(ValueError):
        DgpSpec("student-t")
    with pytest.raises(ValueError):
        DgpSpec("ar1", params={"omega": 1.0})
    with pytest.raises(ValueError):
        DgpSpec(burn_in=-1)


def test_tstar_rules():
    assert resolve_tstar("quarter", 500) == 4
    assert resolve_tstar("frac=0.05", 200) == 10
    assert resolve_tstar("12", 100) == 12
    with pytest.raises(ValueError):
        resolve_tstar("200", 100)


def test_text_round_trip():
    spec = DgpSpec("garch11", T=123, mu=0.5, delta=-1.25, tstar="frac=0.05", seed=9, params={"alpha": 0.2})
    assert DgpSpec.from_text(spec.to_text()) == spec.with_(params=spec.coefficients())
    with pytest.raises(ValueError, match="unknown fields"):
        DgpSpec.from_text("errors=ar1\nbogus=1\n")


def test_simulate_zero_delta_is_shifted_errors():
    spec = DgpSpec("ar1", T=100, mu=3.0, seed=8)
    assert np.array_equal(simulate(spec), gen_errors(spec) + 3.0)


def test_batch_shape():
    rng = np.random.default_rng(0)
    assert gen_errors_batch(DgpSpec("garch11", T=30), 7, rng).shape == (7, 30)


@pytest.mark.parametrize("errors", ["iid-normal", "rademacher", "garch11", "ar1", "arma22"])
def test_kernel_lrv_recovers_true_lrv(errors):
    from renyicp.limits import block_generator
    from renyicp.variance import VarianceConfig, variance_path

    spec = DgpSpec(errors, T=5000)
    X = gen_errors_batch(spec, 100, block_generator(17, 0))
    est = variance_path(X, np.array([2500]), VarianceConfig.kernel_lrv())[:, 0]
    hits = np.abs(est / true_lrv(spec) - 1) <= 0.2
    assert hits.mean() >= 0.9, f"{errors}: {hits.mean():.2f} within 20%"
