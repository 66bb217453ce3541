"""Smoke tests for the python bindings: thin checks that the surface is wired
up and deterministic, not a re-run of the C++ suites."""

import math

import pytest

import m3a


def test_loglogistic_basics():
    p = m3a.LogLogisticParams(300.0, 2.0)
    assert m3a.ll_cdf(300.0, p) == pytest.approx(0.5)
    u = 0.73
    assert m3a.ll_cdf(m3a.ll_quantile(u, p), p) == pytest.approx(u, abs=1e-12)
    with pytest.raises(ValueError):
        m3a.ll_quantile(1.5, p)


def test_fit_round_trip():
    truth = m3a.LogLogisticParams(5.0, 3.0)
    data = m3a.ll_sample(2000, truth, 99)
    fit = m3a.ll_fit_mle(data)
    assert fit.alpha == pytest.approx(5.0, rel=0.1)
    assert fit.beta == pytest.approx(3.0, rel=0.1)


def test_camellog_em_recovery_and_determinism():
    truth = m3a.CamelLogParams(
        0.75, m3a.LogLogisticParams(300.0, 2.0), m3a.LogLogisticParams(25200.0, 2.0)
    )
    data = m3a.camellog_sample(1500, truth, 7)
    a = m3a.camellog_fit_em(data, seed=3)
    b = m3a.camellog_fit_em(data, seed=3)
    assert a.params.theta == b.params.theta
    assert a.train_loglik == b.train_loglik
    assert a.params.theta == pytest.approx(0.75, abs=0.1)
    assert a.params.in_component.alpha <= a.params.off_component.alpha
    with pytest.raises(m3a.InsufficientDataError):
        m3a.camellog_fit_em([1.0, 2.0, 3.0])


def test_metamodel_surface():
    p = m3a.MetaClickParams(
        1.12, m3a.LogLogisticParams(3.0, 6.0), m3a.LogLogisticParams(5.7, 18.0)
    )
    assert m3a.gumbel_copula_cdf(0.4, 0.9, 1.0) == pytest.approx(0.36)
    rm = m3a.metaclick_sample(500, p, 11)
    fit = m3a.fit_metaclick(rm)
    assert fit.params.eta == pytest.approx(1.12, abs=0.15)
    value, clamped = m3a.metaclick_logpdf(3.0, 5.7, p)
    assert math.isfinite(value)
    assert not clamped
    assert m3a.kendall_tau([1.0, 2.0, 3.0], [1.0, 3.0, 2.0]) == pytest.approx(1.0 / 3.0)


def test_gof_surface():
    truth = m3a.CamelLogParams(
        0.75, m3a.LogLogisticParams(300.0, 2.0), m3a.LogLogisticParams(25200.0, 2.0)
    )
    data = m3a.camellog_sample(400, truth, 21)
    scores = m3a.evaluate_models(data, split_seed=5, em_seed=9)
    assert [s.model_name for s in scores] == ["camel_log", "exp_mixture", "pareto_mixture"]
    assert all(s.error == "" for s in scores)
    assert scores[0].test_loglik > scores[2].test_loglik
    ks = m3a.ks_two_sample([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert ks.statistic == 0.0


def test_detect_pipeline():
    truth = m3a.CamelLogParams(
        0.75, m3a.LogLogisticParams(300.0, 2.0), m3a.LogLogisticParams(25200.0, 2.0)
    )
    bot = m3a.CamelLogParams(
        30.0 / 31.0, m3a.LogLogisticParams(300.0, 2.0), m3a.LogLogisticParams(25200.0, 2.0)
    )
    iats = {
        "user%02d" % i: m3a.camellog_sample(400, truth, 100 + i) for i in range(32)
    }
    iats["bot"] = m3a.camellog_sample(400, bot, 999)
    out = m3a.detect(iats, seed=4, threads=2)
    assert len(out["scored"]) + len(out["auto_outliers"]) == 33
    assert out["scored"][0]["user_id"] == "bot"
    assert out["scored"][0]["rank"] == 1
    assert out["eta"] >= 1.0
