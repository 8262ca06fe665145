import math

import numpy as np
import pytest
from scipy import integrate, stats as sps

from cogeval.errors import ValidationError
from cogeval.logs import DecisionLog, DecisionRecord, dumps_log, loads_log
from cogeval.stats import (
    BaselineSpec,
    ci_from_sd,
    compare_all,
    comparison_markdown,
    format_p,
    nll,
    nll_terms,
    sd_from_ci,
    t_cdf,
    welch,
)


# -- independent Student-t oracle ------------------------------------------------------

def t_pdf(x, df):
    logc = math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi)
    return math.exp(logc - (df + 1) / 2 * math.log1p(x * x / df))


def t_cdf_oracle(x, df):
    if x == 0:
        return 0.5
    area, _ = integrate.quad(t_pdf, 0.0, abs(x), args=(df,), epsabs=1e-13, epsrel=1e-12, limit=200)
    return 0.5 + math.copysign(area, x)


def welch_oracle(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    sa, sb = a.var(ddof=1) / a.size, b.var(ddof=1) / b.size
    t = (a.mean() - b.mean()) / math.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (sa ** 2 / (a.size - 1) + sb ** 2 / (b.size - 1))
    return t, df, 2 * t_cdf_oracle(-abs(t), df)


# -- NLL ----------------------------------------------------------------------------------------

def test_nll_uniform_and_certain():
    assert nll([0.5] * 300).mean_nll == pytest.approx(math.log(2), abs=1e-12)
    certain = nll([1.0] * 300)
    assert certain.mean_nll == 0.0 and certain.total_nll == 0.0
    assert math.copysign(1.0, certain.mean_nll) == 1.0


def test_nll_single_decision():
    s = nll([0.25])
    assert s.mean_nll == pytest.approx(math.log(4))
    assert s.sd == 0.0 and s.ci95_halfwidth == 0.0


def test_nll_clamp():
    s = nll([0.0, 1.0])
    assert s.n_clamped == 1
    assert s.total_nll == pytest.approx(-math.log(1e-12))
    assert nll([0.0], clamp=1e-6).mean_nll < nll([0.0], clamp=1e-12).mean_nll


def test_nll_clamp_monotone():
    probs = [1e-15, 1e-9, 0.3]
    prev = None
    for c in (1e-14, 1e-12, 1e-10, 1e-8):
        cur = nll(probs, clamp=c).mean_nll
        if prev is not None:
            assert cur <= prev
        prev = cur


def test_nll_ci_uses_normal_quantile():
    s = nll([0.2, 0.4, 0.6, 0.8])
    terms = -np.log([0.2, 0.4, 0.6, 0.8])
    assert s.ci95_halfwidth == pytest.approx(sps.norm.ppf(0.975) * terms.std(ddof=1) / 2, abs=1e-12)


@pytest.mark.parametrize("bad", [[], [1.2], [-0.1], [None]])
def test_nll_rejects(bad):
    with pytest.raises(ValidationError):
        nll(bad)


def test_nll_from_decision_log():
    log = DecisionLog([DecisionRecord(1, 1, "start", "S", 0.5), DecisionRecord(1, 2, "blue", "D", 0.25, 1)])
    assert nll_terms(log) == pytest.approx([math.log(2), math.log(4)])
    missing = DecisionLog([DecisionRecord(3, 1, "start", "S", None)])
    with pytest.raises(ValidationError, match="trial 3"):
        nll(missing)


def test_decision_log_round_trip():
    log = DecisionLog([DecisionRecord(1, 1, "start", "S", 0.5, None, "common"),
                       DecisionRecord(1, 2, "blue", "D", 0.123456789, 1, "common")])
    text = dumps_log(log)
    assert loads_log(text) == log
    assert dumps_log(loads_log(text)) == text


# -- CI conversions -------------------------------------------------------------------------------

def test_sd_from_ci_frozen():
    assert sd_from_ci(0.0113, 300) == pytest.approx(0.09985986620117067, abs=1e-15)
    assert ci_from_sd(sd_from_ci(0.0113, 300), 300) == pytest.approx(0.0113, abs=1e-15)


@pytest.mark.parametrize("hw, n", [(-0.1, 300), (0.01, 1), (0.01, 2.5)])
def test_sd_from_ci_rejects(hw, n):
    with pytest.raises(ValidationError):
        sd_from_ci(hw, n)


# -- t distribution ------------------------------------------------------------------------------

@pytest.mark.parametrize("df", [1, 2, 10, 100, 1000])
@pytest.mark.parametrize("x", [-4.0, -1.3, 0.0, 0.7, 2.5])
def test_t_cdf_against_quadrature(x, df):
    assert t_cdf(x, df) == pytest.approx(t_cdf_oracle(x, df), abs=1e-10)


def test_t_cdf_closed_forms():
    assert t_cdf(1.0, 1) == pytest.approx(0.75, abs=1e-15)
    assert t_cdf(0.0, 7.3) == 0.5
    assert t_cdf(math.inf, 3) == 1.0
    with pytest.raises(ValidationError):
        t_cdf(0.0, 0)


# -- Welch ----------------------------------------------------------------------------------------

def test_welch_identical_samples():
    x = np.random.default_rng(0).normal(0, 1, 50)
    r = welch(x, x)
    assert r.t_statistic == 0.0 and r.p_value == 1.0


@pytest.mark.parametrize("seed", range(5))
def test_welch_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(0.1, 1.0, 40 + 10 * seed)
    b = rng.normal(0.0, 2.0, 25)
    t, df, p = welch_oracle(a, b)
    r = welch(a, b)
    assert r.t_statistic == pytest.approx(t, abs=1e-12)
    assert r.df == pytest.approx(df, rel=1e-12)
    assert r.p_value == pytest.approx(p, abs=1e-6)
    ref = sps.ttest_ind(a, b, equal_var=False)
    assert r.p_value == pytest.approx(ref.pvalue, abs=1e-12)


def test_welch_antisymmetric():
    rng = np.random.default_rng(9)
    a, b = rng.normal(0, 1, 30), rng.normal(0.5, 1, 30)
    ab, ba = welch(a, b), welch(b, a)
    assert ab.t_statistic == -ba.t_statistic
    assert ab.p_value == ba.p_value


def test_welch_degenerate():
    r = welch([1.0, 1.0, 1.0], [2.0, 2.0])
    assert r.degenerate and r.p_value == 0.0 and r.t_statistic == -math.inf
    same = welch([1.0, 1.0], [1.0, 1.0])
    assert same.degenerate and same.p_value == 1.0


def test_welch_against_summary_baseline():
    rng = np.random.default_rng(3)
    a = rng.normal(0.5, 0.1, 300)
    base = BaselineSpec(0.48, 0.0113, 300)
    r = welch(a, base)
    sd = sd_from_ci(0.0113, 300)
    va, vb = a.var(ddof=1) / 300, sd ** 2 / 300
    assert r.t_statistic == pytest.approx((a.mean() - 0.48) / math.sqrt(va + vb), rel=1e-12)


def test_welch_null_calibration_small():
    rng = np.random.default_rng(100)
    hits = sum(welch(rng.normal(0, 1, 30), rng.normal(0, 3, 20)).p_value < 0.05 for _ in range(400))
    assert 0.02 <= hits / 400 <= 0.09


# -- comparisons -------------------------------------------------------------------------------------

def _samples(rng):
    models = {m: rng.normal(mu, 0.2, 300) for m, mu in [("alpha", 0.5), ("beta", 0.55), ("gamma", 0.6)]}
    bases = {f"b{i}": BaselineSpec(0.5 + 0.01 * i, 0.02, 300) for i in range(5)}
    return models, bases


def test_compare_all_grid_and_order():
    models, bases = _samples(np.random.default_rng(1))
    rows = compare_all(models, bases)
    assert len(rows) == 15
    assert [(r.model, r.baseline) for r in rows[:6]] == [("alpha", f"b{i}") for i in range(5)] + [("beta", "b0")]
    md = comparison_markdown(rows)
    assert md.count("\n") == 5 and "b4 p" in md


def test_compare_all_translation_equivariant():
    rng = np.random.default_rng(2)
    models, bases = _samples(rng)
    rows = compare_all(models, bases)
    shifted = compare_all({k: v + 3.0 for k, v in models.items()},
                          {k: BaselineSpec(b.mean + 3.0, b.ci95_halfwidth, b.n) for k, b in bases.items()})
    for r, s in zip(rows, shifted):
        assert s.mean_delta == pytest.approx(r.mean_delta, abs=1e-9)
        assert s.p_value == pytest.approx(r.p_value, abs=1e-9)


def test_compare_all_rejects_empty():
    with pytest.raises(ValidationError):
        compare_all({}, {"b": [0.0, 1.0]})
    with pytest.raises(ValidationError):
        compare_all({"m": [0.0, 1.0]}, {})


def test_format_p():
    assert format_p(0.0947) == "0.0947"
    assert format_p(2.3e-5) == "2.30e-05"
    assert format_p(0.0) == "<1e-12"
