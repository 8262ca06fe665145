"""End-to-end acceptance checks, one test per criterion.

Run ``pytest tests/test_acceptance.py`` and read the "acceptance criteria"
section of the terminal summary for one PASS/FAIL line per check.
"""

import math
import time

import numpy as np
import pytest

from cogeval import data
from cogeval.agents import AgentParams, fit_params, run_agent, stay_signature
from cogeval.cli import main
from cogeval.errors import ParseError
from cogeval.logs import dumps_log, loads_log
from cogeval.mcg import display, score_bundle
from cogeval.roi import (
    ROI_NAMES,
    RoiVector,
    cosine,
    dumps_roi_series,
    loads_roi_series,
    magnitude_errors,
    pearson,
)
from cogeval.stats import nll, welch
from cogeval.twostep import COMMON, SessionConfig, drift, generate_schemes, load_schemes, save_schemes, transition

from test_stats import welch_oracle

criterion = pytest.mark.criterion


# -- MCG golden reproduction -------------------------------------------------------------

@pytest.fixture(scope="module")
def centaur():
    start = time.perf_counter()
    result = score_bundle(data.centaur_bundle())
    return result, time.perf_counter() - start


GOLDEN_DISPLAY = [
    ("S_M", lambda r: r.fsr.structural_score, "0.17"),
    ("F_M", lambda r: r.fsr.functional_score, "0.83"),
    ("FSR_raw", lambda r: r.fsr.raw_ratio, "4.72"),
    ("FSR_norm", lambda r: r.fsr.normalized, "0.18"),
    ("G_M", lambda r: r.generality, "0.37"),
    ("A_M", lambda r: r.performance.accuracy, "0.67"),
    ("E_M", lambda r: r.performance.error_pattern, "1.00"),
    ("PM_M", lambda r: r.performance.score, "0.83"),
    ("P_M", lambda r: r.score, "0.39"),
]


@criterion("MCG golden reproduction: 2-decimal display")
@pytest.mark.parametrize("name, get, shown", GOLDEN_DISPLAY, ids=[g[0] for g in GOLDEN_DISPLAY])
def test_mcg_golden_display(centaur, name, get, shown):
    result, _ = centaur
    assert display(get(result)) == shown, f"{name} = {get(result)!r}"


GOLDEN_INTERNAL = [
    ("FSR_norm", lambda r: r.fsr.normalized, 0.1749),
    ("G_M", lambda r: r.generality, 0.375),
    ("PM_M", lambda r: r.performance.score, 0.8334),
    ("P_M", lambda r: r.score, 0.3896),
]


@criterion("MCG golden reproduction: internal values within 5e-3")
@pytest.mark.parametrize("name, get, target", GOLDEN_INTERNAL, ids=[g[0] for g in GOLDEN_INTERNAL])
def test_mcg_golden_internal(centaur, name, get, target):
    result, _ = centaur
    assert abs(get(result) - target) <= 5e-3


@criterion("MCG golden reproduction: runtime < 1 s")
def test_mcg_runtime(centaur):
    assert centaur[1] < 1.0


# -- simulator statistics -------------------------------------------------------------------

@criterion("Simulator statistics")
def test_simulator_statistics():
    start = time.perf_counter()
    scheme = data.sample_schemes()[0]
    rng = np.random.default_rng(2025)
    n = 100_000
    freq = sum(transition("S", scheme, rng, 0.7)[1] == COMMON for _ in range(n)) / n
    assert abs(freq - 0.7) <= 0.01

    p = rng.uniform(0.25, 0.75, 4)
    assert np.array_equal(drift(p, 0.0, (0.25, 0.75), rng), p)

    schemes = generate_schemes(SessionConfig(n_trials=10_000, seed=7))
    vals = [v for s in schemes for row in s.probs.values() for v in row.values()]
    assert min(vals) >= 0.25 and max(vals) <= 0.75
    walkers = rng.uniform(0.25, 0.75, 10_000)
    for _ in range(50):
        walkers = drift(walkers, 0.3, (0.25, 0.75), rng)
        assert walkers.min() >= 0.25 and walkers.max() <= 0.75
    assert time.perf_counter() - start < 10.0


# -- agent signatures ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def clock():
    return {"start": time.perf_counter()}


@criterion("Agent signatures: model-free reward effect without transition interaction")
def test_model_free_signature(clock):
    schemes = generate_schemes(SessionConfig(n_trials=50_000, seed=101))
    sig = stay_signature(run_agent(AgentParams(0.5, 5.0, 0.0), schemes, seed=101), schemes)
    assert sig.reward_effect > 0.05
    assert abs(sig.p(True, True) - sig.p(True, False)) < 0.03
    assert abs(sig.interaction) < 0.03


@criterion("Agent signatures: model-based interaction > 0.1")
def test_model_based_signature(clock):
    schemes = generate_schemes(SessionConfig(n_trials=50_000, seed=102))
    sig = stay_signature(run_agent(AgentParams(0.5, 5.0, 1.0), schemes, seed=102), schemes)
    assert sig.interaction > 0.1


@criterion("Agent signatures: hybrid w recovery median error < 0.15")
def test_hybrid_recovery(clock):
    errors = []
    for w_true in (0.25, 0.75):
        for seed in range(20):
            schemes = generate_schemes(SessionConfig(n_trials=1000, seed=1000 + seed))
            log = run_agent(AgentParams(0.5, 5.0, w_true), schemes, seed=seed)
            errors.append(abs(fit_params(log, schemes).params.w - w_true))
    assert float(np.median(errors)) < 0.15


@criterion("Agent signatures: runtime < 2 min")
def test_agent_runtime(clock):
    assert time.perf_counter() - clock["start"] < 120.0


# -- NLL exactness --------------------------------------------------------------------------------

@criterion("NLL exactness")
def test_nll_exactness():
    schemes = generate_schemes(SessionConfig(n_trials=150, seed=5))
    uniform = run_agent(AgentParams(0.5, 0.0, 0.5), schemes, seed=5)
    assert len(uniform) == 300
    assert abs(nll(uniform).mean_nll - math.log(2)) <= 1e-6
    certain = nll([1.0] * 300)
    assert certain.mean_nll == 0.0 and certain.total_nll == 0.0


# -- Welch correctness ----------------------------------------------------------------------------

@criterion("Welch correctness")
def test_welch_correctness():
    start = time.perf_counter()
    rng = np.random.default_rng(11)
    x = rng.normal(0.5, 0.1, 300)
    same = welch(x, x)
    assert same.t_statistic == 0.0 and same.p_value == 1.0

    for _ in range(20):
        a = rng.normal(0.0, 1.0, int(rng.integers(10, 300)))
        b = rng.normal(rng.normal(0, 0.3), rng.uniform(0.5, 2), int(rng.integers(10, 300)))
        _, _, p = welch_oracle(a, b)
        assert abs(welch(a, b).p_value - p) <= 1e-6

    hits = sum(welch(rng.normal(0, 1, 300), rng.normal(0, 1, 300)).p_value < 0.05 for _ in range(2000))
    assert 0.03 <= hits / 2000 <= 0.07
    assert time.perf_counter() - start < 60.0


# -- ROI metrics --------------------------------------------------------------------------------------

@criterion("ROI metrics")
def test_roi_metrics():
    series = data.sample_roi_series()
    for d in series:
        assert abs(pearson(d.vector, d.vector) - 1.0) <= 1e-12
        assert magnitude_errors(d.vector, d.vector).rmse == 0.0

    rng = np.random.default_rng(3)
    for _ in range(1000):
        a, b = rng.normal(0, 1, 14), rng.normal(0, 1, 14)
        k, c = rng.uniform(0.01, 100), rng.normal(0, 10)
        ca, cb = a - a.mean(), b - b.mean()
        r_def = math.fsum(ca * cb) / math.sqrt(math.fsum(ca * ca) * math.fsum(cb * cb))
        cos_def = math.fsum(a * b) / math.sqrt(math.fsum(a * a) * math.fsum(b * b))
        assert abs(pearson(a, k * b + c) - r_def) <= 1e-12
        assert abs(cosine(a, k * b) - cos_def) <= 1e-12

    names = list(ROI_NAMES)
    for keys in (names[:13], names + ["X_Right Caudate"]):
        with pytest.raises(ParseError):
            RoiVector.from_mapping({k: 0.1 for k in keys})


# -- round trips ---------------------------------------------------------------------------------------

@criterion("Round trips")
def test_round_trips(tmp_path):
    schemes = generate_schemes(SessionConfig(n_trials=150, seed=9))
    save_schemes(schemes, tmp_path / "s.json")
    assert load_schemes(tmp_path / "s.json") == schemes

    log = run_agent(AgentParams(0.4, 3.0, 0.5, 0.1), schemes, seed=9)
    text = dumps_log(log)
    assert loads_log(text) == log and dumps_log(loads_log(text)) == text

    roi_text = data.read_text("sample_roi_trial1.jsonl")
    assert dumps_roi_series(loads_roi_series(roi_text)) == dumps_roi_series(data.sample_roi_series())
    assert loads_roi_series(dumps_roi_series(loads_roi_series(roi_text))) == loads_roi_series(roi_text)

    outputs = []
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        main(["simulate", "--seed", "9", "--out", str(d / "schemes.json")])
        main(["run-agent", "--schemes", str(d / "schemes.json"), "--seed", "9", "--out", str(d / "log.jsonl")])
        main(["score-mcg", str(data.path("centaur_bundle.json")), "--out", str(d / "mcg")])
        outputs.append({p.name: p.read_bytes() for p in sorted(d.iterdir()) if "manifest" not in p.name})
    assert outputs[0] == outputs[1] and len(outputs[0]) == 5
