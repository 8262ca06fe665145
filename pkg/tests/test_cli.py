import json
import subprocess
import sys
import textwrap

import pytest

from cogeval import data
from cogeval.cli import main
from cogeval.logs import load_log
from cogeval.roi import load_roi_series


@pytest.fixture
def schemes_file(tmp_path):
    path = tmp_path / "schemes.json"
    assert main(["simulate", "--seed", "4", "--n-trials", "30", "--out", str(path)]) == 0
    return path


def player(tmp_path, body):
    """Write a tiny line-protocol player script and return the --exec command."""
    script = tmp_path / "player.py"
    head = textwrap.dedent("""\
        import json, sys
        for line in sys.stdin:
            msg = json.loads(line)
            p = msg["payload"]
            if p["text"] == "done":
                break
    """)
    tail = "    print(json.dumps(reply), flush=True)\n"
    script.write_text(head + textwrap.indent(textwrap.dedent(body).strip() + "\n", "    ") + tail)
    return f"{sys.executable} {script}"


def test_simulate_is_reproducible(tmp_path, schemes_file):
    again = tmp_path / "again.json"
    main(["simulate", "--seed", "4", "--n-trials", "30", "--out", str(again)])
    assert again.read_bytes() == schemes_file.read_bytes()
    m1 = json.loads((tmp_path / "schemes.json.manifest.json").read_text())
    m2 = json.loads((tmp_path / "again.json.manifest.json").read_text())
    assert m1["outputs"][0]["sha256"] == m2["outputs"][0]["sha256"]
    assert m1["config_hash"] == m2["config_hash"] and m1["seed"] == 4


def test_run_agent_uniform(tmp_path, schemes_file, capsys):
    params = tmp_path / "p.json"
    params.write_text(json.dumps({"alpha": 0.5, "beta": 0.0, "w": 0.5}))
    out = tmp_path / "log.jsonl"
    assert main(["run-agent", "--params", str(params), "--schemes", str(schemes_file), "--out", str(out)]) == 0
    assert "0.693147" in capsys.readouterr().out
    assert len(load_log(out)) == 60


def test_compare_and_report(tmp_path, schemes_file, capsys):
    logs = tmp_path / "logs"
    logs.mkdir()
    for name, beta in [("flat", 0.0), ("sharp", 5.0)]:
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps({"alpha": 0.5, "beta": beta, "w": 0.5}))
        main(["run-agent", "--params", str(p), "--schemes", str(schemes_file), "--out", str(logs / f"{name}.jsonl")])
    base = tmp_path / "baselines.json"
    base.write_text(json.dumps({"self": {"log": "logs/flat.jsonl"}, "summary": {"mean": 0.6, "ci95_halfwidth": 0.01}}))
    capsys.readouterr()
    prefix = tmp_path / "cmp"
    assert main(["compare", str(logs), "--baselines", str(base), "--out", str(prefix)]) == 0
    payload = json.loads((tmp_path / "cmp.json").read_text())
    rows = {(r["model"], r["baseline"]): r for r in payload["rows"]}
    assert len(rows) == 4
    assert rows[("flat", "self")]["p"] == 1.0 and rows[("flat", "self")]["delta_nll"] == 0.0
    for ext in ("md", "csv", "json"):
        assert (tmp_path / f"cmp.{ext}").exists()
    assert (tmp_path / "cmp.manifest.json").exists()
    capsys.readouterr()
    assert main(["report", str(tmp_path / "cmp.json"), "--format", "csv"]) == 0
    assert capsys.readouterr().out == (tmp_path / "cmp.csv").read_text()


def test_compare_reports_every_bad_baseline(tmp_path, schemes_file, capsys):
    log = tmp_path / "m.jsonl"
    main(["run-agent", "--schemes", str(schemes_file), "--out", str(log)])
    base = tmp_path / "b.json"
    base.write_text(json.dumps({"a": {"mean": 0.5}, "b": {"mean": 0.5, "ci95_halfwidth": -1}}))
    capsys.readouterr()
    assert main(["compare", str(log), "--baselines", str(base)]) == 2
    err = capsys.readouterr().err
    assert "'a'" in err and "'b'" in err


def test_score_mcg_table(tmp_path, capsys):
    bundle = data.path("centaur_bundle.json")
    assert main(["score-mcg", str(bundle)]) == 0
    out = capsys.readouterr().out
    for value in ("0.17", "0.83", "4.72", "0.37", "0.67", "1.00", "0.39"):
        assert value in out


def test_score_mcg_outputs_byte_identical(tmp_path, capsys):
    bundle = str(data.path("centaur_bundle.json"))
    main(["score-mcg", bundle, "--out", str(tmp_path / "a")])
    main(["score-mcg", bundle, "--out", str(tmp_path / "b")])
    for ext in ("md", "csv", "json"):
        assert (tmp_path / f"a.{ext}").read_bytes() == (tmp_path / f"b.{ext}").read_bytes()
    ma = json.loads((tmp_path / "a.manifest.json").read_text())
    mb = json.loads((tmp_path / "b.manifest.json").read_text())
    assert [o["sha256"] for o in ma["outputs"]] == [o["sha256"] for o in mb["outputs"]]


def test_score_mcg_weight_override(capsys):
    assert main(["score-mcg", str(data.path("centaur_bundle.json")), "--weights", "1,0,0", "--format", "json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["summary"]["P_M"] == pytest.approx(0.174917, abs=1e-6)


def test_fit_command(tmp_path, schemes_file, capsys):
    log = tmp_path / "m.jsonl"
    p = tmp_path / "p.json"
    p.write_text(json.dumps({"alpha": 0.5, "beta": 3.0, "w": 0.5}))
    main(["run-agent", "--params", str(p), "--schemes", str(schemes_file), "--out", str(log)])
    capsys.readouterr()
    assert main(["fit", "--log", str(log), "--schemes", str(schemes_file), "--format", "json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["mean_nll"] <= payload["grid_best_nll"]


@pytest.mark.parametrize("argv, code", [
    (["score-mcg", "/nonexistent/bundle.json"], 3),
    (["simulate", "--n-trials", "0", "--out", "{tmp}/x.json"], 2),
])
def test_exit_codes(tmp_path, argv, code):
    argv = [a.replace("{tmp}", str(tmp_path)) for a in argv]
    assert main(argv) == code


def test_invalid_json_is_validation_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["score-mcg", str(bad)]) == 2


# -- adapter ------------------------------------------------------------------------------

def test_adapter_sample_trial(tmp_path):
    schemes = tmp_path / "app.json"
    schemes.write_text(data.read_text("sample_scheme.json"))
    betas = {d.stage: d.vector.to_mapping() for d in data.sample_roi_series()}
    cmd = player(tmp_path, f"""
        betas = {betas!r}
        answer = "S" if msg["stage"] == 1 else "D"
        reply = {{"answer": answer, "prob": 0.9, "roi_betas": betas[msg["stage"]]}}
    """)
    out = tmp_path / "run.jsonl"
    assert main(["adapter", "--schemes", str(schemes), "--out", str(out), "--exec", cmd]) == 0
    log = load_log(out)
    assert [(r.stage, r.action) for r in log] == [(1, "S"), (2, "D")]
    assert log[1].state == "blue" and log[1].reward == 1
    roi = load_roi_series(tmp_path / "run.roi.jsonl")
    assert roi.indices == [1, 2]
    assert roi == data.sample_roi_series()


def test_adapter_reprompts_then_aborts(tmp_path, capsys):
    schemes = tmp_path / "app.json"
    schemes.write_text(data.read_text("sample_scheme.json"))
    cmd = player(tmp_path, """
        reply = {"answer": "Q"}
    """)
    out = tmp_path / "run.jsonl"
    assert main(["adapter", "--schemes", str(schemes), "--out", str(out), "--exec", cmd, "--retries", "2"]) == 2
    assert "aborted" in capsys.readouterr().err
    assert len(load_log(out)) == 0


def test_run_session_reprompt_counts():
    from cogeval.adapter import run_session

    scheme = data.sample_schemes()
    sent = []
    replies = iter(['{"answer": "Q"}', "not json", '{"answer": "S"}', '{"answer": "D", "prob": 0.5}'])
    result = run_session(scheme, sent.append, lambda: next(replies), retries=3)
    prompts = [json.loads(m) for m in sent]
    assert not result.aborted
    assert sum("error" in m["payload"] for m in prompts) == 2
    assert prompts[-1]["payload"] == {"text": "done", "previous_reward": 1}
    assert [r.prob_assigned for r in result.log] == [None, 0.5]

    sent.clear()
    replies = iter(['{"answer": "Q"}'] * 5)
    aborted = run_session(scheme, sent.append, lambda: next(replies), retries=2)
    assert aborted.aborted and "trial 151" in aborted.reason
    assert len(sent) == 3


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "cogeval.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("simulate", "run-agent", "adapter", "score-mcg", "fit", "compare", "roi", "report"):
        assert cmd in res.stdout


def test_roi_command(tmp_path, capsys):
    from cogeval.roi import save_roi_series, synthetic_reference

    templates = [d.vector for d in data.sample_roi_series()]
    save_roi_series(synthetic_reference(templates, 10, seed=1), tmp_path / "human.jsonl")
    save_roi_series(synthetic_reference(templates, 10, seed=2), tmp_path / "model.jsonl")
    assert main(["roi", str(tmp_path / "model.jsonl"), "--reference", str(tmp_path / "human.jsonl"),
                 "--format", "json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["rows"][0]["n_decisions"] == 20
