import json

import pytest
import yaml

from nbsl.cli import main
from nbsl.fixtures import fixture_names, fixture_text


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_fixtures_list_and_dump(capsys):
    code, out, _ = run(capsys, "fixtures", "list")
    assert code == 0 and out.split() == fixture_names()
    code, out, _ = run(capsys, "fixtures", "dump", "liu14")
    assert code == 0 and out == fixture_text("liu14")
    code, _, err = run(capsys, "fixtures", "dump", "nope")
    assert code == 2 and "nope" in err


def test_aps_example(capsys):
    code, out, _ = run(capsys, "aps", "example1_2x2", "--period", "2")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("pi(0) = 0.66666666666")
    assert lines[-1].startswith("p_star = 0.33333333333")


def test_aps_failure_exit_code(capsys, tmp_path):
    doc = yaml.safe_load(fixture_text("example1_2x2"))
    doc["chain"] = {"kind": "periodic_deterministic", "matrices": [[[1, 0], [0, 1]]]}
    doc.pop("analysis", None)
    path = tmp_path / "frozen.yaml"
    path.write_text(yaml.safe_dump(doc))
    code, _, err = run(capsys, "aps", str(path), "--period", "1")
    assert code == 3 and "phase 0" in err


def test_check_certifies_six_agent_window(capsys, tmp_path):
    out_file = tmp_path / "cert.json"
    code, out, _ = run(capsys, "check", "six_agent_aperiodic", "--window", "4", "5", "--gamma", "0.125", "--out", str(out_file))
    assert code == 0
    report = json.loads(out)
    assert report["gamma_epoch"]["certified"]
    assert json.loads(out_file.read_text()) == report


def test_check_failures(capsys):
    code, out, _ = run(capsys, "check", "six_agent_aperiodic", "--window", "5", "7", "--gamma", "0.125")
    assert code == 3 and not json.loads(out)["gamma_epoch"]["certified"]
    code, out, _ = run(capsys, "check", "six_agent_aperiodic", "--window", "0", "16", "--usc", "4", "0.125")
    assert code == 3
    assert json.loads(out)["usc"]["first_failure"]["reason"] == "union-not-strongly-connected"


def test_check_usc_holds(capsys):
    code, out, _ = run(capsys, "check", "usc_consensus_4", "--window", "0", "8", "--usc", "2", "0.1", "--feedback")
    assert code == 0, out
    report = json.loads(out)
    assert report["usc"]["holds"] and report["strong_feedback"]["holds"]


def test_check_balance(capsys):
    code, out, _ = run(capsys, "check", "example1_2x2", "--window", "2", "3", "--balance")
    assert json.loads(out)["balance"]["alpha"] == 0.0 and code == 3


def test_check_invalid_window(capsys):
    code, _, err = run(capsys, "check", "example1_2x2", "--window", "3", "3", "--balance")
    assert code == 2 and "window" in err
    code, _, err = run(capsys, "check", "six_agent_aperiodic", "--window", "0", "4", "--usc", "3", "0.1")
    assert code == 2 and "multiple" in err


def test_simulate_is_reproducible(capsys, tmp_path):
    args = ["simulate", "link_failure_k5", "--seeds", "0..2", "--horizon", "200"]
    code_a, out_a, _ = run(capsys, *args, "--out", str(tmp_path / "a"))
    code_b, _, _ = run(capsys, *args, "--out", str(tmp_path / "b"))
    assert code_a == code_b == 0
    names = [line.rsplit("/", 1)[-1] for line in out_a.splitlines()]
    assert names[0] == "summary.json"
    csvs = [n for n in names if n.endswith(".csv")]
    assert "series_min_true_belief.csv" in csvs
    for name in csvs:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["n_seeds"] == 3 and summary["scenario"] == "link_failure_k5"


def test_simulate_bad_seed_range(capsys, tmp_path):
    code, _, err = run(capsys, "simulate", "liu14", "--seeds", "5..2", "--out", str(tmp_path))
    assert code == 2 and "seeds" in err


def test_verify_lemmas(capsys):
    code, out, _ = run(capsys, "verify-lemmas", "usc_consensus_4", "--samples", "300", "--horizon", "300")
    assert code == 0
    assert not any(json.loads(out)["violations"].values())


@pytest.mark.parametrize("content", ["world: [unclosed\n", "horizon: 5\n"])
def test_invalid_scenario_exits_2(capsys, tmp_path, content):
    path = tmp_path / "bad.yaml"
    path.write_text(content)
    code, _, err = run(capsys, "aps", str(path), "--period", "1")
    assert code == 2 and err.startswith("error:")


def test_unknown_scenario_reference(capsys):
    code, _, err = run(capsys, "aps", "no_such_thing", "--period", "1")
    assert code == 2 and "no_such_thing" in err
