import json

import pytest

from choreo.cli import resolve_seed, run
from choreo.common.paths import counterexample_path
from choreo.constants import EXIT_HOLDS, EXIT_INCONCLUSIVE, EXIT_USAGE, EXIT_VIOLATION, SEED_ENV_VAR


def _run(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


# =============================================================================
# enumerate / check
# =============================================================================

def test_enumerate_simple_vote(capsys):
    code, out = _run(capsys, "enumerate")
    assert code == EXIT_HOLDS
    assert out["protocol"] == "simplevote"
    assert out["count"] == 2
    assert out["instance"]["inputs"] == {"L": [True], "R": [True, True, False]}


def test_enumerate_single_node_bosco_is_a_singleton(capsys):
    code, out = _run(capsys, "enumerate", "--protocol", "bosco", "--n", "1", "--f", "0", "--b", "0",
                     "--inputs", '{"R": [true]}')
    assert code == EXIT_HOLDS
    assert out["count"] == 1


def test_enumerate_without_faults_needs_no_byzantine_flag(capsys):
    code, out = _run(capsys, "enumerate", "--protocol", "bosco", "--n", "1", "--f", "0")
    assert code == EXIT_HOLDS
    assert out["instance"]["b"] == 0
    assert out["count"] == 1


def test_check_one_step_holds_above_bound(capsys):
    code, out = _run(capsys, "check", "one-step", "--n", "8")
    assert code == EXIT_HOLDS
    assert out["verdict"] == "holds"
    assert out["precondition_met"]


def test_check_one_step_violation_writes_counterexample(capsys):
    code = run(["check", "one-step", "--n", "7"])
    captured = capsys.readouterr()
    assert code == EXIT_VIOLATION
    assert json.loads(captured.out)["verdict"] == "violated"
    assert "precondition not met" in captured.err
    path = counterexample_path("one-step")
    assert str(path) in captured.err
    assert "counterexample" in json.loads(path.read_text())


def test_check_adequacy_holds(capsys):
    code, out = _run(capsys, "check", "adequacy")
    assert code == EXIT_HOLDS
    assert out["details"]["equal"]


def test_check_adequacy_inconclusive_on_budget(capsys):
    code, out = _run(capsys, "check", "adequacy", "--max-states", "3")
    assert code == EXIT_INCONCLUSIVE
    assert out["verdict"] == "inconclusive"
    assert not out["exhaustive"]


def test_check_output_does_not_depend_on_jobs(capsys):
    _, serial = _run(capsys, "check", "adequacy", "--protocol", "bosco", "--n", "3", "--inputs", '{"R": [true, false]}')
    _, threaded = _run(capsys, "check", "adequacy", "--protocol", "bosco", "--n", "3", "--inputs", '{"R": [true, false]}',
                       "--jobs", "2")
    assert serial == threaded


def test_alignment_check(capsys):
    code, out = _run(capsys, "check", "alignment", "--traces", "10", "--seed", "3")
    assert code == EXIT_HOLDS
    assert out["details"]["traces"] == 10


# =============================================================================
# Usage errors
# =============================================================================

def test_unknown_check_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        run(["check", "liveness"])
    assert info.value.code == EXIT_USAGE


@pytest.mark.parametrize("argv", [
    ["enumerate", "--jobs", "0"],
    ["enumerate", "--inputs", "[1, 2]"],
    ["enumerate", "--inputs", "{not json"],
    ["enumerate", "--inputs", '{"R": [true]}'],
    ["check", "adequacy", "--max-states", "0"],
])
def test_bad_values_are_usage_errors(capsys, argv):
    assert run(argv) == EXIT_USAGE
    assert "choreo: error:" in capsys.readouterr().err


def test_seed_falls_back_to_environment(monkeypatch):
    assert resolve_seed(9) == 9
    monkeypatch.setenv(SEED_ENV_VAR, "5")
    assert resolve_seed(None) == 5
    monkeypatch.setenv(SEED_ENV_VAR, "")
    assert resolve_seed(None) == 0


def test_bad_seed_environment_is_a_usage_error(capsys, monkeypatch):
    monkeypatch.setenv(SEED_ENV_VAR, "abc")
    assert run(["enumerate"]) == EXIT_USAGE


# =============================================================================
# Config files
# =============================================================================

def test_config_file_supplies_defaults_and_flags_win(tmp_path, capsys):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"protocol": "bosco", "n": 5, "inputs": {"R": [True, True, True]}}))
    code, out = _run(capsys, "enumerate", "--config", str(config), "--n", "4")
    assert code == EXIT_HOLDS
    assert out["protocol"] == "bosco"
    assert out["instance"]["n"] == 4


@pytest.mark.parametrize("content", ['{"colour": "blue"}', "[1]", "{nope"])
def test_bad_config_file_is_a_usage_error(tmp_path, capsys, content):
    config = tmp_path / "run.json"
    config.write_text(content)
    with pytest.raises(SystemExit) as info:
        run(["enumerate", "--config", str(config)])
    assert info.value.code == EXIT_USAGE


# =============================================================================
# simulate / replay
# =============================================================================

def test_simulate_is_deterministic_per_seed(tmp_path, capsys):
    first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    code, out = _run(capsys, "simulate", "--seed", "7", "--out", str(first))
    assert code == EXIT_HOLDS
    assert out["permissible"] and out["completed"] and out["in_denotation"]
    _run(capsys, "simulate", "--seed", "7", "--out", str(second))
    assert first.read_bytes() == second.read_bytes()


def test_simulate_default_path_uses_environment_seed(capsys, monkeypatch, choreo_output_dir):
    monkeypatch.setenv(SEED_ENV_VAR, "5")
    code, out = _run(capsys, "simulate", "--protocol", "seqpaxos", "--dump-channels")
    assert code == EXIT_HOLDS
    assert out["trace"].endswith("seqpaxos-seed5.jsonl")
    assert out["trace"].startswith(str(choreo_output_dir))
    assert len(out["state"]["channels"]) == 3


@pytest.mark.parametrize("align", [[], ["--align"]])
def test_replay_of_simulated_trace(tmp_path, capsys, align):
    path = tmp_path / "run.jsonl"
    _, simulated = _run(capsys, "simulate", "--protocol", "bosco", "--seed", "2", "--out", str(path))
    code, out = _run(capsys, "replay", str(path), *align)
    assert code == EXIT_HOLDS
    assert out["permissible"]
    assert out["labels"] == simulated["labels"]
    assert out["output"] == simulated["output"]


def test_replay_of_tampered_trace_fails(tmp_path, capsys):
    path = tmp_path / "run.jsonl"
    _run(capsys, "simulate", "--seed", "1", "--out", str(path))
    lines = path.read_text().splitlines()
    first_send = next(line for line in lines[1:] if '"kind": "send"' in line)
    path.write_text("\n".join(lines + [first_send]) + "\n")

    code, out = _run(capsys, "replay", str(path))
    assert code == EXIT_VIOLATION
    assert not out["permissible"]
    assert out["failed_at"] == len(lines) - 1


def test_replay_of_missing_file_is_a_usage_error(tmp_path, capsys):
    assert run(["replay", str(tmp_path / "absent.jsonl")]) == EXIT_USAGE
