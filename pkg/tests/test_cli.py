"""Command-line surface: run, replay, and the report format."""

import json

import pytest

from safecage.cli import _subsequence_found, evaluate_checks, main
from safecage.sim.scenario import load_scenario, resolve_scenario


def run_cli(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_run_emits_machine_report(capsys, tmp_path):
    rec = tmp_path / "run.ndjson"
    evlog = tmp_path / "events.ndjson"
    code, out = run_cli(capsys, "run", "--scenario", "stop-distance",
                        "--seed", "2", "--record", str(rec),
                        "--events", str(evlog), "--format", "machine")
    assert code == 0
    report = json.loads(out)
    assert report["pass"] is True
    assert report["emergency_stops"] == 1
    assert report["stop_gaps_m"][0] >= 1.0
    events = [json.loads(line) for line in evlog.read_text().splitlines()]
    assert events[0]["type"] == "start"
    assert events[-1]["type"] == "end"
    assert rec.exists()


def test_failed_checks_exit_nonzero(capsys):
    # far too little time for the mission to complete
    code, out = run_cli(capsys, "run", "--scenario", "s1",
                        "--duration", "0.5", "--format", "machine")
    assert code == 1
    assert json.loads(out)["pass"] is False


def test_replay_of_fresh_recording_passes(capsys, tmp_path):
    rec = tmp_path / "run.ndjson"
    run_cli(capsys, "run", "--scenario", "stop-distance", "--record", str(rec),
            "--format", "machine")
    code, out = run_cli(capsys, "replay", str(rec), "--format", "machine")
    assert code == 0
    assert json.loads(out)["ok"] is True


def test_replay_flags_a_tampered_recording(capsys, tmp_path):
    rec = tmp_path / "run.ndjson"
    run_cli(capsys, "run", "--scenario", "stop-distance", "--record", str(rec),
            "--format", "machine")
    lines = rec.read_text().splitlines()
    body = json.loads(lines[5])
    body["outputs"]["driving"] = "Remote Manual Driving"
    lines[5] = json.dumps(body, sort_keys=True)
    rec.write_text("\n".join(lines) + "\n")
    code, out = run_cli(capsys, "replay", str(rec), "--format", "machine")
    assert code == 1
    assert json.loads(out)["first_divergence"]["tick"] == 4


def test_replay_rejects_garbage(capsys, tmp_path):
    bad = tmp_path / "not-a-recording.ndjson"
    bad.write_text('{"schema_version": 3}\n')
    assert main(["replay", str(bad)]) == 2


def test_unknown_scenario_is_an_error():
    with pytest.raises(FileNotFoundError):
        main(["run", "--scenario", "no-such-thing"])


def test_speed_override_changes_target(capsys):
    scenario = load_scenario(resolve_scenario("stop-distance"))
    default_speed = scenario.target_speed
    code, out = run_cli(capsys, "run", "--scenario", "stop-distance",
                        "--speed", "20", "--format", "machine")
    assert code == 0
    assert default_speed != 20 / 3.6  # the override actually changed something


def test_subsequence_matcher_is_ordered():
    events = [{"type": "a"}, {"type": "b"}, {"type": "c"}]
    assert _subsequence_found(events, [{"type": "a"}, {"type": "c"}])
    assert not _subsequence_found(events, [{"type": "c"}, {"type": "a"}])
    assert not _subsequence_found(events, [{"type": "d"}])


def test_evaluate_checks_covers_declared_checks():
    scenario = load_scenario(resolve_scenario("stop-distance"))
    events = [{"type": "start"},
              {"type": "standstill", "gap": 2.0},
              {"type": "end", "emergency_stops": 1, "mission": "Inactive",
               "laps": 0}]
    results = {c["name"]: c["pass"] for c in evaluate_checks(scenario, events)}
    assert results["require_standstill"]
    assert results["min_standstill_gap"]
    assert results["min_emergency_stops"]
