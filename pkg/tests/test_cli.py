import jsonschema
import orjson
import pytest
from click.testing import CliRunner

from core.model import figure_adversary, make_adversary
from main import cli, main
from tools.report_schema import report_json_schema


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args):
    result = runner.invoke(cli, list(args))
    payload = orjson.loads(result.stdout_bytes) if result.stdout_bytes.strip() else None
    return result, payload


def test_simulate_writes_a_valid_report(runner, adversary_file):
    path = adversary_file(make_adversary(3, 1, (0, 1, 1), [(1, 1, {2})]))
    result, payload = invoke(runner, "simulate", "--protocol", "p0", "--adversary", str(path), "--task", "consensus")
    assert result.exit_code == 0, result.output
    jsonschema.validate(payload, report_json_schema())
    assert payload["passed"]
    assert payload["command"]["verb"] == "simulate"
    assert payload["results"]["verdict"]["passed"]
    processes = payload["results"]["schedule"]["processes"]
    assert processes[0]["decision_time"] == 0
    assert processes[0]["crash_round"] == 1


def test_simulate_as_csv(runner, adversary_file):
    path = adversary_file(make_adversary(3, 1, (1, 1, 1)))
    result = runner.invoke(cli, ["--output", "csv", "simulate", "--protocol", "opt0", "--adversary", str(path)])
    assert result.exit_code == 0
    lines = result.stdout.strip().splitlines()
    assert lines[0].split(",") == ["process", "decision_time", "decision_value", "crash_round"]
    assert len(lines) == 4


def test_simulate_as_csv_after_the_verb(runner, adversary_file):
    path = adversary_file(make_adversary(3, 1, (1, 1, 1)))
    result = runner.invoke(cli, ["simulate", "--protocol", "opt0", "--adversary", str(path), "--output", "csv"])
    assert result.exit_code == 0, result.output
    lines = result.stdout.strip().splitlines()
    assert lines[0].split(",") == ["process", "decision_time", "decision_value", "crash_round"]
    assert len(lines) == 4


def test_explicit_zero_horizon_is_not_the_default(runner, adversary_file):
    path = adversary_file(make_adversary(3, 1, (1, 1, 1)))
    result, payload = invoke(runner, "simulate", "--protocol", "opt0", "--adversary", str(path), "--horizon", "0")
    assert result.exit_code == 2
    assert payload["error"].startswith("HorizonTooShort")
    result, payload = invoke(runner, "verify", "--n", "2", "--t", "1", "--horizon", "0",
                             "--protocol", "opt0", "--task", "consensus")
    assert result.exit_code == 2
    assert payload["error"].startswith("HorizonTooShort")


def test_verify_sweeps_the_domain(runner):
    result, payload = invoke(runner, "verify", "--n", "2", "--t", "1", "--workers", "1",
                             "--protocol", "opt0", "--task", "consensus")
    assert result.exit_code == 0
    assert payload["results"]["runs"] == 52
    assert payload["results"]["failed_runs"] == 0


def test_verify_failure_exits_one(runner):
    result, payload = invoke(runner, "verify", "--n", "3", "--t", "1", "--workers", "1",
                             "--protocol", "opt0", "--task", "uniform-consensus")
    assert result.exit_code == 1
    assert not payload["passed"]
    assert payload["error"] is None


def test_compare_reports_both_modes(runner):
    result, payload = invoke(runner, "compare", "--n", "2", "--t", "1", "--workers", "1", "--a", "opt0", "--b", "p0")
    assert result.exit_code == 0
    assert payload["results"]["per_process"]["relation"] == "strictly-dominates"
    assert payload["results"]["last_decider"]["mode"] == "last-decider"


def test_beat_search_finding_exits_one(runner):
    result, payload = invoke(runner, "beat-search", "--n", "2", "--t", "1", "--target", "p0", "--task", "consensus")
    assert result.exit_code == 1
    assert payload["results"]["found"]
    assert payload["error"] is None


def test_unknown_protocol_is_a_usage_error(runner):
    result, payload = invoke(runner, "verify", "--n", "2", "--t", "1", "--protocol", "opt2", "--task", "consensus")
    assert result.exit_code == 2
    assert not payload["passed"]
    assert payload["error"].startswith("InvalidProtocolSpec")
    assert payload["results"] == {}


def test_oversized_domain_is_refused(runner):
    result, payload = invoke(runner, "oracle-check", "--n", "9", "--t", "1")
    assert result.exit_code == 2
    assert payload["error"].startswith("DomainTooLarge")


def test_predicates_on_the_figure(runner, adversary_file):
    path = adversary_file(figure_adversary())
    result, payload = invoke(runner, "predicates", "--adversary", str(path), "--process", "1", "--time", "2")
    assert result.exit_code == 0
    hidden = payload["results"]["hidden"]
    assert hidden["capacity"] == 3
    assert hidden["by_level"] == [[2, 3, 4], [5, 6, 7], [8, 9, 10]]
    assert payload["results"]["majority"]["maj_vals"] == 1


def test_codec_check_over_all_protocols(runner):
    result, payload = invoke(runner, "codec-check", "--n", "2", "--t", "1", "--workers", "1", "--strict")
    assert result.exit_code == 0
    assert payload["results"]["mismatches"] == 0
    assert "opt0" in payload["results"]["protocols"]


def test_codec_check_sampling(runner):
    result, payload = invoke(runner, "codec-check", "--n", "5", "--samples", "20", "--seed", "1")
    assert result.exit_code == 0
    assert payload["results"]["sampled"]
    assert payload["results"]["domain"]["t"] == 2


def test_codec_check_needs_t_without_samples(runner):
    result = runner.invoke(cli, ["codec-check", "--n", "3"])
    assert result.exit_code == 2


def test_main_returns_exit_codes(adversary_file, capsys):
    path = adversary_file(make_adversary(2, 1, (0, 1)))
    assert main(["simulate", "--protocol", "opt0", "--adversary", str(path)]) == 0
    assert main(["verify", "--n", "2"]) == 2
    assert main(["codec-check", "--n", "3"]) == 2
