import json
from pathlib import Path

import pytest

from hitset import cli
from hitset.adversary import Adversary
from hitset.harness import (
    ConfigError,
    naive_min_hitting_sets,
    random_crash_schedule,
    run_suite,
    staggered_schedule,
)
from hitset.report import render_report
import random


ADV = Adversary.of(4, [{0, 1}, {2, 3}])


def schedule_prefix(schedule, count=40):
    return [pid for pid, _ in zip(schedule, range(count))]


def test_random_crash_schedule_reproducible():
    one = random_crash_schedule(9, range(4), ADV, True)
    two = random_crash_schedule(9, range(4), ADV, True)
    assert one.spec() == two.spec()
    assert schedule_prefix(one) == schedule_prefix(two)


def test_random_crash_schedule_resilient_by_construction():
    for seed in range(30):
        schedule = random_crash_schedule(seed, range(4), ADV, True)
        assert ADV.is_resilient(schedule.correct)


def test_random_crash_schedule_non_resilient():
    for seed in range(30):
        schedule = random_crash_schedule(seed, range(4), ADV, False)
        assert not ADV.is_resilient(schedule.correct)


def test_random_crash_schedule_impossible_constraint():
    lonely = Adversary.of(4, [{3}])
    with pytest.raises(ConfigError):
        random_crash_schedule(1, {0, 1}, lonely, l_resilient=True)


def test_staggered_schedule_reproducible():
    one = staggered_schedule(random.Random(4), [0, 1, 2])
    two = staggered_schedule(random.Random(4), [0, 1, 2])
    assert schedule_prefix(one) == schedule_prefix(two)


def test_naive_oracle_trivial_cases():
    assert naive_min_hitting_sets([0, 1], [frozenset({0})]) == (1, ((0,),))
    assert naive_min_hitting_sets([1], [frozenset({0})]) is None


def test_run_suite_unknown():
    with pytest.raises(ConfigError):
        run_suite("nope")


def test_suite_reports_have_metadata():
    report = run_suite("hs", cases=20, seed=3)
    assert report.suite == "hs"
    assert report.ok
    assert report.exit_code() == 0
    assert report.duration >= 0
    payload = report.to_dict()
    assert payload["cases"] == 20


def test_render_report_files(tmp_path):
    report = run_suite("hs", cases=12, seed=3)
    created = render_report(report, tmp_path / "out")
    names = {Path(p).name for p in created}
    assert {"report.json", "cases.csv", "summary.png", "metrics.png"} <= names
    data = json.loads((tmp_path / "out" / "report.json").read_text())
    assert data["suite"] == "hs"
    header = (tmp_path / "out" / "cases.csv").read_text().splitlines()[0]
    assert header == "suite,case,ok,kind,metric,detail"


@pytest.fixture()
def adv_file(tmp_path):
    path = tmp_path / "adv.json"
    path.write_text(ADV.to_json())
    return str(path)


@pytest.fixture()
def inputs_file(tmp_path):
    path = tmp_path / "inputs.json"
    path.write_text(json.dumps({str(pid): pid + 1 for pid in range(4)}))
    return str(path)


def test_cli_adv_hs(adv_file, capsys):
    assert cli.main(["adv", "hs", "--spec", adv_file]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data == {"h": 2, "witnesses": [[0, 2], [0, 3], [1, 2], [1, 3]]}


def test_cli_adv_hs_universe(adv_file, capsys):
    assert cli.main(["adv", "hs", "--spec", adv_file, "--universe", "0,1,2"]) == 0
    assert json.loads(capsys.readouterr().out)["h"] == 1


def test_cli_adv_hs_empty_restriction(adv_file, capsys):
    assert cli.main(["adv", "hs", "--spec", adv_file, "--universe", "0,2"]) == 0
    assert json.loads(capsys.readouterr().out) == {"empty_restriction": True}


def test_cli_malformed_spec_exits_3(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 2}')
    assert cli.main(["adv", "hs", "--spec", str(bad)]) == 3


def test_cli_unknown_suite_exits_3(capsys):
    assert cli.main(["check", "--suite", "bogus"]) == 3


def test_cli_check_suite_smoke(capsys, tmp_path):
    code = cli.main(
        [
            "check",
            "--suite",
            "hs",
            "--cases",
            "15",
            "--seed",
            "7",
            "--report-dir",
            str(tmp_path / "rep"),
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "suite hs: 15 cases, 0 violations" in out
    assert (tmp_path / "rep" / "summary.png").exists()


def test_cli_run_doorway_with_trace_replays(adv_file, inputs_file, tmp_path, capsys):
    schedule = json.dumps(
        {"fair": [0, 1, 2, 3], "participants": [0, 1, 2, 3], "crash": {}}
    )
    args = [
        "run",
        "--protocol",
        "doorway",
        "--adv",
        adv_file,
        "--inputs",
        inputs_file,
        "--schedule",
        schedule,
    ]
    first = tmp_path / "one.jsonl"
    second = tmp_path / "two.jsonl"
    assert cli.main(args + ["--trace", str(first)]) == 0
    assert cli.main(args + ["--trace", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_cli_run_incomplete_exits_2(adv_file, tmp_path, capsys):
    inputs = tmp_path / "in.json"
    inputs.write_text(json.dumps({"0": 1, "1": 2}))
    schedule = json.dumps(
        {"fair": [0], "participants": [0, 1], "crash": {"1": 0}}
    )
    code = cli.main(
        [
            "run",
            "--protocol",
            "doorway",
            "--adv",
            adv_file,
            "--inputs",
            str(inputs),
            "--schedule",
            schedule,
            "--budget",
            "300",
        ]
    )
    assert code == 2


def test_cli_explore(capsys):
    assert cli.main(["explore", "--protocol", "ca", "--n", "2"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["interleavings"] == 252


def test_cli_simulate_tl(adv_file, tmp_path, capsys):
    entries = {
        "0": [[0, 1], [1, 2]],
        "1": [[0, 1], [1, 2]],
        "2": [[0, 1], [1, 2], [2, 3], [3, 4]],
        "3": [[0, 1], [1, 2], [2, 3], [3, 4]],
    }
    inputs = tmp_path / "tl.json"
    inputs.write_text(json.dumps(entries))
    assert (
        cli.main(
            ["simulate-tl", "--adv", adv_file, "--inputs", str(inputs)]
        )
        == 0
    )
    data = json.loads(capsys.readouterr().out)
    assert data["distinct_inputs"] == 2
    assert data["blocked_codes"] == []


def test_cli_bgsim(adv_file, tmp_path, capsys):
    inputs = tmp_path / "bg.json"
    inputs.write_text(json.dumps({"0": 10, "2": 12}))
    assert cli.main(["bgsim", "--adv", adv_file, "--inputs", str(inputs)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["simulators"] == [0, 2]
    assert data["outputs"] == {"0": 10, "2": 10}


def test_cli_random_schedule_spec(adv_file, inputs_file, capsys):
    schedule = json.dumps({"random": {"seed": 4, "l_resilient": True}})
    code = cli.main(
        [
            "run",
            "--protocol",
            "hs-ksa",
            "--adv",
            adv_file,
            "--inputs",
            inputs_file,
            "--schedule",
            schedule,
        ]
    )
    assert code == 0
    data = json.loads(capsys.readouterr().out)
    assert set(data["returns"].values()) <= {1, 3}


def test_cli_version(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["--version"])
    assert info.value.code == 0
