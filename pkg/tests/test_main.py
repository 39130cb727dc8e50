import json

import pandas as pd
import pytest

import main as cli
from core_types import ParameterError
from main import EXIT_CHECK_FAILED, EXIT_IO, EXIT_OK, EXIT_USAGE, SWEEP_COLUMNS, load_config, main


def read_summary(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def test_run_classic_on_example1(tmp_path):
    out = tmp_path / "classic.csv"
    code = main(["run", "--learner", "classic", "--fixture", "example1-footnote", "--rounds", "201", "--out", str(out)])
    assert code == EXIT_OK
    summary = read_summary(tmp_path / "classic_summary.json")
    assert summary["total_mistakes"] == 200
    assert summary["cycle_period"] == 2
    assert len(pd.read_csv(out)) == 201


def test_run_strategic_on_example2(tmp_path):
    out = tmp_path / "t.csv"
    summary_path = tmp_path / "s.json"
    code = main(
        ["run", "--learner", "strategic-l2", "--fixture", "example2", "--rounds", "400", "--out", str(out), "--summary", str(summary_path)]
    )
    assert code == EXIT_OK
    summary = read_summary(summary_path)
    assert summary["cycle_period"] == 4
    assert summary["bounds"]["theorem1"]["status"] == "unverifiable"


def test_run_generated_unknown_cost(tmp_path):
    out = tmp_path / "u.csv"
    code = main(
        [
            "run", "--learner", "unknown-l2", "--d", "2", "--R", "5", "--gamma", "0.5", "--alpha", "2",
            "--rounds", "500", "--seed", "3", "--out", str(out),
        ]
    )
    assert code == EXIT_OK
    summary = read_summary(tmp_path / "u_summary.json")
    assert summary["learner"]["alpha"] is None
    assert summary["bounds"]["theorem4"]["status"] == "holds"


def test_unknown_cost_learner_needs_gamma(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["run", "--learner", "unknown-l2", "--fixture", "example2", "--R", "5", "--out", str(tmp_path / "x.csv")])
    assert info.value.code == EXIT_USAGE


def test_run_needs_a_learner(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["run", "--fixture", "example2", "--out", str(tmp_path / "x.csv")])
    assert info.value.code == EXIT_USAGE


def test_incomplete_generated_stream_is_a_usage_error(tmp_path):
    code = main(["run", "--learner", "strategic-l2", "--alpha", "1", "--d", "2", "--out", str(tmp_path / "x.csv")])
    assert code == EXIT_USAGE


def test_sweep_writes_one_row_per_cell_and_seed(tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(
        [
            "sweep", "--alpha-grid", "0.5", "1", "2", "--gamma-grid", "0.5", "1", "1.5",
            "--R-grid", "5", "--seeds", "5", "--rounds", "200", "--out", str(out),
        ]
    )
    assert code == EXIT_OK
    frame = pd.read_csv(out)
    assert list(frame.columns) == SWEEP_COLUMNS
    assert len(frame) == 45
    assert (frame["mistakes"] <= frame["bound"]).all()
    assert frame["holds"].all()


def test_sweep_skips_infeasible_cells(tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(["sweep", "--alpha-grid", "1", "9", "--gamma-grid", "0.5", "--R-grid", "5", "--seeds", "2", "--rounds", "50", "--out", str(out)])
    assert code == EXIT_OK
    assert pd.read_csv(out)["alpha"].tolist() == [1.0, 1.0]


def test_sweep_drops_every_row_of_a_cell_that_fails_midway(tmp_path, monkeypatch):
    real_row = cli._sweep_row

    def failing_second_seed(args, d, R, gamma, alpha, seed):
        if alpha == 2.0 and seed == args.seed + 1:
            raise ParameterError("cell broke on its second seed")
        return real_row(args, d, R, gamma, alpha, seed)

    monkeypatch.setattr(cli, "_sweep_row", failing_second_seed)
    out = tmp_path / "sweep.csv"
    code = main(["sweep", "--alpha-grid", "1", "2", "--gamma-grid", "0.5", "--R-grid", "5", "--seeds", "3", "--rounds", "50", "--out", str(out)])
    assert code == EXIT_OK
    assert pd.read_csv(out)["alpha"].tolist() == [1.0, 1.0, 1.0]


def test_gen_then_run_from_file(tmp_path):
    stream = tmp_path / "stream.jsonl"
    assert main(["gen", "--d", "2", "--R", "5", "--gamma", "0.5", "--length", "50", "--out", str(stream)]) == EXIT_OK
    assert len(stream.read_text(encoding="utf-8").splitlines()) == 50
    out = tmp_path / "run.csv"
    code = main(["run", "--learner", "strategic-l2", "--alpha", "1", "--stream", str(stream), "--rounds", "50", "--out", str(out)])
    assert code == EXIT_OK
    summary = read_summary(tmp_path / "run_summary.json")
    assert summary["rounds"] == 50
    assert summary["bounds"]["theorem1"]["status"] == "unverifiable"


def test_seed_comes_from_environment(tmp_path, monkeypatch):
    explicit = tmp_path / "explicit.jsonl"
    from_env = tmp_path / "env.jsonl"
    main(["gen", "--d", "3", "--R", "5", "--gamma", "0.5", "--length", "20", "--seed", "7", "--out", str(explicit)])
    monkeypatch.setenv("SPL_SEED", "7")
    main(["gen", "--d", "3", "--R", "5", "--gamma", "0.5", "--length", "20", "--out", str(from_env)])
    assert explicit.read_bytes() == from_env.read_bytes()


def test_replay_matches(tmp_path):
    jsonl = tmp_path / "run.jsonl"
    code = main(
        [
            "run", "--learner", "unknown-l2", "--d", "2", "--R", "5", "--gamma", "0.5", "--alpha", "1.5",
            "--rounds", "300", "--out", str(tmp_path / "run.csv"), "--jsonl", str(jsonl),
        ]
    )
    assert code == EXIT_OK
    assert main(["replay", "--transcript", str(jsonl)]) == EXIT_OK


def test_config_file_supplies_flags(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"learner": "classic", "fixture": "example1-footnote", "rounds": 201}), encoding="utf-8")
    assert load_config(str(config))["rounds"] == 201
    out = tmp_path / "c.csv"
    assert main(["run", "--config", str(config), "--out", str(out)]) == EXIT_OK
    assert read_summary(tmp_path / "c_summary.json")["total_mistakes"] == 200

    assert main(["run", "--config", str(config), "--rounds", "11", "--out", str(out)]) == EXIT_OK
    assert read_summary(tmp_path / "c_summary.json")["rounds"] == 11


def test_config_file_errors(tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == EXIT_IO
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]", encoding="utf-8")
    assert main(["run", "--config", str(bad)]) == EXIT_USAGE
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"learner": "classic", "colour": "red"}), encoding="utf-8")
    with pytest.raises(SystemExit) as info:
        main(["run", "--config", str(unknown)])
    assert info.value.code == EXIT_USAGE


def test_missing_stream_file_is_an_io_error(tmp_path):
    code = main(
        ["run", "--learner", "classic", "--alpha", "1", "--stream", str(tmp_path / "none.jsonl"), "--out", str(tmp_path / "x.csv")]
    )
    assert code == EXIT_IO


def test_verify_fixture_suite_with_report(tmp_path):
    report = tmp_path / "report.json"
    assert main(["verify", "--suite", "fixtures", "--report", str(report)]) == EXIT_OK
    entries = read_summary(report)
    assert all(entry["passed"] for entry in entries)

    code = main(["verify", "--suite", "fixtures", "--plant-fault", "zero-eta"])
    assert code == EXIT_CHECK_FAILED
