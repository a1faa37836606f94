"""CLI smoke tests: full mock pipeline, resume behavior, doctor, exit codes."""
import json
import time

import pytest
import yaml

from ompworld import cli, toolchain


@pytest.fixture
def run_setup(tmp_path):
    seeds = tmp_path / "seeds.yaml"
    seeds.write_text(yaml.safe_dump({
        "domains": {"stencils": [{
            "seed_id": "seed_axpy",
            "statement": "Compute y[i] += a * x[i] over a large vector in parallel.",
        }]},
    }), encoding="utf-8")
    config = tmp_path / "config.yaml"
    config.write_text(yaml.safe_dump({
        "variants_per_seed": 2,
        "implementations_per_problem": 2,
        "thread_counts": [4, 16],
        "pairing_budget": 2,
    }), encoding="utf-8")
    run_dir = tmp_path / "run"
    return run_dir, config, seeds


def _invoke(run_dir, config, seeds, *cmd):
    argv = ["--run-dir", str(run_dir), "--config", str(config),
            "--mock-endpoint", "--dry-run", "--seeds", str(seeds), *cmd]
    return cli.main(argv)


def test_mock_pipeline_end_to_end(run_setup, capsys):
    run_dir, config, seeds = run_setup
    start = time.monotonic()
    for cmd in (["explore"], ["harness"], ["candidates"],
                ["toolrun", "--tool", "tsan"], ["cot", "--tool", "tsan"],
                ["dataset", "build"], ["dataset", "export"]):
        assert _invoke(run_dir, config, seeds, *cmd) == 0, cmd
    elapsed = time.monotonic() - start
    assert elapsed < 60.0

    sft = run_dir / "sft_tsan_train.jsonl"
    records = [json.loads(line) for line in sft.read_text().splitlines()]
    val = run_dir / "sft_tsan_val.jsonl"
    records += [json.loads(line) for line in val.read_text().splitlines()]
    assert len(records) >= 2
    for rec in records:
        assert rec["mask"] == [False, True]
        assert [m["role"] for m in rec["messages"]] == ["user", "assistant"]

    # resumption: replay everything from the journal, zero new endpoint calls
    capsys.readouterr()
    assert _invoke(run_dir, config, seeds, "cot", "--tool", "tsan") == 0
    out = capsys.readouterr().out
    assert "0 new traces (endpoint calls this run: 0)" in out

    assert (run_dir / "training_config.yaml").exists()


def test_dataset_subsample_requires_sizes(run_setup):
    run_dir, config, seeds = run_setup
    for cmd in (["explore"], ["harness"], ["candidates"],
                ["toolrun", "--tool", "tsan"], ["cot", "--tool", "tsan"],
                ["dataset", "build"]):
        assert _invoke(run_dir, config, seeds, *cmd) == 0
    assert _invoke(run_dir, config, seeds, "dataset", "subsample") != 0
    n_tuples = sum(1 for _ in (run_dir / "tuples_tsan.jsonl").open())
    size = min(2, n_tuples)
    assert _invoke(run_dir, config, seeds, "dataset", "subsample",
                   "--sizes", str(size)) == 0
    assert (run_dir / f"sft_tsan_subset_{size}.jsonl").exists()


def test_report_counts(run_setup, capsys):
    run_dir, config, seeds = run_setup
    assert _invoke(run_dir, config, seeds, "explore") == 0
    capsys.readouterr()
    assert _invoke(run_dir, config, seeds, "report") == 0
    out = capsys.readouterr().out
    assert "problems" in out and "accepted_cots" in out


def test_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("no_such_key: 1\n", encoding="utf-8")
    rc = cli.main(["--run-dir", str(tmp_path / "run"), "--config", str(bad),
                   "--mock-endpoint", "explore"])
    assert rc == 2


def test_doctor_reports_toolchain(capsys, monkeypatch):
    rc = cli.main(["--run-dir", "/tmp/unused", "doctor"])
    out = capsys.readouterr().out
    assert "cxx:" in out and "caliper:" in out
    assert rc in (0, 4)

    monkeypatch.setattr(toolchain, "doctor", lambda: {
        "cxx": None, "make": False, "openmp": False, "tsan": False, "caliper": False})
    assert cli.main(["--run-dir", "/tmp/unused", "doctor"]) == 4
    assert "remediation" in capsys.readouterr().out


def test_eval_race_scripted(run_setup, tmp_path, capsys):
    run_dir, config, seeds = run_setup
    bench = tmp_path / "bench"
    bench.mkdir()
    (bench / "prog_a.cc").write_text("double f() { return 1; }\n", encoding="utf-8")
    labels = tmp_path / "labels.json"
    labels.write_text(json.dumps({"prog_a": True}), encoding="utf-8")
    rc = _invoke(run_dir, config, seeds, "eval", "race",
                 "--bench-dir", str(bench), "--labels", str(labels),
                 "--n-samples", "2")
    assert rc == 0
    out = capsys.readouterr().out
    assert "Mean Acc" in out
    assert (run_dir / "eval_race.csv").exists()
