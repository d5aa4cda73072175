import json
from datetime import datetime, timezone

import pytest
import time_machine
from typer.testing import CliRunner

from deploytree.cli.main import app
from deploytree.core.profiler import RunLog
from deploytree.database.runs import RunDB

runner = CliRunner()

FROZEN = datetime(2026, 3, 1, 12, 0, 0, tzinfo=timezone.utc)
SMALL_RUN = ["--fn", "LIN", "--levels", "10", "--budget", "20", "--batch", "10", "--max-iters", "50"]


@pytest.fixture
def profiled(output_dir):
    with time_machine.travel(FROZEN, tick=False):
        result = runner.invoke(app, ["profile", *SMALL_RUN])
    assert result.exit_code == 0, result.output
    return output_dir / "profile-20260301T120000-0"


def test_profile_writes_run_directory(profiled, output_dir):
    for name in ("runlog.jsonl", "summary.json", "model.json", "space.json"):
        assert (profiled / name).exists()
    assert len(RunLog.read(profiled).samples) == 20
    with RunDB(output_dir) as db:
        record = db.get_run("profile-20260301T120000-0")
    assert record["kind"] == "profile"
    assert record["fn"] == "LIN"
    assert record["mse"] < 1e-6


def test_runs_list_and_show(profiled, output_dir):
    listed = runner.invoke(app, ["runs", "list"])
    assert listed.exit_code == 0
    assert "profile-2026" in listed.output
    shown = runner.invoke(app, ["runs", "show", "profile-20260301T120000-0"])
    assert shown.exit_code == 0
    assert '"final_kind"' in shown.output
    assert runner.invoke(app, ["runs", "show", "nope"]).exit_code == 1
    assert runner.invoke(app, ["runs", "prettify"]).exit_code == 0


def test_eval_and_heatmap(profiled):
    evaluated = runner.invoke(
        app, ["eval", str(profiled / "model.json"), "--space", str(profiled / "space.json"), "--fn", "LIN"]
    )
    assert evaluated.exit_code == 0, evaluated.output
    assert "MSE" in evaluated.output
    mapped = runner.invoke(app, ["heatmap", str(profiled), "--bins", "5"])
    assert mapped.exit_code == 0, mapped.output
    rows = (profiled / "heatmap.csv").read_text().splitlines()
    assert len(rows) == 5
    assert sum(int(v) for row in rows for v in row.split(",")) == 20


def test_baseline(output_dir):
    result = runner.invoke(app, ["baseline", "--fn", "GAUSS", "--levels", "10", "--budget", "15", "--seed", "2"])
    assert result.exit_code == 0, result.output
    with RunDB(output_dir) as db:
        [record] = db.list_runs("uni")
    assert record["samples"] == 15


def test_synth_dump_and_correlate(tmp_path):
    path = tmp_path / "gauss.csv"
    dumped = runner.invoke(app, ["synth-dump", str(path), "--fn", "GAUSS", "--levels", "10"])
    assert dumped.exit_code == 0, dumped.output
    assert len(path.read_text().splitlines()) == 101
    correlated = runner.invoke(app, ["correlate", str(path)])
    assert correlated.exit_code == 0
    assert "x1" in correlated.output and "x2" in correlated.output


def test_sweep_command(tmp_path):
    config = tmp_path / "exp.json"
    config.write_text(
        json.dumps(
            {
                "deployer": {"synthetic": {"kind": "GAUSS", "levels": 10}},
                "budgets": [20],
                "ratios": [2],
                "repetitions": 1,
                "profiler": {"sa": {"max_iters": 50}, "bags": 3},
            }
        )
    )
    with time_machine.travel(FROZEN, tick=False):
        result = runner.invoke(app, ["sweep", str(config), "--output-dir", str(tmp_path / "sweeps")])
    assert result.exit_code == 0, result.output
    out = tmp_path / "sweeps" / "sweep-20260301T120000-0"
    assert len((out / "results.csv").read_text().splitlines()) == 3
    assert (out / "summary.csv").exists()
    with RunDB(tmp_path / "sweeps") as db:
        assert db.get_sweep("sweep-20260301T120000-0")["rows"] == 2


def test_config_errors_exit_nonzero(output_dir):
    assert runner.invoke(app, ["profile", "--kind", "replay"]).exit_code == 1
    assert runner.invoke(app, ["profile", "--budget", "5", "--batch", "10"]).exit_code == 1
