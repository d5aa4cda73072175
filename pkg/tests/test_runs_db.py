import json

import pytest

from deploytree.database.runs import RunDB


def test_runs_upsert_and_filter(tmp_path):
    with RunDB(tmp_path) as db:
        db.upsert_run({"run_id": "a", "kind": "profile", "started_at": "2026-01-02", "mse": 1.0})
        db.upsert_run({"run_id": "b", "kind": "uni", "started_at": "2026-01-01"})
        db.upsert_run({"run_id": "a", "kind": "profile", "started_at": "2026-01-02", "mse": 0.5})
        assert db.get_run("a")["mse"] == 0.5
        assert [r["run_id"] for r in db.list_runs()] == ["b", "a"]
        assert [r["run_id"] for r in db.list_runs("uni")] == ["b"]
        assert db.get_run("missing") is None


def test_records_need_ids(tmp_path):
    with RunDB(tmp_path) as db:
        with pytest.raises(ValueError):
            db.upsert_run({"run_id": "x"})
        with pytest.raises(ValueError):
            db.upsert_sweep({"rows": 3})


def test_sweeps_persist_readably(tmp_path):
    with RunDB(tmp_path / "nested") as db:
        db.upsert_sweep({"sweep_id": "s1", "started_at": "2026-01-01", "rows": 4})
    path = tmp_path / "nested" / "runs.json"
    text = path.read_text()
    assert "\n    " in text
    assert json.loads(text)["sweeps"]["1"]["rows"] == 4
    with RunDB(tmp_path / "nested") as db:
        assert db.get_sweep("s1")["rows"] == 4
        assert len(db.list_sweeps()) == 1
