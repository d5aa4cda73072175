import logging
from pathlib import Path

from deploytree.database.base import DatabaseManager
from deploytree.utilities.constants import RUNS_DB_NAME

logger = logging.getLogger(__name__)


class RunDB(DatabaseManager):
    """Registry of profiling runs and sweeps kept next to their outputs."""

    def __init__(self, output_dir: str | Path):
        super().__init__(Path(output_dir) / RUNS_DB_NAME)
        self._runs = self.get_table("runs")
        self._sweeps = self.get_table("sweeps")

    def upsert_run(self, record: dict) -> str:
        """
        Insert or update a run record.

        Required keys: run_id, kind. Typical extras: started_at, seed,
        final_kind, candidate_errors, model_path, log_dir, mse, mae.
        """
        if "run_id" not in record or "kind" not in record:
            raise ValueError("A run record needs run_id and kind")
        self._runs.upsert(record, self._query.run_id == record["run_id"])
        logger.debug(f"Stored run {record['run_id']}")
        return record["run_id"]

    def get_run(self, run_id: str) -> dict | None:
        return self._runs.get(self._query.run_id == run_id)

    def list_runs(self, kind: str | None = None) -> list[dict]:
        runs = self._runs.all() if kind is None else self._runs.search(self._query.kind == kind)
        return sorted(runs, key=lambda r: r.get("started_at", ""))

    def upsert_sweep(self, record: dict) -> str:
        if "sweep_id" not in record:
            raise ValueError("A sweep record needs sweep_id")
        self._sweeps.upsert(record, self._query.sweep_id == record["sweep_id"])
        return record["sweep_id"]

    def get_sweep(self, sweep_id: str) -> dict | None:
        return self._sweeps.get(self._query.sweep_id == sweep_id)

    def list_sweeps(self) -> list[dict]:
        return sorted(self._sweeps.all(), key=lambda r: r.get("started_at", ""))
