import json

import typer
from rich.table import Table

from deploytree.database.runs import RunDB
from deploytree.utilities.config import resolve_output_dir
from deploytree.utilities.constants import DEFAULT_OUTPUT_DIR
from deploytree.utilities.logging import setup_logging

app = typer.Typer()
logger, console = setup_logging()

OUTPUT = typer.Option(None, "--output-dir", "-o", help="Output directory holding runs.json")


@app.command("list")
def list_runs(
    kind: str = typer.Option(None, "--kind", "-k", help="profile or uni"),
    output_dir: str = OUTPUT,
):
    """List recorded runs."""
    with RunDB(resolve_output_dir(DEFAULT_OUTPUT_DIR, output_dir)) as db:
        runs = db.list_runs(kind)
    if not runs:
        console.print("No runs recorded.")
        return
    table = Table()
    for column in ("run_id", "kind", "fn", "samples", "final_kind", "mse"):
        table.add_column(column)
    for run in runs:
        mse = run.get("mse")
        table.add_row(
            run["run_id"],
            run["kind"],
            run.get("fn", ""),
            str(run.get("samples", "")),
            run.get("final_kind") or "",
            f"{mse:.4g}" if mse is not None else "",
        )
    console.print(table)


@app.command()
def show(
    run_id: str = typer.Argument(..., help="Run or sweep id"),
    output_dir: str = OUTPUT,
):
    """Print one run or sweep record."""
    with RunDB(resolve_output_dir(DEFAULT_OUTPUT_DIR, output_dir)) as db:
        record = db.get_run(run_id) or db.get_sweep(run_id)
    if record is None:
        logger.fatal(f"Error: no run or sweep named {run_id}")
        raise typer.Exit(1)
    console.print_json(json.dumps(record))


@app.command()
def prettify(output_dir: str = OUTPUT):
    """Reformat the run registry to be more human-readable."""
    try:
        db = RunDB(resolve_output_dir(DEFAULT_OUTPUT_DIR, output_dir))
        db.close()
    except Exception as e:
        logger.fatal(f"Error: {e}")
        raise typer.Exit(1)
