import math

import pendulum
import typer
from rich.progress import Progress
from rich.table import Table

from deploytree.bench.correlation import correlation_report
from deploytree.bench.evaluate import evaluate_full_grid
from deploytree.bench.heatmap import coefficient_of_variation, heatmap as count_heatmap, write_heatmap
from deploytree.bench.sweep import expand_experiment, summarize, sweep as run_sweep, write_summary
from deploytree.cli.common import fail, load_config
from deploytree.core.models import read_model
from deploytree.core.profiler import RunLog
from deploytree.core.space import DeploymentSpace
from deploytree.database.runs import RunDB
from deploytree.deployers.factory import build_deployer
from deploytree.deployers.synthetic import classify_complexity, complexity_r2, dump_grid
from deploytree.errors import DeployTreeError
from deploytree.utilities.config import load_experiment_config, resolve_output_dir
from deploytree.utilities.constants import DEFAULT_HEATMAP_BINS
from deploytree.utilities.logging import setup_logging

logger, console = setup_logging()


def _fmt(value) -> str:
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.4g}"
    return str(value)


def sweep(
    config: str = typer.Argument(..., help="Experiment config JSON"),
    repetitions: int = typer.Option(None, "--repetitions", "-r", help="Seeds per configuration"),
    jobs: int = typer.Option(None, "--jobs", "-j", help="Runs in parallel processes"),
    output_dir: str = typer.Option(None, "--output-dir", "-o", help="Output directory"),
):
    """Run an experiment sweep and write results.csv and summary.csv."""
    try:
        exp = load_experiment_config(config, {"repetitions": repetitions, "jobs": jobs})
        space, deployer = build_deployer(exp.deployer, exp.space)
        sweep_id = f"sweep-{pendulum.now('UTC').format('YYYYMMDDTHHmmss')}-{exp.base_seed}"
        out = resolve_output_dir(exp.output_dir, output_dir) / sweep_id
        out.mkdir(parents=True, exist_ok=True)
        total = len(expand_experiment(exp, space))

        with Progress(console=console) as progress:
            task = progress.add_task(f"[bold]{sweep_id}[/bold]", total=total)
            rows = run_sweep(
                exp, space, deployer, out / "results.csv", on_row=lambda _: progress.advance(task)
            )
        summary = summarize(rows)
        write_summary(out / "summary.csv", summary)

        with RunDB(out.parent) as db:
            db.upsert_sweep(
                {
                    "sweep_id": sweep_id,
                    "started_at": pendulum.now("UTC").to_iso8601_string(),
                    "config": exp.model_dump(mode="json"),
                    "rows": len(rows),
                    "failures": sum(1 for r in rows if r.get("error")),
                    "results": str(out / "results.csv"),
                    "summary": str(out / "summary.csv"),
                }
            )

        table = Table(title=sweep_id)
        for column in ("exp_id", "repetitions", "median_mse", "median_mae", "median_cost", "ratio_vs_uni"):
            table.add_column(column)
        for row in summary:
            table.add_row(
                *(_fmt(row[c]) for c in ("exp_id", "repetitions", "median_mse", "median_mae", "median_cost", "ratio_vs_uni"))
            )
        console.print(table)
    except DeployTreeError as e:
        fail(e)


def synth_dump(
    out: str = typer.Argument(..., help="Ground-truth CSV to write"),
    fn: str = typer.Option("LIN", "--fn", help="Synthetic function (LIN, POLY, ..., HAT, BUMP)"),
    fn_seed: int = typer.Option(0, "--fn-seed", help="Seed of the synthetic coefficients"),
    dims: int = typer.Option(None, "--dims", help="Dimensions of the default grid"),
    levels: int = typer.Option(None, "--levels", help="Levels per dimension of the default grid"),
    space: str = typer.Option(None, "--space", help="Space definition JSON"),
):
    """Write a synthetic function's full ground truth as CSV."""
    try:
        cfg = load_config(None, kind="synthetic", fn=fn, fn_seed=fn_seed, dims=dims, levels=levels, space=space)
        grid, deployer = build_deployer(cfg.deployer, cfg.space)
        count = dump_grid(out, grid, deployer)
        r2 = complexity_r2(deployer, grid)
        console.print(f"Wrote {count} points to {out} (R² {r2:.3f}, {classify_complexity(r2)} complexity)")
    except DeployTreeError as e:
        fail(e)


def evaluate(
    model_path: str = typer.Argument(..., help="Model JSON written by profile or baseline"),
    config: str = typer.Option(None, "--config", "-c", help="Run config JSON naming the ground truth"),
    space: str = typer.Option(None, "--space", help="Space definition JSON"),
    fn: str = typer.Option(None, "--fn", help="Synthetic function"),
    fn_seed: int = typer.Option(None, "--fn-seed", help="Seed of the synthetic coefficients"),
    replay: str = typer.Option(None, "--replay", help="Ground-truth CSV"),
):
    """Score a saved model against the ground truth over the whole grid."""
    try:
        kind = "replay" if replay else None
        cfg = load_config(config, kind=kind, space=space, fn=fn, fn_seed=fn_seed, replay=replay)
        grid, deployer = build_deployer(cfg.deployer, cfg.space)
        model = read_model(model_path)
        mse, mae = evaluate_full_grid(model, grid, deployer)
        console.print(f"[bold]{model.kind}[/bold] over {grid.cardinality} points: MSE {mse:.6g}, MAE {mae:.6g}")
    except DeployTreeError as e:
        fail(e)


def heatmap(
    run_dir: str = typer.Argument(..., help="Run directory holding runlog.jsonl"),
    out: str = typer.Option(None, "--out", help="Heatmap CSV (default <run_dir>/heatmap.csv)"),
    bins: int = typer.Option(DEFAULT_HEATMAP_BINS, "--bins", help="Bins per dimension"),
    dims: tuple[int, int] = typer.Option((0, 1), "--dims", help="Two dimensions to project on"),
):
    """Count the sampled points of a run on a bins x bins grid."""
    try:
        log = RunLog.read(run_dir)
        grid = DeploymentSpace.from_json(f"{run_dir}/space.json")
        counts = count_heatmap(log.points, grid, bins, tuple(dims))
        target = out or f"{run_dir}/heatmap.csv"
        write_heatmap(target, counts)
        console.print(
            f"{int(counts.sum())} samples binned into {target} "
            f"(max bin {int(counts.max())}, CV {coefficient_of_variation(counts):.3f})"
        )
    except DeployTreeError as e:
        fail(e)
    except ValueError as e:
        logger.fatal(f"Error: {e}")
        raise typer.Exit(1)


def correlate(
    grid_csv: str = typer.Argument(..., help="Ground-truth CSV"),
    space: str = typer.Option(None, "--space", help="Space definition JSON, for categorical labels"),
):
    """Pearson correlation between each dimension and the metric."""
    try:
        grid = DeploymentSpace.from_json(space) if space else None
        table = Table(title=grid_csv)
        table.add_column("dimension")
        table.add_column("r")
        table.add_column("note")
        for c in correlation_report(grid_csv, grid):
            table.add_row(c.dimension, f"{c.r:+.4f}", "zero variance" if c.zero_variance else "")
        console.print(table)
    except DeployTreeError as e:
        fail(e)
