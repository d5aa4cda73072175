from pathlib import Path

import typer
from rich.table import Table

from deploytree.bench.baseline import run_uni_baseline
from deploytree.bench.evaluate import evaluate_full_grid
from deploytree.cli.common import fail, load_config
from deploytree.core.models import FinalModel, save_model
from deploytree.core.profiler import RunLog, run
from deploytree.core.space import DeploymentSpace
from deploytree.database.runs import RunDB
from deploytree.deployers.base import Deployer
from deploytree.deployers.factory import build_deployer
from deploytree.errors import DeployTreeError
from deploytree.utilities.config import RunConfig, resolve_output_dir
from deploytree.utilities.logging import setup_logging

logger, console = setup_logging()

CONFIG = typer.Option(None, "--config", "-c", help="Run config JSON")
SPACE = typer.Option(None, "--space", help="Space definition JSON")
KIND = typer.Option(None, "--kind", help="Deployer: synthetic, replay or command")
FN = typer.Option(None, "--fn", help="Synthetic function (LIN, POLY, ..., HAT, BUMP)")
FN_SEED = typer.Option(None, "--fn-seed", help="Seed of the synthetic coefficients")
DIMS = typer.Option(None, "--dims", help="Dimensions of the default synthetic grid")
LEVELS = typer.Option(None, "--levels", help="Levels per dimension of the default synthetic grid")
REPLAY = typer.Option(None, "--replay", help="Ground-truth CSV to replay")
COMMAND = typer.Option(None, "--command", help="Command template, e.g. 'bench --threads {threads}'")
BUDGET = typer.Option(None, "--budget", "-B", help="Total deployments")
SEED = typer.Option(None, "--seed", "-s", help="Run seed")
OUTPUT = typer.Option(None, "--output-dir", "-o", help="Output directory")


def _record(
    kind: str,
    cfg: RunConfig,
    space: DeploymentSpace,
    deployer: Deployer,
    model: FinalModel,
    log: RunLog,
    output_dir: str | None,
) -> dict:
    out = resolve_output_dir(cfg.output_dir, output_dir)
    run_dir = out / log.run_id
    log.write(run_dir)
    save_model(run_dir / "model.json", model)
    space.to_json(run_dir / "space.json")

    record = {
        "run_id": log.run_id,
        "kind": kind,
        **log.summary(),
        "deployer": deployer.name,
        "fn": deployer.function_name,
        "budget_B": cfg.profiler.budget_B,
        "batch_b": cfg.profiler.batch_b,
        "run_dir": str(run_dir),
    }
    if deployer.deterministic and space.enumerable:
        record["mse"], record["mae"] = evaluate_full_grid(model, space, deployer)

    with RunDB(out) as db:
        db.upsert_run(record)
    return record


def _show(record: dict):
    table = Table(title=record["run_id"])
    table.add_column("Field")
    table.add_column("Value")
    for key in ("kind", "fn", "samples", "iterations", "failures", "final_kind", "mse", "mae", "wall_ms"):
        if key in record:
            value = record[key]
            table.add_row(key, f"{value:.6g}" if isinstance(value, float) else str(value))
    for kind, error in record.get("candidate_errors", {}).items():
        table.add_row(f"cv[{kind}]", f"{error:.6g}")
    table.add_row("outputs", record["run_dir"])
    console.print(table)


def profile(
    config: str = CONFIG,
    space: str = SPACE,
    kind: str = KIND,
    fn: str = FN,
    fn_seed: int = FN_SEED,
    dims: int = DIMS,
    levels: int = LEVELS,
    replay: str = REPLAY,
    command: str = COMMAND,
    budget: int = BUDGET,
    batch: int = typer.Option(None, "--batch", "-b", help="Deployments per iteration"),
    seed: int = SEED,
    retrain: str = typer.Option(None, "--retrain", help="offline or online"),
    mode: str = typer.Option(None, "--mode", help="oblique or flat"),
    scorer: str = typer.Option(None, "--scorer", help="regression or variance_reduction"),
    w_error: float = typer.Option(None, "--w-error", help="Weight of the leaf model error"),
    w_size: float = typer.Option(None, "--w-size", help="Weight of the unsampled leaf size"),
    w_cost: float = typer.Option(None, "--w-cost", help="Weight of the deployment cost"),
    max_iters: int = typer.Option(None, "--max-iters", help="Annealing steps per split search"),
    parallelism: int = typer.Option(None, "--parallelism", "-p", help="Concurrent deployments"),
    output_dir: str = OUTPUT,
):
    """Profile a deployment space adaptively and save the final model."""
    try:
        cfg = load_config(
            config,
            space=space,
            kind=kind,
            fn=fn,
            fn_seed=fn_seed,
            dims=dims,
            levels=levels,
            replay=replay,
            command=command,
            budget=budget,
            batch=batch,
            seed=seed,
            retrain=retrain,
            mode=mode,
            scorer=scorer,
            w_error=w_error,
            w_size=w_size,
            w_cost=w_cost,
            max_iters=max_iters,
            parallelism=parallelism,
        )
        grid, deployer = build_deployer(cfg.deployer, cfg.space)
        console.print(
            f"[bold]Profiling {deployer.function_name or deployer.name}[/bold] "
            f"over {grid.cardinality} points, B={cfg.profiler.budget_B}, b={cfg.profiler.batch_b}"
        )
        model, log = run(grid, deployer, cfg.profiler)
        _show(_record("profile", cfg, grid, deployer, model, log, output_dir))
    except DeployTreeError as e:
        fail(e)


def baseline(
    config: str = CONFIG,
    space: str = SPACE,
    kind: str = KIND,
    fn: str = FN,
    fn_seed: int = FN_SEED,
    dims: int = DIMS,
    levels: int = LEVELS,
    replay: str = REPLAY,
    command: str = COMMAND,
    budget: int = BUDGET,
    seed: int = SEED,
    output_dir: str = OUTPUT,
):
    """Sample uniformly at random (UNI) and keep the best model by CV."""
    try:
        cfg = load_config(
            config,
            space=space,
            kind=kind,
            fn=fn,
            fn_seed=fn_seed,
            dims=dims,
            levels=levels,
            replay=replay,
            command=command,
            budget=budget,
            seed=seed,
        )
        grid, deployer = build_deployer(cfg.deployer, cfg.space)
        p = cfg.profiler
        model, log = run_uni_baseline(grid, deployer, p.budget_B, p.final_model_pool, p.seed, p)
        _show(_record("uni", cfg, grid, deployer, model, log, output_dir))
    except DeployTreeError as e:
        fail(e)
