#!/usr/bin/env python3

import typer

from deploytree.cli import bench, profile, runs
from deploytree.utilities.logging import setup_logging

app = typer.Typer(help="deploytree - Adaptive performance profiling with oblique decision trees")
app.add_typer(runs.app, name="runs", help="Inspect the run registry.")

app.command("profile")(profile.profile)
app.command("baseline")(profile.baseline)
app.command("sweep")(bench.sweep)
app.command("synth-dump")(bench.synth_dump)
app.command("eval")(bench.evaluate)
app.command("heatmap")(bench.heatmap)
app.command("correlate")(bench.correlate)

# Basic initialization
logger, console = setup_logging()


@app.callback()
def main():
    """
    deploytree - Adaptive performance profiling with oblique decision trees.
    """


if __name__ == "__main__":
    app()
