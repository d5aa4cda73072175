from __future__ import annotations

import logging
import shlex
import string
import subprocess
from typing import Sequence

from deploytree.deployers.base import Deployer
from deploytree.errors import ConfigError, DeployError

logger = logging.getLogger(__name__)


def _format_value(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


class CommandDeployer(Deployer):
    """
    Runs an external command per point and reads the metric from the last
    line of its standard output.

    Placeholders such as {threads} are substituted into the argument vector
    after splitting, so values never pass through a shell.
    """

    deterministic = False

    def __init__(self, template: str, names: Sequence[str], timeout_secs: float = 60.0):
        self.template = template
        self.names = tuple(names)
        self.timeout_secs = timeout_secs
        try:
            self._argv = shlex.split(template)
        except ValueError as e:
            raise ConfigError(f"Unparseable command template: {e}") from e
        if not self._argv:
            raise ConfigError("Command template is empty.")
        referenced = {
            field.split(".")[0].split("[")[0]
            for arg in self._argv
            for _, field, _, _ in string.Formatter().parse(arg)
            if field
        }
        unknown = referenced - set(self.names)
        if unknown:
            raise ConfigError(f"Command template references undeclared dimensions: {sorted(unknown)}")

    @property
    def name(self) -> str:
        return "command"

    @property
    def function_name(self) -> str:
        return self._argv[0]

    def argv(self, point: Sequence[float]) -> list[str]:
        values = {name: _format_value(v) for name, v in zip(self.names, point)}
        return [arg.format(**values) for arg in self._argv]

    def evaluate(self, point: Sequence[float]) -> float:
        point = tuple(point)
        argv = self.argv(point)
        logger.debug(f"Running {argv}")
        try:
            completed = subprocess.run(
                argv, capture_output=True, text=True, timeout=self.timeout_secs, check=False
            )
        except subprocess.TimeoutExpired:
            raise DeployError("timeout", point, f"exceeded {self.timeout_secs}s") from None
        except OSError as e:
            raise DeployError("process-failed", point, str(e)) from e
        if completed.returncode != 0:
            raise DeployError(
                "process-failed", point, f"exit {completed.returncode}: {completed.stderr.strip()[-200:]}"
            )
        lines = [line for line in completed.stdout.splitlines() if line.strip()]
        if not lines:
            raise DeployError("parse-failed", point, "no output")
        try:
            return float(lines[-1].strip())
        except ValueError:
            raise DeployError("parse-failed", point, f"last line {lines[-1]!r} is not a number") from None


def command_eval(deployer: CommandDeployer, point: Sequence[float]) -> float:
    return deployer.evaluate(point)
