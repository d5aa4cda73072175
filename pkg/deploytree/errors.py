class DeployTreeError(Exception):
    """Base class for every error raised by deploytree."""


class SpaceError(DeployTreeError):
    pass


class ConfigError(DeployTreeError):
    pass


class InsufficientDataError(DeployTreeError):
    pass


class PartitionError(DeployTreeError):
    pass


class ReplayError(DeployTreeError):
    pass


class EmptyTestSetError(DeployTreeError):
    pass


class DeployError(DeployTreeError):
    """
    A failed evaluation of a single point.

    Args:
        kind (str): One of process-failed, parse-failed, timeout, overflow, missing-point.
        point (tuple): The point that failed.
        detail (str): Human-readable detail for the run log.
    """

    KINDS = ("process-failed", "parse-failed", "timeout", "overflow", "missing-point")

    def __init__(self, kind: str, point: tuple = (), detail: str = ""):
        if kind not in self.KINDS:
            raise ValueError(f"Unknown deploy error kind: {kind}")
        self.kind = kind
        self.point = tuple(point)
        self.detail = detail
        super().__init__(f"{kind} at {self.point}: {detail}" if detail else f"{kind} at {self.point}")
