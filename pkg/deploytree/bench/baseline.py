import logging
import time
from typing import Sequence

import numpy as np
import pendulum

from deploytree.core.linmodel import fit_arrays
from deploytree.core.models import FinalModel, LinearFinalModel
from deploytree.core.profiler import IterationRecord, RunLog, make_run_id, select_final_model
from deploytree.core.space import DeploymentSpace, LabeledSample, samples_to_arrays
from deploytree.deployers.base import Deployer, deploy_batch
from deploytree.errors import InsufficientDataError, SpaceError
from deploytree.utilities.config import FinalModelKind, ProfilerConfig

logger = logging.getLogger(__name__)


def run_uni_baseline(
    space: DeploymentSpace,
    deployer: Deployer,
    B: int,
    pool: Sequence[FinalModelKind],
    seed: int,
    cfg: ProfilerConfig | None = None,
) -> tuple[FinalModel, RunLog]:
    """
    Deploy B uniform-random distinct grid points and keep the best model
    of the pool by cross-validation.

    The first draw uses the same generator as the adaptive profiler's
    bootstrap batch, so B = b runs sample identical points. Failed points
    are replaced by fresh uniform draws until B samples exist or the grid
    runs out.
    """
    if B > space.cardinality:
        raise SpaceError(f"Budget {B} exceeds the {space.cardinality}-point grid")
    cfg = cfg or ProfilerConfig(budget_B=B, batch_b=B, seed=seed)
    rng = np.random.default_rng(seed)
    log = RunLog(make_run_id("uni", seed), seed, pendulum.now("UTC").to_iso8601_string())
    started = time.perf_counter()

    samples: list[LabeledSample] = []
    taken: set[int] = set()
    iteration = 0
    while len(samples) < B and len(taken) < space.cardinality:
        k = min(B - len(samples), space.cardinality - len(taken))
        tick = time.perf_counter()
        indices = space.uniform_indices(k, rng, exclude=taken)
        taken.update(indices)
        batch = deploy_batch(deployer, [space.point_at(i) for i in indices], cfg.parallelism)
        samples.extend(batch.succeeded)
        log.records.append(
            IterationRecord(
                iteration=iteration,
                requested=k,
                leaf_count=1,
                scores=[],
                drawn=[list(s.input) for s in batch.succeeded],
                outputs=[s.output for s in batch.succeeded],
                failures=[{"point": list(f.point), "kind": f.kind, "detail": f.detail} for f in batch.failed],
                wall_ms=(time.perf_counter() - tick) * 1000,
            )
        )
        iteration += 1

    if not samples:
        raise InsufficientDataError("No deployment succeeded.")
    if len(samples) < 2:
        X, y = samples_to_arrays(samples)
        model: FinalModel = LinearFinalModel(fit_arrays(X, y))
        log.final_kind = model.kind
    else:
        selection = select_final_model(space, samples, pool, cfg, seed)
        model = selection.model
        log.final_kind = selection.kind
        log.candidate_errors = selection.cv_errors
    log.wall_ms = (time.perf_counter() - started) * 1000
    logger.info(f"[{log.run_id}] UNI baseline: {len(samples)} samples, final model {log.final_kind}")
    return model, log
