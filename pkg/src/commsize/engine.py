"""Time-stepped runs and parameter sweeps over the four model families."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import itertools
import logging
import os
import struct
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numba import njit

from . import decision, exposure
from .decision import _ieb_decide, _random_joins, _random_leaves
from .exposure import _null_exposure, _social_exposure
from .population import Population, _join, _leave

log = logging.getLogger(__name__)

NULL = "null"
SOCIAL = "social_exposure"
IEB = "ieb"
COMBINED = "combined"
FAMILIES = (NULL, SOCIAL, IEB, COMBINED)

SYNCHRONOUS = "synchronous"
SEQUENTIAL = "sequential"

SHARE_MODES = {
    "random": exposure.SOCIAL_RANDOM_SHARE,
    "largest": exposure.SOCIAL_LARGEST_SHARE,
}


@dataclass(frozen=True)
class ModelConfig:
    """Everything needed to reproduce one run.

    ``p_e`` is the uniform exposure probability for the null and IEB
    families; for the social-exposure and combined families it is the
    fallback used by agents who do not yet belong to any community.
    ``projection=None`` resolves to quadratic for the combined family and
    linear otherwise.
    """

    family: str = NULL
    n_agents: int = 9000
    n_communities: int = 200
    steps: int = 24
    seed: int = 0
    p_e: float = 0.1
    p_j: float = 0.1
    p_l: float = 0.56
    m: int = 1
    share: str = "largest"
    p_k: float = 0.1
    startup_cost: float = 0.5
    horizon: int = 6
    projection: str | None = None
    update: str = SYNCHRONOUS

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown model family {self.family!r}; expected one of {FAMILIES}")
        if self.n_agents < 1 or self.n_communities < 1:
            raise ValueError("n_agents and n_communities must be positive")
        if self.steps < 0:
            raise ValueError(f"steps must be non-negative, got {self.steps}")
        for name in ("p_e", "p_j", "p_l"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.share not in SHARE_MODES:
            raise ValueError(f"share must be 'random' or 'largest', got {self.share!r}")
        if self.update not in (SYNCHRONOUS, SEQUENTIAL):
            raise ValueError(f"update must be {SYNCHRONOUS!r} or {SEQUENTIAL!r}")
        # validates m, p_k, horizon, projection and startup_cost
        self.exposure_config()
        if self.uses_ieb:
            self.benefit_params()

    @property
    def uses_ieb(self) -> bool:
        return self.family in (IEB, COMBINED)

    @property
    def resolved_projection(self) -> str:
        if self.projection is not None:
            return self.projection
        return decision.QUADRATIC if self.family == COMBINED else decision.LINEAR

    def exposure_config(self) -> exposure.ExposureConfig:
        if self.family in (NULL, IEB):
            mode = exposure.NULL_RANDOM
        else:
            mode = SHARE_MODES[self.share]
        return exposure.ExposureConfig(mode=mode, p_e=self.p_e, m=self.m, fallback_p_e=self.p_e)

    def benefit_params(self) -> decision.BenefitParams:
        return decision.BenefitParams(
            horizon=self.horizon,
            startup_cost=self.startup_cost,
            projection=self.resolved_projection,
            p_k=self.p_k,
        )

    def replace(self, **changes) -> "ModelConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["projection"] = self.resolved_projection
        return d


@dataclass
class RunResult:
    config: ModelConfig
    final_sizes: np.ndarray | None
    per_step_sizes: list[np.ndarray] | None = None
    wall_time: float = 0.0
    exposure_checks: int = 0
    cell_id: int = 0
    replicate: int = 0
    params: dict[str, Any] = field(default_factory=dict)
    error: str | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.seed is None:
            self.seed = self.config.seed

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class SweepGrid:
    base: ModelConfig
    axes: dict[str, list]
    replicates: int = 1

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be positive")
        names = {f.name for f in dataclasses.fields(ModelConfig)}
        for axis, values in self.axes.items():
            if axis not in names:
                raise ValueError(f"unknown sweep axis {axis!r}")
            if len(values) == 0:
                raise ValueError(f"sweep axis {axis!r} has no values")

    def cells(self) -> list[dict[str, Any]]:
        names = list(self.axes)
        return [dict(zip(names, combo)) for combo in itertools.product(*self.axes.values())]

    def __len__(self):
        return len(self.cells()) * self.replicates


def derive_seed(base_seed: int, cell: int, replicate: int) -> int:
    """Stable 63-bit seed from (base seed, cell index, replicate index)."""
    raw = struct.pack("<qqq", base_seed, cell, replicate)
    return int.from_bytes(hashlib.blake2b(raw, digest_size=8).digest(), "little") >> 1


@njit(cache=True)
def _step_kernel(rng, members, sizes, mslot, joined, njoined, jslot, ages,
                 random_decisions, social, largest, m, p_e, p_j, p_l, p_k, horizon,
                 quadratic, startup_cost, sequential, check_bounds,
                 pend_agent, pend_comm, pend_join):
    n_agents = mslot.shape[0]
    n_communities = sizes.shape[0]
    mark = np.zeros(n_communities, dtype=np.bool_)
    buf = np.empty(n_communities, dtype=np.int64)
    joins = np.empty(n_communities, dtype=np.int64)
    leaves = np.empty(n_communities, dtype=np.int64)
    n_pending = 0
    checks = 0
    for a in range(n_agents):
        nl = 0
        # draw order per agent: exits, exposure, then joins or tie-breaks
        if random_decisions:
            nl = _random_leaves(rng, joined, njoined, a, p_l, leaves)
        if social:
            count, bound = _social_exposure(rng, members, sizes, mslot, joined, njoined,
                                            jslot, a, m, largest, p_e, mark, buf)
            if check_bounds and bound >= 0:
                checks += 1
                if count > bound:
                    return -1 - a, count, bound
        else:
            count = _null_exposure(rng, n_communities, p_e, mark, buf)
        if random_decisions:
            nj = _random_joins(rng, mslot, a, buf, count, p_j, joins)
        else:
            nj, nl = _ieb_decide(rng, sizes, ages, mslot, a, mark, p_k, horizon, quadratic,
                                 startup_cost, joins, leaves)
        for i in range(count):
            mark[buf[i]] = False
        if sequential:
            for i in range(nl):
                _leave(members, sizes, mslot, joined, njoined, jslot, a, leaves[i])
            for i in range(nj):
                _join(members, sizes, mslot, joined, njoined, jslot, a, joins[i])
        else:
            for i in range(nl):
                pend_agent[n_pending] = a
                pend_comm[n_pending] = leaves[i]
                pend_join[n_pending] = False
                n_pending += 1
            for i in range(nj):
                pend_agent[n_pending] = a
                pend_comm[n_pending] = joins[i]
                pend_join[n_pending] = True
                n_pending += 1
    for i in range(n_pending):
        if pend_join[i]:
            _join(members, sizes, mslot, joined, njoined, jslot, pend_agent[i], pend_comm[i])
        else:
            _leave(members, sizes, mslot, joined, njoined, jslot, pend_agent[i], pend_comm[i])
    return checks, 0, 0


class _Pending:
    """Scratch buffers for decisions stored until the end of a step."""

    def __init__(self, n_agents: int, n_communities: int):
        # each agent leaves and joins at most n_communities apiece
        cap = 2 * n_agents * n_communities
        self.agent = np.empty(cap, dtype=np.int32)
        self.comm = np.empty(cap, dtype=np.int32)
        self.join = np.empty(cap, dtype=np.bool_)


def step(pop: Population, cfg: ModelConfig, check_bounds: bool = True,
         _pending: _Pending | None = None) -> int:
    """Advance ``pop`` by one time step under ``cfg``.

    Agents act in ascending id order. In synchronous mode every decision
    is stored and applied once all agents have decided, so everyone sees
    the sizes from the start of the step. Each social exposure set is
    checked against its size bound; returns how many were checked.
    """
    exp_cfg = cfg.exposure_config()
    params = cfg.benefit_params() if cfg.uses_ieb else None
    pending = _pending or _Pending(pop.n_agents, pop.n_communities)
    checks, size, bound = _step_kernel(
        pop.rng, *pop.arrays, pop.ages,
        params is None,
        exp_cfg.mode != exposure.NULL_RANDOM,
        exp_cfg.mode == exposure.SOCIAL_LARGEST_SHARE,
        exp_cfg.m, cfg.p_e, cfg.p_j, cfg.p_l,
        cfg.p_k, cfg.horizon, cfg.resolved_projection == decision.QUADRATIC,
        cfg.startup_cost, cfg.update == SEQUENTIAL, check_bounds,
        pending.agent, pending.comm, pending.join,
    )
    if checks < 0:
        raise exposure.ExposureBoundError(
            f"agent {-1 - checks} at step {pop.step}: exposure set of {size} "
            f"exceeds bound {bound}"
        )
    pop.advance()
    return checks


def run(cfg: ModelConfig, record_steps: bool = False) -> RunResult:
    start = time.perf_counter()
    pop = Population(cfg.n_agents, cfg.n_communities, cfg.seed)
    history = [pop.snapshot_sizes()] if record_steps else None
    pending = _Pending(cfg.n_agents, cfg.n_communities)
    checks = 0
    for _ in range(cfg.steps):
        checks += step(pop, cfg, _pending=pending)
        if record_steps:
            history.append(pop.snapshot_sizes())
    return RunResult(
        config=cfg,
        final_sizes=pop.snapshot_sizes(),
        per_step_sizes=history,
        wall_time=time.perf_counter() - start,
        exposure_checks=checks,
    )


def _run_cell(task) -> RunResult:
    base, seed, cell_id, replicate, params, record_steps = task
    cfg = base
    try:
        cfg = base.replace(seed=seed, **params)
        result = run(cfg, record_steps=record_steps)
    except Exception as exc:  # reported per cell, other cells carry on
        log.error("cell %d replicate %d %s failed: %s", cell_id, replicate, params, exc)
        result = RunResult(config=cfg, final_sizes=None, seed=seed,
                           error=f"{type(exc).__name__}: {exc}")
    result.cell_id = cell_id
    result.replicate = replicate
    result.params = params
    return result


def sweep_tasks(grid: SweepGrid, record_steps: bool = False) -> list[tuple]:
    return [
        (grid.base, derive_seed(grid.base.seed, cell_id, rep), cell_id, rep, params, record_steps)
        for cell_id, params in enumerate(grid.cells())
        for rep in range(grid.replicates)
    ]


def sweep(grid: SweepGrid, parallelism: int | None = None,
          record_steps: bool = False) -> list[RunResult]:
    """Run every (cell, replicate) of ``grid``; output order is cell then replicate."""
    tasks = sweep_tasks(grid, record_steps)
    workers = parallelism or os.cpu_count() or 1
    if workers == 1 or len(tasks) == 1:
        return [_run_cell(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(_run_cell, tasks))


# --- output ---------------------------------------------------------------

def write_sizes_csv(path, result: RunResult):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["community_id", "final_size"])
        for c, s in enumerate(result.final_sizes.tolist()):
            w.writerow([c, s])


def write_sweep_csv(path, results: list[RunResult], axes: list[str]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell_id", "replicate", "seed", *axes, "community_id", "final_size"])
        for r in results:
            if not r.ok:
                continue
            head = [r.cell_id, r.replicate, r.seed, *(r.params.get(a) for a in axes)]
            for c, s in enumerate(r.final_sizes.tolist()):
                w.writerow([*head, c, s])


def write_steps_csv(path, results: list[RunResult]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell_id", "replicate", "step", "community_id", "size"])
        for r in results:
            for t, sizes in enumerate(r.per_step_sizes or []):
                for c, s in enumerate(sizes.tolist()):
                    w.writerow([r.cell_id, r.replicate, t, c, s])
