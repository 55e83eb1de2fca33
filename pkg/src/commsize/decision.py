"""Join/leave decisions: random coin flips or ranking by expected benefit."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numba import njit

from .population import Population

LINEAR = "linear"
QUADRATIC = "quadratic"
PROJECTIONS = (LINEAR, QUADRATIC)


@dataclass(frozen=True)
class BenefitParams:
    horizon: int = 6
    startup_cost: float = 0.5
    projection: str = LINEAR
    p_k: float = 0.1

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.startup_cost < 0:
            raise ValueError(f"startup_cost must be non-negative, got {self.startup_cost}")
        if self.projection not in PROJECTIONS:
            raise ValueError(f"unknown projection {self.projection!r}")
        if not 0.0 < self.p_k <= 1.0:
            raise ValueError(f"p_k must lie in (0, 1], got {self.p_k}")


@dataclass(frozen=True)
class BenefitEstimate:
    community: int
    s_c: int
    s_f: float
    b_p: float
    b_ea: float
    total: float
    is_member: bool


# --- formulas -------------------------------------------------------------

@njit(cache=True)
def _project(s_c, age, horizon, quadratic):
    if quadratic:
        g = (age + horizon) / age
        return s_c * g * g
    return s_c + horizon * (s_c / age)


def project_size(s_c: float, age: int, horizon: int = 6, projection: str = LINEAR) -> float:
    """Extrapolate a community's size ``horizon`` steps ahead.

    ``linear`` keeps growing at the average rate so far, S_C / age.
    ``quadratic`` squares the same relative growth factor:
    S_F = S_C * ((age + horizon) / age) ** 2.
    """
    if age < 1:
        raise ValueError(f"age must be at least 1, got {age}")
    if projection not in PROJECTIONS:
        raise ValueError(f"unknown projection {projection!r}")
    return float(_project(float(s_c), float(age), float(horizon), projection == QUADRATIC))


def participation_benefit(s_f: float) -> float:
    if s_f < 0:
        raise ValueError(f"projected size must be non-negative, got {s_f}")
    return math.log1p(s_f)


def early_adopter_benefit(s_f: float, s_c: float) -> float:
    return math.log1p(s_f) / math.log(s_c + 2)


@njit(cache=True)
def _benefit_total(s_c, age, member, horizon, quadratic, startup_cost):
    s_f = _project(s_c, age, horizon, quadratic)
    b_p = math.log1p(s_f)
    total = b_p + b_p / math.log(s_c + 2.0)
    if not member:
        total -= startup_cost
    return total


def total_benefit(pop: Population, agent: int, community: int,
                  params: BenefitParams) -> BenefitEstimate:
    s_c = pop.size(community)
    s_f = project_size(s_c, int(pop.ages[community]), params.horizon, params.projection)
    b_p = participation_benefit(s_f)
    b_ea = early_adopter_benefit(s_f, s_c)
    member = pop.is_member(agent, community)
    total = b_p + b_ea - (0.0 if member else params.startup_cost)
    return BenefitEstimate(community, s_c, s_f, b_p, b_ea, total, member)


# --- random decisions -----------------------------------------------------

@njit(cache=True)
def _random_leaves(rng, joined, njoined, agent, p_l, out):
    current = np.sort(joined[agent, : njoined[agent]])
    n = 0
    for c in current:
        if rng.random() < p_l:
            out[n] = c
            n += 1
    return n


@njit(cache=True)
def _random_joins(rng, mslot, agent, buf, count, p_j, out):
    exposed = np.sort(buf[:count])
    n = 0
    for c in exposed:
        # already-joined communities still consume their draw
        if rng.random() < p_j and mslot[agent, c] < 0:
            out[n] = c
            n += 1
    return n


def _as_buffer(pop: Population, exposure: Iterable[int]):
    ids = np.fromiter(sorted(set(exposure)), dtype=np.int64)
    mark = np.zeros(pop.n_communities, dtype=np.bool_)
    mark[ids] = True
    buf = np.empty(pop.n_communities, dtype=np.int64)
    buf[: ids.size] = ids
    return mark, buf, ids.size


def random_leaves(pop: Population, agent: int, p_l: float) -> set[int]:
    """One exit draw per current community, in ascending id order."""
    out = np.empty(pop.n_communities, dtype=np.int64)
    n = _random_leaves(pop.rng, pop.joined, pop.njoined, agent, p_l, out)
    return set(out[:n].tolist())


def random_joins(pop: Population, agent: int, exposure: Iterable[int], p_j: float) -> set[int]:
    """One join draw per exposed community, in ascending id order."""
    _, buf, count = _as_buffer(pop, exposure)
    out = np.empty(pop.n_communities, dtype=np.int64)
    n = _random_joins(pop.rng, pop.mslot, agent, buf, count, p_j, out)
    return set(out[:n].tolist())


def random_decide(pop: Population, agent: int, exposure: Iterable[int],
                  p_j: float, p_l: float) -> tuple[set[int], set[int]]:
    """Returns (joins, leaves). Exit draws come before join draws."""
    leaves = random_leaves(pop, agent, p_l)
    joins = random_joins(pop, agent, exposure, p_j)
    return joins, leaves


# --- ranking by expected benefit ------------------------------------------

@njit(cache=True)
def keep_count(p_k, n):
    # the epsilon stops float noise such as 0.2 * 15 = 3.0000000000000004
    return int(math.ceil(p_k * n - 1e-9))


@njit(cache=True)
def select_top(totals, tie_keys, n_keep):
    """Indices of the ``n_keep`` largest totals; ties go to the smaller key."""
    by_key = np.argsort(tie_keys, kind="mergesort")
    by_total = np.argsort(-totals[by_key], kind="mergesort")
    return by_key[by_total][:n_keep]


@njit(cache=True)
def _ieb_decide(rng, sizes, ages, mslot, agent, mark, p_k, horizon, quadratic,
                startup_cost, joins_out, leaves_out):
    n_communities = sizes.shape[0]
    cand = np.empty(n_communities, dtype=np.int64)
    n = 0
    for c in range(n_communities):
        if mark[c] or mslot[agent, c] >= 0:
            cand[n] = c
            n += 1
    if n == 0:
        return 0, 0
    totals = np.empty(n)
    for i in range(n):
        c = cand[i]
        totals[i] = _benefit_total(float(sizes[c]), float(ages[c]), mslot[agent, c] >= 0,
                                   float(horizon), quadratic, startup_cost)
    keys = np.empty(n)
    for i in range(n):
        keys[i] = rng.random()
    keep = np.zeros(n, dtype=np.bool_)
    for i in select_top(totals, keys, keep_count(p_k, n)):
        keep[i] = True
    nj = 0
    nl = 0
    for i in range(n):
        c = cand[i]
        member = mslot[agent, c] >= 0
        if keep[i] and not member:
            joins_out[nj] = c
            nj += 1
        elif member and not keep[i]:
            leaves_out[nl] = c
            nl += 1
    return nj, nl


def ieb_decide(pop: Population, agent: int, exposure: Iterable[int],
               params: BenefitParams) -> tuple[set[int], set[int]]:
    """Keep the top ``p_k`` share (rounded up) of current and exposed communities.

    Candidates are ranked by total expected benefit with uniform random
    tie-breaks. The agent ends the step in exactly the kept communities,
    so it joins kept ones it is not in and leaves current ones not kept.
    Returns (joins, leaves).
    """
    mark, _, _ = _as_buffer(pop, exposure)
    joins = np.empty(pop.n_communities, dtype=np.int64)
    leaves = np.empty(pop.n_communities, dtype=np.int64)
    nj, nl = _ieb_decide(
        pop.rng, pop.sizes, pop.ages, pop.mslot, agent, mark, params.p_k,
        params.horizon, params.projection == QUADRATIC, params.startup_cost, joins, leaves,
    )
    return set(joins[:nj].tolist()), set(leaves[:nl].tolist())


# --- utility surface --------------------------------------------------------

def utility_grid(s_c_range: Iterable[float], s_f_range: Iterable[float],
                 startup_cost: float = 0.5) -> np.ndarray:
    """Non-member total benefit, rows indexed by S_F and columns by S_C."""
    s_c = np.asarray(list(s_c_range), dtype=float)
    s_f = np.asarray(list(s_f_range), dtype=float)
    if s_c.size == 0 or s_f.size == 0:
        raise ValueError("utility_grid needs non-empty ranges")
    if (s_c < 0).any() or (s_f < 0).any():
        raise ValueError("utility_grid ranges must be non-negative")
    b_p = np.log1p(s_f)[:, None]
    return b_p + b_p / np.log(s_c + 2)[None, :] - startup_cost


def write_utility_grid(path, s_c_range, s_f_range, startup_cost: float = 0.5) -> np.ndarray:
    s_c = list(s_c_range)
    s_f = list(s_f_range)
    grid = utility_grid(s_c, s_f, startup_cost)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s_c", "s_f", "total"])
        for i, f in enumerate(s_f):
            for j, c in enumerate(s_c):
                w.writerow([c, f, repr(float(grid[i, j]))])
    return grid
