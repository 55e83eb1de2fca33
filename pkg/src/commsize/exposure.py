"""Exposure sets: which communities an agent gets to consider in a step."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .population import Population

NULL_RANDOM = "null_random"
SOCIAL_RANDOM_SHARE = "social_random_share"
SOCIAL_LARGEST_SHARE = "social_largest_share"
MODES = (NULL_RANDOM, SOCIAL_RANDOM_SHARE, SOCIAL_LARGEST_SHARE)


class ExposureBoundError(AssertionError):
    pass


@dataclass(frozen=True)
class ExposureConfig:
    mode: str = NULL_RANDOM
    p_e: float = 0.1
    m: int = 1
    fallback_p_e: float = 0.1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown exposure mode {self.mode!r}; expected one of {MODES}")
        for name in ("p_e", "fallback_p_e"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m}")


@njit(cache=True)
def neighbor_count(community_size):
    """Fellow members sampled from a community: max(1, ceil(ln(size + 1)))."""
    return max(1, int(math.ceil(math.log(community_size + 1.0))))


@njit(cache=True)
def _sample_indices(rng, n, k, out, keys, vals):
    # partial Fisher-Yates over range(n); the k displaced slots are tracked
    # in a tiny linear map (keys -> vals) since k is at most a handful
    used = 0
    for i in range(k):
        j = i + int(rng.random() * (n - i))
        vi = i
        vj = j
        for t in range(used):
            if keys[t] == i:
                vi = vals[t]
            if keys[t] == j:
                vj = vals[t]
        out[i] = vj
        found = False
        for t in range(used):
            if keys[t] == j:
                vals[t] = vi
                found = True
        if not found:
            keys[used] = j
            vals[used] = vi
            used += 1


def sample_indices(rng: np.random.Generator, n: int, k: int) -> list[int]:
    """``k`` distinct integers from ``range(n)``, consuming exactly ``k`` uniforms."""
    if not 0 <= k <= n:
        raise ValueError(f"cannot draw {k} distinct values from range({n})")
    out = np.empty(k, dtype=np.int64)
    _sample_indices(rng, n, k, out, np.empty(k, dtype=np.int64), np.empty(k, dtype=np.int64))
    return out.tolist()


@njit(cache=True)
def _add(c, mark, buf, count):
    if not mark[c]:
        mark[c] = True
        buf[count] = c
        count += 1
    return count


@njit(cache=True)
def _null_exposure(rng, n_communities, p_e, mark, buf):
    count = 0
    for c in range(n_communities):
        if rng.random() < p_e:
            count = _add(c, mark, buf, count)
    return count


@njit(cache=True)
def _share(rng, sizes, joined, njoined, jslot, neighbor, via, m, largest,
           mark, buf, count, keys, picks, scratch):
    n_other = njoined[neighbor] - 1
    skip = jslot[neighbor, via]
    if n_other <= m:
        for j in range(n_other + 1):
            if j != skip:
                count = _add(joined[neighbor, j], mark, buf, count)
        return count
    if largest:
        # one tie-break key per other community, in list order
        t = 0
        for j in range(n_other + 1):
            if j != skip:
                keys[t] = rng.random()
                picks[t] = joined[neighbor, j]
                t += 1
        for r in range(m):
            best = r
            for t in range(r + 1, n_other):
                sb = sizes[picks[best]]
                st = sizes[picks[t]]
                if st > sb or (st == sb and keys[t] < keys[best]):
                    best = t
            picks[r], picks[best] = picks[best], picks[r]
            keys[r], keys[best] = keys[best], keys[r]
            count = _add(picks[r], mark, buf, count)
        return count
    _sample_indices(rng, n_other, m, picks, scratch[0], scratch[1])
    for r in range(m):
        j = picks[r]
        if j >= skip:
            j += 1
        count = _add(joined[neighbor, j], mark, buf, count)
    return count


@njit(cache=True)
def _social_exposure(rng, members, sizes, mslot, joined, njoined, jslot, agent,
                     m, largest, fallback_p_e, mark, buf):
    """Fill ``buf`` with the agent's exposure set; returns (count, size bound)."""
    n_current = njoined[agent]
    if n_current == 0:
        return _null_exposure(rng, sizes.shape[0], fallback_p_e, mark, buf), -1
    current = np.sort(joined[agent, :n_current])
    n_communities = sizes.shape[0]
    keys = np.empty(n_communities, dtype=np.float64)
    picks = np.empty(n_communities, dtype=np.int64)
    idx = np.empty(64, dtype=np.int64)
    scratch = np.empty((2, 64), dtype=np.int64)
    count = 0
    bound = 0
    for c in current:
        size = sizes[c]
        k = neighbor_count(size)
        bound += k * m
        own = mslot[agent, c]
        n_others = size - 1
        if n_others <= k:
            for i in range(size):
                if i != own:
                    count = _share(rng, sizes, joined, njoined, jslot, members[c, i], c,
                                   m, largest, mark, buf, count, keys, picks, scratch)
        else:
            _sample_indices(rng, n_others, k, idx, scratch[0], scratch[1])
            for r in range(k):
                i = idx[r]
                if i >= own:
                    i += 1
                count = _share(rng, sizes, joined, njoined, jslot, members[c, i], c,
                               m, largest, mark, buf, count, keys, picks, scratch)
    return count, bound


def _collect(mark, buf, count) -> set[int]:
    out = buf[:count]
    mark[out] = False
    return set(out.tolist())


def null_exposure(pop: Population, agent: int, p_e: float) -> set[int]:
    """Each community independently with probability ``p_e``."""
    mark = np.zeros(pop.n_communities, dtype=np.bool_)
    buf = np.empty(pop.n_communities, dtype=np.int64)
    return _collect(mark, buf, _null_exposure(pop.rng, pop.n_communities, p_e, mark, buf))


def social_exposure(pop: Population, agent: int, cfg: ExposureConfig) -> set[int]:
    """Communities shared by fellow members of the agent's communities.

    From every community the agent is in, ``neighbor_count(size)`` other
    members are drawn without replacement; each shares up to ``cfg.m`` of
    its other communities, picked at random or largest-first (random
    tie-break) depending on ``cfg.mode``. The result may include
    communities the agent already belongs to. Agents with no communities
    fall back to null exposure at ``cfg.fallback_p_e``.
    """
    if cfg.mode == NULL_RANDOM:
        raise ValueError("social_exposure called with null_random mode")
    mark = np.zeros(pop.n_communities, dtype=np.bool_)
    buf = np.empty(pop.n_communities, dtype=np.int64)
    count, _ = _social_exposure(
        pop.rng, *pop.arrays, agent, cfg.m, cfg.mode == SOCIAL_LARGEST_SHARE,
        cfg.fallback_p_e, mark, buf,
    )
    return _collect(mark, buf, count)


def expose(pop: Population, agent: int, cfg: ExposureConfig) -> set[int]:
    if cfg.mode == NULL_RANDOM:
        return null_exposure(pop, agent, cfg.p_e)
    return social_exposure(pop, agent, cfg)


def exposure_bound(pop: Population, agent: int, m: int) -> int:
    """Largest possible social exposure set: ``m`` per sampled neighbor."""
    return m * sum(neighbor_count(pop.size(c)) for c in pop.communities_of(agent))
