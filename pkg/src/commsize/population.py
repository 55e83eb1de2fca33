"""Mutable world state: agents, communities and who belongs where."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _join(members, sizes, mslot, joined, njoined, jslot, agent, community):
    if mslot[agent, community] >= 0:
        return
    s = sizes[community]
    members[community, s] = agent
    mslot[agent, community] = s
    sizes[community] = s + 1
    n = njoined[agent]
    joined[agent, n] = community
    jslot[agent, community] = n
    njoined[agent] = n + 1


@njit(cache=True)
def _leave(members, sizes, mslot, joined, njoined, jslot, agent, community):
    idx = mslot[agent, community]
    if idx < 0:
        return
    last = sizes[community] - 1
    moved = members[community, last]
    members[community, idx] = moved
    mslot[moved, community] = idx
    mslot[agent, community] = -1
    sizes[community] = last

    jdx = jslot[agent, community]
    jlast = njoined[agent] - 1
    moved_c = joined[agent, jlast]
    joined[agent, jdx] = moved_c
    jslot[agent, moved_c] = jdx
    jslot[agent, community] = -1
    njoined[agent] = jlast


class Population:
    """Agents, communities and the membership relation between them.

    Storage is a set of dense arrays so the hot loops can run under numba:

    * ``members[c, :sizes[c]]`` lists the agents in community ``c`` and
      ``mslot[a, c]`` is agent ``a``'s position in that list (-1 if absent);
    * ``joined[a, :njoined[a]]`` lists agent ``a``'s communities and
      ``jslot[a, c]`` is the position of ``c`` in it.

    Joins and leaves swap-remove, so size lookups, membership tests and
    uniform sampling of members are all O(1). Every community exists from
    step 0 with age 1 and is never removed.
    """

    def __init__(self, n_agents: int, n_communities: int, seed: int = 0):
        if n_agents < 1 or n_communities < 1:
            raise ValueError(
                f"need at least one agent and one community, got "
                f"n_agents={n_agents}, n_communities={n_communities}"
            )
        n, c = int(n_agents), int(n_communities)
        self.n_agents = n
        self.n_communities = c
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.step = 0
        self.ages = np.ones(c, dtype=np.int64)
        self.sizes = np.zeros(c, dtype=np.int64)
        self.members = np.zeros((c, n), dtype=np.int32)
        self.mslot = np.full((n, c), -1, dtype=np.int32)
        self.joined = np.zeros((n, c), dtype=np.int32)
        self.njoined = np.zeros(n, dtype=np.int64)
        self.jslot = np.full((n, c), -1, dtype=np.int32)

    def __repr__(self):
        return (
            f"Population(n_agents={self.n_agents}, n_communities={self.n_communities}, "
            f"step={self.step}, memberships={int(self.sizes.sum())})"
        )

    @property
    def arrays(self):
        return (self.members, self.sizes, self.mslot, self.joined, self.njoined, self.jslot)

    def _check(self, agent: int, community: int):
        if not 0 <= agent < self.n_agents:
            raise IndexError(f"unknown agent id {agent}")
        if not 0 <= community < self.n_communities:
            raise IndexError(f"unknown community id {community}")

    def size(self, community: int) -> int:
        if not 0 <= community < self.n_communities:
            raise IndexError(f"unknown community id {community}")
        return int(self.sizes[community])

    def members_of(self, community: int) -> np.ndarray:
        return self.members[community, : self.sizes[community]]

    def communities_of(self, agent: int) -> set[int]:
        return set(self.joined[agent, : self.njoined[agent]].tolist())

    def is_member(self, agent: int, community: int) -> bool:
        return bool(self.mslot[agent, community] >= 0)

    def join(self, agent: int, community: int):
        self._check(agent, community)
        _join(*self.arrays, agent, community)

    def leave(self, agent: int, community: int):
        self._check(agent, community)
        _leave(*self.arrays, agent, community)

    def advance(self):
        """Close out a time step: every community ages by one."""
        self.ages += 1
        self.step += 1

    def snapshot_sizes(self) -> np.ndarray:
        """Community sizes ordered by ascending community id."""
        return self.sizes.copy()

    def membership_pairs(self) -> set[tuple[int, int]]:
        """All (agent, community) pairs, rebuilt from the agent side."""
        return {
            (a, int(c))
            for a in range(self.n_agents)
            for c in self.joined[a, : self.njoined[a]]
        }

    def check_consistency(self):
        """Raise AssertionError if the two sides of the relation disagree."""
        from_agents = self.membership_pairs()
        from_communities = {
            (int(a), c) for c in range(self.n_communities) for a in self.members_of(c)
        }
        assert from_agents == from_communities, "membership relation out of sync"
        assert len(from_agents) == self.sizes.sum() == self.njoined.sum()
        for c in range(self.n_communities):
            for i, a in enumerate(self.members_of(c)):
                assert self.mslot[a, c] == i
        for a in range(self.n_agents):
            for i, c in enumerate(self.joined[a, : self.njoined[a]]):
                assert self.jslot[a, c] == i
        assert (self.mslot >= 0).sum() == len(from_agents)
        assert (self.jslot >= 0).sum() == len(from_agents)


def new_population(n_agents: int, n_communities: int, seed: int = 0) -> Population:
    return Population(n_agents, n_communities, seed)


def community_size(pop: Population, community: int) -> int:
    return pop.size(community)


def snapshot_sizes(pop: Population) -> np.ndarray:
    return pop.snapshot_sizes()
