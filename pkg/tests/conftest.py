import numpy as np
import pytest

from commsize.population import Population


def populate(pop: Population, memberships):
    """Join each (agent, community) pair in order."""
    for a, c in memberships:
        pop.join(a, c)
    return pop


def random_population(seed, n_agents=30, n_communities=8, density=0.3, age=1):
    rng = np.random.default_rng(seed)
    pop = Population(n_agents, n_communities, seed=seed + 1)
    mask = rng.random((n_agents, n_communities)) < density
    for a, c in zip(*np.nonzero(mask)):
        pop.join(int(a), int(c))
    pop.ages[:] = age
    return pop


@pytest.fixture
def small_pop():
    return Population(12, 5, seed=3)


# --- acceptance plumbing ---------------------------------------------------

ACCEPTANCE_SEED = 1
ACCEPTANCE_REPLICATES = 5
_verdicts: list[str] = []
_sweeps: dict = {}


def figure_results(figure_id):
    """Full-scale sweep of a figure grid, run once per session."""
    from commsize.engine import sweep
    from commsize.presets import figure_grid

    if figure_id not in _sweeps:
        grid = figure_grid(figure_id, seed=ACCEPTANCE_SEED, replicates=ACCEPTANCE_REPLICATES)
        _sweeps[figure_id] = (grid, sweep(grid))
    return _sweeps[figure_id]


def verdict(number, label, ok, detail=""):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {label}"
    if detail:
        line += f"  [{detail}]"
    _verdicts.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if _verdicts:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_verdicts):
            terminalreporter.write_line(line)
