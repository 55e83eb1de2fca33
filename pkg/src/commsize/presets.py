"""Named parameter grids, one per figure id."""

from __future__ import annotations

from .engine import COMBINED, IEB, NULL, SOCIAL, ModelConfig, SweepGrid

LEVELS = [0.01, 0.05, 0.1, 0.2]
P_K_LEVELS = [0.05, 0.1, 0.2]
IEB_P_E_LEVELS = [0.05, 0.1, 0.2]
M_LEVELS = [1, 2, 3, 4]

# figure id -> (base config overrides, axes); axes are listed row-major
_FIGURES = {
    "fig3": (dict(family=NULL, p_l=0.56), {"p_e": LEVELS, "p_j": LEVELS}),
    "fig4": (dict(family=SOCIAL, p_e=0.1, p_j=0.1, p_l=0.56),
             {"share": ["random", "largest"], "m": M_LEVELS}),
    "fig5": (dict(family=IEB, projection="linear"),
             {"p_e": IEB_P_E_LEVELS, "p_k": P_K_LEVELS}),
    "fig6": (dict(family=COMBINED, p_e=0.1, share="largest", projection="quadratic"),
             {"p_k": P_K_LEVELS, "m": M_LEVELS}),
    "figA1": (dict(family=IEB, projection="quadratic"),
              {"p_e": IEB_P_E_LEVELS, "p_k": P_K_LEVELS}),
    "figB1": (dict(family=SOCIAL, p_e=0.05, p_j=0.05, p_l=0.56),
              {"share": ["random", "largest"], "m": M_LEVELS}),
    "figB2": (dict(family=COMBINED, p_e=0.05, share="largest", projection="quadratic"),
              {"p_k": P_K_LEVELS, "m": M_LEVELS}),
}
# fig7 and figA1 are the same quadratic IEB grid
ALIASES = {"fig7": "figA1"}

FIGURE_IDS = tuple(sorted([*_FIGURES, *ALIASES]))


def figure_grid(figure_id: str, seed: int = 0, replicates: int = 1, **overrides) -> SweepGrid:
    """The sweep grid reproducing ``figure_id``.

    ``overrides`` replace base config fields, e.g. ``n_agents`` or ``steps``
    for quick smoke runs.
    """
    key = ALIASES.get(figure_id, figure_id)
    if key not in _FIGURES:
        raise KeyError(f"unknown figure id {figure_id!r}; choose from {', '.join(FIGURE_IDS)}")
    base, axes = _FIGURES[key]
    cfg = ModelConfig(seed=seed, **{**base, **overrides})
    return SweepGrid(base=cfg, axes={k: list(v) for k, v in axes.items()}, replicates=replicates)
