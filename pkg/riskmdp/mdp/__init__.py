from riskmdp.mdp.gridworld import (
    ACTION_LABELS,
    build_gridworld,
    cell_to_state,
    generate_grid_config,
    parse_size,
    perturb_obstacles,
    state_to_cell,
)
from riskmdp.mdp.io import MDPDocument, read_grid, read_mdp, write_grid, write_mdp
from riskmdp.mdp.types import (
    MDP,
    DiscreteDistribution,
    GridConfig,
    IssueKind,
    SlipModel,
    ValidationIssue,
    ValidationReport,
)
from riskmdp.mdp.validate import (
    absorbing_states,
    row_support,
    successor_distribution,
    validate_mdp,
)

__all__ = [
    "ACTION_LABELS",
    "MDP",
    "MDPDocument",
    "DiscreteDistribution",
    "GridConfig",
    "IssueKind",
    "SlipModel",
    "ValidationIssue",
    "ValidationReport",
    "absorbing_states",
    "build_gridworld",
    "cell_to_state",
    "generate_grid_config",
    "parse_size",
    "perturb_obstacles",
    "read_grid",
    "read_mdp",
    "row_support",
    "state_to_cell",
    "successor_distribution",
    "validate_mdp",
    "write_grid",
    "write_mdp",
]
