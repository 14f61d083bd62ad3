from __future__ import annotations

import json

import pytest
from numpy.testing import assert_array_equal

from riskmdp.mdp import (
    MDPDocument,
    build_gridworld,
    generate_grid_config,
    read_grid,
    read_mdp,
    write_grid,
    write_mdp,
)


def test_mdp_roundtrip_is_exact(tmp_path, two_state_mdp):
    path = write_mdp(two_state_mdp, tmp_path / "mdp.json")
    loaded = read_mdp(path)
    assert_array_equal(loaded.transition, two_state_mdp.transition)
    assert_array_equal(loaded.objective_cost, two_state_mdp.objective_cost)
    assert_array_equal(loaded.constraint_costs, two_state_mdp.constraint_costs)
    assert_array_equal(loaded.initial_distribution, two_state_mdp.initial_distribution)
    assert loaded.discount == two_state_mdp.discount


def test_gridworld_mdp_keeps_labels(tmp_path):
    mdp = build_gridworld(generate_grid_config(4, 4, 0.25, 1, seed=0))
    loaded = read_mdp(write_mdp(mdp, tmp_path / "grid_mdp.json"))
    assert loaded.action_labels == mdp.action_labels
    assert loaded.hazards == mdp.hazards
    assert_array_equal(loaded.transition, mdp.transition)


def test_grid_wrapper(tmp_path):
    config = generate_grid_config(5, 5, 0.2, 1, seed=4)
    path = write_grid(config, tmp_path / "grid.json", manifest_hash="abc")
    payload = json.loads(path.read_text(encoding="utf-8"))
    assert payload["manifest_hash"] == "abc"
    assert read_grid(path) == config


def test_bare_grid(tmp_path):
    config = generate_grid_config(3, 3, 0.0, 0, seed=0)
    path = write_grid(config, tmp_path / "bare.json")
    assert "grid" not in json.loads(path.read_text(encoding="utf-8"))
    assert read_grid(path) == config


@pytest.mark.parametrize(
    "field, value",
    [
        ("states", 3),
        ("actions", 1),
        ("kappa0", [1.0]),
        ("cost", [[1.0, 3.0]]),
        ("constraint_costs", [[[2.0, 0.5]]]),
        ("action_labels", ["only"]),
        ("hazards", [2]),
    ],
)
def test_mdp_document_rejects_mismatched_counts(tmp_path, two_state_mdp, field, value):
    path = write_mdp(two_state_mdp, tmp_path / "mdp.json")
    payload = json.loads(path.read_text(encoding="utf-8"))
    payload[field] = value
    with pytest.raises(ValueError):
        MDPDocument.model_validate(payload)


def test_read_mdp_reports_ragged_transition(tmp_path, two_state_mdp):
    path = write_mdp(two_state_mdp, tmp_path / "mdp.json")
    payload = json.loads(path.read_text(encoding="utf-8"))
    payload["transition"][0][1] = [1.0]
    path.write_text(json.dumps(payload), encoding="utf-8")
    with pytest.raises(ValueError, match="transition"):
        read_mdp(path)
