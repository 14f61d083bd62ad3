from __future__ import annotations

import csv
import json

import pytest

from riskmdp.cli import build_parser, main
from riskmdp.cli.main import (
    EXIT_OK,
    EXIT_USAGE,
    SOUNDNESS_TOL,
    default_options,
    merge_with_config,
)
from riskmdp.cli.manifest import manifest_path, read_manifest
from riskmdp.evaluation.monte_carlo import TABLE_COLUMNS
from riskmdp.mdp import read_grid, read_mdp, write_mdp
from riskmdp.planner import PlanStatus, read_plan


def _gen(tmp_path, size, name="grid.json", *extra):
    output = tmp_path / name
    code = main(["gen-grid", "--size", size, "--output", str(output), *extra])
    assert code == EXIT_OK
    return output


@pytest.fixture(scope="module")
def planned_10x10(tmp_path_factory):
    root = tmp_path_factory.mktemp("planned")
    grid = root / "grid.json"
    plan = root / "plan.json"
    assert main(["gen-grid", "--size", "10x10", "--seed", "7", "--output", str(grid)]) == EXIT_OK
    assert main(["plan", "--grid", str(grid), "--beta", "50", "--output", str(plan)]) == EXIT_OK
    return grid, plan


class TestGenGrid:
    def test_same_seed_same_bytes(self, tmp_path):
        first = _gen(tmp_path, "10x10", "a.json", "--seed", "7")
        second = _gen(tmp_path, "10x10", "b.json", "--seed", "7")
        assert first.read_bytes() == second.read_bytes()
        grid = read_grid(first)
        assert grid.n_cells == 100
        # Uncertain obstacle count comes from config.yaml for side 10.
        assert len(grid.uncertain_obstacles) == 3

    def test_manifest_matches_output(self, tmp_path):
        output = _gen(tmp_path, "10x10", "grid.json", "--seed", "7")
        manifest = read_manifest(manifest_path(output))
        stored = json.loads(output.read_text(encoding="utf-8"))["manifest_hash"]
        assert manifest.hash == stored
        assert manifest.seeds == {"layout": 7}
        assert str(output) in manifest.outputs

    def test_two_cell_grid_and_mdp_output(self, tmp_path):
        mdp_path = tmp_path / "mdp.json"
        output = _gen(tmp_path, "1x2", "grid.json", "--mdp-output", str(mdp_path))
        assert read_grid(output).n_cells == 2
        assert read_mdp(mdp_path).n_states == 2

    def test_bad_size(self, tmp_path):
        code = main(["gen-grid", "--size", "0x3", "--output", str(tmp_path / "g.json")])
        assert code == EXIT_USAGE


class TestPlan:
    def test_epsilon_out_of_range(self, tmp_path):
        grid = _gen(tmp_path, "1x2")
        code = main(["plan", "--grid", str(grid), "--measure", "cvar", "--epsilon", "1.5"])
        assert code == EXIT_USAGE

    def test_missing_problem(self, tmp_path):
        assert main(["plan", "--beta", "1", "--output", str(tmp_path / "p.json")]) == EXIT_USAGE

    def test_missing_budget(self, tmp_path):
        grid = _gen(tmp_path, "1x2")
        assert main(["plan", "--grid", str(grid), "--output", str(tmp_path / "p.json")]) == EXIT_USAGE

    def test_single_cell_bound_is_zero(self, tmp_path):
        grid = _gen(tmp_path, "1x1")
        output = tmp_path / "plan.json"
        code = main(
            [
                "plan",
                "--grid", str(grid),
                "--measure", "cvar",
                "--epsilon", "0.15",
                "--beta", "1",
                "--output", str(output),
            ]
        )
        assert code == EXIT_OK
        result = read_plan(output)
        assert result.status == PlanStatus.CERTIFIED
        assert result.lower_bound == pytest.approx(0.0, abs=1e-9)

    def test_writes_plan_and_manifest(self, planned_10x10):
        grid, plan = planned_10x10
        result = read_plan(plan)
        assert result.certified
        assert len(result.policy) == read_grid(grid).n_cells
        manifest = read_manifest(manifest_path(plan))
        assert set(manifest.input_digests) == {"grid"}

    def test_warm_start_keeps_bounds_ordered(self, tmp_path):
        grid = _gen(tmp_path, "1x2")
        first = tmp_path / "e.json"
        second = tmp_path / "cvar.json"
        base = ["plan", "--grid", str(grid), "--beta", "50"]
        assert main([*base, "--output", str(first)]) == EXIT_OK
        code = main(
            [*base, "--measure", "cvar", "--epsilon", "0.3", "--warm-start", str(first),
             "--output", str(second)]
        )
        assert code == EXIT_OK
        assert read_plan(second).lower_bound >= read_plan(first).lower_bound - 1e-9
        manifest = read_manifest(manifest_path(second))
        assert set(manifest.input_digests) == {"grid", "warm_start"}

    def test_mdp_counts_must_match_arrays(self, tmp_path, two_state_mdp):
        path = write_mdp(two_state_mdp, tmp_path / "mdp.json")
        payload = json.loads(path.read_text(encoding="utf-8"))
        payload["states"] = 5
        path.write_text(json.dumps(payload), encoding="utf-8")
        output = tmp_path / "p.json"
        code = main(["plan", "--mdp", str(path), "--beta", "10", "--output", str(output)])
        assert code == EXIT_USAGE


class TestEvaluate:
    def test_missing_plan(self, tmp_path):
        grid = _gen(tmp_path, "1x2")
        code = main(["evaluate", "--grid", str(grid), "--plan", str(tmp_path / "none.json")])
        assert code == EXIT_USAGE

    def test_report_and_table(self, planned_10x10, tmp_path):
        grid, plan = planned_10x10
        output = tmp_path / "report.json"
        code = main(
            [
                "evaluate",
                "--grid", str(grid),
                "--plan", str(plan),
                "--runs", "8",
                "--perturb", "0.5",
                "--output", str(output),
            ]
        )
        assert code == EXIT_OK
        report = json.loads(output.read_text(encoding="utf-8"))
        assert report["runs"] == 8
        assert len(report["summaries"]) == 8
        assert 0.0 <= report["failure_rate"] <= 1.0
        with output.with_suffix(".csv").open(encoding="utf-8") as f:
            rows = list(csv.reader(f))
        assert tuple(rows[0]) == TABLE_COLUMNS
        assert rows[1][2] == "10x10"
        assert rows[1][-1] == report["manifest_hash"] != ""


class TestRender:
    def test_cells_and_arrows(self, planned_10x10, tmp_path):
        grid, plan = planned_10x10
        output = tmp_path / "plan.svg"
        assert main(["render", "--grid", str(grid), "--plan", str(plan), "--output", str(output)]) == EXIT_OK
        svg = output.read_text(encoding="utf-8")
        assert svg.count('class="cell"') == 100
        # Every cell but the absorbing goal carries an arrow.
        assert svg.count('class="arrow"') == 99

    def test_byte_identical(self, planned_10x10, tmp_path):
        grid, plan = planned_10x10
        outputs = [tmp_path / "a.svg", tmp_path / "b.svg"]
        for output in outputs:
            main(["render", "--grid", str(grid), "--plan", str(plan), "--output", str(output)])
        assert outputs[0].read_bytes() == outputs[1].read_bytes()

    def test_single_cell_has_no_arrow(self, tmp_path):
        grid = _gen(tmp_path, "1x1")
        plan = tmp_path / "plan.json"
        assert main(["plan", "--grid", str(grid), "--beta", "1", "--output", str(plan)]) == EXIT_OK
        output = tmp_path / "plan.svg"
        assert main(["render", "--grid", str(grid), "--plan", str(plan), "--output", str(output)]) == EXIT_OK
        svg = output.read_text(encoding="utf-8")
        assert svg.count('class="cell"') == 1
        assert 'class="arrow"' not in svg


class TestOracle:
    def test_bound_below_optimum(self, two_state_mdp, tmp_path):
        mdp = write_mdp(two_state_mdp, tmp_path / "mdp.json")
        output = tmp_path / "oracle.json"
        code = main(
            [
                "oracle",
                "--mdp", str(mdp),
                "--measure", "cvar",
                "--epsilon", "0.5",
                "--beta", "10",
                "--output", str(output),
            ]
        )
        assert code == EXIT_OK
        document = json.loads(output.read_text(encoding="utf-8"))
        assert document["oracle"]["feasible"]
        assert document["gap"] >= -SOUNDNESS_TOL

    def test_too_large(self, two_state_mdp, tmp_path):
        mdp = write_mdp(two_state_mdp, tmp_path / "mdp.json")
        code = main(
            [
                "oracle",
                "--mdp", str(mdp),
                "--beta", "10",
                "--max-policies", "1",
                "--output", str(tmp_path / "oracle.json"),
            ]
        )
        assert code == EXIT_USAGE


class TestOptions:
    def test_flags_beat_config_beat_defaults(self, tmp_path):
        config = tmp_path / "evaluate.yaml"
        config.write_text("runs: 50\nseed: 9\nunknown: 1\n", encoding="utf-8")
        args = build_parser().parse_args(
            ["evaluate", "--grid", "g.json", "--plan", "p.json", "--runs", "5", "--config", str(config)]
        )
        merged, path = merge_with_config(args, default_options("evaluate"))
        assert path == config
        assert merged["runs"] == 5
        assert merged["seed"] == 9
        assert merged["perturb"] == pytest.approx(0.2)
        assert "unknown" not in merged

    def test_bad_config_file(self, tmp_path):
        config = tmp_path / "bad.yaml"
        config.write_text("- a\n- b\n", encoding="utf-8")
        code = main(["render", "--grid", "g.json", "--plan", "p.json", "--config", str(config)])
        assert code == EXIT_USAGE
