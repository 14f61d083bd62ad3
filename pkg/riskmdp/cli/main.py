"""Command line entry point.

Usage examples:
    riskmdp gen-grid --size 10x10 --uncertain 3 --seed 7 --output out/grid.json
    riskmdp plan --grid out/grid.json --measure evar --epsilon 0.15 --beta 50 --output out/plan.json
    riskmdp evaluate --grid out/grid.json --plan out/plan.json --runs 100 --perturb 0.2
    riskmdp render --grid out/grid.json --plan out/plan.json --output out/plan.svg
    riskmdp oracle --mdp small.json --measure cvar --epsilon 0.5 --beta 30
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
from collections.abc import Callable, Mapping, Sequence
from pathlib import Path
from typing import Any

import yaml
from rich.console import Console
from rich.table import Table

from riskmdp.cli.manifest import RunManifest, write_manifest
from riskmdp.cli.render import render_plan, write_svg
from riskmdp.errors import InstanceTooLargeError, PlannerConfigError
from riskmdp.evaluation import (
    InstanceMetadata,
    monte_carlo_report,
    write_report_json,
    write_table_csv,
)
from riskmdp.log import set_run_id, setup_logging
from riskmdp.mdp import (
    MDP,
    GridConfig,
    SlipModel,
    build_gridworld,
    generate_grid_config,
    parse_size,
    read_grid,
    read_mdp,
    write_grid,
    write_mdp,
)
from riskmdp.planner import (
    PlannerConfig,
    PlanResult,
    PlanStatus,
    brute_force_constrained_optimum,
    plan,
    read_plan,
    write_oracle,
    write_plan,
)
from riskmdp.risk import RiskKind, RiskMeasure
from riskmdp.runtime_config import (
    default_budget,
    default_layout_seed,
    default_uncertain,
    get_float,
    get_int,
    get_section,
)
from riskmdp.solver import CCPSettings, write_trace_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_INFEASIBLE = 4

SOUNDNESS_TOL = 1e-6


def _stdout() -> Console:
    return Console(highlight=False, soft_wrap=True)


def _stderr() -> Console:
    return Console(stderr=True, highlight=False, soft_wrap=True)


def _epsilon(text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid epsilon {text!r}") from exc
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"epsilon must lie in (0, 1], got {value}")
    return value


def _probability(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"probability must lie in [0, 1], got {value}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _problem_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--grid", type=str, help="grid.json written by gen-grid.")
    parser.add_argument("--mdp", type=str, help="mdp.json with an explicit MDP.")
    parser.add_argument(
        "--measure",
        choices=[k.value for k in RiskKind],
        help="One-step risk measure (default: expectation).",
    )
    parser.add_argument("--epsilon", type=_epsilon, help="Risk level ε in (0, 1].")
    parser.add_argument(
        "--beta", type=float, nargs="+", help="Constraint budget(s) β, one per constraint cost."
    )
    parser.add_argument(
        "--gamma", type=float, help="Discount factor (default: config, or the MDP file's)."
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", type=str, help="YAML file with defaults for this command.")
    common.add_argument("--log-level", type=str, help="Logging level (default: WARNING).")
    common.add_argument("--log-dir", type=str, help="Also write JSON logs to this directory.")

    parser = argparse.ArgumentParser(
        prog="riskmdp",
        description="Risk-averse constrained MDP planning on grid worlds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(
            name, parents=[common], help=help_text, argument_default=argparse.SUPPRESS
        )

    gen = command("gen-grid", "Generate a seeded grid-world configuration.")
    gen.add_argument("--size", type=str, required=True, help="Grid size MxN, e.g. 10x10.")
    gen.add_argument("--obstacle-frac", type=_probability, help="Obstacle fraction (default 0.25).")
    gen.add_argument("--uncertain", type=int, help="Number of uncertain single-cell obstacles.")
    gen.add_argument("--seed", type=int, help="Layout seed.")
    gen.add_argument("--slip-cardinal", type=_probability, help="Slip probability of E/W/N/S.")
    gen.add_argument("--slip-diagonal", type=_probability, help="Slip probability of diagonals.")
    gen.add_argument("--gamma", type=float, help="Discount used for --mdp-output.")
    gen.add_argument("--output", type=str, help="Output grid.json (default: grid.json).")
    gen.add_argument("--mdp-output", type=str, help="Also write the built MDP as mdp.json.")

    plan_cmd = command("plan", "Solve for a risk-averse policy and its lower bound.")
    _problem_arguments(plan_cmd)
    plan_cmd.add_argument("--max-iterations", type=_positive_int, help="CCP iteration limit.")
    plan_cmd.add_argument("--tau0", type=float, help="Initial CCP penalty weight.")
    plan_cmd.add_argument("--output", type=str, help="Output plan.json (default: plan.json).")
    plan_cmd.add_argument("--trace", type=str, help="CCP trace CSV (default: <output>.trace.csv).")
    plan_cmd.add_argument(
        "--warm-start", type=str, help="Start the CCP from this certified plan.json."
    )

    evaluate = command("evaluate", "Monte Carlo failure rates of a plan on perturbed maps.")
    evaluate.add_argument("--grid", type=str, required=True, help="grid.json of the plan.")
    evaluate.add_argument("--plan", type=str, required=True, help="plan.json to evaluate.")
    evaluate.add_argument("--runs", type=_positive_int, help="Number of runs (default 100).")
    evaluate.add_argument("--perturb", type=_probability, help="Obstacle move probability.")
    evaluate.add_argument("--seed", type=int, help="Evaluation seed (default 0).")
    evaluate.add_argument("--max-steps", type=_positive_int, help="Episode length cap.")
    evaluate.add_argument("--workers", type=_positive_int, help="Thread cap for the runs.")
    evaluate.add_argument("--output", type=str, help="Report JSON (default: report.json).")
    evaluate.add_argument("--table", type=str, help="Table CSV (default: <output>.csv).")

    render = command("render", "Static SVG of a plan: value heatmap and action arrows.")
    render.add_argument("--grid", type=str, required=True, help="grid.json of the plan.")
    render.add_argument("--plan", type=str, required=True, help="plan.json to draw.")
    render.add_argument("--output", type=str, help="Output SVG (default: plan.svg).")

    oracle = command("oracle", "Brute-force the constrained optimum and audit the bound.")
    _problem_arguments(oracle)
    oracle.add_argument("--plan", type=str, help="Compare against this plan instead of solving.")
    oracle.add_argument("--max-policies", type=_positive_int, help="Enumeration limit.")
    oracle.add_argument("--output", type=str, help="Output oracle.json (default: oracle.json).")
    return parser


def _common_defaults() -> dict[str, Any]:
    return {"log_level": "WARNING", "log_dir": None}


def _problem_defaults() -> dict[str, Any]:
    return {
        "grid": None,
        "mdp": None,
        "measure": RiskKind.EXPECTATION.value,
        "epsilon": get_float("planner", "epsilon", 0.15),
        "beta": None,
        "gamma": None,
    }


def default_options(command: str) -> dict[str, Any]:
    """Built-in and ``config.yaml`` defaults of one subcommand."""
    grid = get_section("grid")
    defaults = _common_defaults()
    if command == "gen-grid":
        defaults.update(
            size=None,
            obstacle_frac=get_float("grid", "obstacle_frac", 0.25),
            uncertain=None,
            seed=default_layout_seed(),
            slip_cardinal=float(grid.get("slip_cardinal", 0.2)),
            slip_diagonal=float(grid.get("slip_diagonal", 0.4)),
            gamma=get_float("planner", "discount", 0.95),
            output="grid.json",
            mdp_output=None,
        )
    elif command == "plan":
        defaults.update(_problem_defaults())
        defaults.update(
            max_iterations=None, tau0=None, output="plan.json", trace=None, warm_start=None
        )
    elif command == "evaluate":
        defaults.update(
            grid=None,
            plan=None,
            runs=get_int("evaluation", "runs", 100),
            perturb=get_float("evaluation", "perturb_prob", 0.2),
            seed=0,
            max_steps=get_int("evaluation", "max_steps", 400),
            workers=None,
            output="report.json",
            table=None,
        )
    elif command == "render":
        defaults.update(grid=None, plan=None, output="plan.svg")
    elif command == "oracle":
        defaults.update(_problem_defaults())
        defaults.update(plan=None, max_policies=10**6, output="oracle.json")
    return defaults


def load_config_file(path: str | Path) -> dict[str, Any]:
    config_path = Path(path)
    with config_path.open("r", encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise ValueError(f"Config file {config_path} must contain a mapping/object.")
    return data


def merge_with_config(
    cli_args: argparse.Namespace,
    defaults: Mapping[str, Any],
) -> tuple[dict[str, Any], Path | None]:
    """defaults < ``--config`` file < explicit flags."""
    args = vars(cli_args).copy()
    args.pop("command", None)
    config_path_raw = args.pop("config", None)
    config_path = Path(config_path_raw) if config_path_raw else None
    config_data: dict[str, Any] = {}
    if config_path:
        config_data = load_config_file(config_path)

    merged = dict(defaults)
    for key, value in config_data.items():
        key = key.replace("-", "_")
        if key in defaults and value is not None:
            merged[key] = value

    for key, value in args.items():
        merged[key] = value

    return merged, config_path


def _load_problem(options: Mapping[str, Any]) -> tuple[MDP, GridConfig | None]:
    if options.get("grid") and options.get("mdp"):
        raise PlannerConfigError("give either --grid or --mdp, not both")
    gamma = options.get("gamma")
    if options.get("grid"):
        grid = read_grid(options["grid"])
        discount = get_float("planner", "discount", 0.95) if gamma is None else float(gamma)
        return build_gridworld(grid, discount), grid
    if options.get("mdp"):
        mdp = read_mdp(options["mdp"])
        if gamma is not None:
            mdp = dataclasses.replace(mdp, discount=float(gamma))
        return mdp, None
    raise PlannerConfigError("one of --grid or --mdp is required")


def _planner_config(options: Mapping[str, Any], grid: GridConfig | None) -> PlannerConfig:
    kind = RiskKind(options["measure"])
    risk = (
        RiskMeasure.expectation()
        if kind == RiskKind.EXPECTATION
        else RiskMeasure(kind=kind, epsilon=float(options["epsilon"]))
    )
    budgets = options.get("beta")
    if budgets is None and grid is not None and grid.width == grid.height:
        fallback = default_budget(grid.width)
        budgets = None if fallback is None else [fallback]
    if budgets is None:
        raise PlannerConfigError("no budget configured for this instance; pass --beta")
    if isinstance(budgets, (int, float)):
        budgets = [budgets]

    solver = {k: v for k, v in get_section("ccp").items() if k in CCPSettings.model_fields}
    if options.get("max_iterations") is not None:
        solver["max_iterations"] = options["max_iterations"]
    if options.get("tau0") is not None:
        solver["tau0"] = options["tau0"]
    return PlannerConfig(
        risk=risk,
        budgets=[float(b) for b in budgets],
        solver=CCPSettings(**solver),
        fixed_point_tol=get_float("planner", "fixed_point_tol", 1e-8),
        start_from_expectation=bool(get_section("planner").get("start_from_expectation", True)),
    )


def _new_manifest(command: str, **kwargs: Any) -> RunManifest:
    manifest = RunManifest(command=command, **kwargs)
    set_run_id(manifest.run_id)
    return manifest


def _summary_table(title: str, rows: Sequence[tuple[str, Any]]) -> Table:
    table = Table(title=title, show_header=False)
    table.add_column("field", style="bold")
    table.add_column("value")
    for name, value in rows:
        table.add_row(name, "-" if value is None else str(value))
    return table


def _fmt(value: float | None) -> str | None:
    return None if value is None else format(value, ".12g")


def cmd_gen_grid(options: Mapping[str, Any]) -> int:
    width, height = parse_size(str(options["size"]))
    uncertain = options.get("uncertain")
    if uncertain is None:
        uncertain = default_uncertain(width) if width == height else 0
    seed = int(options["seed"])
    slip = SlipModel(
        cardinal=float(options["slip_cardinal"]), diagonal=float(options["slip_diagonal"])
    )
    grid = generate_grid_config(
        width,
        height,
        obstacle_frac=float(options["obstacle_frac"]),
        n_uncertain=int(uncertain),
        seed=seed,
        slip_model=slip,
        move_cost=get_float("grid", "move_cost", 2.0),
        obstacle_cost=get_float("grid", "obstacle_cost", 10.0),
    )
    manifest = _new_manifest(
        "gen-grid",
        parameters={
            "size": grid.size_label,
            "obstacle_frac": float(options["obstacle_frac"]),
            "uncertain": int(uncertain),
            "slip": slip.model_dump(),
            "move_cost": grid.move_cost,
            "obstacle_cost": grid.obstacle_cost,
        },
        seeds={"layout": seed},
    )
    output = Path(options["output"])
    write_grid(grid, output, manifest.hash)
    write_manifest(manifest, output)
    if options.get("mdp_output"):
        write_mdp(build_gridworld(grid, float(options["gamma"])), options["mdp_output"])
    logger.info("grid %s written to %s", grid.size_label, output)
    _stdout().print(
        _summary_table(
            f"grid {grid.size_label}",
            [
                ("states", grid.n_cells),
                ("obstacles", len(grid.obstacles)),
                ("uncertain", len(grid.uncertain_obstacles)),
                ("output", output),
            ],
        )
    )
    return EXIT_OK


def _print_plan(result: PlanResult, output: Path) -> None:
    _stdout().print(
        _summary_table(
            f"{result.risk.label} plan",
            [
                ("status", result.status.value),
                ("lower bound", _fmt(result.lower_bound)),
                ("zeta (held fixed)", _fmt(result.zeta_star)),
                ("policy value J", _fmt(result.objective_value)),
                ("constraints D", ", ".join(format(d, ".6g") for d in result.constraint_values)),
                ("budgets", ", ".join(format(b, "g") for b in result.budgets)),
                ("solve time [s]", format(result.solve_time_s, ".3f")),
                ("output", output),
            ],
        )
    )


def cmd_plan(options: Mapping[str, Any]) -> int:
    mdp, grid = _load_problem(options)
    cfg = _planner_config(options, grid)
    manifest = _new_manifest(
        "plan", parameters={"measure": cfg.risk.kind.value, "gamma": mdp.discount}, planner=cfg
    )
    for name in ("grid", "mdp"):
        if options.get(name):
            manifest.add_input(name, options[name])

    warm_start = None
    if options.get("warm_start"):
        manifest.add_input("warm_start", options["warm_start"])
        warm_start = read_plan(options["warm_start"])
    result = plan(mdp, cfg, warm_start=warm_start)
    output = Path(options["output"])
    write_plan(result, output, manifest.hash)
    write_manifest(manifest, output)
    trace_path = Path(options.get("trace") or output.with_name(f"{output.stem}.trace.csv"))
    if result.diagnostics.trace or not result.certified:
        write_trace_csv(result.diagnostics.trace, trace_path, manifest.hash)
    _print_plan(result, output)

    if result.status == PlanStatus.CERTIFIED:
        return EXIT_OK
    if result.status == PlanStatus.INFEASIBLE:
        _stderr().print(f"infeasible: {result.message}")
        return EXIT_INFEASIBLE
    _stderr().print(f"no certified plan ({result.message}); trace: {trace_path}")
    return EXIT_SOLVER


def cmd_evaluate(options: Mapping[str, Any]) -> int:
    plan_path = Path(options["plan"])
    if not plan_path.is_file():
        raise FileNotFoundError(f"plan file {plan_path} not found")
    grid = read_grid(options["grid"])
    result = read_plan(plan_path)
    if len(result.policy) != grid.n_cells:
        raise PlannerConfigError(
            f"plan covers {len(result.policy)} states, grid {grid.size_label} has {grid.n_cells}"
        )
    runs, perturb, seed = int(options["runs"]), float(options["perturb"]), int(options["seed"])
    manifest = _new_manifest(
        "evaluate",
        parameters={"runs": runs, "perturb": perturb, "max_steps": int(options["max_steps"])},
        seeds={"evaluation": seed},
    )
    manifest.add_input("grid", options["grid"])
    manifest.add_input("plan", plan_path)

    metadata = InstanceMetadata(
        grid_size=grid.size_label,
        measure=result.risk.kind.value,
        epsilon=None if result.risk.is_linear else result.risk.epsilon,
        budgets=result.budgets,
        n_uncertain=len(grid.uncertain_obstacles),
        plan_status=result.status.value,
        lower_bound=result.lower_bound,
        objective_value=result.objective_value,
        solve_time_s=result.solve_time_s,
    )
    report = monte_carlo_report(
        grid,
        result.policy,
        runs,
        perturb,
        seed,
        discount=result.discount,
        max_steps=int(options["max_steps"]),
        metadata=metadata,
        workers=options.get("workers"),
    )
    report.manifest_hash = manifest.hash
    output = Path(options["output"])
    write_report_json(report, output)
    write_manifest(manifest, output)
    table = Path(options.get("table") or output.with_suffix(".csv"))
    write_table_csv(report, table)
    _stdout().print(
        _summary_table(
            f"evaluation of {result.risk.label} on {grid.size_label}",
            [
                ("runs", runs),
                ("failure rate", format(report.failure_rate, ".4g")),
                ("mean discounted cost", _fmt(report.objective.mean)),
                ("truncated runs", report.n_truncated),
                ("output", output),
            ],
        )
    )
    return EXIT_OK


def cmd_render(options: Mapping[str, Any]) -> int:
    plan_path = Path(options["plan"])
    if not plan_path.is_file():
        raise FileNotFoundError(f"plan file {plan_path} not found")
    grid = read_grid(options["grid"])
    result = read_plan(plan_path)
    manifest = _new_manifest("render")
    manifest.add_input("grid", options["grid"])
    manifest.add_input("plan", plan_path)
    output = Path(options["output"])
    write_svg(render_plan(grid, result, manifest.hash), output)
    write_manifest(manifest, output)
    _stdout().print(f"wrote {output}")
    return EXIT_OK


def cmd_oracle(options: Mapping[str, Any]) -> int:
    mdp, grid = _load_problem(options)
    cfg = _planner_config(options, grid)
    manifest = _new_manifest("oracle", parameters={"gamma": mdp.discount}, planner=cfg)
    for name in ("grid", "mdp", "plan"):
        if options.get(name):
            manifest.add_input(name, options[name])

    oracle = brute_force_constrained_optimum(mdp, cfg, max_policies=int(options["max_policies"]))
    planned = read_plan(options["plan"]) if options.get("plan") else plan(mdp, cfg)
    bound = planned.lower_bound
    gap = oracle.value - bound if oracle.feasible and bound is not None else None
    output = Path(options["output"])
    write_oracle(
        oracle,
        output,
        {
            "plan_status": planned.status.value,
            "lower_bound": bound,
            "gap": gap,
            "manifest_hash": manifest.hash,
        },
    )
    write_manifest(manifest, output)
    _stdout().print(
        _summary_table(
            f"oracle audit ({cfg.risk.label})",
            [
                ("policies", oracle.n_policies),
                ("feasible policies", oracle.n_feasible),
                ("oracle value", _fmt(oracle.value)),
                ("plan status", planned.status.value),
                ("lower bound", _fmt(bound)),
                ("gap", _fmt(gap)),
            ],
        )
    )
    if gap is not None and gap < -SOUNDNESS_TOL:
        logger.error("lower bound %.12g exceeds the oracle optimum %.12g", bound, oracle.value)
        return EXIT_SOLVER
    if not oracle.feasible:
        return EXIT_INFEASIBLE
    return EXIT_OK


HANDLERS: dict[str, Callable[[Mapping[str, Any]], int]] = {
    "gen-grid": cmd_gen_grid,
    "plan": cmd_plan,
    "evaluate": cmd_evaluate,
    "render": cmd_render,
    "oracle": cmd_oracle,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        cli_args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    command = cli_args.command

    try:
        options, _ = merge_with_config(cli_args, default_options(command))
    except (OSError, ValueError, yaml.YAMLError) as exc:
        _stderr().print(f"error: {exc}")
        return EXIT_USAGE
    setup_logging(options.get("log_dir"), options.get("log_level") or "WARNING")

    try:
        return HANDLERS[command](options)
    except InstanceTooLargeError as exc:
        _stderr().print(f"instance too large for enumeration: {exc}")
        return EXIT_USAGE
    except FileNotFoundError as exc:
        _stderr().print(f"error: {exc}")
        return EXIT_USAGE
    except ValueError as exc:
        _stderr().print(f"error: {exc}")
        return EXIT_USAGE
    except (ArithmeticError, RuntimeError) as exc:
        # SubgradientError, NonConvergenceError and other numerical breakdowns.
        logger.exception("%s failed", command)
        _stderr().print(f"solver failure: {exc}")
        return EXIT_SOLVER


if __name__ == "__main__":
    raise SystemExit(main())
