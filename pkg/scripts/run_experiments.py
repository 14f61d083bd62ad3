"""
Run the grid-world sweep: gen-grid -> plan -> evaluate -> render per instance.

Usage examples:
    # Full sweep with the defaults in scripts/configs/experiments.yaml
    python scripts/run_experiments.py --config scripts/configs/experiments.yaml

    # Only the 10x10 family, EVaR, fewer runs
    python scripts/run_experiments.py --sizes 10 --measures evar --runs 20
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any

REPO_ROOT = Path(__file__).resolve().parents[1]
if str(REPO_ROOT) not in sys.path:
    sys.path.insert(0, str(REPO_ROOT))

from riskmdp.cli.main import EXIT_OK, main as riskmdp_main, merge_with_config  # noqa: E402
from riskmdp.evaluation import EvaluationReport, write_table_csv  # noqa: E402
from riskmdp.log import setup_logging  # noqa: E402
from riskmdp.utils import save_result  # noqa: E402

logger = logging.getLogger(__name__)

DEFAULT_FAMILIES = [
    {"size": 10, "uncertain": 3, "beta": 50.0},
    {"size": 15, "uncertain": 6, "beta": 35.0},
    {"size": 20, "uncertain": 9, "beta": 200.0},
]


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        description="Run the grid-world sweep and write one results table.",
        argument_default=argparse.SUPPRESS,
    )
    parser.add_argument("--config", type=str, help="YAML config with sweep defaults.")
    parser.add_argument("--output-dir", type=str, help="Directory for all outputs.")
    parser.add_argument("--sizes", type=int, nargs="+", help="Restrict to these grid sides.")
    parser.add_argument("--measures", type=str, nargs="+", help="Risk measures to run.")
    parser.add_argument("--epsilon", type=float, help="Risk level for CVaR/EVaR.")
    parser.add_argument("--gamma", type=float, help="Discount factor.")
    parser.add_argument("--runs", type=int, help="Monte Carlo runs per instance.")
    parser.add_argument("--perturb", type=float, help="Obstacle move probability.")
    parser.add_argument("--layout-seed", type=int, help="Grid layout seed.")
    parser.add_argument("--eval-seed", type=int, help="Monte Carlo seed.")
    parser.add_argument("--overwrite", action="store_true", help="Overwrite the summary file.")
    parser.add_argument("--log-level", type=str, help="Logging level (default: WARNING).")
    return parser.parse_args(argv)


def _run(args: list[str]) -> int:
    logger.info("riskmdp %s", " ".join(args))
    return riskmdp_main(args)


def run_instance(
    family: dict[str, Any],
    measure: str,
    options: dict[str, Any],
    warm_start: Path | None = None,
) -> dict[str, Any]:
    size = int(family["size"])
    out = Path(options["output_dir"]) / f"{size}x{size}"
    grid = out / "grid.json"
    if not grid.exists():
        code = _run(
            [
                "gen-grid",
                "--size", f"{size}x{size}",
                "--uncertain", str(family["uncertain"]),
                "--seed", str(options["layout_seed"]),
                "--output", str(grid),
            ]
        )
        if code != EXIT_OK:
            return {"size": size, "measure": measure, "stage": "gen-grid", "exit_code": code}

    plan = out / f"plan_{measure}.json"
    plan_args = [
        "plan",
        "--grid", str(grid),
        "--measure", measure,
        "--epsilon", str(options["epsilon"]),
        "--gamma", str(options["gamma"]),
        "--beta", str(family["beta"]),
        "--output", str(plan),
    ]
    if warm_start is not None:
        plan_args += ["--warm-start", str(warm_start)]
    code = _run(plan_args)
    record: dict[str, Any] = {"size": size, "measure": measure, "plan": str(plan), "plan_exit": code}
    if code != EXIT_OK:
        logger.warning("plan %s on %sx%s exited with %s", measure, size, size, code)
        return record

    report = out / f"report_{measure}.json"
    record["evaluate_exit"] = _run(
        [
            "evaluate",
            "--grid", str(grid),
            "--plan", str(plan),
            "--runs", str(options["runs"]),
            "--perturb", str(options["perturb"]),
            "--seed", str(options["eval_seed"]),
            "--output", str(report),
        ]
    )
    record["render_exit"] = _run(
        ["render", "--grid", str(grid), "--plan", str(plan), "--output", str(out / f"plan_{measure}.svg")]
    )
    if record["evaluate_exit"] == EXIT_OK:
        record["report"] = str(report)
    return record


def main(argv: list[str] | None = None) -> None:
    defaults = {
        "output_dir": "scripts/results",
        "families": DEFAULT_FAMILIES,
        "sizes": None,
        "measures": ["expectation", "cvar", "evar"],
        "epsilon": 0.15,
        "gamma": 0.95,
        "runs": 100,
        "perturb": 0.2,
        "layout_seed": 20230517,
        "eval_seed": 0,
        "overwrite": False,
        "log_level": "WARNING",
    }
    options, config_path = merge_with_config(parse_args(argv), defaults)
    setup_logging(log_level=str(options["log_level"]))
    output_dir = Path(options["output_dir"])
    if not output_dir.is_absolute():
        output_dir = REPO_ROOT / output_dir
    options["output_dir"] = str(output_dir)

    families = [
        f for f in options["families"] if not options["sizes"] or int(f["size"]) in options["sizes"]
    ]
    logger.info(
        "Starting sweep: %s famil(ies) x %s measure(s), output -> %s, config=%s",
        len(families),
        len(options["measures"]),
        output_dir,
        config_path,
    )

    # Measures run in the configured order; each plan warm-starts the next one.
    records = []
    for family in families:
        previous: Path | None = None
        for measure in options["measures"]:
            record = run_instance(family, measure, options, previous)
            records.append(record)
            if record.get("plan_exit") == EXIT_OK:
                previous = Path(record["plan"])
    reports = []
    for record in records:
        if "report" in record:
            payload = json.loads(Path(record["report"]).read_text(encoding="utf-8"))
            reports.append(EvaluationReport.model_validate(payload))
    table = write_table_csv(reports, output_dir / "results_table.csv")
    summary = save_result(
        {"records": records, "table": str(table)},
        output_dir,
        "summary",
        overwrite=bool(options["overwrite"]),
    )
    logger.info("Sweep finished: %s instance(s), table -> %s, summary -> %s", len(records), table, summary)


if __name__ == "__main__":
    main()
