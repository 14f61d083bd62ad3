"""Static SVG figure of a grid-world plan: value heatmap, action arrows, markers."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from riskmdp.errors import GridConfigError
from riskmdp.mdp import ACTION_LABELS, GridConfig, absorbing_states, build_gridworld
from riskmdp.mdp.gridworld import ACTION_OFFSETS
from riskmdp.planner import PlanResult

CELL = 40
MARGIN = 20
LEGEND = 30
# Light to dark: low values pale, high values dark.
_LOW = (255, 247, 188)
_HIGH = (37, 52, 148)

STYLE = """<style>
.cell { stroke: #ffffff; stroke-width: 1; }
.arrow { stroke: #111111; stroke-width: 2; fill: none; marker-end: url(#head); }
.obstacle { fill: none; stroke: #b2182b; stroke-width: 3; }
.uncertain { fill: none; stroke: #ef8a62; stroke-width: 3; stroke-dasharray: 4 3; }
.goal { fill: #1a9850; }
.start { fill: none; stroke: #1a9850; stroke-width: 2; }
.label { font-family: monospace; font-size: 12px; }
</style>
"""


class SvgCanvas:
    """Append-only SVG document builder."""

    def __init__(self, width: float, height: float):
        self.width = width
        self.height = height
        self.parts: list[str] = []

    def header(self, title: str = "", metadata: str = "") -> None:
        self.parts.append(
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">\n'
        )
        if title:
            self.parts.append(f"<title>{title}</title>\n")
        if metadata:
            self.parts.append(f"<metadata>{metadata}</metadata>\n")
        self.parts.append(STYLE)
        self.parts.append(
            '<defs><marker id="head" markerWidth="6" markerHeight="6" refX="5" refY="3" '
            'orient="auto"><path d="M0,0 L6,3 L0,6 z" fill="#111111"/></marker></defs>\n'
        )

    def group_start(self, group_id: str) -> None:
        self.parts.append(f'<g id="{group_id}">\n')

    def group_end(self) -> None:
        self.parts.append("</g>\n")

    def rect(
        self,
        x: float,
        y: float,
        w: float,
        h: float,
        cls: str,
        fill: str | None = None,
        extra: str = "",
    ) -> None:
        fill_attr = f' fill="{fill}"' if fill else ""
        self.parts.append(
            f'<rect class="{cls}" x="{x:.1f}" y="{y:.1f}" width="{w:.1f}" height="{h:.1f}"'
            f"{fill_attr}{extra}/>\n"
        )

    def circle(self, cx: float, cy: float, r: float, cls: str) -> None:
        self.parts.append(f'<circle class="{cls}" cx="{cx:.1f}" cy="{cy:.1f}" r="{r:.1f}"/>\n')

    def line(self, x1: float, y1: float, x2: float, y2: float, cls: str, extra: str = "") -> None:
        self.parts.append(
            f'<line class="{cls}" x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}"'
            f"{extra}/>\n"
        )

    def text(self, x: float, y: float, string: str, cls: str = "label") -> None:
        self.parts.append(f'<text class="{cls}" x="{x:.1f}" y="{y:.1f}">{string}</text>\n')

    def get_svg(self) -> str:
        return "".join(self.parts) + "</svg>\n"


def heat_color(t: float) -> str:
    t = float(np.clip(t, 0.0, 1.0))
    rgb = [round(lo + (hi - lo) * t) for lo, hi in zip(_LOW, _HIGH)]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def render_plan(grid: GridConfig, plan: PlanResult, manifest_hash: str | None = None) -> str:
    """SVG of ``plan`` on ``grid``. Row y = 0 is drawn at the bottom; absorbing cells get no arrow."""
    n = grid.n_cells
    if len(plan.V_star) != n or len(plan.policy) != n:
        raise GridConfigError(
            f"plan covers {len(plan.V_star)} states / {len(plan.policy)} actions, "
            f"grid {grid.size_label} has {n} cells"
        )
    values = np.asarray(plan.V_star, dtype=float)
    lo, hi = (float(values.min()), float(values.max())) if n else (0.0, 0.0)
    span = hi - lo
    absorbing = set(absorbing_states(build_gridworld(grid, plan.discount)).tolist()) if n else set()
    obstacles = set(grid.obstacles)
    uncertain = set(grid.uncertain_obstacles)

    canvas = SvgCanvas(2 * MARGIN + CELL * grid.width, 2 * MARGIN + CELL * grid.height + LEGEND)
    canvas.header(
        title=f"{plan.risk.label} plan on {grid.size_label}",
        metadata=f"manifest_hash={manifest_hash}" if manifest_hash else "",
    )

    def corner(x: int, y: int) -> tuple[float, float]:
        return MARGIN + CELL * x, MARGIN + CELL * (grid.height - 1 - y)

    canvas.group_start("cells")
    for s in range(n):
        x, y = s % grid.width, s // grid.width
        px, py = corner(x, y)
        t = (values[s] - lo) / span if span > 0 else 0.0
        value = format(values[s], ".12g")
        extra = f' data-state="{s}" data-value="{value}"'
        canvas.rect(px, py, CELL, CELL, "cell", fill=heat_color(t), extra=extra)
    canvas.group_end()

    canvas.group_start("markers")
    for cell in sorted(obstacles):
        px, py = corner(*cell)
        cls = "uncertain" if cell in uncertain else "obstacle"
        canvas.rect(px + 3, py + 3, CELL - 6, CELL - 6, cls)
    if grid.in_bounds(grid.start_cell):
        px, py = corner(*grid.start_cell)
        canvas.rect(px + 8, py + 8, CELL - 16, CELL - 16, "start")
    if grid.in_bounds(grid.goal):
        px, py = corner(*grid.goal)
        canvas.circle(px + CELL / 2, py + CELL / 2, CELL / 5, "goal")
    canvas.group_end()

    canvas.group_start("arrows")
    for s in range(n):
        if s in absorbing:
            continue
        a = plan.policy[s]
        dx, dy = ACTION_OFFSETS[a]
        norm = np.hypot(dx, dy)
        px, py = corner(s % grid.width, s // grid.width)
        cx, cy = px + CELL / 2, py + CELL / 2
        reach = 0.32 * CELL / norm
        canvas.line(
            cx - dx * reach,
            cy + dy * reach,
            cx + dx * reach,
            cy - dy * reach,
            "arrow",
            extra=f' data-action="{ACTION_LABELS[a]}"',
        )
    canvas.group_end()

    legend_y = 2 * MARGIN + CELL * grid.height + 8
    canvas.text(MARGIN, legend_y, f"V in [{lo:.4g}, {hi:.4g}]  {plan.risk.label}")
    return canvas.get_svg()


def write_svg(svg: str, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg, encoding="utf-8")
    return path
