"""Learning curves, AULC, and the model x strategy report table."""

from dataclasses import dataclass, field

import numpy as np

from mdalbench.errors import ShapeError


@dataclass
class LearningCurve:
    """Ordered (labeling cost, accuracy) points."""

    costs: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.costs = np.asarray(self.costs, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.costs.shape != self.values.shape or self.costs.ndim != 1:
            raise ShapeError("curve costs and values must be aligned 1-D arrays")
        if np.any(np.diff(self.costs) <= 0):
            raise ValueError("curve costs must be strictly increasing")
        if self.values.size and (self.values.min() < 0 or self.values.max() > 1):
            raise ValueError("curve values must lie in [0, 1]")

    def __len__(self) -> int:
        return self.costs.size


def aulc(curve: LearningCurve) -> float:
    """Trapezoidal area normalized by the observed cost span.

    A constant curve scores its constant; the result always lies in [0, 1].
    """
    if len(curve) < 2:
        raise ValueError("aulc needs at least two curve points")
    area = float(np.trapezoid(curve.values, curve.costs))
    return area / float(curve.costs[-1] - curve.costs[0])


def curve_from_rows(rows) -> LearningCurve:
    """Learning curve of one run's (cost, micro accuracy) rows."""
    return LearningCurve([r.cost for r in rows], [r.micro_acc for r in rows])


@dataclass
class ReportCell:
    mean: float
    std: float
    n: int
    best: bool = False


@dataclass
class ReportTable:
    """AULC mean +- std per (strategy, model); the per-dataset max is flagged."""

    strategies: list
    models: list
    cells: dict = field(default_factory=dict)  # (strategy, model) -> ReportCell


def report_table(aulc_lists: dict) -> ReportTable:
    """Build the table from {(strategy, model): [per-repeat aulc, ...]}."""
    strategies = sorted({s for s, _ in aulc_lists})
    models = sorted({m for _, m in aulc_lists})
    cells = {}
    for key, values in aulc_lists.items():
        vals = np.asarray(values, dtype=np.float64)
        std = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        cells[key] = ReportCell(float(vals.mean()), std, vals.size)
    if cells:
        best = max(cell.mean for cell in cells.values())
        for cell in cells.values():
            if cell.mean == best:
                cell.best = True
    return ReportTable(strategies, models, cells)


def _format_cell(cell: ReportCell | None) -> str:
    if cell is None:
        return ""
    mark = "*" if cell.best else ""
    return f"{cell.mean:.4f}±{cell.std:.4f}{mark}"


def render_report_csv(table: ReportTable) -> str:
    lines = [",".join(["strategy"] + table.models)]
    for s in table.strategies:
        row = [s] + [_format_cell(table.cells.get((s, m))) for m in table.models]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def render_report_text(table: ReportTable) -> str:
    header = ["strategy"] + table.models
    rows = [header]
    for s in table.strategies:
        rows.append([s] + [_format_cell(table.cells.get((s, m)))
                           for m in table.models])
    widths = [max(len(r[j]) for r in rows) for j in range(len(header))]
    out = []
    for i, row in enumerate(rows):
        out.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if i == 0:
            out.append("  ".join("-" * w for w in widths))
    out.append("")
    out.append("* largest mean AULC")
    return "\n".join(out) + "\n"
