"""Per-cell summaries and charts from result rows."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..core import ContractViolation
from ..metrics import summarize
from .runner import ResultRow, _fmt

log = logging.getLogger(__name__)

SUMMARY_FILE = "summary.csv"
SCATTER_FILE = "scatter.svg"
HEATMAP_FILE = "heatmap.svg"

SUMMARY_COLUMNS = [
    "algorithm", "cell", "config", "replicates", "failed",
    "n_sims_mean", "n_sims_sd", "l2_mean", "l2_sd", "criterion_mean", "criterion_sd",
]


@dataclass
class CellSummary:
    algorithm: str
    cell: int
    config: dict
    replicates: int
    failed: int
    n_sims: tuple[float, float]
    l2: tuple[float, float]
    criterion: tuple[float, float]

    def as_record(self) -> dict[str, str]:
        cfg = " ".join(f"{k}={_fmt(v)}" for k, v in self.config.items())
        return {
            "algorithm": self.algorithm, "cell": str(self.cell), "config": cfg,
            "replicates": str(self.replicates), "failed": str(self.failed),
            "n_sims_mean": _fmt(self.n_sims[0]), "n_sims_sd": _fmt(self.n_sims[1]),
            "l2_mean": _fmt(self.l2[0]), "l2_sd": _fmt(self.l2[1]),
            "criterion_mean": _fmt(self.criterion[0]), "criterion_sd": _fmt(self.criterion[1]),
        }


def _stats(values: Sequence[float]) -> tuple[float, float]:
    v = [x for x in values if not math.isnan(x)]
    return summarize(v) if v else (math.nan, math.nan)


def summarize_rows(rows: Sequence[ResultRow]) -> list[CellSummary]:
    """Mean and sample sd of n_sims, L2 and criterion per (algorithm, cell).

    Failed runs are counted but excluded from the statistics.
    """
    if not rows:
        raise ContractViolation("no rows to summarise")
    groups: dict[tuple[str, int], list[ResultRow]] = {}
    for row in rows:
        groups.setdefault((row.algorithm, row.cell), []).append(row)
    out = []
    for (algo, cell), members in groups.items():
        good = [r for r in members if r.ok]
        out.append(CellSummary(
            algorithm=algo, cell=cell, config=dict(members[0].config),
            replicates=len(members), failed=len(members) - len(good),
            n_sims=_stats([float(r.n_sims) for r in good]),
            l2=_stats([r.l2 for r in good]),
            criterion=_stats([r.criterion for r in good]),
        ))
    return out


def write_summary_table(cells: Sequence[CellSummary], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, SUMMARY_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(c.as_record() for c in cells)


def scatter_chart(cells: Sequence[CellSummary], path) -> None:
    """L2 against simulation count, one point per cell with sd error bars."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4.5))
    for algo in dict.fromkeys(c.algorithm for c in cells):
        sel = [c for c in cells if c.algorithm == algo and not math.isnan(c.l2[0])]
        if not sel:
            continue
        ax.errorbar([c.n_sims[0] for c in sel], [c.l2[0] for c in sel],
                    xerr=[c.n_sims[1] for c in sel], yerr=[c.l2[1] for c in sel],
                    fmt="o", ms=4, capsize=2, label=algo)
    ax.set_xscale("log")
    ax.set_xlabel("number of simulations")
    ax.set_ylabel("L2 distance to exact posterior")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def heatmap_chart(cells: Sequence[CellSummary], path, x: str = "alpha", y: str = "p_acc_min") -> bool:
    """Mean criterion on the ``x`` by ``y`` grid; returns False when not applicable."""
    sel = [c for c in cells if x in c.config and y in c.config and not math.isnan(c.criterion[0])]
    if not sel:
        return False
    xs = sorted({c.config[x] for c in sel})
    ys = sorted({c.config[y] for c in sel})
    grid = np.full((len(ys), len(xs)), np.nan)
    for c in sel:
        grid[ys.index(c.config[y]), xs.index(c.config[x])] = c.criterion[0]

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(1.0 + 0.7 * len(xs), 1.2 + 0.6 * len(ys)))
    im = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(xs)), [f"{v:g}" for v in xs])
    ax.set_yticks(range(len(ys)), [f"{v:g}" for v in ys])
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    for i in range(len(ys)):
        for j in range(len(xs)):
            if not np.isnan(grid[i, j]):
                ax.text(j, i, f"{grid[i, j]:.3g}", ha="center", va="center", fontsize=7, color="w")
    fig.colorbar(im, ax=ax, label="sims x L2^2")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return True


def emit_summary(rows: Sequence[ResultRow], out_dir, charts: bool = True) -> list[CellSummary]:
    """Write ``summary.csv`` and, when requested, ``scatter.svg`` and ``heatmap.svg``.

    The heat-map is drawn only when the rows carry both ``alpha`` and
    ``p_acc_min`` config fields.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = summarize_rows(rows)
    write_summary_table(cells, out / SUMMARY_FILE)
    if charts:
        scatter_chart(cells, out / SCATTER_FILE)
        if not heatmap_chart(cells, out / HEATMAP_FILE):
            log.info("no alpha x p_acc_min cells with a criterion; heat-map skipped")
    return cells


def load_summary(path) -> list[dict[str, str]]:
    path = Path(path)
    if path.is_dir():
        path = path / SUMMARY_FILE
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
