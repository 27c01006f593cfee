"""Benchmark report: one row per model run, one column per dataset, and a
final macro-average column. Rendered as aligned text, JSON, TSV, and a
matplotlib figure. Also renders training-history curves.

Run result files are JSON objects ``{"model": <name>, "scores":
{<dataset>: <headline score>, ...}}``, one file per run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

MISSING_CELL = "—"  # em dash rendered for absent dataset cells


@dataclass(frozen=True)
class RunScores:
    name: str
    scores: dict[str, float]


@dataclass(frozen=True)
class BenchmarkTable:
    columns: tuple[str, ...]
    rows: tuple[RunScores, ...]

    def macro(self, run: RunScores) -> tuple[float, bool]:
        """Unweighted mean over the datasets this run actually has.
        Returns (macro, complete); missing cells are excluded, never
        zero-filled."""
        present = [run.scores[c] for c in self.columns if c in run.scores]
        if not present:
            raise ValueError(f"run {run.name!r} has no dataset scores")
        return sum(present) / len(present), len(present) == len(self.columns)


def load_runs(runs_dir: Union[str, Path]) -> list[RunScores]:
    """Collect run files from a directory; JSON files without a "scores"
    key (manifests, score reports) are ignored."""
    runs = []
    for path in sorted(Path(runs_dir).glob("*.json")):
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        if not isinstance(data, dict) or "scores" not in data:
            continue
        runs.append(
            RunScores(
                name=data.get("model", path.stem),
                scores={k: float(v) for k, v in data["scores"].items()},
            )
        )
    if not runs:
        raise FileNotFoundError(f"no run files (*.json with a 'scores' key) in {runs_dir}")
    return runs


def build_table(runs: Sequence[RunScores]) -> BenchmarkTable:
    columns: list[str] = []
    for run in runs:
        for dataset in run.scores:
            if dataset not in columns:
                columns.append(dataset)
    return BenchmarkTable(columns=tuple(columns), rows=tuple(runs))


def table_to_dict(table: BenchmarkTable) -> dict:
    rows = []
    for run in table.rows:
        macro, complete = table.macro(run)
        rows.append(
            {
                "model": run.name,
                "scores": {c: run.scores.get(c) for c in table.columns},
                "macro_average": macro,
                "macro_over_all_datasets": complete,
            }
        )
    return {"columns": list(table.columns), "rows": rows}


def render_text(table: BenchmarkTable) -> str:
    headers = ["model", *table.columns, "macro"]
    grid = [headers]
    any_incomplete = False
    for run in table.rows:
        macro, complete = table.macro(run)
        macro_text = f"{macro:.1f}" if complete else f"{macro:.1f}*"
        any_incomplete = any_incomplete or not complete
        grid.append(
            [run.name]
            + [
                f"{run.scores[c]:.1f}" if c in run.scores else MISSING_CELL
                for c in table.columns
            ]
            + [macro_text]
        )
    widths = [max(len(row[i]) for row in grid) for i in range(len(headers))]
    lines = []
    for r, row in enumerate(grid):
        lines.append(
            "  ".join(
                cell.ljust(widths[i]) if i == 0 else cell.rjust(widths[i])
                for i, cell in enumerate(row)
            )
        )
        if r == 0:
            lines.append("  ".join("-" * w for w in widths))
    if any_incomplete:
        lines.append("* macro over available datasets only (missing cells excluded)")
    return "\n".join(lines) + "\n"


def write_tsv(table: BenchmarkTable, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("\t".join(["model", *table.columns, "macro"]) + "\n")
        for run in table.rows:
            macro, _ = table.macro(run)
            cells = [
                repr(run.scores[c]) if c in run.scores else "" for c in table.columns
            ]
            f.write("\t".join([run.name, *cells, repr(macro)]) + "\n")


def render_figure(table: BenchmarkTable, path: Union[str, Path]) -> None:
    """Grouped bar chart of per-dataset scores plus the macro column."""
    labels = [*table.columns, "macro"]
    x = range(len(labels))
    n_runs = len(table.rows)
    width = 0.8 / max(n_runs, 1)

    fig, ax = plt.subplots(figsize=(max(6.0, 1.2 * len(labels)), 4.5))
    for r, run in enumerate(table.rows):
        macro, _ = table.macro(run)
        heights = [run.scores.get(c, 0.0) for c in table.columns] + [macro]
        offsets = [xi + (r - (n_runs - 1) / 2) * width for xi in x]
        ax.bar(offsets, heights, width=width, label=run.name)
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel("headline score")
    ax.set_title("benchmark results")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_training_curves(
    history_rows: Sequence, path: Union[str, Path], title: Optional[str] = None
) -> None:
    """Loss per step with dev scores overlaid on a second axis."""
    steps = [row.step for row in history_rows]
    losses = [row.loss for row in history_rows]
    eval_steps = [row.step for row in history_rows if row.dev_score is not None]
    eval_scores = [row.dev_score for row in history_rows if row.dev_score is not None]

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(steps, losses, lw=0.8, label="loss")
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    if eval_steps:
        ax2 = ax.twinx()
        ax2.plot(eval_steps, eval_scores, "o-", color="tab:orange", label="dev score")
        ax2.set_ylabel("dev score")
        ax2.set_ylim(0, 1.05)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
