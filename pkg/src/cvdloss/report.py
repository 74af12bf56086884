"""Tabular output, box-plot figures and run metadata.

Figures are always drawn from the emitted tables (read back from disk), so
regenerating them from the tables alone reproduces the same files.
"""

from __future__ import annotations

import csv
import json
import math
import os
from collections import defaultdict
from collections.abc import Mapping, Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from cvdloss import color, daltonization, simulation  # noqa: E402
from cvdloss.pipeline import (  # noqa: E402
    CategorySummary,
    DaltonizationExperiment,
    Distribution,
    EvaluationRecord,
)
from cvdloss.simulation import PROMPT_TYPES, Deficiency  # noqa: E402

SCORE_COLUMNS = (
    "path", "category", "prompt_type", "seed", "deficiency", "cvdloss", "log10", "normalized", "error",
)
SUMMARY_COLUMNS = (
    "category", "prompt_type", "deficiency", "count", "errors",
    "mean_log10", "q1_log10", "median_log10", "q3_log10",
    "baseline", "mean_norm", "q1_norm", "median_norm", "q3_norm",
)
DELTA_COLUMNS = (
    "path", "category", "deficiency", "cvdloss_original", "cvdloss_daltonized", "log10_delta", "clip_fraction",
    "error",
)
DELTA_SUMMARY_COLUMNS = ("category", "deficiency", "count", "excluded", "mean", "q1", "median", "q3")

SERIES_COLORS = {Deficiency.PROTANOPIA: "#1f77b4", Deficiency.DEUTERANOPIA: "#ff7f0e"}
PROMPT_LABELS = {
    "standard": "standard",
    "colorblind_aware": "colorblind",
    "protanopia_aware": "protan-aware",
    "deuteranopia_aware": "deutan-aware",
}


def fmt(x: float | int | None) -> str:
    """Nine significant digits; empty for missing values."""
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".9g")


def _relpath(path: Path, base: Path | None) -> str:
    if base is None:
        return path.as_posix()
    return Path(os.path.relpath(path, base)).as_posix()


def _write_tsv(path: Path, columns: Sequence[str], rows: Sequence[Sequence[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, delimiter="\t", lineterminator="\n")
        w.writerow(columns)
        w.writerows(rows)


def read_tsv(path: str | Path) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f, delimiter="\t"))


def _clean(text: str | None) -> str:
    return "" if text is None else " ".join(text.split())


def write_scores(path: Path, records: Sequence[EvaluationRecord], base: Path | None = None) -> None:
    rows = [
        (
            _relpath(r.image.path, base), r.image.category, r.image.prompt_type,
            "" if r.image.seed is None else str(r.image.seed), r.deficiency.value,
            fmt(r.value), fmt(r.log10), fmt(r.normalized), _clean(r.error),
        )
        for r in records
    ]
    _write_tsv(path, SCORE_COLUMNS, rows)


def _dist_cells(d: Distribution | None, with_mean: bool = True) -> list[str]:
    if d is None:
        return [""] * (4 if with_mean else 3)
    cells = [fmt(d.q1), fmt(d.median), fmt(d.q3)]
    return [fmt(d.mean), *cells] if with_mean else cells


def write_summary(path: Path, summaries: Sequence[CategorySummary]) -> None:
    rows = []
    for s in summaries:
        baseline = "no baseline" if s.baseline is None else fmt(s.baseline)
        rows.append(
            [s.category, s.prompt_type, s.deficiency.value, str(s.count), str(s.errors),
             *_dist_cells(s.log10), baseline, *_dist_cells(s.normalized)]
        )
    _write_tsv(path, SUMMARY_COLUMNS, rows)


def write_deltas(path: Path, experiment: DaltonizationExperiment, base: Path | None = None) -> None:
    rows = [
        (
            _relpath(r.image.path, base), r.image.category, r.deficiency.value, fmt(r.before), fmt(r.after),
            fmt(r.delta), fmt(r.clip_fraction), _clean(r.error),
        )
        for r in experiment.deltas
    ]
    _write_tsv(path, DELTA_COLUMNS, rows)


def write_delta_summary(path: Path, experiment: DaltonizationExperiment) -> None:
    excluded: dict[tuple[str, Deficiency], int] = defaultdict(int)
    for r in experiment.deltas:
        if r.error is not None:
            excluded[(r.image.category, r.deficiency)] += 1
    rows = []
    for (cat, d), dist in experiment.summaries.items():
        count = dist.count if dist else 0
        rows.append([cat, d.value, str(count), str(excluded[(cat, d)]), *_dist_cells(dist)])
    _write_tsv(path, DELTA_SUMMARY_COLUMNS, rows)


def run_metadata(argv: Sequence[str], **extra: object) -> dict[str, object]:
    from cvdloss import __version__

    return {
        "tool": "cvdloss",
        "version": __version__,
        "argv": list(argv),
        "constants": {
            "oklab": color.OKLAB_CONSTANT_SET,
            "simulation": simulation.CONSTANT_SET,
            "daltonization": daltonization.CONSTANT_SET,
        },
        **extra,
    }


def write_metadata(path: Path, meta: Mapping[str, object]) -> None:
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# Figures ---------------------------------------------------------------------------------------

_RC = {
    "svg.hashsalt": "cvdloss",
    "svg.fonttype": "path",
    "font.size": 9,
}


def _float(cell: str) -> float | None:
    return float(cell) if cell not in ("", "nan") else None


def _safe_name(category: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in category)


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def score_groups(
    rows: Sequence[Mapping[str, str]], normalize: bool
) -> dict[str, dict[tuple[str, Deficiency], list[float]]]:
    """Per category, the values for each (prompt_type, deficiency) box."""
    column = "normalized" if normalize else "log10"
    out: dict[str, dict[tuple[str, Deficiency], list[float]]] = {}
    for row in rows:
        groups = out.setdefault(row["category"], {})
        key = (row["prompt_type"], Deficiency.parse(row["deficiency"]))
        values = groups.setdefault(key, [])
        v = _float(row[column])
        if v is not None:
            values.append(v)
    return out


def delta_groups(rows: Sequence[Mapping[str, str]]) -> dict[str, dict[Deficiency, list[float]]]:
    out: dict[str, dict[Deficiency, list[float]]] = {}
    for row in rows:
        groups = out.setdefault(row["category"], {})
        values = groups.setdefault(Deficiency.parse(row["deficiency"]), [])
        v = _float(row["log10_delta"])
        if v is not None:
            values.append(v)
    return out


def _boxes(ax, series: Sequence[tuple[float, list[float], Deficiency]], vertical: bool) -> None:
    for pos, values, d in series:
        ax.boxplot(
            [values],
            positions=[pos],
            widths=0.6,
            whis=1.5,
            orientation="vertical" if vertical else "horizontal",
            patch_artist=True,
            manage_ticks=False,
            boxprops={"facecolor": SERIES_COLORS[d], "alpha": 0.6},
            medianprops={"color": "black"},
            flierprops={"marker": "o", "markersize": 3, "markerfacecolor": SERIES_COLORS[d]},
        )


def _legend(ax) -> None:
    from matplotlib.patches import Patch

    handles = [Patch(facecolor=c, alpha=0.6, label=d.name.lower()) for d, c in SERIES_COLORS.items()]
    ax.legend(handles=handles, loc="best", frameon=False)


def emit_score_boxplots(
    rows: Sequence[Mapping[str, str]], out_dir: str | Path, normalize: bool = True
) -> list[Path]:
    """One SVG per category with a box per (prompt type, deficiency) and a dashed zero line."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    groups = score_groups(rows, normalize)
    if not groups:
        raise ValueError("no score rows to plot")
    written = []
    with plt.rc_context(_RC):
        for category in sorted(groups):
            fig, ax = plt.subplots(figsize=(5.0, 3.2))
            series, ticks, labels, omitted = [], [], [], []
            pos = 0.0
            for prompt in PROMPT_TYPES:
                for d in Deficiency:
                    if (prompt, d) not in groups[category]:
                        continue
                    values = groups[category][(prompt, d)]
                    if values:
                        series.append((pos, values, d))
                        ticks.append(pos)
                        labels.append(f"{PROMPT_LABELS[prompt]}\n{d.value}")
                    else:
                        omitted.append(f"{prompt}/{d.value}")
                    pos += 1.0
                pos += 0.5
            _boxes(ax, series, vertical=True)
            ax.axhline(0.0, color="gray", linestyle="--", linewidth=0.8)
            ax.set_xticks(ticks, labels, fontsize=7)
            ax.set_xlim(-0.7, (ticks[-1] if ticks else 0.0) + 0.7)
            ax.set_ylabel("normalized log10 CVDLoss" if normalize else "log10 CVDLoss")
            ax.set_title(category)
            _legend(ax)
            if omitted:
                fig.text(0.01, 0.01, "no data: " + ", ".join(omitted), fontsize=6, color="gray")
            fig.tight_layout()
            path = out_dir / f"{_safe_name(category)}.svg"
            _save(fig, path)
            written.append(path)
    return written


def emit_delta_boxplots(rows: Sequence[Mapping[str, str]], out_dir: str | Path) -> list[Path]:
    """One SVG per category with horizontal protan/deutan boxes of log10 deltas and a zero line."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    groups = delta_groups(rows)
    if not groups:
        raise ValueError("no delta rows to plot")
    written = []
    with plt.rc_context(_RC):
        for category in sorted(groups):
            fig, ax = plt.subplots(figsize=(5.0, 2.2))
            series, ticks, labels, omitted = [], [], [], []
            for i, d in enumerate(Deficiency):
                values = groups[category].get(d, [])
                if values:
                    series.append((float(i), values, d))
                    ticks.append(float(i))
                    labels.append(d.name.lower())
                elif d in groups[category]:
                    omitted.append(d.value)
            _boxes(ax, series, vertical=False)
            ax.axvline(0.0, color="black", linewidth=0.8)
            ax.set_yticks(ticks, labels)
            ax.set_ylim(-0.7, len(Deficiency) - 0.3)
            ax.set_xlabel("log10 CVDLoss (daltonized) - log10 CVDLoss (original)")
            ax.set_title(category)
            _legend(ax)
            if omitted:
                fig.text(0.01, 0.01, "no data: " + ", ".join(omitted), fontsize=6, color="gray")
            fig.tight_layout()
            path = out_dir / f"{_safe_name(category)}_daltonization.svg"
            _save(fig, path)
            written.append(path)
    return written
