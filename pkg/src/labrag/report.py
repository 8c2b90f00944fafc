"""Report rendering: aligned console tables, CSV summaries, and matplotlib
figures written next to the report JSON files.

Everything here is presentation only; metric values arrive precomputed
from the experiment runner.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402 (backend must be pinned first)

from .experiment import EvaluationReport

_PNG_METADATA = {"Software": None}  # keep figure bytes reproducible


def _fmt(value: float | None) -> str:
    return "-" if value is None else f"{value:.3f}"


def overall_table(reports: list[EvaluationReport]) -> str:
    """One row per experiment: the three judged metrics."""
    header = ("Exp.", "Description", "Answer Relevance", "Faithfulness", "Context Recall")
    rows = [
        (
            r.experiment_id,
            r.config.get("description", ""),
            _fmt(r.aggregates["answer_relevance"]),
            _fmt(r.aggregates["faithfulness"]),
            _fmt(r.aggregates["context_recall"]),
        )
        for r in reports
    ]
    return _align(header, rows)


def topk_table(report: EvaluationReport) -> str:
    """One row per cutoff k: precision, recall, F1."""
    header = ("k", "Precision@k", "Recall@k", "F1-Score@k")
    rows = [
        (
            str(k),
            _fmt(report.aggregates["precision_at"][str(k)]),
            _fmt(report.aggregates["recall_at"][str(k)]),
            _fmt(report.aggregates["f1_at"][str(k)]),
        )
        for k in report.config["ks"]
    ]
    return _align(header, rows)


def _align(header: tuple[str, ...], rows: list[tuple[str, ...]]) -> str:
    widths = [len(h) for h in header]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(header)),
        "  ".join("-" * widths[i] for i in range(len(header))),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines)


def summary_csv(reports: list[EvaluationReport]) -> str:
    """Delimited aggregate summary, one line per experiment."""
    ks = reports[0].config["ks"] if reports else []
    fields = ["experiment_id", "description", "num_chunks",
              "answer_relevance", "faithfulness", "context_recall"]
    for k in ks:
        fields += [f"precision_at_{k}", f"recall_at_{k}", f"f1_at_{k}"]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        row = {
            "experiment_id": r.experiment_id,
            "description": r.config.get("description", ""),
            "num_chunks": r.num_chunks,
            "answer_relevance": _csv_num(r.aggregates["answer_relevance"]),
            "faithfulness": _csv_num(r.aggregates["faithfulness"]),
            "context_recall": _csv_num(r.aggregates["context_recall"]),
        }
        for k in ks:
            row[f"precision_at_{k}"] = _csv_num(r.aggregates["precision_at"][str(k)])
            row[f"recall_at_{k}"] = _csv_num(r.aggregates["recall_at"][str(k)])
            row[f"f1_at_{k}"] = _csv_num(r.aggregates["f1_at"][str(k)])
        writer.writerow(row)
    return buf.getvalue()


def _csv_num(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def topk_figure(report: EvaluationReport, path: Path) -> None:
    """Precision/recall/F1 against the cutoff k, one line each."""
    ks = report.config["ks"]
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    for label, key, marker in (
        ("Precision@k", "precision_at", "o"),
        ("Recall@k", "recall_at", "s"),
        ("F1-Score@k", "f1_at", "^"),
    ):
        values = [report.aggregates[key][str(k)] for k in ks]
        ax.plot(ks, values, marker=marker, label=label)
    ax.set_xlabel("k")
    ax.set_ylabel("score")
    ax.set_xticks(ks)
    ax.set_ylim(0.0, 1.05)
    ax.set_title(f"Retrieval quality by cutoff ({report.experiment_id})")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_METADATA)
    plt.close(fig)


def grid_figure(reports: list[EvaluationReport], path: Path) -> None:
    """Grouped bars of the judged metrics across experiments."""
    ids = [r.experiment_id for r in reports]
    x = range(len(reports))
    width = 0.27
    fig, ax = plt.subplots(figsize=(max(6.0, 1.1 * len(reports)), 3.8))
    for offset, (label, key) in enumerate(
        (("Answer Relevance", "answer_relevance"),
         ("Faithfulness", "faithfulness"),
         ("Context Recall", "context_recall"))
    ):
        values = [r.aggregates[key] or 0.0 for r in reports]
        ax.bar([i + (offset - 1) * width for i in x], values, width=width, label=label)
    ax.set_xticks(list(x))
    ax.set_xticklabels(ids, rotation=30, ha="right")
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("score")
    ax.set_title("Judged metrics by experiment")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_METADATA)
    plt.close(fig)


def write_outputs(
    reports: list[EvaluationReport],
    out_dir: str | Path,
    include_runtime: bool = False,
    figures: bool = True,
) -> list[Path]:
    """Write report JSONs, the CSV summary, and the figures into ``out_dir``.

    Returns the list of files written.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for report in reports:
        path = out_dir / f"{report.experiment_id}.json"
        path.write_text(report.to_json(include_runtime=include_runtime), encoding="utf-8")
        written.append(path)
    csv_path = out_dir / "summary.csv"
    csv_path.write_text(summary_csv(reports), encoding="utf-8")
    written.append(csv_path)
    if figures:
        for report in reports:
            fig_path = out_dir / f"{report.experiment_id}_topk.png"
            topk_figure(report, fig_path)
            written.append(fig_path)
        if len(reports) > 1:
            grid_path = out_dir / "grid_metrics.png"
            grid_figure(reports, grid_path)
            written.append(grid_path)
    return written


def chunk_size_histogram(token_counts: list[int]) -> str:
    """ASCII histogram of chunk sizes, surfacing oversized-chunk pathologies."""
    edges = [0, 64, 128, 256, 512, 1024, 2048]
    labels = [f"[{a}, {b})" for a, b in zip(edges, edges[1:])] + [f">= {edges[-1]}"]
    counts = [0] * len(labels)
    for n in token_counts:
        for i, (a, b) in enumerate(zip(edges, edges[1:])):
            if a <= n < b:
                counts[i] += 1
                break
        else:
            counts[-1] += 1
    peak = max(counts) if counts else 0
    scale = max(1, peak) / 40.0
    lines = [f"chunks: {len(token_counts)}  "
             f"max tokens: {max(token_counts) if token_counts else 0}"]
    for label, count in zip(labels, counts):
        bar = "#" * int(round(count / scale)) if count else ""
        lines.append(f"{label:>12}  {count:6d}  {bar}")
    return "\n".join(lines)
