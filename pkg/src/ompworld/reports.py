"""Aligned-text and CSV report emission for eval and fix-loop results."""
from __future__ import annotations

import csv
from pathlib import Path


def render_table(headers, rows) -> str:
    """Plain aligned-text table."""
    str_rows = [[str(c) for c in row] for row in rows]
    widths = [len(h) for h in headers]
    for row in str_rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def fmt(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines.extend(fmt(row) for row in str_rows)
    return "\n".join(lines)


def write_csv(path, headers, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(headers)
        writer.writerows(rows)


def pct(value: float) -> str:
    return f"{value:.1f}%"


def race_accuracy_table(rows) -> str:
    """Rows: (model, mean_acc, majority_acc, n_items, n_samples)."""
    return render_table(
        ["World Model", "Mean Acc", "Majority Acc", "Items", "Samples/Prompt"],
        [(m, pct(a), pct(b), n, s) for m, a, b, n, s in rows],
    )


def ranking_table(model: str, report) -> str:
    """Per-thread-count ranking accuracies plus the average column."""
    counts = sorted(report.per_thread_accuracy)
    headers = ["World Model"] + [f"{tc} threads" for tc in counts] + ["Average"]
    row = [model] + [f"{pct(report.per_thread_accuracy[tc])} (n={report.denominators[tc]})" for tc in counts]
    row.append(pct(report.average_accuracy))
    return render_table(headers, [row])


def gap_bucket_csv(path, buckets):
    write_csv(path, ["bucket", "low", "high", "count", "accuracy_pct"],
              [(b["bucket"], b["low"], b["high"], b["count"], f"{b['accuracy']:.2f}") for b in buckets])


def compute_cost_table(rows) -> str:
    """Rows: (model, param_count, tflops_per_response, avg_response_len, accuracy)."""
    return render_table(
        ["Metric"] + [r[0] for r in rows],
        [
            ["Model Size"] + [f"{r[1] / 1e9:g}B" for r in rows],
            ["TFLOPs/Response"] + [f"{r[2]:.2f}" for r in rows],
            ["Average Response Length"] + [f"{r[3]:.2f}" for r in rows],
            ["Accuracy"] + [pct(r[4]) for r in rows],
        ],
    )


def fix_loop_table(grid: dict) -> str:
    """Grid: {actor: {feedback_source: race_free_pct}} in Table-style layout."""
    sources = sorted({src for row in grid.values() for src in row})
    headers = ["Actor Model"] + sources
    rows = [[actor] + [pct(grid[actor].get(src, 0.0)) for src in sources] for actor in sorted(grid)]
    return render_table(headers, rows)
