"""Report rendering: JSON summary, per-case CSV, and matplotlib figures.

`render_report` writes report.json and cases.csv into the target directory
and, when case metrics exist, a summary bar chart plus a metric histogram
as PNG files.  matplotlib is imported lazily with the Agg backend so the
CLI stays usable on headless machines and fast when no figures are asked
for.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import List

from .harness import Report


def render_report(report: Report, directory) -> List[str]:
    """Write the report artifacts; returns the created file paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    created: List[str] = []

    json_path = directory / "report.json"
    json_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    created.append(str(json_path))

    csv_path = directory / "cases.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["suite", "case", "ok", "kind", "metric", "detail"])
        for case in report.cases:
            writer.writerow(
                [
                    case.suite,
                    case.case,
                    int(case.ok),
                    case.kind,
                    "" if case.metric is None else case.metric,
                    case.detail,
                ]
            )
    created.append(str(csv_path))

    created.extend(_render_figures(report, directory))
    return created


def _render_figures(report: Report, directory: Path) -> List[str]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    created: List[str] = []

    passed = sum(1 for c in report.cases if c.ok)
    failed = len(report.cases) - passed
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.bar(["pass", "fail"], [passed, failed], color=["#2a9d8f", "#e76f51"])
    ax.set_title(f"suite {report.suite}: {len(report.cases)} cases")
    ax.set_ylabel("cases")
    fig.tight_layout()
    summary_path = directory / "summary.png"
    fig.savefig(summary_path, dpi=120)
    plt.close(fig)
    created.append(str(summary_path))

    metrics = [c.metric for c in report.cases if c.metric is not None]
    if metrics:
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        bins = min(20, max(3, len(set(metrics))))
        ax.hist(metrics, bins=bins, color="#264653")
        ax.set_title(f"suite {report.suite}: case metric distribution")
        ax.set_xlabel("metric")
        ax.set_ylabel("cases")
        fig.tight_layout()
        hist_path = directory / "metrics.png"
        fig.savefig(hist_path, dpi=120)
        plt.close(fig)
        created.append(str(hist_path))
    return created
