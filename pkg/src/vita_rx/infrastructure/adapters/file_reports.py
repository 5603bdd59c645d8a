"""
File Report Adapter — ReportWriter implementation.

Writes CSV and Markdown result files plus the JSON run manifest. Result
files carry no timestamps or timings, so identical runs give identical
bytes; only ``manifest.json`` records when it was written.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import os
from collections.abc import Sequence
from pathlib import Path

from vita_rx.application import references as published
from vita_rx.domain.entities import (
    METRIC_NAMES,
    AnalysisReport,
    MetricsReport,
    MetricsSummary,
    RunManifest,
    SimilarityStats,
)
from vita_rx.domain.ports import ReportWriter
from vita_rx.domain.value_objects import SimilarityPartition

log = logging.getLogger(__name__)

METRIC_COLUMNS = ["variant", "seed", *METRIC_NAMES, "n_patients", "n_visits", "n_skipped"]
ANALYSIS_COLUMNS = ["partition", "min", "q1", "median", "q3", "max", "mean", "count"]


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def _md_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines.extend("| " + " | ".join(row) + " |" for row in rows)
    return lines


class FileReportWriter(ReportWriter):
    """CSV + Markdown reports and a JSON manifest under one output directory."""

    def write_manifest(self, manifest: RunManifest, out_dir: Path) -> Path:
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "manifest.json"
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(
            json.dumps(dataclasses.asdict(manifest), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        # readers see the old manifest or the new one, never a partial file
        os.replace(tmp, path)
        log.info("📝 Manifest written: %s", path)
        return path

    def write_metrics(
        self,
        reports: Sequence[MetricsReport],
        out_dir: Path,
        stem: str = "report",
        references: Sequence[dict[str, object]] = (),
    ) -> list[Path]:
        out_dir.mkdir(parents=True, exist_ok=True)
        summaries = MetricsSummary.group(reports)

        csv_path = out_dir / f"{stem}.csv"
        with csv_path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=METRIC_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for report in reports:
                row = report.as_row()
                writer.writerow({k: _fmt(v) if k in METRIC_NAMES else v for k, v in row.items()})
            for summary in summaries:
                for stat, values in (("mean", summary.mean), ("std", summary.std)):
                    writer.writerow(
                        {
                            "variant": summary.variant,
                            "seed": stat,
                            **{m: _fmt(values[m]) for m in METRIC_NAMES},
                            "n_patients": "",
                            "n_visits": "",
                            "n_skipped": "",
                        }
                    )

        lines = [f"# {stem.replace('_', ' ').title()}", "", "## Runs", ""]
        lines += _md_table(
            ["variant", "seed", "Jaccard", "PRAUC", "F1", "DDI rate", "visits", "skipped"],
            [
                [
                    r.variant,
                    str(r.seed),
                    *(_fmt(getattr(r, m)) for m in METRIC_NAMES),
                    str(r.n_visits),
                    str(r.n_skipped),
                ]
                for r in reports
            ],
        )
        lines += ["", "## Mean ± std over seeds", ""]
        lines += _md_table(
            ["variant", "seeds", "Jaccard", "PRAUC", "F1", "DDI rate"],
            [
                [
                    s.variant,
                    str(s.n_seeds),
                    *(f"{s.mean[m]:.4f} ± {s.std[m]:.4f}" for m in METRIC_NAMES),
                ]
                for s in summaries
            ],
        )
        if references:
            lines += ["", "## Reference (published MIMIC numbers, not reproduced here)", ""]
            lines += _md_table(
                ["label", "Jaccard", "PRAUC", "F1", "source"],
                [
                    [
                        str(ref["label"]),
                        f"{ref['jaccard']:.4f}",
                        f"{ref['prauc']:.4f}",
                        f"{ref['f1']:.4f}",
                        str(ref.get("source", "")),
                    ]
                    for ref in references
                ],
            )
        md_path = out_dir / f"{stem}.md"
        md_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

        log.info("📊 Report written: %s, %s", csv_path, md_path)
        return [csv_path, md_path]

    def write_analysis(self, report: AnalysisReport, out_dir: Path) -> list[Path]:
        out_dir.mkdir(parents=True, exist_ok=True)
        blocks: list[tuple[SimilarityPartition, SimilarityStats]] = [
            (SimilarityPartition.SELECTED, report.selected),
            (SimilarityPartition.UNSELECTED, report.unselected),
            (SimilarityPartition.ALL, report.overall),
        ]

        def cells(stats: SimilarityStats) -> list[str]:
            return [
                _fmt(stats.min),
                _fmt(stats.q1),
                _fmt(stats.median),
                _fmt(stats.q3),
                _fmt(stats.max),
                _fmt(stats.mean),
                str(stats.count),
            ]

        csv_path = out_dir / "analysis.csv"
        with csv_path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(ANALYSIS_COLUMNS)
            for partition, stats in blocks:
                writer.writerow([partition.value, *cells(stats)])

        ratio = report.mean_ratio
        ref = published.SELECTED_SIMILARITY
        lines = [
            "# Selected-visit analysis",
            "",
            f"Variant: {report.variant}",
            "",
        ]
        lines += _md_table(
            ANALYSIS_COLUMNS,
            [
                [partition.value + (" (empty)" if stats.is_empty else ""), *cells(stats)]
                for partition, stats in blocks
            ],
        )
        lines += [
            "",
            "Mean similarity ratio selected / unselected: "
            + ("n/a" if ratio is None else f"{ratio:.4f}"),
            "",
            f"Reference ({ref['label']}, {published.SOURCE}): "
            f"selected {ref['selected']:.4f} vs unselected {ref['unselected']:.4f}",
        ]
        md_path = out_dir / "analysis.md"
        md_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

        log.info("🔍 Analysis written: %s, %s", csv_path, md_path)
        return [csv_path, md_path]

    def write_training_log(
        self, rows: Sequence[tuple[int, float, float]], out_dir: Path
    ) -> Path:
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "training_log.csv"
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["epoch", "train_loss", "val_jaccard"])
            for epoch, loss, val in rows:
                writer.writerow([epoch, repr(float(loss)), repr(float(val))])
        return path
