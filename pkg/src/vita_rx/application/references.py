"""Published MIMIC reference numbers, shown only as labelled rows in Markdown reports."""

from __future__ import annotations

from typing import Any

SOURCE = "published MIMIC result (not reproduced here)"

HEADLINE: tuple[dict[str, Any], ...] = (
    {"label": "VITA (MIMIC-III)", "jaccard": 0.5282, "prauc": 0.7673, "f1": 0.6815},
    {"label": "VITA (MIMIC-IV)", "jaccard": 0.5218, "prauc": 0.7148, "f1": 0.6685},
)

ABLATION: tuple[dict[str, Any], ...] = (
    {"label": "VITA-RS (MIMIC-III)", "jaccard": 0.5163, "prauc": 0.7558, "f1": 0.6708},
    {"label": "VITA-RS_Top-1 (MIMIC-III)", "jaccard": 0.5140, "prauc": 0.7413, "f1": 0.6702},
    {"label": "VITA-RS_sharp (MIMIC-III)", "jaccard": 0.5188, "prauc": 0.7622, "f1": 0.6718},
    {"label": "VITA-TA_avg (MIMIC-III)", "jaccard": 0.5119, "prauc": 0.7505, "f1": 0.6650},
    {"label": "VITA-TA_RNN (MIMIC-III)", "jaccard": 0.5152, "prauc": 0.7538, "f1": 0.6682},
    {"label": "VITA-TA_attn (MIMIC-III)", "jaccard": 0.5181, "prauc": 0.7587, "f1": 0.6699},
)

SELECTED_SIMILARITY: dict[str, Any] = {
    "label": "MIMIC-III mean similarity",
    "selected": 0.2164,
    "unselected": 0.1762,
}


def with_source(rows: tuple[dict[str, Any], ...]) -> list[dict[str, Any]]:
    return [{**row, "source": SOURCE} for row in rows]
