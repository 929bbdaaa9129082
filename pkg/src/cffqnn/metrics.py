"""Confusion counts, precision/recall/accuracy/F1, and the model comparison report.

Metrics with a zero denominator are ``None`` (rendered as JSON ``null`` and
an empty CSV cell), never 0.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from cffqnn.circuit import ResourceReport

REPORT_FIELDS = (
    "name",
    "status",
    "precision",
    "recall",
    "accuracy",
    "f1",
    "tp",
    "fp",
    "tn",
    "fn",
    "depth",
    "native_controlled_ops",
    "native_cnots",
    "native_crys",
    "cnot_equivalent",
    "entangling_pairs",
    "single_qubit_gates",
    "trainable_parameters",
    "wall_time_seconds",
)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class MetricsReport:
    precision: Optional[float]
    recall: Optional[float]
    accuracy: float
    f1: Optional[float]
    counts: ConfusionCounts

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in ("precision", "recall", "accuracy", "f1")}
        d.update(asdict(self.counts))
        return d


def confusion(predictions, labels) -> ConfusionCounts:
    p = np.asarray(predictions).astype(np.int64)
    y = np.asarray(labels).astype(np.int64)
    if p.shape != y.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {y.shape}")
    if p.size == 0:
        raise ValueError("no rows to evaluate")
    return ConfusionCounts(
        tp=int(np.sum((p == 1) & (y == 1))),
        fp=int(np.sum((p == 1) & (y == 0))),
        tn=int(np.sum((p == 0) & (y == 0))),
        fn=int(np.sum((p == 0) & (y == 1))),
    )


def compute_metrics(counts: ConfusionCounts) -> MetricsReport:
    if counts.total == 0:
        raise ValueError("cannot compute metrics over zero rows")
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else None
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else None
    if precision is None or recall is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return MetricsReport(
        precision, recall, (counts.tp + counts.tn) / counts.total, f1, counts
    )


def evaluate_predictions(predictions, labels) -> MetricsReport:
    return compute_metrics(confusion(predictions, labels))


Entry = Tuple[str, Optional[MetricsReport], Union[ResourceReport, dict, None]]


def comparison_table(entries: Sequence[Entry]) -> dict:
    """One record per model, in the order given.

    A ``None`` metrics report marks a failed sub-run. Resources may be a
    partial dict (the MLP has no circuit), leaving the missing fields null.
    """
    if not entries:
        raise ValueError("need at least one entry")
    records: List[dict] = []
    for name, metrics, resources in entries:
        rec = dict.fromkeys(REPORT_FIELDS)
        rec["name"] = name
        rec["status"] = "ok" if metrics is not None else "failed"
        if metrics is not None:
            rec.update(metrics.to_dict())
        if isinstance(resources, ResourceReport):
            resources = resources.to_dict()
        if resources:
            rec.update({k: v for k, v in resources.items() if k in rec})
        records.append(rec)
    return {"fields": list(REPORT_FIELDS), "records": records}


def render_json(document: dict) -> str:
    return json.dumps(document, indent=2) + "\n"


def render_csv(document: dict) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=document["fields"], lineterminator="\n")
    writer.writeheader()
    for rec in document["records"]:
        writer.writerow({k: "" if v is None else v for k, v in rec.items()})
    return buf.getvalue()
