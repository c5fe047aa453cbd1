"""Detector evaluation: accuracy, F1, ROC curves and AUC per artifact.

AUC is computed two independent ways on every call (threshold-sweep
trapezoid, and brute-force pairwise concordance with half-credit ties) and
the two must agree to 1e-12, turning every evaluation into its own oracle.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import fsum, isfinite
from pathlib import Path

import numpy as np

from .errors import PredictionCoverageError, ToolkitError, UndefinedMetricError
from .pipeline import ManifestRecord
from .synth import ArtifactKind

REPORT_NAME = "report.csv"
REPORT_COLUMNS = ("Artifact", "N", "Acc", "F1", "AUC")

_DUAL_TOL = 1e-12


def accuracy(labels, preds) -> float:
    """Percentage of matching binary decisions."""
    labels, preds = list(labels), list(preds)
    if not labels or len(labels) != len(preds):
        raise ToolkitError(f"accuracy needs equal nonempty lists, got {len(labels)} vs {len(preds)}")
    hits = sum(1 for y, p in zip(labels, preds) if int(y) == int(p))
    return 100.0 * hits / len(labels)


def f1(labels, preds) -> float:
    """Harmonic precision/recall mean; degenerate zero-denominator case is 0."""
    labels, preds = list(labels), list(preds)
    if not labels or len(labels) != len(preds):
        raise ToolkitError(f"f1 needs equal nonempty lists, got {len(labels)} vs {len(preds)}")
    tp = sum(1 for y, p in zip(labels, preds) if y and p)
    fp = sum(1 for y, p in zip(labels, preds) if not y and p)
    fn = sum(1 for y, p in zip(labels, preds) if y and not p)
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


@dataclass(frozen=True)
class RocCurve:
    """Threshold-swept operating points from (inf, 0, 0) to (1, 1)."""

    thresholds: tuple[float, ...]
    fpr: tuple[float, ...]
    tpr: tuple[float, ...]
    auc: float


def _pairwise_auc(labels: np.ndarray, scores: np.ndarray) -> float:
    """Concordance probability of a random (positive, negative) pair."""
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = []
    for p in pos:
        for n in neg:
            wins.append(1.0 if p > n else (0.5 if p == n else 0.0))
    return fsum(wins) / (len(pos) * len(neg))


def _sweep_auc(labels: np.ndarray, scores: np.ndarray):
    """ROC by sweeping the distinct scores from high to low; trapezoid AUC."""
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]

    thresholds = [float("inf")]
    tp_counts = [0]
    fp_counts = [0]
    tp = fp = 0
    for i, (score, label) in enumerate(zip(sorted_scores, sorted_labels)):
        if label:
            tp += 1
        else:
            fp += 1
        last = i + 1 == len(sorted_scores)
        if last or sorted_scores[i + 1] != score:  # emit one point per distinct score
            thresholds.append(float(score))
            tp_counts.append(tp)
            fp_counts.append(fp)

    tpr = [c / n_pos for c in tp_counts]
    fpr = [c / n_neg for c in fp_counts]
    area_terms = [
        (fpr[i] - fpr[i - 1]) * (tpr[i] + tpr[i - 1]) / 2.0 for i in range(1, len(fpr))
    ]
    return thresholds, fpr, tpr, fsum(area_terms)


def roc_auc(labels, scores) -> RocCurve:
    """ROC curve plus AUC, cross-checked against pairwise concordance."""
    labels = np.asarray(labels, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    if labels.shape != scores.shape or labels.ndim != 1 or labels.size < 2:
        raise ToolkitError("roc_auc needs matching 1-D labels and scores with >= 2 entries")
    if not np.isfinite(scores).all():
        raise ToolkitError("scores must be finite")
    if set(np.unique(labels)) - {0, 1}:
        raise ToolkitError("labels must be binary")
    if (labels == 1).all() or (labels == 0).all():
        raise UndefinedMetricError("AUC undefined: ground truth has a single class")

    thresholds, fpr, tpr, area = _sweep_auc(labels, scores)
    concordance = _pairwise_auc(labels, scores)
    if abs(area - concordance) > _DUAL_TOL:
        raise ToolkitError(
            f"AUC dual computation diverged: sweep {area!r} vs pairwise {concordance!r}"
        )
    return RocCurve(tuple(thresholds), tuple(fpr), tuple(tpr), area)


# ---------------------------------------------------------------------------
# dataset-level evaluation

@dataclass(frozen=True)
class ArtifactRow:
    kind: ArtifactKind
    count: int
    acc: float
    f1: float
    auc: float | None
    roc: RocCurve | None


@dataclass(frozen=True)
class Report:
    rows: tuple[ArtifactRow, ...]


def read_predictions(path: Path) -> dict[str, np.ndarray]:
    """Parse the newline-delimited predictions: patch id then ten scores."""
    preds: dict[str, np.ndarray] = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or row[0] in ("patch_id", "# patch_id"):
                continue
            if len(row) < 1 + len(ArtifactKind):
                raise ToolkitError(f"{path}:{lineno}: expected at least 11 fields, got {len(row)}")
            try:
                scores = np.array([float(v) for v in row[1 : 1 + len(ArtifactKind)]])
            except ValueError as exc:
                raise ToolkitError(f"{path}:{lineno}: bad score ({exc})") from exc
            if not np.isfinite(scores).all():
                raise ToolkitError(f"{path}:{lineno}: scores must be finite")
            preds[row[0]] = scores
    return preds


def evaluate(records: list[ManifestRecord], predictions: dict[str, np.ndarray]) -> Report:
    """One row per artifact; single-class artifacts report AUC as undefined."""
    missing = [rec.patch_id for rec in records if rec.patch_id not in predictions]
    if missing:
        raise PredictionCoverageError(missing)
    if not records:
        raise ToolkitError("evaluate needs a nonempty manifest")

    ids = [rec.patch_id for rec in records]
    truth = np.array([[rec.labels[kind] for kind in ArtifactKind] for rec in records])
    scores = np.array([predictions[pid] for pid in ids])
    hard = (scores > 0.5).astype(np.int64)

    rows = []
    for kind in ArtifactKind:
        col = int(kind)
        y, s, p = truth[:, col], scores[:, col], hard[:, col]
        try:
            roc = roc_auc(y, s)
            auc = roc.auc
        except UndefinedMetricError:
            roc, auc = None, None
        rows.append(ArtifactRow(kind, len(y), accuracy(y, p), f1(y, p), auc, roc))
    return Report(tuple(rows))


def format_report(report: Report) -> str:
    lines = [",".join(REPORT_COLUMNS)]
    for row in report.rows:
        auc = "undefined" if row.auc is None else f"{row.auc:.6f}"
        lines.append(f"{row.kind.cli_name},{row.count},{row.acc:.2f},{row.f1:.6f},{auc}")
    return "\n".join(lines) + "\n"


def write_report(report: Report, out_dir: Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / REPORT_NAME
    path.write_text(format_report(report))
    for row in report.rows:
        if row.roc is None:
            continue
        with open(out_dir / f"roc_{row.kind.cli_name}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("threshold", "fpr", "tpr"))
            for t, x, y in zip(row.roc.thresholds, row.roc.fpr, row.roc.tpr):
                writer.writerow((("inf" if not isfinite(t) else f"{t:.9g}"), f"{x:.9g}", f"{y:.9g}"))
    return path


def render_roc_figures(report: Report, out_dir: Path) -> list[Path]:
    """Draw one ROC figure per defined artifact next to the CSV output."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for row in report.rows:
        if row.roc is None:
            continue
        fig, ax = plt.subplots(figsize=(4.0, 4.0))
        ax.plot(row.roc.fpr, row.roc.tpr, marker=".", color="#1f6fb2")
        ax.plot([0, 1], [0, 1], linestyle="--", color="#999999", linewidth=0.8)
        ax.set_xlabel("false positive rate")
        ax.set_ylabel("true positive rate")
        ax.set_title(f"{row.kind.cli_name} (AUC {row.auc:.3f})")
        ax.set_xlim(-0.02, 1.02)
        ax.set_ylim(-0.02, 1.02)
        fig.tight_layout()
        path = out_dir / f"roc_{row.kind.cli_name}.png"
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)
    return written
