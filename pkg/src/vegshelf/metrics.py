"""Evaluation metrics (macro F1, MSE, SMAPE), per-model reports and the
original-minus-noisy difference table."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .dataset import Sample, SplitManifest, load_split_arrays
from .errors import EvaluationError, PairingError

CSV_COLUMNS = ("model_id", "vegetable_f1", "spoilage_f1", "mse", "smape")


@dataclass
class MetricsReport:
    model_id: str
    dataset_id: str  # original | noisy | other
    vegetable_f1: float
    spoilage_f1: float
    mse: float
    smape: float
    n_samples: int

    def __post_init__(self):
        assert 0.0 <= self.vegetable_f1 <= 1.0
        assert 0.0 <= self.spoilage_f1 <= 1.0
        assert self.mse >= 0.0
        assert 0.0 <= self.smape <= 200.0
        assert self.n_samples > 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class DiffRow:
    model_id: str
    vegetable_f1_diff: float
    spoilage_f1_diff: float
    mse_diff: float
    smape_diff: float


@dataclass
class DiffReport:
    rows: list[DiffRow]

    def to_csv(self) -> str:
        lines = ["model_id,vegetable_f1_diff,spoilage_f1_diff,mse_diff,smape_diff"]
        for r in self.rows:
            lines.append(f"{r.model_id},{r.vegetable_f1_diff:.4f},{r.spoilage_f1_diff:.4f},"
                         f"{r.mse_diff:.4f},{r.smape_diff:.4f}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {"rows": [asdict(r) for r in self.rows]}


def macro_f1(y_true, y_pred, n_classes: int) -> float:
    """Unweighted mean of per-class F1. A class absent from both the truth
    and the predictions contributes F1 = 0."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.size == 0 or y_true.shape != y_pred.shape:
        raise EvaluationError("macro_f1 needs equal-length non-empty label lists")
    if y_true.max(initial=-1) >= n_classes or y_pred.max(initial=-1) >= n_classes:
        raise EvaluationError("label outside 0..n_classes-1")
    total = 0.0
    for c in range(n_classes):
        tp = float(np.sum((y_pred == c) & (y_true == c)))
        fp = float(np.sum((y_pred == c) & (y_true != c)))
        fn = float(np.sum((y_pred != c) & (y_true == c)))
        denom = 2 * tp + fp + fn
        total += (2 * tp / denom) if denom else 0.0
    return total / n_classes


def mse(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.size == 0 or y_true.shape != y_pred.shape:
        raise EvaluationError("mse needs equal-length non-empty inputs")
    return float(np.mean((y_true - y_pred) ** 2))


def smape(y_true, y_pred) -> float:
    """Symmetric mean absolute percentage error in percent, range [0, 200].
    A term with both values zero counts as 0."""
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.size == 0 or y_true.shape != y_pred.shape:
        raise EvaluationError("smape needs equal-length non-empty inputs")
    denom = np.abs(y_true) + np.abs(y_pred)
    num = 2.0 * np.abs(y_pred - y_true)
    terms = np.divide(num, denom, out=np.zeros_like(num), where=denom > 0)
    return float(100.0 * terms.mean())


def evaluate(model, samples: list[Sample], manifest: SplitManifest, split: str,
             dataset_id: str = "original", model_id: str = "model",
             day_scale: float = 1.0, batch_size: int = 32) -> MetricsReport:
    """Run the model over one split and compute the four metrics.

    Classification decisions are argmax over the probability heads; numpy
    argmax breaks ties toward the lower class index.
    """
    images, veg, spoil, day = load_split_arrays(samples, manifest, split, model.spec.input_size)
    veg_pred, spoil_pred, day_pred = [], [], []
    for start in range(0, images.shape[0], batch_size):
        for triple in model.predict(images[start:start + batch_size]):
            veg_pred.append(int(np.argmax(triple.vegetable_probs)))
            spoil_pred.append(int(np.argmax(triple.spoilage_probs)))
            day_pred.append(triple.day_estimate * day_scale)
    return MetricsReport(
        model_id=model_id,
        dataset_id=dataset_id,
        vegetable_f1=macro_f1(veg, veg_pred, len(manifest.vegetable_index)),
        spoilage_f1=macro_f1(spoil, spoil_pred, len(manifest.spoilage_index)),
        mse=mse(day, day_pred),
        smape=smape(day, day_pred),
        n_samples=len(veg),
    )


def diff_table(original: list[MetricsReport], noisy: list[MetricsReport]) -> DiffReport:
    """Per-model signed differences, every column = original - noisy."""
    noisy_by_id = {r.model_id: r for r in noisy}
    if set(noisy_by_id) != {r.model_id for r in original}:
        raise PairingError("original and noisy report sets name different models")
    rows = []
    for o in original:
        n = noisy_by_id[o.model_id]
        rows.append(DiffRow(
            model_id=o.model_id,
            vegetable_f1_diff=o.vegetable_f1 - n.vegetable_f1,
            spoilage_f1_diff=o.spoilage_f1 - n.spoilage_f1,
            mse_diff=o.mse - n.mse,
            smape_diff=o.smape - n.smape,
        ))
    return DiffReport(rows)


def save_reports(reports: list[MetricsReport], path: str | Path) -> None:
    Path(path).write_text(json.dumps([r.to_dict() for r in reports], indent=2))


def load_reports(path: str | Path) -> list[MetricsReport]:
    return [MetricsReport(**d) for d in json.loads(Path(path).read_text())]


def reports_to_csv(reports: list[MetricsReport]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in reports:
        lines.append(f"{r.model_id},{r.vegetable_f1:.4f},{r.spoilage_f1:.4f},"
                     f"{r.mse:.4f},{r.smape:.4f}")
    return "\n".join(lines) + "\n"
