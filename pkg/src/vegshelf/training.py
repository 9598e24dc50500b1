"""Multi-task training: weighted sum of two cross-entropies (vegetable and
spoilage classification) and a mean squared error on the day regression."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .dataset import SplitManifest, Sample, load_split_arrays
from .errors import LabelError, SpecError, VegshelfError
from .models.zoo import MultiHeadModel, save_model

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    epochs: int = 25
    optimizer: str = "adam"
    dropout: float | None = 0.3
    loss_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    batch_size: int = 16
    seed: int = 0
    unfreeze: bool = False  # train a pretrained backbone instead of freezing it
    normalize_day: bool = False  # regress day / max_day instead of the raw index

    def __post_init__(self):
        if self.epochs < 1:
            raise SpecError("epochs must be >= 1")
        if any(w <= 0 for w in self.loss_weights):
            raise SpecError("loss weights must all be > 0")
        if self.optimizer != "adam":
            raise SpecError(f"unsupported optimizer {self.optimizer!r}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if "loss_weights" in d:
            d["loss_weights"] = tuple(d["loss_weights"])
        return cls(**d)


@dataclass
class TrainHistory:
    epochs: list[dict] = field(default_factory=list)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps({"epochs": self.epochs}, indent=2))


def multitask_loss(
    vegetable_probs: np.ndarray,
    spoilage_probs: np.ndarray,
    day_pred: np.ndarray,
    vegetable_true: np.ndarray,
    spoilage_true: np.ndarray,
    day_true: np.ndarray,
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> tuple[float, tuple[float, float, float]]:
    """Combined loss over a batch of probability/regression outputs.

    Returns (total, (ce_vegetable, ce_spoilage, mse_day)) with
    total = w1*CE + w2*CE + w3*MSE.
    """
    vegetable_probs = np.asarray(vegetable_probs, dtype=np.float64)
    spoilage_probs = np.asarray(spoilage_probs, dtype=np.float64)
    veg_t = np.asarray(vegetable_true)
    spoil_t = np.asarray(spoilage_true)
    if veg_t.min() < 0 or veg_t.max() >= vegetable_probs.shape[1]:
        raise LabelError("vegetable target index out of range")
    if spoil_t.min() < 0 or spoil_t.max() >= spoilage_probs.shape[1]:
        raise LabelError("spoilage target index out of range")
    n = veg_t.shape[0]
    eps = 1e-12
    ce_veg = float(-np.log(vegetable_probs[np.arange(n), veg_t] + eps).mean())
    ce_spoil = float(-np.log(spoilage_probs[np.arange(n), spoil_t] + eps).mean())
    mse_day = float(np.mean((np.asarray(day_pred, dtype=np.float64) - np.asarray(day_true, dtype=np.float64)) ** 2))
    w1, w2, w3 = weights
    total = w1 * ce_veg + w2 * ce_spoil + w3 * mse_day
    return total, (ce_veg, ce_spoil, mse_day)


def day_mse_gradient(day_pred: np.ndarray, day_true: np.ndarray) -> np.ndarray:
    """Analytic gradient of the day MSE with respect to the predictions."""
    day_pred = np.asarray(day_pred, dtype=np.float64)
    day_true = np.asarray(day_true, dtype=np.float64)
    return 2.0 * (day_pred - day_true) / day_pred.shape[0]


def _loss_from_logits(out: dict, veg_t, spoil_t, day_t, weights):
    """Training-path loss on raw logits (log-softmax for stability); values
    match multitask_loss on the softmaxed outputs."""
    ce = nn.functional.cross_entropy
    ce_veg = ce(out["vegetable_logits"], veg_t)
    ce_spoil = ce(out["spoilage_logits"], spoil_t)
    mse_day = nn.functional.mse_loss(out["day"], day_t)
    w1, w2, w3 = weights
    total = w1 * ce_veg + w2 * ce_spoil + w3 * mse_day
    return total, (ce_veg, ce_spoil, mse_day)


def train(
    model: MultiHeadModel,
    samples: list[Sample],
    manifest: SplitManifest,
    config: TrainConfig,
    out_dir: str | Path | None = None,
    model_id: str = "model",
    eval_val: bool = True,
) -> tuple[MultiHeadModel, TrainHistory]:
    """Run the fixed-epoch training loop (no early stopping).

    Pretrained backbones stay frozen unless ``config.unfreeze``; tiny
    random-init variants always train end to end. All randomness flows from
    ``config.seed`` (single-worker, deterministic).
    """
    torch.manual_seed(config.seed)
    size = model.spec.input_size
    images, veg, spoil, day = load_split_arrays(samples, manifest, "train", size)
    x = torch.from_numpy(np.ascontiguousarray(images.transpose(0, 3, 1, 2))).float()
    veg_t = torch.from_numpy(veg)
    spoil_t = torch.from_numpy(spoil)
    day_np = day.copy()
    day_scale = 1.0
    if config.normalize_day:
        day_scale = max(manifest.max_day_per_vegetable.values())
        day_np = day_np / day_scale
    day_t = torch.from_numpy(day_np)

    if model.spec.pretrained and not config.unfreeze:
        for bb in (model.cls_backbone, model.reg_backbone):
            if bb is not None:
                for p in bb.parameters():
                    p.requires_grad_(False)

    params = [p for p in model.parameters() if p.requires_grad]
    opt = torch.optim.Adam(params, lr=config.learning_rate)

    n = x.shape[0]
    history = TrainHistory()
    rng = np.random.default_rng(config.seed)
    model.train()
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        tot = comp = None
        sums = np.zeros(4)
        batches = 0
        for start in range(0, n, config.batch_size):
            idx = torch.from_numpy(order[start:start + config.batch_size])
            out = model(x[idx])
            tot, comp = _loss_from_logits(
                out, veg_t[idx], spoil_t[idx], day_t[idx], config.loss_weights)
            if not math.isfinite(tot.item()):
                raise VegshelfError(
                    f"training diverged: non-finite loss at epoch {epoch}")
            opt.zero_grad()
            tot.backward()
            opt.step()
            sums += [tot.item(), *(c.item() for c in comp)]
            batches += 1
        record = {
            "epoch": epoch,
            "total_loss": sums[0] / batches,
            "ce_vegetable": sums[1] / batches,
            "ce_spoilage": sums[2] / batches,
            "mse_day": sums[3] / batches,
        }
        if eval_val:
            from .metrics import evaluate
            try:
                report = evaluate(model, samples, manifest, split="val",
                                  dataset_id="original", day_scale=day_scale)
                record["val"] = report.to_dict()
            except VegshelfError:
                pass  # empty val split on desk-scale data
        history.epochs.append(record)
        log.info("epoch %d: total %.4f", epoch, record["total_loss"])
    model.eval()

    if out_dir is not None:
        out = save_model(model, out_dir, model_id)
        history.save(out / "history.json")
        (out / "train_config.json").write_text(config.to_json())
    return model, history
