"""Multi-head model assembly and the registry of the ten benchmark
configurations (single-backbone and fusion variants)."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from ..errors import ConstructionError, RegistryError, SpecError
from .backbones import build_backbone

DEFAULT_HEAD_SIZES = (8, 3, 1)


@dataclass(frozen=True)
class FusionModelSpec:
    mode: str  # single | fusion
    classification_backbone: str
    regression_backbone: str | None = None
    fusion: str = "concat"
    head_sizes: tuple[int, int, int] = DEFAULT_HEAD_SIZES
    dropout: float | None = 0.3
    hidden_size: int | None = None  # ReLU dense layer before the heads
    pretrained: bool = False
    variant: str = "tiny"  # tiny | full
    input_size: int = 224

    def __post_init__(self):
        if self.mode not in ("single", "fusion"):
            raise SpecError(f"mode must be single|fusion, got {self.mode!r}")
        if self.mode == "fusion" and not self.regression_backbone:
            raise SpecError("fusion mode requires a regression_backbone")
        if self.fusion != "concat":
            raise SpecError(f"only concat fusion is supported, got {self.fusion!r}")
        if self.head_sizes[2] != 1:
            raise SpecError("day head must be scalar")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "FusionModelSpec":
        d = dict(d)
        d["head_sizes"] = tuple(d.get("head_sizes", DEFAULT_HEAD_SIZES))
        return cls(**d)


@dataclass
class PredictionTriple:
    vegetable_probs: np.ndarray  # sums to 1
    spoilage_probs: np.ndarray  # sums to 1
    day_estimate: float


class MultiHeadModel(nn.Module):
    """Backbone(s) feeding three heads: two softmax classifiers and one
    linear day regressor. In fusion mode the classification-branch and
    regression-branch feature vectors are concatenated (classification
    first) before the heads."""

    def __init__(self, spec: FusionModelSpec):
        super().__init__()
        self.spec = spec
        self.cls_backbone = build_backbone(
            spec.classification_backbone, spec.variant, spec.pretrained, spec.input_size)
        self.reg_backbone = None
        dim = self.cls_backbone.out_dim
        if spec.mode == "fusion":
            self.reg_backbone = build_backbone(
                spec.regression_backbone, spec.variant, spec.pretrained, spec.input_size)
            d1, d2 = self.cls_backbone.out_dim, self.reg_backbone.out_dim
            if d1 <= 0 or d2 <= 0:
                raise ConstructionError(f"bad branch feature dims {d1} and {d2}")
            dim = d1 + d2
        self.fused_dim = dim

        self.hidden = None
        head_in = dim
        if spec.hidden_size:
            self.hidden = nn.Sequential(nn.Linear(dim, spec.hidden_size), nn.ReLU(inplace=True))
            head_in = spec.hidden_size
        self.dropout = nn.Dropout(spec.dropout) if spec.dropout else nn.Identity()
        n_veg, n_spoil, _ = spec.head_sizes
        self.head_vegetable = nn.Linear(head_in, n_veg)
        self.head_spoilage = nn.Linear(head_in, n_spoil)
        self.head_day = nn.Linear(head_in, 1)

    def branch_features(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor | None]:
        f_cls = self.cls_backbone(x)
        f_reg = self.reg_backbone(x) if self.reg_backbone is not None else None
        return f_cls, f_reg

    def fused_features(self, x: torch.Tensor) -> torch.Tensor:
        f_cls, f_reg = self.branch_features(x)
        if f_reg is None:
            return f_cls
        return torch.cat([f_cls, f_reg], dim=1)

    def forward(self, x: torch.Tensor) -> dict[str, torch.Tensor]:
        z = self.fused_features(x)
        if self.hidden is not None:
            z = self.hidden(z)
        z = self.dropout(z)
        return {
            "vegetable_logits": self.head_vegetable(z),
            "spoilage_logits": self.head_spoilage(z),
            "day": self.head_day(z).squeeze(-1),
        }

    @torch.no_grad()
    def predict(self, images: np.ndarray) -> list[PredictionTriple]:
        """Inference on a batch of HxWx3 float images in [0, 1]."""
        was_training = self.training
        self.eval()
        try:
            x = torch.from_numpy(np.ascontiguousarray(
                images.transpose(0, 3, 1, 2))).float()
            out = self(x)
            veg = torch.softmax(out["vegetable_logits"], dim=1).numpy()
            spoil = torch.softmax(out["spoilage_logits"], dim=1).numpy()
            day = out["day"].numpy()
        finally:
            self.train(was_training)
        return [PredictionTriple(veg[i], spoil[i], float(day[i]))
                for i in range(images.shape[0])]


def build_model(spec: FusionModelSpec, seed: int | None = None) -> MultiHeadModel:
    if seed is not None:
        torch.manual_seed(seed)
    return MultiHeadModel(spec)


def _spec(mode, cls_bb, reg_bb=None, dropout=0.3, hidden=None, **kw) -> dict:
    return dict(mode=mode, classification_backbone=cls_bb, regression_backbone=reg_bb,
                dropout=dropout, hidden_size=hidden, **kw)


# The ten benchmark configurations with their published training defaults.
# hidden=64 marks the configurations whose head stack includes a ReLU dense
# layer before the outputs.
MODEL_REGISTRY: dict[str, dict] = {
    "mobilenetv2": {
        "spec": _spec("single", "cnn_light"),
        "train": {"learning_rate": 1e-4, "epochs": 25},
    },
    "mobilenetv2_lstm_fusion": {
        "spec": _spec("fusion", "cnn_light", "cnn_light_lstm"),
        "train": {"learning_rate": 1e-4, "epochs": 25},
    },
    "vgg16": {
        "spec": _spec("single", "cnn_deep_vgg", hidden=64),
        "train": {"learning_rate": 1e-4, "epochs": 10},
    },
    "resnet50": {
        "spec": _spec("single", "cnn_deep_res", hidden=64),
        "train": {"learning_rate": 1e-4, "epochs": 10},
    },
    "mobilenetv2_vgg16_fusion": {
        "spec": _spec("fusion", "cnn_light", "cnn_deep_vgg", dropout=None, hidden=64),
        "train": {"learning_rate": 1e-4, "epochs": 15},
    },
    "mobilenetv2_resnet50_fusion": {
        "spec": _spec("fusion", "cnn_light", "cnn_deep_res", hidden=64),
        "train": {"learning_rate": 1e-4, "epochs": 10},
    },
    "capsule": {
        "spec": _spec("single", "capsule", hidden=64),
        "train": {"learning_rate": 1e-3, "epochs": 10},
    },
    "mobilenetv2_capsule_fusion": {
        "spec": _spec("fusion", "cnn_light", "capsule", hidden=64),
        "train": {"learning_rate": 1e-3, "epochs": 10},
    },
    "deit": {
        "spec": _spec("single", "vit_distilled", dropout=None, hidden=64),
        "train": {"learning_rate": 1e-4, "epochs": 5},
    },
    "mobilenetv2_deit_fusion": {
        "spec": _spec("fusion", "cnn_light", "vit_distilled", dropout=None, hidden=64),
        "train": {"learning_rate": 1e-4, "epochs": 5},
    },
}


def registry_spec(model_id: str, **overrides) -> FusionModelSpec:
    if model_id not in MODEL_REGISTRY:
        raise RegistryError(
            f"unknown model id {model_id!r}; known: {sorted(MODEL_REGISTRY)}")
    d = dict(MODEL_REGISTRY[model_id]["spec"])
    d.update(overrides)
    return FusionModelSpec.from_dict(d)


def save_model(model: MultiHeadModel, out_dir: str | Path, model_id: str) -> Path:
    out = Path(out_dir) / model_id
    out.mkdir(parents=True, exist_ok=True)
    (out / "spec.json").write_text(model.spec.to_json())
    torch.save(model.state_dict(), out / "weights.pt")
    return out


def load_model(model_dir: str | Path) -> MultiHeadModel:
    model_dir = Path(model_dir)
    spec = FusionModelSpec.from_dict(json.loads((model_dir / "spec.json").read_text()))
    model = MultiHeadModel(spec)
    model.load_state_dict(torch.load(model_dir / "weights.pt", map_location="cpu"))
    model.eval()
    return model
