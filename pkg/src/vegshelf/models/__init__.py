from .backbones import BACKBONES, build_backbone, squash
from .zoo import (
    FusionModelSpec,
    MultiHeadModel,
    PredictionTriple,
    MODEL_REGISTRY,
    build_model,
    load_model,
    save_model,
)

__all__ = [
    "BACKBONES",
    "build_backbone",
    "squash",
    "FusionModelSpec",
    "MultiHeadModel",
    "PredictionTriple",
    "MODEL_REGISTRY",
    "build_model",
    "load_model",
    "save_model",
]
