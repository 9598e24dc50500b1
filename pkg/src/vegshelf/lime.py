"""Perturbation-based local explanations for the three model outputs.

Superpixel on/off masks are sampled around one image, the model is queried on
the perturbed copies, and a weighted ridge surrogate per head maps mask
vectors to head responses. One perturbation batch serves all three heads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from skimage.segmentation import mark_boundaries, slic

from .errors import SamplingError
from .kernels import composite_masked

HEADS = ("vegetable", "spoilage", "day")
DEFAULT_KERNEL_WIDTH = 0.25
DEFAULT_RIDGE_STRENGTH = 1.0


@dataclass
class SegmentMap:
    labels: np.ndarray  # HxW int, values 0..n_segments-1
    n_segments: int
    degenerate: bool = False  # constant image collapsed to one segment


@dataclass
class Explanation:
    weights: dict[str, np.ndarray]  # head -> per-segment weights
    targets: dict[str, float | int]  # explained class index per classifier head, day scalar
    surrogate_fit_r2: dict[str, float]
    n_segments: int
    n_perturbations: int
    seed: int
    kernel_width: float = DEFAULT_KERNEL_WIDTH
    ridge_strength: float = DEFAULT_RIDGE_STRENGTH
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({
            "weights": {h: list(map(float, w)) for h, w in self.weights.items()},
            "targets": self.targets,
            "surrogate_fit_r2": self.surrogate_fit_r2,
            "n_segments": self.n_segments,
            "n_perturbations": self.n_perturbations,
            "seed": self.seed,
            "kernel_width": self.kernel_width,
            "ridge_strength": self.ridge_strength,
            "warnings": self.warnings,
        }, indent=2)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())


def segment(image: np.ndarray, n_target: int = 50) -> SegmentMap:
    """Deterministic superpixel partition with roughly n_target segments."""
    if np.ptp(image) == 0:
        return SegmentMap(np.zeros(image.shape[:2], dtype=np.int64), 1, degenerate=True)
    labels = slic(image, n_segments=n_target, compactness=10.0,
                  start_label=0, channel_axis=-1, enforce_connectivity=True)
    # relabel to a contiguous 0..k-1 range
    uniq, labels = np.unique(labels, return_inverse=True)
    labels = labels.reshape(image.shape[:2]).astype(np.int64)
    return SegmentMap(labels, len(uniq))


def sample_perturbations(
    image: np.ndarray, segments: SegmentMap, n: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Draw n on/off masks over segments and build the perturbed images.

    Row 0 is forced all-on (the unmodified image); masked-off segments are
    filled with the image mean colour.
    """
    k = segments.n_segments
    if n < k:
        raise SamplingError(f"need at least n_segments={k} perturbations, got {n}")
    rng = np.random.default_rng(seed)
    masks = rng.integers(0, 2, size=(n, k)).astype(bool)
    masks[0, :] = True
    fill = image.reshape(-1, image.shape[-1]).mean(axis=0).astype(image.dtype)
    perturbed = composite_masked(
        np.ascontiguousarray(image), segments.labels, masks, fill)
    return masks, perturbed


def _kernel_weights(masks: np.ndarray, kernel_width: float) -> np.ndarray:
    """Exponential kernel on cosine distance between each mask and all-on."""
    ones = np.ones(masks.shape[1])
    m = masks.astype(np.float64)
    norms = np.linalg.norm(m, axis=1) * np.linalg.norm(ones)
    cos = np.divide(m @ ones, norms, out=np.zeros(len(m)), where=norms > 0)
    dist = 1.0 - cos
    return np.exp(-(dist ** 2) / kernel_width ** 2)


def _fit_head(masks: np.ndarray, response: np.ndarray, sample_weight: np.ndarray,
              alpha: float) -> tuple[np.ndarray, float]:
    from sklearn.linear_model import Ridge
    if np.ptp(response) == 0:
        return np.zeros(masks.shape[1]), 0.0
    # mean-1 weights plus a k/n-scaled penalty make the regularization
    # invariant to the sample count, so oversampling converges on the truth
    sample_weight = sample_weight / sample_weight.mean()
    reg = Ridge(alpha=alpha * masks.shape[1] / masks.shape[0])
    reg.fit(masks.astype(np.float64), response, sample_weight=sample_weight)
    r2 = reg.score(masks.astype(np.float64), response, sample_weight=sample_weight)
    return reg.coef_, float(r2)


def explain(
    predict_fn,
    image: np.ndarray,
    n_segments: int = 50,
    n_perturbations: int = 1000,
    seed: int = 0,
    kernel_width: float = DEFAULT_KERNEL_WIDTH,
    ridge_strength: float = DEFAULT_RIDGE_STRENGTH,
    segments: SegmentMap | None = None,
    batch_size: int = 64,
) -> Explanation:
    """Explain all three outputs of ``predict_fn`` around one image.

    ``predict_fn(batch) -> (vegetable_probs, spoilage_probs, day)`` with batch
    of HxWx3 images. Classification heads are explained on the probability of
    the class predicted for the original image; the day head on its raw
    scalar output.
    """
    seg = segments if segments is not None else segment(image, n_segments)
    warnings = []
    if seg.degenerate:
        warnings.append("constant image: single-segment explanation")
        n_perturbations = max(n_perturbations, 2)

    masks, perturbed = sample_perturbations(image, seg, n_perturbations, seed)

    veg_parts, spoil_parts, day_parts = [], [], []
    for start in range(0, len(perturbed), batch_size):
        v, s, d = predict_fn(perturbed[start:start + batch_size])
        veg_parts.append(np.asarray(v))
        spoil_parts.append(np.asarray(s))
        day_parts.append(np.asarray(d))
    veg = np.concatenate(veg_parts)
    spoil = np.concatenate(spoil_parts)
    day = np.concatenate(day_parts)

    veg_class = int(np.argmax(veg[0]))
    spoil_class = int(np.argmax(spoil[0]))
    responses = {
        "vegetable": veg[:, veg_class],
        "spoilage": spoil[:, spoil_class],
        "day": day,
    }
    sw = _kernel_weights(masks, kernel_width)

    weights, r2s = {}, {}
    for head, resp in responses.items():
        w, r2 = _fit_head(masks, resp, sw, ridge_strength)
        if np.ptp(resp) == 0:
            warnings.append(f"{head} head response has zero variance")
        weights[head] = w
        r2s[head] = r2

    return Explanation(
        weights=weights,
        targets={"vegetable": veg_class, "spoilage": spoil_class, "day": float(day[0])},
        surrogate_fit_r2=r2s,
        n_segments=seg.n_segments,
        n_perturbations=n_perturbations,
        seed=seed,
        kernel_width=kernel_width,
        ridge_strength=ridge_strength,
        warnings=warnings,
    )


def render_overlay(image: np.ndarray, segments: SegmentMap,
                   explanation: Explanation, head: str, top_k: int = 5) -> np.ndarray:
    """Highlight the top_k positive-weight segments for one head."""
    if head not in HEADS:
        raise KeyError(f"unknown head {head!r}")
    out = image.astype(np.float64).copy()
    if top_k == 0:
        return out
    w = explanation.weights[head]
    order = np.argsort(-np.abs(w))[:top_k]
    positive = [s for s in order if w[s] > 0]
    mask = np.isin(segments.labels, positive)
    # dim everything outside the highlighted regions, then draw boundaries
    out[~mask] *= 0.5
    highlight = np.isin(segments.labels, order)
    out = mark_boundaries(out, np.where(highlight, segments.labels + 1, 0))
    return np.clip(out, 0.0, 1.0)


def model_predict_fn(model):
    """Adapt a MultiHeadModel to the (batch)->(veg, spoil, day) callable."""
    def fn(batch: np.ndarray):
        triples = model.predict(batch.astype(np.float32))
        veg = np.stack([t.vegetable_probs for t in triples])
        spoil = np.stack([t.spoilage_probs for t in triples])
        day = np.array([t.day_estimate for t in triples])
        return veg, spoil, day
    return fn
