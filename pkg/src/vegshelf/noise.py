"""Noisy-dataset construction: seeded noise injection into a fixed number of
images per day folder, materialized as a parallel dataset tree."""

from __future__ import annotations

import hashlib
import json
import logging
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .dataset import DAY_FOLDER_RE, IMAGE_EXTS
from .errors import ImageError, SpecError
from .kernels import saltpepper_write

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "gaussian"  # gaussian | salt_pepper
    intensity: float = 25.0  # gaussian: stddev on the 0-255 scale; salt_pepper: pixel fraction
    per_folder_count: int = 2
    master_seed: int = 0

    def __post_init__(self):
        if self.kind not in ("gaussian", "salt_pepper"):
            raise SpecError(f"unknown noise kind {self.kind!r}")
        if self.intensity < 0:
            raise SpecError("intensity must be >= 0")
        if self.kind == "salt_pepper" and self.intensity > 1:
            raise SpecError("salt_pepper intensity is a pixel fraction in [0, 1]")
        if self.per_folder_count < 0:
            raise SpecError("per_folder_count must be >= 0")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "intensity": self.intensity,
            "per_folder_count": self.per_folder_count,
            "master_seed": self.master_seed,
        }


@dataclass
class CorruptionManifest:
    spec: NoiseSpec
    folders: dict[str, list[str]] = field(default_factory=dict)  # rel folder -> corrupted names
    skipped: list[str] = field(default_factory=list)

    def realized_fraction(self, folder: str, folder_size: int) -> float:
        return len(self.folders[folder]) / folder_size

    def to_json(self) -> str:
        return json.dumps(
            {
                "spec": self.spec.to_dict(),
                "folders": {k: sorted(v) for k, v in sorted(self.folders.items())},
                "skipped": sorted(self.skipped),
            },
            indent=2,
            sort_keys=True,
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())


def apply_noise(image: np.ndarray, spec: NoiseSpec, seed: int) -> np.ndarray:
    """Inject noise into a uint8 HxWxC image, deterministically per seed."""
    if image.dtype != np.uint8:
        raise ImageError("apply_noise expects a uint8 image array")
    rng = np.random.default_rng(seed)
    out = image.copy()
    if spec.kind == "gaussian":
        if spec.intensity == 0:
            return out
        noise = rng.normal(0.0, spec.intensity, size=image.shape)
        out = np.clip(image.astype(np.float64) + noise, 0, 255).astype(np.uint8)
    else:
        h, w = image.shape[:2]
        k = int(round(spec.intensity * h * w))
        if k:
            flat_idx = rng.choice(h * w, size=k, replace=False).astype(np.int64)
            values = np.where(rng.random(k) < 0.5, 0, 255).astype(np.uint8)
            saltpepper_write(out, flat_idx, values)
    return out


def _folder_seed(master_seed: int, rel_folder: str) -> int:
    digest = hashlib.sha256(f"{master_seed}:{rel_folder}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _corrupt_folder(
    in_dir: Path, out_dir: Path, rel: str, spec: NoiseSpec
) -> tuple[str, list[str] | None]:
    """Copy one day folder, replacing ``per_folder_count`` seeded picks with
    noisy versions. Self-contained so folders can be processed in parallel."""
    out_dir.mkdir(parents=True, exist_ok=True)
    images = sorted(p for p in in_dir.iterdir() if p.suffix.lower() in IMAGE_EXTS)
    if len(images) < spec.per_folder_count:
        for p in images:
            shutil.copyfile(p, out_dir / p.name)
        return rel, None

    rng = np.random.default_rng(_folder_seed(spec.master_seed, rel))
    picks = sorted(rng.choice(len(images), size=spec.per_folder_count, replace=False).tolist())
    picked_names = {images[i].name for i in picks}

    corrupted: list[str] = []
    for p in images:
        dst = out_dir / p.name
        if p.name not in picked_names:
            shutil.copyfile(p, dst)
            continue
        try:
            with Image.open(p) as im:
                arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
        except (OSError, UnidentifiedImageError) as exc:
            raise ImageError(f"cannot decode {p}: {exc}") from exc
        noisy = apply_noise(arr, spec, seed=_folder_seed(spec.master_seed, f"{rel}/{p.name}"))
        Image.fromarray(noisy).save(dst)  # format follows the original extension
        corrupted.append(p.name)
    return rel, corrupted


def corrupt_dataset(
    root: str | Path, out_root: str | Path, spec: NoiseSpec, workers: int = 1
) -> CorruptionManifest:
    """Materialize the noisy variant of a dataset tree.

    Per-folder RNG streams are derived from (master_seed, relative path), so
    output is identical for any worker count or traversal order. With
    ``per_folder_count == 0`` the output tree is a plain byte-level copy.
    """
    root, out_root = Path(root), Path(out_root)
    jobs: list[tuple[Path, Path, str]] = []
    for veg_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for day_dir in sorted(p for p in veg_dir.iterdir() if p.is_dir()):
            if not DAY_FOLDER_RE.match(day_dir.name):
                continue
            rel = f"{veg_dir.name}/{day_dir.name}"
            jobs.append((day_dir, out_root / rel, rel))

    manifest = CorruptionManifest(spec=spec)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(lambda j: _corrupt_folder(*j, spec), jobs))
    else:
        results = [_corrupt_folder(*j, spec) for j in jobs]

    for rel, corrupted in results:
        if corrupted is None:
            log.warning("folder %s has fewer than %d images; skipped", rel, spec.per_folder_count)
            manifest.skipped.append(rel)
        else:
            manifest.folders[rel] = corrupted
    return manifest
