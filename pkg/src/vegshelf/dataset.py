"""Dataset ingestion: folder-tree parsing, deterministic splits, preprocessing.

On-disk layout: ``<root>/<vegetable>/day<x>_<y>/<images>`` where ``x`` is the
capture day (>= 1) and ``y`` the spoilage code (1 fresh, 2 slightly spoiled,
3 completely spoiled). Each day folder is one *instance group*: its images are
near-duplicate shots of the same produce, so splitting happens at folder
granularity to avoid train/test leakage.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import EXPECTED_VEGETABLE_COUNT, SPOILAGE_CODES
from .errors import EmptyDatasetError, ImageError, LabelError, ParseError

log = logging.getLogger(__name__)

IMAGE_EXTS = {".jpg", ".jpeg", ".png", ".bmp", ".webp"}
DAY_FOLDER_RE = re.compile(r"^day(\d+)_(\d+)$")

SPLITS = ("train", "val", "test")
DEFAULT_RATIOS = (0.7, 0.15, 0.15)
DEFAULT_IMAGE_SIZE = 224


@dataclass(frozen=True)
class Sample:
    image_path: Path
    vegetable: str
    spoilage: int  # 1, 2 or 3
    day: int
    instance_group: str  # "<vegetable>/day<x>_<y>"

    def __post_init__(self):
        if self.spoilage not in SPOILAGE_CODES:
            raise LabelError(f"spoilage code {self.spoilage} not in {SPOILAGE_CODES}")
        if self.day < 1:
            raise LabelError(f"day index must be >= 1, got {self.day}")


@dataclass
class ScanReport:
    samples: list[Sample]
    skipped: list[tuple[str, str]] = field(default_factory=list)  # (path, reason)


@dataclass
class SplitManifest:
    split_assignments: dict[str, str]  # instance_group -> train|val|test
    vegetable_index: dict[str, int]
    spoilage_index: dict[int, int]
    max_day_per_vegetable: dict[str, int]
    seed: int
    ratios: tuple[float, float, float]

    def split_of(self, sample: Sample) -> str:
        return self.split_assignments[sample.instance_group]

    def to_json(self) -> str:
        payload = {
            "split_assignments": dict(sorted(self.split_assignments.items())),
            "vegetable_index": dict(sorted(self.vegetable_index.items())),
            "spoilage_index": {str(k): v for k, v in sorted(self.spoilage_index.items())},
            "max_day_per_vegetable": dict(sorted(self.max_day_per_vegetable.items())),
            "seed": self.seed,
            "ratios": list(self.ratios),
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def from_json(cls, text: str) -> "SplitManifest":
        d = json.loads(text)
        return cls(
            split_assignments=d["split_assignments"],
            vegetable_index=d["vegetable_index"],
            spoilage_index={int(k): v for k, v in d["spoilage_index"].items()},
            max_day_per_vegetable=d["max_day_per_vegetable"],
            seed=d["seed"],
            ratios=tuple(d["ratios"]),
        )

    @classmethod
    def load(cls, path: str | Path) -> "SplitManifest":
        return cls.from_json(Path(path).read_text())


def parse_day_folder_name(name: str) -> tuple[int, int]:
    """Parse ``day<x>_<y>`` into (day, spoilage code)."""
    m = DAY_FOLDER_RE.match(name)
    if not m:
        raise ParseError(f"folder name {name!r} does not match day<x>_<y>")
    day, spoilage = int(m.group(1)), int(m.group(2))
    if day < 1:
        raise ParseError(f"folder {name!r}: day index must be >= 1")
    if spoilage not in SPOILAGE_CODES:
        raise LabelError(f"folder {name!r}: spoilage code {spoilage} not in {SPOILAGE_CODES}")
    return day, spoilage


def scan_dataset(root: str | Path, strict: bool = False) -> ScanReport:
    """Walk a dataset tree and return one Sample per readable image file.

    Unreadable images land in the skip report instead of aborting the scan
    (unless ``strict``). Output is sorted by path so parallel callers agree.
    """
    root = Path(root)
    if not root.is_dir():
        raise EmptyDatasetError(f"dataset root {root} does not exist")
    veg_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not veg_dirs:
        raise EmptyDatasetError(f"dataset root {root} has no vegetable folders")
    if len(veg_dirs) != EXPECTED_VEGETABLE_COUNT:
        log.warning(
            "expected %d vegetable folders, found %d under %s",
            EXPECTED_VEGETABLE_COUNT, len(veg_dirs), root,
        )

    samples: list[Sample] = []
    skipped: list[tuple[str, str]] = []
    for veg_dir in veg_dirs:
        for day_dir in sorted(p for p in veg_dir.iterdir() if p.is_dir()):
            try:
                day, spoilage = parse_day_folder_name(day_dir.name)
            except (ParseError, LabelError):
                if strict:
                    raise
                skipped.append((str(day_dir), "malformed day folder name"))
                continue
            group = f"{veg_dir.name}/{day_dir.name}"
            for img in sorted(day_dir.iterdir()):
                if img.suffix.lower() not in IMAGE_EXTS:
                    continue
                try:
                    with Image.open(img) as im:
                        im.verify()  # header check only, no full decode
                except (OSError, UnidentifiedImageError) as exc:
                    skipped.append((str(img), f"unreadable image: {exc}"))
                    continue
                samples.append(Sample(img, veg_dir.name, spoilage, day, group))
    if not samples:
        raise EmptyDatasetError(f"no images found under {root}")
    return ScanReport(samples=samples, skipped=skipped)


def _group_key(seed: int, group: str) -> str:
    return hashlib.sha256(f"{seed}:{group}".encode()).hexdigest()


def _allocate(n: int, ratios: tuple[float, float, float]) -> list[int]:
    """Largest-remainder split of n items; remainder ties go to the earlier
    split in (train, val, test) order."""
    targets = [r * n for r in ratios]
    counts = [int(t) for t in targets]
    remainders = [t - c for t, c in zip(targets, counts)]
    leftover = n - sum(counts)
    order = sorted(range(3), key=lambda i: (-remainders[i], i))
    for i in order[:leftover]:
        counts[i] += 1
    return counts


def make_splits(
    samples: list[Sample],
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
    seed: int = 0,
) -> SplitManifest:
    """Deterministic, vegetable-stratified split at day-folder granularity.

    Groups are ordered by a hash of (seed, group) and sliced by
    largest-remainder counts, so the manifest is a pure function of
    (samples, ratios, seed). A vegetable with too few groups to populate
    every nonzero-ratio split triggers a fallback to one global assignment.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios {ratios} must sum to 1")
    if not samples:
        raise EmptyDatasetError("cannot split an empty sample list")

    groups_by_veg: dict[str, list[str]] = {}
    for s in samples:
        groups_by_veg.setdefault(s.vegetable, [])
        if s.instance_group not in groups_by_veg[s.vegetable]:
            groups_by_veg[s.vegetable].append(s.instance_group)

    n_nonzero = sum(1 for r in ratios if r > 0)
    stratified = all(len(g) >= n_nonzero for g in groups_by_veg.values())
    if not stratified:
        log.warning("some vegetable has fewer than %d groups; falling back to "
                    "global (non-stratified) assignment", n_nonzero)

    assignments: dict[str, str] = {}

    def assign(groups: list[str]) -> None:
        ordered = sorted(groups, key=lambda g: _group_key(seed, g))
        counts = _allocate(len(ordered), ratios)
        pos = 0
        for split, c in zip(SPLITS, counts):
            for g in ordered[pos:pos + c]:
                assignments[g] = split
            pos += c

    if stratified:
        for veg in sorted(groups_by_veg):
            assign(groups_by_veg[veg])
    else:
        assign(sorted({s.instance_group for s in samples}))

    vegetables = sorted(groups_by_veg)
    vegetable_index = {v: i for i, v in enumerate(vegetables)}
    spoilage_index = {code: i for i, code in enumerate(SPOILAGE_CODES)}

    max_day: dict[str, int] = {}
    for s in samples:
        if assignments[s.instance_group] == "train":
            max_day[s.vegetable] = max(max_day.get(s.vegetable, 0), s.day)
    # vegetables absent from train still need a shelf-life reference point
    for s in samples:
        max_day.setdefault(s.vegetable, s.day)
        max_day[s.vegetable] = max(max_day[s.vegetable], 0)

    return SplitManifest(
        split_assignments=assignments,
        vegetable_index=vegetable_index,
        spoilage_index=spoilage_index,
        max_day_per_vegetable=max_day,
        seed=seed,
        ratios=tuple(ratios),
    )


def preprocess(image_path: str | Path, size: int = DEFAULT_IMAGE_SIZE) -> np.ndarray:
    """Decode, bilinear-resize to size x size RGB and scale to [0, 1] float32."""
    try:
        with Image.open(image_path) as im:
            im = im.convert("RGB").resize((size, size), Image.BILINEAR)
            arr = np.asarray(im, dtype=np.float32) / 255.0
    except (OSError, UnidentifiedImageError) as exc:
        raise ImageError(f"cannot decode image {image_path}: {exc}") from exc
    return arr


def load_split_arrays(
    samples: list[Sample], manifest: SplitManifest, split: str, size: int = DEFAULT_IMAGE_SIZE
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Materialize (images, vegetable idx, spoilage idx, day) for one split."""
    subset = [s for s in samples if manifest.split_of(s) == split]
    subset.sort(key=lambda s: str(s.image_path))
    if not subset:
        raise EmptyDatasetError(f"split {split!r} is empty")
    images = np.stack([preprocess(s.image_path, size) for s in subset])
    veg = np.array([manifest.vegetable_index[s.vegetable] for s in subset], dtype=np.int64)
    spoil = np.array([manifest.spoilage_index[s.spoilage] for s in subset], dtype=np.int64)
    day = np.array([s.day for s in subset], dtype=np.float32)
    return images, veg, spoil, day
