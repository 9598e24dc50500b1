import numpy as np
import pytest
from PIL import Image

VEG_COLORS = {
    "tomato": (220, 40, 30),
    "brinjal": (90, 30, 160),
    "beans": (40, 190, 60),
    "lemon": (230, 220, 60),
}

TEST_SIZE = 64


def build_tree(root, vegetables, day_spoilage, images_per_folder=6, size=TEST_SIZE, seed=0):
    """Write a synthetic dataset tree.

    Vegetable identity is encoded in colour and day index in brightness, so
    tiny models can actually learn the labels. day_spoilage is a list of
    (day, spoilage_code) folder definitions shared by every vegetable.
    """
    rng = np.random.default_rng(seed)
    for veg in vegetables:
        color = np.array(VEG_COLORS[veg], dtype=np.float64)
        for day, spoil in day_spoilage:
            folder = root / veg / f"day{day}_{spoil}"
            folder.mkdir(parents=True)
            brightness = 0.30 + 0.14 * day
            for i in range(images_per_folder):
                base = np.ones((size, size, 3)) * color * brightness
                img = np.clip(base + rng.normal(0, 6, base.shape), 0, 255).astype(np.uint8)
                Image.fromarray(img).save(folder / f"img{i}.png")
    return root


@pytest.fixture
def small_tree(tmp_path):
    """2 vegetables x 3 day folders x 6 images = 36 samples."""
    root = tmp_path / "dataset"
    return build_tree(root, ["tomato", "brinjal"], [(1, 1), (2, 2), (3, 3)])


@pytest.fixture
def tiny_spec():
    from vegshelf.models.zoo import FusionModelSpec

    return FusionModelSpec(
        mode="fusion",
        classification_backbone="cnn_light",
        regression_backbone="vit_distilled",
        head_sizes=(8, 3, 1),
        dropout=None,
        variant="tiny",
        input_size=TEST_SIZE,
    )
