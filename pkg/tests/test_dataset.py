import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vegshelf.dataset import (
    Sample,
    make_splits,
    parse_day_folder_name,
    preprocess,
    scan_dataset,
)
from vegshelf.errors import EmptyDatasetError, LabelError, ParseError

from conftest import build_tree


class TestParseDayFolderName:
    def test_basic(self):
        assert parse_day_folder_name("day3_2") == (3, 2)
        assert parse_day_folder_name("day1_1") == (1, 1)
        assert parse_day_folder_name("day12_3") == (12, 3)

    def test_bad_spoilage_code(self):
        with pytest.raises(LabelError):
            parse_day_folder_name("day4_9")

    @pytest.mark.parametrize("name", ["day_1", "3_2", "dayx_2", "day3", "day3_2_1", "Day3_2"])
    def test_malformed(self, name):
        with pytest.raises(ParseError):
            parse_day_folder_name(name)


class TestScan:
    def test_counts_and_labels(self, small_tree):
        report = scan_dataset(small_tree)
        assert len(report.samples) == 36
        assert not report.skipped
        triples = {(s.vegetable, s.day, s.spoilage) for s in report.samples}
        assert triples == {(v, d, y) for v in ("tomato", "brinjal")
                           for d, y in [(1, 1), (2, 2), (3, 3)]}

    def test_label_propagation(self, tmp_path):
        build_tree(tmp_path / "d", ["tomato"], [(2, 3)])
        report = scan_dataset(tmp_path / "d")
        assert len(report.samples) == 6
        assert all(s.vegetable == "tomato" and s.day == 2 and s.spoilage == 3
                   for s in report.samples)

    def test_empty_root(self, tmp_path):
        (tmp_path / "empty").mkdir()
        with pytest.raises(EmptyDatasetError):
            scan_dataset(tmp_path / "empty")
        with pytest.raises(EmptyDatasetError):
            scan_dataset(tmp_path / "missing")

    def test_unreadable_image_skipped(self, small_tree):
        bad = small_tree / "tomato" / "day1_1" / "img0.png"
        bad.write_bytes(b"not an image")
        report = scan_dataset(small_tree)
        assert len(report.samples) == 35
        assert any(str(bad) == path for path, _ in report.skipped)
        from vegshelf.errors import ImageError
        with pytest.raises(ImageError):
            preprocess(bad, 32)

    def test_malformed_folder_reported(self, small_tree):
        (small_tree / "tomato" / "day9_7").mkdir()
        report = scan_dataset(small_tree)
        assert any("day9_7" in path for path, _ in report.skipped)

    def test_roundtrip_ordering_canonical(self, small_tree):
        a = scan_dataset(small_tree).samples
        b = scan_dataset(small_tree).samples
        assert [s.image_path for s in a] == [s.image_path for s in b]


def _samples(groups):
    """groups: list of (vegetable, day, spoilage, n_images)."""
    out = []
    for veg, day, spoil, n in groups:
        for i in range(n):
            out.append(Sample(f"{veg}/day{day}_{spoil}/img{i}.png", veg, spoil, day,
                              f"{veg}/day{day}_{spoil}"))
    return out


class TestSplits:
    def test_deterministic(self, small_tree):
        samples = scan_dataset(small_tree).samples
        m1 = make_splits(samples, (0.7, 0.15, 0.15), seed=42)
        m2 = make_splits(samples, (0.7, 0.15, 0.15), seed=42)
        assert m1.to_json() == m2.to_json()

    def test_no_leakage(self, small_tree):
        samples = scan_dataset(small_tree).samples
        m = make_splits(samples, (0.5, 0.25, 0.25), seed=7)
        for s in samples:
            assert m.split_of(s) == m.split_assignments[s.instance_group]
        assert set(m.split_assignments) == {s.instance_group for s in samples}

    def test_largest_remainder_counts(self):
        samples = _samples([("tomato", d, 1, 1) for d in range(1, 7)])
        m = make_splits(samples, (0.5, 0.25, 0.25), seed=0)
        counts = [0, 0, 0]
        for split in m.split_assignments.values():
            counts[["train", "val", "test"].index(split)] += 1
        assert counts in ([3, 2, 1], [3, 1, 2])

    def test_indices_are_bijections(self, small_tree):
        samples = scan_dataset(small_tree).samples
        m = make_splits(samples)
        assert sorted(m.vegetable_index.values()) == list(range(len(m.vegetable_index)))
        assert sorted(m.spoilage_index.values()) == [0, 1, 2]
        assert set(m.vegetable_index) == {"tomato", "brinjal"}

    def test_max_day_from_train_split(self, small_tree):
        samples = scan_dataset(small_tree).samples
        m = make_splits(samples, (1.0, 0.0, 0.0), seed=0)
        assert m.max_day_per_vegetable == {"tomato": 3, "brinjal": 3}

    def test_bad_ratios(self):
        with pytest.raises(ValueError):
            make_splits(_samples([("tomato", 1, 1, 2)]), (0.5, 0.2, 0.2), 0)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000), n_groups=st.integers(3, 20))
    def test_every_group_assigned_once(self, seed, n_groups):
        samples = _samples([("tomato", d, 1 + (d - 1) % 3, 2) for d in range(1, n_groups + 1)])
        m = make_splits(samples, (0.7, 0.15, 0.15), seed=seed)
        assert len(m.split_assignments) == n_groups
        assert set(m.split_assignments.values()) <= {"train", "val", "test"}


class TestPreprocess:
    def test_shape_and_range(self, small_tree):
        path = next((small_tree / "tomato" / "day1_1").glob("*.png"))
        arr = preprocess(path, 224)
        assert arr.shape == (224, 224, 3)
        assert arr.dtype == np.float32
        assert np.isfinite(arr).all()
        assert arr.min() >= 0 and arr.max() <= 1

    def test_black_image(self, tmp_path):
        from PIL import Image
        p = tmp_path / "black.png"
        Image.fromarray(np.zeros((32, 32, 3), np.uint8)).save(p)
        arr = preprocess(p, 16)
        assert (arr == 0).all()

    def test_deterministic(self, small_tree):
        path = next((small_tree / "brinjal" / "day2_2").glob("*.png"))
        a = preprocess(path, 64)
        b = preprocess(path, 64)
        assert (a == b).all()
