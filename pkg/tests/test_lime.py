import numpy as np
import pytest

from vegshelf.errors import SamplingError
from vegshelf.lime import (
    Explanation,
    SegmentMap,
    explain,
    render_overlay,
    sample_perturbations,
    segment,
)


def smooth_image(size=64, seed=0):
    rng = np.random.default_rng(seed)
    base = rng.random((8, 8, 3))
    img = np.kron(base, np.ones((size // 8, size // 8, 1)))
    return np.clip(img + rng.normal(0, 0.02, img.shape), 0, 1).astype(np.float32)


def grid_segments(size=64, cells=4):
    labels = np.zeros((size, size), dtype=np.int64)
    step = size // cells
    for i in range(cells):
        for j in range(cells):
            labels[i * step:(i + 1) * step, j * step:(j + 1) * step] = i * cells + j
    return SegmentMap(labels, cells * cells)


def quadrant_blackbox():
    """Scores the mean intensity of the top-left quadrant."""
    def fn(batch):
        q = batch[:, :batch.shape[1] // 2, :batch.shape[2] // 2, :]
        score = q.mean(axis=(1, 2, 3))
        veg = np.stack([score, 1 - score], axis=1)
        spoil = np.stack([score, (1 - score) / 2, (1 - score) / 2], axis=1)
        return veg, spoil, score * 10.0
    return fn


class TestSegment:
    def test_constant_image_single_segment(self):
        img = np.full((64, 64, 3), 0.5, dtype=np.float32)
        seg = segment(img, 50)
        assert seg.n_segments == 1
        assert seg.degenerate
        assert (seg.labels == 0).all()

    def test_deterministic(self):
        img = smooth_image()
        a, b = segment(img, 30), segment(img, 30)
        assert (a.labels == b.labels).all()

    def test_segment_count_near_target(self):
        seg = segment(smooth_image(size=224, seed=3), 50)
        assert 25 <= seg.n_segments <= 75
        assert seg.labels.min() == 0
        assert set(np.unique(seg.labels)) == set(range(seg.n_segments))


class TestSamplePerturbations:
    def test_row0_is_original(self):
        img = smooth_image()
        seg = grid_segments()
        masks, perturbed = sample_perturbations(img, seg, 20, seed=0)
        assert masks[0].all()
        assert (perturbed[0] == img).all()

    def test_all_off_mask_is_mean_fill(self):
        img = smooth_image()
        seg = grid_segments()
        masks, perturbed = sample_perturbations(img, seg, 64, seed=1)
        fill = img.reshape(-1, 3).mean(axis=0).astype(img.dtype)
        off = ~masks
        for i in range(64):
            region = off[i][seg.labels]
            if region.any():
                assert np.allclose(perturbed[i][region], fill)

    def test_seed_determinism(self):
        img = smooth_image()
        seg = grid_segments()
        m1, p1 = sample_perturbations(img, seg, 40, seed=5)
        m2, p2 = sample_perturbations(img, seg, 40, seed=5)
        assert (m1 == m2).all() and (p1 == p2).all()

    def test_too_few_samples(self):
        with pytest.raises(SamplingError):
            sample_perturbations(smooth_image(), grid_segments(), 5, seed=0)


class TestExplain:
    def test_constant_blackbox_zero_weights(self):
        def constant(batch):
            n = len(batch)
            return (np.tile([0.6, 0.4], (n, 1)), np.tile([0.5, 0.3, 0.2], (n, 1)),
                    np.full(n, 2.0))
        expl = explain(constant, smooth_image(), segments=grid_segments(),
                       n_perturbations=100, seed=0)
        for head in ("vegetable", "spoilage", "day"):
            assert np.abs(expl.weights[head]).max() < 1e-6
        assert any("zero variance" in w for w in expl.warnings)

    def test_planted_quadrant_signal(self):
        img = smooth_image(seed=2)
        seg = segment(img, 16)
        expl = explain(quadrant_blackbox(), img, segments=seg,
                       n_perturbations=max(300, 10 * seg.n_segments), seed=0)
        quad_segments = set(np.unique(seg.labels[:32, :32]))
        w = np.abs(expl.weights["day"])
        top5 = np.argsort(-w)[:5]
        mass_in_quadrant = w[[s for s in top5 if s in quad_segments]].sum()
        assert mass_in_quadrant >= 0.7 * w[top5].sum()

    def test_linear_blackbox_recovery(self):
        size, cells = 64, 4
        seg = grid_segments(size, cells)
        rng = np.random.default_rng(3)
        img = (seg.labels[..., None] / seg.n_segments * np.ones(3)).astype(np.float32)
        seg_means = np.array([img[seg.labels == s].mean() for s in range(seg.n_segments)])
        coefs = rng.uniform(1.0, 3.0, seg.n_segments)

        def linear_bb(batch):
            n = len(batch)
            masks = np.empty((n, seg.n_segments))
            for i, im in enumerate(batch):
                for s in range(seg.n_segments):
                    masks[i, s] = float(np.isclose(im[seg.labels == s].mean(),
                                                   seg_means[s], atol=1e-4))
            day = masks @ coefs + 0.5
            veg = np.tile([1.0, 0.0], (n, 1))
            spoil = np.tile([1.0, 0.0, 0.0], (n, 1))
            return veg, spoil, day

        expl = explain(linear_bb, img, segments=seg,
                       n_perturbations=10 * seg.n_segments, seed=1,
                       ridge_strength=1.0)
        rel_err = np.abs(expl.weights["day"] - coefs) / np.abs(coefs)
        assert rel_err.max() < 0.05
        assert expl.surrogate_fit_r2["day"] > 0.99

    def test_seed_determinism(self):
        img = smooth_image(seed=4)
        seg = segment(img, 16)
        bb = quadrant_blackbox()
        e1 = explain(bb, img, segments=seg, n_perturbations=200, seed=9)
        e2 = explain(bb, img, segments=seg, n_perturbations=200, seed=9)
        for head in ("vegetable", "spoilage", "day"):
            assert (e1.weights[head] == e2.weights[head]).all()
        assert e1.targets == e2.targets

    def test_batch_partition_independence(self):
        img = smooth_image(seed=5)
        seg = grid_segments()
        bb = quadrant_blackbox()
        e1 = explain(bb, img, segments=seg, n_perturbations=100, seed=2, batch_size=7)
        e2 = explain(bb, img, segments=seg, n_perturbations=100, seed=2, batch_size=64)
        for head in ("vegetable", "spoilage", "day"):
            assert np.allclose(e1.weights[head], e2.weights[head], atol=1e-10)

    def test_model_predict_fn_adapter(self, tiny_spec):
        from vegshelf.lime import model_predict_fn
        from vegshelf.models import build_model
        model = build_model(tiny_spec, seed=0)
        fn = model_predict_fn(model)
        veg, spoil, day = fn(np.random.default_rng(0).random((3, 64, 64, 3)))
        assert veg.shape == (3, 8) and spoil.shape == (3, 3) and day.shape == (3,)


class TestRenderOverlay:
    def _explanation(self, seg):
        img = smooth_image(seed=6)
        return img, explain(quadrant_blackbox(), img, segments=seg,
                            n_perturbations=100, seed=0)

    def test_top_k_zero_unmodified(self):
        seg = grid_segments()
        img, expl = self._explanation(seg)
        out = render_overlay(img, seg, expl, "vegetable", top_k=0)
        assert np.allclose(out, img)

    def test_every_segment_outlined(self):
        seg = grid_segments()
        img, expl = self._explanation(seg)
        out = render_overlay(img, seg, expl, "day", top_k=seg.n_segments)
        assert out.shape == img.shape
        assert not np.allclose(out, img)

    def test_bad_head(self):
        seg = grid_segments()
        img, expl = self._explanation(seg)
        with pytest.raises(KeyError):
            render_overlay(img, seg, expl, "texture", 3)

    def test_serialization_roundtrip(self, tmp_path):
        seg = grid_segments()
        _, expl = self._explanation(seg)
        expl.save(tmp_path / "e.json")
        import json
        data = json.loads((tmp_path / "e.json").read_text())
        assert set(data["weights"]) == {"vegetable", "spoilage", "day"}
        assert data["n_segments"] == seg.n_segments
