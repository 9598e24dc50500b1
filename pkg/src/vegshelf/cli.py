"""Single command-line entry point for the full pipeline:
scan -> split -> (corrupt) -> train -> evaluate -> diff -> explain -> serve."""

from __future__ import annotations

import json
import logging
import sys
from importlib import resources
from pathlib import Path

import click
import numpy as np

from . import __version__
from .dataset import (
    DEFAULT_IMAGE_SIZE,
    DEFAULT_RATIOS,
    SplitManifest,
    make_splits,
    preprocess,
    scan_dataset,
)
from .errors import VegshelfError
from .metrics import diff_table, evaluate, load_reports, save_reports
from .models.zoo import FusionModelSpec, build_model, load_model, registry_spec
from .noise import NoiseSpec, corrupt_dataset
from .training import TrainConfig, train

log = logging.getLogger(__name__)


@click.group()
@click.version_option(__version__)
@click.option("-v", "--verbose", is_flag=True)
def main(verbose):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")


def _provenance(extra: dict) -> dict:
    return {"tool": "vegshelf", "version": __version__, **extra}


@main.command()
@click.option("--root", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), default=None, help="write sample list JSON")
def scan(root, out):
    """Scan a dataset tree and report its samples."""
    report = scan_dataset(root)
    click.echo(f"{len(report.samples)} samples, {len(report.skipped)} skipped")
    if out:
        payload = _provenance({
            "samples": [
                {"image_path": str(s.image_path), "vegetable": s.vegetable,
                 "spoilage": s.spoilage, "day": s.day, "instance_group": s.instance_group}
                for s in report.samples
            ],
            "skipped": report.skipped,
        })
        Path(out).write_text(json.dumps(payload, indent=2))


@main.command()
@click.option("--root", type=click.Path(exists=True), required=True)
@click.option("--ratios", nargs=3, type=float, default=DEFAULT_RATIOS, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def split(root, ratios, seed, out):
    """Build a deterministic split manifest for a dataset tree."""
    report = scan_dataset(root)
    manifest = make_splits(report.samples, tuple(ratios), seed)
    manifest.save(out)
    counts = {}
    for g, s in manifest.split_assignments.items():
        counts[s] = counts.get(s, 0) + 1
    click.echo(f"wrote {out}: groups per split {counts}")


@main.command()
@click.option("--in", "in_root", type=click.Path(exists=True), required=True)
@click.option("--out", "out_root", type=click.Path(), required=True)
@click.option("--kind", type=click.Choice(["gaussian", "salt_pepper"]), default="gaussian")
@click.option("--intensity", type=float, default=25.0, show_default=True)
@click.option("--count", type=int, default=2, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
def corrupt(in_root, out_root, kind, intensity, count, seed, workers):
    """Materialize the noisy variant of a dataset tree."""
    spec = NoiseSpec(kind=kind, intensity=intensity, per_folder_count=count, master_seed=seed)
    manifest = corrupt_dataset(in_root, out_root, spec, workers=workers)
    manifest.save(Path(out_root) / "corruption_manifest.json")
    click.echo(f"corrupted {sum(len(v) for v in manifest.folders.values())} files "
               f"in {len(manifest.folders)} folders ({len(manifest.skipped)} skipped)")


@main.command(name="train")
@click.option("--root", type=click.Path(exists=True), required=True)
@click.option("--manifest", "manifest_path", type=click.Path(exists=True), required=True)
@click.option("--model-id", default="mobilenetv2_deit_fusion", show_default=True)
@click.option("--model-spec", type=click.Path(exists=True), default=None,
              help="JSON model spec (overrides --model-id registry defaults)")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--variant", type=click.Choice(["tiny", "full"]), default="tiny")
@click.option("--input-size", type=int, default=DEFAULT_IMAGE_SIZE, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def train_cmd(root, manifest_path, model_id, model_spec, config_path, variant,
              input_size, seed, out):
    """Train one registry model on a split manifest."""
    from .models.zoo import MODEL_REGISTRY

    samples = scan_dataset(root).samples
    manifest = SplitManifest.load(manifest_path)
    n_veg = len(manifest.vegetable_index)
    if model_spec:
        spec = FusionModelSpec.from_dict(json.loads(Path(model_spec).read_text()))
    else:
        spec = registry_spec(model_id, variant=variant, input_size=input_size,
                             head_sizes=(n_veg, 3, 1))
    if config_path:
        config = TrainConfig.from_dict(json.loads(Path(config_path).read_text()))
    else:
        defaults = MODEL_REGISTRY.get(model_id, {}).get("train", {})
        config = TrainConfig(seed=seed, **defaults)
    model = build_model(spec, seed=config.seed)
    train(model, samples, manifest, config, out_dir=out, model_id=model_id)
    click.echo(f"trained {model_id} -> {Path(out) / model_id}")


@main.command(name="evaluate")
@click.option("--model-dir", type=click.Path(exists=True), required=True)
@click.option("--root", type=click.Path(exists=True), required=True)
@click.option("--manifest", "manifest_path", type=click.Path(exists=True), required=True)
@click.option("--split", "split_name", default="test", show_default=True)
@click.option("--dataset-id", default="original", show_default=True)
@click.option("--out", type=click.Path(), required=True)
def evaluate_cmd(model_dir, root, manifest_path, split_name, dataset_id, out):
    """Evaluate a trained model on one split; writes a metrics report JSON."""
    model = load_model(model_dir)
    samples = scan_dataset(root).samples
    manifest = SplitManifest.load(manifest_path)
    report = evaluate(model, samples, manifest, split_name, dataset_id,
                      model_id=Path(model_dir).name)
    save_reports([report], out)
    click.echo(json.dumps(report.to_dict(), indent=2))


@main.command()
@click.option("--original", type=click.Path(exists=True), required=True)
@click.option("--noisy", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
def diff(original, noisy, out):
    """Signed original-minus-noisy difference table (CSV)."""
    report = diff_table(load_reports(original), load_reports(noisy))
    Path(out).write_text(report.to_csv())
    click.echo(report.to_csv())


@main.command(name="reproduce-table5")
@click.option("--original", type=click.Path(exists=True), default=None,
              help="defaults to the committed published-score fixture")
@click.option("--noisy", type=click.Path(exists=True), default=None)
@click.option("--out", type=click.Path(), required=True)
def reproduce_table5(original, noisy, out):
    """Difference table from the committed published clean/noisy scores."""
    fx = resources.files("vegshelf") / "fixtures"
    orig = load_reports(original) if original else load_reports(fx / "table_original.json")
    noi = load_reports(noisy) if noisy else load_reports(fx / "table_noisy.json")
    report = diff_table(orig, noi)
    Path(out).write_text(report.to_csv())
    click.echo(report.to_csv())


@main.command(name="explain")
@click.option("--model-dir", type=click.Path(exists=True), required=True)
@click.option("--image", "image_path", type=click.Path(exists=True), required=True)
@click.option("--segments", type=int, default=50, show_default=True)
@click.option("--samples", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def explain_cmd(model_dir, image_path, segments, samples, seed, out):
    """Explain one image: per-head weights JSON plus overlay images."""
    from PIL import Image

    from .lime import explain, model_predict_fn, render_overlay, segment

    model = load_model(model_dir)
    arr = preprocess(image_path, model.spec.input_size)
    seg = segment(arr, segments)
    expl = explain(model_predict_fn(model), arr, n_segments=segments,
                   n_perturbations=samples, seed=seed, segments=seg)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    expl.save(out_dir / "explanation.json")
    for head in ("vegetable", "spoilage", "day"):
        overlay = render_overlay(arr, seg, expl, head, top_k=5)
        Image.fromarray((overlay * 255).astype(np.uint8)).save(out_dir / f"overlay_{head}.png")
    click.echo(f"wrote explanation for {image_path} -> {out_dir}")


@main.command()
@click.option("--model-dir", type=click.Path(exists=True), required=True)
@click.option("--manifest", "manifest_path", type=click.Path(exists=True), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--overlay-dir", type=click.Path(), default="overlays", show_default=True)
@click.option("--cors-origin", multiple=True, help="allowed browser origins")
def serve(model_dir, manifest_path, host, port, overlay_dir, cors_origin):
    """Run the HTTP inference service."""
    from .service import serve as run_service

    run_service(model_dir, manifest_path, host=host, port=port,
                overlay_dir=overlay_dir, cors_origins=list(cors_origin) or None)


def entry() -> int:  # pragma: no cover - thin wrapper
    try:
        main(standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return 2
    except click.ClickException as exc:
        exc.show()
        return 1
    except VegshelfError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(entry())
