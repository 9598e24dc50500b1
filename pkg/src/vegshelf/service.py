"""HTTP inference service: image upload in, prediction triple plus derived
remaining shelf life out, with optional per-head explanations."""

from __future__ import annotations

import io
import time
from pathlib import Path

import numpy as np
from fastapi import FastAPI, File, Form, HTTPException, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse
from PIL import Image, UnidentifiedImageError

from .dataset import SplitManifest
from .lime import explain, model_predict_fn, render_overlay, segment
from .models.zoo import MultiHeadModel, load_model

RESPONSE_SCHEMA_VERSION = 1


def remaining_shelf_life(day_estimate: float, vegetable: str,
                         manifest: SplitManifest) -> float:
    """max observed training day for the vegetable minus the estimate,
    clamped at zero."""
    max_day = manifest.max_day_per_vegetable[vegetable]
    return max(0.0, float(max_day) - float(day_estimate))


class ServiceState:
    def __init__(self):
        self.model: MultiHeadModel | None = None
        self.model_id: str = ""
        self.manifest: SplitManifest | None = None
        self.started = time.monotonic()
        self.probe: np.ndarray | None = None
        self.overlay_dir: Path | None = None

    def load(self, model_dir: str | Path, manifest_path: str | Path,
             model_id: str | None = None, overlay_dir: str | Path | None = None):
        self.model = load_model(model_dir)
        self.model_id = model_id or Path(model_dir).name
        self.manifest = SplitManifest.load(manifest_path)
        size = self.model.spec.input_size
        self.probe = np.full((size, size, 3), 0.5, dtype=np.float32)
        self.overlay_dir = Path(overlay_dir) if overlay_dir else None

    @property
    def loaded(self) -> bool:
        return self.model is not None


def _decode_upload(data: bytes, size: int) -> np.ndarray:
    try:
        with Image.open(io.BytesIO(data)) as im:
            im = im.convert("RGB").resize((size, size), Image.BILINEAR)
            return np.asarray(im, dtype=np.float32) / 255.0
    except (OSError, UnidentifiedImageError) as exc:
        raise HTTPException(status_code=400, detail=f"undecodable image: {exc}")


def create_app(state: ServiceState | None = None,
               cors_origins: list[str] | None = None) -> FastAPI:
    state = state or ServiceState()
    app = FastAPI(title="vegshelf inference service")
    app.state.service = state
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def require_model() -> ServiceState:
        if not state.loaded:
            raise HTTPException(status_code=503, detail="no model loaded")
        return state

    @app.get("/health")
    def health():
        if not state.loaded:
            raise HTTPException(status_code=503, detail="no model loaded")
        try:
            state.model.predict(state.probe[None])
        except Exception as exc:  # self-test forward must succeed
            raise HTTPException(status_code=503, detail=f"self-test failed: {exc}")
        return {
            "status": "ok",
            "model_id": state.model_id,
            "uptime_s": time.monotonic() - state.started,
        }

    @app.post("/predict")
    async def predict(image: UploadFile = File(...)):
        st = require_model()
        t0 = time.perf_counter()
        arr = _decode_upload(await image.read(), st.model.spec.input_size)
        triple = st.model.predict(arr[None])[0]

        veg_names = sorted(st.manifest.vegetable_index,
                           key=st.manifest.vegetable_index.get)
        spoil_names = ["fresh", "slightly_spoiled", "completely_spoiled"]
        veg_label = veg_names[int(np.argmax(triple.vegetable_probs))]
        spoil_label = spoil_names[int(np.argmax(triple.spoilage_probs))]
        return {
            "schema_version": RESPONSE_SCHEMA_VERSION,
            "vegetable": {
                "label": veg_label,
                "probs": {n: float(p) for n, p in zip(veg_names, triple.vegetable_probs)},
            },
            "spoilage": {
                "label": spoil_label,
                "probs": {n: float(p) for n, p in zip(spoil_names, triple.spoilage_probs)},
            },
            "day_estimate": triple.day_estimate,
            "remaining_shelf_life_days": remaining_shelf_life(
                triple.day_estimate, veg_label, st.manifest),
            "model_id": st.model_id,
            "latency_ms": (time.perf_counter() - t0) * 1000.0,
        }

    @app.post("/explain")
    async def explain_endpoint(
        image: UploadFile = File(...),
        segments: int = Form(50),
        samples: int = Form(500),
        seed: int = Form(0),
    ):
        st = require_model()
        arr = _decode_upload(await image.read(), st.model.spec.input_size)
        seg = segment(arr, segments)
        expl = explain(model_predict_fn(st.model), arr, n_segments=segments,
                       n_perturbations=samples, seed=seed, segments=seg)
        overlays = {}
        if st.overlay_dir is not None:
            st.overlay_dir.mkdir(parents=True, exist_ok=True)
            for head in ("vegetable", "spoilage", "day"):
                overlay = render_overlay(arr, seg, expl, head, top_k=5)
                name = f"overlay_{seed}_{head}.png"
                Image.fromarray((overlay * 255).astype(np.uint8)).save(st.overlay_dir / name)
                overlays[head] = f"/overlays/{name}"
        return {
            "schema_version": RESPONSE_SCHEMA_VERSION,
            "params": {"segments": segments, "samples": samples, "seed": seed},
            "weights": {h: [float(x) for x in w] for h, w in expl.weights.items()},
            "targets": expl.targets,
            "surrogate_fit_r2": expl.surrogate_fit_r2,
            "n_segments": expl.n_segments,
            "warnings": expl.warnings,
            "overlays": overlays,
            "model_id": st.model_id,
        }

    @app.get("/overlays/{name}")
    def get_overlay(name: str):
        if state.overlay_dir is None or "/" in name or ".." in name:
            raise HTTPException(status_code=404)
        path = state.overlay_dir / name
        if not path.is_file():
            raise HTTPException(status_code=404)
        return FileResponse(path)

    return app


def serve(model_dir: str, manifest_path: str, host: str = "127.0.0.1",
          port: int = 8000, overlay_dir: str | None = None,
          cors_origins: list[str] | None = None):  # pragma: no cover - CLI path
    import uvicorn

    state = ServiceState()
    state.load(model_dir, manifest_path, overlay_dir=overlay_dir or "overlays")
    uvicorn.run(create_app(state, cors_origins), host=host, port=port)
