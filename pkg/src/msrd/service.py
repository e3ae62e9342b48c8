"""HTTP service wrapping the pipeline; one endpoint per processing stage.

All work happens server-side against server-local paths, so a whole batch
runs in a single request and stage outputs stay bit-identical to the
in-process pipeline.  Run with ``uvicorn msrd.service:app`` or
``python -m msrd.service``.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .boxes import SegmentationConfig
from .discovery import DiscoveryConfig
from .evaluation import report_json, summary_dict
from .pipeline import RunConfig, run_boxes, run_eval, run_fuse, run_heatmap, run_locmap
from .synth import SynthSpec, generate


class SynthRequest(BaseModel):
    out_dir: str
    images: int = 8
    seed: int = 0
    image_width: int = 224
    image_height: int = 224
    channels: int = 8
    min_objects: int = 1
    max_objects: int = 3
    min_scale: float = 0.05
    max_scale: float = 0.5
    noise: float = 0.02

    def spec(self) -> SynthSpec:
        return SynthSpec(
            seed=self.seed,
            n_images=self.images,
            image_width=self.image_width,
            image_height=self.image_height,
            channels=self.channels,
            min_objects=self.min_objects,
            max_objects=self.max_objects,
            min_scale=self.min_scale,
            max_scale=self.max_scale,
            noise=self.noise,
        )


class SynthResponse(BaseModel):
    manifest: str
    n_images: int


class PipelineRequest(BaseModel):
    manifest: str
    layers: list[str] = Field(default=["conv4", "conv5"])
    window: int = 3
    stride: int = 1
    min_grad: float = 0.0
    tau: float = 0.2
    mode: str = "largest"
    fuse_raw: bool = False
    delta: float = 0.25
    workers: int = 1
    maps_dir: str | None = None
    out: str | None = None

    def run_config(self) -> RunConfig:
        return RunConfig(
            layers=tuple(self.layers),
            discovery=DiscoveryConfig(window=self.window, stride=self.stride, min_value=self.min_grad),
            segmentation=SegmentationConfig(tau=self.tau, mode=self.mode),
            fuse_raw=self.fuse_raw,
            delta=self.delta,
            workers=self.workers,
        )


class LocmapRequest(PipelineRequest):
    out_dir: str


class LocmapResponse(BaseModel):
    maps: dict[str, dict[str, str]]


class FuseRequest(BaseModel):
    maps_dir: str
    out_dir: str
    layers: list[str] = Field(default=["conv4", "conv5"])
    fuse_raw: bool = False

    def run_config(self) -> RunConfig:
        return RunConfig(layers=tuple(self.layers), fuse_raw=self.fuse_raw)


class FuseResponse(BaseModel):
    maps: dict[str, str]


class BoxModel(BaseModel):
    x_min: int
    y_min: int
    x_max: int
    y_max: int


class BoxesResponse(BaseModel):
    boxes: dict[str, list[BoxModel]]


class EvalResponse(BaseModel):
    report: dict


class HeatmapRequest(PipelineRequest):
    out_dir: str


class HeatmapResponse(BaseModel):
    files: dict[str, str]


_CLIENT_ERRORS = (ValueError, KeyError, FileNotFoundError, NotADirectoryError)


def create_app() -> FastAPI:
    app = FastAPI(title="msrd", version=__version__)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/synth", response_model=SynthResponse)
    def synth(req: SynthRequest) -> SynthResponse:
        try:
            manifest = generate(req.spec(), req.out_dir)
        except _CLIENT_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return SynthResponse(manifest=str(manifest), n_images=req.images)

    @app.post("/locmap", response_model=LocmapResponse)
    def locmap(req: LocmapRequest) -> LocmapResponse:
        try:
            written = run_locmap(req.manifest, req.run_config(), req.out_dir)
        except _CLIENT_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return LocmapResponse(maps=written)

    @app.post("/fuse", response_model=FuseResponse)
    def fuse_stage(req: FuseRequest) -> FuseResponse:
        try:
            written = run_fuse(req.run_config(), req.maps_dir, req.out_dir)
        except _CLIENT_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return FuseResponse(maps=written)

    @app.post("/boxes", response_model=BoxesResponse)
    def boxes_stage(req: PipelineRequest) -> BoxesResponse:
        try:
            found = run_boxes(req.manifest, req.run_config(), req.maps_dir)
            if req.out:
                Path(req.out).write_text(json.dumps(found, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        except _CLIENT_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return BoxesResponse(boxes=found)

    @app.post("/eval", response_model=EvalResponse)
    def eval_stage(req: PipelineRequest) -> EvalResponse:
        try:
            summary = run_eval(req.manifest, req.run_config(), req.maps_dir)
            if req.out:
                Path(req.out).write_text(report_json(summary), encoding="utf-8")
        except _CLIENT_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return EvalResponse(report=summary_dict(summary))

    @app.post("/heatmap", response_model=HeatmapResponse)
    def heatmap_stage(req: HeatmapRequest) -> HeatmapResponse:
        try:
            written = run_heatmap(req.manifest, req.run_config(), req.out_dir, req.maps_dir)
        except _CLIENT_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return HeatmapResponse(files=written)

    return app


app = create_app()


def main() -> None:
    import uvicorn

    uvicorn.run("msrd.service:app", host="127.0.0.1", port=8471)


if __name__ == "__main__":
    main()
