"""Local HTTP service for interactive parameter tuning.

Jobs run diffusion on an uploaded crop, emitting PNG preview frames every
``stride`` steps (plus the final step). Clients poll job status and fetch
frames; a frame at step k is byte-identical to what the CLI writes for the
same image, parameters and snapshot, since both share the encode path.

State machine: queued -> running -> done | failed, with cancel allowed from
queued (never runs) and running (stops within one diffusion step). Terminal
states are immutable. The job store is in-memory only.
"""

from __future__ import annotations

import json
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Form, HTTPException, Response, UploadFile
from fastapi.middleware.cors import CORSMiddleware

from .diffusion import eed_steps
from .images import decode_image_bytes, encode_png_bytes
from .params import DiffusionParams, builtin_presets

__all__ = ["ServiceConfig", "PreviewJob", "JobStore", "create_app"]

TERMINAL = {"done", "failed", "cancelled"}


@dataclass(frozen=True)
class ServiceConfig:
    max_concurrent_jobs: int = 2
    queue_capacity: int = 8
    size_cap: int = 512  # max side length of an uploaded crop
    default_stride: int = 64


@dataclass
class PreviewJob:
    job_id: str
    image: np.ndarray
    params: DiffusionParams
    stride: int
    state: str = "queued"
    current_step: int = 0
    frames: dict[int, bytes] = field(default_factory=dict)
    error: str | None = None
    cancel_event: threading.Event = field(default_factory=threading.Event)

    def frame_steps(self) -> set[int]:
        steps = self.params.steps
        if steps == 0:
            return {0}
        wanted = set(range(self.stride, steps + 1, self.stride))
        wanted.add(steps)
        return wanted


class JobStore:
    def __init__(self):
        self.lock = threading.Lock()
        self.jobs: dict[str, PreviewJob] = {}

    def get(self, job_id: str) -> PreviewJob:
        with self.lock:
            job = self.jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")
        return job

    def queued_count(self) -> int:
        with self.lock:
            return sum(1 for j in self.jobs.values() if j.state == "queued")


def _run_job(store: JobStore, job: PreviewJob) -> None:
    with store.lock:
        if job.state != "queued":  # cancelled before starting
            return
        job.state = "running"
    wanted = job.frame_steps()
    try:
        for step, u in eed_steps(job.image, job.params):
            if job.cancel_event.is_set():
                with store.lock:
                    if job.state == "running":
                        job.state = "cancelled"
                return
            if step in wanted:
                png = encode_png_bytes(u)
                with store.lock:
                    job.frames[step] = png
                    job.current_step = step
            else:
                job.current_step = step
        with store.lock:
            if job.state == "running":
                job.state = "done"
    except Exception as exc:
        with store.lock:
            job.state = "failed"
            job.error = f"{type(exc).__name__}: {exc}"


def _job_status(job: PreviewJob) -> dict:
    return {
        "job_id": job.job_id,
        "state": job.state,
        "steps": job.params.steps,
        "current_step": job.current_step,
        "frames": sorted(job.frames),
        "params": job.params.to_dict(),
        "error": job.error,
    }


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    store = JobStore()
    pool = ThreadPoolExecutor(max_workers=config.max_concurrent_jobs)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        pool.shutdown(wait=False, cancel_futures=True)

    app = FastAPI(title="eedkit preview service", lifespan=lifespan)
    # the tuner UI is served as static files from a different local origin
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.get("/presets")
    def presets() -> dict:
        return {name: p.to_dict() for name, p in builtin_presets().items()}

    @app.post("/jobs", status_code=201)
    async def create_job(
        image: UploadFile,
        params: str = Form(...),
        stride: int = Form(default=config.default_stride),
    ) -> dict:
        if store.queued_count() >= config.queue_capacity:
            raise HTTPException(status_code=429, detail="job queue is full, retry later")
        try:
            parsed = DiffusionParams.from_dict(json.loads(params))
        except (json.JSONDecodeError, TypeError) as exc:
            raise HTTPException(status_code=400, detail=f"params is not a JSON object: {exc}")
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        if stride < 1:
            raise HTTPException(status_code=400, detail=f"stride must be >= 1, got {stride}")
        data = await image.read()
        try:
            decoded = decode_image_bytes(data)
        except Exception as exc:
            raise HTTPException(status_code=400, detail=f"image: cannot decode upload: {exc}")
        h, w = decoded.shape[:2]
        if max(h, w) > config.size_cap:
            raise HTTPException(
                status_code=400,
                detail=f"image: crop is {w}x{h}, the cap is {config.size_cap}x{config.size_cap}",
            )
        job = PreviewJob(
            job_id=uuid.uuid4().hex[:12], image=decoded, params=parsed, stride=stride
        )
        with store.lock:
            store.jobs[job.job_id] = job
        pool.submit(_run_job, store, job)
        # state at creation time; the worker may pick it up immediately
        return {"job_id": job.job_id, "state": "queued"}

    @app.get("/jobs/{job_id}")
    def get_status(job_id: str) -> dict:
        job = store.get(job_id)
        with store.lock:
            return _job_status(job)

    @app.get("/jobs/{job_id}/frames/{step}")
    def get_frame(job_id: str, step: int) -> Response:
        job = store.get(job_id)
        with store.lock:
            png = job.frames.get(step)
        if png is None:
            raise HTTPException(status_code=404, detail=f"job {job_id!r} has no frame at step {step}")
        return Response(content=png, media_type="image/png")

    @app.post("/jobs/{job_id}/cancel")
    def cancel_job(job_id: str) -> dict:
        job = store.get(job_id)
        with store.lock:
            if job.state not in TERMINAL:
                job.cancel_event.set()
                if job.state == "queued":
                    job.state = "cancelled"
        with store.lock:
            return _job_status(job)

    return app
