"""Batch dataset duplication: walk a tree, diffuse every camera image,
mirror the layout under the output root, one subtree per snapshot step.

Only camera images are processed; label masks live outside the glob pattern
and are never touched. A JSON manifest records, per input image, the content
digest, output paths, timing and status; reruns skip entries whose digest
and parameter set are unchanged, so an interrupted job resumes where it
stopped and a completed job is a no-op.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from .diffusion import eed_run
from .images import decode_image, save_image
from .params import DiffusionParams, get_preset

__all__ = [
    "DatasetJob",
    "Manifest",
    "JobSummary",
    "discover",
    "run_job",
    "load_job",
    "input_digest",
    "make_sampling_list",
]

MANIFEST_NAME = "manifest.json"
MANIFEST_FORMAT = 1

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}


@dataclass(frozen=True)
class DatasetJob:
    input_root: Path
    output_root: Path
    params: DiffusionParams
    preset_name: str = "custom"
    pattern: str = "**/*.png"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "input_root", Path(self.input_root))
        object.__setattr__(self, "output_root", Path(self.output_root))
        if not self.input_root.is_dir():
            raise ValueError(f"input root is not a directory: {self.input_root}")
        if self.input_root.resolve() == self.output_root.resolve():
            raise ValueError("output root must differ from input root")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass
class JobSummary:
    processed: int = 0
    skipped: int = 0
    failed: int = 0

    def __str__(self) -> str:
        return f"{self.processed} processed, {self.skipped} skipped, {self.failed} failed"


class Manifest:
    """The job's single mutable record; written atomically after every image."""

    def __init__(self, path: Path, header: dict):
        self.path = path
        self.header = header
        self.entries: dict[str, dict] = {}

    @classmethod
    def load_or_create(cls, path: Path, header: dict) -> "Manifest":
        manifest = cls(path, header)
        if path.exists():
            doc = json.loads(path.read_text())
            if doc.get("format") == MANIFEST_FORMAT:
                manifest.entries = doc.get("entries", {})
        return manifest

    def write(self) -> None:
        doc = {"format": MANIFEST_FORMAT, **self.header, "entries": self.entries}
        tmp = self.path.with_suffix(".json.tmp")
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp.write_text(json.dumps(doc, indent=1, sort_keys=True))
        os.replace(tmp, self.path)

    def is_done(self, relpath: str, digest: str, output_root: Path) -> bool:
        entry = self.entries.get(relpath)
        if not entry or entry.get("status") != "done" or entry.get("digest") != digest:
            return False
        return all((output_root / out).exists() for out in entry.get("outputs", {}).values())


def discover(input_root: str | Path, pattern: str = "**/*.png") -> list[str]:
    """Relative paths of all images matching the glob, lexicographic order."""
    root = Path(input_root)
    if not root.is_dir():
        raise OSError(f"cannot read dataset root: {root}")
    found = [
        p.relative_to(root).as_posix()
        for p in root.glob(pattern)
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    ]
    return sorted(found)


def input_digest(data: bytes, params: DiffusionParams) -> str:
    """Content hash binding the input bytes to the parameter set."""
    h = hashlib.sha256()
    h.update(data)
    h.update(params.canonical_json().encode())
    return h.hexdigest()


def _output_relpath(relpath: str, step: int) -> str:
    return (Path(str(step)) / Path(relpath).with_suffix(".png")).as_posix()


def _diffuse_one(args: tuple) -> tuple[str, dict]:
    """Process one image; runs in a worker process. Returns (relpath, entry)."""
    relpath, input_root, output_root, params_dict = args
    params = DiffusionParams.from_dict(params_dict)
    src = Path(input_root) / relpath
    start = time.monotonic()
    try:
        data = src.read_bytes()
        digest = input_digest(data, params)
        img = decode_image(src)
        outputs = {}
        for step, result in eed_run(img, params):
            out_rel = _output_relpath(relpath, step)
            save_image(result, Path(output_root) / out_rel)
            outputs[str(step)] = out_rel
        entry = {
            "digest": digest,
            "status": "done",
            "outputs": outputs,
            "height": img.shape[0],
            "width": img.shape[1],
            "wall_time": round(time.monotonic() - start, 4),
            "error": None,
        }
    except Exception as exc:  # per-image failure: record, keep the job alive
        entry = {
            "digest": None,
            "status": "failed",
            "outputs": {},
            "wall_time": round(time.monotonic() - start, 4),
            "error": f"{type(exc).__name__}: {exc}",
        }
    return relpath, entry


def run_job(
    job: DatasetJob,
    progress: Callable[[str, str], None] | None = None,
) -> tuple[Manifest, JobSummary]:
    """Run (or resume) a dataset duplication job.

    ``progress(relpath, status)`` is invoked once per image with status in
    {"skipped", "done", "failed"}. Per-image failures are recorded in the
    manifest and do not abort the job.
    """
    header = {
        "preset_name": job.preset_name,
        "preset": job.params.to_dict(),
        "pattern": job.pattern,
        "input_root": str(job.input_root),
    }
    manifest = Manifest.load_or_create(job.output_root / MANIFEST_NAME, header)
    summary = JobSummary()

    relpaths = discover(job.input_root, job.pattern)
    pending: list[str] = []
    for relpath in relpaths:
        digest = input_digest((job.input_root / relpath).read_bytes(), job.params)
        if manifest.is_done(relpath, digest, job.output_root):
            summary.skipped += 1
            if progress:
                progress(relpath, "skipped")
        else:
            pending.append(relpath)

    def record(relpath: str, entry: dict) -> None:
        manifest.entries[relpath] = entry
        manifest.write()
        if entry["status"] == "done":
            summary.processed += 1
        else:
            summary.failed += 1
        if progress:
            progress(relpath, entry["status"])

    args = [
        (relpath, str(job.input_root), str(job.output_root), job.params.to_dict())
        for relpath in pending
    ]
    if job.workers == 1:
        for a in args:
            record(*_diffuse_one(a))
    else:
        with ProcessPoolExecutor(max_workers=job.workers) as pool:
            futures = [pool.submit(_diffuse_one, a) for a in args]
            for fut in as_completed(futures):
                record(*fut.result())

    manifest.write()
    return manifest, summary


def load_job(path: str | Path, workers_override: int | None = None) -> DatasetJob:
    """Parse a TOML job file (``[job]`` table plus a preset reference)."""
    path = Path(path)
    doc = tomllib.loads(path.read_text())
    if "job" not in doc:
        raise ValueError(f"{path}: missing [job] table")
    jt = doc["job"]
    for key in ("input_root", "output_root"):
        if key not in jt:
            raise ValueError(f"{path}: [job] is missing {key!r}")

    sources = [k for k in ("preset", "preset_file") if k in jt] + (
        ["[preset]"] if "preset" in doc else []
    )
    if len(sources) != 1:
        raise ValueError(
            f"{path}: exactly one of job.preset, job.preset_file or a [preset] table is required"
        )
    if "preset" in jt:
        preset_name = jt["preset"]
        params = get_preset(preset_name)
    elif "preset_file" in jt:
        preset_path = Path(jt["preset_file"])
        if not preset_path.is_absolute():
            preset_path = path.parent / preset_path
        params = DiffusionParams.load(preset_path)
        preset_name = preset_path.stem
    else:
        params = DiffusionParams.from_dict(doc["preset"])
        preset_name = jt.get("preset_name", "custom")

    overrides = {}
    if "steps" in jt:
        overrides["steps"] = jt["steps"]
    if "snapshots" in jt:
        overrides["snapshots"] = tuple(jt["snapshots"])
    if overrides:
        params = DiffusionParams.from_dict({**params.to_dict(), **overrides})

    def resolve(p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else path.parent / q

    return DatasetJob(
        input_root=resolve(jt["input_root"]),
        output_root=resolve(jt["output_root"]),
        params=params,
        preset_name=preset_name,
        pattern=jt.get("pattern", "**/*.png"),
        workers=workers_override or jt.get("workers", 1),
    )


def make_sampling_list(
    paths: Sequence[str], sources: dict[str, float], seed: int = 0
) -> list[tuple[str, str]]:
    """Assign every path a source tree at random with the given weights.

    Training-time mixtures (e.g. mostly-original with small shares of each
    diffused variant) are a sampling policy, not an image transform; this
    emits the (path, source) pairs deterministically for a given seed.
    """
    if not sources:
        raise ValueError("at least one source is required")
    names = sorted(sources)
    weights = np.array([sources[n] for n in names], dtype=np.float64)
    if np.any(weights < 0) or weights.sum() <= 0:
        raise ValueError("source weights must be non-negative with positive sum")
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(names), size=len(paths), p=weights / weights.sum())
    return [(path, names[int(i)]) for path, i in zip(paths, picks)]
