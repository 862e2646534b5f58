"""Command-line entry point: diffuse, batch, analyze, presets, serve.

Exit codes: 0 success, 1 operational failure, 2 usage error. Progress and
diagnostics go to stderr; machine-readable results go to files.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .diffusion import dirichlet_energy, eed_run
from .images import decode_image, load_mask, save_image, save_mask
from .metrics import (
    COMMON14,
    ConfusionMatrix,
    SegmentEval,
    acc_rel,
    boundary_visibilities,
    connected_components,
    diff_to_image,
    load_class_set,
    prediction_diff,
    s_iou,
    segment_scatter,
)
from .params import DiffusionParams, builtin_presets, get_preset
from .pipeline import discover, load_job, run_job

PARAM_FLAGS = (
    "kappa",
    "presmooth_sigma",
    "presmooth_kernel",
    "orient_sigma",
    "orient_kernel",
    "tau",
    "steps",
)


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _parse_snapshots(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip())


def _resolve_params(args) -> DiffusionParams:
    """Preset name/file plus flag overrides; flags mirror the preset keys."""
    if args.preset and args.preset_file:
        raise ValueError("give either --preset or --preset-file, not both")
    if args.preset:
        base = get_preset(args.preset).to_dict()
    elif args.preset_file:
        base = DiffusionParams.load(args.preset_file).to_dict()
    else:
        base = {}
    for key in PARAM_FLAGS:
        value = getattr(args, key)
        if value is not None:
            base[key] = value
    if args.snapshots is not None:
        base["snapshots"] = list(_parse_snapshots(args.snapshots))
    missing = {"kappa", "presmooth_sigma", "presmooth_kernel"} - set(base)
    if missing:
        raise ValueError(f"missing parameters (no preset given?): {sorted(missing)}")
    base.setdefault("snapshots", [])
    return DiffusionParams.from_dict(base)


def _add_param_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--preset", help="built-in preset name (P_strong, P_mild)")
    sub.add_argument("--preset-file", help="TOML preset file")
    sub.add_argument("--kappa", type=float)
    sub.add_argument("--presmooth-sigma", type=float)
    sub.add_argument("--presmooth-kernel", type=int)
    sub.add_argument("--orient-sigma", type=float)
    sub.add_argument("--orient-kernel", type=int)
    sub.add_argument("--tau", type=float)
    sub.add_argument("--steps", type=int)
    sub.add_argument("--snapshots", help="comma-separated step indices")


def cmd_diffuse(args) -> int:
    params = _resolve_params(args)
    img = decode_image(args.image)
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.image).stem
    _log(f"input: dirichlet energy {dirichlet_energy(img):.6f}")
    for step, result in eed_run(img, params):
        out = out_dir / f"{stem}_{step}.png"
        save_image(result, out)
        _log(f"step {step}: dirichlet energy {dirichlet_energy(result):.6f} -> {out}")
    return 0


def cmd_batch(args) -> int:
    workers = args.workers or int(os.environ.get("EEDKIT_WORKERS", 0)) or None
    job = load_job(args.jobfile, workers_override=workers)
    _log(f"job: {job.input_root} -> {job.output_root} [{job.preset_name}] workers={job.workers}")
    _, summary = run_job(job, progress=lambda rel, status: _log(f"{status}: {rel}"))
    _log(f"summary: {summary}")
    return 1 if summary.failed else 0


def _aligned_relpaths(trees: dict[str, Path], pattern: str) -> list[str]:
    sets = {name: set(discover(root, pattern)) for name, root in trees.items()}
    union = set.union(*sets.values())
    mismatches = []
    for rel in sorted(union):
        missing = [name for name, got in sets.items() if rel not in got]
        if missing:
            mismatches.append(f"{rel} (missing in: {', '.join(missing)})")
    if mismatches:
        raise ValueError("trees are misaligned:\n  " + "\n  ".join(mismatches[:20]))
    return sorted(union)


def cmd_analyze(args) -> int:
    classes = COMMON14 if args.classes == "common14" else load_class_set(args.classes)
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    trees = {"gt": Path(args.gt), "pred": Path(args.pred)}
    if args.pred_b:
        trees["pred_b"] = Path(args.pred_b)
    if args.images:
        trees["images"] = Path(args.images)
    relpaths = _aligned_relpaths(trees, args.pattern)
    if not relpaths:
        raise ValueError(f"no masks matching {args.pattern!r} found")

    sources = ["pred"] + (["pred_b"] if args.pred_b else [])
    cms = {s: ConfusionMatrix(list(classes), args.ignore_id) for s in sources}
    correct = {s: 0 for s in sources}
    valid_total = 0
    rows: dict[str, list[SegmentEval]] = {s: [] for s in sources}
    diff_count = 0

    for rel in relpaths:
        gt = load_mask(trees["gt"] / rel)
        preds = {s: load_mask(trees[s] / rel) for s in sources}
        for s in sources:
            cms[s].update(preds[s], gt)
            correct[s] += int(np.count_nonzero((preds[s] == gt) & (gt != args.ignore_id)))
        valid_total += int(np.count_nonzero(gt != args.ignore_id))

        segments = connected_components(gt, args.ignore_id)
        if args.images:
            img = decode_image(trees["images"] / rel)
            vis = boundary_visibilities(img, segments)
        else:
            vis = [float("nan")] * len(segments)
        for seg, v in zip(segments, vis):
            for s in sources:
                rows[s].append(
                    SegmentEval(
                        segment_id=f"{rel}#{seg.segment_id}",
                        class_id=seg.class_id,
                        area=seg.area,
                        visibility=v,
                        s_iou=s_iou(preds[s], seg),
                    )
                )
        if args.pred_b:
            diff = prediction_diff(preds["pred"], preds["pred_b"])
            diff_count += int(diff.sum())
            save_mask(diff_to_image(diff), out_dir / "diffmaps" / rel)
        _log(f"analyzed: {rel}")

    report = {
        "classes": {str(k): v for k, v in sorted(classes.items())},
        "gradient": "central differences, norm stacked over all channels",
        "sources": {s: cms[s].report().to_dict(classes) for s in sources},
        "accuracy": {s: correct[s] / valid_total for s in sources},
    }
    if args.pred_b:
        report["accuracy"]["acc_rel"] = acc_rel(
            report["accuracy"]["pred"], report["accuracy"]["pred_b"]
        )
        report["prediction_diff_pixels"] = diff_count
    (out_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True))

    with open(out_dir / "segments.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["segment_id", "class_id", "class_name", "area", "visibility", "s_iou_pred"]
        if args.pred_b:
            header.append("s_iou_pred_b")
        writer.writerow(header)
        by_id_b = {r.segment_id: r for r in rows.get("pred_b", [])}
        for r in rows["pred"]:
            line = [r.segment_id, r.class_id, classes.get(r.class_id, "?"), r.area,
                    f"{r.visibility:.8f}", f"{r.s_iou:.8f}"]
            if args.pred_b:
                line.append(f"{by_id_b[r.segment_id].s_iou:.8f}")
            writer.writerow(line)

    if args.pred_b:
        scatter = segment_scatter(rows["pred"], rows["pred_b"])
        with open(out_dir / "scatter.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["segment_id", "class_id", "class_name", "visibility", "s_iou_diff"])
            for r in scatter:
                writer.writerow(
                    [r.segment_id, r.class_id, classes.get(r.class_id, "?"),
                     f"{r.visibility:.8f}", f"{r.s_iou_diff:.8f}"]
                )
    _log(f"report written to {out_dir}")
    return 0


def cmd_presets(args) -> int:
    presets = builtin_presets()
    if args.action == "list":
        for name in sorted(presets):
            p = presets[name]
            print(f"{name}: kappa={p.kappa:.6g} sigma={p.presmooth_sigma:.6g} "
                  f"kernel={p.presmooth_kernel} tau={p.tau} steps={p.steps}")
        return 0
    print(get_preset(args.name).to_toml(), end="")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig(
        max_concurrent_jobs=args.max_jobs,
        queue_capacity=args.queue_cap,
        size_cap=args.size_cap,
        default_stride=args.stride,
    )
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eedkit", description="Edge enhancing diffusion toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("diffuse", help="diffuse one image, writing one file per snapshot")
    p.add_argument("image")
    p.add_argument("-o", "--output-dir", required=True)
    _add_param_flags(p)
    p.set_defaults(func=cmd_diffuse)

    p = sub.add_parser("batch", help="run a dataset duplication job from a TOML file")
    p.add_argument("jobfile")
    p.add_argument("--workers", type=int, help="override worker count (or EEDKIT_WORKERS)")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("analyze", help="metrics over aligned prediction/ground-truth trees")
    p.add_argument("--pred", required=True, help="prediction mask tree")
    p.add_argument("--pred-b", help="second prediction tree (enables diff maps and scatter)")
    p.add_argument("--gt", required=True, help="ground-truth mask tree")
    p.add_argument("--images", help="image tree for boundary visibility")
    p.add_argument("--classes", default="common14", help="class-set file or 'common14'")
    p.add_argument("--ignore-id", type=int, default=255)
    p.add_argument("--pattern", default="**/*.png")
    p.add_argument("-o", "--output-dir", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("presets", help="list or show built-in presets")
    psub = p.add_subparsers(dest="action", required=True)
    pl = psub.add_parser("list")
    pl.set_defaults(func=cmd_presets, action="list")
    ps = psub.add_parser("show")
    ps.add_argument("name")
    ps.set_defaults(func=cmd_presets, action="show")

    p = sub.add_parser("serve", help="start the interactive preview service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--max-jobs", type=int, default=2, help="jobs diffusing concurrently")
    p.add_argument("--queue-cap", type=int, default=8)
    p.add_argument("--size-cap", type=int, default=512, help="max crop side length")
    p.add_argument("--stride", type=int, default=64, help="default frame stride in steps")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        _log("interrupted")
        return 1
    except (ValueError, KeyError, OSError) as exc:
        message = exc.args[0] if exc.args else exc
        _log(f"error: {message}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
