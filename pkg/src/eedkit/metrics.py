"""Network-free segmentation analysis: segments, boundary visibility, IoU.

Masks are 2-D integer arrays of class ids with a reserved ignore id (255 by
default). Segments are 8-connected components of equal class id; boundary
pixels are segment pixels with at least one 4-neighbor outside the segment
or lying on the image border.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from .tensors import spatial_gradient

__all__ = [
    "IGNORE_ID",
    "COMMON14",
    "SegmentRecord",
    "SegmentEval",
    "ScatterRow",
    "MetricsReport",
    "ConfusionMatrix",
    "connected_components",
    "boundary_visibility",
    "boundary_visibilities",
    "s_iou",
    "class_iou",
    "pixel_accuracy",
    "prediction_diff",
    "diff_to_image",
    "acc_rel",
    "segment_scatter",
    "load_class_set",
    "write_class_set",
]

IGNORE_ID = 255

# The 14 street-scene classes shared by the supported datasets.
COMMON14 = {
    0: "road",
    1: "sidewalk",
    2: "building",
    3: "wall",
    4: "pole",
    5: "traffic light",
    6: "traffic sign",
    7: "vegetation",
    8: "terrain",
    9: "sky",
    10: "person",
    11: "car",
    12: "truck",
    13: "bus",
}

_EIGHT = np.ones((3, 3), dtype=np.int64)


@dataclass(frozen=True)
class SegmentRecord:
    """One ground-truth connected component with its boundary pixel set."""

    segment_id: int
    class_id: int
    pixels: np.ndarray  # (N, 2) row/col coordinates
    boundary: np.ndarray  # (M, 2) row/col coordinates, subset of pixels

    @property
    def area(self) -> int:
        return len(self.pixels)

    def pixel_mask(self, shape: tuple[int, int]) -> np.ndarray:
        m = np.zeros(shape, dtype=bool)
        m[self.pixels[:, 0], self.pixels[:, 1]] = True
        return m


@dataclass(frozen=True)
class SegmentEval:
    """Per-segment evaluation row for one prediction source."""

    segment_id: str
    class_id: int
    area: int
    visibility: float
    s_iou: float


@dataclass(frozen=True)
class ScatterRow:
    segment_id: str
    class_id: int
    visibility: float
    s_iou_diff: float


@dataclass
class MetricsReport:
    """Per-class IoU, their mean, and the classes missing from the data."""

    class_iou: dict[int, float]
    miou: float
    absent_classes: list[int] = field(default_factory=list)

    def to_dict(self, class_names: dict[int, str] | None = None) -> dict:
        names = class_names or {}
        return {
            "class_iou": {
                names.get(k, str(k)): v for k, v in sorted(self.class_iou.items())
            },
            "miou": self.miou,
            "absent_classes": [names.get(k, str(k)) for k in self.absent_classes],
        }


def _check_mask(mask: np.ndarray) -> np.ndarray:
    m = np.asarray(mask)
    if m.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {m.shape}")
    return m.astype(np.int64, copy=False)


def _segment_labels(mask: np.ndarray, ignore_id: int) -> tuple[np.ndarray, list[int]]:
    """Label every same-class 8-connected component with a unique positive id.

    Returns (label array, class id per label), label 0 = ignore/background.
    """
    mask = _check_mask(mask)
    labels = np.zeros(mask.shape, dtype=np.int64)
    label_classes: list[int] = []
    next_id = 1
    for cls in np.unique(mask):
        if cls == ignore_id:
            continue
        lab, n = ndimage.label(mask == cls, structure=_EIGHT)
        if n == 0:
            continue
        labels[lab > 0] = lab[lab > 0] + (next_id - 1)
        label_classes.extend([int(cls)] * n)
        next_id += n
    return labels, label_classes


def _boundary_mask(labels: np.ndarray) -> np.ndarray:
    """Pixels whose 4-neighborhood leaves their segment (or the image)."""
    b = np.zeros(labels.shape, dtype=bool)
    b[0, :] = b[-1, :] = True
    b[:, 0] = b[:, -1] = True
    b[1:, :] |= labels[1:, :] != labels[:-1, :]
    b[:-1, :] |= labels[:-1, :] != labels[1:, :]
    b[:, 1:] |= labels[:, 1:] != labels[:, :-1]
    b[:, :-1] |= labels[:, :-1] != labels[:, 1:]
    return b


def connected_components(mask: np.ndarray, ignore_id: int = IGNORE_ID) -> list[SegmentRecord]:
    """All same-class 8-connected segments of a mask, ignore pixels excluded."""
    labels, label_classes = _segment_labels(mask, ignore_id)
    n = len(label_classes)
    if n == 0:
        return []
    on_boundary = _boundary_mask(labels)

    flat = labels.ravel()
    order = np.argsort(flat, kind="stable")
    sorted_labels = flat[order]
    coords = np.column_stack(np.unravel_index(order, labels.shape))
    starts = np.searchsorted(sorted_labels, np.arange(1, n + 2))

    segments = []
    for seg_id in range(1, n + 1):
        pix = coords[starts[seg_id - 1] : starts[seg_id]]
        bnd = pix[on_boundary[pix[:, 0], pix[:, 1]]]
        segments.append(
            SegmentRecord(
                segment_id=seg_id,
                class_id=label_classes[seg_id - 1],
                pixels=pix,
                boundary=bnd,
            )
        )
    return segments


def _gradient_norms(img: np.ndarray) -> np.ndarray:
    """Per-pixel Euclidean norm of the gradient stacked over all channels."""
    g = spatial_gradient(img)
    return np.sqrt(np.sum(g.dx * g.dx + g.dy * g.dy, axis=-1))


def boundary_visibility(img: np.ndarray, seg: SegmentRecord) -> float:
    """Mean gradient norm over the segment's boundary pixels."""
    if len(seg.boundary) == 0:
        raise ValueError(f"segment {seg.segment_id} has no boundary pixels")
    norms = _gradient_norms(img)
    if norms.shape != (img.shape[0], img.shape[1]):
        raise ValueError("image and segment dimensions disagree")
    return float(norms[seg.boundary[:, 0], seg.boundary[:, 1]].mean())


def boundary_visibilities(img: np.ndarray, segments: Sequence[SegmentRecord]) -> list[float]:
    """boundary_visibility for many segments with one gradient evaluation."""
    norms = _gradient_norms(img)
    out = []
    for seg in segments:
        if len(seg.boundary) == 0:
            raise ValueError(f"segment {seg.segment_id} has no boundary pixels")
        out.append(float(norms[seg.boundary[:, 0], seg.boundary[:, 1]].mean()))
    return out


def s_iou(pred: np.ndarray, seg: SegmentRecord) -> float:
    """Segment-wise IoU of one ground-truth segment against a prediction.

    The prediction region is the union of the 8-connected components of the
    segment's class in ``pred`` that intersect the segment; this penalizes
    leakage without coupling distant same-class segments.
    """
    pred = _check_mask(pred)
    seg_mask = seg.pixel_mask(pred.shape)
    lab, n = ndimage.label(pred == seg.class_id, structure=_EIGHT)
    touched = np.unique(lab[seg_mask])
    touched = touched[touched > 0]
    if touched.size == 0:
        return 0.0
    region = np.isin(lab, touched)
    inter = int(np.count_nonzero(region & seg_mask))
    union = int(np.count_nonzero(region | seg_mask))
    return inter / union


class ConfusionMatrix:
    """Dataset-global confusion counts; merging is associative."""

    def __init__(self, classes: Sequence[int], ignore_id: int = IGNORE_ID):
        self.classes = [int(c) for c in classes]
        self.ignore_id = ignore_id
        k = len(self.classes)
        self._index = {c: i for i, c in enumerate(self.classes)}
        # one extra row/column buckets out-of-set ids
        self.counts = np.zeros((k + 1, k + 1), dtype=np.int64)

    def _bucket(self, mask: np.ndarray) -> np.ndarray:
        k = len(self.classes)
        out = np.full(mask.shape, k, dtype=np.int64)
        for cls, i in self._index.items():
            out[mask == cls] = i
        return out

    def update(self, pred: np.ndarray, gt: np.ndarray) -> None:
        pred = _check_mask(pred)
        gt = _check_mask(gt)
        if pred.shape != gt.shape:
            raise ValueError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")
        valid = gt != self.ignore_id
        k = len(self.classes) + 1
        combined = self._bucket(gt[valid]) * k + self._bucket(pred[valid])
        self.counts += np.bincount(combined, minlength=k * k).reshape(k, k)

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if other.classes != self.classes or other.ignore_id != self.ignore_id:
            raise ValueError("cannot merge confusion matrices over different class sets")
        merged = ConfusionMatrix(self.classes, self.ignore_id)
        merged.counts = self.counts + other.counts
        return merged

    def report(self) -> MetricsReport:
        ious: dict[int, float] = {}
        absent: list[int] = []
        for cls, i in self._index.items():
            tp = int(self.counts[i, i])
            fn = int(self.counts[i].sum()) - tp
            fp = int(self.counts[:, i].sum()) - tp
            denom = tp + fp + fn
            if denom == 0:
                absent.append(cls)
            else:
                ious[cls] = tp / denom
        miou = float(np.mean(list(ious.values()))) if ious else float("nan")
        return MetricsReport(class_iou=ious, miou=miou, absent_classes=sorted(absent))


def class_iou(
    pred: np.ndarray | Iterable[np.ndarray],
    gt: np.ndarray | Iterable[np.ndarray],
    classes: Sequence[int],
    ignore_id: int = IGNORE_ID,
) -> MetricsReport:
    """Dataset-global per-class IoU and mIoU over one or many mask pairs."""
    if isinstance(pred, np.ndarray):
        pred = [pred]
        gt = [gt]
    cm = ConfusionMatrix(classes, ignore_id)
    for p, g in zip(pred, gt):
        cm.update(p, g)
    return cm.report()


def pixel_accuracy(pred: np.ndarray, gt: np.ndarray, ignore_id: int = IGNORE_ID) -> float:
    """Fraction of non-ignore pixels predicted with the ground-truth class."""
    pred = _check_mask(pred)
    gt = _check_mask(gt)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")
    valid = gt != ignore_id
    total = int(np.count_nonzero(valid))
    if total == 0:
        raise ValueError("no valid pixels to score")
    return int(np.count_nonzero((pred == gt) & valid)) / total


def prediction_diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Boolean disagreement map: True where the two masks differ."""
    a = _check_mask(a)
    b = _check_mask(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a != b


def diff_to_image(diff: np.ndarray) -> np.ndarray:
    """Encode a disagreement map: black = different, white = same."""
    return np.where(diff, 0, 255).astype(np.uint8)


def acc_rel(acc_cs: float, acc_aa: float) -> float:
    """Relative accuracy 1 - (acc_cs - acc_aa)/acc_cs = acc_aa/acc_cs."""
    if acc_cs <= 0:
        raise ValueError(f"reference accuracy must be positive, got {acc_cs}")
    return 1.0 - (acc_cs - acc_aa) / acc_cs


def segment_scatter(
    rows_a: Sequence[SegmentEval], rows_b: Sequence[SegmentEval]
) -> list[ScatterRow]:
    """Per-segment s_IoU difference (a minus b) against boundary visibility.

    Both row sets must cover exactly the same segments.
    """
    by_id_a = {r.segment_id: r for r in rows_a}
    by_id_b = {r.segment_id: r for r in rows_b}
    if set(by_id_a) != set(by_id_b):
        missing = sorted(set(by_id_a) ^ set(by_id_b))
        raise ValueError(f"segment sets differ between prediction sources: {missing[:10]}")
    return [
        ScatterRow(
            segment_id=sid,
            class_id=by_id_a[sid].class_id,
            visibility=by_id_a[sid].visibility,
            s_iou_diff=by_id_a[sid].s_iou - by_id_b[sid].s_iou,
        )
        for sid in sorted(by_id_a)
    ]


def load_class_set(path: str | Path) -> dict[int, str]:
    """Parse an ``id name`` per-line class-set file."""
    classes: dict[int, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(maxsplit=1)
        if len(parts) != 2 or not parts[0].lstrip("-").isdigit():
            raise ValueError(f"{path}:{lineno}: expected '<id> <name>', got {raw!r}")
        classes[int(parts[0])] = parts[1]
    if not classes:
        raise ValueError(f"{path}: empty class set")
    return classes


def write_class_set(classes: dict[int, str], path: str | Path) -> None:
    lines = [f"{cid} {name}" for cid, name in sorted(classes.items())]
    Path(path).write_text("\n".join(lines) + "\n")
