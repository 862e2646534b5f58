"""Image decode/encode: 8-bit PNG/JPEG in, [0,1] float arrays inside, PNG out.

Quantization is round-half-to-even after clamping to [0, 1], so encoded
bytes are a pure function of the sample values; the CLI, the batch pipeline,
and the preview service all share this path.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

__all__ = [
    "decode_image",
    "decode_image_bytes",
    "encode_png_bytes",
    "save_image",
    "load_mask",
    "save_mask",
]


def _to_float(arr: np.ndarray) -> np.ndarray:
    img = arr.astype(np.float64) / 255.0
    if img.ndim == 2:
        img = img[..., None]
    return img


def decode_image(path: str | Path) -> np.ndarray:
    """Decode PNG/JPEG to a float64 (H, W, C) array in [0, 1], C in {1, 3}."""
    with PILImage.open(path) as im:
        return _decode_pil(im)


def decode_image_bytes(data: bytes) -> np.ndarray:
    with PILImage.open(io.BytesIO(data)) as im:
        return _decode_pil(im)


def _decode_pil(im: PILImage.Image) -> np.ndarray:
    if im.mode == "L":
        return _to_float(np.asarray(im))
    if im.mode != "RGB":
        im = im.convert("RGB")
    return _to_float(np.asarray(im))


def quantize(img: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1] and quantize to uint8 with round-half-to-even."""
    clipped = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    return np.rint(clipped * 255.0).astype(np.uint8)


def encode_png_bytes(img: np.ndarray) -> bytes:
    """Encode a float (H, W, C) image as deterministic 8-bit PNG bytes."""
    q = quantize(img)
    if q.ndim == 3 and q.shape[2] == 1:
        q = q[..., 0]
    mode = "L" if q.ndim == 2 else "RGB"
    buf = io.BytesIO()
    PILImage.fromarray(q, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def save_image(img: np.ndarray, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_png_bytes(img))


def load_mask(path: str | Path) -> np.ndarray:
    """Load a single-channel label mask of class ids, unscaled."""
    with PILImage.open(path) as im:
        if im.mode not in ("L", "P", "I"):
            raise ValueError(f"label mask must be single-channel, got mode {im.mode!r} for {path}")
        arr = np.asarray(im.convert("L") if im.mode == "P" else im)
    return arr.astype(np.int64)


def save_mask(mask: np.ndarray, path: str | Path) -> None:
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {mask.shape}")
    if mask.min() < 0 or mask.max() > 255:
        raise ValueError("mask class ids must fit 8-bit")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    PILImage.fromarray(mask.astype(np.uint8), mode="L").save(path, format="PNG")
