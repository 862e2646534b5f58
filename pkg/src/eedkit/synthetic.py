"""Deterministic synthetic fixtures: textured street scenes with label masks.

Used by the test suite and the demo scripts; not part of the numerical core.
Class ids follow the common 14-class street-scene set (see metrics.COMMON14):
road=0, building=2, pole=4, sky=9, car=11.
"""

from __future__ import annotations

import numpy as np

__all__ = ["street_scene", "textured_image"]


def textured_image(height: int = 64, width: int = 64, seed: int = 0) -> np.ndarray:
    """Grayscale-ish RGB image dominated by high-frequency texture."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width]
    base = 0.5 + 0.15 * np.sin(2 * np.pi * xx / 7.0) * np.cos(2 * np.pi * yy / 5.0)
    img = base[..., None] + rng.normal(0.0, 0.12, (height, width, 3))
    return np.clip(img, 0.0, 1.0)


def street_scene(height: int = 96, width: int = 128, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """A textured toy street scene and its ground-truth label mask.

    Returns (image, mask): image is (H, W, 3) float64 in [0, 1], mask is
    (H, W) uint8 class ids. Regions carry strong texture so diffusion has
    something to remove, while region boundaries have strong contrast.
    """
    rng = np.random.default_rng(seed)
    img = np.zeros((height, width, 3))
    mask = np.zeros((height, width), dtype=np.uint8)

    sky_h = int(height * 0.35)
    road_y = int(height * 0.65)

    # Sky: smooth bright blue with faint noise.
    img[:sky_h] = [0.55, 0.70, 0.90]
    img[:sky_h] += rng.normal(0.0, 0.02, (sky_h, width, 3))
    mask[:sky_h] = 9

    # Buildings: two blocks with brick-like periodic texture plus noise.
    yy, xx = np.mgrid[sky_h:road_y, 0:width]
    brick = 0.08 * np.sign(np.sin(2 * np.pi * xx / 6.0) * np.sin(2 * np.pi * yy / 4.0))
    img[sky_h:road_y] = [0.45, 0.35, 0.30]
    img[sky_h:road_y, : width // 2, :] = [0.60, 0.55, 0.45]
    img[sky_h:road_y] += brick[..., None]
    img[sky_h:road_y] += rng.normal(0.0, 0.05, (road_y - sky_h, width, 3))
    mask[sky_h:road_y] = 2

    # Road: dark asphalt with speckle and a bright lane marking.
    img[road_y:] = [0.25, 0.25, 0.27]
    img[road_y:] += rng.normal(0.0, 0.06, (height - road_y, width, 3))
    lane = road_y + (height - road_y) // 2
    img[lane : lane + 2, :, :] = [0.85, 0.85, 0.80]
    mask[road_y:] = 0

    # Car: bright box sitting on the road edge.
    car_h = max(4, height // 8)
    car_w = max(6, width // 6)
    cy, cx = road_y - car_h, int(width * 0.62)
    img[cy : cy + car_h, cx : cx + car_w] = [0.80, 0.15, 0.15]
    img[cy : cy + car_h, cx : cx + car_w] += rng.normal(0.0, 0.03, (car_h, car_w, 3))
    mask[cy : cy + car_h, cx : cx + car_w] = 11

    # Pole: thin dark vertical stripe from the buildings down to the road.
    px = int(width * 0.2)
    img[sky_h - 4 : road_y + 6, px : px + 2] = [0.12, 0.12, 0.12]
    mask[sky_h - 4 : road_y + 6, px : px + 2] = 4

    return np.clip(img, 0.0, 1.0), mask
