"""Sampled Gaussian kernels and separable mirror-boundary convolution."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import correlate1d

__all__ = ["gaussian_kernel", "convolve_gaussian", "convolve_plane"]

# Half-sample symmetric extension (d c b a | a b c d). Even extension about
# the pixel edge, which is the reflection realized by the zero-flux stencil
# in diffusion.divergence_step; convolution must use the same one so that
# the isotropic limit of the scheme matches plain Gaussian smoothing.
_BOUNDARY = "reflect"


def gaussian_kernel(sigma: float, size: int) -> np.ndarray:
    """Normalized sampled Gaussian, odd length, weights summing to 1.

    Raises ValueError for sigma <= 0, even size, or size < 3.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if size < 3 or size % 2 == 0:
        raise ValueError(f"kernel size must be odd and >= 3, got {size}")
    center = size // 2
    x = np.arange(size, dtype=np.float64) - center
    w = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return w / w.sum()


def _check_kernel(k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=np.float64)
    if k.ndim != 1 or k.size < 3 or k.size % 2 == 0:
        raise ValueError(f"kernel must be 1-D with odd length >= 3, got shape {k.shape}")
    if np.any(k < 0) or abs(k.sum() - 1.0) > 1e-12:
        raise ValueError("kernel weights must be non-negative and sum to 1")
    return k


def convolve_plane(plane: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Separable 2-D convolution of one (H, W) plane, mirror boundary."""
    k = _check_kernel(k)
    out = correlate1d(np.asarray(plane, dtype=np.float64), k, axis=1, mode=_BOUNDARY)
    return correlate1d(out, k, axis=0, mode=_BOUNDARY)


def convolve_gaussian(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Per-channel separable convolution (horizontal then vertical pass).

    Accepts (H, W) or (H, W, C) arrays; symmetric kernels make correlation
    and convolution identical.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return convolve_plane(img, k)
    if img.ndim != 3:
        raise ValueError(f"image must be (H, W) or (H, W, C), got shape {img.shape}")
    return np.stack([convolve_plane(img[..., c], k) for c in range(img.shape[2])], axis=-1)
