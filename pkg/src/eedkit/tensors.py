"""Gradients, structure tensors, and Charbonnier diffusion tensors.

All tensor fields are symmetric 2x2 matrices per pixel, stored as the three
component planes (a, b, c) meaning [[a, b], [b, c]].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import convolve_plane

__all__ = [
    "GradientField",
    "TensorField",
    "spatial_gradient",
    "structure_tensor",
    "smooth_tensor",
    "charbonnier",
    "diffusion_tensor",
]

# Relative eigenvalue gap below which a tensor is treated as isotropic and
# axis-aligned eigenvectors are used.
DEGENERATE_GAP = 1e-12


@dataclass(frozen=True)
class GradientField:
    """Per-pixel, per-channel (du/dx, du/dy), each of shape (H, W, C)."""

    dx: np.ndarray
    dy: np.ndarray


@dataclass(frozen=True)
class TensorField:
    """Symmetric 2x2 matrix field [[a, b], [b, c]], planes of shape (H, W)."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def eigenvalues(self) -> tuple[np.ndarray, np.ndarray]:
        """Closed-form eigenvalues (mu1 >= mu2) per pixel."""
        mid = 0.5 * (self.a + self.c)
        disc = np.hypot(0.5 * (self.a - self.c), self.b)
        return mid + disc, mid - disc

    def determinant(self) -> np.ndarray:
        return self.a * self.c - self.b * self.b


def _as_hwc(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[..., None]
    if img.ndim != 3:
        raise ValueError(f"image must be (H, W) or (H, W, C), got shape {img.shape}")
    return img


def spatial_gradient(img: np.ndarray) -> GradientField:
    """Central differences with mirror boundary.

    du/dx(i,j) = (u(i,j+1) - u(i,j-1)) / 2; the mirror fold u(-1) = u(1)
    makes the boundary-normal derivative exactly zero at the border, so
    border columns of dx and border rows of dy are 0.
    """
    u = _as_hwc(img)
    dx = np.zeros_like(u)
    dy = np.zeros_like(u)
    dx[:, 1:-1] = 0.5 * (u[:, 2:] - u[:, :-2])
    dy[1:-1] = 0.5 * (u[2:] - u[:-2])
    return GradientField(dx=dx, dy=dy)


def structure_tensor(g: GradientField) -> TensorField:
    """Channel-summed outer product of the gradient: (sum dx^2, sum dx dy, sum dy^2)."""
    return TensorField(
        a=np.sum(g.dx * g.dx, axis=-1),
        b=np.sum(g.dx * g.dy, axis=-1),
        c=np.sum(g.dy * g.dy, axis=-1),
    )


def smooth_tensor(t: TensorField, k: np.ndarray) -> TensorField:
    """Element-wise Gaussian smoothing of the three component planes.

    A convex combination of PSD matrices, so the output stays PSD.
    """
    return TensorField(
        a=convolve_plane(t.a, k),
        b=convolve_plane(t.b, k),
        c=convolve_plane(t.c, k),
    )


def charbonnier(s, kappa: float):
    """Charbonnier diffusivity 1/sqrt(1 + s/kappa^2), strictly decreasing, range (0, 1]."""
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    s = np.asarray(s, dtype=np.float64)
    if np.any(s < 0):
        raise ValueError("diffusivity argument must be non-negative")
    out = 1.0 / np.sqrt(1.0 + s / (kappa * kappa))
    return float(out) if out.ndim == 0 else out


def diffusion_tensor(j: TensorField, kappa: float) -> TensorField:
    """Map a PSD (smoothed) structure tensor to the diffusion tensor.

    Eigendecompose per pixel into mu1 >= mu2 with orthonormal eigenvectors
    v1, v2; return D = g(mu1) v1 v1^T + 1 * v2 v2^T. The dominant direction
    (across the edge) gets reduced diffusivity g(mu1), the tangential one
    full diffusivity 1, so D is SPD with eigenvalues in (0, 1].

    Degenerate pixels (eigenvalue gap <= DEGENERATE_GAP * max(mu1, 1)) use
    axis-aligned eigenvectors.
    """
    a, b, c = j.a, j.b, j.c
    mid = 0.5 * (a + c)
    half_diff = 0.5 * (a - c)
    disc = np.hypot(half_diff, b)
    mu1 = np.maximum(mid + disc, 0.0)  # clamp roundoff negatives of PSD input

    # v1 from whichever row of (J - mu1 I) is better conditioned:
    # (disc + half_diff, b) or (b, disc - half_diff).
    v1x_a, v1y_a = disc + half_diff, b
    v1x_b, v1y_b = b, disc - half_diff
    use_a = v1x_a * v1x_a + v1y_a * v1y_a >= v1x_b * v1x_b + v1y_b * v1y_b
    v1x = np.where(use_a, v1x_a, v1x_b)
    v1y = np.where(use_a, v1y_a, v1y_b)

    degenerate = 2.0 * disc <= DEGENERATE_GAP * np.maximum(mu1, 1.0)
    v1x = np.where(degenerate, 1.0, v1x)
    v1y = np.where(degenerate, 0.0, v1y)
    norm = np.hypot(v1x, v1y)
    v1x /= norm
    v1y /= norm

    # D = I + (g(mu1) - 1) v1 v1^T, i.e. eigenvalues exactly {g(mu1), 1}.
    w = charbonnier(mu1, kappa) - 1.0
    return TensorField(
        a=1.0 + w * v1x * v1x,
        b=w * v1x * v1y,
        c=1.0 + w * v1y * v1y,
    )
