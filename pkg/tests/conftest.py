"""Shared fixtures, independent oracle implementations, and the acceptance
summary hook."""

from __future__ import annotations

import numpy as np
import pytest

from eedkit.tensors import TensorField

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_spd_field(height: int, width: int, rng: np.random.Generator) -> TensorField:
    """Random SPD tensor field with eigenvalues in (0.05, 1]."""
    theta = rng.uniform(0.0, np.pi, (height, width))
    lam1 = rng.uniform(0.05, 1.0, (height, width))
    lam2 = rng.uniform(0.05, 1.0, (height, width))
    cs, sn = np.cos(theta), np.sin(theta)
    return TensorField(
        a=lam1 * cs * cs + lam2 * sn * sn,
        b=(lam1 - lam2) * cs * sn,
        c=lam1 * sn * sn + lam2 * cs * cs,
    )


def random_psd_field(height: int, width: int, rng: np.random.Generator) -> TensorField:
    """Random PSD field built from sums of gradient outer products."""
    gx = rng.normal(size=(height, width, 2))
    gy = rng.normal(size=(height, width, 2))
    return TensorField(
        a=np.sum(gx * gx, axis=-1),
        b=np.sum(gx * gy, axis=-1),
        c=np.sum(gy * gy, axis=-1),
    )


def assemble_update_matrix(d: TensorField, tau: float) -> np.ndarray:
    """Brute-force dense assembly of the explicit update matrix.

    Builds I + tau*A row by row from the face fluxes of the divergence-form
    stencil (axial half-point fluxes plus averaged mixed fluxes, zero flux
    through boundary faces). Independent loop-based path used as the oracle
    for divergence_step.
    """
    height, width = d.a.shape
    n = height * width
    A = np.zeros((n, n))

    def idx(i: int, j: int) -> int:
        return i * width + j

    a, b, c = d.a, d.b, d.c

    for i in range(height):
        for j in range(width - 1):
            # axial x face between (i,j) and (i,j+1)
            w = 0.5 * (a[i, j] + a[i, j + 1])
            flux = np.zeros(n)
            flux[idx(i, j + 1)] += w
            flux[idx(i, j)] -= w
            # mixed x flux: average of b * (u[i+1] - u[i-1]) at the face ends
            for s in (j, j + 1):
                if 0 < i < height - 1:
                    flux[idx(i + 1, s)] += b[i, s] / 4.0
                    flux[idx(i - 1, s)] -= b[i, s] / 4.0
            A[idx(i, j)] += flux
            A[idx(i, j + 1)] -= flux

    for i in range(height - 1):
        for j in range(width):
            # axial y face between (i,j) and (i+1,j)
            w = 0.5 * (c[i, j] + c[i + 1, j])
            flux = np.zeros(n)
            flux[idx(i + 1, j)] += w
            flux[idx(i, j)] -= w
            for s in (i, i + 1):
                if 0 < j < width - 1:
                    flux[idx(s, j + 1)] += b[s, j] / 4.0
                    flux[idx(s, j - 1)] -= b[s, j] / 4.0
            A[idx(i, j)] += flux
            A[idx(i + 1, j)] -= flux

    return np.eye(n) + tau * A


def brute_force_convolve2d(plane: np.ndarray, kernel1d: np.ndarray) -> np.ndarray:
    """Direct 2-D convolution with the full outer-product kernel (oracle)."""
    k2 = np.outer(kernel1d, kernel1d)
    r = len(kernel1d) // 2
    padded = np.pad(plane, r, mode="symmetric")
    out = np.empty_like(plane, dtype=np.float64)
    size = len(kernel1d)
    for i in range(plane.shape[0]):
        for j in range(plane.shape[1]):
            out[i, j] = np.sum(padded[i : i + size, j : j + size] * k2)
    return out
