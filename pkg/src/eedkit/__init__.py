"""Edge enhancing diffusion with orientation smoothing.

Texture-suppressing image diffusion plus the surrounding tooling: batch
dataset duplication, segmentation-analysis metrics, a command-line interface,
and a local preview service for interactive parameter tuning.
"""

from .diffusion import (
    NonFiniteSampleError,
    check_image,
    dirichlet_energy,
    divergence_step,
    eed_run,
    eed_steps,
    energy,
)
from .kernels import convolve_gaussian, gaussian_kernel
from .params import TAU_MAX, DiffusionParams, builtin_presets, get_preset
from .tensors import (
    GradientField,
    TensorField,
    charbonnier,
    diffusion_tensor,
    smooth_tensor,
    spatial_gradient,
    structure_tensor,
)

__version__ = "0.1.0"

__all__ = [
    "DiffusionParams",
    "GradientField",
    "NonFiniteSampleError",
    "TAU_MAX",
    "TensorField",
    "builtin_presets",
    "charbonnier",
    "check_image",
    "convolve_gaussian",
    "diffusion_tensor",
    "dirichlet_energy",
    "divergence_step",
    "eed_run",
    "eed_steps",
    "energy",
    "gaussian_kernel",
    "get_preset",
    "smooth_tensor",
    "spatial_gradient",
    "structure_tensor",
]
