"""Diffusion parameter sets: validation, named presets, TOML round-trip."""

from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["DiffusionParams", "TAU_MAX", "builtin_presets", "get_preset"]

# Explicit-scheme stability bound for the 2-D stencil with diffusion-tensor
# eigenvalues <= 1 (von Neumann bound for the 5-point part, with margin for
# the mixed terms).
TAU_MAX = 0.25


@dataclass(frozen=True)
class DiffusionParams:
    """Parameters of one edge-enhancing-diffusion run.

    ``orient_sigma``/``orient_kernel`` control the Gaussian that smooths the
    structure-tensor field; they default to the pre-smoothing values.
    ``snapshots`` lists the step indices at which intermediate images are
    emitted; empty means "final step only".
    """

    kappa: float
    presmooth_sigma: float
    presmooth_kernel: int
    orient_sigma: float | None = None
    orient_kernel: int | None = None
    tau: float = 0.2
    steps: int = 0
    snapshots: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.orient_sigma is None:
            object.__setattr__(self, "orient_sigma", self.presmooth_sigma)
        if self.orient_kernel is None:
            object.__setattr__(self, "orient_kernel", self.presmooth_kernel)
        object.__setattr__(self, "snapshots", tuple(sorted(int(s) for s in self.snapshots)))
        self._validate()

    def _validate(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not self.presmooth_sigma > 0:
            raise ValueError(f"presmooth_sigma must be positive, got {self.presmooth_sigma}")
        if not self.orient_sigma > 0:
            raise ValueError(f"orient_sigma must be positive, got {self.orient_sigma}")
        for name in ("presmooth_kernel", "orient_kernel"):
            size = getattr(self, name)
            if not isinstance(size, int) or size < 3 or size % 2 == 0:
                raise ValueError(f"{name} must be an odd integer >= 3, got {size}")
        if not 0 < self.tau <= TAU_MAX:
            raise ValueError(f"tau must be in (0, {TAU_MAX}], got {self.tau}")
        if not isinstance(self.steps, int) or self.steps < 0:
            raise ValueError(f"steps must be a non-negative integer, got {self.steps}")
        for s in self.snapshots:
            if s < 0 or s > self.steps:
                raise ValueError(f"snapshot index {s} outside [0, steps={self.steps}]")

    def resolved_snapshots(self) -> tuple[int, ...]:
        return self.snapshots if self.snapshots else (self.steps,)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kappa": self.kappa,
            "presmooth_sigma": self.presmooth_sigma,
            "presmooth_kernel": self.presmooth_kernel,
            "orient_sigma": self.orient_sigma,
            "orient_kernel": self.orient_kernel,
            "tau": self.tau,
            "steps": self.steps,
            "snapshots": list(self.snapshots),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DiffusionParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown parameter keys: {sorted(unknown)}")
        kwargs = dict(d)
        if "snapshots" in kwargs:
            kwargs["snapshots"] = tuple(kwargs["snapshots"])
        return cls(**kwargs)

    def canonical_json(self) -> str:
        """Stable serialization used in content digests."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def to_toml(self) -> str:
        lines = []
        for key, value in self.to_dict().items():
            if isinstance(value, bool):
                raise TypeError("no boolean parameters expected")
            if isinstance(value, float):
                text = repr(value)
                if "." not in text and "e" not in text and "E" not in text:
                    text += ".0"
            elif isinstance(value, int):
                text = str(value)
            elif isinstance(value, list):
                text = "[" + ", ".join(str(v) for v in value) + "]"
            else:
                raise TypeError(f"cannot serialize {key}={value!r}")
            lines.append(f"{key} = {text}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_toml(cls, text: str) -> "DiffusionParams":
        return cls.from_dict(tomllib.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "DiffusionParams":
        return cls.from_toml(Path(path).read_text())


def builtin_presets() -> dict[str, DiffusionParams]:
    """The two built-in parameter sets.

    P_strong: kappa=1/10, pre-smoothing kernel 9 with sigma=3.
    P_mild:   kappa=1/15, pre-smoothing kernel 5 with sigma=sqrt(5),
              tuned for stronger shape preservation.
    """
    return {
        "P_strong": DiffusionParams(
            kappa=0.1, presmooth_sigma=3.0, presmooth_kernel=9, tau=0.2, steps=5792
        ),
        "P_mild": DiffusionParams(
            kappa=1.0 / 15.0, presmooth_sigma=math.sqrt(5.0), presmooth_kernel=5, tau=0.2, steps=5792
        ),
    }


def get_preset(name: str) -> DiffusionParams:
    presets = builtin_presets()
    if name not in presets:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(sorted(presets))}")
    return presets[name]
