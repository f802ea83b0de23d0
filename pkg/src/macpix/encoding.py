"""Weight/input encoders between normalized CNN values and pixel voltages."""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    pva_min: float = 1.5
    pva_max: float = 2.8
    pva_steps: int = 14
    dvph_min: float = 0.45
    dvph_max: float = 0.95
    dvph_steps: int = 11

    def __post_init__(self):
        if not (self.pva_min < self.pva_max and self.dvph_min < self.dvph_max):
            raise ValueError("grid bounds must satisfy min < max")
        if self.pva_steps < 2 or self.dvph_steps < 2:
            raise ValueError("grid needs at least 2 steps per axis")

    def pva_axis(self) -> np.ndarray:
        return np.linspace(self.pva_min, self.pva_max, self.pva_steps)

    def dvph_axis(self) -> np.ndarray:
        return np.linspace(self.dvph_min, self.dvph_max, self.dvph_steps)

    def to_dict(self) -> dict:
        return asdict(self)


def _clamp01(v, what):
    a = np.asarray(v, dtype=float)
    if np.any((a < 0) | (a > 1)):
        warnings.warn(f"{what} outside [0, 1] clamped", stacklevel=3)
        a = np.clip(a, 0.0, 1.0)
    return a


def weight_to_pva(w, grid: GridSpec = GridSpec()):
    a = _clamp01(w, "weight")
    out = grid.pva_min + a * (grid.pva_max - grid.pva_min)
    return float(out) if out.ndim == 0 else out


def input_to_dvph(x, grid: GridSpec = GridSpec()):
    a = _clamp01(x, "input")
    out = grid.dvph_min + a * (grid.dvph_max - grid.dvph_min)
    return float(out) if out.ndim == 0 else out
