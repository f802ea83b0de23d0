"""Pixel array with shared column lines.

Every column line is held at ``v_col`` by an ideal transimpedance readout,
so each pixel sees the same bias regardless of its neighbours and the
column current is the plain sum of pixel currents.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .encoding import GridSpec, input_to_dvph, weight_to_pva
from .pixel import (
    ConvergenceError,
    Phase,
    PixelConfig,
    PixelState,
    begin_readout,
    integrate,
    new_pixel,
    readout,
    reset_pixel,
)


class ArrayReadoutError(RuntimeError):
    def __init__(self, row, col, cause):
        super().__init__(f"pixel ({row}, {col}): {cause}")
        self.row, self.col = row, col


@dataclass(frozen=True)
class ArrayConfig:
    rows: int
    cols: int
    pixel: PixelConfig = field(default_factory=PixelConfig)
    v_col: float = 0.0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be >= 1")


@dataclass(frozen=True)
class SensorArray:
    config: ArrayConfig
    pixels: tuple[tuple[PixelState, ...], ...]

    @property
    def shape(self):
        return self.config.rows, self.config.cols

    def map(self, fn) -> "SensorArray":
        return replace(self, pixels=tuple(
            tuple(fn(r, c, p) for c, p in enumerate(row)) for r, row in enumerate(self.pixels)))

    def remnant_polarizations(self) -> np.ndarray:
        from .device import remnant_polarization
        return np.array([[remnant_polarization(p.fefet_state) for p in row] for row in self.pixels])

    def delta_v_ph(self) -> np.ndarray:
        v_dd = self.config.pixel.v_dd
        return np.array([[v_dd - p.v_ph for p in row] for row in self.pixels])


@dataclass(frozen=True)
class IrradianceMap:
    """Photocurrents ``values * scale`` in A, one per pixel."""

    values: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(v < 0) or self.scale < 0:
            raise ValueError("irradiance must be non-negative")
        object.__setattr__(self, "values", v)

    def photocurrents(self) -> np.ndarray:
        return self.values * self.scale


def new_array(config: ArrayConfig) -> SensorArray:
    p = new_pixel(config.pixel)
    return SensorArray(config, tuple((p,) * config.cols for _ in range(config.rows)))


def _check_shape(array: SensorArray, m, what):
    m = np.asarray(m, dtype=float)
    if m.shape != array.shape:
        raise ValueError(f"{what} shape {m.shape} does not match array {array.shape}")
    return m


def program_array(array: SensorArray, pva_matrix) -> SensorArray:
    pva = _check_shape(array, pva_matrix, "pva_matrix")
    if np.any(pva < 0):
        raise ValueError("negative PVA")
    cfg = array.config.pixel
    return array.map(lambda r, c, p: reset_pixel(cfg, p, float(pva[r, c])))


def expose(array: SensorArray, irr: IrradianceMap, t_int: float) -> SensorArray:
    """Integrate each pixel's photocurrent for ``t_int`` and select all rows."""
    i_pd = _check_shape(array, irr.photocurrents(), "irradiance")
    cfg = array.config.pixel

    def step(r, c, p):
        if p.phase is not Phase.RESET:
            p = reset_pixel(cfg, p)
        return begin_readout(integrate(cfg, p, float(i_pd[r, c]), t_int))

    return array.map(step)


def expose_dvph(array: SensorArray, dvph_matrix, t_int: float = 1e-3) -> SensorArray:
    """Expose with the photocurrent that produces the requested drop per pixel."""
    dv = _check_shape(array, dvph_matrix, "dvph_matrix")
    c_pd = array.config.pixel.pd.c_pd
    return expose(array, IrradianceMap(dv * c_pd / t_int), t_int)


def pixel_currents(array: SensorArray, mode: str = "physical", workers: int = 1) -> np.ndarray:
    """Per-pixel output currents with every row selected (rows x cols, A)."""
    cfg = array.config.pixel
    v_col = array.config.v_col
    cells = [(r, c) for r in range(array.config.rows) for c in range(array.config.cols)]

    def one(rc):
        r, c = rc
        try:
            return readout(cfg, array.pixels[r][c], v_col, mode)
        except ConvergenceError as exc:
            raise ArrayReadoutError(r, c, exc) from exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vals = list(pool.map(one, cells))
    else:
        vals = [one(rc) for rc in cells]
    return np.array(vals, dtype=float).reshape(array.shape)


def readout_columns(array: SensorArray, mode: str = "physical", workers: int = 1) -> list[float]:
    """Column-line currents I_out,c (A). Exactly-rounded summation per column."""
    cur = pixel_currents(array, mode, workers)
    return [math.fsum(cur[:, c]) for c in range(array.config.cols)]


def readout_rows_sequential(array: SensorArray, mode: str = "physical") -> np.ndarray:
    """Debug mode: select one row at a time and record each pixel current."""
    out = np.zeros(array.shape)
    for r in range(array.config.rows):
        only = array.map(lambda rr, c, p: replace(p, selected=(rr == r)))
        out[r] = pixel_currents(only, mode)[r]
    return out


def mac(config: ArrayConfig, weights, inputs, mode: str = "physical", *,
        grid: GridSpec = GridSpec(), reference: bool = False, workers: int = 1) -> list[float]:
    """Column dot products of ``weights`` and ``inputs`` (both in [0, 1]).

    In ideal mode the result is ``k_ideal * sum_r w[r, c] * x[r, c]``
    computed directly from the normalized values. In physical mode the
    weights are programmed as PVAs and the inputs applied as photodiode
    drops; with ``reference`` a second array programmed at the lowest
    weight sees the same inputs and its column currents are subtracted,
    which cancels the input-only part of the pixel response.
    """
    w = np.asarray(weights, dtype=float)
    x = np.asarray(inputs, dtype=float)
    if w.shape != x.shape or w.shape != (config.rows, config.cols):
        raise ValueError(f"weights {w.shape} / inputs {x.shape} / array {(config.rows, config.cols)} mismatch")
    if mode == "ideal":
        k = config.pixel.k_ideal
        return [math.fsum(k * w[r, c] * x[r, c] for r in range(config.rows)) for c in range(config.cols)]
    dvph = input_to_dvph(x, grid)
    arr = expose_dvph(program_array(new_array(config), weight_to_pva(w, grid)), dvph)
    cols = readout_columns(arr, mode, workers)
    if reference:
        ref = expose_dvph(program_array(new_array(config), np.full(w.shape, grid.pva_min)), dvph)
        cols = [a - b for a, b in zip(cols, readout_columns(ref, mode, workers))]
    return cols
