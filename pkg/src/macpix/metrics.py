"""Multiplication fidelity of the pixel and the first-layer convolution demo."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .array import ArrayConfig, mac
from .encoding import GridSpec
from .pixel import PixelConfig, prepared_pixel, readout


class NormalizationError(ValueError):
    pass


class UndefinedCorrelationError(ValueError):
    pass


@dataclass(frozen=True)
class ValueMap:
    values: np.ndarray
    row_axis: tuple[float, ...] = ()
    col_axis: tuple[float, ...] = ()
    row_label: str = "pva"
    col_label: str = "dvph"
    units: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("ValueMap needs a 2-D array")
        if not np.all(np.isfinite(v)):
            raise ValueError("ValueMap entries must be finite")
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape

    def with_values(self, values, units=None) -> "ValueMap":
        return ValueMap(values, self.row_axis, self.col_axis, self.row_label, self.col_label,
                        self.units if units is None else units)


@dataclass(frozen=True)
class ErrorReport:
    mean_abs_err: float
    std_abs_err: float
    pearson: float

    def to_dict(self):
        return {"mean_abs_err": self.mean_abs_err, "std_abs_err": self.std_abs_err,
                "pearson": self.pearson}


def normalize_map(m: ValueMap) -> ValueMap:
    peak = float(np.max(m.values))
    if np.max(np.abs(m.values)) == 0 or peak <= 0:
        raise NormalizationError("cannot normalize a map without a positive maximum")
    return m.with_values(m.values / peak, units="normalized")


def true_product_map(g: GridSpec = GridSpec()) -> ValueMap:
    p, d = g.pva_axis(), g.dvph_axis()
    return ValueMap(np.outer(p, d), tuple(p), tuple(d), units="V^2")


def simulated_current_map(g: GridSpec = GridSpec(), config: PixelConfig | None = None) -> ValueMap:
    config = config or PixelConfig()
    p, d = g.pva_axis(), g.dvph_axis()
    vals = [[readout(config, prepared_pixel(config, float(a), float(b))) for b in d] for a in p]
    return ValueMap(np.array(vals), tuple(p), tuple(d), units="A")


def pearson(x, y) -> float:
    x = [float(v) for v in np.ravel(x)]
    y = [float(v) for v in np.ravel(y)]
    if len(x) != len(y) or len(x) < 2:
        raise ValueError("pearson needs two sequences of equal length >= 2")
    n = len(x)
    mx, my = math.fsum(x) / n, math.fsum(y) / n
    dx = [a - mx for a in x]
    dy = [b - my for b in y]
    sxx = math.fsum(a * a for a in dx)
    syy = math.fsum(b * b for b in dy)
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("zero variance input")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def error_stats(truth: ValueMap, sim: ValueMap) -> ErrorReport:
    """Mean and population std of |truth - sim|, plus their Pearson correlation."""
    if truth.shape != sim.shape:
        raise ValueError(f"shape mismatch {truth.shape} vs {sim.shape}")
    err = np.abs(truth.values - sim.values).ravel()
    return ErrorReport(float(np.mean(err)), float(np.std(err)), pearson(truth.values, sim.values))


def error_map(truth: ValueMap, sim: ValueMap) -> ValueMap:
    return truth.with_values(np.abs(truth.values - sim.values), units="normalized")


@dataclass(frozen=True)
class Calibration:
    gain: float
    offset: float
    i_max: float
    raw: ErrorReport
    calibrated: ErrorReport
    residual_rms: float
    region_err: dict = field(default_factory=dict)

    def predict_current(self, truth_norm):
        """Pixel current the calibration expects for a normalized true product."""
        return (np.asarray(truth_norm) - self.offset) / self.gain * self.i_max

    def to_dict(self):
        return {
            "gain": self.gain, "offset": self.offset, "i_max": self.i_max,
            "raw": self.raw.to_dict(), "calibrated": self.calibrated.to_dict(),
            "residual_rms": self.residual_rms, "region_mean_abs_err": dict(self.region_err),
        }


def affine_fit(sim, truth) -> tuple[float, float]:
    """Least-squares ``truth ~ gain * sim + offset``."""
    s = np.ravel(sim).astype(float)
    t = np.ravel(truth).astype(float)
    if np.ptp(s) == 0:
        raise ValueError("degenerate (constant) simulated map")
    A = np.column_stack([s, np.ones_like(s)])
    (gain, offset), *_ = np.linalg.lstsq(A, t, rcond=None)
    return float(gain), float(offset)


def calibrate_against(truth: ValueMap, sim_raw: ValueMap) -> Calibration:
    tn = normalize_map(truth)
    i_max = float(np.max(sim_raw.values))
    sn = normalize_map(sim_raw)
    gain, offset = affine_fit(sn.values, tn.values)
    fitted = sn.with_values(gain * sn.values + offset)
    resid = tn.values - fitted.values
    err = np.abs(tn.values - sn.values)
    half = err.shape[1] // 2
    region = {"low_dvph": float(err[:, :half].mean()), "high_dvph": float(err[:, half:].mean())}
    return Calibration(gain, offset, i_max, error_stats(tn, sn), error_stats(tn, fitted),
                       float(np.sqrt(np.mean(resid ** 2))), region)


def calibrate_fidelity(config: PixelConfig | None = None, g: GridSpec = GridSpec()) -> Calibration:
    """Fit the simulated current map to the product map on grid ``g``."""
    return calibrate_against(true_product_map(g), simulated_current_map(g, config))


# ---------------------------------------------------------------------------
# Convolution
# ---------------------------------------------------------------------------

def cross_correlate(image, kernel, stride: int = 1) -> np.ndarray:
    """Valid-mode 2-D cross-correlation with exactly rounded window sums."""
    img = np.asarray(image, dtype=float)
    ker = np.asarray(kernel, dtype=float)
    kh, kw = ker.shape
    oh = (img.shape[0] - kh) // stride + 1
    ow = (img.shape[1] - kw) // stride + 1
    out = np.empty((oh, ow))
    for i in range(oh):
        for j in range(ow):
            win = img[i * stride:i * stride + kh, j * stride:j * stride + kw]
            out[i, j] = math.fsum((ker * win).ravel())
    return out


def insensor_conv2d(image, kernel, stride: int = 1, mode: str = "ideal", *,
                    config: PixelConfig | None = None, grid: GridSpec = GridSpec(),
                    differential: bool = False, workers: int = 1) -> np.ndarray:
    """First-layer convolution where each output position is one pixel column.

    The column holds ``kh*kw`` pixels programmed with the kernel and exposed
    with the image window under it. With ``differential`` the kernel is split
    into positive and negative parts read on separate columns and
    subtracted; for a non-negative kernel the negative column is a
    lowest-weight reference that removes the input-only current.
    """
    img = np.asarray(image, dtype=float)
    ker = np.asarray(kernel, dtype=float)
    if img.ndim != 2 or ker.ndim != 2:
        raise ValueError("image and kernel must be 2-D")
    kh, kw = ker.shape
    if kh > img.shape[0] or kw > img.shape[1]:
        raise ValueError(f"kernel {ker.shape} larger than image {img.shape}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if np.any(ker < 0) and not differential:
        raise ValueError("signed kernel requires differential=True")
    config = config or PixelConfig()
    oh = (img.shape[0] - kh) // stride + 1
    ow = (img.shape[1] - kw) // stride + 1
    windows = np.empty((kh * kw, oh * ow))
    for i in range(oh):
        for j in range(ow):
            windows[:, i * ow + j] = img[i * stride:i * stride + kh, j * stride:j * stride + kw].ravel()
    acfg = ArrayConfig(kh * kw, oh * ow, config)

    def run(k):
        weights = np.repeat(k.reshape(-1, 1), oh * ow, axis=1)
        return np.array(mac(acfg, weights, windows, mode, grid=grid, workers=workers))

    if differential:
        out = run(np.maximum(ker, 0.0)) - run(np.maximum(-ker, 0.0))
    else:
        out = run(ker)
    return out.reshape(oh, ow)
