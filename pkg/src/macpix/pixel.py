"""A single MACPix cell.

The readout branch is the stack

    V_DD -> FeFET channel (gate at v_read) -> node A
         -> X_P PMOS (source A, gate V_ph) -> node B
         -> X_SL NMOS selector (gate v_dd) -> column node at v_col

and the cell moves through the phases Reset -> Integrate -> Readout.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Any, Mapping

from .device import (
    FeFETParams,
    FeFETState,
    MosfetParams,
    PhotodiodeParams,
    fefet_as_mosfet,
    fefet_conductance,
    effective_overdrive,
    mosfet_current_derivs,
    new_fefet,
    photodiode_delta_v,
    program,
    reset_outer_loop,
)


class Phase(str, Enum):
    RESET = "Reset"
    INTEGRATE = "Integrate"
    READOUT = "Readout"


class PhaseError(RuntimeError):
    """Illegal phase transition or operation issued in the wrong phase."""


class ConvergenceError(RuntimeError):
    def __init__(self, msg, residual):
        super().__init__(f"{msg} (last residual {residual:.3e} A)")
        self.residual = residual


def _default_xp():
    return MosfetParams(polarity="p", v_th=-0.30, beta=150e-6, lambda_=0.1, subthreshold_slope=75.0)


def _default_xsl():
    return MosfetParams(polarity="n", v_th=0.35, beta=400e-6, lambda_=0.1, subthreshold_slope=80.0)


def _default_xr():
    return MosfetParams(polarity="p", v_th=-0.35, beta=200e-6, lambda_=0.1, subthreshold_slope=80.0)


@dataclass(frozen=True)
class PixelConfig:
    v_dd: float = 1.0
    fefet: FeFETParams = field(default_factory=FeFETParams)
    xp: MosfetParams = field(default_factory=_default_xp)
    xsl: MosfetParams = field(default_factory=_default_xsl)
    xr: MosfetParams = field(default_factory=_default_xr)
    pd: PhotodiodeParams = field(default_factory=PhotodiodeParams)
    solver_tol: float = 1e-12
    solver_max_iter: int = 100
    # ideal-mode reference: i = k_ideal * (pva / pva_ref) * (dvph / dvph_ref)
    k_ideal: float = 1.0
    pva_ref: float = 1.0
    dvph_ref: float = 1.0
    v_reset: float = -4.0

    def __post_init__(self):
        if self.v_dd <= 0:
            raise ValueError("v_dd must be positive")
        if self.solver_tol <= 0:
            raise ValueError("solver_tol must be positive")

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "PixelConfig":
        doc = dict(doc)
        kw: dict[str, Any] = {}
        if "fefet" in doc:
            kw["fefet"] = FeFETParams.from_dict(doc.pop("fefet"))
        for name in ("xp", "xsl", "xr"):
            if name in doc:
                kw[name] = MosfetParams.from_dict(doc.pop(name))
        if "pd" in doc:
            kw["pd"] = PhotodiodeParams.from_dict(doc.pop("pd"))
        scalars = {f for f in cls.__dataclass_fields__} - {"fefet", "xp", "xsl", "xr", "pd"}
        kw.update({k: v for k, v in doc.items() if k in scalars})
        return cls(**kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        for name in ("xp", "xsl", "xr"):
            d[name] = getattr(self, name).to_dict()
        return d


@dataclass(frozen=True)
class PixelState:
    phase: Phase
    v_ph: float
    fefet_state: FeFETState
    selected: bool = False
    pva: float | None = None  # last programmed amplitude


@dataclass(frozen=True)
class BranchOperatingPoint:
    i_out: float
    v_node_fe_src: float
    v_node_drv_drain: float
    iterations: int
    converged: bool
    method: str = "newton"


def new_pixel(config: PixelConfig) -> PixelState:
    return PixelState(Phase.RESET, config.v_dd, new_fefet(config.fefet))


def delta_v_ph(config: PixelConfig, pixel: PixelState) -> float:
    return config.v_dd - pixel.v_ph


# ---------------------------------------------------------------------------
# Phase operations
# ---------------------------------------------------------------------------

def reset_pixel(config: PixelConfig, pixel: PixelState, pva: float | None = None) -> PixelState:
    """Charge the photodiode to V_DD and, if ``pva`` is given, reprogram the FeFET.

    Reset is reachable from every phase. With ``pva=None`` the stored
    polarization is kept.
    """
    fe = pixel.fefet_state
    stored = pixel.pva
    if pva is not None:
        fe = program(reset_outer_loop(fe, config.v_reset), pva)
        stored = pva
    return PixelState(Phase.RESET, config.v_dd, fe, False, stored)


def integrate(config: PixelConfig, pixel: PixelState, i_pd: float, t_int: float) -> PixelState:
    if pixel.phase is not Phase.RESET:
        raise PhaseError(f"cannot integrate from phase {pixel.phase.value}")
    dv = photodiode_delta_v(i_pd, t_int, config.pd, config.v_dd)
    return replace(pixel, phase=Phase.INTEGRATE, v_ph=config.v_dd - dv, selected=False)


def begin_readout(pixel: PixelState, selected: bool = True) -> PixelState:
    if pixel.phase is not Phase.INTEGRATE:
        raise PhaseError(f"cannot start readout from phase {pixel.phase.value}")
    return replace(pixel, phase=Phase.READOUT, selected=selected)


def prepared_pixel(config: PixelConfig, pva: float, dvph: float, fefet: FeFETParams | None = None) -> PixelState:
    """Readout-phase pixel programmed at ``pva`` with photodiode drop ``dvph``.

    Shortcut for sweeps that specify the drop directly instead of a
    photocurrent.
    """
    if not 0.0 <= dvph <= config.v_dd:
        raise ValueError(f"dvph={dvph} outside [0, v_dd]")
    fe = new_fefet(fefet or config.fefet)
    fe = program(reset_outer_loop(fe, config.v_reset), pva)
    return PixelState(Phase.READOUT, config.v_dd - dvph, fe, True, pva)


# ---------------------------------------------------------------------------
# DC solve of the readout branch
# ---------------------------------------------------------------------------

class _Branch:
    """Element currents of the three-device stack for fixed bias and devices."""

    __slots__ = ("fe", "xp", "xsl", "v_dd", "v_read", "v_ph", "v_sel", "v_col", "g_min")

    def __init__(self, config: PixelConfig, pixel: PixelState, v_col: float,
                 dvth_fe: float = 0.0, xp: MosfetParams | None = None):
        self.fe = fefet_as_mosfet(pixel.fefet_state, dvth_fe)
        self.g_min = pixel.fefet_state.params.g_min
        self.xp = xp or config.xp
        self.xsl = config.xsl
        self.v_dd = config.v_dd
        self.v_read = pixel.fefet_state.params.v_read
        self.v_ph = pixel.v_ph
        self.v_sel = config.v_dd
        self.v_col = v_col

    def i_fe(self, va):
        i, _, ds, _ = mosfet_current_derivs(self.fe, self.v_read, va, self.v_dd)
        return i + self.g_min * (self.v_dd - va), ds - self.g_min

    def i_xp(self, va, vb):
        # current source->drain, i.e. from node A into node B
        i, _, ds, dd = mosfet_current_derivs(self.xp, self.v_ph, va, vb)
        return -i, -ds, -dd

    def i_sl(self, vb):
        i, _, _, dd = mosfet_current_derivs(self.xsl, self.v_sel, self.v_col, vb)
        return i, dd

    def residuals(self, va, vb):
        ife, _ = self.i_fe(va)
        ixp, _, _ = self.i_xp(va, vb)
        isl, _ = self.i_sl(vb)
        return ife - ixp, ixp - isl, isl


def _newton(br: _Branch, tol: float, max_iter: int):
    lo, hi = br.v_col, br.v_dd
    va = hi - 0.05 * (hi - lo)
    vb = lo + 0.05 * (hi - lo)
    res = math.inf
    for it in range(1, max_iter + 1):
        ife, dfe_a = br.i_fe(va)
        ixp, dxp_a, dxp_b = br.i_xp(va, vb)
        isl, dsl_b = br.i_sl(vb)
        f1 = ife - ixp
        f2 = ixp - isl
        res = max(abs(f1), abs(f2))
        j11, j12 = dfe_a - dxp_a, -dxp_b
        j21, j22 = dxp_a, dxp_b - dsl_b
        det = j11 * j22 - j12 * j21
        if det == 0.0 or not math.isfinite(det):
            break
        da = -(f1 * j22 - f2 * j12) / det
        db = -(j11 * f2 - j21 * f1) / det
        step = max(abs(da), abs(db))
        if step > 0.1:
            da *= 0.1 / step
            db *= 0.1 / step
        va = min(max(va + da, lo), hi)
        vb = min(max(vb + db, lo), va)
        if res <= tol and step <= 1e-13:
            return va, vb, it, res
    return None, None, max_iter, res


def _bisect(fn, lo, hi, xtol=1e-13):
    """Root of an increasing function on [lo, hi]; returns an endpoint if no sign change."""
    flo = fn(lo)
    if flo >= 0:
        return lo
    if fn(hi) <= 0:
        return hi
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if fn(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _bisection(br: _Branch):
    def inner(va):
        # I_sl(vb) - I_xp(va, vb) increases in vb
        return _bisect(lambda vb: br.i_sl(vb)[0] - br.i_xp(va, vb)[0], br.v_col, va)

    def outer(va):
        vb = inner(va)
        return br.i_xp(va, vb)[0] - br.i_fe(va)[0]

    va = _bisect(outer, br.v_col, br.v_dd)
    return va, inner(va)


def solve_branch_dc(config: PixelConfig, pixel: PixelState, v_col: float = 0.0,
                    dvth_fe: float = 0.0, xp: MosfetParams | None = None) -> BranchOperatingPoint:
    """Operating point of the readout branch with the column held at ``v_col``.

    Damped Newton with the analytic Jacobian; on non-convergence the
    monotone structure of the stack is used for a nested bisection.
    """
    if not pixel.selected:
        return BranchOperatingPoint(0.0, config.v_dd, v_col, 0, True, "off")
    if pixel.phase is not Phase.READOUT:
        raise PhaseError(f"branch solve requires Readout phase, got {pixel.phase.value}")
    br = _Branch(config, pixel, v_col, dvth_fe, xp)
    va, vb, it, res = _newton(br, config.solver_tol, config.solver_max_iter)
    method = "newton"
    if va is None:
        va, vb = _bisection(br)
        method = "bisection"
    f1, f2, isl = br.residuals(va, vb)
    res = max(abs(f1), abs(f2))
    if res > config.solver_tol:
        raise ConvergenceError(f"branch solve failed after {config.solver_max_iter} iterations", res)
    return BranchOperatingPoint(isl, va, vb, it, True, method)


# ---------------------------------------------------------------------------
# Simplified conductance model and readout
# ---------------------------------------------------------------------------

def series_conductance(*gs: float) -> float:
    if any(g <= 0 for g in gs):
        return 0.0
    return 1.0 / math.fsum(1.0 / g for g in gs)


def driver_conductance(config: PixelConfig, dvph: float, xp: MosfetParams | None = None) -> float:
    # X_P linearized in triode with its source near V_DD and gate at V_ph
    xp = xp or config.xp
    v_eff, _ = effective_overdrive(dvph - abs(xp.v_th), xp.subthreshold_slope)
    return xp.beta * v_eff


def selector_conductance(config: PixelConfig, v_col: float = 0.0) -> float:
    v_eff, _ = effective_overdrive(config.v_dd - v_col - config.xsl.v_th, config.xsl.subthreshold_slope)
    return config.xsl.beta * v_eff


def branch_conductance_simplified(config: PixelConfig, pixel: PixelState, dvth_fe: float = 0.0,
                                  xp: MosfetParams | None = None) -> float:
    """Series G_fe + G_xp(dV_ph) + G_const of the readout branch (S)."""
    g_fe = fefet_conductance(pixel.fefet_state, dvth_fe)
    g_xp = driver_conductance(config, delta_v_ph(config, pixel), xp)
    return series_conductance(g_fe, g_xp, selector_conductance(config))


def ideal_current(config: PixelConfig, pva: float, dvph: float) -> float:
    return config.k_ideal * (pva / config.pva_ref) * (dvph / config.dvph_ref)


def readout(config: PixelConfig, pixel: PixelState, v_col: float = 0.0, mode: str = "physical") -> float:
    """Output current of a selected pixel in Readout phase (A)."""
    if pixel.phase is not Phase.READOUT:
        raise PhaseError(f"readout requires Readout phase, got {pixel.phase.value}")
    if mode == "physical":
        return solve_branch_dc(config, pixel, v_col).i_out
    if mode == "ideal":
        if not pixel.selected:
            return 0.0
        return ideal_current(config, pixel.pva or 0.0, delta_v_ph(config, pixel))
    raise ValueError(f"unknown readout mode {mode!r}")


def run_cycle(config: PixelConfig, pixel: PixelState, pva: float | None, i_pd: float, t_int: float,
              v_col: float = 0.0, mode: str = "physical") -> tuple[PixelState, float]:
    pixel = reset_pixel(config, pixel, pva)
    pixel = integrate(config, pixel, i_pd, t_int)
    pixel = begin_readout(pixel)
    return pixel, readout(config, pixel, v_col, mode)
