"""Behavioral device models for the MACPix cell.

Three pieces live here:

- a multi-domain FeFET built as a Preisach-style ensemble of bistable
  domains whose coercive voltages are stratified quantiles of a Gaussian,
- a piecewise square-law MOSFET with an exponential subthreshold tail,
- the linear photodiode discharge law ``dV/dt = I_pd / C_pd``.

Everything is a pure function over frozen dataclasses. A state is never
mutated in place; programming returns a new state.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field, fields, replace
from statistics import NormalDist
from typing import Any, Mapping

LN10 = math.log(10.0)

# Subthreshold slope used for the FeFET channel tail (mV/decade).
FEFET_SUBTHRESHOLD_SLOPE = 80.0


class PartialResetError(ValueError):
    """Reset pulse too small to drive every domain back down."""


class ProtocolWarning(UserWarning):
    """Programming issued without a preceding outer-loop reset."""


def _from_mapping(cls, doc: Mapping[str, Any]):
    known = {f.name for f in fields(cls)}
    unknown = set(doc) - known
    if unknown:
        warnings.warn(f"{cls.__name__}: ignoring unknown fields {sorted(unknown)}")
    return cls(**{k: v for k, v in doc.items() if k in known})


@dataclass(frozen=True)
class FeFETParams:
    n_domains: int = 200
    p_s: float = 1.0  # uC/cm^2
    e_c_mean: float = 1.05  # V/nm
    e_c_sigma: float = 0.17  # V/nm
    t_fe: float = 2.0  # nm
    v_th0: float = 0.25  # V
    k_pol: float = 0.15  # V per uC/cm^2
    beta: float = 12e-6  # A/V^2
    g_min: float = 1e-12  # S
    v_read: float = 1.5  # V

    def __post_init__(self):
        if self.n_domains < 1:
            raise ValueError("n_domains must be >= 1")
        if self.p_s <= 0 or self.t_fe <= 0 or self.e_c_sigma <= 0:
            raise ValueError("p_s, t_fe and e_c_sigma must be positive")
        if self.g_min < 0:
            raise ValueError("g_min must be non-negative")

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "FeFETParams":
        return _from_mapping(cls, doc)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MosfetParams:
    polarity: str = "n"
    v_th: float = 0.35  # V; negative for PMOS by convention
    beta: float = 200e-6  # A/V^2
    lambda_: float = 0.1  # 1/V
    subthreshold_slope: float = 80.0  # mV/decade

    def __post_init__(self):
        if self.polarity not in ("n", "p"):
            raise ValueError(f"polarity must be 'n' or 'p', got {self.polarity!r}")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.subthreshold_slope <= 0:
            raise ValueError("subthreshold_slope must be positive")

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "MosfetParams":
        doc = dict(doc)
        # JSON documents use the plain name; ``lambda`` is reserved in Python.
        if "lambda" in doc:
            doc["lambda_"] = doc.pop("lambda")
        return _from_mapping(cls, doc)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lambda_")
        return d


@dataclass(frozen=True)
class PhotodiodeParams:
    c_pd: float = 5e-15  # F
    i_dark: float = 0.0  # A

    def __post_init__(self):
        if self.c_pd <= 0:
            raise ValueError("c_pd must be positive")
        if self.i_dark < 0:
            raise ValueError("i_dark must be non-negative")

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "PhotodiodeParams":
        return _from_mapping(cls, doc)

    def to_dict(self) -> dict:
        return asdict(self)


def load_params(path):
    """Read a JSON document with optional ``fefet``/``mosfet``/``photodiode`` keys."""
    with open(path) as fh:
        doc = json.load(fh)
    out = {}
    if "fefet" in doc:
        out["fefet"] = FeFETParams.from_dict(doc["fefet"])
    if "mosfet" in doc:
        out["mosfet"] = MosfetParams.from_dict(doc["mosfet"])
    if "photodiode" in doc:
        out["photodiode"] = PhotodiodeParams.from_dict(doc["photodiode"])
    return out


# ---------------------------------------------------------------------------
# FeFET domain ensemble
# ---------------------------------------------------------------------------

_STD_NORMAL = NormalDist()


def stratified_quantiles(n: int) -> tuple[float, ...]:
    """Standard-normal quantiles at the midpoints of ``n`` equal-probability strata."""
    return tuple(_STD_NORMAL.inv_cdf((k + 0.5) / n) for k in range(n))


def coercive_voltages(params: FeFETParams, t_fe: float | None = None) -> tuple[float, ...]:
    t = params.t_fe if t_fe is None else t_fe
    mu = params.e_c_mean * t
    sigma = params.e_c_sigma * t
    return tuple(mu + sigma * z for z in stratified_quantiles(params.n_domains))


@dataclass(frozen=True)
class FeFETState:
    params: FeFETParams
    domain_up: tuple[bool, ...]
    domain_vc: tuple[float, ...]

    def __post_init__(self):
        if len(self.domain_up) != self.params.n_domains or len(self.domain_vc) != self.params.n_domains:
            raise ValueError("domain arrays must have length n_domains")

    @property
    def f_up(self) -> float:
        return sum(self.domain_up) / self.params.n_domains


def new_fefet(params: FeFETParams | None = None) -> FeFETState:
    """Fresh device with every domain pointing down."""
    params = params or FeFETParams()
    vc = coercive_voltages(params)
    return FeFETState(params, (False,) * params.n_domains, vc)


def reset_outer_loop(state: FeFETState, v_reset: float = -4.0) -> FeFETState:
    """Apply a negative gate pulse that switches every domain down."""
    if v_reset > 0:
        raise ValueError("reset pulse must be negative")
    need = max(state.domain_vc)
    if abs(v_reset) < need:
        raise PartialResetError(
            f"|v_reset|={abs(v_reset):.3f} V below max coercive voltage {need:.3f} V"
        )
    return replace(state, domain_up=(False,) * state.params.n_domains)


def is_reset(state: FeFETState) -> bool:
    return not any(state.domain_up)


def program(state: FeFETState, pva: float) -> FeFETState:
    """Apply a positive programming pulse of amplitude ``pva``.

    Domains whose coercive voltage lies below ``pva`` switch up; the rest keep
    their orientation. Called on a state that was not reset first, this traces
    a minor loop and emits a :class:`ProtocolWarning`.
    """
    if pva < 0:
        raise ValueError("pva must be non-negative")
    if not is_reset(state):
        warnings.warn("program() without outer-loop reset", ProtocolWarning, stacklevel=2)
    up = tuple(u or vc < pva for u, vc in zip(state.domain_up, state.domain_vc))
    return replace(state, domain_up=up)


def remnant_polarization(state: FeFETState) -> float:
    """P_R in uC/cm^2."""
    return state.params.p_s * (2.0 * state.f_up - 1.0)


def fefet_threshold(state: FeFETState, dvth: float = 0.0) -> float:
    p = state.params
    return p.v_th0 + dvth - p.k_pol * remnant_polarization(state)


def effective_overdrive(v_ov: float, slope_mv: float) -> tuple[float, float]:
    """Overdrive with an exponential tail below ``2 n V_t``.

    Returns ``(v_eff, d v_eff / d v_ov)``. Above the knee the value is the
    raw overdrive, so the square law holds exactly in strong inversion; below
    it the tail is matched in value and slope, and the resulting
    saturation current falls by one decade per ``slope_mv``.
    """
    knee = 2.0 * slope_mv * 1e-3 / LN10
    if v_ov >= knee:
        return v_ov, 1.0
    e = math.exp(v_ov / knee - 1.0)
    return knee * e, e


def fefet_conductance(state: FeFETState, dvth: float = 0.0) -> float:
    """Small-signal channel conductance at the read gate voltage (S)."""
    p = state.params
    v_eff, _ = effective_overdrive(p.v_read - fefet_threshold(state, dvth), FEFET_SUBTHRESHOLD_SLOPE)
    return p.g_min + p.beta * v_eff


def fefet_as_mosfet(state: FeFETState, dvth: float = 0.0) -> MosfetParams:
    """Channel of the FeFET as an n-type MOSFET with polarization-set threshold."""
    p = state.params
    return MosfetParams(
        polarity="n",
        v_th=fefet_threshold(state, dvth),
        beta=p.beta,
        lambda_=0.0,
        subthreshold_slope=FEFET_SUBTHRESHOLD_SLOPE,
    )


# ---------------------------------------------------------------------------
# MOSFET
# ---------------------------------------------------------------------------

def _nmos_forward(vth, beta, lam, slope, vgs, vds):
    # vds >= 0; returns (I, dI/dvgs, dI/dvds)
    ve, dve = effective_overdrive(vgs - vth, slope)
    clm = 1.0 + lam * vds
    if vds < ve:
        i0 = beta * (ve * vds - 0.5 * vds * vds)
        di0_dve = beta * vds
        di0_dvds = beta * (ve - vds)
    else:
        i0 = 0.5 * beta * ve * ve
        di0_dve = beta * ve
        di0_dvds = 0.0
    return i0 * clm, di0_dve * dve * clm, di0_dvds * clm + i0 * lam


def _nmos(vth, beta, lam, slope, vg, vs, vd):
    # Returns (I_ds, dI/dvg, dI/dvs, dI/dvd) for a symmetric n-channel device.
    if vd >= vs:
        i, g_gs, g_ds = _nmos_forward(vth, beta, lam, slope, vg - vs, vd - vs)
        return i, g_gs, -g_gs - g_ds, g_ds
    i, g_gd, g_sd = _nmos_forward(vth, beta, lam, slope, vg - vd, vs - vd)
    return -i, -g_gd, -g_sd, g_gd + g_sd


def mosfet_current_derivs(params: MosfetParams, v_g: float, v_s: float, v_d: float):
    """Drain current (into drain, out of source) and its partials wrt (v_g, v_s, v_d)."""
    if params.polarity == "n":
        return _nmos(params.v_th, params.beta, params.lambda_, params.subthreshold_slope, v_g, v_s, v_d)
    i, dg, ds, dd = _nmos(abs(params.v_th), params.beta, params.lambda_,
                          params.subthreshold_slope, -v_g, -v_s, -v_d)
    return -i, dg, ds, dd


def mosfet_current(params: MosfetParams, v_g: float, v_s: float, v_d: float) -> float:
    """Drain current in A. Positive for a conducting NMOS, negative for a PMOS."""
    return mosfet_current_derivs(params, v_g, v_s, v_d)[0]


# ---------------------------------------------------------------------------
# Photodiode
# ---------------------------------------------------------------------------

def photodiode_delta_v(i_pd: float, t_int: float, pd: PhotodiodeParams, v_dd: float) -> float:
    """Photodiode node drop after integrating for ``t_int``; clamps at full discharge."""
    if i_pd < 0 or t_int < 0:
        raise ValueError("i_pd and t_int must be non-negative")
    return min((i_pd + pd.i_dark) * t_int / pd.c_pd, v_dd)
