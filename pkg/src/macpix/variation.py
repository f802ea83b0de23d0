"""Monte Carlo process variation over FeCap thickness and threshold shifts.

Each trial draws its perturbations from a Philox stream keyed by
``(seed, trial_index)``, so a trial's sample does not depend on which
other trials run or in what order.
"""
from __future__ import annotations

import math
from bisect import bisect_left
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .device import stratified_quantiles
from .pixel import (
    PixelConfig,
    PixelState,
    Phase,
    branch_conductance_simplified,
    solve_branch_dc,
)
from .device import FeFETState, remnant_polarization

T_FE_FLOOR = 0.2  # nm


@dataclass(frozen=True)
class VariationSpec:
    t_fe_nominal: float = 2.0
    t_fe_pct: float = 0.09
    dvth_fe: float = 0.150
    dvth_xp: float = 0.150
    sigma_interpretation: str = "three_sigma"
    n_trials: int = 10_000
    seed: int = 20240601

    def __post_init__(self):
        if min(self.t_fe_pct, self.dvth_fe, self.dvth_xp) < 0:
            raise ValueError("variation magnitudes must be non-negative")
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.sigma_interpretation not in ("one_sigma", "three_sigma"):
            raise ValueError(f"unknown sigma_interpretation {self.sigma_interpretation!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def divisor(self) -> float:
        return 3.0 if self.sigma_interpretation == "three_sigma" else 1.0

    def sigmas(self) -> tuple[float, float, float]:
        """(sigma_t_fe [nm], sigma_dvth_fe [V], sigma_dvth_xp [V])."""
        d = self.divisor
        return (self.t_fe_nominal * self.t_fe_pct / d, self.dvth_fe / d, self.dvth_xp / d)

    def scaled(self, factor: float) -> "VariationSpec":
        return replace(self, t_fe_pct=self.t_fe_pct * factor,
                       dvth_fe=self.dvth_fe * factor, dvth_xp=self.dvth_xp * factor)


@dataclass(frozen=True)
class TrialSample:
    t_fe: float
    dvth_fe: float
    dvth_xp: float
    g_branch: float = math.nan
    p_r: float = math.nan


@dataclass(frozen=True)
class Summary:
    n: int
    mean: float
    std: float
    skewness: float
    hist_counts: tuple[int, ...]
    hist_edges: tuple[float, ...]


@dataclass(frozen=True)
class McReport:
    samples: tuple[TrialSample, ...]
    mean_g: float
    std_g: float
    mean_p: float
    std_p: float
    cv_g: float
    cv_p: float
    skew_g: float
    pva: float = 0.0
    dvph: float = 0.0
    g_summary: Summary | None = field(default=None, repr=False)
    p_summary: Summary | None = field(default=None, repr=False)

    def summary_dict(self) -> dict:
        return {
            "n_trials": len(self.samples),
            "pva": self.pva,
            "dvph": self.dvph,
            "mean_g": self.mean_g,
            "std_g": self.std_g,
            "cv_g": self.cv_g,
            "skew_g": self.skew_g,
            "mean_p": self.mean_p,
            "std_p": self.std_p,
            "cv_p": self.cv_p,
        }


def _trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    # Philox key is 128 bits: low word = seed, high word = trial index.
    return np.random.Generator(np.random.Philox(key=seed + (trial_index << 64)))


def sample_trial(spec: VariationSpec, trial_index: int) -> TrialSample:
    s_t, s_fe, s_xp = spec.sigmas()
    z = _trial_rng(spec.seed, trial_index).standard_normal(3)
    t_fe = max(spec.t_fe_nominal + s_t * float(z[0]), T_FE_FLOOR)
    return TrialSample(t_fe, s_fe * float(z[1]), s_xp * float(z[2]))


def summarize(values, bins: int = 40) -> Summary:
    """Mean, unbiased std, sample skewness and a histogram."""
    x = [float(v) for v in values]
    n = len(x)
    if n < 2:
        raise ValueError("need at least 2 samples")
    mean = math.fsum(x) / n
    dev = [v - mean for v in x]
    m2 = math.fsum(d * d for d in dev)
    std = math.sqrt(m2 / (n - 1))
    if m2 > 0:
        m3 = math.fsum(d * d * d for d in dev) / n
        skew = m3 / (m2 / n) ** 1.5
    else:
        skew = 0.0
    counts, edges = np.histogram(np.asarray(x), bins=bins)
    return Summary(n, mean, std, skew, tuple(int(c) for c in counts), tuple(float(e) for e in edges))


class _TrialEvaluator:
    """Fast per-trial FeFET + branch evaluation for a fixed pixel config."""

    def __init__(self, config: PixelConfig, pva: float, dvph: float, full_solve: bool):
        self.config = config
        self.pva = pva
        self.dvph = dvph
        self.full_solve = full_solve
        fp = config.fefet
        self._z = stratified_quantiles(fp.n_domains)

    def __call__(self, s: TrialSample) -> TrialSample:
        cfg = self.config
        fp = replace(cfg.fefet, t_fe=s.t_fe)
        # domain k switches iff t_fe * (mu + sigma * z_k) < pva
        thr = (self.pva / s.t_fe - fp.e_c_mean) / fp.e_c_sigma
        n_up = bisect_left(self._z, thr)
        ups = (True,) * n_up + (False,) * (fp.n_domains - n_up)
        vc = tuple(s.t_fe * (fp.e_c_mean + fp.e_c_sigma * z) for z in self._z)
        fe = FeFETState(fp, ups, vc)
        xp = replace(cfg.xp, v_th=cfg.xp.v_th - s.dvth_xp if cfg.xp.v_th < 0 else cfg.xp.v_th + s.dvth_xp)
        pixel = PixelState(Phase.READOUT, cfg.v_dd - self.dvph, fe, True, self.pva)
        if self.full_solve:
            op = solve_branch_dc(cfg, pixel, 0.0, dvth_fe=s.dvth_fe, xp=xp)
            g = op.i_out / self.dvph if self.dvph > 0 else 0.0
        else:
            g = branch_conductance_simplified(cfg, pixel, dvth_fe=s.dvth_fe, xp=xp)
        return replace(s, g_branch=g, p_r=remnant_polarization(fe))


def run_mc(spec: VariationSpec, config: PixelConfig | None = None, pva: float = 2.15,
           dvph: float = 0.7, *, full_solve: bool = False, workers: int = 1,
           bins: int = 40) -> McReport:
    """Run ``spec.n_trials`` perturbed programming+read trials.

    ``full_solve`` replaces the series-conductance estimate by the DC
    operating point (``g = I_out / dvph``). ``workers > 1`` evaluates
    trials on a thread pool; the report is identical either way.
    """
    if spec.n_trials < 2:
        raise ValueError("run_mc needs n_trials >= 2")
    config = config or PixelConfig()
    config = replace(config, fefet=replace(config.fefet, t_fe=spec.t_fe_nominal))
    ev = _TrialEvaluator(config, pva, dvph, full_solve)

    def work(i):
        try:
            return ev(sample_trial(spec, i))
        except Exception as exc:  # attach trial context
            raise RuntimeError(f"trial {i}: {exc}") from exc

    idx = range(spec.n_trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            samples = tuple(pool.map(work, idx, chunksize=256))
    else:
        samples = tuple(map(work, idx))

    gs = summarize([s.g_branch for s in samples], bins)
    ps = summarize([s.p_r for s in samples], bins)
    return McReport(
        samples=samples,
        mean_g=gs.mean, std_g=gs.std,
        mean_p=ps.mean, std_p=ps.std,
        cv_g=gs.std / gs.mean if gs.mean > 0 else math.nan,
        cv_p=ps.std / ps.mean if ps.mean > 0 else math.nan,
        skew_g=gs.skewness,
        pva=pva, dvph=dvph,
        g_summary=gs, p_summary=ps,
    )
