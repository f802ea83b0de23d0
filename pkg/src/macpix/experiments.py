"""One runner per experiment kind. Each returns the list of files it wrote."""
from __future__ import annotations

import math
import os

import numpy as np

from . import reporting as rp
from .area import AreaBudget, area_report
from .array import (
    ArrayConfig,
    expose_dvph,
    mac,
    new_array,
    program_array,
    readout_columns,
)
from .config import ExperimentConfig
from .device import (
    FeFETParams,
    fefet_conductance,
    new_fefet,
    program,
    remnant_polarization,
    reset_outer_loop,
)
from .encoding import GridSpec, input_to_dvph, weight_to_pva
from .metrics import (
    calibrate_against,
    cross_correlate,
    error_map,
    insensor_conv2d,
    normalize_map,
    pearson,
    simulated_current_map,
    true_product_map,
)
from .pixel import PixelConfig, new_pixel, run_cycle
from .variation import VariationSpec, run_mc


def _pixel_config(params) -> PixelConfig:
    return PixelConfig.from_dict(params.get("pixel", {}))


def _grid(params) -> GridSpec:
    return GridSpec(**params.get("grid", {}))


def _out(cfg: ExperimentConfig, name: str) -> str:
    return os.path.join(cfg.output_dir, name)


def run_device_sweep(cfg: ExperimentConfig) -> list[str]:
    p = cfg.parameters
    base = FeFETParams.from_dict(p.get("fefet", {}))
    pvas = np.linspace(p["pva_min"], p["pva_max"], p["pva_steps"])
    rows, g_series = [], {}
    for t in p["t_fe_list"]:
        fp = FeFETParams(**{**base.to_dict(), "t_fe": float(t)})
        reset = reset_outer_loop(new_fefet(fp), -2.0 * max(new_fefet(fp).domain_vc))
        gs = []
        for v in pvas:
            st = program(reset, float(v))
            g = fefet_conductance(st)
            gs.append(g)
            rows.append((float(t), float(v), st.f_up, remnant_polarization(st), g))
        g_series[f"t_fe = {t} nm"] = [g * 1e6 for g in gs]
    files = [rp.write_table(_out(cfg, "device_sweep.csv"),
                            ["t_fe_nm", "pva_V", "f_up", "p_r_uC_cm2", "g_fe_S"], rows)]
    if cfg.svg:
        files.append(rp.write_lines_svg(_out(cfg, "device_sweep.svg"), pvas, g_series,
                                        "PVA (V)", "G_FeFET (uS)", "FeFET conductance vs PVA"))
    return files


def run_pixel_cycle(cfg: ExperimentConfig) -> list[str]:
    p = cfg.parameters
    pc = _pixel_config(p)
    pixel = new_pixel(pc)
    rows = []
    for k in range(p["n_cycles"]):
        pva = p["pva"] if k in p["reprogram_cycles"] else None
        pixel, i_out = run_cycle(pc, pixel, pva, p["i_pd"], p["t_int"], 0.0, p["mode"])
        rows.append((k, pva is not None, pixel.pva if pixel.pva is not None else math.nan,
                     pc.v_dd - pixel.v_ph, remnant_polarization(pixel.fefet_state), i_out))
    return [rp.write_table(_out(cfg, "cycles.csv"),
                           ["cycle", "reprogrammed", "pva_V", "dvph_V", "p_r_uC_cm2", "i_out_amps"], rows)]


def run_fidelity_map(cfg: ExperimentConfig) -> list[str]:
    p = cfg.parameters
    pc, g = _pixel_config(p), _grid(p)
    truth_raw = true_product_map(g)
    sim_raw = simulated_current_map(g, pc)
    truth, sim = normalize_map(truth_raw), normalize_map(sim_raw)
    err = error_map(truth, sim)
    cal = calibrate_against(truth_raw, sim_raw)
    report = {"grid": g.to_dict(), **cal.to_dict()}
    files = [
        rp.write_map_csv(_out(cfg, "truth.csv"), truth),
        rp.write_map_csv(_out(cfg, "sim.csv"), sim),
        rp.write_map_csv(_out(cfg, "error.csv"), err),
        rp.write_map_csv(_out(cfg, "sim_raw.csv"), sim_raw),
        rp.write_json(_out(cfg, "report.json"), report),
    ]
    if cfg.svg:
        for name, vm, title in (("truth", truth, "normalized PVA x dV_ph"),
                                ("sim", sim, "normalized pixel current"),
                                ("error", err, "absolute error")):
            files.append(rp.write_heatmap_svg(_out(cfg, f"{name}.svg"), vm, title))
    return files


def encode_products(products, grid: GridSpec = GridSpec()):
    """Split PVA x dV_ph products two ways.

    ``raw``: voltages whose product equals each entry, for ideal-mode readout.
    ``encoded``: weight = input = sqrt(entry / max), mapped through the
    encoders into the calibrated operating box, for physical readout.
    """
    t = np.asarray(products, dtype=float)
    r = grid.pva_max / grid.dvph_max
    pva_raw = np.sqrt(t * r)
    dvph_raw = t / pva_raw
    w = np.sqrt(t / t.max())
    return (pva_raw, dvph_raw), (weight_to_pva(w, grid), input_to_dvph(w, grid))


def table1_physical_check(products, config: PixelConfig | None = None, grid: GridSpec = GridSpec()):
    """Physical column currents of the encoded product array against the calibrated prediction."""
    config = config or PixelConfig()
    _, (pva_e, dvph_e) = encode_products(products, grid)
    rows, cols = pva_e.shape
    arr = expose_dvph(program_array(new_array(ArrayConfig(rows, cols, config)), pva_e), dvph_e)
    physical = readout_columns(arr, "physical")
    cal = calibrate_against(true_product_map(grid), simulated_current_map(grid, config))
    truth_norm = pva_e * dvph_e / (grid.pva_max * grid.dvph_max)
    predicted = [float(np.sum(cal.predict_current(truth_norm[:, c]))) for c in range(cols)]
    rel = [abs(a - b) / abs(b) for a, b in zip(physical, predicted)]
    return {"physical": physical, "predicted": predicted, "rel_err": rel,
            "calibration": cal.to_dict()}


def run_array_mac(cfg: ExperimentConfig) -> list[str]:
    p = cfg.parameters
    pc, g = _pixel_config(p), _grid(p)
    files = []
    report: dict = {"mode": p["mode"]}
    if "weights" in p:
        w, x = np.asarray(p["weights"], float), np.asarray(p["inputs"], float)
        acfg = ArrayConfig(*w.shape, pc)
        cols = mac(acfg, w, x, p["mode"], grid=g, reference=p["reference"])
        report["oracle"] = [math.fsum(w[:, c] * x[:, c]) for c in range(w.shape[1])]
    else:
        if "products" in p:
            (pva, dvph), _ = encode_products(p["products"], g)
        else:
            pva, dvph = np.asarray(p["pva_matrix"], float), np.asarray(p["dvph_matrix"], float)
        arr = new_array(ArrayConfig(*pva.shape, pc))
        arr = expose_dvph(program_array(arr, pva), dvph, p["t_int"])
        cols = readout_columns(arr, p["mode"])
        report["pva_matrix"], report["dvph_matrix"] = pva, dvph
    report["column_currents"] = cols
    files.append(rp.write_column_currents(_out(cfg, "column_currents.csv"), cols))
    if p.get("physical_check") and "products" in p:
        chk = table1_physical_check(p["products"], pc, g)
        report["physical_check"] = chk
        files.append(rp.write_table(_out(cfg, "column_currents_physical.csv"),
                                    ["col_index", "i_out_amps", "predicted_amps", "rel_err"],
                                    [(i, a, b, e) for i, (a, b, e) in
                                     enumerate(zip(chk["physical"], chk["predicted"], chk["rel_err"]))]))
    files.append(rp.write_json(_out(cfg, "report.json"), report))
    return files


def run_montecarlo(cfg: ExperimentConfig) -> list[str]:
    p = cfg.parameters
    spec = VariationSpec(p["t_fe_nominal"], p["t_fe_pct"], p["dvth_fe"], p["dvth_xp"],
                         p["sigma_interpretation"], p["n_trials"], cfg.seed)
    rep = run_mc(spec, _pixel_config(p), p["pva"], p["dvph"], full_solve=p["full_solve"],
                 workers=p["workers"], bins=p["bins"])
    summary = {**rep.summary_dict(), "seed": spec.seed, "sigma_interpretation": spec.sigma_interpretation,
               "sigmas": dict(zip(("t_fe_nm", "dvth_fe_V", "dvth_xp_V"), spec.sigmas())),
               "histogram_g": {"counts": rep.g_summary.hist_counts, "edges": rep.g_summary.hist_edges},
               "histogram_p": {"counts": rep.p_summary.hist_counts, "edges": rep.p_summary.hist_edges}}
    files = [
        rp.write_json(_out(cfg, "mc_summary.json"), summary),
        rp.write_table(_out(cfg, "mc_samples.csv"),
                       ["trial", "t_fe_nm", "dvth_fe_V", "dvth_xp_V", "g_branch_S", "p_r_uC_cm2"],
                       [(i, s.t_fe, s.dvth_fe, s.dvth_xp, s.g_branch, s.p_r)
                        for i, s in enumerate(rep.samples)]),
    ]
    if cfg.svg:
        files.append(rp.write_histogram_svg(_out(cfg, "hist_g.svg"), rep.g_summary, "G_branch (S)",
                                            "conductance under variation"))
        files.append(rp.write_histogram_svg(_out(cfg, "hist_p.svg"), rep.p_summary, "P_R (uC/cm^2)",
                                            "remnant polarization under variation"))
    return files


def run_conv_demo(cfg: ExperimentConfig) -> list[str]:
    p = cfg.parameters
    rng = np.random.default_rng(cfg.seed)
    image = np.asarray(p["image"], float) if "image" in p else rng.random(tuple(p["image_size"]))
    kernel = np.asarray(p["kernel"], float) if "kernel" in p else rng.random(tuple(p["kernel_size"]))
    pc, g = _pixel_config(p), _grid(p)
    oracle = cross_correlate(image, kernel, p["stride"])
    report = {"image_shape": list(image.shape), "kernel": kernel, "stride": p["stride"],
              "differential": p["differential"]}
    files = [rp.write_table(_out(cfg, "oracle.csv"), [f"c{j}" for j in range(oracle.shape[1])], oracle)]
    for mode in p["modes"]:
        fm = insensor_conv2d(image, kernel, p["stride"], mode, config=pc, grid=g,
                             differential=p["differential"], workers=p["workers"])
        files.append(rp.write_table(_out(cfg, f"feature_{mode}.csv"),
                                    [f"c{j}" for j in range(fm.shape[1])], fm))
        report[f"pearson_{mode}"] = pearson(oracle, fm) if np.ptp(oracle) > 0 else None
    files.append(rp.write_json(_out(cfg, "report.json"), report))
    return files


def run_area(cfg: ExperimentConfig) -> list[str]:
    return [rp.write_json(_out(cfg, "area.json"), area_report(AreaBudget(**cfg.parameters)))]


RUNNERS = {
    "device-sweep": run_device_sweep,
    "pixel-cycle": run_pixel_cycle,
    "fidelity-map": run_fidelity_map,
    "array-mac": run_array_mac,
    "montecarlo": run_montecarlo,
    "conv-demo": run_conv_demo,
    "area": run_area,
}


def run_experiment(cfg: ExperimentConfig) -> list[str]:
    rp.ensure_dir(cfg.output_dir)
    return RUNNERS[cfg.kind](cfg)
