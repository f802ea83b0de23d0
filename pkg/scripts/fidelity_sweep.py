"""Sensitivity of the multiplication-fidelity map to the PMOS driver threshold and the
FeFET coercive-field spread. Useful when recalibrating the operating box.

    python3 scripts/fidelity_sweep.py
"""
import argparse
from dataclasses import replace

import numpy as np

from macpix.encoding import GridSpec
from macpix.metrics import error_stats, normalize_map, simulated_current_map, true_product_map
from macpix.pixel import PixelConfig


def fidelity(cfg, grid):
    rep = error_stats(normalize_map(true_product_map(grid)), normalize_map(simulated_current_map(grid, cfg)))
    return rep.mean_abs_err, rep.std_abs_err, rep.pearson


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--vth", type=float, nargs="+", default=[0.25, 0.30, 0.35, 0.40])
    ap.add_argument("--sigma", type=float, nargs="+", default=[0.14, 0.17, 0.20])
    args = ap.parse_args()
    base, grid = PixelConfig(), GridSpec()
    print(f"{'|vth_p|':>8} {'ec_sigma':>9} {'mean':>7} {'std':>7} {'pearson':>8}")
    for vth in args.vth:
        for sig in args.sigma:
            cfg = replace(base, xp=replace(base.xp, v_th=-vth), fefet=replace(base.fefet, e_c_sigma=sig))
            m, s, r = fidelity(cfg, grid)
            flag = "" if (m <= 0.20 and s <= 0.12 and r >= 0.90) else "  out of band"
            print(f"{vth:8.2f} {sig:9.2f} {m:7.3f} {s:7.3f} {r:8.3f}{flag}")


if __name__ == "__main__":
    main()
