"""Run every canned recipe (with SVG output) and print a one-line digest per recipe.

    python3 scripts/reproduce_all.py [--out out] [--no-svg]
"""
import argparse
import json
import os
import time

from macpix.config import RECIPES, recipe, validate_config
from macpix.experiments import run_experiment


def digest(name, out):
    if name == "fig3":
        r = json.load(open(os.path.join(out, "report.json")))["raw"]
        return f"mean={r['mean_abs_err']:.3f} std={r['std_abs_err']:.3f} pearson={r['pearson']:.3f}"
    if name == "fig4c":
        r = json.load(open(os.path.join(out, "report.json")))
        cols = ", ".join(f"{c:.4g}" for c in r["column_currents"])
        rel = ", ".join(f"{e:.3f}" for e in r["physical_check"]["rel_err"])
        return f"ideal columns [{cols}]  physical rel err [{rel}]"
    if name == "fig5":
        r = json.load(open(os.path.join(out, "mc_summary.json")))
        return f"mean_g={r['mean_g']:.4g} S std_g={r['std_g']:.3g} S cv_g={100 * r['cv_g']:.2f}%"
    if name == "table2":
        r = json.load(open(os.path.join(out, "area.json")))
        return (f"penalty={r['total_penalty_um2']} um^2 ({r['penalty_fraction_pct']:.3f}%), "
                f"fill factor -{r['fill_factor_reduction_pct']:.2f}%")
    if name == "conv-demo":
        r = json.load(open(os.path.join(out, "report.json")))
        return f"pearson physical={r['pearson_physical']:.4f}"
    return ""


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="out")
    ap.add_argument("--no-svg", action="store_true")
    args = ap.parse_args()
    for name in sorted(RECIPES):
        doc = recipe(name)
        doc["output_dir"] = os.path.join(args.out, name)
        doc["svg"] = not args.no_svg
        cfg, errors, _ = validate_config(doc)
        if errors:
            raise SystemExit(f"{name}: {errors}")
        t0 = time.perf_counter()
        files = run_experiment(cfg)
        print(f"{name:10s} {time.perf_counter() - t0:6.2f}s {len(files):2d} files  {digest(name, cfg.output_dir)}")


if __name__ == "__main__":
    main()
