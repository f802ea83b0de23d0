"""Conductance spread under scaled process variation, fast and full-solve modes.

    python3 scripts/mc_scaling.py [--trials 2000]
"""
import argparse

from macpix.variation import VariationSpec, run_mc


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--full", action="store_true", help="solve the DC operating point per trial")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    spec = VariationSpec(n_trials=args.trials)
    print(f"{'scale':>6} {'mean_g (uS)':>12} {'std_g (uS)':>11} {'cv_g %':>7} {'skew':>6}")
    for f in (0.25, 0.5, 1.0, 2.0, 4.0):
        r = run_mc(spec.scaled(f), full_solve=args.full, workers=args.workers)
        print(f"{f:6.2f} {r.mean_g * 1e6:12.4f} {r.std_g * 1e6:11.4f} {100 * r.cv_g:7.2f} {r.skew_g:6.2f}")


if __name__ == "__main__":
    main()
