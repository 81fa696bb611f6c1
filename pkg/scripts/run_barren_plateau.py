"""Failure-to-train fraction versus squeezing.

Lossy desk optics start from the fixed 3 rad offset; ideal optics at large
r start uniformly over the circle, where the landscape away from the dip
is flat to many digits.
"""

import argparse

from cvqca.gaussian_model import ModelParams
from cvqca.qca import QcaConfig, barren_plateau_probe


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=40)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    lossy = QcaConfig(estimator="chi2")
    for r in (0.18, 0.35, 0.74):
        f = barren_plateau_probe(lossy.with_model(r=r), args.trials, "fixed", args.jobs)
        print(f"desk  r={r:<4g} fixed start    failure {f:.2f}")
    for r in (1.0, 2.0, 3.0):
        ideal = QcaConfig(estimator="chi2", model=ModelParams.ideal(r, 3.0))
        f = barren_plateau_probe(ideal, args.trials, "uniform", args.jobs)
        print(f"ideal r={r:<4g} uniform start  failure {f:.2f}")


if __name__ == "__main__":
    main()
