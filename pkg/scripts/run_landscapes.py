"""Cost landscapes for an ideal family and the lossy desk model.

Writes one CSV per squeezing level with exact and sampled cost.
"""

import argparse
import csv
import math
from pathlib import Path

import numpy as np

from cvqca.qca import DESK_MODEL
from cvqca.gaussian_model import ModelParams
from cvqca.landscape import landscape_sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("out/landscapes"))
    ap.add_argument("--points", type=int, default=201)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    grid = np.linspace(-math.pi, math.pi, args.points)
    cases = [(f"ideal_r{r}", ModelParams.ideal(r)) for r in (0.01, 0.4, 1.5, 2.5)]
    cases += [(f"desk_r{r}", DESK_MODEL.replace(r=r, phi_c=0.0)) for r in (0.18, 0.35, 0.74)]
    for name, params in cases:
        cost = landscape_sweep(params, grid).cost
        path = args.out / f"{name}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["delta_phi", "cost"])
            w.writerows((f"{x:.17g}", f"{c:.17g}") for x, c in zip(grid, cost))
        spread = (cost.max() - cost.min()) / abs(cost.min())
        print(f"{name:12s} min {cost.min():+.5f} max {cost.max():+.5f} relative spread {spread:.3e}")


if __name__ == "__main__":
    main()
