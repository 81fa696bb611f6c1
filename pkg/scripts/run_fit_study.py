"""Noisy landscape fits: parameter recovery and model selection by AIC.

Each trial draws a landscape from one of the two cost models, adds 0.5%
multiplicative noise, fits both and records which one AIC prefers.
"""

import argparse
import math

import numpy as np

from cvqca.estimation import FIT_BOUNDS, NoisyHomodyneModel, NoisySeedModel, compare_models, fit_cost_model
from cvqca.gaussian_model import ModelParams
from cvqca.homodyne import child_seed
from cvqca.landscape import landscape_sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=30)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    grid = np.linspace(-math.pi, math.pi, 61)

    truth = ModelParams(r=0.74, epsilon=0.77, epsilon_prime=0.6, n_b_prime=0.4)
    clean = landscape_sweep(truth, grid).cost
    ep, n_in = [], []
    for k in range(args.trials):
        noise = np.random.default_rng(child_seed(args.seed, k)).standard_normal(clean.size)
        fit = fit_cost_model(grid, clean * (1 + 0.005 * noise), bounds=FIT_BOUNDS[0.74], seed=k)
        ep.append(fit.epsilon_prime)
        n_in.append(fit.n_in)
    print(f"recovery at r=0.74 (true eps'=0.6, N_in=0.9): eps' {np.mean(ep):.3f} +- {np.std(ep):.3f},"
          f" N_in {np.mean(n_in):.3f} +- {np.std(n_in):.3f}")

    homodyne = NoisyHomodyneModel()
    models = (NoisySeedModel(), homodyne)
    hits = 0
    for k in range(args.trials):
        rng = np.random.default_rng(child_seed(args.seed, 1, k))
        name = models[k % 2].name
        r = (0.18, 0.35, 0.74)[(k // 2) % 3]
        e = rng.uniform(0.4, 0.6)
        if name == NoisySeedModel.name:
            y = landscape_sweep(ModelParams(r=r, epsilon=0.77, epsilon_prime=e, n_b_prime=rng.uniform(0.21, 0.7)), grid).cost
        else:
            y = -homodyne._peak(r, 0.77, e, rng.uniform(0.05, 0.3), rng.uniform(0.2, 0.5), grid)
        y = y * (1 + 0.005 * rng.standard_normal(y.size))
        best = compare_models([fit_cost_model(grid, y, model=m, seed=k) for m in models]).best
        hits += best == name
        print(f"trial {k:2d} r={r:<4g} truth {name:15s} selected {best}")
    print(f"true model selected in {hits}/{args.trials}")


if __name__ == "__main__":
    main()
