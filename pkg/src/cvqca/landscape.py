"""Cost function, its expansions, the seeded-coherent variant and sweeps."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidParameterError
from .gaussian_model import ModelParams, diff_quadrature_variance, homodyne_quadratic_form

__all__ = [
    "cost",
    "cost_from_variance",
    "normalized_cost",
    "quadratic_coefficient_f",
    "SeededParams",
    "seeded_cost",
    "seeded_expansion_coefficients",
    "LandscapeTable",
    "landscape_sweep",
    "fwhm",
]


def cost_from_variance(variance: float) -> float:
    """Negative peak of a zero-mean normal density with the given variance."""
    if not variance > 0:
        raise InvalidParameterError(f"variance must be positive, got {variance}")
    return -1.0 / math.sqrt(2.0 * math.pi * variance)


def cost(params: ModelParams) -> float:
    """``-sqrt(2 / (pi (trA + 2 A12)))``: minus the X- density at the origin."""
    return -math.sqrt(2.0 / (math.pi * homodyne_quadratic_form(params).sum_weight))


def normalized_cost(params: ModelParams) -> float:
    """Cost divided by the magnitude of its value at zero phase difference."""
    if params.r <= 0:
        raise InvalidParameterError("normalized cost requires r > 0")
    anchor = cost(params.with_delta_phi(0.0))
    return cost(params) / abs(anchor)


def quadratic_coefficient_f(n_photons: float) -> float:
    """Curvature of the normalized ideal cost at its minimum, as a function of N."""
    if n_photons < 0:
        raise InvalidParameterError(f"photon number must be >= 0, got {n_photons}")
    g = math.sqrt(n_photons * (n_photons + 1.0))
    return g * (2.0 * g + 2.0 * n_photons + 1.0)


@dataclass(frozen=True)
class SeededParams:
    """Pure TMSS seeded with real coherent amplitude ``alpha`` in both modes."""

    r: float = 0.0
    alpha: float = 0.0
    phi_0: float = 0.0
    phi_c: float = 0.0

    def __post_init__(self):
        for name in ("r", "alpha", "phi_0", "phi_c"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")
        if self.r < 0:
            raise InvalidParameterError(f"r must be >= 0, got {self.r}")

    @property
    def energy(self) -> float:
        """Mean photon number per mode, ``alpha^2 e^{2r} + sinh^2 r``."""
        return self.alpha**2 * math.exp(2 * self.r) + math.sinh(self.r) ** 2

    @property
    def delta_phi(self) -> float:
        return self.phi_c - self.phi_0


def seeded_cost(params: SeededParams) -> float:
    """Normalized seeded cost ``-pi * P(w, w)`` with ``w = sqrt(2) e^r alpha``.

    ``1/pi`` is the global maximum of the homodyne density (reached at
    ``phi_c = phi_0 = 0``), so the result lies in ``[-1, 0)``.
    """
    r, alpha = params.r, params.alpha
    c2, s2 = math.cosh(2 * r), math.sinh(2 * r)
    dphi = params.delta_phi
    det = 1.0 + (s2 * math.sin(dphi)) ** 2
    # w - v with 1 - cos(x) written as 2 sin^2(x/2) to keep small-angle precision
    scale = math.sqrt(2.0) * math.exp(r) * alpha * 2.0
    d1 = scale * math.sin(params.phi_c / 2) ** 2
    d2 = scale * math.sin(params.phi_0 / 2) ** 2
    quad = c2 * (d1 * d1 + d2 * d2) - 2.0 * s2 * math.cos(dphi) * d1 * d2
    return -math.exp(-quad / det) / math.sqrt(det)


def seeded_expansion_coefficients(params: SeededParams) -> tuple[float, float]:
    """Leading ``dphi^2`` coefficient and the ``alpha^2`` part of the ``dphi^4`` one.

    Valid with the target phase at zero.
    """
    r = params.r
    quadratic = 2.0 * math.cosh(r) ** 2 * math.sinh(r) ** 2
    quartic = params.alpha**2 * (1.0 + math.cosh(4 * r) + math.sinh(4 * r)) / 4.0
    return quadratic, quartic


@dataclass
class LandscapeTable:
    delta_phi: np.ndarray
    cost: np.ndarray
    variance: np.ndarray
    cost_stderr: Optional[np.ndarray] = None

    def __post_init__(self):
        self.delta_phi = np.asarray(self.delta_phi, dtype=float)
        self.cost = np.asarray(self.cost, dtype=float)
        self.variance = np.asarray(self.variance, dtype=float)
        if self.cost_stderr is not None:
            self.cost_stderr = np.asarray(self.cost_stderr, dtype=float)
        n = len(self.delta_phi)
        if n == 0:
            raise InvalidParameterError("landscape table is empty")
        if len(self.cost) != n or len(self.variance) != n:
            raise InvalidParameterError("landscape columns differ in length")
        if np.any(np.diff(self.delta_phi) <= 0):
            raise InvalidParameterError("delta_phi must be strictly increasing")

    def __len__(self):
        return len(self.delta_phi)

    def to_csv(self, path) -> Path:
        path = Path(path)
        header = ["delta_phi_rad", "cost", "variance"]
        if self.cost_stderr is not None:
            header.append("cost_stderr")
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for i in range(len(self)):
                row = [self.delta_phi[i], self.cost[i], self.variance[i]]
                if self.cost_stderr is not None:
                    row.append(self.cost_stderr[i])
                writer.writerow([f"{v:.17g}" for v in row])
        return path


def landscape_sweep(base: ModelParams, grid: Sequence[float], mc=None) -> LandscapeTable:
    """Cost and X- variance at each phase difference of ``grid``.

    ``mc`` optionally supplies a callable ``mc(params, index) -> CostEstimate``
    (see :func:`cvqca.homodyne.monte_carlo_sweep`); estimates then replace the
    analytic values and carry their standard errors.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise InvalidParameterError("sweep grid must be a non-empty 1-D sequence")
    if np.any(np.diff(grid) <= 0):
        raise InvalidParameterError("sweep grid must be sorted and strictly increasing")
    points = [base.with_delta_phi(d) for d in grid]
    if mc is None:
        costs = [cost(p) for p in points]
        variances = [diff_quadrature_variance(p) for p in points]
        return LandscapeTable(grid, costs, variances)
    estimates = [mc(p, i) for i, p in enumerate(points)]
    return LandscapeTable(
        grid,
        [e.cost for e in estimates],
        [e.variance_x_minus for e in estimates],
        [e.stderr for e in estimates],
    )


def fwhm(x, y) -> float:
    """Full width at half depth of a dip in ``y`` (minimum below the maximum).

    Crossings are located by linear interpolation on either side of the
    minimum; if a side never reaches half depth, the width is measured from
    the grid edge.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    i0 = int(np.argmin(y))
    top = float(np.max(y))
    half = 0.5 * (y[i0] + top)

    def crossing(indices):
        prev = i0
        for i in indices:
            if y[i] >= half:
                t = (half - y[prev]) / (y[i] - y[prev])
                return x[prev] + t * (x[i] - x[prev])
            prev = i
        return x[prev]

    left = crossing(range(i0 - 1, -1, -1))
    right = crossing(range(i0 + 1, len(x)))
    return float(right - left)
