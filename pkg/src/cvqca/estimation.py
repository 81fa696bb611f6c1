"""Parameter recovery from measured cost landscapes.

The squeezing parameter is never fitted directly. Writing ``R = exp(-2r)/2``,
the difference-quadrature variance at zero phase difference is
``V(R) = A R + B0 + C / R``; equating it to the measured minimum variance
gives a quadratic in ``R`` whose admissible root fixes ``r`` for any
candidate ``(epsilon', N_in)``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import optimize
from scipy.stats import qmc

from .errors import (
    FitConvergenceError,
    InvalidParameterError,
    MinimumNotBracketedError,
    MismatchedDataError,
    NoPhysicalRootError,
)
from .gaussian_model import ModelParams, diff_variance_profile
from .landscape import fwhm

__all__ = [
    "QuadraticCoeffs",
    "quadratic_coeffs",
    "solve_r",
    "estimate_min_variance",
    "min_variance_window",
    "MinVarianceWindow",
    "FitBounds",
    "FIT_BOUNDS",
    "CostModel",
    "NoisySeedModel",
    "NoisyHomodyneModel",
    "FitResult",
    "fit_cost_model",
    "fitted_curve",
    "aic",
    "ModelComparison",
    "compare_models",
]

log = logging.getLogger(__name__)

MEASURED_EPSILON = 0.77
MEASURED_N_IN = 0.71
_R_FLOOR = 1e-12


@dataclass(frozen=True)
class QuadraticCoeffs:
    """``a R^2 + b R + c = 0`` in ``R = exp(-2r)/2``."""

    a: float
    b: float
    c: float

    @property
    def discriminant(self) -> float:
        return self.b * self.b - 4.0 * self.a * self.c

    def roots(self) -> tuple[float, float]:
        """Both real roots in ascending order; raises if they are complex."""
        disc = self.discriminant
        if disc < 0:
            raise NoPhysicalRootError(f"complex roots (discriminant {disc:.3g})")
        sq = math.sqrt(disc)
        q = -0.5 * (self.b + math.copysign(sq, self.b))
        if q == 0.0:
            return (0.0, 0.0)
        r1, r2 = q / self.a, self.c / q
        return (min(r1, r2), max(r1, r2))


def _check_inputs(epsilon, epsilon_prime, n_in, measured_variance):
    if not 0 < epsilon <= 1:
        raise InvalidParameterError(f"epsilon must lie in (0, 1], got {epsilon}")
    if not 0 <= epsilon_prime <= 1:
        raise InvalidParameterError(f"epsilon_prime must lie in [0, 1], got {epsilon_prime}")
    if not n_in >= 0.5:
        raise InvalidParameterError(f"n_in must be >= 1/2, got {n_in}")
    if not measured_variance > 0:
        raise InvalidParameterError(f"measured variance must be positive, got {measured_variance}")


def quadratic_coeffs(
    epsilon: float, epsilon_prime: float, n_in: float, measured_variance: float, cos_mean: float = 1.0
) -> QuadraticCoeffs:
    """Coefficients for the variance averaged over phase offsets with mean cosine ``cos_mean``.

    The default ``cos_mean = 1`` is the variance at zero phase difference.
    Only the correlation terms depend on the phase, so a window average
    enters through the mean cosine alone.
    """
    _check_inputs(epsilon, epsilon_prime, n_in, measured_variance)
    if not -1.0 <= cos_mean <= 1.0:
        raise InvalidParameterError(f"cos_mean must lie in [-1, 1], got {cos_mean}")
    e, ep, v = epsilon, epsilon_prime, measured_variance
    s = math.sqrt(e * ep) * cos_mean
    a = (ep + e) * n_in / 2 + (ep + e) / 4 + s * (2 * n_in + 1) / 2
    b = (ep - e) * n_in / 2 + (e - ep) / 4 + (2 - ep - e) / 2 - 2 * v
    c = (ep + e) * n_in / 8 + (ep + e) / 16 - s * (2 * n_in + 1) / 8
    return QuadraticCoeffs(a, b, c)


def solve_r(
    epsilon: float,
    epsilon_prime: float,
    n_in: float,
    measured_variance: float,
    branch: str = "low",
) -> float:
    """Squeezing parameter reproducing ``measured_variance`` at zero phase difference.

    With unequal transmissivities the zero-phase variance is not monotone in
    ``r``: beyond an optimal squeezing the uncorrelated excess noise wins and
    the variance grows again, so two admissible roots can coexist.
    ``branch='low'`` picks the smaller ``r`` (the side where more squeezing
    still lowers the variance); ``branch='high'`` picks the other one.
    """
    if branch not in ("low", "high"):
        raise InvalidParameterError(f"branch must be 'low' or 'high', got {branch!r}")
    coeffs = quadratic_coeffs(epsilon, epsilon_prime, n_in, measured_variance)
    roots = coeffs.roots()
    # admit R a hair above 1/2 so vacuum-level inputs round to r = 0
    valid = [R for R in roots if 0.0 < R <= 0.5 * (1.0 + 1e-12)]
    if not valid:
        raise NoPhysicalRootError(
            f"no root with 0 < R <= 1/2 (roots {roots[0]:.6g}, {roots[1]:.6g}) for "
            f"epsilon={epsilon}, epsilon_prime={epsilon_prime}, n_in={n_in}, V={measured_variance}"
        )
    chosen = max(valid) if branch == "low" else min(valid)
    other = roots[1] if chosen == roots[0] else roots[0]
    log.debug("solve_r: kept R=%.12g, discarded R=%.12g", chosen, other)
    return max(0.0, -0.5 * math.log(2.0 * min(chosen, 0.5)))


def _relaxed_r(epsilon, epsilon_prime, n_in, measured_variance, cos_mean=1.0) -> tuple[float, bool]:
    """Continuous stand-in for :func:`solve_r` used inside the fit.

    Returns ``(r, exact)``. Where no admissible root exists the vertex or the
    nearest admissible endpoint is used, so the objective stays continuous and
    the optimizer can walk back into the feasible region.
    """
    q = quadratic_coeffs(epsilon, epsilon_prime, n_in, measured_variance, cos_mean)
    exact = True
    if q.discriminant < 0:
        R = -q.b / (2.0 * q.a)
        exact = False
    else:
        R = q.roots()[1]
    if not _R_FLOOR < R <= 0.5:
        exact = exact and R > 0.5 and R - 0.5 < 1e-12
        R = min(max(R, _R_FLOOR), 0.5)
    return -0.5 * math.log(2.0 * R), exact


# ---------------------------------------------------------------------------
# minimum-variance estimator


@dataclass(frozen=True)
class MinVarianceWindow:
    variance: float
    center: float
    half_width: float
    n_points: int
    fwhm: float
    points: tuple = ()


def _variance_from_cost(cost) -> np.ndarray:
    c = np.asarray(cost, dtype=float)
    if np.any(c >= 0):
        raise InvalidParameterError("costs must be negative")
    return 1.0 / (2.0 * math.pi * c * c)


def min_variance_window(delta_phi, variance=None, cost=None, fwhm_fraction: float = 0.12) -> MinVarianceWindow:
    """Average of the measured variance within ``fwhm_fraction/2 * FWHM`` of the empirical minimum."""
    if not 0 < fwhm_fraction < 1:
        raise InvalidParameterError(f"fwhm_fraction must lie in (0, 1), got {fwhm_fraction}")
    x = np.asarray(delta_phi, dtype=float)
    if variance is None and cost is None:
        raise InvalidParameterError("need variance or cost data")
    v = _variance_from_cost(cost) if variance is None else np.asarray(variance, dtype=float)
    c = -1.0 / np.sqrt(2.0 * math.pi * v) if cost is None else np.asarray(cost, dtype=float)
    if x.size != v.size or x.size != c.size or x.size < 3:
        raise InvalidParameterError("need at least three rows with matching columns")
    i0 = int(np.argmin(c))
    if i0 == 0 or i0 == x.size - 1:
        raise MinimumNotBracketedError(f"cost minimum sits on the grid edge at delta_phi={x[i0]:.4g}")
    width = fwhm(x, c)
    half = 0.5 * fwhm_fraction * width
    mask = np.abs(x - x[i0]) <= half
    mask[i0] = True
    return MinVarianceWindow(float(v[mask].mean()), float(x[i0]), half, int(mask.sum()), width, tuple(x[mask].tolist()))


def estimate_min_variance(delta_phi, variance=None, cost=None, fwhm_fraction: float = 0.12) -> float:
    return min_variance_window(delta_phi, variance, cost, fwhm_fraction).variance


# ---------------------------------------------------------------------------
# model contract


@dataclass(frozen=True)
class FitBounds:
    epsilon_prime: tuple[float, float] = (0.0, 0.6)
    n_in: tuple[float, float] = (MEASURED_N_IN, 10.0)

    def __post_init__(self):
        for name in ("epsilon_prime", "n_in"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise InvalidParameterError(f"{name} bounds must satisfy lower < upper, got {(lo, hi)}")
        if self.epsilon_prime[0] < 0 or self.epsilon_prime[1] > 1:
            raise InvalidParameterError("epsilon_prime bounds must lie within [0, 1]")
        if self.n_in[0] < 0.5:
            raise InvalidParameterError("n_in lower bound must be >= 1/2")


# per squeezing level used for the measured landscapes
FIT_BOUNDS = {
    0.18: FitBounds(epsilon_prime=(0.0, 0.7)),
    0.35: FitBounds(epsilon_prime=(0.0, 0.7)),
    0.74: FitBounds(epsilon_prime=(0.0, 0.6)),
}


class CostModel:
    """Parametric ``C(delta_phi; theta)`` with box bounds.

    Subclasses set ``name`` and ``param_names`` and implement ``bounds`` and
    ``evaluate``. ``evaluate`` returns the model costs plus a flag that is
    False when the squeezing constraint had to be relaxed. ``window`` lists
    the phase differences whose variances were averaged into ``v_min``; the
    constraint holds the model's average over the same points to ``v_min``.
    """

    name = "abstract"
    param_names: tuple = ()

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    def bounds(self, fit_bounds: FitBounds) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def evaluate(self, theta, delta_phi, v_min: float, epsilon: float, window=(0.0,)) -> tuple[np.ndarray, bool]:
        raise NotImplementedError

    def squeezing(self, theta, v_min: float, epsilon: float, window=(0.0,)) -> float:
        raise NotImplementedError


def _cost_curve(params: ModelParams, delta_phi) -> np.ndarray:
    return -1.0 / np.sqrt(2.0 * math.pi * diff_variance_profile(params, delta_phi))


class NoisySeedModel(CostModel):
    """Lossy probe with excess seed noise: free ``(epsilon', N_in)``."""

    name = "noisy-seed"
    param_names = ("epsilon_prime", "n_in")

    def bounds(self, fit_bounds):
        lo = np.array([fit_bounds.epsilon_prime[0], fit_bounds.n_in[0]])
        hi = np.array([fit_bounds.epsilon_prime[1], fit_bounds.n_in[1]])
        return lo, hi

    def squeezing(self, theta, v_min, epsilon, window=(0.0,)):
        return _relaxed_r(epsilon, theta[0], theta[1], v_min, float(np.mean(np.cos(window))))[0]

    def evaluate(self, theta, delta_phi, v_min, epsilon, window=(0.0,)):
        ep, n_in = float(theta[0]), float(theta[1])
        r, exact = _relaxed_r(epsilon, ep, n_in, v_min, float(np.mean(np.cos(window))))
        params = ModelParams(r=r, epsilon=epsilon, epsilon_prime=ep, n_b_prime=n_in - 0.5)
        return _cost_curve(params, delta_phi), exact


class NoisyHomodyneModel(CostModel):
    """Illustrative three-parameter alternative: two detection noise terms.

    Free ``(epsilon', nu, sigma_phi)`` with the seed noise held at its
    measured value. ``nu`` is excess white detector noise added to the
    difference variance (vacuum units). ``sigma_phi`` is Gaussian jitter of
    the local-oscillator phase inside one acquisition window, so the recorded
    marginal is a phase mixture and the cost is the jitter average of the
    pure-state cost. The exact form used for real detectors is not known;
    this stands in for the model contract.
    """

    name = "noisy-homodyne"
    param_names = ("epsilon_prime", "nu", "sigma_phi")

    def __init__(self, n_in: float = MEASURED_N_IN, nu_max: float = 0.5, sigma_max: float = 0.6, nodes: int = 24):
        self.n_in = n_in
        self.nu_max = nu_max
        self.sigma_max = sigma_max
        x, w = np.polynomial.hermite_e.hermegauss(nodes)
        self._nodes = x
        self._weights = w / w.sum()

    def bounds(self, fit_bounds):
        lo = np.array([fit_bounds.epsilon_prime[0], 0.0, 0.0])
        hi = np.array([fit_bounds.epsilon_prime[1], self.nu_max, self.sigma_max])
        return lo, hi

    def _params(self, epsilon, epsilon_prime, r):
        return ModelParams(r=r, epsilon=epsilon, epsilon_prime=epsilon_prime, n_b_prime=self.n_in - 0.5)

    def _peak(self, r, epsilon, epsilon_prime, nu, sigma, delta_phi):
        """Jitter-averaged marginal peak over an ``r`` grid or a ``delta_phi`` grid."""
        r = np.asarray(r, dtype=float)[..., None]
        n = np.sinh(r) ** 2
        nb = self.n_in - 0.5
        trace = 2.0 + 2.0 * epsilon_prime * (nb + (1.0 + nb) * n) + 2.0 * epsilon * (1.0 + nb) * n
        corr = 2.0 * math.sqrt(epsilon * epsilon_prime) * (1.0 + nb) * np.sqrt(n * (n + 1.0))
        d = np.asarray(delta_phi, dtype=float)[..., None] + sigma * self._nodes
        v = (trace - 2.0 * corr * np.cos(d)) / 4.0 + nu
        return (self._weights / np.sqrt(2.0 * math.pi * v)).sum(axis=-1)

    _R_GRID = np.linspace(0.0, 4.0, 401)

    def _window_variance(self, r, epsilon, ep, nu, sigma, window):
        # the variance a Gaussian fit to each window point's peak would report
        out = np.zeros(np.shape(r))
        for d in window:
            out = out + 1.0 / (2.0 * math.pi * self._peak(r, epsilon, ep, nu, sigma, d) ** 2)
        return out / len(window)

    def _solve(self, theta, v_min, epsilon, window=(0.0,)) -> tuple[float, bool]:
        ep, nu, sigma = (float(t) for t in theta)
        gaps = self._window_variance(self._R_GRID, epsilon, ep, nu, sigma, window) - v_min
        # jitter makes the variance non-monotone in r; stay on the falling side
        low = int(np.argmin(gaps))
        if gaps[low] > 0:
            return float(self._R_GRID[low]), False
        if gaps[0] <= 0:
            return 0.0, abs(gaps[0]) < 1e-12
        g = lambda r: float(self._window_variance(r, epsilon, ep, nu, sigma, window)) - v_min  # noqa: E731
        return float(optimize.brentq(g, 0.0, self._R_GRID[low], xtol=1e-14)), True

    def squeezing(self, theta, v_min, epsilon, window=(0.0,)):
        return self._solve(theta, v_min, epsilon, window)[0]

    def evaluate(self, theta, delta_phi, v_min, epsilon, window=(0.0,)):
        r, exact = self._solve(theta, v_min, epsilon, window)
        curve = self._peak(r, epsilon, float(theta[0]), float(theta[1]), float(theta[2]), delta_phi)
        return -curve.reshape(np.shape(delta_phi)), exact


# ---------------------------------------------------------------------------
# fitting


@dataclass
class FitResult:
    epsilon_prime: float
    n_in: float
    r: float
    rss: float
    n_points: int
    aic: float
    bounds_active: dict
    warnings: list = field(default_factory=list)
    model: str = NoisySeedModel.name
    params: dict = field(default_factory=dict)
    min_variance: float = float("nan")
    window_points: list = field(default_factory=lambda: [0.0])
    start_agreement: float = float("nan")
    data_digest: Optional[str] = None

    @property
    def n_b_prime(self) -> float:
        return self.n_in - 0.5

    @property
    def k(self) -> int:
        return len(self.params) if self.params else 2

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "epsilon_prime": self.epsilon_prime,
            "n_in": self.n_in,
            "n_b_prime": self.n_b_prime,
            "r": self.r,
            "rss": self.rss,
            "n_points": self.n_points,
            "aic": self.aic,
            "bounds_active": dict(self.bounds_active),
            "warnings": list(self.warnings),
            "params": dict(self.params),
            "min_variance": self.min_variance,
            "window_points": list(self.window_points),
            "start_agreement": self.start_agreement,
        }

    def to_json(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return path


def _digest(x, y) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(x, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(y, dtype="<f8").tobytes())
    return h.hexdigest()


def fit_cost_model(
    delta_phi,
    cost,
    epsilon: float = MEASURED_EPSILON,
    bounds: FitBounds = FitBounds(),
    model: Optional[CostModel] = None,
    variance=None,
    weights=None,
    fwhm_fraction: float = 0.12,
    n_starts: int = 16,
    seed: int = 0,
    window_consistent: bool = True,
) -> FitResult:
    """Bounded least-squares fit of a cost landscape with ``r`` tied to the minimum variance.

    ``weights`` (e.g. ``1/cost_stderr``) multiply the residuals; the default
    is unweighted. Start points are a scrambled Sobol sample of the bound box.
    """
    model = NoisySeedModel() if model is None else model
    x = np.asarray(delta_phi, dtype=float)
    y = np.asarray(cost, dtype=float)
    if x.size != y.size:
        raise InvalidParameterError("delta_phi and cost differ in length")
    if x.size < 10:
        raise InvalidParameterError(f"need at least 10 points, got {x.size}")
    if np.ptp(x) < math.pi - 1e-9:
        raise InvalidParameterError(f"data must span at least pi in delta_phi, spans {np.ptp(x):.3g}")
    if not 0 < epsilon <= 1:
        raise InvalidParameterError(f"epsilon must lie in (0, 1], got {epsilon}")
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != y.shape or np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise InvalidParameterError("weights must be positive, finite and match the data")

    window = min_variance_window(x, variance, y, fwhm_fraction)
    v_min = window.variance
    points = window.points if window_consistent else (0.0,)
    lo, hi = model.bounds(bounds)

    grid = np.concatenate([x, points])
    # scale of one data residual, so a 1% constraint violation costs about
    # as much as a 1% misfit at every point
    penalty_scale = math.sqrt(x.size) * float(np.mean(np.abs(w * y)))

    def residuals(theta):
        c, _ = model.evaluate(theta, grid, v_min, epsilon, points)
        v_window = float(np.mean(1.0 / (2.0 * math.pi * c[x.size:] ** 2)))
        violation = penalty_scale * (v_window / v_min - 1.0)
        return np.append(w * (c[: x.size] - y), violation)

    m = max(1, int(math.ceil(math.log2(max(n_starts, 1)))))
    sobol = qmc.Sobol(d=lo.size, scramble=True, seed=seed).random_base2(m)[:n_starts]
    starts = lo + sobol * (hi - lo)
    # keep starts strictly interior; trf needs feasible x0
    pad = 1e-9 * (hi - lo)
    starts = np.clip(starts, lo + pad, hi - pad)

    solutions = []
    for x0 in starts:
        try:
            sol = optimize.least_squares(residuals, x0, bounds=(lo, hi), method="trf", xtol=1e-12, ftol=1e-14, gtol=1e-14)
        except (ValueError, FloatingPointError):
            continue
        if np.all(np.isfinite(sol.x)) and np.isfinite(sol.cost):
            solutions.append(sol)
    if not solutions:
        raise FitConvergenceError(f"none of {len(starts)} starts produced a finite fit")

    best = min(solutions, key=lambda s: s.cost)
    rss = float(np.sum(best.fun[:-1] ** 2))
    span = hi - lo
    objective = float(2.0 * best.cost)
    near = [s for s in solutions if 2.0 * s.cost <= objective * (1 + 1e-6) + 1e-30]
    agree = [s for s in near if np.all(np.abs(s.x - best.x) <= 1e-3 * span)]
    agreement = len(agree) / len(near)

    theta = best.x
    _, exact = model.evaluate(theta, x, v_min, epsilon, points)
    r = model.squeezing(theta, v_min, epsilon, points)
    active = {}
    for i, name in enumerate(model.param_names):
        tol = 1e-6 * span[i]
        active[name] = bool(theta[i] - lo[i] <= tol or hi[i] - theta[i] <= tol)

    warnings = []
    if not exact:
        warnings.append("no admissible squeezing root at the solution; r was clipped")
    for name, flag in active.items():
        if flag:
            warnings.append(f"{name} is stuck at a bound")
    spacing = float(np.min(np.diff(np.sort(x))))
    if abs(window.center) > spacing:
        warnings.append(
            f"empirical minimum at delta_phi={window.center:.4g} is more than one grid step from the fitted minimum at 0"
        )
    if agreement < 1.0:
        warnings.append(f"only {agreement:.0%} of near-optimal starts agree on the minimizer")

    params = {name: float(theta[i]) for i, name in enumerate(model.param_names)}
    n_in = params.get("n_in", getattr(model, "n_in", float("nan")))
    return FitResult(
        epsilon_prime=params.get("epsilon_prime", float("nan")),
        n_in=float(n_in),
        r=float(r),
        rss=rss,
        n_points=int(x.size),
        aic=aic(model.n_params, int(x.size), rss) if rss > 0 else -math.inf,
        bounds_active=active,
        warnings=warnings,
        model=model.name,
        params=params,
        min_variance=v_min,
        window_points=list(points),
        start_agreement=agreement,
        data_digest=_digest(x, y),
    )


def fitted_curve(result: FitResult, delta_phi, epsilon: float = MEASURED_EPSILON, model: Optional[CostModel] = None) -> np.ndarray:
    """Model costs at ``delta_phi`` for a fit produced with the same model."""
    model = NoisySeedModel() if model is None else model
    theta = np.array([result.params[n] for n in model.param_names])
    return model.evaluate(theta, np.asarray(delta_phi, dtype=float), result.min_variance, epsilon, result.window_points)[0]


# ---------------------------------------------------------------------------
# model selection


def aic(k: int, n: int, rss: float) -> float:
    """``2k + n (1 + ln 2pi + ln(rss/n))`` for Gaussian residuals."""
    if not k >= 0:
        raise InvalidParameterError(f"k must be >= 0, got {k}")
    if not n >= 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    if not rss > 0:
        raise InvalidParameterError(f"rss must be positive, got {rss}")
    return 2.0 * k + n * (1.0 + math.log(2.0 * math.pi) + math.log(rss / n))


SIGNIFICANT_DELTA_AIC = 10.0


@dataclass(frozen=True)
class ModelComparison:
    ranking: tuple  # (model name, aic, delta_aic), best first
    flagged: tuple  # names with delta_aic >= 10
    tie: bool

    @property
    def best(self) -> str:
        return self.ranking[0][0]

    def to_dict(self) -> dict:
        return {
            "best": self.best,
            "tie": self.tie,
            "ranking": [{"model": n, "aic": a, "delta_aic": d} for n, a, d in self.ranking],
            "significantly_less_supported": list(self.flagged),
        }


def compare_models(fits: Sequence[FitResult], threshold: float = SIGNIFICANT_DELTA_AIC) -> ModelComparison:
    """Rank fits by AIC; flag any at least ``threshold`` above the best."""
    fits = list(fits)
    if len(fits) < 2:
        raise InvalidParameterError("need at least two fits to compare")
    if len({f.n_points for f in fits}) != 1:
        raise MismatchedDataError("fits use different numbers of data points")
    digests = {f.data_digest for f in fits if f.data_digest is not None}
    if len(digests) > 1:
        raise MismatchedDataError("fits were made on different data")
    order = sorted(range(len(fits)), key=lambda i: fits[i].aic)
    best = fits[order[0]].aic
    ranking = tuple((fits[i].model, fits[i].aic, fits[i].aic - best) for i in order)
    flagged = tuple(name for name, _, d in ranking if d >= threshold)
    tie = math.isclose(ranking[0][1], ranking[1][1], rel_tol=0.0, abs_tol=1e-9)
    return ModelComparison(ranking, flagged, tie)
