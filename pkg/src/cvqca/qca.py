"""Variational phase learning: noisy gradient descent on the measured cost."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from .errors import ConfigError, InvalidParameterError, StudyError
from .gaussian_model import ModelParams, diff_quadrature_variance, wrap_phase
from .homodyne import CostEstimate, NoiseConfig, child_seed, cost_evaluator, predicted_cost_stderr
from .landscape import cost, cost_from_variance

__all__ = [
    "QcaConfig",
    "DESK_MODEL",
    "IterationRow",
    "QcaRunRecord",
    "PrecisionStats",
    "AnalyticEvaluator",
    "SampledEvaluator",
    "make_evaluator",
    "estimate_gradient",
    "detect_convergence",
    "convergence_sigma",
    "convergence_band",
    "qca_run",
    "precision_study",
    "time_to_solution_study",
    "barren_plateau_probe",
    "adaptive_run",
    "TableRow",
    "TABLE_COLUMNS",
    "squeezing_table",
    "table_ratios",
    "write_precision_table",
    "Scenario",
    "robustness_scenarios",
    "run_scenarios",
]

ESTIMATORS = ("trace", "chi2", "analytic")

Evaluator = Callable[[float], CostEstimate]

# Lossy, noisy-seed working point used as the default compilation target.
DESK_MODEL = ModelParams(r=0.74, epsilon=0.77, epsilon_prime=0.1, n_b_prime=0.21, phi_c=3.0)


@dataclass(frozen=True)
class QcaConfig:
    """One compilation run.

    ``model.phi_0`` is the hidden target and ``model.phi_c`` the initial
    control phase. ``eta_initial`` is in rad per (cost unit per rad).
    ``estimator`` picks how each measurement window is simulated: ``trace``
    synthesizes and processes a full voltage trace, ``chi2`` draws the
    direct-variance estimate from its exact sampling distribution, and
    ``analytic`` returns noiseless closed-form costs.
    """

    model: ModelParams = DESK_MODEL
    eta_initial: float = 0.5
    # a tenfold cut leaves the post-convergence relaxation time longer than
    # the remaining budget at desk scale, and the run mean keeps the approach
    eta_post_factor: float = 2.0
    max_iterations: int = 550
    fd_step: float = 0.01
    samples_per_iteration: int = 100_000
    convergence_sigma_multiple: float = 1.0
    noise: NoiseConfig = NoiseConfig()
    estimator: str = "trace"
    failure_multiple: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if not self.eta_initial > 0:
            raise ConfigError(f"eta_initial must be positive, got {self.eta_initial}")
        if not self.eta_post_factor > 0:
            raise ConfigError(f"eta_post_factor must be positive, got {self.eta_post_factor}")
        if not self.fd_step > 0:
            raise ConfigError(f"fd_step must be positive, got {self.fd_step}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ConfigError(f"max_iterations must be a positive integer, got {self.max_iterations}")
        if self.samples_per_iteration < 1000:
            raise ConfigError(f"samples_per_iteration must be >= 1000, got {self.samples_per_iteration}")
        if not self.convergence_sigma_multiple > 0:
            raise ConfigError("convergence_sigma_multiple must be positive")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"estimator must be one of {ESTIMATORS}, got {self.estimator!r}")

    def replace(self, **changes) -> "QcaConfig":
        return dataclasses.replace(self, **changes)

    def with_model(self, **changes) -> "QcaConfig":
        return dataclasses.replace(self, model=self.model.replace(**changes))


class AnalyticEvaluator:
    """Noiseless evaluator returning the closed-form cost."""

    def __init__(self, model: ModelParams):
        self.model = model

    def __call__(self, phi_c: float) -> CostEstimate:
        p = self.model.replace(phi_c=phi_c)
        v = diff_quadrature_variance(p)
        return CostEstimate(cost_from_variance(v), v, 0, 0.0, "analytic", 0.0)


class SampledEvaluator:
    """Noisy evaluator; every call consumes a fresh, seed-addressed window."""

    def __init__(self, model: ModelParams, n_samples: int, noise: NoiseConfig = NoiseConfig(), seed=0, exact_chi2=False):
        self.model = model
        self.n_samples = int(n_samples)
        self.noise = noise
        self.seed = seed
        self.exact_chi2 = exact_chi2
        self.calls = 0

    def __call__(self, phi_c: float) -> CostEstimate:
        p = self.model.replace(phi_c=phi_c)
        s = child_seed(self.seed, self.calls)
        self.calls += 1
        if self.exact_chi2:
            return self._chi2_window(p, s)
        return cost_evaluator(p, self.n_samples, self.noise, s)

    def _chi2_window(self, p: ModelParams, seed) -> CostEstimate:
        # (n-1) s^2 / var ~ chi2(n-1) for the mean-subtracted Gaussian trace
        rng = np.random.default_rng(seed)
        m2 = self.noise.gain_m**2
        var_v = 2.0 * m2 * diff_quadrature_variance(p) + self.noise.sigma_e_sq
        k = self.n_samples - 1
        var_d = var_v * rng.chisquare(k) / k
        sigma_sq = (var_d - self.noise.sigma_e_sq) / m2
        if not sigma_sq > 0:
            sigma_sq = np.finfo(float).tiny
        var_stderr = math.sqrt(2.0 / k) * var_d / (2.0 * m2)
        return CostEstimate.from_variance(sigma_sq / 2.0, var_stderr, self.n_samples, "direct-variance")


def make_evaluator(config: QcaConfig, seed=None) -> Evaluator:
    seed = config.seed if seed is None else seed
    if config.estimator == "analytic":
        return AnalyticEvaluator(config.model)
    return SampledEvaluator(
        config.model, config.samples_per_iteration, config.noise, seed, exact_chi2=config.estimator == "chi2"
    )


def estimate_gradient(evaluator: Evaluator, phi_c: float, fd_step: float) -> tuple[float, float]:
    """Central finite difference from two fresh windows; returns (gradient, stderr)."""
    if not fd_step > 0:
        raise InvalidParameterError(f"fd_step must be positive, got {fd_step}")
    plus = evaluator(phi_c + fd_step)
    minus = evaluator(phi_c - fd_step)
    grad = (plus.cost - minus.cost) / (2.0 * fd_step)
    err = math.hypot(plus.stderr, minus.stderr) / (2.0 * fd_step)
    return grad, err


def detect_convergence(history: Sequence[float], theoretical_min: float, sigma: float, multiple: float = 1.0) -> Optional[int]:
    """Index of the first cost at or below ``theoretical_min + multiple * sigma``.

    No debounce: a single crossing counts.
    """
    if not sigma > 0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")
    threshold = theoretical_min + multiple * sigma
    for i, c in enumerate(history):
        if c <= threshold:
            return i
    return None


def convergence_sigma(config: QcaConfig) -> float:
    """Standard error of one cost window at the analytic minimum."""
    at_min = config.model.with_delta_phi(0.0)
    return predicted_cost_stderr(at_min, config.samples_per_iteration, config.noise)


def convergence_band(config: QcaConfig) -> float:
    """Phase offset at which the analytic cost rises to the convergence threshold."""
    target = cost(config.model.with_delta_phi(0.0)) + config.convergence_sigma_multiple * convergence_sigma(config)
    g = lambda d: cost(config.model.with_delta_phi(d)) - target  # noqa: E731
    if g(math.pi) <= 0:
        return math.pi
    return float(optimize.brentq(g, 0.0, math.pi, xtol=1e-14))


@dataclass(frozen=True)
class IterationRow:
    index: int
    phi_c: float
    delta_phi: float
    cost: float
    cost_stderr: float
    gradient: float
    eta: float


@dataclass
class QcaRunRecord:
    iterations: list = field(default_factory=list)
    convergence_index: Optional[int] = None
    t_opt: Optional[int] = None
    post_convergence_mean_dphi: Optional[float] = None
    failed_to_train: bool = False
    stages: list = field(default_factory=list)
    error: Optional[str] = None

    @property
    def converged(self) -> bool:
        return self.convergence_index is not None

    @property
    def final_delta_phi(self) -> float:
        return self.iterations[-1].delta_phi

    @property
    def final_phi_c(self) -> float:
        last = self.iterations[-1]
        return last.phi_c - last.eta * last.gradient

    def delta_phi(self) -> np.ndarray:
        return np.array([row.delta_phi for row in self.iterations])

    def costs(self) -> np.ndarray:
        return np.array([row.cost for row in self.iterations])

    def summary(self) -> dict:
        return {
            "converged": self.converged,
            "t_opt": self.t_opt,
            "post_convergence_mean_dphi": self.post_convergence_mean_dphi,
            "failed_to_train": self.failed_to_train,
        }

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["iteration", "phi_c_rad", "delta_phi_rad", "cost", "cost_stderr", "gradient", "eta"])
            for row in self.iterations:
                writer.writerow(
                    [row.index]
                    + [f"{v:.17g}" for v in (row.phi_c, row.delta_phi, row.cost, row.cost_stderr, row.gradient, row.eta)]
                )
        return path

    def summary_json(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")
        return path


def qca_run(config: QcaConfig, evaluator: Optional[Evaluator] = None) -> QcaRunRecord:
    """Run the compiler loop for ``config.max_iterations`` iterations.

    Each iteration measures the cost at the current control phase, estimates
    the gradient, and steps ``phi_c`` against it. The first time the measured
    cost enters the band around the theoretical minimum, the learning rate is
    divided by ``eta_post_factor`` from the next iteration on.
    """
    evaluator = make_evaluator(config) if evaluator is None else evaluator
    model = config.model
    c_min = cost(model.with_delta_phi(0.0))
    sigma = convergence_sigma(config)
    threshold = c_min + config.convergence_sigma_multiple * sigma

    record = QcaRunRecord()
    phi_c = model.phi_c
    eta = config.eta_initial
    for k in range(int(config.max_iterations)):
        try:
            measured = evaluator(phi_c)
            grad, _ = estimate_gradient(evaluator, phi_c, config.fd_step)
        except Exception as exc:  # evaluator failure aborts with the partial record
            record.error = f"iteration {k}: {exc}"
            break
        record.iterations.append(
            IterationRow(k, phi_c, wrap_phase(phi_c - model.phi_0), measured.cost, measured.stderr, grad, eta)
        )
        phi_c = phi_c - eta * grad
        if record.convergence_index is None and measured.cost <= threshold:
            record.convergence_index = k
            record.t_opt = k
            eta = config.eta_initial / config.eta_post_factor

    if record.converged:
        tail = record.delta_phi()[record.convergence_index:]
        record.post_convergence_mean_dphi = float(np.mean(tail))
    elif record.iterations:
        limit = min(config.failure_multiple * convergence_band(config), math.pi / 2)
        record.failed_to_train = abs(record.final_delta_phi) > limit
    return record


@dataclass
class PrecisionStats:
    n_runs: int
    mean_of_means: float
    std_of_means: float
    per_run_means: list
    t_opts: list = field(default_factory=list)
    excluded: int = 0

    def __post_init__(self):
        if self.n_runs < 2:
            raise InvalidParameterError("precision statistics need at least 2 runs")

    @property
    def t_opt_median(self) -> Optional[float]:
        return float(statistics.median(self.t_opts)) if self.t_opts else None

    @property
    def standard_error(self) -> float:
        """Standard error of ``mean_of_means`` from the spread of the run means."""
        return float(np.std(self.per_run_means, ddof=1) / math.sqrt(len(self.per_run_means)))

    @classmethod
    def from_means(cls, means, t_opts=(), excluded=0) -> "PrecisionStats":
        means = [float(m) for m in means]
        arr = np.asarray(means)
        return cls(
            n_runs=len(means),
            mean_of_means=float(arr.mean()),
            std_of_means=float(math.sqrt(np.mean(arr**2))),
            per_run_means=means,
            t_opts=list(t_opts),
            excluded=excluded,
        )


def _run_seeds(config: QcaConfig, n_runs: int, seeds):
    if seeds is None:
        return [config.seed + i for i in range(n_runs)]
    seeds = list(seeds)
    if len(seeds) != n_runs:
        raise InvalidParameterError(f"got {len(seeds)} seeds for {n_runs} runs")
    return seeds


def _map(fn, items, n_jobs):
    if n_jobs == 1:
        return [fn(x) for x in items]
    from joblib import Parallel, delayed

    return Parallel(n_jobs=n_jobs)(delayed(fn)(x) for x in items)


def _seeded_run(config: QcaConfig):
    return qca_run(config)


def precision_study(config: QcaConfig, n_runs: int, seeds=None, n_jobs: int = 1) -> PrecisionStats:
    """Repeat the run and summarize post-convergence phase means.

    Runs that never converge are excluded and counted in ``excluded``.
    """
    if n_runs < 2:
        raise InvalidParameterError(f"n_runs must be >= 2, got {n_runs}")
    seeds = _run_seeds(config, n_runs, seeds)
    records = _map(_seeded_run, [config.replace(seed=s) for s in seeds], n_jobs)
    converged = [r for r in records if r.converged]
    if not converged:
        raise StudyError("no run converged", partial=records)
    if len(converged) < 2:
        raise StudyError("fewer than two runs converged", partial=records)
    return PrecisionStats.from_means(
        [r.post_convergence_mean_dphi for r in converged],
        t_opts=[r.t_opt for r in converged],
        excluded=len(records) - len(converged),
    )


def time_to_solution_study(config: QcaConfig, r_values: Sequence[float], seeds=(0,), n_jobs: int = 1):
    """Median ``t_opt`` per squeezing value; returns (rows, speedup ratio).

    The ratio is ``t_opt(min r) / t_opt(max r)``.
    """
    r_values = [float(r) for r in r_values]
    if len(set(r_values)) < 2:
        raise InvalidParameterError("time-to-solution study needs at least two distinct r values")
    rows = []
    for r in r_values:
        cfgs = [config.with_model(r=r).replace(seed=s) for s in seeds]
        records = _map(_seeded_run, cfgs, n_jobs)
        t = [rec.t_opt for rec in records if rec.converged]
        if not t:
            raise StudyError(f"no run converged at r={r}", partial=rows)
        rows.append((r, float(statistics.median(t))))
    by_r = dict(rows)
    ratio = by_r[min(r_values)] / max(by_r[max(r_values)], 1.0)
    return rows, ratio


def barren_plateau_probe(config: QcaConfig, n_trials: int, init: str = "fixed", n_jobs: int = 1) -> float:
    """Fraction of runs flagged ``failed_to_train``.

    ``init='fixed'`` keeps the configured initial phase; ``init='uniform'``
    draws the initial phase difference uniformly from ``(-pi, pi]`` per trial.
    """
    if n_trials < 10:
        raise InvalidParameterError(f"n_trials must be >= 10, got {n_trials}")
    cfgs = []
    for i in range(n_trials):
        cfg = config.replace(seed=config.seed + i)
        if init == "uniform":
            start = _uniform_start(config.seed, i)
            cfg = cfg.with_model(phi_c=config.model.phi_0 + start)
        elif init != "fixed":
            raise InvalidParameterError(f"unknown init policy {init!r}")
        cfgs.append(cfg)
    records = _map(_seeded_run, cfgs, n_jobs)
    return sum(r.failed_to_train for r in records) / n_trials


def _uniform_start(seed: int, index: int) -> float:
    rng = np.random.default_rng(child_seed(seed, 0x5EED, index))
    return float(np.pi - 2.0 * np.pi * rng.random())


def adaptive_run(config: QcaConfig, schedule: Sequence[float]) -> QcaRunRecord:
    """Compile stage by stage with increasing squeezing.

    Each stage starts from the previous stage's converged control phase
    (its post-convergence mean). The returned record is the last stage's,
    with all stage records in ``stages``.
    """
    schedule = [float(r) for r in schedule]
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise InvalidParameterError("squeezing schedule must be strictly increasing")
    if len(schedule) == 1:
        return qca_run(config.with_model(r=schedule[0]))
    stages = []
    phi_c = config.model.phi_c
    for i, r in enumerate(schedule):
        stage_cfg = config.with_model(r=r, phi_c=phi_c).replace(seed=config.seed + 7919 * i)
        rec = qca_run(stage_cfg)
        stages.append(rec)
        if i == len(schedule) - 1:
            break
        if not rec.converged:
            rec.stages = stages
            raise StudyError(f"adaptive stage {i} (r={r}) did not converge", partial=rec)
        phi_c = config.model.phi_0 + rec.post_convergence_mean_dphi
    final = stages[-1]
    final.stages = stages
    return final


@dataclass(frozen=True)
class TableRow:
    """One squeezing level of a precision table."""

    r: float
    stats: PrecisionStats

    def csv_row(self) -> list:
        t = self.stats.t_opt_median
        return [
            f"{self.r:.17g}",
            "" if t is None else f"{t:.17g}",
            f"{1e3 * self.stats.mean_of_means:.17g}",
            f"{1e3 * self.stats.std_of_means:.17g}",
        ]


TABLE_COLUMNS = ["r", "t_opt_median", "mean_dphi_mrad", "sigma_dphi_mrad"]


def squeezing_table(config: QcaConfig, r_values: Sequence[float], n_runs: int, seeds=None, n_jobs: int = 1) -> list:
    """Precision statistics and median time-to-solution at each squeezing level.

    Every level reuses the same seeds, so differences between rows come from
    the landscape rather than from the draw.
    """
    if not r_values:
        raise InvalidParameterError("need at least one r value")
    return [TableRow(float(r), precision_study(config.with_model(r=r), n_runs, seeds, n_jobs)) for r in r_values]


def table_ratios(rows: Sequence[TableRow]) -> tuple[float, float]:
    """(time-to-solution ratio, precision ratio) between the lowest and highest r."""
    lo = min(rows, key=lambda row: row.r)
    hi = max(rows, key=lambda row: row.r)
    speedup = lo.stats.t_opt_median / max(hi.stats.t_opt_median, 1.0)
    precision = lo.stats.std_of_means / hi.stats.std_of_means if hi.stats.std_of_means > 0 else math.inf
    return speedup, precision


def write_precision_table(rows: Sequence[TableRow], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TABLE_COLUMNS)
        for row in rows:
            writer.writerow(row.csv_row())
    return path


@dataclass(frozen=True)
class Scenario:
    label: str
    phi_0: float
    phi_c: float


def robustness_scenarios(
    control_phases=(math.pi, 0.78 * math.pi, 0.55 * math.pi),
    target_phases=(0.0, 0.33 * math.pi, 0.49 * math.pi),
    fixed_target: float = 0.0,
    fixed_control: float = math.pi,
) -> list:
    """Initial-control sweep at a fixed target, then a target sweep at a fixed initial control."""
    out = [Scenario(f"control_{i}", fixed_target, float(c)) for i, c in enumerate(control_phases)]
    out += [Scenario(f"target_{i}", float(t), fixed_control) for i, t in enumerate(target_phases)]
    return out


def run_scenarios(config: QcaConfig, scenarios: Sequence[Scenario], n_jobs: int = 1) -> list:
    """One run per scenario; scenario ``i`` uses seed ``config.seed + i``."""
    cfgs = [
        config.with_model(phi_0=s.phi_0, phi_c=s.phi_c).replace(seed=config.seed + i)
        for i, s in enumerate(scenarios)
    ]
    return list(_map(_seeded_run, cfgs, n_jobs))
