"""Homodyne sampling, voltage-trace synthesis and the two processing pipelines.

Voltage differences relate to the difference quadrature through the
shot-noise calibration ``v- = sqrt(2) m X-`` with ``m**2`` the shot-noise
variance of ``v-`` (electronic noise excluded).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import optimize, special

from .errors import (
    ConfigError,
    DegenerateFitError,
    InvalidParameterError,
    NonPositiveVarianceError,
)
from .gaussian_model import ModelParams, diff_quadrature_variance
from .landscape import cost_from_variance

__all__ = [
    "HomodyneTrace",
    "CostEstimate",
    "NoiseConfig",
    "sample_diff_quadrature",
    "synthesize_voltage_trace",
    "process_trace_histogram",
    "process_trace_direct",
    "cost_evaluator",
    "predicted_cost_stderr",
    "monte_carlo_sweep",
    "child_seed",
    "write_trace",
    "read_trace",
]

METHODS = ("histogram-fit", "direct-variance")


def child_seed(seed, *key: int) -> np.random.SeedSequence:
    """Deterministic, independent sub-stream of ``seed`` addressed by ``key``."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + key)
    return np.random.SeedSequence(seed, spawn_key=key)


@dataclass
class HomodyneTrace:
    samples: np.ndarray
    sigma_snl_sq: float
    sigma_e_sq: float = 0.0
    gain_m: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float).ravel()
        if self.samples.size == 0:
            raise InvalidParameterError("trace has no samples")
        if not self.sigma_e_sq >= 0:
            raise InvalidParameterError(f"sigma_e_sq must be >= 0, got {self.sigma_e_sq}")
        if not self.sigma_snl_sq > self.sigma_e_sq:
            raise InvalidParameterError(
                f"shot-noise variance {self.sigma_snl_sq} must exceed electronic noise {self.sigma_e_sq}"
            )

    @property
    def calibrated_snl(self) -> float:
        """Electronic-noise-corrected shot-noise variance of ``v-``."""
        return self.sigma_snl_sq - self.sigma_e_sq


@dataclass(frozen=True)
class CostEstimate:
    cost: float
    variance_x_minus: float
    n_samples: int
    stderr: float
    method: str
    variance_stderr: float = float("nan")

    @classmethod
    def from_variance(cls, variance, variance_stderr, n_samples, method):
        """Propagate a variance estimate and its standard error to the cost."""
        c = cost_from_variance(variance)
        stderr = abs(c) / (2.0 * variance) * variance_stderr
        return cls(c, float(variance), int(n_samples), float(stderr), method, float(variance_stderr))

    def to_row(self) -> list:
        return [self.method, self.n_samples, self.variance_x_minus, self.cost, self.stderr]


@dataclass(frozen=True)
class NoiseConfig:
    """Detection model used when turning X- samples into a processed estimate."""

    gain_m: float = 1.0
    mean_offset: float = 0.0
    sigma_e_sq: float = 0.0
    method: str = "direct-variance"
    bins: int = 128

    def __post_init__(self):
        if not self.gain_m > 0:
            raise ConfigError(f"gain_m must be positive, got {self.gain_m}")
        if not self.sigma_e_sq >= 0:
            raise ConfigError(f"sigma_e_sq must be >= 0, got {self.sigma_e_sq}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")


def sample_diff_quadrature(params: ModelParams, n: int, seed=None) -> np.ndarray:
    if n < 2:
        raise InvalidParameterError(f"need at least 2 samples, got {n}")
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, math.sqrt(diff_quadrature_variance(params)), size=int(n))


def synthesize_voltage_trace(
    x_samples, gain_m: float = 1.0, mean_offset: float = 0.0, sigma_e_sq: float = 0.0, seed=None
) -> HomodyneTrace:
    if not gain_m > 0:
        raise InvalidParameterError(f"gain_m must be positive, got {gain_m}")
    x = np.asarray(x_samples, dtype=float)
    v = gain_m * math.sqrt(2.0) * x + mean_offset
    if sigma_e_sq > 0:
        rng = np.random.default_rng(seed)
        v = v + rng.normal(0.0, math.sqrt(sigma_e_sq), size=v.shape)
    seed_meta = seed if isinstance(seed, (int, np.integer)) else None
    return HomodyneTrace(
        samples=v,
        sigma_snl_sq=gain_m**2 + sigma_e_sq,
        sigma_e_sq=sigma_e_sq,
        gain_m=gain_m,
        meta={"source": "simulated", "seed": seed_meta},
    )


def _gauss_bin_model(edges):
    def model(_, amplitude, mu, sigma):
        cdf = special.ndtr((edges - mu) / sigma)
        return amplitude * np.diff(cdf)

    return model


def process_trace_histogram(trace: HomodyneTrace, bins: int = 128, span: float = 6.0) -> CostEstimate:
    """Histogram pipeline: rescale, fit a normal to the counts, subtract electronic noise.

    The fit is weighted least squares on bin counts with Poisson (sqrt count)
    uncertainties; the model integrates the normal over each bin.
    """
    if bins < 16:
        raise InvalidParameterError(f"need at least 16 bins, got {bins}")
    scale = math.sqrt(trace.calibrated_snl)
    x = (trace.samples - trace.samples.mean()) / scale
    sd = float(x.std())
    if not sd > 0:
        raise DegenerateFitError("trace has zero variance")
    edges = np.linspace(-span * sd, span * sd, bins + 1)
    counts, _ = np.histogram(x, bins=edges)
    weights = np.sqrt(np.maximum(counts, 1.0))
    model = _gauss_bin_model(edges)
    try:
        popt, pcov = optimize.curve_fit(
            model, 0.5 * (edges[1:] + edges[:-1]), counts.astype(float), p0=(float(counts.sum()), 0.0, sd),
            sigma=weights, absolute_sigma=True,
        )
    except (RuntimeError, optimize.OptimizeWarning) as exc:
        raise DegenerateFitError(f"histogram fit failed: {exc}") from exc
    s = abs(float(popt[2]))
    if not np.all(np.isfinite(pcov)):
        raise DegenerateFitError("histogram fit covariance is not finite")
    s_err = math.sqrt(pcov[2, 2])
    sigma_sq = s * s - trace.sigma_e_sq / trace.calibrated_snl
    if not sigma_sq > 0:
        raise DegenerateFitError(f"corrected variance {sigma_sq:.3g} is not positive")
    return CostEstimate.from_variance(sigma_sq / 2.0, s * s_err, x.size, "histogram-fit")


def process_trace_direct(trace: HomodyneTrace) -> CostEstimate:
    """Moment pipeline: sample variance of the mean-subtracted voltages.

    The standard error uses the sample fourth moment, so no Gaussian
    assumption enters.
    """
    d = trace.samples - trace.samples.mean()
    n = d.size
    if n < 2:
        raise NonPositiveVarianceError("need at least two samples")
    d2 = d * d
    var_d = float(d2.sum() / (n - 1))
    m4 = float(np.mean(d2 * d2))
    var_of_var = max(m4 - var_d * var_d, 0.0) / n
    sigma_sq = (var_d - trace.sigma_e_sq) / trace.calibrated_snl
    if not sigma_sq > 0:
        raise NonPositiveVarianceError(f"corrected variance {sigma_sq:.3g} is not positive")
    stderr = math.sqrt(var_of_var) / trace.calibrated_snl / 2.0
    return CostEstimate.from_variance(sigma_sq / 2.0, stderr, n, "direct-variance")


def process_trace(trace: HomodyneTrace, method: str = "direct-variance", bins: int = 128) -> CostEstimate:
    if method == "histogram-fit":
        return process_trace_histogram(trace, bins=bins)
    if method == "direct-variance":
        return process_trace_direct(trace)
    raise InvalidParameterError(f"unknown method {method!r}")


def cost_evaluator(params: ModelParams, n_samples: int = 100_000, noise: NoiseConfig = NoiseConfig(), seed=None) -> CostEstimate:
    """One measured cost: sample X-, synthesize the voltage trace, process it."""
    if n_samples < 1000:
        raise InvalidParameterError(f"need at least 1000 samples per window, got {n_samples}")
    rng = np.random.default_rng(seed)
    x = sample_diff_quadrature(params, n_samples, rng)
    trace = synthesize_voltage_trace(x, noise.gain_m, noise.mean_offset, noise.sigma_e_sq, rng)
    return process_trace(trace, noise.method, noise.bins)


def predicted_cost_stderr(params: ModelParams, n_samples: int, noise: NoiseConfig = NoiseConfig()) -> float:
    """Delta-method standard error of the direct-variance cost estimate."""
    v = diff_quadrature_variance(params)
    m2 = noise.gain_m**2
    var_d = 2.0 * m2 * v + noise.sigma_e_sq
    var_stderr = math.sqrt(2.0 / (n_samples - 1)) * var_d / (2.0 * m2)
    return abs(cost_from_variance(v)) / (2.0 * v) * var_stderr


def monte_carlo_sweep(n_samples: int, noise: NoiseConfig = NoiseConfig(), seed=0):
    """Callable for :func:`cvqca.landscape.landscape_sweep` Monte Carlo mode."""

    def evaluate(params: ModelParams, index: int) -> CostEstimate:
        return cost_evaluator(params, n_samples, noise, child_seed(seed, index))

    return evaluate


def _sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def write_trace(trace: HomodyneTrace, path) -> Path:
    """Write little-endian float64 samples plus a JSON calibration sidecar."""
    path = Path(path)
    trace.samples.astype("<f8").tofile(path)
    sidecar = {
        "sigma_snl_sq": trace.sigma_snl_sq,
        "sigma_e_sq": trace.sigma_e_sq,
        "gain_m": trace.gain_m,
        "seed": trace.meta.get("seed"),
        "source": trace.meta.get("source", "ingested"),
    }
    _sidecar_path(path).write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return path


def read_trace(path, sidecar=None) -> HomodyneTrace:
    """Load a binary (``.bin``/other) or CSV (one sample per line) trace."""
    path = Path(path)
    sidecar = Path(sidecar) if sidecar is not None else _sidecar_path(path)
    if not sidecar.exists():
        raise ConfigError(f"calibration sidecar {sidecar} not found")
    try:
        meta = json.loads(sidecar.read_text())
        snl = float(meta["sigma_snl_sq"])
        sig_e = float(meta.get("sigma_e_sq", 0.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"calibration sidecar {sidecar} is missing sigma_snl_sq") from exc
    if path.suffix.lower() == ".csv":
        samples = _read_csv_samples(path)
    else:
        samples = np.fromfile(path, dtype="<f8")
    gain = meta.get("gain_m")
    try:
        return HomodyneTrace(
            samples=samples,
            sigma_snl_sq=snl,
            sigma_e_sq=sig_e,
            gain_m=None if gain is None else float(gain),
            meta={"source": meta.get("source", "ingested"), "seed": meta.get("seed")},
        )
    except InvalidParameterError as exc:
        raise ConfigError(f"invalid calibration in {sidecar}: {exc}") from exc


def _read_csv_samples(path: Path) -> np.ndarray:
    values = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                values.append(float(text.split(",")[0]))
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise ConfigError(f"{path}: row {lineno} is not a number: {text!r}") from None
    return np.asarray(values, dtype=float)
