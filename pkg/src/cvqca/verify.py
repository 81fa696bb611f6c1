"""Desk-scale self-check: closed forms against independent oracles.

Each check reports the worst measured deviation next to its tolerance.
Monte Carlo checks use ``mc_tolerance`` (relative); everything else is
deterministic and uses fixed tolerances.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .estimation import quadratic_coeffs, solve_r
from .gaussian_model import (
    ModelParams,
    covariance_from_symplectic,
    diff_quadrature_variance,
    homodyne_quadratic_form,
    marginal_diff_density,
    symplectic_form,
    tmss_covariance,
    wigner_marginal_oracle,
)
from .homodyne import child_seed, cost_evaluator, NoiseConfig
from .landscape import (
    SeededParams,
    cost,
    normalized_cost,
    quadratic_coefficient_f,
    seeded_cost,
)
from .qca import AnalyticEvaluator, estimate_gradient

__all__ = ["CheckResult", "VerifyReport", "run_verify", "random_params"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""
    seconds: float = 0.0


@dataclass(frozen=True)
class VerifyReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [asdict(c) for c in self.checks]}

    def lines(self) -> list:
        out = []
        for c in self.checks:
            tag = "PASS" if c.passed else "FAIL"
            out.append(f"{tag}  {c.name}: measured {c.measured:.3e} (tolerance {c.tolerance:.1e}) {c.detail}".rstrip())
        return out


def random_params(rng: np.random.Generator) -> ModelParams:
    """Draw from r in [0, 1.5], transmissivities in [0.3, 1], N'_B in [0, 2], any phase."""
    return ModelParams(
        r=rng.uniform(0.0, 1.5),
        epsilon=rng.uniform(0.3, 1.0),
        epsilon_prime=rng.uniform(0.3, 1.0),
        n_b_prime=rng.uniform(0.0, 2.0),
        phi_0=0.0,
        phi_c=math.pi - 2.0 * math.pi * rng.random(),
    )


def _flipped_density(x, params: ModelParams) -> float:
    # deliberately wrong closed form: sign of the coupling term reversed
    form = homodyne_quadratic_form(params)
    weight = form.trace - 2.0 * form.off_diagonal
    return math.sqrt(2.0 / (math.pi * weight)) * math.exp(-2.0 * x * x / weight)


def _timed(name: str, tol: float, fn: Callable[[], tuple]) -> CheckResult:
    t0 = time.perf_counter()
    measured, detail = fn()
    return CheckResult(name, bool(measured <= tol), float(measured), tol, detail, time.perf_counter() - t0)


def run_verify(
    seed: int = 0,
    oracle_points: int = 20,
    mc_samples: int = 200_000,
    mc_tolerance: float = 0.02,
    mutation: str = "",
) -> VerifyReport:
    rng = np.random.default_rng(child_seed(seed, 1))
    density = _flipped_density if mutation == "flip-a12" else marginal_diff_density
    checks = []

    def oracle():
        worst = 0.0
        for _ in range(oracle_points):
            p = random_params(rng)
            x = rng.normal(0.0, math.sqrt(diff_quadrature_variance(p)))
            worst = max(worst, abs(density(x, p) - wigner_marginal_oracle(x, p)))
        return worst, f"{oracle_points} random points"

    checks.append(_timed("marginal density vs Wigner integration", 1e-6, oracle))

    def symplectic():
        worst = 0.0
        for _ in range(20):
            p = random_params(rng)
            worst = max(worst, float(np.max(np.abs(tmss_covariance(p) - covariance_from_symplectic(p)))))
        return worst, "closed-form covariance vs symplectic construction"

    checks.append(_timed("covariance construction", 1e-12, symplectic))

    def uncertainty():
        omega = symplectic_form(2)
        worst = 0.0
        for _ in range(50):
            ev = np.linalg.eigvalsh(tmss_covariance(random_params(rng)) + 0.5j * omega)
            worst = max(worst, -float(ev.min()))
        return max(worst, 0.0), "most negative eigenvalue of cov + i Omega/2"

    checks.append(_timed("uncertainty relation", 1e-10, uncertainty))

    def normalization():
        worst = 0.0
        for _ in range(5):
            p = random_params(rng)
            mass, _ = integrate.quad(lambda x: marginal_diff_density(x, p), -np.inf, np.inf, epsabs=1e-12)
            worst = max(worst, abs(mass - 1.0))
        return worst, "1-D quadrature of the marginal"

    checks.append(_timed("normalization", 1e-6, normalization))

    def anchors():
        errs = [abs(cost(ModelParams.vacuum()) + 1.0 / math.sqrt(math.pi))]
        for r in (0.18, 0.35, 0.74):
            errs.append(abs(diff_quadrature_variance(ModelParams.ideal(r)) - math.exp(-2 * r) / 2))
        return max(errs), "vacuum cost and ideal minimum variances"

    checks.append(_timed("analytic anchors", 1e-12, anchors))

    def gradient():
        worst = 0.0
        for r, d in ((0.35, 0.5), (0.74, -1.2), (0.18, 2.0)):
            p = ModelParams.ideal(r, d)
            form = homodyne_quadratic_form(p)
            # dC/dphi_c with V = (trA + 2 A12)/4 and A12 proportional to cos
            dv = -form.off_diagonal * math.tan(d) / 2.0
            exact = cost(p) * (-0.5) * dv / diff_quadrature_variance(p)
            g, _ = estimate_gradient(AnalyticEvaluator(p), p.phi_c, 1e-3)
            worst = max(worst, abs(g / exact - 1.0))
        return worst, "central difference vs analytic derivative (relative)"

    checks.append(_timed("gradient estimator", 1e-4, gradient))

    def expansion():
        worst = 0.0
        h = 1e-3
        for n in (0.03, 0.1, 0.5, 1.0):
            r = math.asinh(math.sqrt(n))
            c = [normalized_cost(ModelParams.ideal(r, d)) for d in (-h, 0.0, h)]
            fd = (c[0] - 2 * c[1] + c[2]) / h**2
            worst = max(worst, abs(fd / quadratic_coefficient_f(n) - 1.0))
        return worst, "second difference of normalized cost vs f(N) (relative)"

    checks.append(_timed("quadratic expansion", 1e-4, expansion))

    def seeded():
        worst = 0.0
        x = np.linspace(-1e-2, 1e-2, 41)
        for alpha in (0.1, 0.5):
            y = np.array([seeded_cost(SeededParams(r=0.0, alpha=alpha, phi_c=d)) for d in x]) + 1.0
            basis = np.stack([np.ones_like(x), x**2, x**4], axis=1)
            coef = np.linalg.lstsq(basis, y, rcond=None)[0]
            worst = max(worst, abs(coef[2] / (alpha**2 / 2) - 1.0))
        return worst, "quartic coefficient at r=0 vs alpha^2/2 (relative)"

    checks.append(_timed("seeded quartic limit", 1e-3, seeded))

    def roundtrip():
        worst = 0.0
        for _ in range(200):
            p = random_params(rng)
            v = diff_quadrature_variance(p.with_delta_phi(0.0))
            q = quadratic_coeffs(p.epsilon, p.epsilon_prime, p.n_in, v)
            big_r = math.exp(-2 * p.r) / 2
            branch = "low" if q.c <= 0 or big_r >= math.sqrt(q.c / q.a) else "high"
            worst = max(worst, abs(solve_r(p.epsilon, p.epsilon_prime, p.n_in, v, branch) - p.r))
        return worst, "r from the squeezing quadratic (200 draws)"

    checks.append(_timed("squeezing round trip", 1e-8, roundtrip))

    def pipelines():
        worst = 0.0
        for i, r in enumerate((0.18, 0.35, 0.74)):
            p = ModelParams.ideal(r)
            truth = diff_quadrature_variance(p)
            for method in ("direct-variance", "histogram-fit"):
                est = cost_evaluator(p, mc_samples, NoiseConfig(method=method, sigma_e_sq=0.1), child_seed(seed, 2, i))
                worst = max(worst, abs(est.variance_x_minus / truth - 1.0))
        return worst, f"recovered X- variance, {mc_samples} samples (relative)"

    checks.append(_timed("homodyne pipelines (Monte Carlo)", mc_tolerance, pipelines))
    return VerifyReport(tuple(checks))
