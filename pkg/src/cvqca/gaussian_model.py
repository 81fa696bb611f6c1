"""Gaussian closed forms for the noisy two-mode squeezed resource.

Conventions
-----------
* Quadratures are ordered ``(q1, p1, q2, p2)`` with vacuum variance 1/2.
* Mode 1 is the conjugate (transmissivity ``epsilon``, seed noise ``n_b``),
  mode 2 is the probe (``epsilon_prime``, ``n_b_prime``).
* The control phase acts on mode 1 and the target phase on mode 2, so only
  ``delta_phi = phi_c - phi_0`` enters the second moments.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import GridTooSmallError, InvalidParameterError

__all__ = [
    "ModelParams",
    "QuadraticForm2",
    "IntegrationGrid",
    "wrap_phase",
    "symplectic_form",
    "tmss_covariance",
    "covariance_from_symplectic",
    "homodyne_quadratic_form",
    "joint_q_density",
    "marginal_diff_density",
    "diff_quadrature_variance",
    "diff_variance_profile",
    "wigner_density",
    "wigner_marginal_oracle",
]


def wrap_phase(phi):
    """Reduce an angle (or array of angles) into ``(-pi, pi]``."""
    phi = np.asarray(phi, dtype=float)
    wrapped = phi - 2.0 * np.pi * np.ceil((phi - np.pi) / (2.0 * np.pi))
    if wrapped.ndim == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class ModelParams:
    r: float = 0.0
    epsilon: float = 1.0
    epsilon_prime: float = 1.0
    n_b: float = 0.0
    n_b_prime: float = 0.0
    phi_0: float = 0.0
    phi_c: float = 0.0

    def __post_init__(self):
        for name in ("r", "epsilon", "epsilon_prime", "n_b", "n_b_prime", "phi_0", "phi_c"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.r < 0:
            raise InvalidParameterError(f"r must be >= 0, got {self.r}")
        for name in ("epsilon", "epsilon_prime"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidParameterError(f"{name} must lie in [0, 1], got {getattr(self, name)}")
        for name in ("n_b", "n_b_prime"):
            if getattr(self, name) < 0:
                raise InvalidParameterError(f"{name} must be >= 0, got {getattr(self, name)}")

    @classmethod
    def vacuum(cls) -> "ModelParams":
        return cls()

    @classmethod
    def ideal(cls, r: float, delta_phi: float = 0.0) -> "ModelParams":
        """Lossless, noiseless resource with the target phase at zero."""
        return cls(r=r, phi_c=delta_phi)

    @property
    def n_photons(self) -> float:
        """Photon number per mode of the vacuum TMSS, ``sinh(r)**2``."""
        return math.sinh(self.r) ** 2

    @property
    def delta_phi(self) -> float:
        return wrap_phase(self.phi_c - self.phi_0)

    @property
    def n_in(self) -> float:
        """Probe seed noise including shot noise."""
        return self.n_b_prime + 0.5

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def with_delta_phi(self, delta_phi: float) -> "ModelParams":
        return dataclasses.replace(self, phi_c=self.phi_0 + delta_phi)


def symplectic_form(n_modes: int = 2) -> np.ndarray:
    """Symplectic form for interleaved ``(q1, p1, q2, p2, ...)`` ordering."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _check(params) -> ModelParams:
    if not isinstance(params, ModelParams):
        raise InvalidParameterError(f"expected ModelParams, got {type(params).__name__}")
    return params


def _mode_variances(p: ModelParams) -> tuple[float, float, float]:
    """Twice the q-variances of both modes and twice their q1-q2 covariance at zero phase."""
    n = p.n_photons
    total = 1.0 + p.n_b + p.n_b_prime
    m11 = 1.0 + 2.0 * p.epsilon * (p.n_b + total * n)
    m22 = 1.0 + 2.0 * p.epsilon_prime * (p.n_b_prime + total * n)
    corr = 2.0 * math.sqrt(p.epsilon * p.epsilon_prime) * total * math.sqrt(n * (n + 1.0))
    return m11, m22, corr


def tmss_covariance(params: ModelParams) -> np.ndarray:
    """4x4 covariance of the attenuated, phase-shifted noisy TMSS.

    With ``n_b = 0`` this is exactly the main-text covariance; a nonzero
    ``n_b`` uses the general thermal-seed moments.
    """
    p = _check(params)
    m11, m22, corr = _mode_variances(p)
    x = np.array([[0.0, 1.0], [1.0, 0.0]])
    z = np.diag([1.0, -1.0])
    dphi = p.phi_c - p.phi_0
    sigma = np.zeros((4, 4))
    sigma[:2, :2] = 0.5 * m11 * np.eye(2)
    sigma[2:, 2:] = 0.5 * m22 * np.eye(2)
    c = 0.5 * corr
    sigma += c * math.cos(dphi) * np.kron(x, z)
    sigma += c * math.sin(dphi) * np.kron(x, x)
    return sigma


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def covariance_from_symplectic(params: ModelParams) -> np.ndarray:
    """Build the same covariance by propagating thermal inputs.

    Squeeze -> pure-loss channels -> phase gates, each applied as a matrix
    action on the covariance. Used as an independent cross-check of
    :func:`tmss_covariance`.
    """
    p = _check(params)
    sigma = np.diag([p.n_b + 0.5, p.n_b + 0.5, p.n_b_prime + 0.5, p.n_b_prime + 0.5])
    ch, sh = math.cosh(p.r), math.sinh(p.r)
    z = np.diag([1.0, -1.0])
    squeeze = np.block([[ch * np.eye(2), sh * z], [sh * z, ch * np.eye(2)]])
    sigma = squeeze @ sigma @ squeeze.T
    g = np.diag(np.sqrt([p.epsilon, p.epsilon, p.epsilon_prime, p.epsilon_prime]))
    sigma = g @ sigma @ g + 0.5 * (np.eye(4) - g @ g)
    rot = np.zeros((4, 4))
    rot[:2, :2] = _rotation(p.phi_c)
    rot[2:, 2:] = _rotation(-p.phi_0)
    return rot @ sigma @ rot.T


@dataclass(frozen=True)
class QuadraticForm2:
    """Homodyne form ``P(x) = exp(-x^T a x / f) / (pi sqrt(f))``."""

    a: np.ndarray
    f: float

    @property
    def trace(self) -> float:
        return float(self.a[0, 0] + self.a[1, 1])

    @property
    def off_diagonal(self) -> float:
        return float(self.a[0, 1])

    @property
    def sum_weight(self) -> float:
        """``trA + 2 A12``: four times the difference-quadrature variance."""
        return self.trace + 2.0 * self.off_diagonal

    @property
    def diff_weight(self) -> float:
        """``trA - 2 A12``."""
        return self.trace - 2.0 * self.off_diagonal

    def rotated(self) -> np.ndarray:
        """Matrix of the form in ``(X+, X-)`` coordinates, times two.

        The off-diagonal entry ``A11 - A22`` vanishes only for mode-symmetric
        parameters.
        """
        h = np.array([[1.0, 1.0], [1.0, -1.0]])
        return h @ self.a @ h


def homodyne_quadratic_form(params: ModelParams) -> QuadraticForm2:
    p = _check(params)
    m11, m22, corr = _mode_variances(p)
    off = -corr * math.cos(p.phi_c - p.phi_0)
    # a is the adjugate of 2 * (q-block of the covariance): probe entry first
    a = np.array([[m22, off], [off, m11]])
    f = m11 * m22 - off * off
    return QuadraticForm2(a=a, f=float(f))


def joint_q_density(x1, x2, params: ModelParams):
    form = homodyne_quadratic_form(params)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    a = form.a
    quad = a[0, 0] * x1 * x1 + 2.0 * a[0, 1] * x1 * x2 + a[1, 1] * x2 * x2
    out = np.exp(-quad / form.f) / (math.pi * math.sqrt(form.f))
    return float(out) if out.ndim == 0 else out


def diff_quadrature_variance(params: ModelParams) -> float:
    """Variance of ``X- = (x1 - x2)/sqrt(2)``, i.e. ``(trA + 2 A12)/4``."""
    return homodyne_quadratic_form(params).sum_weight / 4.0


def diff_variance_profile(params: ModelParams, delta_phi) -> np.ndarray:
    """``X-`` variance over an array of phase differences (``params`` phases ignored)."""
    m11, m22, corr = _mode_variances(_check(params))
    d = np.asarray(delta_phi, dtype=float)
    return (m11 + m22 - 2.0 * corr * np.cos(d)) / 4.0


def marginal_diff_density(x_minus, params: ModelParams):
    """Density of the difference quadrature.

    Zero-mean Gaussian with variance ``(trA + 2 A12)/4``. For mode-symmetric
    parameters the exponent coincides with ``(trA - 2 A12) / (2 f)``.
    """
    weight = homodyne_quadratic_form(params).sum_weight
    x = np.asarray(x_minus, dtype=float)
    out = math.sqrt(2.0 / (math.pi * weight)) * np.exp(-2.0 * x * x / weight)
    return float(out) if out.ndim == 0 else out


def wigner_density(points, cov: np.ndarray, mean=None) -> np.ndarray:
    """Gaussian Wigner function normalized to unit mass over phase space.

    ``points`` has shape ``(..., d)``.
    """
    cov = np.asarray(cov, dtype=float)
    d = cov.shape[0]
    pts = np.asarray(points, dtype=float)
    if mean is not None:
        pts = pts - np.asarray(mean, dtype=float)
    prec = np.linalg.inv(cov)
    quad = np.einsum("...i,ij,...j->...", pts, prec, pts)
    norm = (2.0 * math.pi) ** (d / 2) * math.sqrt(np.linalg.det(cov))
    return np.exp(-0.5 * quad) / norm


@dataclass(frozen=True)
class IntegrationGrid:
    """Tensor-product trapezoid grid over the three integrated coordinates.

    Each axis is aligned with a principal direction of the integrand and
    spans ``n_sigma`` of its width on either side of the integrand's peak.
    """

    n_points: int = 41
    n_sigma: float = 8.0
    tol: float = 1e-6

    def __post_init__(self):
        if self.n_points < 3:
            raise GridTooSmallError("integration grid needs at least 3 points per axis")


# (X-, X+, y1, y2) from (q1, p1, q2, p2); orthogonal so the Jacobian is 1
_DIFF_SUM = np.array(
    [
        [1.0, 0.0, -1.0, 0.0],
        [1.0, 0.0, 1.0, 0.0],
        [0.0, math.sqrt(2.0), 0.0, 0.0],
        [0.0, 0.0, 0.0, math.sqrt(2.0)],
    ]
) / math.sqrt(2.0)


def wigner_marginal_oracle(
    x_minus: float,
    params: ModelParams,
    grid: IntegrationGrid = IntegrationGrid(),
    mean=None,
    subtract_mean: bool = True,
) -> float:
    """Difference-quadrature density by brute-force triple integration of W.

    The Wigner function is built from :func:`covariance_from_symplectic`
    (never from the homodyne closed forms) and integrated over
    ``(X+, y1, y2)`` with a trapezoid rule. With ``mean`` given (a displaced
    seed) and ``subtract_mean`` set, ``x_minus`` is measured from the mean of
    ``X-``.
    """
    p = _check(params)
    cov = covariance_from_symplectic(p)
    mu = np.zeros(4) if mean is None else np.asarray(mean, dtype=float)
    x = float(x_minus)
    if subtract_mean:
        x += float((_DIFF_SUM @ mu)[0])

    # integrand in rotated coordinates z = (X-, u) with u = (X+, y1, y2)
    cov_z = _DIFF_SUM @ cov @ _DIFF_SUM.T
    mu_z = _DIFF_SUM @ mu
    prec = np.linalg.inv(cov_z)
    k_uu = prec[1:, 1:]
    k_us = prec[1:, 0]
    s = x - mu_z[0]
    center = mu_z[1:] - np.linalg.solve(k_uu, k_us * s)
    lam, vecs = np.linalg.eigh(k_uu)
    widths = 1.0 / np.sqrt(lam)

    tail = 3.0 * special.erfc(grid.n_sigma / math.sqrt(2.0))
    if tail > grid.tol:
        raise GridTooSmallError(
            f"grid half-width of {grid.n_sigma} sigma leaves tail mass {tail:.2e} > {grid.tol:.1e}"
        )

    t = np.linspace(-grid.n_sigma, grid.n_sigma, grid.n_points)
    step = t[1] - t[0]
    w = 0.5 * np.ones_like(t)
    w[1:-1] = 1.0
    a, b, c = np.meshgrid(t, t, t, indexing="ij")
    local = np.stack([a * widths[0], b * widths[1], c * widths[2]], axis=-1)
    u = center + local @ vecs.T
    z = np.concatenate([np.full(u.shape[:-1] + (1,), x), u], axis=-1)
    vals = wigner_density(z, cov_z, mean=mu_z)
    weights = np.einsum("i,j,k->ijk", w, w, w) * (step**3) * np.prod(widths)
    return float(np.sum(vals * weights))
