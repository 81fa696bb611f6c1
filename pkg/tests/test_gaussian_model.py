import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from cvqca.errors import GridTooSmallError, InvalidParameterError
from cvqca.gaussian_model import (
    IntegrationGrid,
    ModelParams,
    covariance_from_symplectic,
    diff_quadrature_variance,
    diff_variance_profile,
    homodyne_quadratic_form,
    joint_q_density,
    marginal_diff_density,
    symplectic_form,
    tmss_covariance,
    wigner_marginal_oracle,
    wrap_phase,
)

from conftest import physical_params

# frozen oracle value: r=0.35 ideal, dphi=0.3, X-=0.2
ORACLE_R035 = 0.7183697382029459


def printed_a(p: ModelParams) -> np.ndarray:
    """Noiseless-conjugate A matrix written out term by term."""
    n = math.sinh(p.r) ** 2
    e, ep, nb = p.epsilon, p.epsilon_prime, p.n_b_prime
    off = -2 * math.sqrt(e * ep) * (1 + nb) * math.sqrt(n * (n + 1)) * math.cos(p.phi_c - p.phi_0)
    return np.array([[1 + 2 * ep * (nb + (1 + nb) * n), off], [off, 1 + 2 * e * (1 + nb) * n]])


class TestModelParams:
    @pytest.mark.parametrize(
        "kwargs",
        [dict(r=-0.1), dict(epsilon=1.2), dict(epsilon_prime=-0.01), dict(n_b=-1), dict(n_b_prime=-0.5), dict(phi_c=math.nan)],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidParameterError):
            ModelParams(**kwargs)

    def test_derived(self):
        p = ModelParams(r=0.74, n_b_prime=0.21, phi_0=0.5, phi_c=0.5 + 2 * math.pi + 0.1)
        assert p.n_photons == pytest.approx(math.sinh(0.74) ** 2)
        assert p.n_in == pytest.approx(0.71)
        assert p.delta_phi == pytest.approx(0.1)

    @given(st.floats(-50, 50))
    def test_wrap_range(self, x):
        w = wrap_phase(x)
        assert -math.pi < w <= math.pi + 1e-12
        assert math.isclose(math.cos(w), math.cos(x), abs_tol=1e-9)

    def test_wrap_pi_maps_to_pi(self):
        assert wrap_phase(math.pi) == pytest.approx(math.pi)
        assert wrap_phase(-math.pi) == pytest.approx(math.pi)


class TestCovariance:
    def test_vacuum(self):
        np.testing.assert_allclose(tmss_covariance(ModelParams()), 0.5 * np.eye(4), atol=1e-15)

    def test_q1q2_entry(self):
        p = ModelParams.ideal(0.35)
        n = math.sinh(0.35) ** 2
        assert tmss_covariance(p)[0, 2] == pytest.approx(math.sqrt(n * (n + 1)), abs=1e-14)

    def test_quarter_turn_moves_correlation(self):
        p = ModelParams(r=0.6, epsilon=0.8, epsilon_prime=0.7, n_b_prime=0.3, phi_c=math.pi / 2)
        cov = tmss_covariance(p)
        # q1-q2 and p1-p2 vanish, cross terms carry the coupling
        assert abs(cov[0, 2]) < 1e-15 and abs(cov[1, 3]) < 1e-15
        assert abs(cov[0, 3]) > 0.1 and cov[0, 3] == pytest.approx(cov[1, 2])

    @given(physical_params())
    def test_matches_symplectic(self, p):
        np.testing.assert_allclose(tmss_covariance(p), covariance_from_symplectic(p), atol=1e-12)

    @given(physical_params(r_max=2.5))
    def test_uncertainty_relation(self, p):
        ev = np.linalg.eigvalsh(tmss_covariance(p) + 0.5j * symplectic_form(2))
        assert ev.min() >= -1e-10

    @given(physical_params())
    def test_symmetric_positive(self, p):
        cov = tmss_covariance(p)
        np.testing.assert_allclose(cov, cov.T)
        assert np.linalg.eigvalsh(cov).min() > 0


class TestQuadraticForm:
    def test_vacuum(self):
        form = homodyne_quadratic_form(ModelParams())
        np.testing.assert_allclose(form.a, np.eye(2))
        assert form.f == pytest.approx(1.0)

    def test_ideal_minimum_weight(self):
        form = homodyne_quadratic_form(ModelParams.ideal(0.74))
        assert form.sum_weight == pytest.approx(2 * math.exp(-1.48), rel=1e-12)
        assert round(form.sum_weight, 3) == 0.455

    @given(physical_params())
    def test_reduces_to_printed_matrix(self, p):
        np.testing.assert_allclose(homodyne_quadratic_form(p).a, printed_a(p), rtol=1e-12, atol=1e-12)

    @given(physical_params())
    def test_determinant_identity(self, p):
        form = homodyne_quadratic_form(p)
        a = form.a
        assert form.f == pytest.approx(np.linalg.det(a), rel=1e-10)
        t, s = form.sum_weight, form.diff_weight
        assert form.f == pytest.approx((t * s - (a[0, 0] - a[1, 1]) ** 2) / 4, rel=1e-10)

    @given(physical_params(eps_min=0.3).map(lambda p: p.replace(epsilon_prime=p.epsilon)))
    def test_symmetric_modes_factorize(self, p):
        form = homodyne_quadratic_form(p.replace(n_b_prime=0.0))
        assert form.f == pytest.approx(form.sum_weight * form.diff_weight / 4, rel=1e-10)

    @given(physical_params())
    def test_normalizable(self, p):
        form = homodyne_quadratic_form(p)
        assert form.f > 0 and form.trace - 2 * abs(form.off_diagonal) > 0

    def test_conjugate_noise_enters_diagonal(self):
        base = ModelParams(r=0.5, epsilon=0.8, epsilon_prime=0.6, n_b_prime=0.2)
        noisy = base.replace(n_b=0.4)
        assert homodyne_quadratic_form(noisy).a[1, 1] > homodyne_quadratic_form(base).a[1, 1]


class TestDensities:
    def test_joint_vacuum_peak(self):
        assert joint_q_density(0.0, 0.0, ModelParams()) == pytest.approx(1 / math.pi)

    def test_joint_normalized(self):
        p = ModelParams(r=0.6, epsilon=0.8, epsilon_prime=0.5, n_b_prime=0.7, phi_c=0.4)
        mass, _ = integrate.dblquad(lambda y, x: joint_q_density(x, y, p), -12, 12, -12, 12, epsabs=1e-10)
        assert mass == pytest.approx(1.0, abs=1e-6)

    def test_joint_swap_symmetry(self):
        p = ModelParams(r=0.5, epsilon=0.7, epsilon_prime=0.7, n_b=0.3, n_b_prime=0.3, phi_c=1.0)
        assert joint_q_density(0.3, -1.1, p) == pytest.approx(joint_q_density(-1.1, 0.3, p), rel=1e-13)

    def test_marginal_vacuum_peak(self):
        assert marginal_diff_density(0.0, ModelParams()) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-14)

    @given(physical_params())
    def test_marginal_normalized(self, p):
        mass, _ = integrate.quad(lambda x: marginal_diff_density(x, p), -np.inf, np.inf, epsabs=1e-12)
        assert mass == pytest.approx(1.0, abs=1e-6)

    @given(physical_params(), st.floats(-3, 3))
    def test_marginal_peak_at_origin(self, p, x):
        assert marginal_diff_density(x, p) <= marginal_diff_density(0.0, p)

    @given(physical_params())
    def test_marginal_is_joint_projection(self, p):
        # integrate the joint density along X+ at a fixed X-
        xm = 0.4
        f = lambda xp: joint_q_density((xp + xm) / math.sqrt(2), (xp - xm) / math.sqrt(2), p)  # noqa: E731
        val, _ = integrate.quad(f, -np.inf, np.inf, epsabs=1e-13)
        assert val == pytest.approx(marginal_diff_density(xm, p), abs=1e-8)


class TestVariance:
    def test_vacuum(self):
        assert diff_quadrature_variance(ModelParams()) == 0.5

    @pytest.mark.parametrize("r", [0.18, 0.35, 0.74])
    def test_ideal_minimum(self, r):
        assert diff_quadrature_variance(ModelParams.ideal(r)) == pytest.approx(math.exp(-2 * r) / 2, abs=1e-12)

    def test_quarter_turn(self):
        n = math.sinh(0.74) ** 2
        v = diff_quadrature_variance(ModelParams.ideal(0.74, math.pi / 2))
        assert v == pytest.approx((1 + 2 * n) / 2, rel=1e-12)
        assert v == pytest.approx(1.1551, abs=1e-4)

    def test_monotone_in_r(self):
        rs = np.linspace(0, 2, 41)
        at_min = [diff_quadrature_variance(ModelParams.ideal(r)) for r in rs]
        at_quarter = [diff_quadrature_variance(ModelParams.ideal(r, math.pi / 2)) for r in rs]
        assert np.all(np.diff(at_min) < 0) and np.all(np.diff(at_quarter) > 0)

    @given(st.floats(0.0, 3.0), st.floats(0.0, 1.0))
    def test_probe_loss_raises_minimum(self, r, ep):
        # holds with a lossless conjugate and a quiet seed
        p = ModelParams(r=r, epsilon_prime=ep)
        assert diff_quadrature_variance(p) >= diff_quadrature_variance(p.replace(epsilon_prime=1.0)) - 1e-15

    def test_probe_loss_can_lower_minimum_with_noisy_seed(self):
        # attenuating a noisy, weakly correlated probe removes more noise than correlation
        p = ModelParams(r=0.0, epsilon_prime=0.5, n_b_prime=1.0)
        assert diff_quadrature_variance(p) < diff_quadrature_variance(p.replace(epsilon_prime=1.0))

    @given(physical_params())
    def test_profile_matches_pointwise(self, p):
        grid = np.linspace(-3, 3, 7)
        expected = [diff_quadrature_variance(p.with_delta_phi(d)) for d in grid]
        np.testing.assert_allclose(diff_variance_profile(p, grid), expected, rtol=1e-13)


class TestOracle:
    def test_vacuum(self):
        assert wigner_marginal_oracle(0.0, ModelParams()) == pytest.approx(1 / math.sqrt(math.pi), abs=1e-6)

    def test_frozen_regression(self):
        p = ModelParams.ideal(0.35, 0.3)
        val = wigner_marginal_oracle(0.2, p)
        assert val == pytest.approx(ORACLE_R035, abs=1e-12)
        assert val == pytest.approx(marginal_diff_density(0.2, p), abs=1e-6)

    def test_grid_too_small(self):
        with pytest.raises(GridTooSmallError):
            wigner_marginal_oracle(0.0, ModelParams(), IntegrationGrid(n_sigma=3.0))

    def test_displaced_seed_mean_subtracted(self):
        p = ModelParams(r=0.5, epsilon=0.8, epsilon_prime=0.6, n_b_prime=0.3, phi_c=0.7)
        mean = np.array([1.3, -0.4, 0.2, 0.9])
        for x in (0.0, 0.5):
            assert wigner_marginal_oracle(x, p, mean=mean) == pytest.approx(wigner_marginal_oracle(x, p), abs=1e-10)

    def test_displaced_without_subtraction_shifts(self):
        p = ModelParams(r=0.5, phi_c=0.2)
        mean = np.array([1.0, 0.0, 0.0, 0.0])
        assert wigner_marginal_oracle(0.0, p, mean=mean, subtract_mean=False) < wigner_marginal_oracle(0.0, p) - 1e-3
