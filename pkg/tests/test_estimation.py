import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cvqca.errors import (
    FitConvergenceError,
    InvalidParameterError,
    MinimumNotBracketedError,
    MismatchedDataError,
    NoPhysicalRootError,
)
from cvqca.estimation import (
    FIT_BOUNDS,
    FitBounds,
    FitResult,
    NoisyHomodyneModel,
    NoisySeedModel,
    aic,
    compare_models,
    estimate_min_variance,
    fit_cost_model,
    fitted_curve,
    min_variance_window,
    quadratic_coeffs,
    solve_r,
)
from cvqca.gaussian_model import ModelParams, diff_quadrature_variance
from cvqca.landscape import landscape_sweep

GRID = np.linspace(-math.pi, math.pi, 61)


def truth_params(eps_p=0.6, n_in=0.9, r=0.74):
    return ModelParams(r=r, epsilon=0.77, epsilon_prime=eps_p, n_b_prime=n_in - 0.5)


def truth_landscape(**kw):
    return landscape_sweep(truth_params(**kw), GRID)


class TestQuadratic:
    def test_ideal_reduces(self):
        q = quadratic_coeffs(1.0, 1.0, 0.5, 0.3)
        assert (q.a, q.b, q.c) == (pytest.approx(2.0), pytest.approx(-0.6), pytest.approx(0.0, abs=1e-15))

    def test_regression(self):
        q = quadratic_coeffs(0.77, 0.6, 0.71, 0.3)
        assert q.a == pytest.approx(1.6512940406495753, rel=1e-13)
        assert q.b == pytest.approx(-0.30285, rel=1e-13)
        assert q.c == pytest.approx(0.0016014898376062459, rel=1e-12)
        # the constant term is a perfect square times (2 N_in + 1)
        assert q.c == pytest.approx(2.42 * (math.sqrt(0.77) - math.sqrt(0.6)) ** 2 / 16, rel=1e-12)

    @given(st.floats(0.05, 1.0), st.floats(0.0, 1.0), st.floats(0.5, 3.0), st.floats(0.0, 1.5))
    def test_reproduces_forward_variance(self, eps, eps_p, n_in, r):
        p = ModelParams(r=r, epsilon=eps, epsilon_prime=eps_p, n_b_prime=n_in - 0.5)
        v = diff_quadrature_variance(p)
        q = quadratic_coeffs(eps, eps_p, n_in, v)
        big_r = math.exp(-2 * r) / 2
        assert q.a * big_r**2 + q.b * big_r + q.c == pytest.approx(0.0, abs=1e-12 * max(1.0, q.a))

    @given(
        st.floats(0.05, 1.0), st.floats(0.0, 1.0), st.floats(0.5, 3.0), st.floats(0.0, 1.5),
        st.lists(st.floats(-0.5, 0.5), min_size=1, max_size=5),
    )
    def test_window_average(self, eps, eps_p, n_in, r, window):
        p = ModelParams(r=r, epsilon=eps, epsilon_prime=eps_p, n_b_prime=n_in - 0.5)
        v = float(np.mean([diff_quadrature_variance(p.with_delta_phi(d)) for d in window]))
        q = quadratic_coeffs(eps, eps_p, n_in, v, cos_mean=float(np.mean(np.cos(window))))
        big_r = math.exp(-2 * r) / 2
        assert q.a * big_r**2 + q.b * big_r + q.c == pytest.approx(0.0, abs=1e-12 * max(1.0, q.a))

    def test_cos_mean_range(self):
        with pytest.raises(InvalidParameterError):
            quadratic_coeffs(0.77, 0.6, 0.9, 0.3, cos_mean=1.5)

    @pytest.mark.parametrize(
        "args", [(0.0, 0.5, 0.7, 0.3), (0.5, 1.2, 0.7, 0.3), (0.5, 0.5, 0.4, 0.3), (0.5, 0.5, 0.7, 0.0)]
    )
    def test_validation(self, args):
        with pytest.raises(InvalidParameterError):
            quadratic_coeffs(*args)


class TestSolveR:
    def test_vacuum_level_gives_zero(self):
        assert solve_r(1.0, 1.0, 0.5, 0.5) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("r", [0.18, 0.35, 0.74])
    def test_ideal_round_trip(self, r):
        assert solve_r(1.0, 1.0, 0.5, math.exp(-2 * r) / 2) == pytest.approx(r, abs=1e-12)

    def test_lossy_round_trip(self):
        p = truth_params()
        assert solve_r(0.77, 0.6, 0.9, diff_quadrature_variance(p)) == pytest.approx(0.74, abs=1e-10)

    def test_branches_differ(self):
        p = truth_params(r=1.5)
        v = diff_quadrature_variance(p)
        low, high = solve_r(0.77, 0.6, 0.9, v, "low"), solve_r(0.77, 0.6, 0.9, v, "high")
        assert low != pytest.approx(high)
        assert 1.5 in (pytest.approx(low, abs=1e-9), pytest.approx(high, abs=1e-9))

    def test_unreachable_variance(self):
        with pytest.raises(NoPhysicalRootError):
            solve_r(0.77, 0.6, 0.9, 1e-4)

    def test_bad_branch(self):
        with pytest.raises(InvalidParameterError):
            solve_r(1.0, 1.0, 0.5, 0.3, "middle")


class TestMinVariance:
    def test_noiseless_single_point_window(self):
        t = truth_landscape()
        w = min_variance_window(t.delta_phi, t.variance)
        assert w.center == 0.0 and w.n_points == 1
        assert w.variance == diff_quadrature_variance(truth_params().with_delta_phi(0.0))

    def test_cost_and_variance_inputs_agree(self):
        t = truth_landscape()
        assert estimate_min_variance(t.delta_phi, cost=t.cost) == pytest.approx(estimate_min_variance(t.delta_phi, t.variance))

    def test_wide_window_biases_up(self):
        t = truth_landscape()
        v0 = diff_quadrature_variance(truth_params())
        assert estimate_min_variance(t.delta_phi, t.variance, fwhm_fraction=0.99) > 1.05 * v0

    def test_noise_averages(self):
        x = np.linspace(-math.pi, math.pi, 601)
        v = np.array([diff_quadrature_variance(truth_params().with_delta_phi(d)) for d in x])
        rng = np.random.default_rng(2)
        noisy = v * (1 + 0.01 * rng.standard_normal(v.size))
        w = min_variance_window(x, noisy)
        assert w.n_points > 5
        assert w.variance == pytest.approx(v.min(), rel=5 * 0.01 / math.sqrt(w.n_points) + 0.01)

    def test_edge_minimum(self):
        x = np.linspace(0, math.pi, 20)
        with pytest.raises(MinimumNotBracketedError):
            min_variance_window(x, variance=0.3 + x)

    @pytest.mark.parametrize("fraction", [0.0, 1.0])
    def test_fraction_range(self, fraction):
        with pytest.raises(InvalidParameterError):
            min_variance_window(GRID, cost=truth_landscape().cost, fwhm_fraction=fraction)

    def test_positive_cost_rejected(self):
        with pytest.raises(InvalidParameterError):
            min_variance_window(GRID, cost=np.ones(GRID.size))


@pytest.fixture(scope="module")
def noiseless():
    t = truth_landscape()
    return t, fit_cost_model(t.delta_phi, t.cost, bounds=FIT_BOUNDS[0.74])


class TestFit:
    def test_reproduces_landscape(self, noiseless):
        t, fit = noiseless
        assert fit.rss < 1e-20
        np.testing.assert_allclose(fitted_curve(fit, t.delta_phi), t.cost, rtol=1e-8)

    def test_solution_is_self_consistent(self, noiseless):
        _, fit = noiseless
        p = ModelParams(r=fit.r, epsilon=0.77, epsilon_prime=fit.epsilon_prime, n_b_prime=fit.n_b_prime)
        assert diff_quadrature_variance(p) == pytest.approx(fit.min_variance, rel=1e-10)

    def test_landscape_fixes_only_one_combination(self):
        # points along this family give identical landscapes
        v = diff_quadrature_variance(truth_params())
        curves = []
        for eps_p, n_in in ((0.6, 0.9), (0.55, None), (0.5, None)):
            if n_in is None:
                from scipy.optimize import brentq

                def gap(n):
                    r = solve_r(0.77, eps_p, n, v)
                    p = ModelParams(r=r, epsilon=0.77, epsilon_prime=eps_p, n_b_prime=n - 0.5)
                    return diff_quadrature_variance(p.with_delta_phi(math.pi)) - diff_quadrature_variance(truth_params().with_delta_phi(math.pi))

                n_in = brentq(gap, 0.5, 0.9)
            r = solve_r(0.77, eps_p, n_in, v)
            curves.append(landscape_sweep(ModelParams(r=r, epsilon=0.77, epsilon_prime=eps_p, n_b_prime=n_in - 0.5), GRID).cost)
        np.testing.assert_allclose(curves[1], curves[0], rtol=1e-10)
        np.testing.assert_allclose(curves[2], curves[0], rtol=1e-10)

    def test_window_consistent_constraint(self):
        x = np.linspace(-math.pi, math.pi, 201)
        t = landscape_sweep(truth_params(), x)
        fit = fit_cost_model(x, t.cost, n_starts=4)
        assert len(fit.window_points) > 1
        p = ModelParams(r=fit.r, epsilon=0.77, epsilon_prime=fit.epsilon_prime, n_b_prime=fit.n_b_prime)
        avg = np.mean([diff_quadrature_variance(p.with_delta_phi(d)) for d in fit.window_points])
        assert avg == pytest.approx(fit.min_variance, rel=1e-10)
        assert fit.rss < 1e-20
        # pinning V(0) to the window average leaves a systematic misfit
        naive = fit_cost_model(x, t.cost, n_starts=4, window_consistent=False)
        assert naive.window_points == [0.0] and naive.rss > 1e6 * fit.rss

    def test_deterministic(self):
        t = truth_landscape()
        a = fit_cost_model(t.delta_phi, t.cost, n_starts=4, seed=3)
        b = fit_cost_model(t.delta_phi, t.cost, n_starts=4, seed=3)
        assert a.to_dict() == b.to_dict()

    def test_bound_flag(self):
        t = truth_landscape(eps_p=0.6)
        # a box that excludes every exact solution
        box = FitBounds(epsilon_prime=(0.58, 0.6), n_in=(0.71, 0.75))
        fit = fit_cost_model(t.delta_phi, t.cost, bounds=box, n_starts=4)
        assert fit.bounds_active == {"epsilon_prime": True, "n_in": True}
        assert any("stuck" in w for w in fit.warnings)

    def test_json(self, noiseless, tmp_path):
        _, fit = noiseless
        assert '"model": "noisy-seed"' in fit.to_json(tmp_path / "f.json").read_text()

    def test_homodyne_placeholder_runs(self):
        t = truth_landscape()
        fit = fit_cost_model(t.delta_phi, t.cost, model=NoisyHomodyneModel(), n_starts=4)
        assert fit.k == 3 and fit.model == NoisyHomodyneModel.name


class TestNoisyHomodyneModel:
    model = NoisyHomodyneModel()

    def test_quiet_detector_is_the_seed_model(self):
        p = ModelParams(r=0.74, epsilon=0.77, epsilon_prime=0.5, n_b_prime=0.21)
        t = landscape_sweep(p, GRID)
        curve, exact = self.model.evaluate([0.5, 0.0, 0.0], GRID, float(t.variance[30]), 0.77)
        assert exact
        np.testing.assert_allclose(curve, t.cost, rtol=1e-13)
        assert self.model.squeezing([0.5, 0.0, 0.0], float(t.variance[30]), 0.77) == pytest.approx(0.74, abs=1e-10)

    def test_excess_noise_only_shifts_variance(self):
        p = ModelParams(r=0.35, epsilon=0.77, epsilon_prime=0.5, n_b_prime=0.21)
        curve = -self.model._peak(0.35, 0.77, 0.5, 0.2, 0.0, GRID)
        v = np.array([diff_quadrature_variance(p.with_delta_phi(d)) for d in GRID]) + 0.2
        np.testing.assert_allclose(curve, -1 / np.sqrt(2 * math.pi * v), rtol=1e-12)

    def test_jitter_is_a_phase_average(self):
        from scipy import integrate

        p = ModelParams(r=0.74, epsilon=0.77, epsilon_prime=0.5, n_b_prime=0.21)
        sigma, d0 = 0.3, 0.4
        dens = lambda d: math.exp(-d * d / (2 * sigma**2)) / math.sqrt(2 * math.pi) / sigma  # noqa: E731
        peak = lambda d: 1 / math.sqrt(2 * math.pi * diff_quadrature_variance(p.with_delta_phi(d0 + d)))  # noqa: E731
        ref, _ = integrate.quad(lambda d: dens(d) * peak(d), -8 * sigma, 8 * sigma, epsabs=1e-13)
        assert float(self.model._peak(0.74, 0.77, 0.5, 0.0, sigma, d0)) == pytest.approx(ref, rel=1e-9)

    def test_jitter_changes_the_shape(self):
        x = GRID
        jittered = -self.model._peak(0.74, 0.77, 0.5, 0.0, 0.4, x)
        seed_fit = fit_cost_model(x, jittered, n_starts=4)
        assert seed_fit.rss > 1e-4
        own = fit_cost_model(x, jittered, model=self.model, n_starts=4)
        assert own.rss < 0.1 * seed_fit.rss

    @pytest.mark.parametrize(
        "x,kw",
        [
            (GRID[:9], {}),
            (np.linspace(-1, 1, 20), {}),
            (GRID, {"epsilon": 0.0}),
            (GRID, {"weights": -np.ones(61)}),
        ],
    )
    def test_rejects_inputs(self, x, kw):
        y = np.array([-0.5 - 0.1 * math.cos(d) for d in x])
        with pytest.raises(InvalidParameterError):
            fit_cost_model(x, y, **kw)

    def test_bounds_validation(self):
        with pytest.raises(InvalidParameterError):
            FitBounds(epsilon_prime=(0.5, 0.2))
        with pytest.raises(InvalidParameterError):
            FitBounds(n_in=(0.4, 2.0))


class TestAic:
    def test_value(self):
        assert aic(2, 10, 10.0) == pytest.approx(32.3788, abs=1e-4)

    def test_equal_rss_penalizes_extra_parameter(self):
        assert aic(3, 50, 0.2) - aic(2, 50, 0.2) == pytest.approx(2.0)

    @given(st.integers(1, 500), st.floats(1e-6, 1e3), st.floats(1.01, 10))
    def test_monotone_in_rss(self, n, rss, factor):
        assert aic(2, n, rss * factor) > aic(2, n, rss)

    @pytest.mark.parametrize("args", [(-1, 10, 1.0), (2, 0, 1.0), (2, 10, 0.0)])
    def test_validation(self, args):
        with pytest.raises(InvalidParameterError):
            aic(*args)


def _fake(model, value, n=30, digest="d"):
    return FitResult(0.5, 0.8, 0.7, 1.0, n, value, {}, model=model, data_digest=digest)


class TestCompare:
    def test_flag(self):
        c = compare_models([_fake("a", 30.0), _fake("b", 40.0)])
        assert c.best == "a" and c.flagged == ("b",) and not c.tie
        assert c.to_dict()["significantly_less_supported"] == ["b"]

    def test_below_threshold(self):
        assert compare_models([_fake("a", 30.0), _fake("b", 39.9)]).flagged == ()

    def test_tie(self):
        assert compare_models([_fake("a", 30.0), _fake("b", 30.0)]).tie

    def test_mismatch(self):
        with pytest.raises(MismatchedDataError):
            compare_models([_fake("a", 30.0), _fake("b", 31.0, n=31)])
        with pytest.raises(MismatchedDataError):
            compare_models([_fake("a", 30.0), _fake("b", 31.0, digest="other")])

    def test_needs_two(self):
        with pytest.raises(InvalidParameterError):
            compare_models([_fake("a", 30.0)])
