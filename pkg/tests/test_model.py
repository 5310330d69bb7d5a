import math

import numpy as np
import pytest

import sdedensity as sd
from sdedensity.errors import ConfigError, ValidationError


def pw(breakpoints, pieces):
    return sd.PiecewiseFunction(tuple(breakpoints), tuple(pieces))


class TestPiecewiseEval:
    def test_affine_piece(self):
        f = pw([], [sd.Affine(intercept=1.0, slope=2.0)])
        assert sd.evaluate(f, 3.0) == 7.0

    def test_constant_anywhere(self):
        f = pw([], [sd.Constant(5.0)])
        for x in (-1e6, 0.0, 3.7):
            assert f(x) == 5.0

    def test_power_at_root(self):
        f = pw([], [sd.HolderPower(scale=1.0, center=1.0, exponent=0.5)])
        assert f(1.0) == 0.0

    def test_right_continuous_at_breakpoint(self):
        f = pw([0.0], [sd.Constant(-1.0), sd.Constant(1.0)])
        assert f(0.0) == 1.0
        assert f(-1e-12) == -1.0
        assert f.left_limit(0.0) == -1.0

    def test_vectorized_matches_scalar(self):
        f = pw([-1.0, 2.0], [sd.Constant(3.0), sd.Affine(0.0, 1.0), sd.Sinusoid(0.0, 1.0)])
        xs = np.linspace(-3, 4, 57)
        vec = f(xs)
        assert vec == pytest.approx([f(float(x)) for x in xs])

    def test_breakpoints_must_increase(self):
        with pytest.raises(ConfigError):
            pw([1.0, 1.0], [sd.Constant(0.0)] * 3)

    def test_piece_count_checked(self):
        with pytest.raises(ConfigError):
            pw([0.0], [sd.Constant(0.0)])

    def test_polynomial_eval_and_derivative(self):
        f = pw([], [sd.Polynomial(coeffs=(1.0, 0.0, 1.0))])  # 1 + x^2
        assert f(2.0) == 5.0
        assert f.derivative(2.0) == 4.0
        assert f.sup_abs_on(-2.0, 3.0) == 10.0


class TestPiecewiseFromDict:
    def test_breakpoint_form(self):
        f = sd.piecewise_from_dict({
            "breakpoints": [0.0],
            "pieces": [{"kind": "constant", "value": -1.0},
                       {"kind": "constant", "value": 1.0}],
        })
        assert f(-1.0) == -1.0 and f(1.0) == 1.0

    def test_interval_form(self):
        f = sd.piecewise_from_dict([
            {"kind": "constant", "value": 2.0, "interval": [None, 0.0]},
            {"kind": "affine", "intercept": 2.0, "slope": 1.0, "interval": [0.0, None]},
        ])
        assert f(-5.0) == 2.0 and f(3.0) == 5.0

    def test_gap_rejected(self):
        with pytest.raises(ConfigError):
            sd.piecewise_from_dict([
                {"kind": "constant", "value": 0.0, "interval": [None, 0.0]},
                {"kind": "constant", "value": 1.0, "interval": [1.0, None]},
            ])

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError):
            sd.piecewise_from_dict({"breakpoints": [], "pieces": [{"kind": "spline"}]})


class TestSigmaStar:
    def test_sinusoid_continuation(self, sin_sigma):
        w = sd.LocalWindow(xi=0.0, delta=1.0, delta0=0.25, l_sigma=1.0)
        s = sd.build_sigma_star(sin_sigma, w)
        assert s(-5.0) == pytest.approx(2.0 + math.sin(-1.0), abs=1e-15)
        assert s(10.0) == pytest.approx(2.0 + math.sin(1.0), abs=1e-15)
        xs = np.linspace(-1.0, 1.0, 1001)
        np.testing.assert_array_equal(s(xs), sin_sigma(xs))

    def test_unit_sigma(self, window6):
        s = sd.build_sigma_star(pw([], [sd.Constant(1.0)]), window6)
        xs = np.linspace(-50, 50, 101)
        assert np.all(s(xs) == 1.0)

    def test_one_plus_abs(self):
        sigma = pw([0.0], [sd.Affine(1.0, -1.0), sd.Affine(1.0, 1.0)])  # 1 + |x|
        w = sd.LocalWindow(xi=0.0, delta=1.0, delta0=0.5, l_sigma=1.0)
        s = sd.build_sigma_star(sigma, w)
        assert s(10.0) == 2.0
        assert s(-10.0) == 2.0
        assert s.lipschitz == 1.0

    def test_floor_everywhere(self, sin_sigma_star):
        xs = np.linspace(-20, 20, 4001)
        assert np.min(np.abs(sin_sigma_star(xs))) >= sin_sigma_star.floor

    def test_lipschitz_pairs(self, sin_sigma_star, rng):
        xs = rng.uniform(-5, 5, size=400)
        ys = rng.uniform(-5, 5, size=400)
        lhs = np.abs(sin_sigma_star(xs) - sin_sigma_star(ys))
        assert np.all(lhs <= sin_sigma_star.lipschitz * np.abs(xs - ys) + 1e-12)

    def test_ellipticity_violation_rejected(self):
        sigma = pw([], [sd.Affine(0.0, 1.0)])  # vanishes at 0
        w = sd.LocalWindow(xi=0.0, delta=1.0, delta0=0.5, l_sigma=0.1)
        with pytest.raises(ValidationError):
            sd.build_sigma_star(sigma, w)

    def test_non_lipschitz_sigma_rejected(self):
        sigma = pw([], [sd.HolderPower(scale=1.0, center=0.0, exponent=0.5)])
        w = sd.LocalWindow(xi=5.0, delta=1.0, delta0=0.5, l_sigma=0.5)
        # window [4, 6] avoids the cusp, so this one is fine
        sd.build_sigma_star(sigma, w)
        w_bad = sd.LocalWindow(xi=0.5, delta=1.0, delta0=0.5, l_sigma=1e-6)
        with pytest.raises(ValidationError):
            sd.build_sigma_star(sigma, w_bad)


class TestWeakDerivative:
    def test_constant_is_zero(self, window6):
        s = sd.build_sigma_star(pw([], [sd.Constant(3.0)]), window6)
        d = sd.weak_derivative(s)
        xs = np.linspace(-10, 10, 101)
        assert np.all(d(xs) == 0.0)

    def test_abs_kink(self):
        sigma = pw([0.0], [sd.Affine(1.0, -1.0), sd.Affine(1.0, 1.0)])  # 1 + |x|
        w = sd.LocalWindow(xi=0.0, delta=1.0, delta0=0.5, l_sigma=1.0)
        d = sd.weak_derivative(sd.build_sigma_star(sigma, w))
        assert d(0.0) == 0.0
        assert d(0.5) == 1.0
        assert d(-0.5) == -1.0
        # kinks of the continuation at the window edges
        assert 1.0 in d.nondifferentiable_points
        assert -1.0 in d.nondifferentiable_points

    def test_classical_derivative_inside(self, sin_sigma_star):
        d = sd.weak_derivative(sin_sigma_star)
        assert d(0.3) == pytest.approx(math.cos(0.3), abs=1e-12)

    def test_smooth_boundary_not_flagged(self):
        # sigma = 2 + sin(x) has derivative cos(1) != 0 at the edge: flagged;
        # a constant sigma continues smoothly: no points at all
        w = sd.LocalWindow(xi=0.0, delta=1.0, delta0=0.5, l_sigma=1.0)
        s = sd.build_sigma_star(pw([], [sd.Constant(2.0)]), w)
        assert sd.weak_derivative(s).nondifferentiable_points == ()


class TestDriftFunctional:
    def test_zero_drift(self, window6):
        s = sd.build_sigma_star(pw([], [sd.Constant(1.0)]), window6)
        g = sd.drift_functional(pw([], [sd.Constant(0.0)]), s, sd.weak_derivative(s))
        xs = np.linspace(-6, 6, 101)
        assert np.all(g(xs) == 0.0)

    def test_constant_drift(self, window6):
        s = sd.build_sigma_star(pw([], [sd.Constant(1.0)]), window6)
        g = sd.drift_functional(pw([], [sd.Constant(2.5)]), s, sd.weak_derivative(s))
        assert g(0.3) == 2.5

    def test_sign_drift_over_two(self, window6):
        mu = pw([0.0], [sd.Constant(-1.0), sd.Constant(1.0)])
        s = sd.build_sigma_star(pw([], [sd.Constant(2.0)]), window6)
        g = sd.drift_functional(mu, s, sd.weak_derivative(s))
        assert g(1.0) == 0.5
        assert g(-1.0) == -0.5

    def test_matches_pointwise_formula(self, sin_sigma_star, rng):
        mu = pw([], [sd.Sinusoid(offset=0.5, amplitude=0.3, frequency=2.0)])
        d = sd.weak_derivative(sin_sigma_star)
        g = sd.drift_functional(mu, sin_sigma_star, d)
        xs = rng.uniform(-1, 1, size=300)
        expect = mu(xs) / sin_sigma_star(xs) - 0.5 * d(xs)
        np.testing.assert_allclose(g(xs), expect, rtol=0, atol=0)

    def test_mismatched_continuation_rejected(self, window6, sin_sigma_star):
        s2 = sd.build_sigma_star(pw([], [sd.Constant(1.0)]), window6)
        with pytest.raises(ValidationError):
            sd.drift_functional(pw([], [sd.Constant(0.0)]), s2,
                                sd.weak_derivative(sin_sigma_star))


class TestWindowValidation:
    def test_window_shape_invariants(self):
        with pytest.raises(ValidationError):
            sd.LocalWindow(xi=0.0, delta=1.0, delta0=1.5, l_sigma=1.0)
        with pytest.raises(ValidationError):
            sd.LocalWindow(xi=0.0, delta=1.0, delta0=0.5, l_sigma=0.0)

    def test_validate_window_passes(self, bm_model, window6):
        sd.validate_window(bm_model, window6)

    def test_unbounded_mu_rejected(self, window6):
        bad = sd.CoefficientModel(
            mu=pw([], [sd.HolderPower(scale=1.0, center=0.0, exponent=0.5)]),
            sigma=pw([], [sd.Constant(1.0)]),
        )
        sd.validate_window(bad, window6)  # |x|^0.5 is bounded on the window: fine
        worse = sd.CoefficientModel(
            mu=pw([], [sd.Polynomial(coeffs=(0.0, 1.0))]),
            sigma=pw([], [sd.Affine(0.0, 1.0)]),
        )
        with pytest.raises(ValidationError):
            sd.validate_window(worse, window6)  # sigma hits 0 in the window
