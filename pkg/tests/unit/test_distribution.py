"""
Distribution Unit Tests

Measures, survival and density series, transition density and first moments
"""

import math
import warnings
from types import SimpleNamespace

import numpy as np
import pytest
from scipy.integrate import quad

import gsr_dist.distribution as distribution_module
from gsr_dist.core.exceptions import ConvergenceWarning, DomainError, SeriesBreakdownError
from gsr_dist.distribution import (
    add0,
    arl,
    cancellation_time,
    closed_form_moment,
    convergence_time,
    density,
    density_curve,
    integrate_modes,
    mode_profile,
    moment_from_survival,
    reconstruct_moment,
    scale_measure,
    speed_measure,
    survival,
    survival_at,
    survival_curve,
    survival_integral_check,
    t_conv,
    transition_density,
    transition_kernel,
)
from gsr_dist.schemas.curve import CurveFlag, CurveKind
from gsr_dist.schemas.params import EvalPoint, ModelParams
from gsr_dist.specfun import exp_integral_ei
from gsr_dist.spectrum import build_spectrum

MID_MODES = 100


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        yield


@pytest.fixture(scope="module")
def pre_spectrum_mid(pre_params):
    return build_spectrum(pre_params, MID_MODES)


@pytest.fixture(scope="module")
def post_spectrum_mid(post_params):
    return build_spectrum(post_params, MID_MODES)


@pytest.mark.unit
class TestMeasures:

    @pytest.mark.parametrize("theta", [0, 1])
    def test_product_identity(self, theta):
        """m(x) s(x) mu^2 x^2 / 2 = 1"""
        params = ModelParams(mu=0.7, a_threshold=50.0, theta=theta)
        for x in (0.5, 3.0, 40.0):
            product = speed_measure(x, params) * scale_measure(x, params) * params.mu_sq * x * x / 2
            assert product == pytest.approx(1.0, rel=1e-12)

    def test_speed_measure_value(self):
        """m(1) = 2 e^{-2} for mu = 1, theta = 0"""
        params = ModelParams(mu=1.0, a_threshold=10.0, theta=0)
        assert speed_measure(1.0, params) == pytest.approx(2 * math.exp(-2.0), rel=1e-12)

    def test_speed_measure_vanishes_at_zero(self):
        """Essential decay as x -> 0"""
        params = ModelParams(mu=1.0, a_threshold=10.0, theta=0)
        assert speed_measure(1e-4, params) == 0.0

    def test_rejects_nonpositive(self):
        """x must be positive"""
        params = ModelParams(mu=1.0, a_threshold=10.0, theta=0)
        with pytest.raises(DomainError):
            speed_measure(0.0, params)
        with pytest.raises(DomainError):
            scale_measure(-1.0, params)


@pytest.mark.unit
class TestFirstMoments:

    def test_arl(self):
        """A - r, exactly"""
        assert arl(ModelParams(mu=0.5, a_threshold=100.0, theta=0), 0.0) == 100.0
        params = ModelParams(mu=0.5, a_threshold=1000.0, theta=0)
        assert arl(params, 250.0) == 750.0
        assert arl(params, 1000.0) == 0.0

    def test_add0_classical_start(self):
        """add0 at r = 0 is (2/mu^2) e^{u_A} E1(u_A)"""
        params = ModelParams(mu=1.0, a_threshold=10.0, theta=1)
        expected = 2.0 * math.exp(0.2) * -exp_integral_ei(-0.2)
        assert add0(params, 0.0) == pytest.approx(expected, rel=1e-10)
        assert add0(params, 0.0) == pytest.approx(2.9868, rel=1e-4)

    def test_add0_vanishes_at_threshold(self):
        """r = A stops immediately"""
        params = ModelParams(mu=1.0, a_threshold=10.0, theta=1)
        assert add0(params, 10.0) == 0.0

    def test_add0_decreasing(self):
        """add0 decreases in r"""
        params = ModelParams(mu=1.5, a_threshold=100.0, theta=1)
        values = [add0(params, r) for r in np.linspace(0, 100, 21)]
        assert all(v1 > v2 for v1, v2 in zip(values, values[1:]))
        assert values[-1] == 0.0

    def test_add0_mu_sign(self):
        """Exact symmetry in the sign of mu"""
        plus = ModelParams(mu=1.5, a_threshold=100.0, theta=1)
        minus = ModelParams(mu=-1.5, a_threshold=100.0, theta=1)
        assert add0(plus, 30.0) == add0(minus, 30.0)

    def test_headstart_beyond_threshold(self):
        """r > A is outside the domain"""
        params = ModelParams(mu=1.0, a_threshold=10.0, theta=1)
        with pytest.raises(DomainError):
            add0(params, 11.0)

    def test_closed_form_dispatch(self):
        """arl for theta = 0, add0 for theta = 1"""
        assert closed_form_moment(ModelParams(mu=1.0, a_threshold=10.0, theta=0), 4.0) == 6.0
        post = ModelParams(mu=1.0, a_threshold=10.0, theta=1)
        assert closed_form_moment(post, 4.0) == add0(post, 4.0)

    def test_single_mode_integral(self):
        """One mode with c = 1 and rate 1 integrates to e^{-t*}"""
        assert integrate_modes([1.0], [1.0], 1e-3) == pytest.approx(math.exp(-1e-3), rel=1e-15)


@pytest.mark.unit
class TestSurvival:

    def test_unity_at_time_zero(self, pre_params, pre_spectrum):
        """S(r, 0) = 1 exactly for every r"""
        for r in (0.0, 25.0, 100.0):
            assert survival(pre_params, pre_spectrum, r, 0.0) == 1.0

    def test_zero_at_threshold(self, post_params, post_spectrum):
        """S(A, t) vanishes for t > 0"""
        for t in (0.5, 2.0, 10.0):
            assert survival(post_params, post_spectrum, 100.0, t) <= 1e-6

    def test_range(self, post_params, post_spectrum):
        """Values are clamped into [0, 1]"""
        for r in (0.0, 50.0):
            for t in (1.0, 5.0, 50.0):
                assert 0.0 <= survival(post_params, post_spectrum, r, t) <= 1.0

    def test_monotone_in_t_and_r(self, post_params, post_spectrum, quiet):
        """Non-increasing in both t and r past the convergence floor"""
        rs = np.linspace(0, 100, 12)
        ts = np.linspace(1.0, 20.0, 12)
        table = np.array([[survival(post_params, post_spectrum, r, t) for t in ts] for r in rs])
        assert np.all(np.diff(table, axis=1) <= 1e-9)
        assert np.all(np.diff(table, axis=0) <= 1e-9)

    def test_small_headstart_limit(self, post_params, post_spectrum):
        """r = A 1e-8 and r = A 1e-9 agree"""
        a = post_params.a_threshold
        s8 = survival(post_params, post_spectrum, a * 1e-8, 3.0)
        s9 = survival(post_params, post_spectrum, a * 1e-9, 3.0)
        assert s8 == pytest.approx(s9, rel=1e-8)

    def test_mu_sign_invariance(self, post_params, post_spectrum):
        """survival depends on mu only through mu^2"""
        flipped = ModelParams(mu=-post_params.mu, a_threshold=post_params.a_threshold, theta=1)
        assert survival(post_params, post_spectrum, 20.0, 2.0) == survival(flipped, post_spectrum, 20.0, 2.0)

    def test_negative_time_rejected(self, post_params, post_spectrum):
        """t must be nonnegative"""
        with pytest.raises(DomainError):
            survival(post_params, post_spectrum, 0.0, -1.0)

    def test_evaluation_point(self, post_params, post_spectrum):
        """survival_at checks the point against the spectrum"""
        point = EvalPoint(params=post_params, r=10.0, t=2.0)
        assert survival_at(post_spectrum, point) == survival(post_params, post_spectrum, 10.0, 2.0)
        other = EvalPoint(params=ModelParams(mu=1.0, a_threshold=100.0, theta=1), r=10.0, t=2.0)
        with pytest.raises(DomainError):
            survival_at(post_spectrum, other)

    def test_preconvergence_warning(self, post_params, post_spectrum):
        """Times below t_conv warn"""
        short = post_spectrum.truncated(3)
        floor = t_conv(post_params, short, 0.0)
        assert floor > 0
        with pytest.warns(ConvergenceWarning):
            survival(post_params, short, 0.0, 0.5 * floor)


@pytest.mark.unit
class TestDensity:

    def test_integrates_to_survival_difference(self, post_params, post_spectrum):
        """int_{t1}^{t2} f dt = S(t1) - S(t2)"""
        t1, t2 = 0.5, 5.0
        value, _ = quad(lambda t: density(post_params, post_spectrum, 0.0, t), t1, t2, epsabs=1e-12)
        expected = survival(post_params, post_spectrum, 0.0, t1) - survival(post_params, post_spectrum, 0.0, t2)
        assert value == pytest.approx(expected, abs=1e-7)

    def test_matches_finite_difference(self, post_params, post_spectrum):
        """-dS/dt by central difference at t = 1"""
        h = 1e-4
        numeric = (
            survival(post_params, post_spectrum, 0.0, 1.0 - h) - survival(post_params, post_spectrum, 0.0, 1.0 + h)
        ) / (2 * h)
        assert density(post_params, post_spectrum, 0.0, 1.0) == pytest.approx(numeric, rel=1e-5)

    def test_nonnegative_on_grid(self, post_params, post_spectrum, quiet):
        """Density of a nonnegative random variable"""
        for r in np.linspace(0, 100, 6):
            for t in np.linspace(0.5, 20, 8):
                assert density(post_params, post_spectrum, r, t) >= 0.0

    def test_requires_positive_time(self, post_params, post_spectrum):
        """t = 0 is outside the density's domain"""
        with pytest.raises(DomainError):
            density(post_params, post_spectrum, 0.0, 0.0)


@pytest.mark.unit
class TestTransitionDensity:

    def test_marginalizes_to_survival(self, pre_params, pre_spectrum):
        """int_0^A p(x, t | r) dx = S(r, t)"""
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            integral = survival_integral_check(pre_params, pre_spectrum, 10.0, 1.0)
            expected = survival(pre_params, pre_spectrum, 10.0, 1.0)
        assert integral == pytest.approx(expected, abs=1e-6)

    def test_detailed_balance(self, post_params, post_spectrum):
        """p(x, t | y)/m(x) = p(y, t | x)/m(y)"""
        for x, y, t in ((10.0, 60.0, 1.0), (80.0, 5.0, 2.5)):
            forward = transition_density(post_params, post_spectrum, x, t, y) / speed_measure(x, post_params)
            backward = transition_density(post_params, post_spectrum, y, t, x) / speed_measure(y, post_params)
            assert forward == pytest.approx(backward, rel=1e-8)

    def test_kernel_is_symmetric(self, post_params, post_spectrum):
        """The kernel is symmetric in its two space arguments"""
        assert transition_kernel(post_params, post_spectrum, 10.0, 1.0, 60.0) == pytest.approx(
            transition_kernel(post_params, post_spectrum, 60.0, 1.0, 10.0), rel=1e-12
        )

    def test_domain(self, post_params, post_spectrum):
        """x, r in (0, A] and t > 0"""
        with pytest.raises(DomainError):
            transition_density(post_params, post_spectrum, 0.0, 1.0, 10.0)
        with pytest.raises(DomainError):
            transition_density(post_params, post_spectrum, 10.0, 0.0, 10.0)
        with pytest.raises(DomainError):
            transition_density(post_params, post_spectrum, 10.0, 1.0, 101.0)

    def test_warns_when_terms_stop_early(self, post_params, monkeypatch):
        """A large last included term still warns after the series is cut short"""
        monkeypatch.setattr(distribution_module, "_scaled_w", lambda params, mode, u: 1.0)
        modes = [SimpleNamespace(rate=rate, density_norm=1.0, xi=0j) for rate in (1.0, 1.0, 100.0)]
        spectrum = SimpleNamespace(modes=lambda: modes)
        with pytest.warns(ConvergenceWarning):
            transition_kernel(post_params, spectrum, 10.0, 1.0, 20.0)


@pytest.mark.unit
class TestCurves:

    def test_survival_curve_kind_and_meta(self, post_params, post_spectrum):
        """Kind follows theta; meta records the truncation"""
        curve = survival_curve(post_params, post_spectrum, 0.0, [0.0, 1.0, 2.0, 5.0])
        assert curve.kind is CurveKind.SURVIVAL_POST
        assert curve.values[0] == 1.0
        assert curve.meta.n_modes == 40
        assert curve.meta.r == 0.0
        assert curve.meta.t_conv == pytest.approx(t_conv(post_params, post_spectrum, 0.0))

    def test_density_curve_kind(self, pre_params, pre_spectrum):
        """Pre-change density curves are labelled as such"""
        curve = density_curve(pre_params, pre_spectrum, 25.0, [1.0, 2.0])
        assert curve.kind is CurveKind.DENSITY_PRE
        assert all(v >= 0 for v in curve.values)

    def test_density_curve_rejects_time_zero(self, pre_params, pre_spectrum):
        """Density grids need t > 0"""
        with pytest.raises(DomainError):
            density_curve(pre_params, pre_spectrum, 25.0, [0.0, 1.0])

    def test_preconvergence_flags(self, post_params, post_spectrum):
        """Points below t_conv are flagged, t = 0 and later points are not"""
        short = post_spectrum.truncated(3)
        floor = t_conv(post_params, short, 0.0)
        curve = survival_curve(post_params, short, 0.0, [0.0, 0.5 * floor, 2 * floor + 1.0])
        assert curve.point_flags == [CurveFlag.OK, CurveFlag.PRECONV, CurveFlag.OK]

    def test_curve_matches_pointwise(self, post_params, post_spectrum):
        """Vectorized curves equal point evaluation"""
        grid = [1.0, 3.0, 9.0]
        curve = survival_curve(post_params, post_spectrum, 10.0, grid)
        for t, value in zip(grid, curve.values):
            assert value == pytest.approx(survival(post_params, post_spectrum, 10.0, t), rel=1e-12, abs=1e-15)

    def test_rejects_unsorted_grid(self, post_params, post_spectrum):
        """Grids must be strictly increasing"""
        with pytest.raises(DomainError):
            survival_curve(post_params, post_spectrum, 10.0, [2.0, 1.0])

    def test_classical_start_past_t_conv(self, pre_params, pre_spectrum_mid):
        """r = 0 curves just past t_conv are accurate, in range and non-increasing"""
        floor = t_conv(pre_params, pre_spectrum_mid, 0.0)
        assert floor > 0.1
        grid = [1.01 * floor, 1.5 * floor, 3.0 * floor]
        curve = survival_curve(pre_params, pre_spectrum_mid, 0.0, grid)
        assert curve.point_flags == [CurveFlag.OK] * 3
        assert curve.meta.worst_undershoot >= -1e-9
        assert all(0.0 <= v <= 1.0 for v in curve.values)
        # the pre-change statistic needs far longer than t_conv to climb from 0 to A = 100
        assert curve.values[0] >= 0.999

    def test_classical_start_early_points_flagged(self, pre_params, pre_spectrum_mid):
        """Early r = 0 points are flagged instead of breaking the curve"""
        grid = [0.08, 0.1, 0.15, 0.2, 0.5, 2.0, 5.0]
        curve = survival_curve(pre_params, pre_spectrum_mid, 0.0, grid)
        floor = curve.meta.t_conv
        assert curve.point_flags == [CurveFlag.PRECONV if t < floor else CurveFlag.OK for t in grid]
        assert curve.point_flags[0] is CurveFlag.PRECONV
        assert curve.point_flags[-1] is CurveFlag.OK
        assert all(0.0 <= v <= 1.0 for v in curve.values)

    def test_classical_start_density(self, post_params, post_spectrum_mid):
        """r = 0 density curves build and stay nonnegative"""
        curve = density_curve(post_params, post_spectrum_mid, 0.0, [0.05, 0.2, 1.0, 4.0])
        assert curve.point_flags[-1] is CurveFlag.OK
        assert all(v >= 0 for v in curve.values)

    def test_overflow_is_a_series_error(self, post_params, post_spectrum, monkeypatch):
        """Non-finite series values raise a library error, not a validation error"""
        profile = (np.array([1.7e308, 1.7e308]), np.array([1.0, 2.0]))
        monkeypatch.setattr(distribution_module, "mode_profile", lambda params, spectrum, r: profile)
        with pytest.raises(SeriesBreakdownError) as exc_info:
            survival_curve(post_params, post_spectrum, 0.0, [0.001, 1.0])
        assert exc_info.value.exit_code == 1

    def test_inconsistent_values_are_a_series_error(self, post_params, post_spectrum, monkeypatch):
        """Increasing values at converged points raise a library error"""
        profile = (np.array([1.0, -1.0, 1e-12]), np.array([1.0, 5.0, 10.0]))
        monkeypatch.setattr(distribution_module, "mode_profile", lambda params, spectrum, r: profile)
        with pytest.raises(SeriesBreakdownError) as exc_info:
            survival_curve(post_params, post_spectrum, 0.0, [0.05, 0.5])
        assert "non-increasing" in str(exc_info.value)


@pytest.mark.unit
class TestSeriesConvergence:

    def test_cancellation_time(self):
        """Smallest t with every |a_k| e^{-rate_k t} <= 1e4"""
        assert cancellation_time(np.array([1e6, 1.0]), np.array([2.0, 1.0])) == pytest.approx(math.log(100.0) / 2.0)
        assert cancellation_time(np.array([0.5, -3.0]), np.array([1.0, 2.0])) == 0.0

    def test_convergence_time_takes_the_later_criterion(self):
        """The dominant middle term sets t_conv when the last term is already small"""
        amplitudes = np.array([1.0, -1e8, 1e-12])
        rates = np.array([1.0, 10.0, 100.0])
        assert convergence_time(amplitudes, rates) == pytest.approx(math.log(1e4) / 10.0)

    def test_tail_criterion(self):
        """A large last term sets t_conv by the 1e-10 rule"""
        amplitudes = np.array([1.0, 1e-2])
        rates = np.array([1.0, 4.0])
        assert convergence_time(amplitudes, rates) == pytest.approx(math.log(1e8) / 4.0)

    def test_classical_start_middle_terms_dominate(self, pre_params, pre_spectrum_mid):
        """At r = 0 no term exceeds the budget from t_conv on"""
        amplitudes, rates = mode_profile(pre_params, pre_spectrum_mid, 0.0)
        floor = convergence_time(amplitudes, rates)
        assert np.abs(amplitudes[-1]) * math.exp(-rates[-1] * floor) <= 1e-10 * (1 + 1e-9)
        assert np.max(np.abs(amplitudes) * np.exp(-rates * floor)) <= 1e4 * (1 + 1e-9)
        assert np.argmax(np.abs(amplitudes) * np.exp(-rates * 0.5 * floor)) < MID_MODES - 1


@pytest.mark.unit
@pytest.mark.validation
class TestClassicalStartMoments:

    def test_post_change(self, post_params, post_spectrum_mid):
        """r = 0 series moment matches the Ei closed form within 0.5%"""
        value, lower = reconstruct_moment(post_params, post_spectrum_mid, 0.0, 1e-3)
        assert value == pytest.approx(add0(post_params, 0.0), rel=5e-3)
        assert 1e-3 < lower < 1.0

    def test_pre_change(self, pre_params, pre_spectrum_mid):
        """r = 0 series moment matches A - r within 0.5%"""
        value, lower = reconstruct_moment(pre_params, pre_spectrum_mid, 0.0, 1e-3)
        assert value == pytest.approx(arl(pre_params, 0.0), rel=5e-3)
        assert lower > 1e-3

    def test_partial_moment_bounds(self, post_params, post_spectrum_mid):
        """The integral from the raised limit falls short of the moment by at most that limit"""
        value, lower = reconstruct_moment(post_params, post_spectrum_mid, 0.0, 1e-3)
        partial = moment_from_survival(post_params, post_spectrum_mid, 0.0, 1e-3)
        assert partial == pytest.approx(value - lower, rel=1e-12)
        assert add0(post_params, 0.0) - lower * (1 + 5e-3) <= partial <= add0(post_params, 0.0) * (1 + 5e-3)

    def test_limit_never_below_t_star(self, post_params, post_spectrum_mid):
        """The requested t* is a floor for every headstart"""
        for r in (0.0, 25.0, 50.0, 100.0):
            _, lower = reconstruct_moment(post_params, post_spectrum_mid, r, 2e-3)
            assert lower >= 2e-3

    def test_rejects_nonpositive_t_star(self, post_params, post_spectrum):
        """t* must be positive"""
        with pytest.raises(DomainError):
            moment_from_survival(post_params, post_spectrum, 10.0, 0.0)


@pytest.mark.slow
@pytest.mark.validation
class TestMomentIdentity:

    @pytest.mark.parametrize("r", [0.0, 25.0, 50.0, 75.0])
    def test_pre_change(self, pre_params, pre_spectrum_full, r):
        """Series moment plus the lower limit matches A - r within 0.5%"""
        value, _ = reconstruct_moment(pre_params, pre_spectrum_full, r, 1e-3)
        assert value == pytest.approx(arl(pre_params, r), rel=5e-3)

    def test_post_change(self, post_params, post_spectrum_full):
        """Series moment matches the Ei closed form within 0.5%"""
        value, _ = reconstruct_moment(post_params, post_spectrum_full, 0.0, 1e-3)
        assert value == pytest.approx(add0(post_params, 0.0), rel=5e-3)

    def test_bias_bounded_by_t_star(self, post_params, post_spectrum_full):
        """The truncated integral never exceeds the moment"""
        partial = moment_from_survival(post_params, post_spectrum_full, 0.0, 1e-3)
        assert partial <= add0(post_params, 0.0) * (1 + 5e-3)
