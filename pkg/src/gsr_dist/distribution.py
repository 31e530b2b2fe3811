"""
Distribution

Survival functions, time densities and the killed transition density of the
GSR stopping time, built from a Spectrum, plus the closed-form first moments.

The survival series is

    S(r, t) = sum_k c_k e^{-rate_k t} u_A^{1-theta} e^{-u_A/2} G_k(u_r)

with G_k = G_{1-theta, xi_k/2} the scaled Whittaker W and u = 2/(mu^2 x).
Working with G instead of e^{u/2} W keeps small headstarts finite.
"""

import logging
import math
import warnings
from typing import Callable, Sequence, Tuple

import numpy as np
from pydantic import ValidationError
from scipy.integrate import quad

from gsr_dist.core.exceptions import ConvergenceWarning, DomainError, SeriesBreakdownError
from gsr_dist.schemas.curve import Curve, CurveFlag, CurveKind, CurveMeta
from gsr_dist.schemas.indices import WhittakerIndices
from gsr_dist.schemas.params import EvalPoint, ModelParams
from gsr_dist.schemas.spectrum import Mode, Spectrum
from gsr_dist.specfun import scaled_e1, whittaker_w_scaled

logger = logging.getLogger(__name__)

R_MIN_FRACTION = 1e-8
TERM_FLOOR = 1e-16
CONVERGENCE_TOL = 1e-10
CANCELLATION_BUDGET = 1e4
NEGATIVE_NOISE = -1e-9
QUAD_EPSABS = 1e-9
QUAD_SPLIT_FRACTION = 1e-2
QUAD_LIMIT = 200
_EXP_MAX = 709.0


def _exp(x: float) -> float:
    return math.exp(x) if x < _EXP_MAX else math.inf


def _check_positive(x: float, name: str) -> float:
    if not x > 0:
        raise DomainError(f"{name} must be positive, got {x}")
    return float(x)


def _check_headstart(params: ModelParams, r: float) -> float:
    if r < 0 or r > params.a_threshold:
        raise DomainError(f"headstart must lie in [0, A={params.a_threshold}], got {r}")
    return float(r)


def speed_measure(x: float, params: ModelParams) -> float:
    """m(x) = (2/(mu^2 x^2)) x^{2 theta} e^{-2/(mu^2 x)}"""
    x = _check_positive(x, "x")
    log_m = math.log(2.0 / params.mu_sq) + (2.0 * params.theta - 2.0) * math.log(x) - params.u_of(x)
    return _exp(log_m)


def scale_measure(x: float, params: ModelParams) -> float:
    """s(x) = x^{-2 theta} e^{2/(mu^2 x)}"""
    x = _check_positive(x, "x")
    return _exp(params.u_of(x) - 2.0 * params.theta * math.log(x))


def _first_index(params: ModelParams) -> float:
    return 1.0 - params.theta


def _scaled_w(params: ModelParams, mode: Mode, u: float) -> float:
    idx = WhittakerIndices(first=_first_index(params), second=0.5 * mode.xi)
    return whittaker_w_scaled(idx, u).real


def _effective_headstart(params: ModelParams, r: float) -> float:
    return max(r, params.a_threshold * R_MIN_FRACTION)


def eigenfunction_constant(params: ModelParams, mode: Mode) -> float:
    """C with C^2 = (mu^2/2)^{2 theta} * density_norm"""
    c_sq = (0.5 * params.mu_sq) ** (2 * params.theta) * mode.density_norm
    return math.sqrt(abs(c_sq))


def eigenfunction(params: ModelParams, mode: Mode, x: float) -> float:
    """Normalized psi(x) = C e^{1/(mu^2 x)} (2/(mu^2 x))^{theta-1} W_{1-theta, xi/2}(2/(mu^2 x))"""
    x = _check_positive(x, "x")
    if x > params.a_threshold:
        raise DomainError(f"x must not exceed A={params.a_threshold}, got {x}")
    return eigenfunction_constant(params, mode) * _scaled_w(params, mode, params.u_of(x))


def weighted_inner_product(
    params: ModelParams,
    f: Callable[[float], float],
    g: Callable[[float], float],
) -> float:
    """int_0^A m(x) f(x) g(x) dx by adaptive quadrature split near the essential singularity at 0"""
    split = params.a_threshold * QUAD_SPLIT_FRACTION

    def integrand(x: float) -> float:
        m = speed_measure(x, params)
        if m == 0.0:
            return 0.0
        return m * f(x) * g(x)

    total = 0.0
    for lo, hi in ((0.0, split), (split, params.a_threshold)):
        value, _ = quad(integrand, lo, hi, epsabs=QUAD_EPSABS, limit=QUAD_LIMIT)
        total += value
    return total


# ---------------------------------------------------------------------------
# Survival and density series
# ---------------------------------------------------------------------------


def mode_profile(params: ModelParams, spectrum: Spectrum, r: float) -> Tuple[np.ndarray, np.ndarray]:
    """Per-mode survival amplitudes c_k phi_k(r) and decay rates at one headstart"""
    r = _check_headstart(params, r)
    u_a = params.u_threshold
    u = params.u_of(_effective_headstart(params, r))
    front = u_a ** _first_index(params) * math.exp(-0.5 * u_a)

    amplitudes = []
    rates = []
    for mode in spectrum.modes():
        amplitudes.append(mode.survival_coefficient * front * _scaled_w(params, mode, u))
        rates.append(mode.rate)
    return np.array(amplitudes), np.array(rates)


def cancellation_time(amplitudes: np.ndarray, rates: np.ndarray, budget: float = CANCELLATION_BUDGET) -> float:
    """Smallest t at which every term |a_k| e^{-rate_k t} is at most budget

    Near r = 0 the amplitudes grow geometrically with the mode index and the
    series is a sum of huge alternating terms until the decay catches up.
    """
    magnitudes = np.abs(np.asarray(amplitudes, dtype=float))
    rates = np.asarray(rates, dtype=float)
    large = magnitudes > budget
    if not np.any(large):
        return 0.0
    return float(np.max(np.log(magnitudes[large] / budget) / rates[large]))


def convergence_time(amplitudes: np.ndarray, rates: np.ndarray) -> float:
    """Smallest t at which the last term is at most 1e-10 and no term exceeds the cancellation budget"""
    if amplitudes.size == 0:
        return 0.0
    last = abs(float(amplitudes[-1]))
    tail = math.log(last / CONVERGENCE_TOL) / float(rates[-1]) if last > CONVERGENCE_TOL else 0.0
    return max(tail, cancellation_time(amplitudes, rates))


def t_conv(params: ModelParams, spectrum: Spectrum, r: float) -> float:
    return convergence_time(*mode_profile(params, spectrum, r))


def _series(amplitudes: np.ndarray, rates: np.ndarray, t: np.ndarray, weight_by_rate: bool) -> np.ndarray:
    weights = amplitudes * rates if weight_by_rate else amplitudes
    decay = np.exp(-np.outer(t, rates))
    return decay @ weights


def _warn_preconvergence(t: float, t_conv_value: float) -> None:
    if 0 < t < t_conv_value:
        warnings.warn(
            f"spectral series not converged at t={t:g} (t_conv={t_conv_value:g})",
            ConvergenceWarning,
            stacklevel=3,
        )


def survival(params: ModelParams, spectrum: Spectrum, r: float, t: float) -> float:
    """P(S_A^r >= t) under the regime of params; exactly 1 at t = 0"""
    r = _check_headstart(params, r)
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    if t == 0:
        return 1.0
    amplitudes, rates = mode_profile(params, spectrum, r)
    _warn_preconvergence(t, convergence_time(amplitudes, rates))
    value = float(_series(amplitudes, rates, np.array([t]), False)[0])
    return min(max(value, 0.0), 1.0)


def survival_at(spectrum: Spectrum, point: EvalPoint) -> float:
    """survival at a validated (params, r, t) point; the spectrum must match point.params"""
    if spectrum.params != point.params:
        raise DomainError("evaluation point and spectrum belong to different model parameters")
    return survival(point.params, spectrum, point.r, point.t)


def density(params: ModelParams, spectrum: Spectrum, r: float, t: float) -> float:
    """-dS/dt by term-wise differentiation; t > 0"""
    r = _check_headstart(params, r)
    t = _check_positive(t, "t")
    amplitudes, rates = mode_profile(params, spectrum, r)
    _warn_preconvergence(t, convergence_time(amplitudes * rates, rates))
    value = float(_series(amplitudes, rates, np.array([t]), True)[0])
    return max(value, 0.0)


def _curve_kind(params: ModelParams, survival_kind: bool) -> CurveKind:
    if survival_kind:
        return CurveKind.SURVIVAL_PRE if params.theta == 0 else CurveKind.SURVIVAL_POST
    return CurveKind.DENSITY_PRE if params.theta == 0 else CurveKind.DENSITY_POST


def _build_curve(
    params: ModelParams,
    spectrum: Spectrum,
    r: float,
    t_grid: Sequence[float],
    survival_kind: bool,
) -> Curve:
    grid = np.asarray(list(t_grid), dtype=float)
    if grid.size == 0:
        raise DomainError("time grid must not be empty")
    if np.any(grid < 0) or (not survival_kind and np.any(grid <= 0)):
        raise DomainError("density grids need t > 0 and survival grids t >= 0")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("time grid must be strictly increasing")

    amplitudes, rates = mode_profile(params, spectrum, r)
    t_conv_value = convergence_time(amplitudes if survival_kind else amplitudes * rates, rates)
    raw = _series(amplitudes, rates, grid, not survival_kind)
    if survival_kind:
        raw = np.where(grid == 0, 1.0, raw)
    if not np.all(np.isfinite(raw)):
        raise SeriesBreakdownError(f"series overflowed on the time grid at r={r:g}; raise the grid minimum")

    worst = float(min(raw.min(), 0.0))
    if worst < NEGATIVE_NOISE:
        logger.warning("series undershoot %.3g at r=%g clamped to 0", worst, r)
    values = np.clip(raw, 0.0, 1.0) if survival_kind else np.maximum(raw, 0.0)

    flags = [
        CurveFlag.PRECONV if 0 < t < t_conv_value else CurveFlag.OK for t in grid
    ]
    try:
        return Curve(
            grid=[float(t) for t in grid],
            values=[float(v) for v in values],
            kind=_curve_kind(params, survival_kind),
            flags=flags,
            meta=CurveMeta(
                r=r,
                n_modes=spectrum.n_modes,
                t_conv=t_conv_value,
                worst_undershoot=worst,
            ),
        )
    except ValidationError as exc:
        # points past t_conv disagree with the survival invariants
        raise SeriesBreakdownError(f"series values at r={r:g} are inconsistent: {exc.errors()[0]['msg']}") from exc


def survival_curve(params: ModelParams, spectrum: Spectrum, r: float, t_grid: Sequence[float]) -> Curve:
    return _build_curve(params, spectrum, r, t_grid, True)


def density_curve(params: ModelParams, spectrum: Spectrum, r: float, t_grid: Sequence[float]) -> Curve:
    return _build_curve(params, spectrum, r, t_grid, False)


# ---------------------------------------------------------------------------
# Transition density
# ---------------------------------------------------------------------------


def transition_kernel(params: ModelParams, spectrum: Spectrum, x: float, t: float, r: float) -> float:
    """p_theta(x, t | r) / m(x) = sum_k e^{-rate_k t} psi_k(x) psi_k(r)"""
    x = _check_positive(x, "x")
    r = _check_positive(r, "r")
    t = _check_positive(t, "t")
    if x > params.a_threshold or r > params.a_threshold:
        raise DomainError("x and r must not exceed the threshold A")

    norm = (0.5 * params.mu_sq) ** (2 * params.theta)
    u_x, u_r = params.u_of(x), params.u_of(r)
    total = 0.0
    peak = 0.0
    last = 0.0
    for mode in spectrum.modes():
        decay = math.exp(-mode.rate * t)
        if peak > 0 and decay * peak < TERM_FLOOR * abs(total):
            break
        product = norm * mode.density_norm * _scaled_w(params, mode, u_x) * _scaled_w(params, mode, u_r)
        peak = max(peak, abs(product))
        last = decay * product
        total += last

    if abs(last) > CONVERGENCE_TOL * abs(total):
        warnings.warn(
            f"transition density series not converged at t={t:g}",
            ConvergenceWarning,
            stacklevel=2,
        )
    return total


def transition_density(params: ModelParams, spectrum: Spectrum, x: float, t: float, r: float) -> float:
    """Killed density p_theta(x, t | r) by the truncated eigenfunction expansion"""
    kernel = transition_kernel(params, spectrum, x, t, r)
    m = speed_measure(x, params)
    return m * kernel if m > 0.0 else 0.0


def survival_integral_check(params: ModelParams, spectrum: Spectrum, r: float, t: float) -> float:
    """int_0^A p(x, t | r) dx, which must reproduce survival(r, t)"""
    return weighted_inner_product(
        params,
        lambda x: transition_kernel(params, spectrum, x, t, r),
        lambda x: 1.0,
    )


# ---------------------------------------------------------------------------
# First moments
# ---------------------------------------------------------------------------


def arl(params: ModelParams, r: float) -> float:
    """Pre-change mean stopping time E_inf[S_A^r] = A - r"""
    r = _check_headstart(params, r)
    return params.a_threshold - r


def add0(params: ModelParams, r: float) -> float:
    """Post-change mean stopping time E_0[S_A^r] via the exponential integral"""
    r = _check_headstart(params, r)
    if r == params.a_threshold:
        return 0.0
    front = 2.0 / params.mu_sq
    first = scaled_e1(params.u_threshold)
    second = 0.0 if r == 0 else scaled_e1(params.u_of(r))
    return front * (first - second)


def closed_form_moment(params: ModelParams, r: float) -> float:
    return arl(params, r) if params.theta == 0 else add0(params, r)


def integrate_modes(amplitudes: Sequence[float], rates: Sequence[float], t_star: float) -> float:
    """sum_k a_k / rate_k * e^{-rate_k t_star}: the exact tail integral of sum_k a_k e^{-rate_k t}"""
    t_star = _check_positive(t_star, "t_star")
    amplitudes = np.asarray(amplitudes, dtype=float)
    rates = np.asarray(rates, dtype=float)
    return float(np.sum(amplitudes / rates * np.exp(-rates * t_star)))


def _series_moment(params: ModelParams, spectrum: Spectrum, r: float, t_star: float) -> Tuple[float, float]:
    t_star = _check_positive(t_star, "t_star")
    amplitudes, rates = mode_profile(params, spectrum, r)
    lower = max(t_star, cancellation_time(amplitudes, rates))
    return integrate_modes(amplitudes, rates, lower), lower


def moment_from_survival(params: ModelParams, spectrum: Spectrum, r: float, t_star: float = 1e-3) -> float:
    """int_{t_low}^inf S(r, t) dt term by term; short of the first moment by at most t_low

    t_low is t_star, raised past the cancellation time at r. Near r = 0 the
    early terms are far too large to sum in double precision.
    """
    return _series_moment(params, spectrum, r, t_star)[0]


def reconstruct_moment(
    params: ModelParams, spectrum: Spectrum, r: float, t_star: float = 1e-3
) -> Tuple[float, float]:
    """Series moment plus the missing [0, t_low] piece, taken as t_low while r < A; returns (moment, t_low)"""
    integral, lower = _series_moment(params, spectrum, r, t_star)
    correction = lower if r < params.a_threshold else 0.0
    return integral + correction, lower
