"""
Monte-Carlo

First-passage simulation of the combined GSR diffusion through the threshold,
used to cross-validate the analytic survival curves.

The Euler-Maruyama step R_{k+1} = R_k g_k + dt with
g_k = 1 + theta mu^2 dt + mu sqrt(dt) Z_k is linear in R, so a chunk of n
steps starting from R_0 has the closed form

    R_n = P_n (R_0 + dt sum_{j=1..n} 1/P_j),   P_n = g_0 ... g_{n-1}

which is evaluated with cumulative log-products.
"""

import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np

from gsr_dist.core.config import get_settings
from gsr_dist.core.exceptions import DomainError, GridMismatchError, NumericalBlowupError
from gsr_dist.distribution import closed_form_moment
from gsr_dist.schemas.curve import Curve, CurveKind, CurveMeta
from gsr_dist.schemas.params import ModelParams
from gsr_dist.schemas.simulation import ComparisonReport, PassageSample, SimConfig
from gsr_dist.utils.parallel import ordered_map

logger = logging.getLogger(__name__)

BLOWUP_FACTOR = 1e6
BAND_WIDTH = 3.0
OUTSIDE_FRACTION = 0.1
GRID_RTOL = 1e-12
RUNTIME_GUARD_MEAN = 1e3
DEFAULT_GRID_START = 0.1
DEFAULT_GRID_POINTS = 20
T_MAX_FACTOR = 10.0
T_GRID_FACTOR = 5.0
HALVING_FACTOR = 1.0 / (math.sqrt(2.0) - 1.0)


def path_generator(seed: int, path_index: int) -> np.random.Generator:
    """Counter-based stream keyed by (seed, path_index); the counter indexes the step"""
    key = np.array([seed, path_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _advance(cfg: SimConfig, state: float, normals: np.ndarray) -> np.ndarray:
    """States after each step of one chunk, starting from ``state``"""
    params = cfg.params
    growth = 1.0 + params.theta * params.mu_sq * cfg.dt + abs(params.mu) * math.sqrt(cfg.dt) * normals
    if np.any(growth <= 0.0):
        raise NumericalBlowupError(
            f"non-positive growth factor at dt={cfg.dt:g}; reduce the time step"
        )
    log_p = np.cumsum(np.log(growth))
    inverse_sums = np.cumsum(np.exp(-log_p))
    return np.exp(log_p) * (state + cfg.dt * inverse_sums)


def simulate_passage(cfg: SimConfig, path_index: int) -> PassageSample:
    """One Euler path; stop_time = k dt at the first step k with R >= A, else t_max censored"""
    if path_index < 0:
        raise DomainError(f"path_index must be nonnegative, got {path_index}")

    threshold = cfg.params.a_threshold
    if cfg.r >= threshold:
        return PassageSample(stop_time=cfg.dt, crossed=True, dt=cfg.dt, t_max=cfg.t_max)

    rng = path_generator(cfg.seed, path_index)
    batch = get_settings().mc_batch_size
    n_steps = cfg.n_steps
    state = cfg.r
    done = 0
    while done < n_steps:
        size = min(batch, n_steps - done)
        states = _advance(cfg, state, rng.standard_normal(size))
        if not np.all(np.isfinite(states)):
            raise NumericalBlowupError(f"non-finite state on path {path_index}")

        hits = np.nonzero(states >= threshold)[0]
        if hits.size:
            j = int(hits[0])
            if states[j] > BLOWUP_FACTOR * threshold:
                raise NumericalBlowupError(
                    f"state {states[j]:.3g} exceeds {BLOWUP_FACTOR:g} x A on path {path_index}"
                )
            step = done + j + 1
            return PassageSample(
                stop_time=min(step * cfg.dt, cfg.t_max),
                crossed=True,
                dt=cfg.dt,
                t_max=cfg.t_max,
            )
        state = float(states[-1])
        done += size

    return PassageSample(stop_time=cfg.t_max, crossed=False, dt=cfg.dt, t_max=cfg.t_max)


def check_runtime(params: ModelParams, r: float) -> float:
    """Closed-form mean passage time; logs a warning when it makes a run expensive"""
    mean = closed_form_moment(params, r)
    if mean > RUNTIME_GUARD_MEAN:
        logger.warning(
            "mean passage time %.3g exceeds %g time units; Monte-Carlo will be slow",
            mean,
            RUNTIME_GUARD_MEAN,
        )
    return mean


def simulate_many(cfg: SimConfig, threads: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """All paths in index order: (stop_times, crossed); identical for any thread count"""
    samples = ordered_map(lambda i: simulate_passage(cfg, i), range(cfg.n_paths), threads)
    stop_times = np.array([s.stop_time for s in samples])
    crossed = np.array([s.crossed for s in samples], dtype=bool)
    logger.info(
        "Simulated %d paths at dt=%g: %d crossed, %d censored at t_max=%g",
        cfg.n_paths,
        cfg.dt,
        int(crossed.sum()),
        int((~crossed).sum()),
        cfg.t_max,
    )
    return stop_times, crossed


def _check_grid(cfg: SimConfig, t_grid: Sequence[float]) -> np.ndarray:
    grid = np.asarray(list(t_grid), dtype=float)
    if grid.size == 0:
        raise DomainError("time grid must not be empty")
    if np.any(grid <= 0) or np.any(grid > cfg.t_max):
        raise DomainError(f"time grid must lie within (0, t_max={cfg.t_max:g}]")
    return grid


def survival_from_samples(stop_times: np.ndarray, t_grid: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Fraction of stop times >= t and its binomial standard error"""
    grid = np.asarray(list(t_grid), dtype=float)
    n = stop_times.size
    ordered = np.sort(stop_times)
    below = np.searchsorted(ordered, grid, side="left")
    values = (n - below) / n
    std_errors = np.sqrt(values * (1.0 - values) / n)
    return values, std_errors


def empirical_survival(
    cfg: SimConfig,
    t_grid: Sequence[float],
    stop_times: Optional[np.ndarray] = None,
) -> Curve:
    """Empirical P(S >= t) on t_grid with binomial standard errors"""
    grid = _check_grid(cfg, t_grid)
    if stop_times is None:
        stop_times, _ = simulate_many(cfg)
    values, std_errors = survival_from_samples(stop_times, grid)
    return Curve(
        grid=[float(t) for t in grid],
        values=[float(v) for v in values],
        kind=CurveKind.EMPIRICAL_SURVIVAL,
        std_errors=[float(se) for se in std_errors],
        meta=CurveMeta(r=cfg.r, mc_paths=cfg.n_paths, dt=cfg.dt),
    )


def coarsened(cfg: SimConfig) -> SimConfig:
    """The same run at twice the time step"""
    if 2.0 * cfg.dt > cfg.t_max / 100:
        raise DomainError(f"dt={cfg.dt:g} cannot be doubled within t_max={cfg.t_max:g}")
    return SimConfig(
        params=cfg.params,
        r=cfg.r,
        dt=2.0 * cfg.dt,
        n_paths=cfg.n_paths,
        t_max=cfg.t_max,
        seed=cfg.seed,
    )


def discretization_allowance(
    cfg: SimConfig,
    t_grid: Sequence[float],
    fine: Optional[Curve] = None,
) -> np.ndarray:
    """Per-point |S_dt - S_2dt| / (sqrt(2) - 1), the dt-halving bound on the weak error"""
    grid = _check_grid(cfg, t_grid)
    fine = fine if fine is not None else empirical_survival(cfg, grid)
    coarse = empirical_survival(coarsened(cfg), grid)
    return HALVING_FACTOR * np.abs(np.asarray(fine.values) - np.asarray(coarse.values))


def compare_curves(
    analytic: Curve,
    empirical: Curve,
    allowance: Optional[Sequence[float]] = None,
) -> ComparisonReport:
    """Max deviation and the count of points outside 3 SE (+ allowance)"""
    a_grid = np.asarray(analytic.grid)
    e_grid = np.asarray(empirical.grid)
    if a_grid.shape != e_grid.shape or not np.allclose(a_grid, e_grid, rtol=GRID_RTOL, atol=0.0):
        raise GridMismatchError("analytic and empirical curves must share the same time grid")

    n_grid = a_grid.size
    deviation = np.abs(np.asarray(analytic.values) - np.asarray(empirical.values))
    std_errors = np.asarray(empirical.std_errors) if empirical.std_errors is not None else np.zeros(n_grid)
    slack = np.asarray(allowance, dtype=float) if allowance is not None else np.zeros(n_grid)
    if slack.shape != (n_grid,):
        raise GridMismatchError("allowance must have one entry per grid point")

    n_outside = int(np.sum(deviation > BAND_WIDTH * std_errors + slack))
    verdict = "pass" if n_outside <= math.floor(OUTSIDE_FRACTION * n_grid) else "fail"
    return ComparisonReport(
        max_abs_dev=float(deviation.max()),
        n_outside_3se=n_outside,
        n_grid=n_grid,
        dt=empirical.meta.dt if empirical.meta.dt is not None else 0.0,
        n_paths=empirical.meta.mc_paths if empirical.meta.mc_paths is not None else 0,
        verdict=verdict,
    )


def default_t_max(params: ModelParams, r: float) -> float:
    """Censoring horizon of ten closed-form means; 1 when the mean vanishes"""
    mean = closed_form_moment(params, r)
    return T_MAX_FACTOR * mean if mean > 0 else 1.0


def default_t_grid(params: ModelParams, r: float, n_points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """n_points linear over [0.1, 5 x mean]"""
    upper = T_GRID_FACTOR * closed_form_moment(params, r)
    if upper <= DEFAULT_GRID_START:
        raise DomainError(
            f"mean passage time {upper / T_GRID_FACTOR:.3g} is too short for the default grid"
        )
    return np.linspace(DEFAULT_GRID_START, upper, n_points)
