"""
Spectrum

Eigenvalue roots of the absorbing-boundary problem and their mode weights.

Eigenvalues are lambda = mu^2 (xi^2 - 1) / 8 with xi either a real root alpha0
of W_{1,alpha/2}(u_A) = 0 (pre-change only, at most one) or i*beta for the
countably many roots of W_{1-theta, i beta/2}(u_A) = 0, where u_A = 2/(mu^2 A).

Rules:
- roots are scanned on a uniform beta grid, cross-checked against the cosine
  phase of the real-form identity and polished with brentq
- the scan ceiling doubles from 50 up to 6400
- weights are computed once per root and stored on an immutable Spectrum
"""

import cmath
import logging
import math
import warnings
from typing import List, Literal, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from gsr_dist.core.config import get_settings
from gsr_dist.core.exceptions import (
    BracketExhaustionError,
    ConvergenceWarning,
    DomainError,
    NormalizationError,
    RegimeError,
    RootMultiplicityError,
)
from gsr_dist.schemas.indices import WhittakerIndices
from gsr_dist.schemas.params import ModelParams
from gsr_dist.schemas.spectrum import ModeWeight, Spectrum
from gsr_dist.specfun import (
    kummer_m,
    log_gamma_complex,
    whittaker_w,
    whittaker_w_db,
    whittaker_w_dz,
)
from gsr_dist.utils.parallel import ordered_map

logger = logging.getLogger(__name__)

BETA_SCAN_START = 50.0
BETA_SCAN_CEILING = 6400.0
BETA_SCAN_STEP = 0.05
BETA_ZERO_SHIFT = 1e-9
ALPHA_SCAN_INTERVALS = 10_000
ROOT_XTOL = 1e-12
RESIDUAL_TARGET = 1e-10
IMAG_RESIDUE_TOL = 1e-9
NORMALIZATION_FLOOR = 1e-300

RootKind = Literal["alpha", "beta"]


def _first_index(params: ModelParams) -> float:
    return 1.0 - params.theta


def characteristic_fn(params: ModelParams, beta: float) -> float:
    """W_{1-theta, i beta/2}(u_A), real-valued"""
    if beta < 0:
        raise DomainError(f"beta must be nonnegative, got {beta}")
    idx = WhittakerIndices(first=_first_index(params), second=complex(0.0, 0.5 * beta))
    return whittaker_w(idx, params.u_threshold).real


def characteristic_fn_real(params: ModelParams, alpha: float) -> float:
    """W_{1, alpha/2}(u_A) for the real root in the pre-change regime"""
    if params.theta != 0:
        raise RegimeError("the real-root equation is inconsistent when theta = 1")
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    idx = WhittakerIndices(first=1.0, second=complex(0.5 * alpha, 0.0))
    return whittaker_w(idx, params.u_threshold).real


def phase_fn(params: ModelParams, beta: float) -> float:
    """Cosine phase of the real form W = 2|X| cos(phase), modulo 2 pi; beta > 0"""
    a = _first_index(params)
    b = complex(0.0, 0.5 * beta)
    u = params.u_threshold
    m = kummer_m(0.5 + b - a, 1.0 + 2.0 * b, u)
    phase = (
        log_gamma_complex(-2.0 * b).imag
        - log_gamma_complex(0.5 - b - a).imag
        + 0.5 * beta * math.log(u)
        + cmath.phase(m)
    )
    return phase


def _expected_crossings(phases: np.ndarray) -> np.ndarray:
    """Number of pi/2 + k pi levels crossed between consecutive unwrapped phases"""
    levels = np.floor((phases - 0.5 * math.pi) / math.pi)
    return np.abs(np.diff(levels)).astype(int)


def _sign_brackets(grid: np.ndarray, values: np.ndarray) -> List[Tuple[float, float, float]]:
    brackets = []
    for j in range(grid.size - 1):
        if values[j] == 0.0:
            continue
        if values[j + 1] == 0.0 or values[j] * values[j + 1] < 0:
            scale = max(abs(values[j]), abs(values[j + 1]))
            brackets.append((float(grid[j]), float(grid[j + 1]), scale))
    return brackets


def _refine(params: ModelParams, lo: float, hi: float, pieces: int = 16) -> List[Tuple[float, float, float]]:
    grid = np.linspace(lo, hi, pieces + 1)
    values = np.array([characteristic_fn(params, float(beta)) for beta in grid])
    return _sign_brackets(grid, values)


def _scan_segment(params: ModelParams, lo: float, hi: float) -> List[Tuple[float, float, float]]:
    n_steps = max(1, int(math.ceil((hi - lo) / BETA_SCAN_STEP)))
    grid = np.linspace(lo, hi, n_steps + 1)
    values = np.array([characteristic_fn(params, float(beta)) for beta in grid])
    brackets = _sign_brackets(grid, values)

    # Cross-check the sign scan against the phase: a step crossing a phase level
    # without a sign change, or crossing two, hides a root pair.
    phase_grid = grid[grid > 0]
    if phase_grid.size >= 2:
        phases = np.unwrap([phase_fn(params, float(beta)) for beta in phase_grid])
        expected = _expected_crossings(phases)
        found = {lo_b for lo_b, _, _ in brackets}
        for j in np.nonzero(expected)[0]:
            lo_b, hi_b = float(phase_grid[j]), float(phase_grid[j + 1])
            if expected[j] == 1 and lo_b in found:
                continue
            logger.debug("Refining beta interval [%g, %g] flagged by the phase", lo_b, hi_b)
            brackets = [br for br in brackets if br[0] != lo_b]
            brackets.extend(_refine(params, lo_b, hi_b))
        brackets.sort()
    return brackets


def _polish(params: ModelParams, bracket: Tuple[float, float, float]) -> Tuple[float, float]:
    lo, hi, scale = bracket
    f_lo = characteristic_fn(params, lo)
    f_hi = characteristic_fn(params, hi)
    if f_hi == 0.0:
        return hi, 0.0
    root = brentq(lambda beta: characteristic_fn(params, beta), lo, hi, xtol=ROOT_XTOL, maxiter=200)
    mid = characteristic_fn(params, 0.5 * (lo + hi))
    local_scale = max(scale, abs(f_lo), abs(f_hi), abs(mid))
    residual = abs(characteristic_fn(params, root)) / local_scale if local_scale > 0 else 0.0
    return float(root), residual


def _locate_betas(params: ModelParams, n_modes: int) -> Tuple[List[float], float]:
    start = 0.0
    if characteristic_fn(params, 0.0) == 0.0:
        logger.warning("characteristic function vanishes at beta = 0; scanning from %g", BETA_ZERO_SHIFT)
        start = BETA_ZERO_SHIFT

    threads = get_settings().threads
    roots: List[float] = []
    residual_max = 0.0
    lo, ceiling = start, BETA_SCAN_START
    while True:
        brackets = _scan_segment(params, lo, ceiling)
        polished = ordered_map(lambda br: _polish(params, br), brackets, threads)
        for root, residual in polished:
            if root <= 0.0 or (roots and root <= roots[-1]):
                continue
            roots.append(root)
            residual_max = max(residual_max, residual)
        if len(roots) >= n_modes:
            break
        if ceiling >= BETA_SCAN_CEILING:
            raise BracketExhaustionError(len(roots), n_modes, ceiling)
        lo, ceiling = ceiling, 2.0 * ceiling

    logger.info(
        "Located %d beta roots below %g for mu=%g A=%g theta=%d",
        n_modes,
        ceiling,
        params.mu,
        params.a_threshold,
        params.theta,
    )
    return roots[:n_modes], residual_max


def find_betas(params: ModelParams, n_modes: int) -> List[float]:
    """First n_modes positive roots of characteristic_fn, strictly increasing"""
    if n_modes < 1:
        raise DomainError("n_modes must be at least 1")
    roots, residual_max = _locate_betas(params, n_modes)
    if residual_max > RESIDUAL_TARGET:
        logger.warning("worst relative root residual %.3g exceeds %.0e", residual_max, RESIDUAL_TARGET)
    return roots


def find_alpha0(params: ModelParams, intervals: int = ALPHA_SCAN_INTERVALS) -> Optional[float]:
    """The real root of W_{1,alpha/2}(u_A) in [0, 1], or None; more than one root raises"""
    if params.theta != 0:
        raise RegimeError("the real-root equation is inconsistent when theta = 1")
    if intervals < 1:
        raise DomainError("the alpha scan needs at least one interval")

    grid = np.linspace(0.0, 1.0, intervals + 1)
    values = np.array([characteristic_fn_real(params, float(alpha)) for alpha in grid])

    zeros = np.nonzero(values == 0.0)[0]
    changes = np.nonzero(values[:-1] * values[1:] < 0)[0]
    candidates = np.union1d(zeros, changes)
    if candidates.size == 0:
        return None
    # adjacent hits come from one root straddling a grid point
    clusters = 1 + int(np.count_nonzero(np.diff(candidates) > 1))
    if clusters > 1:
        raise RootMultiplicityError(
            f"alpha scan found {clusters} separated roots in [0, 1] for mu={params.mu:g} A={params.a_threshold:g}"
        )
    if zeros.size and (not changes.size or zeros[0] <= changes[0]):
        return float(grid[zeros[0]])

    j = int(changes[0])
    root = brentq(
        lambda alpha: characteristic_fn_real(params, alpha),
        float(grid[j]),
        float(grid[j + 1]),
        xtol=ROOT_XTOL,
        maxiter=200,
    )
    return float(root)


def mode_weight(params: ModelParams, root: float, kind: RootKind = "beta") -> ModeWeight:
    """Survival coefficient 4 xi / ((1 - xi^2) dW/db) and density constant xi / (dW/db dW/dz)"""
    if kind == "alpha":
        xi = complex(root, 0.0)
    elif kind == "beta":
        xi = complex(0.0, root)
    else:
        raise DomainError(f"unknown root kind '{kind}'")

    if xi == 0:
        return ModeWeight(xi=xi, survival_coefficient=0.0, density_norm=0.0)

    idx = WhittakerIndices(first=_first_index(params), second=0.5 * xi)
    u = params.u_threshold
    d_b = whittaker_w_db(idx, u)
    if abs(d_b) < NORMALIZATION_FLOOR:
        raise NormalizationError(f"dW/db vanishes at root {kind}={root}")
    one_minus_xi_sq = 1.0 - xi * xi
    if one_minus_xi_sq == 0:
        raise NormalizationError(f"root {kind}={root} sits on the edge of the spectrum")

    coefficient = 4.0 * xi / (one_minus_xi_sq * d_b)
    residue = abs(coefficient.imag) / abs(coefficient) if coefficient != 0 else 0.0
    if residue > IMAG_RESIDUE_TOL:
        warnings.warn(
            f"survival coefficient at {kind}={root} keeps imaginary residue {residue:.2e}",
            ConvergenceWarning,
            stacklevel=2,
        )
        logger.warning("imaginary residue %.2e at %s=%g", residue, kind, root)

    d_z = whittaker_w_dz(idx, u)
    density_norm = xi / (d_b * d_z)

    return ModeWeight(
        xi=xi,
        survival_coefficient=coefficient.real,
        density_norm=density_norm.real,
        imag_residue=residue,
    )


def build_spectrum(params: ModelParams, n_modes: Optional[int] = None) -> Spectrum:
    """Roots and weights for one (mu, A, theta), truncated to n_modes imaginary roots"""
    n_modes = n_modes if n_modes is not None else get_settings().default_modes
    if n_modes < 1:
        raise DomainError("n_modes must be at least 1")

    alpha0 = find_alpha0(params) if params.theta == 0 else None
    betas, residual_max = _locate_betas(params, n_modes)

    weights = ordered_map(lambda beta: mode_weight(params, beta, "beta"), betas)
    if alpha0 is not None:
        weights.insert(0, mode_weight(params, alpha0, "alpha"))

    spectrum = Spectrum(
        params=params,
        alpha0=alpha0,
        betas=betas,
        weights_survival=[w.survival_coefficient for w in weights],
        weights_density_norm=[w.density_norm for w in weights],
        n_modes=n_modes,
        residual_max=residual_max,
    )
    logger.info(
        "Built spectrum: %d modes, alpha0 %s, residual_max %.3g",
        n_modes,
        "present" if alpha0 is not None else "absent",
        residual_max,
    )
    return spectrum
