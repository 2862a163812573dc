"""
Staged (Lebeau-Robbiano) null control and the observability-cost law.

Stage j occupies [sⱼ, sⱼ + Tⱼ] with Tⱼ = T·2^{-j-1} and sⱼ = T(1 - 2^{-j}). Its first
half steers the modes with λₖ ≤ λⱼ = 2ʲλ_base to zero, its second half lets every
mode decay freely.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.linalg import lstsq

from ..eigensolver import SpectralElement
from ..spectral_estimator import gram_matrix
from .heat import (
    ControlConfig,
    ControlError,
    ControlResult,
    StageReport,
    _coefficients_on,
    closed_form_gramian,
    gramian_from_gram,
    observability_constant,
    sample_control,
    solve_gramian,
    synthesize_hum_control,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Stage:
    index: int
    start: float
    length: float
    control_window: float
    cutoff: float


@dataclass(frozen=True)
class Schedule:
    stages: List[Stage]
    c_obs: float
    lambda_base: float


def stage_count(T: float, lambda_base: float, cutoff: float, tail_tol: float) -> int:
    """
    Smallest J with e^{-λ_J²T_J/2} < tail_tol (λ_J²T_J/2 = 2^{J-2}λ_base²T) and λ_J ≥ cutoff.
    """
    target = math.log(1.0 / tail_tol)
    J = 0
    while 2.0 ** (J - 2) * lambda_base ** 2 * T <= target or 2.0 ** J * lambda_base < cutoff:
        J += 1
    return J


def lebeau_robbiano_schedule(cfg: ControlConfig, lambda_base: Optional[float] = None) -> Schedule:
    """Dyadic stage plan and the direct observability constant C_obs."""
    base = cfg.lambda_base if cfg.lambda_base is not None else lambda_base
    if base is None or not base > 0:
        raise ControlError(f"Stage base frequency must be positive, got {base}")
    c_obs = observability_constant(cfg)

    if cfg.max_stages == 1:
        return Schedule([Stage(0, 0.0, cfg.T, cfg.T, cfg.cutoff)], c_obs, base)

    J = stage_count(cfg.T, base, cfg.cutoff, cfg.tail_tol)
    if cfg.max_stages is not None and J + 1 > cfg.max_stages:
        logger.warning(f"Schedule needs {J + 1} stages; truncating to {cfg.max_stages}")
        J = cfg.max_stages - 1
    stages = []
    for j in range(J + 1):
        length = cfg.T * 2.0 ** (-j - 1)
        start = cfg.T * (1.0 - 2.0 ** (-j))
        stages.append(Stage(j, start, length, length / 2.0, min(2.0 ** j * base, cfg.cutoff)))
    return Schedule(stages, c_obs, base)


def run_lr_control(u0: SpectralElement, cfg: ControlConfig) -> ControlResult:
    """
    Execute the staged plan on the span of modes with λₖ ≤ cfg.cutoff.

    A stage whose Gramian is flagged is skipped: the state decays freely over it.
    """
    basis = u0.basis
    indices = basis.indices_below(cfg.cutoff)
    frequencies = basis.frequencies[indices]
    mus = frequencies ** 2
    G = gram_matrix(basis, cfg.cutoff, cfg.omega).matrix
    schedule = lebeau_robbiano_schedule(cfg, lambda_base=float(frequencies[0]) if frequencies.size else None)

    state = _coefficients_on(u0, indices)
    exact_state = state.copy()
    reference = float(np.linalg.norm(state))
    cost_sq = 0.0
    times, samples, reports = [], [], []
    any_flag = False
    worst_condition = 1.0

    for stage in schedule.stages:
        window = stage.control_window
        sub = np.nonzero(frequencies <= stage.cutoff * (1.0 + 1e-12))[0]
        gramian = gramian_from_gram(G, frequencies, window, cfg.m, cfg.refine_tol)
        decay = np.exp(-mus * window)
        rhs = -decay[sub] * state[sub]
        solve = solve_gramian(gramian.matrix[np.ix_(sub, sub)], rhs, cfg.flag_ratio)
        worst_condition = max(worst_condition, solve.condition)

        if solve.flagged:
            any_flag = True
            logger.warning(f"Stage {stage.index} Gramian flagged; skipping control on this stage")
            state = decay * state
            exact_state = decay * exact_state
            stage_cost = 0.0
        else:
            q = solve.q
            state = decay * state + gramian.matrix[:, sub] @ q
            exact = closed_form_gramian(G, frequencies, window)
            exact_state = decay * exact_state + exact[:, sub] @ q
            stage_cost = float(q @ gramian.matrix[np.ix_(sub, sub)] @ q)
            cost_sq += stage_cost
            times.append(stage.start + gramian.nodes)
            samples.append(sample_control(basis, indices[sub], cfg.omega, frequencies[sub], q,
                                          window, gramian.nodes))

        free = stage.length - window
        if free > 0:
            state = np.exp(-mus * free) * state
            exact_state = np.exp(-mus * free) * exact_state
        reports.append(StageReport(stage.index, stage.start, window, stage.cutoff, int(sub.size),
                                   math.sqrt(max(stage_cost, 0.0)), solve.flagged, solve.flagged))

    # Remaining time after the last stage is free decay.
    tail = cfg.T - (schedule.stages[-1].start + schedule.stages[-1].length)
    if tail > 0:
        state = np.exp(-mus * tail) * state
        exact_state = np.exp(-mus * tail) * exact_state

    n = basis.grid.n
    control = np.concatenate(samples) if samples else np.zeros((0, n))
    residual = 0.0 if reference == 0 else float(np.linalg.norm(state)) / reference
    exact_residual = 0.0 if reference == 0 else float(np.linalg.norm(exact_state)) / reference
    return ControlResult(times=np.concatenate(times) if times else np.empty(0), x=basis.grid.x,
                         control=control, cost=math.sqrt(cost_sq), residual=residual,
                         exact_residual=exact_residual, flagged=any_flag,
                         condition=worst_condition, terminal=state, stages=reports)


@dataclass(frozen=True, eq=False)
class CostLawReport:
    horizons: np.ndarray
    costs: np.ndarray
    c_obs: np.ndarray
    regressor: np.ndarray
    slope: float
    intercept: float
    r_squared: float
    monotone: bool
    staged: bool
    flags: List[bool] = field(default_factory=list)

    def table(self) -> dict:
        """Columns for costlaw.csv."""
        return {"T": self.horizons.tolist(), "cost": self.costs.tolist(), "C_obs": self.c_obs.tolist()}


def linear_fit(x: np.ndarray, y: np.ndarray):
    """Least-squares line y ≈ intercept + slope·x and its R²."""
    design = np.column_stack((np.ones_like(x), x))
    coef = lstsq(design, y)[0]
    fitted = design @ coef
    total = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if total == 0.0 else 1.0 - float(np.sum((y - fitted) ** 2)) / total
    return float(coef[1]), float(coef[0]), r2


def cost_law_sweep(u0: SpectralElement, cfg: ControlConfig, horizons: Sequence[float],
                   staged: bool = False) -> CostLawReport:
    """
    Control cost over a list of horizons, fitted as log cost against T^{-ζ/(2-ζ)}.

    Needs at least 4 horizons spanning a factor 8. Single-shot HUM is used unless
    staged is set.
    """
    T = np.asarray(sorted(horizons), dtype=float)
    if T.size < 4:
        raise ControlError(f"Cost-law sweep needs at least 4 horizons, got {T.size}")
    if T[0] <= 0 or T[-1] / T[0] < 8.0:
        raise ControlError("Cost-law horizons must be positive and span at least a factor 8")

    costs, c_obs, flags = [], [], []
    for horizon in T:
        run_cfg = cfg.with_horizon(float(horizon))
        result = run_lr_control(u0, run_cfg) if staged else synthesize_hum_control(u0, run_cfg)
        costs.append(result.cost)
        flags.append(result.flagged)
        c_obs.append(observability_constant(run_cfg))
    costs = np.array(costs)
    regressor = T ** (-cfg.zeta / (2.0 - cfg.zeta))
    if np.any(costs <= 0):
        raise ControlError("Cost-law sweep produced a zero cost; use a nonzero initial state")
    slope, intercept, r2 = linear_fit(regressor, np.log(costs))
    monotone = bool(np.all(np.diff(costs) <= 1e-12 * costs[:-1]))
    return CostLawReport(horizons=T, costs=costs, c_obs=np.array(c_obs), regressor=regressor,
                         slope=slope, intercept=intercept, r_squared=r2, monotone=monotone,
                         staged=staged, flags=flags)
