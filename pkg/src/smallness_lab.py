"""
Propagation-of-smallness experiments on cosh lifts of random spectral elements.

For each sample the lab records sup|Φ| over D₁ = [0,1]×[-½,½], over a set ω on the
line y = 0 inside [0,1], and over D₂ = [-1,2]×[-3/2,3/2] (unit coordinates), then
fits the three-sup inequality sup_{D₁} ≤ C sup_ω^α sup_{D₂}^{1-α}.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .eigensolver import EigenBasis, lower_growth
from .ghost_lift import OVERFLOW_GUARD
from .potentials import Potential, evaluate
from .thick_sets import IntervalSet, Partition

logger = logging.getLogger(__name__)

MIN_SAMPLES = 30
INFEASIBLE_C = 1e12
DEFAULT_C_BUDGET = 10.0


class SmallnessError(ValueError):
    """Exception for invalid smallness geometries, samples or band parameters."""
    pass


@dataclass(frozen=True)
class SmallnessGeometry:
    """Unit geometry placed at x = origin + u/scale, y = v/scale."""
    origin: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise SmallnessError(f"Geometry scale must be positive, got {self.scale}")

    def to_physical(self, u: np.ndarray) -> np.ndarray:
        return self.origin + np.asarray(u, dtype=float) / self.scale

    @property
    def inner_x(self):
        return (self.origin, self.origin + 1.0 / self.scale)

    @property
    def outer_x(self):
        return (self.origin - 1.0 / self.scale, self.origin + 2.0 / self.scale)

    @property
    def inner_half_height(self) -> float:
        return 0.5 / self.scale

    @property
    def outer_half_height(self) -> float:
        return 1.5 / self.scale


@dataclass(frozen=True)
class SmallnessSample:
    sup_inner: float
    sup_omega: float
    sup_outer: float
    omega_measure: float
    ellipticity: float
    lam: float
    sample: int


def ellipticity_proxy(p: Potential, geometry: SmallnessGeometry, points: int = 2001) -> float:
    """Λ = exp(√ sup Ṽ) with Ṽ = a⁻²V over the physical x-range of D₂."""
    xs = np.linspace(*geometry.outer_x, points)
    v_sup = float(np.max(evaluate(p, xs))) / geometry.scale ** 2
    return math.exp(math.sqrt(v_sup))


def _interpolation(grid_x: np.ndarray, xs: np.ndarray):
    h = grid_x[1] - grid_x[0]
    idx = np.clip(np.floor((xs - grid_x[0]) / h).astype(int), 0, grid_x.size - 2)
    t = (xs - grid_x[idx]) / h
    return idx, t


def collect_samples(basis: EigenBasis, lambda_list: Sequence[float], omega_line: IntervalSet,
                    geometry: SmallnessGeometry, n_random: int, seed: int,
                    ny: int = 61, omega_points: int = 2000) -> List[SmallnessSample]:
    """
    Seeded random unit elements for each λ, lifted by cosh, with sups taken over
    grid abscissae in D₂ together with a fixed dense sampling of the line [0,1].

    ω is given in unit coordinates and must lie in [0,1] with |ω| ∈ (0, ½).
    """
    if not lambda_list:
        raise SmallnessError("lambda_list must be nonempty")
    if n_random < 1:
        raise SmallnessError(f"n_random must be positive, got {n_random}")
    if ny < 3 or ny % 2 == 0:
        raise SmallnessError(f"ny must be odd and at least 3, got {ny}")
    if omega_line.is_empty() or omega_line.intervals[0][0] < 0.0 or omega_line.intervals[-1][1] > 1.0:
        raise SmallnessError("ω must be a nonempty subset of [0, 1]")
    if not 0.0 < omega_line.measure < 0.5:
        raise SmallnessError(f"|ω| must lie in (0, 1/2), got {omega_line.measure}")

    grid_x = basis.grid.x
    lo, hi = geometry.outer_x
    if lo < grid_x[0] or hi > grid_x[-1]:
        raise SmallnessError(f"Region [{lo}, {hi}] exits the computed field [{grid_x[0]}, {grid_x[-1]}]")

    u_line = np.linspace(0.0, 1.0, omega_points + 1)
    in_omega = omega_line.contains(u_line)
    if not np.any(in_omega):
        raise SmallnessError("ω contains none of the line samples; raise omega_points")
    x_line = geometry.to_physical(u_line)
    x_omega = x_line[in_omega]
    in_outer = (grid_x >= lo) & (grid_x <= hi)
    abscissae = np.unique(np.concatenate((grid_x[in_outer], x_line)))
    is_omega = np.isin(abscissae, x_omega)
    inner_lo, inner_hi = geometry.inner_x
    is_inner = (abscissae >= inner_lo) & (abscissae <= inner_hi)

    y = geometry.outer_half_height * np.linspace(-1.0, 1.0, ny)
    y[(ny - 1) // 2] = 0.0
    y_inner = np.abs(y) <= geometry.inner_half_height * (1.0 + 1e-12)
    center = (ny - 1) // 2

    idx, t = _interpolation(grid_x, abscissae)
    modes_at = (1.0 - t)[:, None] * basis.vectors[idx] + t[:, None] * basis.vectors[idx + 1]

    ellipticity = ellipticity_proxy(basis.potential, geometry) if basis.potential else math.nan
    rng = np.random.default_rng(seed)
    samples = []
    for lam in lambda_list:
        keep = basis.indices_below(lam)
        if keep.size == 0:
            logger.warning(f"No eigenvalue below λ={lam}; skipping")
            continue
        lambdas = basis.frequencies[keep]
        if lambdas.max() * geometry.outer_half_height > OVERFLOW_GUARD:
            raise SmallnessError(
                f"Overflow guard violated: λₖ·y_max = {lambdas.max() * geometry.outer_half_height:.6g}"
            )
        factors = np.cosh(np.outer(lambdas, y))
        for k in range(n_random):
            b = rng.standard_normal(keep.size)
            b /= np.linalg.norm(b)
            values = np.abs(modes_at[:, keep] @ (b[:, None] * factors))
            sup_outer = float(values.max())
            sup_inner = float(values[np.ix_(is_inner, y_inner)].max())
            sup_omega = float(values[is_omega, center].max())
            samples.append(SmallnessSample(sup_inner, sup_omega, sup_outer, omega_line.measure,
                                           ellipticity, float(lam), k))
    return samples


@dataclass(frozen=True, eq=False)
class SmallnessReport:
    alpha: float
    constant: float
    samples: int
    violations: int
    degenerate: bool
    infeasible: bool
    c_budget: float
    band: Optional['TheoreticalBand'] = None
    slack: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))


def _log_constants(log_i: np.ndarray, log_w: np.ndarray, log_o: np.ndarray,
                   alphas: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        terms = log_i[None, :] - alphas[:, None] * log_w[None, :] - (1.0 - alphas[:, None]) * log_o[None, :]
    return np.maximum(np.max(terms, axis=1), 0.0)


def fit_alpha(samples: Sequence[SmallnessSample], c_budget: float = DEFAULT_C_BUDGET,
              alpha_grid: Optional[np.ndarray] = None) -> SmallnessReport:
    """
    Supporting-line fit of log sup_inner ≤ log C + α log sup_ω + (1-α) log sup_outer.

    For each α on the grid, C(α) is the smallest constant (at least 1) with zero
    violations. The fit returns the largest α whose C(α) stays within c_budget,
    falling back to the α of minimal C(α) when none does.
    """
    if len(samples) < MIN_SAMPLES:
        raise SmallnessError(f"fit_alpha needs at least {MIN_SAMPLES} samples, got {len(samples)}")
    inner = np.array([s.sup_inner for s in samples])
    omega = np.array([s.sup_omega for s in samples])
    outer = np.array([s.sup_outer for s in samples])
    if np.any(outer <= 0):
        raise SmallnessError("Every sample needs sup_outer > 0")
    if alpha_grid is None:
        alpha_grid = np.linspace(0.001, 0.999, 999)

    with np.errstate(divide="ignore"):
        log_i, log_w, log_o = np.log(inner), np.log(omega), np.log(outer)

    if np.all(log_o - log_w == 0.0) and np.all(log_o - log_i == 0.0):
        logger.warning("Smallness samples are degenerate (sup_ω = sup_inner = sup_outer)")
        return SmallnessReport(0.5, 1.0, len(samples), 0, True, False, c_budget,
                               slack=np.zeros(len(samples)))

    log_c = _log_constants(log_i, log_w, log_o, alpha_grid)
    feasible = np.isfinite(log_c) & (log_c <= math.log(INFEASIBLE_C))
    if not np.any(feasible):
        logger.warning("No feasible (α, C) with C ≤ 1e12")
        return SmallnessReport(math.nan, math.inf, len(samples), len(samples), False, True, c_budget)

    within = np.nonzero(feasible & (log_c <= math.log(c_budget)))[0]
    if within.size:
        best = int(within[-1])
    else:
        best = int(np.nanargmin(np.where(feasible, log_c, np.inf)))
    alpha = float(alpha_grid[best])
    slack = _slack(log_i, log_w, log_o, alpha, float(log_c[best]))
    return SmallnessReport(alpha=alpha, constant=math.exp(float(log_c[best])), samples=len(samples),
                           violations=int(np.count_nonzero(slack < 0)), degenerate=False,
                           infeasible=False, c_budget=c_budget, slack=slack)


def _slack(log_i, log_w, log_o, alpha: float, log_c: float) -> np.ndarray:
    return log_c - (log_i - alpha * log_w - (1.0 - alpha) * log_o)


def check_inequality(samples: Sequence[SmallnessSample], alpha: float, constant: float) -> np.ndarray:
    """Per-sample log slack of sup_inner ≤ C sup_ω^α sup_outer^{1-α} (≥ 0 where it holds)."""
    inner = np.array([s.sup_inner for s in samples])
    omega = np.array([s.sup_omega for s in samples])
    outer = np.array([s.sup_outer for s in samples])
    with np.errstate(divide="ignore"):
        return _slack(np.log(inner), np.log(omega), np.log(outer), alpha, math.log(constant))


@dataclass(frozen=True)
class TheoreticalBand:
    alpha_low: float
    alpha_high: float
    c_low: float
    c_high: float

    def contains_alpha(self, alpha: float, factor: float = 3.0) -> bool:
        return self.alpha_low / factor <= alpha <= self.alpha_high * factor


def theoretical_band(ellipticity: float, omega_measure: float, d1: float, d2: float) -> TheoreticalBand:
    """α ∈ [e^{-d₂Λ²}, e^{-d₁Λ²}]/|log|ω||² and C ∈ [e^{d₁Λ²}, e^{d₂Λ²}]."""
    if not 0.0 < omega_measure < 0.5:
        raise SmallnessError(f"|ω| must lie in (0, 1/2), got {omega_measure}")
    if not ellipticity > 1.0:
        raise SmallnessError(f"Λ must exceed 1, got {ellipticity}")
    if not 0.0 < d1 <= d2:
        raise SmallnessError(f"Band constants need 0 < d1 <= d2, got d1={d1}, d2={d2}")
    square = ellipticity ** 2
    log_term = math.log(omega_measure) ** 2
    with np.errstate(over="ignore"):
        c_low = float(np.exp(d1 * square))
        c_high = float(np.exp(d2 * square))
    return TheoreticalBand(alpha_low=math.exp(-d2 * square) / log_term,
                           alpha_high=math.exp(-d1 * square) / log_term,
                           c_low=c_low, c_high=c_high)


@dataclass(frozen=True)
class PieceConstants:
    n: int
    scale: float
    alpha_lower: float
    scale_bound_shape: Optional[float]


def piece_constants(partition: Partition, n: int, gamma_n: float, d: float = 1.0,
                    potential: Optional[Potential] = None,
                    lam: Optional[float] = None) -> PieceConstants:
    """
    aₙ = |Iₙ|⁻¹ and the exponent lower bound 1/(d |log γₙ|²).

    With a potential and λ, also the growth shape ⟨λ⟩^{2s/β₁} that bounds aₙ up to a constant.
    """
    if not 0.0 < gamma_n < 1.0:
        raise SmallnessError(f"γₙ must lie in (0,1), got {gamma_n}")
    if not d > 0:
        raise SmallnessError(f"d must be positive, got {d}")
    a, b = partition.piece(n)
    shape = None
    if potential is not None and lam is not None:
        beta1 = lower_growth(potential)[2]
        shape = (1.0 + lam ** 2) ** (partition.s / beta1)
    return PieceConstants(n=n, scale=1.0 / (b - a),
                              alpha_lower=1.0 / (d * math.log(gamma_n) ** 2),
                              scale_bound_shape=shape)


@dataclass(frozen=True)
class PropagationReference:
    sup_constant: float
    l2_constant: float


def propagation_reference(c0: float, d: float, omega_measure: float, alpha: float) -> PropagationReference:
    """exp(d·exp(d·C₀^{1/2})) and its sup-to-L² form 2C(2/|ω|)^{α/2}; overflow gives inf."""
    if c0 < 0 or not d > 0:
        raise SmallnessError(f"Reference curve needs C₀ ≥ 0 and d > 0, got {c0}, {d}")
    if not 0.0 < omega_measure < 0.5:
        raise SmallnessError(f"|ω| must lie in (0, 1/2), got {omega_measure}")
    with np.errstate(over="ignore"):
        inner = float(np.exp(d * math.sqrt(c0)))
        constant = float(np.exp(d * inner))
    return PropagationReference(constant, 2.0 * constant * (2.0 / omega_measure) ** (alpha / 2.0))


def samples_table(samples: Sequence[SmallnessSample]) -> dict:
    """Columns for samples.csv."""
    return {
        "sup_inner": [s.sup_inner for s in samples],
        "sup_omega": [s.sup_omega for s in samples],
        "sup_outer": [s.sup_outer for s in samples],
        "omega_measure": [s.omega_measure for s in samples],
        "ellipticity": [s.ellipticity for s in samples],
        "lambda": [s.lam for s in samples],
        "sample": [s.sample for s in samples],
    }
