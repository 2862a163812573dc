"""
Heat semigroup on a truncated eigenbasis and HUM null-control synthesis.

On the span of modes with λₖ ≤ λ the state is a coefficient vector b and
e^{-Ht} acts as E(t) = diag(e^{-λₖ²t}). A control h(t) = 𝟙_Ω Σ (E(T-t)q)ₖ φₖ moves
b₀ to E(T)b₀ + Λ_T q, with Λ_T = ∫₀ᵀ E(T-t) G_Ω E(T-t) dt.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import LinAlgError, cho_factor, cho_solve, eigvalsh, lstsq

from ..eigensolver import EigenBasis, SpectralElement
from ..spectral_estimator import gram_matrix
from ..thick_sets import IntervalSet

logger = logging.getLogger(__name__)

PANEL_NODES = 8
REFINE_TOL = 1e-10
FLAG_RATIO = 1e-13
MAX_DOUBLINGS = 8


class ControlError(ValueError):
    """Exception for invalid control configurations or horizons."""
    pass


@dataclass(frozen=True)
class ControlConfig:
    """
    Horizon, cutoff, control set and observability-law parameters.

    κ₁, κ₂, κ₃ default to 1. lambda_base is the lowest stage cutoff of the
    staged scheme (the ground frequency when None); max_stages = 1 collapses the
    schedule to a single HUM stage.
    """
    T: float
    cutoff: float
    omega: IntervalSet
    m: int = 128
    alpha0: float = 1.0
    alpha1: float = 1.0
    zeta: float = 1.0
    kappa1: float = 1.0
    kappa2: float = 1.0
    kappa3: float = 1.0
    lambda_base: Optional[float] = None
    max_stages: Optional[int] = None
    tail_tol: float = 1e-10
    refine_tol: float = REFINE_TOL
    flag_ratio: float = FLAG_RATIO

    def __post_init__(self):
        if not self.T > 0:
            raise ControlError(f"Horizon T must be positive, got {self.T}")
        if not self.cutoff > 0:
            raise ControlError(f"Cutoff λ must be positive, got {self.cutoff}")
        if self.m < 8:
            raise ControlError(f"Quadrature needs at least 8 nodes, got {self.m}")
        if not 0.0 < self.zeta < 2.0:
            raise ControlError("Lebeau-Robbiano exponent must satisfy ζ<2" if self.zeta >= 2
                               else f"ζ must be positive, got {self.zeta}")
        if self.alpha0 < 1.0 or self.alpha1 < 0.0:
            raise ControlError(f"Need α₀ ≥ 1 and α₁ ≥ 0, got {self.alpha0}, {self.alpha1}")
        if min(self.kappa1, self.kappa2, self.kappa3) <= 0:
            raise ControlError("κ₁, κ₂, κ₃ must be positive")
        if self.max_stages is not None and self.max_stages < 1:
            raise ControlError(f"max_stages must be at least 1, got {self.max_stages}")

    def with_horizon(self, T: float) -> 'ControlConfig':
        return replace(self, T=T)


def heat_propagate(u: SpectralElement, t: float) -> SpectralElement:
    """bₖ ↦ e^{-λₖ²t} bₖ."""
    if t < 0 or not math.isfinite(t):
        raise ControlError(f"Propagation time must be finite and nonnegative, got {t}")
    decay = np.exp(-(u.frequencies ** 2) * t)
    return SpectralElement(u.basis, u.coefficients * decay, u.cutoff)


def observability_constant(cfg: ControlConfig, T: Optional[float] = None) -> float:
    """C_obs = κ₁α₀^{κ₂} exp(κ₃α₁^{2/(2-ζ)} T^{-ζ/(2-ζ)})."""
    T = cfg.T if T is None else T
    if not T > 0:
        raise ControlError(f"Horizon T must be positive, got {T}")
    power = 2.0 / (2.0 - cfg.zeta)
    exponent = cfg.kappa3 * cfg.alpha1 ** power * T ** (-cfg.zeta / (2.0 - cfg.zeta))
    with np.errstate(over="ignore"):
        return float(cfg.kappa1 * cfg.alpha0 ** cfg.kappa2 * np.exp(exponent))


def gauss_nodes(T: float, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on [0, T], 8 nodes per panel."""
    panels = max(1, int(math.ceil(m / PANEL_NODES)))
    x, w = leggauss(PANEL_NODES)
    edges = np.linspace(0.0, T, panels + 1)
    half = np.diff(edges) / 2.0
    mids = (edges[1:] + edges[:-1]) / 2.0
    nodes = (mids[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _decay_integral(mus: np.ndarray, T: float, m: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sⱼₖ = Σᵢ wᵢ e^{-(μⱼ+μₖ)(T-tᵢ)} with the nodes used."""
    t, w = gauss_nodes(T, m)
    e = np.exp(-np.outer(T - t, mus))
    return (w[:, None] * e).T @ e, t, w


@dataclass(frozen=True, eq=False)
class ControlGramian:
    """Λ_T by composite Gauss-Legendre quadrature, refined until entries settle."""
    matrix: np.ndarray
    gram: np.ndarray
    frequencies: np.ndarray
    T: float
    nodes: np.ndarray
    weights: np.ndarray
    converged: bool

    @property
    def m(self) -> int:
        return int(self.nodes.size)


def control_gramian(basis: EigenBasis, lam: float, omega: IntervalSet, T: float,
                    m: int = 128, refine_tol: float = REFINE_TOL) -> ControlGramian:
    """Λ_T = ∫₀ᵀ E(T-t) G_Ω E(T-t) dt over the modes with λₖ ≤ λ."""
    G = gram_matrix(basis, lam, omega).matrix
    frequencies = basis.frequencies[basis.indices_below(lam)]
    return gramian_from_gram(G, frequencies, T, m, refine_tol)


def gramian_from_gram(G: np.ndarray, frequencies: np.ndarray, T: float, m: int = 128,
                      refine_tol: float = REFINE_TOL) -> ControlGramian:
    if not T > 0:
        raise ControlError(f"Horizon T must be positive, got {T}")
    mus = frequencies ** 2
    S, t, w = _decay_integral(mus, T, m)
    converged = False
    for _ in range(MAX_DOUBLINGS):
        m *= 2
        S_fine, t_fine, w_fine = _decay_integral(mus, T, m)
        change = float(np.max(np.abs(G * (S_fine - S)))) if G.size else 0.0
        scale = max(1.0, float(np.max(np.abs(G * S_fine)))) if G.size else 1.0
        S, t, w = S_fine, t_fine, w_fine
        if change <= refine_tol * scale:
            converged = True
            break
    if not converged:
        logger.warning(f"Gramian quadrature did not settle at {refine_tol:.0e} with m={m}")
    return ControlGramian(matrix=G * S, gram=G, frequencies=frequencies, T=T,
                          nodes=t, weights=w, converged=converged)


def closed_form_gramian(G: np.ndarray, frequencies: np.ndarray, T: float) -> np.ndarray:
    """Gⱼₖ(1 - e^{-(μⱼ+μₖ)T})/(μⱼ+μₖ)."""
    mus = frequencies ** 2
    total = mus[:, None] + mus[None, :]
    return G * (-np.expm1(-total * T)) / total


def trajectory(b0: np.ndarray, frequencies: np.ndarray, G: np.ndarray, q: np.ndarray,
               T: float, times: np.ndarray) -> np.ndarray:
    """
    Closed-form coefficients u(t) under the HUM control, one row per time.

    uₖ(t) = e^{-μₖt}b₀ₖ + Σⱼ Gₖⱼqⱼ (e^{-μⱼ(T-t)} - e^{-μₖt-μⱼT})/(μⱼ+μₖ)
    """
    mus = frequencies ** 2
    total = mus[:, None] + mus[None, :]
    rows = []
    for t in np.asarray(times, dtype=float):
        free = np.exp(-mus * t) * b0
        kernel = (np.exp(-mus[None, :] * (T - t)) - np.exp(-mus[:, None] * t - mus[None, :] * T)) / total
        rows.append(free + (G * kernel) @ q)
    return np.array(rows)


@dataclass(frozen=True, eq=False)
class StageReport:
    index: int
    start: float
    window: float
    cutoff: float
    dim: int
    cost: float
    flagged: bool
    skipped: bool


@dataclass(frozen=True, eq=False)
class ControlResult:
    """Sampled control, its cost and the terminal residuals ‖u(T)‖/‖u₀‖."""
    times: np.ndarray
    x: np.ndarray
    control: np.ndarray
    cost: float
    residual: float
    exact_residual: float
    flagged: bool
    condition: float
    terminal: np.ndarray
    q: np.ndarray = field(default_factory=lambda: np.empty(0))
    stages: List[StageReport] = field(default_factory=list)

    @property
    def skipped_stages(self) -> int:
        return sum(1 for s in self.stages if s.skipped)


def _relative(vector: np.ndarray, reference: float) -> float:
    norm = float(np.linalg.norm(vector))
    if reference == 0.0:
        return 0.0 if norm == 0.0 else math.inf
    return norm / reference


@dataclass(frozen=True)
class GramianSolve:
    q: np.ndarray
    flagged: bool
    condition: float
    lambda_min: float


def solve_gramian(matrix: np.ndarray, rhs: np.ndarray, flag_ratio: float = FLAG_RATIO) -> GramianSolve:
    """
    Cholesky solve of Λq = rhs; flagged when λ_min(Λ) ≤ flag_ratio·‖Λ‖, in which
    case a least-squares solution is returned as best effort.
    """
    if matrix.size == 0:
        return GramianSolve(np.empty(0), False, 1.0, 0.0)
    eigenvalues = eigvalsh(matrix)
    lam_min, lam_max = float(eigenvalues[0]), float(eigenvalues[-1])
    flagged = lam_max <= 0.0 or lam_min <= flag_ratio * lam_max
    condition = math.inf if lam_min <= 0 else lam_max / lam_min
    if not flagged:
        try:
            return GramianSolve(cho_solve(cho_factor(matrix), rhs), False, condition, lam_min)
        except LinAlgError as e:
            logger.warning(f"Cholesky factorization failed ({e}); falling back to least squares")
            flagged = True
    logger.warning(f"Gramian flagged: λ_min={lam_min:.3e}, ‖Λ‖={lam_max:.3e}")
    q = lstsq(matrix, rhs)[0]
    return GramianSolve(q, True, condition, lam_min)


def sample_control(basis: EigenBasis, indices: np.ndarray, omega: IntervalSet,
                   frequencies: np.ndarray, q: np.ndarray, T: float, times: np.ndarray) -> np.ndarray:
    """h(tᵢ, xⱼ) = 𝟙_Ω(xⱼ) Σₖ e^{-μₖ(T-tᵢ)} qₖ φₖ(xⱼ)."""
    mask = omega.contains(basis.grid.x).astype(float)
    weights = np.exp(-np.outer(T - times, frequencies ** 2)) * q[None, :]
    return (weights @ basis.vectors[:, indices].T) * mask[None, :]


def synthesize_hum_control(u0: SpectralElement, cfg: ControlConfig) -> ControlResult:
    """
    HUM control on the span of modes with λₖ ≤ cfg.cutoff.

    Solves Λ_T q = -E(T)b₀; cost² = qᵀΛ_T q. The residual is measured with the
    quadrature Gramian, the exact residual with the closed form.
    """
    basis = u0.basis
    indices = basis.indices_below(cfg.cutoff)
    b0 = _coefficients_on(u0, indices)
    gramian = control_gramian(basis, cfg.cutoff, cfg.omega, cfg.T, cfg.m, cfg.refine_tol)
    decay = np.exp(-gramian.frequencies ** 2 * cfg.T)
    rhs = -decay * b0
    solve = solve_gramian(gramian.matrix, rhs, cfg.flag_ratio)
    q = solve.q

    reference = float(np.linalg.norm(b0))
    terminal = decay * b0 + gramian.matrix @ q
    exact = decay * b0 + closed_form_gramian(gramian.gram, gramian.frequencies, cfg.T) @ q
    cost = math.sqrt(max(float(q @ gramian.matrix @ q), 0.0))
    control = sample_control(basis, indices, cfg.omega, gramian.frequencies, q, cfg.T, gramian.nodes)
    return ControlResult(times=gramian.nodes, x=basis.grid.x, control=control, cost=cost,
                         residual=_relative(terminal, reference),
                         exact_residual=_relative(exact, reference),
                         flagged=solve.flagged, condition=solve.condition, terminal=terminal, q=q)


def _coefficients_on(u0: SpectralElement, indices: np.ndarray) -> np.ndarray:
    """Coefficients of u₀ padded with zeros to the modes in indices."""
    own = u0.basis.indices_below(u0.cutoff)
    b = np.zeros(indices.size)
    position = {int(k): i for i, k in enumerate(indices)}
    for value, k in zip(u0.coefficients, own):
        if int(k) not in position:
            raise ControlError(f"Initial state has mode {k} above the control cutoff")
        b[position[int(k)]] = value
    return b


def observability_check(result: ControlResult, gramian: ControlGramian, b0: np.ndarray) -> bool:
    """cost²·λ_min(Λ_T) ≤ ‖E(T)b₀‖² (within rounding)."""
    lam_min = float(eigvalsh(gramian.matrix)[0])
    target = float(np.sum((np.exp(-gramian.frequencies ** 2 * gramian.T) * b0) ** 2))
    return result.cost ** 2 * lam_min <= target * (1.0 + 1e-8) + 1e-300
