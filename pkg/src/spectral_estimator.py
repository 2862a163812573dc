"""
Empirical spectral-inequality constants.

On the span of modes with λₖ ≤ λ the optimal constant in ‖φ‖ ≤ K‖φ‖_{L²(Ω)} is
K = λ_min(G)^{-1/2} with Gⱼₖ = ∫_Ω φⱼφₖ. Sweeps fit the growth of log K in λ.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Mapping, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import LinAlgError, eigvalsh, lstsq
from scipy.optimize import minimize

from .eigensolver import EigenBasis
from .thick_sets import IntervalSet, regular_window_set

logger = logging.getLogger(__name__)

SINGULAR_FLOOR = 1e-14


class SpectralEstimatorError(ValueError):
    """Exception for invalid Gram requests or sweeps."""
    pass


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Gⱼₖ = ∫_Ω φⱼφₖ over the modes with λⱼ, λₖ ≤ cutoff."""
    cutoff: float
    matrix: np.ndarray
    omega: IntervalSet
    singular: bool = False

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])


def gram_matrix(basis: EigenBasis, lam: float, omega: IntervalSet) -> GramMatrix:
    """Gram matrix with cell weights |Ω ∩ [xᵢ - h/2, xᵢ + h/2]|, symmetrized."""
    idx = basis.indices_below(lam)
    weights = basis.grid.cell_weights(omega)
    modes = basis.vectors[:, idx]
    matrix = modes.T @ (weights[:, None] * modes)
    matrix = 0.5 * (matrix + matrix.T)
    singular = bool(np.sum(weights) == 0.0)
    if singular:
        logger.warning("Control set does not meet the truncation interval")
    return GramMatrix(cutoff=lam, matrix=matrix, omega=omega, singular=singular)


@dataclass(frozen=True)
class BestConstant:
    constant: float
    lambda_min: float
    lambda_max: float
    flagged: bool


def best_constant(G: Union[GramMatrix, np.ndarray], floor: float = SINGULAR_FLOOR) -> BestConstant:
    """
    K = λ_min(G)^{-1/2}.

    λ_min ≤ floor means not observable at this precision: K = inf with the flag set.
    """
    matrix = G.matrix if isinstance(G, GramMatrix) else np.asarray(G, dtype=float)
    if matrix.size == 0:
        raise SpectralEstimatorError("Gram matrix is empty; no modes below the cutoff")
    try:
        eigenvalues = eigvalsh(matrix)
    except LinAlgError as e:
        raise SpectralEstimatorError(f"Failed to diagonalize Gram matrix: {e}")
    lam_min, lam_max = float(eigenvalues[0]), float(eigenvalues[-1])
    if lam_min <= floor:
        return BestConstant(math.inf, lam_min, lam_max, True)
    return BestConstant(1.0 / math.sqrt(lam_min), lam_min, lam_max, False)


def _sphere_point(angles: np.ndarray) -> np.ndarray:
    """Unit vector from hyperspherical angles."""
    point = np.ones(angles.size + 1)
    for i, angle in enumerate(angles):
        point[i] *= math.cos(angle)
        point[i + 1:] *= math.sin(angle)
    return point


def brute_force_constant(matrix: np.ndarray, points: int = 1_000_000) -> float:
    """
    Oracle K by sweeping the unit sphere of coefficients (dimension ≤ 3), then
    refining the best sweep point with a local minimizer.
    """
    matrix = np.asarray(matrix, dtype=float)
    dim = matrix.shape[0]
    if dim == 1:
        return 1.0 / math.sqrt(matrix[0, 0])
    if dim == 2:
        theta = np.linspace(0.0, 2.0 * math.pi, points, endpoint=False)
        q = np.stack((np.cos(theta), np.sin(theta)))
        values = np.einsum("ij,ik,kj->j", q, matrix, q)
        start = np.array([theta[np.argmin(values)]])
    elif dim == 3:
        side = int(math.sqrt(points))
        a, b = np.meshgrid(np.linspace(0.0, math.pi, side), np.linspace(0.0, 2.0 * math.pi, side))
        q = np.stack((np.cos(a), np.sin(a) * np.cos(b), np.sin(a) * np.sin(b))).reshape(3, -1)
        values = np.einsum("ij,ik,kj->j", q, matrix, q)
        best = np.argmin(values)
        start = np.array([a.ravel()[best], b.ravel()[best]])
    else:
        raise SpectralEstimatorError(f"Brute-force oracle supports dimension ≤ 3, got {dim}")

    def quadratic(angles):
        q = _sphere_point(angles)
        return float(q @ matrix @ q)

    result = minimize(quadratic, start, method="Nelder-Mead",
                      options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 10000})
    return 1.0 / math.sqrt(min(result.fun, float(values.min())))


@dataclass(frozen=True, eq=False)
class ScalingFit:
    """Growth fit of log K(λ) ≈ c₀ + c₁λ^ζ (× log(λ+1) when with_log)."""
    lambdas: np.ndarray
    constants: np.ndarray
    lambda_mins: np.ndarray
    dims: np.ndarray
    zeta_target: float
    with_log: bool
    slope: float
    intercept: float
    residual: float
    zeta_hat: float
    dropped: Tuple[float, ...] = ()

    def table(self) -> Dict[str, list]:
        """Columns for sweep.csv."""
        return {"lambda": self.lambdas.tolist(), "dim": self.dims.tolist(),
                "lambda_min": self.lambda_mins.tolist(), "K": self.constants.tolist()}

    def summary(self) -> dict:
        model = "log K = c0 + c1 * lambda^zeta" + (" * log(lambda + 1)" if self.with_log else "")
        return {"model": model, "zeta_target": self.zeta_target, "zeta_hat": self.zeta_hat,
                "slope": self.slope, "intercept": self.intercept, "residual": self.residual,
                "dropped": list(self.dropped)}


BasisFamily = Union[EigenBasis, Mapping[float, EigenBasis]]


def _basis_for(family: BasisFamily, lam: float) -> EigenBasis:
    if isinstance(family, EigenBasis):
        if lam > family.lambda_max * (1.0 + 1e-12):
            raise SpectralEstimatorError(f"Basis cutoff {family.lambda_max} is below λ={lam}")
        return family
    if lam not in family:
        raise SpectralEstimatorError(f"No basis supplied for λ={lam}")
    return family[lam]


def free_exponent(lambdas: np.ndarray, constants: np.ndarray) -> float:
    """ζ̂ from the power fit log log K ≈ log c + ζ log λ over the points with K > 1."""
    keep = np.isfinite(constants) & (constants > 1.0) & (lambdas > 0)
    if np.count_nonzero(keep) < 2:
        return math.nan
    x = np.log(lambdas[keep])
    y = np.log(np.log(constants[keep]))
    design = np.column_stack((np.ones_like(x), x))
    coef = lstsq(design, y)[0]
    return float(coef[1])


def scaling_sweep(family: BasisFamily, lambda_list: Sequence[float], omega: IntervalSet,
                  zeta: float, with_log: bool = False, floor: float = SINGULAR_FLOOR) -> ScalingFit:
    """
    K(λ) over a λ list and the least-squares growth fit against λ^ζ.

    Needs at least 5 values of λ with λ²_max/λ²_min ≥ 4. Values of λ where K is
    infinite are dropped and listed in the result.
    """
    lambdas = np.asarray(sorted(lambda_list), dtype=float)
    if lambdas.size < 5:
        raise SpectralEstimatorError(f"Scaling sweep needs at least 5 values of λ, got {lambdas.size}")
    if lambdas[0] <= 0 or (lambdas[-1] / lambdas[0]) ** 2 < 4.0:
        raise SpectralEstimatorError("Scaling sweep λ² values must span at least a factor 4")
    if not zeta > 0:
        raise SpectralEstimatorError(f"ζ must be positive, got {zeta}")

    constants, lambda_mins, dims = [], [], []
    for lam in lambdas:
        G = gram_matrix(_basis_for(family, lam), lam, omega)
        if G.dim == 0:
            raise SpectralEstimatorError(f"No modes below λ={lam}")
        best = best_constant(G, floor)
        constants.append(best.constant)
        lambda_mins.append(best.lambda_min)
        dims.append(G.dim)
    constants = np.array(constants)
    lambda_mins = np.array(lambda_mins)
    dims = np.array(dims)

    finite = np.isfinite(constants)
    dropped = tuple(float(v) for v in lambdas[~finite])
    if dropped:
        logger.warning(f"Dropping λ values with infinite K: {dropped}")
    if np.count_nonzero(finite) < 2:
        raise SpectralEstimatorError("Fewer than two finite constants remain in the sweep")

    lam_fit = lambdas[finite]
    x = lam_fit ** zeta
    if with_log:
        x = x * np.log(lam_fit + 1.0)
    y = np.log(constants[finite])
    design = np.column_stack((np.ones_like(x), x))
    coef, _, _, _ = lstsq(design, y)
    residual = float(np.sqrt(np.mean((design @ coef - y) ** 2)))

    return ScalingFit(lambdas=lambdas, constants=constants, lambda_mins=lambda_mins, dims=dims,
                      zeta_target=zeta, with_log=with_log, slope=float(coef[1]),
                      intercept=float(coef[0]), residual=residual,
                      zeta_hat=free_exponent(lambdas, constants), dropped=dropped)


@dataclass(frozen=True, eq=False)
class AuxRegularReport:
    fit: ScalingFit
    reference_exponent: float
    reference_curve: np.ndarray


def aux_regular_check(family: BasisFamily, lambda_list: Sequence[float], omega: IntervalSet,
                      beta1: float, beta2: float) -> AuxRegularReport:
    """
    Sweep on a regular window set against the reference e^{λ^{β₂/β₁}(1 + log(λ+1))}.
    """
    if not beta2 >= beta1 > 0:
        raise SpectralEstimatorError(f"Need β₂ ≥ β₁ > 0, got β₁={beta1}, β₂={beta2}")
    exponent = beta2 / beta1
    fit = scaling_sweep(family, lambda_list, omega, exponent, with_log=True)
    lambdas = fit.lambdas
    with np.errstate(over="ignore"):
        reference = np.exp(lambdas ** exponent * (1.0 + np.log(lambdas + 1.0)))
    return AuxRegularReport(fit=fit, reference_exponent=exponent, reference_curve=reference)


def regular_set_for(basis: EigenBasis, L: float, sigma: float, fill: float = 0.5) -> IntervalSet:
    """Regular window set covering the basis truncation interval."""
    return regular_window_set(L, sigma, (basis.grid.x_min, basis.grid.x_max), fill)


def interlacing_holds(basis: EigenBasis, lambdas: Sequence[float], omega: IntervalSet,
                      tol: float = 1e-10) -> bool:
    """λ_min(G_λ) is non-increasing as λ grows."""
    mins = [best_constant(gram_matrix(basis, lam, omega)).lambda_min for lam in sorted(lambdas)]
    return all(b <= a + tol for a, b in zip(mins, mins[1:]))
