"""
Finite-difference eigenbases of H = -d²/dx² + V on a truncated interval.

The grid nodes x₀..x_{n-1} are the unknowns; homogeneous Dirichlet values sit on the
ghost nodes x₀ - h and x_{n-1} + h, so the trapezoid inner product is h·Σ.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal, eigvalsh_tridiagonal

from .artifacts import write_columns, write_csv, write_json
from .potentials import Potential, PotentialError, evaluate
from .thick_sets import IntervalSet

logger = logging.getLogger(__name__)

EIGEN_TOLERANCE = 1e-10
RESIDUAL_TOLERANCE = 1e-8
SAFETY_FACTOR = 2.0
DEGENERATE_FLOOR = 1e-300


class EigenSolverError(ValueError):
    """Exception for invalid grids, operators or spectral requests."""
    pass


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid of n unknowns with spacing h = (x_max - x_min)/(n - 1)."""
    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise EigenSolverError(f"Grid needs x_min < x_max, got [{self.x_min}, {self.x_max}]")
        if self.n < 3:
            raise EigenSolverError(f"Grid needs at least 3 points, got {self.n}")

    @classmethod
    def dirichlet(cls, a: float, b: float, n_interior: int) -> 'Grid1D':
        """Grid whose Dirichlet ghost nodes fall exactly on a and b."""
        h = (b - a) / (n_interior + 1)
        return cls(a + h, b - h, n_interior)

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n)

    @property
    def radius(self) -> float:
        return max(abs(self.x_min), abs(self.x_max))

    def inner(self, f: np.ndarray, g: np.ndarray) -> np.ndarray:
        """Discrete L² inner product (columns of 2D inputs are paired)."""
        return self.h * np.sum(f * g, axis=0)

    def cell_weights(self, omega: IntervalSet) -> np.ndarray:
        """|Ω ∩ [xᵢ - h/2, xᵢ + h/2]| for every node."""
        x = self.x
        return omega.overlap_measure(x - self.h / 2.0, x + self.h / 2.0)

    def interval_weights(self, a: float, b: float) -> np.ndarray:
        return self.cell_weights(IntervalSet(((a, b),)))

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "n": self.n, "h": self.h}


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    """Symmetric tridiagonal discretization of H."""
    grid: Grid1D
    diagonal: np.ndarray
    offdiagonal: np.ndarray
    potential: Optional[Potential] = None
    coarse_grid: bool = False

    def apply(self, v: np.ndarray) -> np.ndarray:
        """H·v for a vector or for every column of a matrix."""
        shape = (-1,) + (1,) * (v.ndim - 1)
        d = self.diagonal.reshape(shape)
        e = self.offdiagonal.reshape(shape)
        out = d * v
        out[:-1] += e * v[1:]
        out[1:] += e * v[:-1]
        return out

    def dense(self) -> np.ndarray:
        return (np.diag(self.diagonal) + np.diag(self.offdiagonal, 1)
                + np.diag(self.offdiagonal, -1))


def build_hamiltonian(p: Potential, g: Grid1D, lambda_max: Optional[float] = None) -> TridiagonalOperator:
    """
    Second-order central difference for -d²/dx² + V with Dirichlet ends.

    When lambda_max is given, a grid coarser than h ≤ π/(8λ_max) is flagged.
    """
    h = g.h
    try:
        v = evaluate(p, g.x)
    except PotentialError as e:
        raise EigenSolverError(f"Failed to evaluate potential on grid: {e}")
    diagonal = 2.0 / h ** 2 + v
    offdiagonal = np.full(g.n - 1, -1.0 / h ** 2)

    coarse = False
    if lambda_max is not None and lambda_max > 0 and h > math.pi / (8.0 * lambda_max):
        coarse = True
        logger.warning(f"Grid spacing h={h:.3e} exceeds π/(8λ)={math.pi / (8.0 * lambda_max):.3e}")
    return TridiagonalOperator(grid=g, diagonal=diagonal, offdiagonal=offdiagonal,
                               potential=p, coarse_grid=coarse)


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """Eigenpairs λₖ² ≤ λ_max² of a discretized H; vectors orthonormal in h·Σ."""
    grid: Grid1D
    eigenvalues: np.ndarray
    vectors: np.ndarray
    lambda_max: float
    potential: Optional[Potential] = None
    residuals: np.ndarray = field(default_factory=lambda: np.empty(0))
    coarse_grid: bool = False
    residual_flag: bool = False

    @property
    def size(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def frequencies(self) -> np.ndarray:
        """λₖ = √(λₖ²)."""
        return np.sqrt(self.eigenvalues)

    def indices_below(self, lam: float) -> np.ndarray:
        return np.nonzero(self.eigenvalues <= lam ** 2)[0]

    def gram(self) -> np.ndarray:
        return self.grid.h * self.vectors.T @ self.vectors

    def orthonormality_defect(self) -> float:
        if self.size == 0:
            return 0.0
        return float(np.max(np.abs(self.gram() - np.eye(self.size))))

    def element(self, coefficients: Sequence[float], lam: Optional[float] = None) -> 'SpectralElement':
        lam = self.lambda_max if lam is None else lam
        return SpectralElement(self, np.asarray(coefficients, dtype=float), lam)


@dataclass(frozen=True, eq=False)
class SpectralElement:
    """φ = Σ_{λₖ ≤ λ} bₖφₖ over an EigenBasis."""
    basis: EigenBasis
    coefficients: np.ndarray
    cutoff: float

    def __post_init__(self):
        count = self.basis.indices_below(self.cutoff).size
        if self.coefficients.shape != (count,):
            raise EigenSolverError(
                f"Expected {count} coefficients for cutoff λ={self.cutoff}, got {self.coefficients.shape}"
            )

    @property
    def modes(self) -> np.ndarray:
        return self.basis.vectors[:, self.basis.indices_below(self.cutoff)]

    @property
    def frequencies(self) -> np.ndarray:
        return self.basis.frequencies[self.basis.indices_below(self.cutoff)]

    def values(self) -> np.ndarray:
        return self.modes @ self.coefficients

    def norm(self) -> float:
        """Σ|bₖ|² equals the discrete L² norm squared by orthonormality."""
        return float(np.sqrt(np.sum(self.coefficients ** 2)))


def _node_count(v: np.ndarray) -> int:
    significant = v[np.abs(v) > 1e-8 * np.max(np.abs(v))]
    return int(np.count_nonzero(np.diff(np.sign(significant)) != 0))


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    for k in range(vectors.shape[1]):
        v = vectors[:, k]
        first = np.argmax(np.abs(v) > 1e-8 * np.max(np.abs(v)))
        if v[first] < 0:
            vectors[:, k] = -v
    return vectors


def _order_ties(eigenvalues: np.ndarray, vectors: np.ndarray, tol: float) -> Tuple[np.ndarray, np.ndarray]:
    order = np.arange(eigenvalues.size)
    start = 0
    while start < eigenvalues.size:
        stop = start + 1
        while stop < eigenvalues.size and eigenvalues[stop] - eigenvalues[stop - 1] <= tol * max(1.0, eigenvalues[stop]):
            stop += 1
        if stop - start > 1:
            group = order[start:stop]
            nodes = [_node_count(vectors[:, k]) for k in group]
            order[start:stop] = group[np.argsort(nodes, kind="stable")]
        start = stop
    return eigenvalues[order], vectors[:, order]


def eigen_decompose(Hd: TridiagonalOperator, lambda_max: float,
                    tol: float = EIGEN_TOLERANCE) -> EigenBasis:
    """
    All eigenpairs with λₖ² ≤ λ_max² by bisection and inverse iteration.

    An empty basis is returned when no eigenvalue lies below λ_max².
    """
    if not lambda_max > 0:
        raise EigenSolverError(f"λ_max must be positive, got {lambda_max}")
    g = Hd.grid
    upper = lambda_max ** 2
    lower = min(-1.0, float(np.min(Hd.diagonal)) - 2.0 * float(np.max(np.abs(Hd.offdiagonal))))
    try:
        ground = eigvalsh_tridiagonal(Hd.diagonal, Hd.offdiagonal, select="i", select_range=(0, 0))
        if ground[0] > upper:
            logger.info(f"No eigenvalue below λ_max²={upper:.6g}; returning an empty basis")
            return EigenBasis(grid=g, eigenvalues=np.empty(0), vectors=np.empty((g.n, 0)),
                              lambda_max=lambda_max, potential=Hd.potential, coarse_grid=Hd.coarse_grid)
        w, v = eigh_tridiagonal(Hd.diagonal, Hd.offdiagonal, select="v",
                                select_range=(lower, upper), lapack_driver="stebz")
    except (LinAlgError, ValueError) as e:
        raise EigenSolverError(f"Failed to solve tridiagonal eigenproblem: {e}")

    vectors = _fix_signs(v / math.sqrt(g.h))
    eigenvalues, vectors = _order_ties(w, vectors, tol)

    defect = Hd.apply(vectors) - vectors * eigenvalues
    residuals = np.sqrt(g.inner(defect, defect))
    residuals = residuals / np.maximum(np.abs(eigenvalues), DEGENERATE_FLOOR)
    flag = bool(np.any(residuals > RESIDUAL_TOLERANCE))
    if flag:
        logger.warning(f"Eigenpair residual {residuals.max():.3e} exceeds {RESIDUAL_TOLERANCE:.0e}")
    return EigenBasis(grid=g, eigenvalues=eigenvalues, vectors=vectors, lambda_max=lambda_max,
                      potential=Hd.potential, residuals=residuals,
                      coarse_grid=Hd.coarse_grid, residual_flag=flag)


def solve_basis(p: Potential, radius: float, lambda_max: float, n: Optional[int] = None,
                tol: float = EIGEN_TOLERANCE) -> EigenBasis:
    """Basis on [-radius, radius] with a grid resolving λ_max (at least 801 points)."""
    if n is None:
        h = min(0.02, math.pi / (8.0 * lambda_max))
        n = max(801, int(math.ceil(2.0 * radius / h)) + 1)
    g = Grid1D(-radius, radius, n)
    return eigen_decompose(build_hamiltonian(p, g, lambda_max), lambda_max, tol)


def lower_growth(p: Potential) -> Tuple[float, float, float]:
    """(c₁, c₃, β₁) of the lower growth bound, from the declared bounds or the kind."""
    if p.bounds is not None:
        return p.bounds.c1, p.bounds.c3, p.bounds.beta1
    params = p.param_dict
    if p.kind == "monomial":
        return 1.0, 0.0, params["beta"]
    if p.kind == "shifted_monomial":
        return 1.0, params.get("c3", 0.0), params["beta"]
    if p.kind == "oscillating":
        return 1.0, 0.0, params["beta1"]
    raise EigenSolverError(f"Potential of kind {p.kind} has no lower growth bound; declare bounds")


def tail_mass(basis: EigenBasis, lam: float, r: float) -> float:
    """Largest mass ∫_{|x|>r} φₖ² over the modes with λₖ ≤ λ."""
    idx = basis.indices_below(lam)
    if idx.size == 0:
        return 0.0
    outside = np.abs(basis.grid.x) > r
    return float(np.max(basis.grid.h * np.sum(basis.vectors[outside][:, idx] ** 2, axis=0)))


@dataclass(frozen=True)
class RadiusCertificate:
    radius: float
    turning_point: float
    tail_mass: float
    doublings: int
    certified: bool


def localization_radius(p: Potential, lam: float, tail_tol: float = 1e-8,
                        safety_factor: float = SAFETY_FACTOR, max_doublings: int = 6) -> RadiusCertificate:
    """
    Truncation radius for modes with λₖ ≤ λ.

    Starts at safety_factor times the turning point (λ²/c₁)^{1/β₁} + c₃ and doubles
    until the tail mass outside [-r, r], measured on [-2r, 2r], is below tail_tol.
    """
    if not tail_tol > 0:
        raise EigenSolverError(f"tail_tol must be positive, got {tail_tol}")
    if not lam > 0:
        raise EigenSolverError(f"λ must be positive, got {lam}")
    c1, c3, beta1 = lower_growth(p)
    turning = (lam ** 2 / c1) ** (1.0 / beta1) + c3
    r = safety_factor * max(turning, 1e-3)

    mass = math.inf
    for doubling in range(max_doublings + 1):
        basis = solve_basis(p, 2.0 * r, lam)
        mass = tail_mass(basis, lam, r)
        logger.debug(f"Localization radius r={r:.6g}: tail mass {mass:.3e}")
        if mass < tail_tol:
            return RadiusCertificate(r, turning, mass, doubling, True)
        r *= 2.0
    r /= 2.0
    logger.warning(f"Tail mass {mass:.3e} still above {tail_tol:.0e} at r={r:.6g}")
    return RadiusCertificate(r, turning, mass, max_doublings, False)


@dataclass(frozen=True)
class LocalizationReport:
    max_ratio: float
    samples: int
    modes: int
    norm: str
    radius: float


def _h1_squared(grid: Grid1D, fields: np.ndarray, mask_edges: np.ndarray, mask_nodes: np.ndarray) -> np.ndarray:
    padded = np.pad(fields, ((1, 1), (0, 0)))
    derivative = np.diff(padded, axis=0) / grid.h
    return (grid.h * np.sum(fields[mask_nodes] ** 2, axis=0)
            + grid.h * np.sum(derivative[mask_edges] ** 2, axis=0))


def check_localization(basis: EigenBasis, lam: float, r: float, samples: int = 100,
                       seed: int = 0, norm: Literal["l2", "h1"] = "l2") -> LocalizationReport:
    """Largest ‖φ‖(ℝ)/‖φ‖([-r, r]) over seeded random unit elements of the span of λₖ ≤ λ."""
    idx = basis.indices_below(lam)
    if idx.size == 0:
        return LocalizationReport(math.nan, 0, 0, norm, r)
    rng = np.random.default_rng(seed)
    coefficients = rng.standard_normal((idx.size, samples))
    coefficients /= np.linalg.norm(coefficients, axis=0)
    fields = basis.vectors[:, idx] @ coefficients

    x = basis.grid.x
    inside = np.abs(x) <= r
    if norm == "l2":
        full = np.sum(fields ** 2, axis=0)
        local = np.sum(fields[inside] ** 2, axis=0)
    elif norm == "h1":
        h = basis.grid.h
        mids = np.concatenate(([x[0] - h / 2.0], x + h / 2.0))
        everything_nodes = np.ones(x.shape, dtype=bool)
        full = _h1_squared(basis.grid, fields, np.ones(mids.shape, dtype=bool), everything_nodes)
        local = _h1_squared(basis.grid, fields, np.abs(mids) <= r, inside)
    else:
        raise EigenSolverError(f"Unknown localization norm: {norm}")

    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.sqrt(full / local)
    ratios = np.where(local > 0, ratios, math.inf)
    return LocalizationReport(float(np.max(ratios)), samples, int(idx.size), norm, r)


@dataclass(frozen=True)
class EigenCount:
    count: int
    reference: float
    ratio: float
    exponent: float


def count_eigenvalues(basis: EigenBasis, lam: float, beta1: Optional[float] = None) -> EigenCount:
    """N(λ) = #{λₖ ≤ λ} against the reference curve (λ+1)^{(2+3β₁)/β₁}."""
    if beta1 is None:
        if basis.potential is None:
            raise EigenSolverError("count_eigenvalues needs β₁ or a basis with a potential")
        beta1 = lower_growth(basis.potential)[2]
    if lam > basis.lambda_max:
        logger.warning(f"Counting up to λ={lam} beyond the basis cutoff {basis.lambda_max}")
    count = int(np.count_nonzero(basis.eigenvalues <= lam ** 2))
    exponent = (2.0 + 3.0 * beta1) / beta1
    reference = (lam + 1.0) ** exponent
    return EigenCount(count, reference, count / reference, exponent)


@dataclass(frozen=True)
class CaccioppoliReport:
    ratio: float
    lhs: float
    rhs: float
    degenerate: bool


def caccioppoli_ratio(grid: Grid1D, phi: np.ndarray, eigenvalue: float, x: float, r: float) -> CaccioppoliReport:
    """‖Dφ‖²(I_r(x)) / [(1 + 8/r²)(1 + λ²)‖φ‖²(I_{2r}(x))] by cell-weighted quadrature."""
    if not r > 0:
        raise EigenSolverError(f"Caccioppoli radius must be positive, got {r}")
    if x - 2 * r < grid.x_min - grid.h or x + 2 * r > grid.x_max + grid.h:
        raise EigenSolverError(f"Window [{x - 2 * r}, {x + 2 * r}] leaves the truncation interval")
    padded = np.pad(np.asarray(phi, dtype=float), 1)
    derivative = np.gradient(padded, grid.h)[1:-1]
    lhs = float(np.sum(grid.interval_weights(x - r, x + r) * derivative ** 2))
    rhs = (1.0 + 8.0 / r ** 2) * (1.0 + eigenvalue) * float(
        np.sum(grid.interval_weights(x - 2 * r, x + 2 * r) * phi ** 2))
    if rhs < DEGENERATE_FLOOR:
        return CaccioppoliReport(math.nan, lhs, rhs, True)
    return CaccioppoliReport(lhs / rhs, lhs, rhs, False)


def caccioppoli_check(basis: EigenBasis, k: int, x: float, r: float) -> CaccioppoliReport:
    if not 0 <= k < basis.size:
        raise EigenSolverError(f"Mode {k} outside basis of size {basis.size}")
    return caccioppoli_ratio(basis.grid, basis.vectors[:, k], float(basis.eigenvalues[k]), x, r)


def observed_order(errors: Sequence[float], ratio: float = 2.0) -> np.ndarray:
    """Observed convergence orders log(eᵢ/eᵢ₊₁)/log(ratio) of a refinement sequence."""
    errors = np.abs(np.asarray(errors, dtype=float))
    if errors.size < 2:
        raise EigenSolverError("observed_order needs at least two errors")
    if np.any(errors <= 0):
        raise EigenSolverError("observed_order needs nonzero errors")
    return np.log(errors[:-1] / errors[1:]) / math.log(ratio)


def export_bundle(basis: EigenBasis, directory: Path, extra: Optional[dict] = None) -> None:
    """eigenvalues.csv, modes.csv and metadata.json for a basis."""
    directory = Path(directory)
    write_columns(directory / "eigenvalues.csv",
                  {"k": list(range(basis.size)), "lambda_sq": basis.eigenvalues.tolist()})
    header = ["x"] + [f"phi_{k}" for k in range(basis.size)]
    write_csv(directory / "modes.csv", header,
              (row for row in np.column_stack((basis.grid.x, basis.vectors)).tolist()))
    metadata = {
        "grid": basis.grid.to_dict(),
        "potential": basis.potential.to_dict() if basis.potential else None,
        "lambda_max": basis.lambda_max,
        "eigen_tolerance": EIGEN_TOLERANCE,
        "residual_tolerance": RESIDUAL_TOLERANCE,
        "coarse_grid": basis.coarse_grid,
    }
    metadata.update(extra or {})
    write_json(directory / "metadata.json", metadata)
