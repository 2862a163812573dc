"""
Ghost-dimension lifts of spectral elements and the elliptic identities they satisfy.

A spectral element φ = Σ bₖφₖ is lifted to Φ(x, y) = Σ bₖ cosh(λₖy)φₖ(x) (or
sinh(λₖy)/λₖ), which solves -ΔΦ + VΦ = 0 in the plane.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import CubicSpline
from scipy.linalg import LinAlgError, solve_banded

from .eigensolver import SpectralElement
from .potentials import Potential, PotentialError, evaluate
from .thick_sets import Partition

logger = logging.getLogger(__name__)

OVERFLOW_GUARD = 40.0
AVERAGING = "arithmetic"

LiftKind = Literal["cosh", "sinh"]


class LiftError(ValueError):
    """Exception for invalid lifts, auxiliary ODE problems or rescaling windows."""
    pass


@dataclass(frozen=True, eq=False)
class LiftedField:
    """Φ sampled on x-grid × y-grid; values[i, j] = Φ(xᵢ, yⱼ)."""
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    kind: LiftKind
    frequencies: np.ndarray = field(default_factory=lambda: np.empty(0))
    coefficients: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def hx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def hy(self) -> float:
        return float(self.y[1] - self.y[0])

    @property
    def center_row(self) -> np.ndarray:
        return self.values[:, (self.y.size - 1) // 2]

    def metadata(self) -> dict:
        return {"kind": self.kind, "nx": int(self.x.size), "ny": int(self.y.size),
                "y_max": float(self.y[-1]), "overflow_guard": OVERFLOW_GUARD,
                "face_averaging": AVERAGING}


def lift(element: SpectralElement, y_max: float, m: int, kind: LiftKind = "cosh",
         overflow_guard: float = OVERFLOW_GUARD) -> LiftedField:
    """
    Lift a spectral element onto a y-grid of m points symmetric about 0.

    Values are summed directly for y ≥ 0 and mirrored, so the parity in y is exact.

    Raises:
        LiftError: if m is even or too small, or λₖ·y_max exceeds the overflow guard
    """
    if m < 3 or m % 2 == 0:
        raise LiftError(f"y point count must be odd and at least 3, got {m}")
    if not y_max > 0:
        raise LiftError(f"y_max must be positive, got {y_max}")
    if kind not in ("cosh", "sinh"):
        raise LiftError(f"Unknown lift kind: {kind}")

    lambdas = element.frequencies
    if lambdas.size and lambdas.max() * y_max > overflow_guard:
        worst = float(lambdas.max() * y_max)
        raise LiftError(f"Overflow guard violated: λₖ·y_max = {worst:.6g} > {overflow_guard}")

    half = (m - 1) // 2
    hy = y_max / half
    y = hy * np.arange(-half, half + 1, dtype=float)
    y_pos = y[half:]

    if kind == "cosh":
        factors = np.cosh(np.outer(lambdas, y_pos))
    else:
        factors = np.sinh(np.outer(lambdas, y_pos)) / lambdas[:, None]
    upper = element.modes @ (element.coefficients[:, None] * factors)

    mirrored = upper[:, :0:-1]
    if kind == "sinh":
        mirrored = -mirrored
    values = np.concatenate((mirrored, upper), axis=1)
    return LiftedField(x=element.basis.grid.x, y=y, values=values, kind=kind,
                       frequencies=lambdas, coefficients=element.coefficients.copy())


def _divergence(u: np.ndarray, cx: np.ndarray, cy: np.ndarray,
                hx: float, hy: float) -> Tuple[np.ndarray, np.ndarray]:
    """x and y parts of ∇·(c∇u) at interior nodes, flux form with face coefficients."""
    flux_x = cx * (u[1:, 1:-1] - u[:-1, 1:-1]) / hx
    flux_y = cy * (u[1:-1, 1:] - u[1:-1, :-1]) / hy
    return (flux_x[1:] - flux_x[:-1]) / hx, (flux_y[:, 1:] - flux_y[:, :-1]) / hy


@dataclass(frozen=True, eq=False)
class ResidualReport:
    relative: float
    absolute: float
    reference: float
    degenerate: bool
    residual: np.ndarray = field(repr=False, default_factory=lambda: np.empty((0, 0)))


def _norm(field_values: np.ndarray, hx: float, hy: float) -> float:
    return float(np.sqrt(hx * hy * np.sum(field_values ** 2)))


def _finish(residual: np.ndarray, reference: np.ndarray, hx: float, hy: float) -> ResidualReport:
    absolute = _norm(residual, hx, hy)
    ref = _norm(reference, hx, hy)
    if ref == 0.0:
        if absolute == 0.0:
            return ResidualReport(0.0, 0.0, 0.0, True, residual)
        return ResidualReport(math.inf, absolute, 0.0, True, residual)
    return ResidualReport(absolute / ref, absolute, ref, False, residual)


def residual_nondivergence(lifted: LiftedField, p: Potential) -> ResidualReport:
    """
    Relative interior residual ‖-Δ_hΦ + VΦ‖ / ‖VΦ‖ with the 5-point Laplacian.

    When VΦ vanishes the y-part of the Laplacian is the reference norm; a zero field
    reports 0 with the degenerate flag set.
    """
    if lifted.x.size < 3 or lifted.y.size < 3:
        raise LiftError("Residual needs at least one interior point")
    hx, hy = lifted.hx, lifted.hy
    u = lifted.values
    lap_x, lap_y = _divergence(u, 1.0, 1.0, hx, hy)
    v = evaluate(p, lifted.x[1:-1])[:, None]
    v_phi = v * u[1:-1, 1:-1]
    residual = -(lap_x + lap_y) + v_phi
    reference = v_phi if np.any(v_phi != 0.0) else lap_y
    return _finish(residual, reference, hx, hy)


@dataclass(frozen=True, eq=False)
class AuxOdeSolution:
    """Positive solution of -φ'' + Vφ = 0 on [a, b] with equal boundary values."""
    a: float
    b: float
    x: np.ndarray
    values: np.ndarray
    v_sup: float

    @property
    def boundary_value(self) -> float:
        return math.exp((self.b - self.a) * math.sqrt(self.v_sup))

    def bounds_hold(self, tol: float = 1e-8) -> bool:
        return bool(self.values.min() >= 1.0 - tol and self.values.max() <= self.boundary_value * (1.0 + tol))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(x < self.a - 1e-12) or np.any(x > self.b + 1e-12):
            raise LiftError(f"Auxiliary solution evaluated outside [{self.a}, {self.b}]")
        if np.all(self.values == self.values[0]):
            return np.full(x.shape, self.values[0])
        return CubicSpline(self.x, self.values)(x)


def solve_aux_ode(p: Potential, a: float, b: float, n: int = 2001) -> AuxOdeSolution:
    """
    Boundary-value solve of -φ'' + Vφ = 0, φ(a) = φ(b) = exp((b-a)‖V‖^{1/2}).

    The sup-norm is sampled on the n-point grid including both ends.
    """
    if not b > a:
        raise LiftError(f"Auxiliary interval [{a}, {b}] is empty")
    if n < 3:
        raise LiftError(f"Auxiliary grid needs at least 3 points, got {n}")
    x = np.linspace(a, b, n)
    try:
        v = evaluate(p, x)
    except PotentialError as e:
        raise LiftError(f"Failed to evaluate potential on [{a}, {b}]: {e}")
    v_sup = float(v.max())
    if v_sup == 0.0:
        return AuxOdeSolution(a, b, x, np.ones(n), 0.0)

    boundary = math.exp((b - a) * math.sqrt(v_sup))
    h = (b - a) / (n - 1)
    inner = n - 2
    ab = np.empty((3, inner))
    ab[0, :] = -1.0 / h ** 2
    ab[1, :] = 2.0 / h ** 2 + v[1:-1]
    ab[2, :] = -1.0 / h ** 2
    rhs = np.zeros(inner)
    rhs[0] += boundary / h ** 2
    rhs[-1] += boundary / h ** 2
    try:
        interior = solve_banded((1, 1), ab, rhs)
    except (LinAlgError, ValueError) as e:
        raise LiftError(f"Failed to solve auxiliary ODE: {e}")

    values = np.concatenate(([boundary], interior, [boundary]))
    solution = AuxOdeSolution(a, b, x, values, v_sup)
    if not solution.bounds_hold():
        logger.warning(f"Auxiliary solution on [{a}, {b}] leaves [1, {boundary:.6g}]")
    return solution


def residual_divergence(lifted: LiftedField, aux: AuxOdeSolution) -> ResidualReport:
    """
    Relative interior residual of -∇·(φ_aux²∇(Φ/φ_aux)), flux form with arithmetic
    face averages of φ_aux², measured against its y-part.
    """
    if lifted.x[0] < aux.a - 1e-12 or lifted.x[-1] > aux.b + 1e-12:
        raise LiftError(f"Auxiliary interval [{aux.a}, {aux.b}] does not cover the field")
    hx, hy = lifted.hx, lifted.hy
    phi = aux(lifted.x)
    coef = phi ** 2
    u = lifted.values / phi[:, None]
    cx = ((coef[1:] + coef[:-1]) / 2.0)[:, None]
    cy = coef[1:-1, None]
    div_x, div_y = _divergence(u, cx, cy, hx, hy)
    residual = -(div_x + div_y)
    return _finish(residual, div_y, hx, hy)


@dataclass(frozen=True, eq=False)
class RescaledField:
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    scale: float
    window: Tuple[float, float]
    v_sup: float
    v_bound: Optional[float]

    @property
    def within_bound(self) -> Optional[bool]:
        if self.v_bound is None:
            return None
        return bool(self.v_sup <= self.v_bound * (1.0 + 1e-12))


def enlarged_piece(piece: Tuple[float, float]) -> Tuple[float, float]:
    """I₃ = [a - 2|I|, b + 2|I|] around a piece I = [a, b]."""
    a, b = piece
    length = b - a
    return (a - 2.0 * length, b + 2.0 * length)


def _rescaled_sup(p: Potential, window: Tuple[float, float], scale: float,
                  points: int) -> Tuple[float, Optional[float]]:
    xs = np.linspace(window[0], window[1], points)
    v_sup = float(np.max(evaluate(p, xs))) / scale ** 2
    if p.bounds is None:
        return v_sup, None
    bound = p.bounds.c2 * float(np.max((1.0 + xs ** 2) ** (p.bounds.beta2 / 2.0))) / scale ** 2
    return v_sup, bound


def rescale_to_unit(lifted: LiftedField, p: Potential, piece: Tuple[float, float],
                    scale: Optional[float] = None, points: int = 2001) -> RescaledField:
    """
    Restrict a field to D₃ = I₃ × [-5|I|/2, 5|I|/2] around a piece and rescale by
    a = 1/|I| (or the given scale): f(z) = Φ(z/a), Ṽ(x) = a⁻²V(x/a).

    The window bound compared against is c₂a⁻² max ⟨x⟩^{β₂} over I₃.
    """
    length = piece[1] - piece[0]
    if not length > 0:
        raise LiftError(f"Piece {piece} is empty")
    scale = 1.0 / length if scale is None else scale
    if not scale > 0:
        raise LiftError(f"Scale must be positive, got {scale}")
    window = enlarged_piece(piece)
    half_height = 2.5 * length
    tol = 1e-12 * max(1.0, abs(window[0]), abs(window[1]))
    if (window[0] < lifted.x[0] - tol or window[1] > lifted.x[-1] + tol
            or half_height > lifted.y[-1] + tol):
        raise LiftError(f"Rescaling window {window} × ±{half_height} exits the field")

    xi = (lifted.x >= window[0] - tol) & (lifted.x <= window[1] + tol)
    yi = np.abs(lifted.y) <= half_height + tol
    v_sup, bound = _rescaled_sup(p, window, scale, points)
    return RescaledField(x=scale * lifted.x[xi], y=scale * lifted.y[yi],
                         values=lifted.values[np.ix_(xi, yi)], scale=scale,
                         window=window, v_sup=v_sup, v_bound=bound)


def rescaled_potential_sup(p: Potential, partition: Partition, n: int,
                           points: int = 2001) -> Tuple[float, Optional[float]]:
    """sup of a⁻²V over I₃,ₙ with a = 1/|Iₙ|, and the growth-bound value for comparison."""
    piece = partition.piece(n)
    return _rescaled_sup(p, enlarged_piece(piece), 1.0 / (piece[1] - piece[0]), points)


@dataclass(frozen=True)
class EnergyBounds:
    lower: float
    energy: float
    upper: float
    holds: bool


def energy_bounds(lifted: LiftedField, element: SpectralElement, rtol: float = 0.01) -> EnergyBounds:
    """
    2ρ‖φ‖² ≤ ‖Φ‖²_{H¹(ℝ×(-ρ,ρ))} ≤ 2ρ(1 + ρ²(1+λ²)e^{2ρλ}/3)‖φ‖² for a sinh lift with ρ = y_max.

    The H¹ energy uses forward differences in x (zero Dirichlet ghosts) and
    second-order differences in y, integrated by the trapezoid rule in y.
    """
    if lifted.kind != "sinh":
        raise LiftError("Energy bounds apply to sinh lifts")
    rho = float(lifted.y[-1])
    hx, hy = lifted.hx, lifted.hy
    u = lifted.values
    dx = np.diff(np.pad(u, ((1, 1), (0, 0))), axis=0) / hx
    dy = np.gradient(u, hy, axis=1, edge_order=2)
    per_row = hx * (np.sum(u ** 2, axis=0) + np.sum(dx ** 2, axis=0) + np.sum(dy ** 2, axis=0))
    energy = float(trapezoid(per_row, dx=hy))

    mass = element.norm() ** 2
    lam = element.cutoff
    lower = 2.0 * rho * mass
    upper = 2.0 * rho * (1.0 + rho ** 2 / 3.0 * (1.0 + lam ** 2) * math.exp(2.0 * rho * lam)) * mass
    holds = lower <= energy * (1.0 + rtol) and energy <= upper * (1.0 + rtol)
    return EnergyBounds(lower, energy, upper, bool(holds))
