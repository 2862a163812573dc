"""
Potential families for the Schrödinger operator H = -d²/dx² + V and numerical
certification of their growth and regularity assumptions.
"""

import logging
from dataclasses import dataclass, replace
from typing import Any, Dict, Literal, Optional, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

PotentialKind = Literal["monomial", "oscillating", "shifted_monomial", "tabulated", "constant"]


class PotentialError(ValueError):
    """Exception for invalid potentials or evaluation domains."""
    pass


def japanese_bracket(x: ArrayLike) -> ArrayLike:
    """⟨x⟩ = (1 + x²)^{1/2} in double precision."""
    return np.sqrt(1.0 + np.square(x))


@dataclass(frozen=True)
class GrowthBounds:
    """Two-sided power growth c₁(|x|-c₃)₊^{β₁} ≤ V(x) ≤ c₂⟨x⟩^{β₂}."""
    c1: float
    c2: float
    c3: float
    beta1: float
    beta2: float

    def __post_init__(self):
        if not (self.c1 > 0 and self.c2 > 0 and self.c3 >= 0):
            raise PotentialError(
                f"Growth constants need c1 > 0, c2 > 0, c3 >= 0 (got {self.c1}, {self.c2}, {self.c3})"
            )
        if not (self.beta2 >= self.beta1 > 0):
            raise PotentialError(
                f"Growth exponents need beta2 >= beta1 > 0 (got beta1={self.beta1}, beta2={self.beta2})"
            )

    def lower(self, x: ArrayLike) -> ArrayLike:
        return self.c1 * np.maximum(np.abs(x) - self.c3, 0.0) ** self.beta1

    def upper(self, x: ArrayLike) -> ArrayLike:
        return self.c2 * japanese_bracket(x) ** self.beta2

    def to_dict(self) -> Dict[str, float]:
        return {"c1": self.c1, "c2": self.c2, "c3": self.c3, "beta1": self.beta1, "beta2": self.beta2}


@dataclass(frozen=True)
class Potential:
    """
    A nonnegative potential V described by its kind and parameters.

    Parameters by kind:
        monomial:          beta                     V = |x|^β
        oscillating:       beta1, beta2             V = |x|^{β₂}(sin(x²)+1) + |x|^{β₁}
        shifted_monomial:  beta, c3                 V = (|x|-c₃)₊^β
        tabulated:         grid, values             piecewise linear, constant beyond the table
        constant:          value                    V = value
    Every kind adds the additive `offset` θ ≥ 0.
    """
    kind: PotentialKind
    params: Tuple[Tuple[str, Any], ...]
    bounds: Optional[GrowthBounds] = None
    offset: float = 0.0

    def __post_init__(self):
        if self.offset < 0 or not np.isfinite(self.offset):
            raise PotentialError(f"Potential offset must be finite and nonnegative, got {self.offset}")
        p = self.param_dict
        if self.kind == "monomial":
            _require_positive(p, "beta")
        elif self.kind == "oscillating":
            _require_positive(p, "beta1")
            _require_positive(p, "beta2")
        elif self.kind == "shifted_monomial":
            _require_positive(p, "beta")
            if p.get("c3", 0.0) < 0:
                raise PotentialError("shifted_monomial needs c3 >= 0")
        elif self.kind == "tabulated":
            grid = np.asarray(p.get("grid", ()), dtype=float)
            values = np.asarray(p.get("values", ()), dtype=float)
            if grid.ndim != 1 or grid.size < 2 or grid.shape != values.shape:
                raise PotentialError("tabulated potential needs matching 1D grid and values of length >= 2")
            if np.any(np.diff(grid) <= 0):
                raise PotentialError("tabulated grid must be strictly increasing")
            if np.any(values < 0) or not np.all(np.isfinite(values)):
                raise PotentialError("tabulated values must be finite and nonnegative")
        elif self.kind == "constant":
            value = p.get("value", 0.0)
            if value < 0 or not np.isfinite(value):
                raise PotentialError(f"constant potential must be finite and nonnegative, got {value}")
        else:
            raise PotentialError(f"Unknown potential kind: {self.kind}")

    @property
    def param_dict(self) -> Dict[str, Any]:
        return dict(self.params)

    def __call__(self, x: ArrayLike) -> ArrayLike:
        return evaluate(self, x)

    def to_dict(self) -> Dict[str, Any]:
        """JSON form {kind, params, bounds, offset}."""
        params = {}
        for key, value in self.params:
            params[key] = list(value) if isinstance(value, tuple) else value
        return {
            "kind": self.kind,
            "params": params,
            "bounds": self.bounds.to_dict() if self.bounds else None,
            "offset": self.offset,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Potential':
        bounds = data.get("bounds")
        return make_potential(
            data["kind"],
            bounds=GrowthBounds(**bounds) if bounds else None,
            offset=data.get("offset", 0.0),
            **data.get("params", {}),
        )


def _require_positive(params: Dict[str, Any], name: str) -> None:
    value = params.get(name)
    if value is None or not value > 0:
        raise PotentialError(f"Parameter {name} must be positive, got {value}")


def make_potential(kind: PotentialKind, bounds: Optional[GrowthBounds] = None,
                   offset: float = 0.0, **params) -> Potential:
    """Build a Potential from keyword parameters (lists are frozen into tuples)."""
    frozen = []
    for key in sorted(params):
        value = params[key]
        if isinstance(value, (list, np.ndarray)):
            value = tuple(float(v) for v in value)
        elif isinstance(value, (int, float, np.floating)):
            value = float(value)
        frozen.append((key, value))
    return Potential(kind=kind, params=tuple(frozen), bounds=bounds, offset=float(offset))


def monomial(beta: float, bounds: Optional[GrowthBounds] = None) -> Potential:
    return make_potential("monomial", bounds=bounds, beta=beta)


def oscillating_example(beta1: float, beta2: float, bounds: Optional[GrowthBounds] = None) -> Potential:
    """|x|^{β₂}(sin(x²)+1) + |x|^{β₁}; default bounds (c₁, c₂, c₃) = (1, 3, 0)."""
    if bounds is None:
        bounds = GrowthBounds(c1=1.0, c2=3.0, c3=0.0, beta1=beta1, beta2=beta2)
    return make_potential("oscillating", bounds=bounds, beta1=beta1, beta2=beta2)


def constant(value: float) -> Potential:
    return make_potential("constant", value=value)


def evaluate(p: Potential, x: ArrayLike) -> ArrayLike:
    """
    Evaluate V at x (scalar or array).

    Raises:
        PotentialError: if any x is not finite
    """
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)):
        raise PotentialError("Potential evaluation requires finite x")

    params = p.param_dict
    ax = np.abs(xa)
    if p.kind == "monomial":
        values = ax ** params["beta"]
    elif p.kind == "oscillating":
        values = ax ** params["beta2"] * (np.sin(xa * xa) + 1.0) + ax ** params["beta1"]
    elif p.kind == "shifted_monomial":
        values = np.maximum(ax - params.get("c3", 0.0), 0.0) ** params["beta"]
    elif p.kind == "tabulated":
        values = np.interp(xa, np.asarray(params["grid"]), np.asarray(params["values"]))
    else:
        values = np.full_like(xa, params.get("value", 0.0))

    values = values + p.offset
    if np.ndim(x) == 0:
        return float(values)
    return values


def shift_potential(p: Potential, theta: float) -> Potential:
    """Return x ↦ V(x) + θ, used to enforce V ≥ 1 without changing the dynamics."""
    if not np.isfinite(theta) or theta < 0:
        raise PotentialError(f"Shift must be finite and nonnegative, got {theta}")
    return replace(p, offset=p.offset + float(theta))


@dataclass(frozen=True)
class GrowthReport:
    """Outcome of a sampled growth-bound check."""
    holds: bool
    worst_violation: float
    witness: Optional[float]
    samples: int


def verify_growth_bounds(p: Potential, b: GrowthBounds, xs: np.ndarray) -> GrowthReport:
    """
    Check c₁(|x|-c₃)₊^{β₁} ≤ V(x) ≤ c₂⟨x⟩^{β₂} at every sample.

    worst_violation is the largest amount by which either side fails (≤ 0 when the
    bounds hold); witness is the sample where it is attained, None when they hold.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        raise PotentialError("verify_growth_bounds needs a nonempty sample grid")
    v = evaluate(p, xs)
    violation = np.maximum(b.lower(xs) - v, v - b.upper(xs))
    idx = int(np.argmax(violation))
    worst = float(violation[idx])
    holds = bool(worst <= 0.0)
    if not holds:
        logger.info(f"Growth bounds violated by {worst:.3e} at x={xs[idx]:.6g}")
    return GrowthReport(holds=holds, worst_violation=worst,
                        witness=None if holds else float(xs[idx]), samples=int(xs.size))


@dataclass(frozen=True)
class A2Split:
    """V = V₁ + V₂ with |V₁| + |DV₁| + |V₂|^{4/3} ≤ c₄⟨x⟩^{β₂}."""
    v1: Potential
    v2: Potential
    c4: float
    beta2: float

    def __post_init__(self):
        if not self.c4 > 0:
            raise PotentialError(f"c4 must be positive, got {self.c4}")
        if not self.beta2 > 0:
            raise PotentialError(f"beta2 must be positive, got {self.beta2}")


@dataclass(frozen=True)
class A2Report:
    holds: bool
    max_ratio: float
    witness: float
    c4: float


def central_difference(p: Potential, xs: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """DV by central differences (V(x+h) - V(x-h)) / 2h."""
    if not h > 0:
        raise PotentialError(f"Finite-difference step must be positive, got {h}")
    return (evaluate(p, xs + h) - evaluate(p, xs - h)) / (2.0 * h)


def verify_a2(split: A2Split, xs: np.ndarray, h: float = 1e-5) -> A2Report:
    """Largest sampled ratio (|V₁| + |DV₁| + |V₂|^{4/3}) / ⟨x⟩^{β₂}, compared with c₄."""
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        raise PotentialError("verify_a2 needs a nonempty sample grid")
    lhs = (np.abs(evaluate(split.v1, xs))
           + np.abs(central_difference(split.v1, xs, h))
           + np.abs(evaluate(split.v2, xs)) ** (4.0 / 3.0))
    ratio = lhs / japanese_bracket(xs) ** split.beta2
    idx = int(np.argmax(ratio))
    max_ratio = float(ratio[idx])
    return A2Report(holds=bool(max_ratio <= split.c4), max_ratio=max_ratio,
                    witness=float(xs[idx]), c4=split.c4)


def certification_grid(radius: float, points: int = 10001) -> np.ndarray:
    """Default sampled certification domain: uniform grid of ≥ 10⁴ points on [-r, r]."""
    if points < 10000:
        logger.warning(f"Certification grid of {points} points is below the 10^4 default")
    return np.linspace(-radius, radius, points)


def sup_on_interval(p: Potential, a: float, b: float, points: int = 2001) -> float:
    """Sampled ‖V‖_{L∞([a, b])}."""
    if not b > a:
        raise PotentialError(f"Interval [{a}, {b}] is empty")
    return float(np.max(evaluate(p, np.linspace(a, b, points))))
