"""
Thick control sets: interval-set algebra, the decomposition recurrence, thickness
checkers and seeded generators.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, List, Literal, Optional, Sequence, Tuple

import numpy as np

from .potentials import japanese_bracket

logger = logging.getLogger(__name__)

Window = Tuple[float, float]

THRESHOLD_SLACK = 1e-12


class ThickSetError(ValueError):
    """Exception for invalid thickness profiles, partitions or interval data."""
    pass


def merge_intervals(intervals: Iterable[Sequence[float]]) -> List[Tuple[float, float]]:
    """Sort and merge overlapping or touching closed intervals."""
    ret = []
    start = stop = None
    for a, b in sorted((float(a), float(b)) for a, b in intervals):
        if start is None:
            start, stop = a, b
            continue
        if a > stop:
            ret.append((start, stop))
            start, stop = a, b
        elif b > stop:
            stop = b
    if start is not None:
        ret.append((start, stop))
    return ret


def _intersect_windows(w1: Optional[Window], w2: Optional[Window]) -> Optional[Window]:
    if w1 is None:
        return w2
    if w2 is None:
        return w1
    lo, hi = max(w1[0], w2[0]), min(w1[1], w2[1])
    if lo > hi:
        raise ThickSetError(f"Description windows {w1} and {w2} do not overlap")
    return (lo, hi)


@dataclass(frozen=True)
class IntervalSet:
    """
    Finite union of disjoint closed intervals, normalized on construction.

    `window` is the range over which the set is fully described; None means the
    intervals are the whole set on ℝ. Checks outside the window are reported as
    unchecked.
    """
    intervals: Tuple[Tuple[float, float], ...] = ()
    window: Optional[Window] = None

    def __post_init__(self):
        for a, b in self.intervals:
            if not (math.isfinite(a) and math.isfinite(b)):
                raise ThickSetError(f"Interval endpoints must be finite, got [{a}, {b}]")
            if a > b:
                raise ThickSetError(f"Interval [{a}, {b}] has a > b")
        if self.window is not None:
            lo, hi = self.window
            if not lo <= hi:
                raise ThickSetError(f"Window [{lo}, {hi}] is empty")
            object.__setattr__(self, "window", (float(lo), float(hi)))
        object.__setattr__(self, "intervals", tuple(merge_intervals(self.intervals)))

    @classmethod
    def empty(cls, window: Optional[Window] = None) -> 'IntervalSet':
        return cls((), window)

    @cached_property
    def _starts(self) -> np.ndarray:
        return np.array([a for a, _ in self.intervals], dtype=float)

    @cached_property
    def _ends(self) -> np.ndarray:
        return np.array([b for _, b in self.intervals], dtype=float)

    @cached_property
    def _cumulative(self) -> np.ndarray:
        lengths = self._ends - self._starts
        return np.concatenate(([0.0], np.cumsum(lengths)))

    @property
    def measure(self) -> float:
        return float(sum(b - a for a, b in self.intervals))

    def is_empty(self) -> bool:
        return len(self.intervals) == 0

    def covers(self, lo: float, hi: float) -> bool:
        """True if [lo, hi] lies inside the description window."""
        if self.window is None:
            return True
        return self.window[0] <= lo and hi <= self.window[1]

    def union(self, other: 'IntervalSet') -> 'IntervalSet':
        return IntervalSet(self.intervals + other.intervals,
                           _intersect_windows(self.window, other.window))

    def intersection(self, other: 'IntervalSet') -> 'IntervalSet':
        out = []
        i = j = 0
        a, b = self.intervals, other.intervals
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return IntervalSet(tuple(out), _intersect_windows(self.window, other.window))

    def complement(self, window: Window) -> 'IntervalSet':
        """Closure of window minus the set."""
        lo, hi = window
        if not lo <= hi:
            raise ThickSetError(f"Complement window [{lo}, {hi}] is empty")
        out = []
        cursor = lo
        for a, b in self.intervals:
            if b < lo or a > hi:
                continue
            if a > cursor:
                out.append((cursor, min(a, hi)))
            cursor = max(cursor, b)
        if cursor < hi:
            out.append((cursor, hi))
        return IntervalSet(tuple(out), _intersect_windows(self.window, (lo, hi)))

    def cumulative_measure(self, x: np.ndarray) -> np.ndarray:
        """|Ω ∩ (-∞, x]| for every x."""
        x = np.asarray(x, dtype=float)
        if self.is_empty():
            return np.zeros_like(x)
        idx = np.searchsorted(self._starts, x, side="right") - 1
        safe = np.clip(idx, 0, None)
        inside = np.minimum(x - self._starts[safe], self._ends[safe] - self._starts[safe])
        return np.where(idx < 0, 0.0, self._cumulative[safe] + inside)

    def overlap_measure(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """|Ω ∩ [lo, hi]| vectorized over interval endpoints."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        return np.maximum(self.cumulative_measure(hi) - self.cumulative_measure(lo), 0.0)

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.is_empty():
            return np.zeros(x.shape, dtype=bool)
        idx = np.searchsorted(self._starts, x, side="right") - 1
        safe = np.clip(idx, 0, None)
        return (idx >= 0) & (x <= self._ends[safe])

    def to_json(self) -> List[List[float]]:
        return [[a, b] for a, b in self.intervals]

    @classmethod
    def from_json(cls, data: Sequence[Sequence[float]], window: Optional[Window] = None) -> 'IntervalSet':
        return cls(tuple((float(a), float(b)) for a, b in data), window)


def set_ops(a: IntervalSet, b: IntervalSet) -> dict:
    """Union, intersection and their measures in one call."""
    union = a.union(b)
    inter = a.intersection(b)
    return {"union": union, "intersection": inter,
            "union_measure": union.measure, "intersection_measure": inter.measure}


ProfileKind = Literal["power", "loglog", "unit"]


@dataclass(frozen=True)
class ThicknessProfile:
    """
    Thickness of type (ρ, τ) with constants γ and L.

    power:  ρ(x) = ⟨x⟩^{-s}
    loglog: ρ(x) = min{(R log log⟨x⟩ - R⁻¹)^e ⟨x⟩^{-β₂/2}, 1}, e = bracket_exponent ∈ {1, ½}
    unit:   ρ(x) = 1
    """
    kind: ProfileKind
    gamma: float
    L: float
    tau: float = 0.0
    s: float = 0.0
    R: float = 1.0
    beta2: float = 2.0
    bracket_exponent: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ThickSetError(f"γ must lie in (0,1), got {self.gamma}")
        if not self.L > 0:
            raise ThickSetError(f"L must be positive, got {self.L}")
        if self.tau < 0:
            raise ThickSetError(f"τ must be nonnegative, got {self.tau}")
        if self.kind == "power" and self.s < 0:
            raise ThickSetError(f"s must be nonnegative, got {self.s}")
        if self.kind == "loglog":
            if not self.R > 0:
                raise ThickSetError(f"R must be positive, got {self.R}")
            if self.bracket_exponent not in (1.0, 0.5):
                raise ThickSetError(f"bracket_exponent must be 1 or 0.5, got {self.bracket_exponent}")
        if self.kind not in ("power", "loglog", "unit"):
            raise ThickSetError(f"Unknown profile kind: {self.kind}")

    @property
    def decay(self) -> float:
        """Exponent s of the partition recurrence this profile is consistent with."""
        if self.kind == "power":
            return self.s
        if self.kind == "loglog":
            return self.beta2 / 2.0
        return 0.0

    def rho_with_flags(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """ρ(x) and a mask of degenerate points (loglog bracket ≤ 0, where ρ is set to 0)."""
        x = np.asarray(x, dtype=float)
        bracket_x = japanese_bracket(x)
        if self.kind == "unit":
            return np.ones_like(x), np.zeros(x.shape, dtype=bool)
        if self.kind == "power":
            return bracket_x ** (-self.s), np.zeros(x.shape, dtype=bool)

        with np.errstate(divide="ignore", invalid="ignore"):
            inner = self.R * np.log(np.log(bracket_x)) - 1.0 / self.R
        degenerate = ~(inner > 0)
        positive = np.where(degenerate, 0.0, inner)
        rho = np.minimum(positive ** self.bracket_exponent * bracket_x ** (-self.beta2 / 2.0), 1.0)
        return np.where(degenerate, 0.0, rho), degenerate

    def rho(self, x: np.ndarray) -> np.ndarray:
        return self.rho_with_flags(x)[0]

    def threshold(self, x: np.ndarray) -> np.ndarray:
        """Required density γ^{⟨x⟩^τ}."""
        return self.gamma ** (japanese_bracket(np.asarray(x, dtype=float)) ** self.tau)


@dataclass(frozen=True, eq=False)
class Partition:
    """
    Symmetric decomposition of ℝ by x₀ = 0, x₁ = L and x_{n+1} = x_n + Lρ(x_n).

    centers holds x₀..x_{N+1}; the pieces are I₀ = [-L, L], Iₙ = [xₙ, xₙ₊₁] and
    I₋ₙ = -Iₙ for 1 ≤ n ≤ N.
    """
    L: float
    s: float
    centers: np.ndarray
    degenerate: Tuple[int, ...] = ()

    @property
    def N(self) -> int:
        return len(self.centers) - 2

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def piece(self, n: int) -> Tuple[float, float]:
        if abs(n) > self.N:
            raise ThickSetError(f"Piece {n} outside generated range ±{self.N}")
        if n == 0:
            return (-self.L, self.L)
        a, b = float(self.centers[abs(n)]), float(self.centers[abs(n) + 1])
        return (a, b) if n > 0 else (-b, -a)

    def pieces(self) -> Tuple[np.ndarray, np.ndarray]:
        """Left and right endpoints of every piece, ordered n = -N..N."""
        pos_lo = self.centers[1:-1]
        pos_hi = self.centers[2:]
        lo = np.concatenate((-pos_hi[::-1], [-self.L], pos_lo))
        hi = np.concatenate((-pos_lo[::-1], [self.L], pos_hi))
        return lo, hi

    def anchors(self) -> np.ndarray:
        """The point xₙ whose bracket sets the density required on each piece (x₀ = 0 for I₀)."""
        pos = self.centers[1:-1]
        return np.concatenate((-pos[::-1], [0.0], pos))

    @property
    def extent(self) -> float:
        return float(self.centers[-1])

    def to_dict(self) -> dict:
        return {"L": self.L, "s": self.s, "centers": [float(c) for c in self.centers]}


def build_partition(L: float, s: float, N: int) -> Partition:
    """Partition from the recurrence x_{n+1} = x_n + L x_n^{-s}, N pieces on each side."""
    if not L > 0:
        raise ThickSetError(f"L must be positive, got {L}")
    if s < 0:
        raise ThickSetError(f"s must be nonnegative, got {s}")
    if N < 1:
        raise ThickSetError(f"N must be at least 1, got {N}")

    if s == 0:
        centers = L * np.arange(N + 2, dtype=float)
    else:
        centers = np.empty(N + 2)
        centers[0] = 0.0
        x = float(L)
        centers[1] = x
        for n in range(2, N + 2):
            x = x + L * x ** (-s)
            centers[n] = x
    return Partition(L=float(L), s=float(s), centers=centers)


def build_profile_partition(profile: ThicknessProfile, N: int) -> Partition:
    """
    Partition from x_{n+1} = x_n + Lρ(x_n) for any profile.

    Degenerate loglog points step by L (ρ taken as 1) and are listed in the result.
    """
    if N < 1:
        raise ThickSetError(f"N must be at least 1, got {N}")
    if profile.kind == "power":
        return build_partition(profile.L, profile.s, N)

    centers = np.empty(N + 2)
    centers[0] = 0.0
    centers[1] = profile.L
    degenerate = []
    x = profile.L
    for n in range(1, N + 1):
        rho, flag = profile.rho_with_flags(np.array(x))
        if flag:
            degenerate.append(n)
            rho = 1.0
        x = x + profile.L * float(rho)
        centers[n + 1] = x
    if degenerate:
        logger.warning(f"Profile partition has {len(degenerate)} degenerate pieces (first n={degenerate[0]})")
    return Partition(L=profile.L, s=profile.decay, centers=centers, degenerate=tuple(degenerate))


def partition_asymptotics(p: Partition) -> np.ndarray:
    """Ratios rₙ = xₙ / ((s+1)Ln)^{1/(s+1)} for n = 1..N+1."""
    if p.N < 9:
        raise ThickSetError("partition_asymptotics needs at least 10 positive-side pieces")
    n = np.arange(1, p.N + 2, dtype=float)
    return p.centers[1:] / ((p.s + 1.0) * p.L * n) ** (1.0 / (p.s + 1.0))


@dataclass(frozen=True, eq=False)
class ThicknessReport:
    """Outcome of a thickness check; ratios are |Ω∩I|/|I|, margins ratio/threshold."""
    holds: bool
    worst_x: Optional[float]
    worst_ratio: Optional[float]
    worst_margin: Optional[float]
    checked: int
    unchecked: int
    degenerate: int
    ratios: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))
    thresholds: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))
    status: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0, dtype=object))


def _report(points: np.ndarray, ratios: np.ndarray, thresholds: np.ndarray,
            in_window: np.ndarray, degenerate: np.ndarray, slack: float) -> ThicknessReport:
    checked = in_window & ~degenerate
    passed = ratios >= thresholds * (1.0 - slack)
    status = np.where(~in_window, "unchecked",
                      np.where(degenerate, "degenerate", np.where(passed, "pass", "fail")))
    n_checked = int(np.count_nonzero(checked))
    if n_checked == 0:
        return ThicknessReport(False, None, None, None, 0, int(np.count_nonzero(~in_window)),
                               int(np.count_nonzero(degenerate & in_window)), ratios, thresholds, status)

    margins = np.where(checked, ratios / thresholds, np.inf)
    idx = int(np.argmin(margins))
    return ThicknessReport(
        holds=bool(np.all(passed[checked])),
        worst_x=float(points[idx]),
        worst_ratio=float(ratios[idx]),
        worst_margin=float(margins[idx]),
        checked=n_checked,
        unchecked=int(np.count_nonzero(~in_window)),
        degenerate=int(np.count_nonzero(degenerate & in_window)),
        ratios=ratios,
        thresholds=thresholds,
        status=status,
    )


def is_thick_pointwise(omega: IntervalSet, profile: ThicknessProfile, xs: np.ndarray,
                       slack: float = THRESHOLD_SLACK) -> ThicknessReport:
    """Check |Ω ∩ I_{Lρ(x)}(x)| ≥ γ^{⟨x⟩^τ}|I_{Lρ(x)}(x)| at every sample x."""
    xs = np.asarray(xs, dtype=float)
    rho, degenerate = profile.rho_with_flags(xs)
    r = profile.L * rho
    lo, hi = xs - r, xs + r
    length = np.where(degenerate, 1.0, hi - lo)
    ratios = np.where(degenerate, 0.0, omega.overlap_measure(lo, hi) / length)
    if omega.window is None:
        in_window = np.ones(xs.shape, dtype=bool)
    else:
        in_window = (lo >= omega.window[0]) & (hi <= omega.window[1])
    report = _report(xs, ratios, profile.threshold(xs), in_window, degenerate, slack)
    if report.unchecked:
        logger.info(f"{report.unchecked} samples fall outside the described range and are unchecked")
    return report


def is_thick_partitionwise(omega: IntervalSet, p: Partition, gamma: float, tau: float,
                           slack: float = THRESHOLD_SLACK) -> ThicknessReport:
    """Check |Ω ∩ Iₙ| ≥ γ^{⟨xₙ⟩^τ}|Iₙ| on every piece of the partition."""
    if not 0.0 < gamma < 1.0:
        raise ThickSetError(f"γ must lie in (0,1), got {gamma}")
    lo, hi = p.pieces()
    anchors = p.anchors()
    ratios = omega.overlap_measure(lo, hi) / (hi - lo)
    thresholds = gamma ** (japanese_bracket(anchors) ** tau)
    if omega.window is None:
        in_window = np.ones(lo.shape, dtype=bool)
    else:
        in_window = (lo >= omega.window[0]) & (hi <= omega.window[1])
    return _report(p.indices.astype(float), ratios, thresholds, in_window,
                   np.zeros(lo.shape, dtype=bool), slack)


def generate_thick(profile: ThicknessProfile, p: Partition, seed: int) -> IntervalSet:
    """
    One subinterval of length γ^{⟨xₙ⟩^τ}|Iₙ| per piece, at a seeded uniform offset.

    Offsets are drawn for every piece before any length is computed, so the same seed
    gives sets nested in γ. If a length underflows to zero, generation stops at that
    |n| and the description window shrinks accordingly.
    """
    if not math.isclose(profile.L, p.L, rel_tol=1e-12):
        raise ThickSetError(f"Profile L={profile.L} does not match partition L={p.L}")
    if not math.isclose(profile.decay, p.s, rel_tol=1e-12, abs_tol=1e-15):
        raise ThickSetError(f"Profile decay {profile.decay} does not match partition s={p.s}")

    rng = np.random.default_rng(seed)
    lo, hi = p.pieces()
    offsets = rng.uniform(size=lo.size)
    anchors = p.anchors()
    lengths = profile.threshold(anchors) * (hi - lo)

    indices = p.indices
    underflow = np.abs(indices[lengths <= 0.0])
    cutoff = int(underflow.min()) if underflow.size else p.N + 1
    if cutoff <= p.N:
        logger.warning(f"Thick-set piece length underflows at n={cutoff}; generation stops there")

    keep = np.abs(indices) < cutoff
    starts = lo + offsets * (hi - lo - lengths)
    ends = starts + lengths
    intervals = tuple(zip(starts[keep].tolist(), ends[keep].tolist()))

    if cutoff == 0:
        return IntervalSet.empty(window=(0.0, 0.0))
    window = (float(lo[keep].min()), float(hi[keep].max()))
    return IntervalSet(intervals, window)


def regular_window_set(L: float, sigma: float, window: Window, fill: float = 0.5) -> IntervalSet:
    """
    One centered window of half-width fill·(L/2)·⟨k⟩^{-σ} per cell [kL, (k+1)L] in window.

    For fixed fill the sets are nested in σ (larger σ gives a subset).
    """
    if not L > 0:
        raise ThickSetError(f"L must be positive, got {L}")
    if sigma < 0:
        raise ThickSetError(f"σ must be nonnegative, got {sigma}")
    if not 0.0 < fill <= 1.0:
        raise ThickSetError(f"fill must lie in (0, 1], got {fill}")
    a, b = window
    k = np.arange(math.ceil(a / L), math.floor(b / L))
    centers = (k + 0.5) * L
    half = fill * (L / 2.0) * japanese_bracket(k.astype(float)) ** (-sigma)
    intervals = tuple(zip((centers - half).tolist(), (centers + half).tolist()))
    if k.size == 0:
        return IntervalSet.empty(window=(float(a), float(b)))
    return IntervalSet(intervals, (float(k[0] * L), float((k[-1] + 1) * L)))
