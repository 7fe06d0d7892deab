"""Gray functions, conjugate Gray functions, dyadic-interval decoding, change points.

This is the deterministic combinatorial core: a reflected binary Gray code
expressed as threshold functions on [0, 1].  The k-th Gray function is
constant on dyadic cells of width 2^-k and the codes of adjacent cells
differ in exactly one bit, which is what makes the localization stage
robust to noise in individual bits.

All indices and resolutions are capped at MAX_INDEX = 48: below 2^-48 the
dyadic grid approaches the granularity of double precision on [0, 1], and
every quantity here (cell endpoints, products s * 2^-K) stays exactly
representable in a float64 up to that cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ResolutionOverflow

MAX_INDEX = 48


def truncate(x: float, lo: float, hi: float) -> float:
    """Clamp x to [lo, hi]."""
    if lo > hi:
        raise ValueError(f"invalid interval: lo={lo} > hi={hi}")
    if x <= lo:
        return lo
    if x >= hi:
        return hi
    return x


def _check_index(k: int) -> None:
    if k > MAX_INDEX:
        raise ResolutionOverflow(f"Gray index {k} exceeds supported cap {MAX_INDEX}")


def gray_bit(k: int, x: float) -> int:
    """k-th Gray function: 0 if floor(2^k * clamp(x)) mod 4 in {0, 3}, else 1.

    Indices k < 0 are defined to return 0.
    """
    if k < 0:
        return 0
    _check_index(k)
    r = math.floor(math.ldexp(truncate(x, 0.0, 1.0), k)) % 4
    return 0 if r in (0, 3) else 1


def conj_gray_bit(k: int, x: float) -> int:
    """k-th conjugate Gray function: 0 if floor(2^k * clamp(x)) mod 4 in {0, 1}, else 1."""
    if k < 0:
        return 0
    _check_index(k)
    r = math.floor(math.ldexp(truncate(x, 0.0, 1.0), k)) % 4
    return 0 if r in (0, 1) else 1


def gray_bits_vec(k: int, x: np.ndarray, conjugate: bool = False) -> np.ndarray:
    """Vectorized (conjugate) Gray function; returns a uint8 array of 0/1."""
    if k < 0:
        return np.zeros(np.shape(x), dtype=np.uint8)
    _check_index(k)
    r = np.floor(np.ldexp(np.clip(x, 0.0, 1.0), k)) % 4.0
    if conjugate:
        return (r >= 2.0).astype(np.uint8)
    return ((r == 1.0) | (r == 2.0)).astype(np.uint8)


@dataclass(frozen=True)
class DyadicInterval:
    """A subinterval of [0, 1] with endpoints on the 2^-resolution grid.

    ``closed_upper`` marks the single cell that abuts x = 1, which includes
    its upper endpoint.  Stretched intervals (localization steps widen their
    decoded cell) keep the original resolution and record the stretch amount;
    their endpoints are then no longer dyadic at ``resolution`` and may
    protrude beyond [0, 1].
    """

    lower: float
    upper: float
    resolution: int
    closed_upper: bool = False
    stretch: float = 0.0

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"invalid interval: {self.lower} > {self.upper}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def stretched(self, amount: float) -> "DyadicInterval":
        """Widen by ``amount`` on both sides (records the stretch)."""
        return DyadicInterval(
            self.lower - amount,
            self.upper + amount,
            self.resolution,
            closed_upper=True,
            stretch=self.stretch + amount,
        )

    def contains(self, x: float) -> bool:
        if self.closed_upper:
            return self.lower <= x <= self.upper
        return self.lower <= x < self.upper


@dataclass(frozen=True)
class ChangePointSet:
    """Sorted discontinuity points of a (conjugate) Gray function on (0, 1)."""

    points: tuple = field(default_factory=tuple)

    def __post_init__(self):
        pts = tuple(self.points)
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("change points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


def gray_to_cell(bits) -> int:
    """Invert the Gray code: map a K-bit string to its dyadic cell index.

    Prefix-wise reflection (Gray-to-binary unfolding): binary bit j is the
    XOR of code bits 1..j, MSB first.  O(K), no grid search.
    """
    s = 0
    acc = 0
    for b in bits:
        acc ^= int(b)
        s = (s << 1) | acc
    return s


def cell_index_vec(bits: np.ndarray) -> np.ndarray:
    """Vectorized gray_to_cell over rows of a (R, K) 0/1 array; returns uint64."""
    acc = np.bitwise_xor.accumulate(bits.astype(np.uint64), axis=1)
    k = bits.shape[1]
    weights = (np.uint64(1) << np.arange(k - 1, -1, -1, dtype=np.uint64))
    return acc @ weights


def decode(bits) -> DyadicInterval:
    """Dec_K: the set of x in [0, 1] whose first K Gray bits equal ``bits``.

    Always a single dyadic cell of width 2^-K, half-open except for the
    rightmost cell which includes x = 1.
    """
    bits = list(bits)
    k = len(bits)
    if k < 1:
        raise ValueError("decode requires at least one bit")
    _check_index(k)
    if any(b not in (0, 1) for b in bits):
        raise ValueError("bits must be 0 or 1")
    s = gray_to_cell(bits)
    lo = math.ldexp(float(s), -k)
    hi = math.ldexp(float(s + 1), -k)
    return DyadicInterval(lo, hi, resolution=k, closed_upper=(s == (1 << k) - 1))


def change_points(k: int, conjugate: bool = False) -> ChangePointSet:
    """Discontinuity set of the (conjugate) Gray function at index k on (0, 1).

    Plain: odd multiples of 2^-k.  Conjugate: even multiples of 2^-k, i.e.
    {j * 2^-(k-1) : 1 <= j <= 2^(k-1) - 1} (empty for k = 1); this is derived
    from where conj_gray_bit changes value, and is verified against a direct
    scan in the test suite.
    """
    if k < 1:
        raise ValueError("change point sets are defined for k >= 1")
    _check_index(k)
    if conjugate:
        if k == 1:
            return ChangePointSet(())
        step = math.ldexp(1.0, -(k - 1))
        pts = tuple(j * step for j in range(1, (1 << (k - 1))))
    else:
        step = math.ldexp(1.0, -k)
        pts = tuple((2 * j - 1) * step for j in range(1, (1 << (k - 1)) + 1))
    return ChangePointSet(pts)


def dist_to_set(x: float, s) -> float:
    """min_{y in S} |x - y| for a ChangePointSet or (closure of a) DyadicInterval."""
    if isinstance(s, DyadicInterval):
        if x < s.lower:
            return s.lower - x
        if x > s.upper:
            return x - s.upper
        return 0.0
    if isinstance(s, ChangePointSet):
        pts = s.points
    else:
        pts = tuple(s)
    if not pts:
        raise ValueError("distance to an empty set is undefined")
    return min(abs(x - p) for p in pts)
