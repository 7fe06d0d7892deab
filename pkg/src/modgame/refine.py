"""Refinement square waves, their Gaussian convolution, and monotone inversion.

The refinement stage sends one bit h(X) (or its half-period phase shift
hbar(X)) per machine.  The mean of those bits estimates the convolution
Phi_w(theta) = E[w(X)], X ~ N(theta, sigma^2), which is strictly monotone on
an interval that stays inside one alignment window, so it can be inverted by
bisection to recover theta at sub-sigma accuracy near a wave transition.

Numerics: the standard normal CDF (scipy.special.ndtr, erfc-based,
relative accuracy ~1e-15) is the single primitive this module depends on.
The convolution is evaluated on the window [x - 10*sigma, x + 10*sigma];
the tail mass beyond it is < 8e-24 and enters as an exact average-value
correction, keeping the absolute error below 1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import ProtocolInvariantViolation

MAX_EXPONENT = 48

# One-sided Gaussian tail mass beyond 10 sigma.
_TAIL = float(ndtr(-10.0))


def floor_log2_inv(sigma: float) -> int:
    """floor(log2(1/sigma)), exact for every positive float."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    man, ex = math.frexp(sigma)
    return (1 - ex) if man == 0.5 else -ex


def wave_exponent(sigma: float) -> int:
    """Refinement resolution floor(log2(1/sigma)) - 7, floored at 1.

    The offset -7 makes the wave half-period 128x coarser than sigma; the
    floor keeps the wave nondegenerate when sigma > 2^-8 (where the raw
    exponent would be <= 0 and the wave constant on [0, 1]).
    """
    e = max(floor_log2_inv(sigma) - 7, 1)
    if e > MAX_EXPONENT:
        raise ValueError(f"wave exponent {e} exceeds cap {MAX_EXPONENT}")
    return e


@dataclass(frozen=True)
class RefinementWave:
    """Square wave floor(2^e x) mod 2; the conjugate shifts phase by 2^-(e+1)."""

    exponent: int
    conjugate: bool = False

    def __post_init__(self):
        if not (1 <= self.exponent <= MAX_EXPONENT):
            raise ValueError(f"wave exponent must be in [1, {MAX_EXPONENT}]")

    @property
    def half_period(self) -> float:
        return math.ldexp(1.0, -self.exponent)


def wave_bit(wave: RefinementWave, x: float) -> int:
    """Wave value at x: floor(2^e x) mod 2, or floor(2^e x - 1/2) mod 2 conjugated."""
    t = math.ldexp(x, wave.exponent)
    if wave.conjugate:
        t -= 0.5
    return int(math.floor(t)) % 2


def wave_bits_vec(x: np.ndarray, exponent: int, conjugate: bool) -> np.ndarray:
    t = np.ldexp(np.asarray(x, dtype=np.float64), exponent)
    if conjugate:
        t = t - 0.5
    return (np.floor(t) % 2.0).astype(np.uint8)


def _one_intervals(exponent: int, conjugate: bool, lo: float, hi: float):
    """Value-1 intervals [(2k+1)H, (2k+2)H) (shifted by H/2 conjugated) meeting [lo, hi]."""
    h = math.ldexp(1.0, -exponent)
    shift = 0.5 * h if conjugate else 0.0
    k_lo = math.floor((lo - shift) / (2.0 * h)) - 1
    k_hi = math.ceil((hi - shift) / (2.0 * h)) + 1
    for k in range(k_lo, k_hi + 1):
        yield (2 * k + 1) * h + shift, (2 * k + 2) * h + shift


def phi_of(wave: RefinementWave, x: float, sigma: float) -> float:
    """Phi_w(x) = E[w(X)] for X ~ N(x, sigma^2); absolute error <= 1e-12."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    lo, hi = x - 10.0 * sigma, x + 10.0 * sigma
    # When thousands of periods fit in the window every Fourier component of
    # the wave is annihilated by the Gaussian and Phi is 1/2 to far below
    # double precision.
    if 20.0 * sigma / (2.0 * wave.half_period) > 50_000:
        return 0.5
    total = _TAIL  # both tails contribute wave-average 1/2 each
    for a, b in _one_intervals(wave.exponent, wave.conjugate, lo, hi):
        aa, bb = max(a, lo), min(b, hi)
        if bb > aa:
            total += float(ndtr((bb - x) / sigma) - ndtr((aa - x) / sigma))
    return total


def phi_vec(x: np.ndarray, exponent: int, conjugate: bool, sigma: float) -> np.ndarray:
    """Vectorized phi_of for a common wave and sigma."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        return np.zeros_like(x)
    lo = float(np.min(x)) - 10.0 * sigma
    hi = float(np.max(x)) + 10.0 * sigma
    total = np.full(x.shape, _TAIL)
    wlo, whi = x - 10.0 * sigma, x + 10.0 * sigma
    for a, b in _one_intervals(exponent, conjugate, lo, hi):
        aa = np.maximum(a, wlo)
        bb = np.minimum(b, whi)
        mask = bb > aa
        if mask.any():
            contrib = ndtr((bb - x) / sigma) - ndtr((aa - x) / sigma)
            total += np.where(mask, contrib, 0.0)
    return total


PLAIN = "plain"
CONJUGATE = "conjugate"


def _window_candidates(lo: float, hi: float, sigma: float):
    """Integer window centers c (in units of u = 2^-(e+1)) covering [lo, hi].

    Even c are plain windows [(c - 3/4)u, (c + 3/4)u], odd c conjugate ones.
    """
    u = math.ldexp(1.0, -(wave_exponent(sigma) + 1))
    a = math.ceil(hi / u - 0.75)
    b = math.floor(lo / u + 0.75)
    return a, b


def alignment_case(interval, sigma: float) -> str:
    """Classify which refinement wave is monotone over the localized interval.

    PLAIN if the interval fits [(2j - 3/4)u, (2j + 3/4)u] for some integer j
    (u = 2^-(e+1), e the wave exponent), CONJUGATE if it fits the half-period
    shifted window.  Fitting neither violates the protocol's localization
    guarantee and aborts the decode.
    """
    lo, hi = _interval_bounds(interval)
    a, b = _window_candidates(lo, hi, sigma)
    if a > b:
        raise ProtocolInvariantViolation(
            f"interval [{lo}, {hi}] fits neither alignment window at sigma={sigma}"
        )
    first_even = a if a % 2 == 0 else a + 1
    if first_even <= b:
        return PLAIN
    return CONJUGATE  # some odd center exists since [a, b] is nonempty


def alignment_vec(lo: np.ndarray, hi: np.ndarray, sigma: float) -> np.ndarray:
    """Vectorized alignment: 0 plain, 1 conjugate, -1 no window fits."""
    u = math.ldexp(1.0, -(wave_exponent(sigma) + 1))
    a = np.ceil(hi / u - 0.75)
    b = np.floor(lo / u + 0.75)
    has_any = a <= b
    first_even = np.where(np.mod(a, 2.0) == 0.0, a, a + 1.0)
    out = np.full(lo.shape, -1, dtype=np.int8)
    out[has_any & (first_even <= b)] = 0
    out[has_any & (first_even > b)] = 1
    return out


def _interval_bounds(interval):
    if hasattr(interval, "lower"):
        return float(interval.lower), float(interval.upper)
    lo, hi = interval
    return float(lo), float(hi)


_GRID_POINTS = 17


@dataclass(frozen=True)
class MonotoneBranch:
    """Phi_w restricted to an interval where it is monotone, ready to invert."""

    lower: float
    upper: float
    wave: RefinementWave
    sigma: float
    lo_value: float
    hi_value: float
    direction: int  # +1 increasing, -1 decreasing, 0 flat at double precision


def build_branch(interval, wave: RefinementWave, sigma: float) -> MonotoneBranch:
    """Construct a branch, checking monotonicity on a 17-point grid.

    Strict monotonicity holds in exact arithmetic on any aligned window; in
    float64 the tails of Phi saturate, so ties are tolerated and only an
    actual rise-and-fall is a violation.
    """
    lo, hi = _interval_bounds(interval)
    if not lo < hi:
        raise ValueError("branch interval must have positive width")
    grid = np.linspace(lo, hi, _GRID_POINTS)
    vals = phi_vec(grid, wave.exponent, wave.conjugate, sigma)
    d = np.diff(vals)
    if (d > 0).any() and (d < 0).any():
        raise ProtocolInvariantViolation(
            f"Phi not monotone on [{lo}, {hi}] for wave {wave}"
        )
    f_lo, f_hi = float(vals[0]), float(vals[-1])
    direction = 0 if f_lo == f_hi else (1 if f_hi > f_lo else -1)
    return MonotoneBranch(
        lower=lo,
        upper=hi,
        wave=wave,
        sigma=sigma,
        lo_value=min(f_lo, f_hi),
        hi_value=max(f_lo, f_hi),
        direction=direction,
    )


def invert_phi(branch: MonotoneBranch, y: float) -> float:
    """Preimage of truncate(y, lo_value, hi_value) under Phi_w on the branch.

    Bisection to absolute tolerance 1e-12 * max(sigma, branch width); values
    outside [lo_value, hi_value] map to the corresponding endpoint.  A branch
    that is flat at double precision carries no usable gradient and returns
    the branch midpoint.
    """
    if branch.direction == 0:
        return 0.5 * (branch.lower + branch.upper)
    yt = min(max(y, branch.lo_value), branch.hi_value)
    a, b = branch.lower, branch.upper
    tol = 1e-12 * max(branch.sigma, b - a)
    increasing = branch.direction > 0
    n = 0
    while (b - a) > tol and n < 200:
        mid = 0.5 * (a + b)
        fm = phi_of(branch.wave, mid, branch.sigma)
        go_right = (fm < yt) if increasing else (fm > yt)
        if go_right:
            a = mid
        else:
            b = mid
        n += 1
    return 0.5 * (a + b)


def invert_wave_vec(
    lo: np.ndarray,
    hi: np.ndarray,
    y: np.ndarray,
    exponent: int,
    conjugate: bool,
    sigma: float,
    iters: int = 60,
) -> np.ndarray:
    """Vectorized invert_phi over per-row intervals sharing one wave and sigma.

    Also enforces the 17-point monotonicity check on every row; returns the
    midpoint for rows whose branch is flat at double precision.
    """
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if lo.size == 0:
        return np.zeros_like(lo)
    grid = lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, _GRID_POINTS)
    vals = phi_vec(grid, exponent, conjugate, sigma)
    d = np.diff(vals, axis=1)
    bad = (d > 0).any(axis=1) & (d < 0).any(axis=1)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise ProtocolInvariantViolation(
            f"Phi not monotone on [{lo[i]}, {hi[i]}] (exponent={exponent}, "
            f"conjugate={conjugate}, sigma={sigma})"
        )
    f_lo, f_hi = vals[:, 0], vals[:, -1]
    flat = f_lo == f_hi
    yt = np.clip(y, np.minimum(f_lo, f_hi), np.maximum(f_lo, f_hi))
    increasing = f_hi >= f_lo
    a, b = lo.copy(), hi.copy()
    for _ in range(iters):
        mid = 0.5 * (a + b)
        fm = phi_vec(mid, exponent, conjugate, sigma)
        go_right = np.where(increasing, fm < yt, fm > yt)
        a = np.where(go_right, mid, a)
        b = np.where(go_right, b, mid)
    out = 0.5 * (a + b)
    return np.where(flat, 0.5 * (lo + hi), out)
