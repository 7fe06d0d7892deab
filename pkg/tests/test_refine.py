import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from modgame.errors import ProtocolInvariantViolation
from modgame.refine import (
    CONJUGATE,
    PLAIN,
    RefinementWave,
    alignment_case,
    build_branch,
    floor_log2_inv,
    invert_phi,
    phi_of,
    phi_vec,
    wave_bit,
    wave_bits_vec,
    wave_exponent,
)


def quadrature_phi(wave, x, sigma):
    """Independent oracle: adaptive quadrature of the density over value-1 pieces.

    Integrates piecewise between consecutive wave transitions inside the
    +-10 sigma window, which keeps the integrand smooth for quad.
    """
    h = wave.half_period
    shift = 0.5 * h if wave.conjugate else 0.0
    lo, hi = x - 10 * sigma, x + 10 * sigma
    total = norm.cdf(-10.0)  # tails carry wave average 1/2 each
    k = math.floor((lo - shift) / h) - 1
    while (k * h + shift) < hi:
        a, b = k * h + shift, (k + 1) * h + shift
        if k % 2 == 1:  # value-1 piece
            aa, bb = max(a, lo), min(b, hi)
            if bb > aa:
                val, _ = quad(lambda t: norm.pdf(t, loc=x, scale=sigma), aa, bb,
                              epsabs=1e-13, limit=200)
                total += val
        k += 1
    return total


class TestWaveBit:
    @pytest.mark.parametrize(
        "conj,x,expected", [(False, 0.3, 0), (False, 0.6, 1), (True, 0.9, 1)]
    )
    def test_examples_e1(self, conj, x, expected):
        assert wave_bit(RefinementWave(1, conj), x) == expected

    def test_conjugate_is_half_period_shift(self):
        for e in (1, 2, 5):
            w = RefinementWave(e)
            wc = RefinementWave(e, conjugate=True)
            shift = math.ldexp(1.0, -(e + 1))
            for x in np.linspace(-1.3, 2.1, 173):
                assert wave_bit(wc, x) == wave_bit(w, x - shift)

    def test_vectorized_matches_scalar(self):
        xs = np.linspace(-0.5, 1.5, 201)
        for e, conj in ((1, False), (3, True)):
            vec = wave_bits_vec(xs, e, conj)
            ref = [wave_bit(RefinementWave(e, conj), float(x)) for x in xs]
            assert list(vec) == ref

    def test_exponent_bounds(self):
        with pytest.raises(ValueError):
            RefinementWave(0)
        with pytest.raises(ValueError):
            RefinementWave(49)


class TestWaveExponent:
    def test_native_above_2pow8(self):
        assert wave_exponent(2.0**-8) == 1
        assert wave_exponent(2.0**-13) == 6
        assert wave_exponent(2.0**-40) == 33

    def test_floored_at_one(self):
        assert wave_exponent(0.5) == 1
        assert wave_exponent(2.0**-7) == 1

    def test_floor_log2_inv_exact(self):
        assert floor_log2_inv(2.0**-8) == 8
        assert floor_log2_inv(0.75 * 2.0**-8) == 8
        assert floor_log2_inv(1.0) == 0
        assert floor_log2_inv(0.6) == 0


class TestPhi:
    def test_change_point_is_exactly_half(self):
        w = RefinementWave(1)
        assert phi_of(w, 0.5, 2.0**-8) == pytest.approx(0.5, abs=1e-12)

    def test_one_sigma_off_change_point(self):
        w = RefinementWave(1)
        val = phi_of(w, 0.5 + 2.0**-8, 2.0**-8)
        assert val == pytest.approx(0.841345, abs=1e-6)

    def test_deep_inside_one_region(self):
        w = RefinementWave(1)
        assert phi_of(w, 0.75, 2.0**-8) == pytest.approx(1.0, abs=1e-10)

    def test_bounds(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            e = int(rng.integers(1, 9))
            w = RefinementWave(e, bool(rng.integers(2)))
            v = phi_of(w, float(rng.uniform(-1, 2)), float(2.0 ** -rng.uniform(1, 13)))
            assert 0.0 <= v <= 1.0

    def test_quadrature_oracle_agreement(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            e = int(rng.integers(1, 7))
            w = RefinementWave(e, bool(rng.integers(2)))
            sigma = float(2.0 ** -rng.uniform(8, 13))
            x = float(rng.uniform(0, 1))
            assert phi_of(w, x, sigma) == pytest.approx(
                quadrature_phi(w, x, sigma), abs=1e-9
            )

    def test_translation_periodicity(self):
        w = RefinementWave(2)
        sigma = 2.0**-9
        period = 2.0 * w.half_period
        for x in np.linspace(0.1, 0.6, 23):
            assert phi_of(w, x + period, sigma) == pytest.approx(
                phi_of(w, x, sigma), abs=1e-10
            )

    def test_vectorized_matches_scalar(self):
        xs = np.linspace(0.0, 1.0, 57)
        sigma = 2.0**-9
        vec = phi_vec(xs, 2, True, sigma)
        for x, v in zip(xs, vec):
            assert v == pytest.approx(phi_of(RefinementWave(2, True), float(x), sigma),
                                      abs=1e-13)

    def test_rejects_bad_sigma(self):
        with pytest.raises(ValueError):
            phi_of(RefinementWave(1), 0.5, 0.0)

    def test_many_periods_saturates_to_half(self):
        assert phi_of(RefinementWave(48), 0.3, 1.0) == 0.5


class TestAlignment:
    def test_example_conjugate(self):
        assert alignment_case((0.23, 0.27), 2.0**-8) == CONJUGATE

    def test_example_point_at_half(self):
        assert alignment_case((0.5, 0.5), 2.0**-8) == PLAIN

    def test_too_wide_raises(self):
        with pytest.raises(ProtocolInvariantViolation):
            alignment_case((0.0, 1.0), 2.0**-8)

    def test_every_short_interval_fits_somewhere(self):
        sigma = 2.0**-8
        u = 2.0 ** -(wave_exponent(sigma) + 1)
        rng = np.random.default_rng(11)
        for _ in range(500):
            lo = float(rng.uniform(-0.1, 1.1))
            hi = lo + float(rng.uniform(0, 0.5 * u))
            assert alignment_case((lo, hi), sigma) in (PLAIN, CONJUGATE)


class TestInversion:
    def test_roundtrip_interior(self):
        sigma = 2.0**-8
        w = RefinementWave(1)
        branch = build_branch((0.5 - 2.0**-6, 0.5 + 2.0**-6), w, sigma)
        for x0 in np.linspace(0.5 - 3 * sigma, 0.5 + 3 * sigma, 11):
            y = phi_of(w, float(x0), sigma)
            assert invert_phi(branch, y) == pytest.approx(x0, abs=1e-10)

    def test_clamps_above_range(self):
        sigma = 2.0**-8
        w = RefinementWave(1)
        branch = build_branch((0.5 - 2.0**-6, 0.5 + 2.0**-6), w, sigma)
        x = invert_phi(branch, 1.5)
        # increasing through 0.5: hi_value at the right endpoint
        assert x == pytest.approx(branch.upper, abs=1e-9)

    def test_symmetric_midpoint(self):
        sigma = 2.0**-8
        w = RefinementWave(1)
        branch = build_branch((0.5 - 2.0**-6, 0.5 + 2.0**-6), w, sigma)
        assert invert_phi(branch, 0.5) == pytest.approx(0.5, abs=1e-10)

    def test_non_monotone_interval_rejected(self):
        # an interval spanning several wave periods rises and falls
        with pytest.raises(ProtocolInvariantViolation):
            build_branch((0.1, 0.9), RefinementWave(3), 2.0**-8)

    def test_flat_branch_returns_midpoint(self):
        # far from any transition both endpoint values saturate identically
        sigma = 2.0**-10
        branch = build_branch((0.25 - 2.0**-12, 0.25 + 2.0**-12), RefinementWave(1), sigma)
        assert branch.direction == 0
        assert invert_phi(branch, 0.3) == pytest.approx(0.25, abs=1e-12)
