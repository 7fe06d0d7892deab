import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modgame.errors import ResolutionOverflow
from modgame.gray import (
    ChangePointSet,
    DyadicInterval,
    change_points,
    conj_gray_bit,
    decode,
    dist_to_set,
    gray_bit,
    gray_to_cell,
    truncate,
)


def brute_force_decode(bits, grid_exp=12):
    """Reference oracle: scan a 2^-grid_exp grid and keep points matching all bits."""
    k = len(bits)
    step = 2.0**-grid_exp
    pts = [i * step for i in range(2**grid_exp + 1)]
    keep = [x for x in pts if all(gray_bit(j + 1, x) == bits[j] for j in range(k))]
    return min(keep), max(keep)


def scan_change_points(k, conjugate):
    """Reference oracle: value flips between adjacent half-cells of level k."""
    fn = conj_gray_bit if conjugate else gray_bit
    step = math.ldexp(1.0, -(k + 1))
    pts = []
    for j in range(1, 2 ** (k + 1)):
        left = fn(k, (j - 0.5) * step)
        right = fn(k, (j + 0.5) * step)
        if left != right:
            pts.append(j * step)
    return [p for p in pts if 0.0 < p < 1.0]


class TestTruncate:
    def test_clamp_below(self):
        assert truncate(-0.2, 0, 1) == 0

    def test_identity(self):
        assert truncate(0.4, 0, 1) == 0.4

    def test_clamp_above(self):
        assert truncate(0.9, 0.2, 0.5) == 0.5

    def test_invalid_interval(self):
        with pytest.raises(ValueError):
            truncate(0.5, 1.0, 0.0)


class TestGrayBits:
    @pytest.mark.parametrize(
        "k,x,expected",
        [(1, 0.3, 0), (2, 0.3, 1), (1, 1.0, 1), (-3, 0.7, 0), (0, 0.5, 0)],
    )
    def test_gray_examples(self, k, x, expected):
        assert gray_bit(k, x) == expected

    @pytest.mark.parametrize(
        "k,x,expected", [(2, 0.6, 1), (1, 0.3, 0), (2, 0.1, 0), (-1, 0.2, 0)]
    )
    def test_conjugate_examples(self, k, x, expected):
        assert conj_gray_bit(k, x) == expected

    def test_index_cap(self):
        with pytest.raises(ResolutionOverflow):
            gray_bit(49, 0.5)

    def test_clamps_outside_unit_interval(self):
        for k in range(1, 6):
            assert gray_bit(k, -3.0) == gray_bit(k, 0.0)
            assert gray_bit(k, 7.0) == gray_bit(k, 1.0)


class TestDecode:
    @pytest.mark.parametrize(
        "bits,lo,hi",
        [((0, 1, 1), 0.25, 0.375), ((0,), 0.0, 0.5), ((1, 1), 0.5, 0.75)],
    )
    def test_examples(self, bits, lo, hi):
        cell = decode(bits)
        assert (cell.lower, cell.upper) == (lo, hi)
        assert not cell.closed_upper

    def test_rightmost_cell_is_closed(self):
        cell = decode([1, 0])  # gray code of cell 3 at K=2 is (1, 0)
        assert cell.upper == 1.0 and cell.closed_upper
        assert cell.contains(1.0)

    @pytest.mark.parametrize("bits", [(0, 1, 1), (1, 0, 0, 1), (1,), (0, 0, 1, 1, 0)])
    def test_against_grid_scan_oracle(self, bits):
        cell = decode(bits)
        lo, hi = brute_force_decode(list(bits))
        assert cell.lower == lo
        assert cell.upper == pytest.approx(hi + 2.0**-12, abs=2.0**-12)
        assert cell.contains(lo) and cell.contains(hi)

    def test_bijectivity_small(self):
        for k in range(1, 9):
            cells = {decode(
                [(s >> (k - 1 - j)) & 1 for j in range(k)]).lower for s in range(2**k)}
            assert len(cells) == 2**k

    def test_adjacency_one_bit(self):
        # codes of adjacent dyadic cells differ in exactly one position
        for k in range(1, 11):
            codes = {}
            for s in range(2**k):
                x = (s + 0.5) * 2.0**-k
                codes[s] = tuple(gray_bit(j, x) for j in range(1, k + 1))
            for s in range(2**k - 1):
                diff = sum(a != b for a, b in zip(codes[s], codes[s + 1]))
                assert diff == 1

    def test_gray_to_cell_matches_bit_evaluation(self):
        for k in range(1, 10):
            for s in range(2**k):
                x = (s + 0.5) * 2.0**-k
                bits = [gray_bit(j, x) for j in range(1, k + 1)]
                assert gray_to_cell(bits) == s

    def test_empty_bits_rejected(self):
        with pytest.raises(ValueError):
            decode([])

    def test_resolution_cap(self):
        with pytest.raises(ResolutionOverflow):
            decode([0] * 49)


class TestChangePoints:
    def test_examples(self):
        assert list(change_points(1)) == [0.5]
        assert list(change_points(2)) == [0.25, 0.75]
        assert list(change_points(3, conjugate=True)) == [0.25, 0.5, 0.75]

    def test_conjugate_k1_empty(self):
        assert len(change_points(1, conjugate=True)) == 0

    @pytest.mark.parametrize("k", range(1, 11))
    @pytest.mark.parametrize("conjugate", [False, True])
    def test_against_scan_oracle(self, k, conjugate):
        assert list(change_points(k, conjugate)) == scan_change_points(k, conjugate)

    def test_lattice_property(self):
        # conjugate set at k+1 is the union of plain sets 1..k; plain sets disjoint
        for k in range(1, 12):
            union = set()
            for i in range(1, k + 1):
                pts = set(change_points(i).points)
                assert not (union & pts)
                union |= pts
            assert set(change_points(k + 1, conjugate=True).points) == union

    def test_cap(self):
        with pytest.raises(ResolutionOverflow):
            change_points(49)


class TestDistToSet:
    def test_point_set(self):
        assert dist_to_set(0.3, ChangePointSet((0.5,))) == pytest.approx(0.2)

    def test_interval_distance(self):
        cell = decode([0, 1, 1])  # [0.25, 0.375)
        assert dist_to_set(0.5, cell) == pytest.approx(0.125)
        assert dist_to_set(0.3, cell) == 0.0

    def test_empty_set_rejected(self):
        with pytest.raises(ValueError):
            dist_to_set(0.5, ())


@given(st.integers(min_value=0, max_value=2**20 - 1), st.integers(min_value=1, max_value=10))
def test_roundtrip_interior_points(frac, k):
    # x on a fine grid with a half-step offset never hits a dyadic point
    x = (frac + 0.5) * 2.0**-20
    bits = [gray_bit(j, x) for j in range(1, k + 1)]
    cell = decode(bits)
    assert cell.contains(x)


@settings(max_examples=200)
@given(st.floats(min_value=0.0, max_value=1.0, allow_nan=False), st.integers(1, 10))
def test_robustness_when_clear_of_change_points(x, k_max):
    # if x is > 2^-(K+2) from every change point of g_1..g_K, its own code
    # decodes to a cell within 2^-(K+2) of x
    margin = 2.0 ** -(k_max + 2)
    for k in range(1, k_max + 1):
        if dist_to_set(x, change_points(k)) <= margin:
            return
    bits = [gray_bit(k, x) for k in range(1, k_max + 1)]
    assert dist_to_set(x, decode(bits)) <= margin


def test_stretch_records_amount():
    cell = decode([0, 1])
    wide = cell.stretched(0.125)
    assert wide.stretch == 0.125
    assert wide.lower == cell.lower - 0.125
    assert wide.upper == cell.upper + 0.125


def test_interval_rejects_inverted_bounds():
    with pytest.raises(ValueError):
        DyadicInterval(0.5, 0.25, resolution=2)
