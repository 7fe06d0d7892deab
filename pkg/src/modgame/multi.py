"""Multivariate protocol: split budgets across coordinates, run per-coordinate decoders.

Budgets are assigned by writing 1..d repeatedly and slicing that sequence
into runs of lengths b_1 <= ... <= b_m (machines are stably sorted first);
the count of coordinate k inside run i is machine i's budget for coordinate
k.  Each coordinate is then an independent univariate problem over the
machines that received at least one bit for it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ProtocolViolation
from .protocol import (
    ProtocolConfig,
    Transcript,
    UnivariatePlan,
    decode_central,
    encode_local,
    plan_budget,
)


@dataclass(frozen=True)
class CoordinateBudgetMatrix:
    """Per-(machine, coordinate) bit counts, in sorted-machine order.

    ``machine_permutation[p]`` is the original (0-based) index of the machine
    at sorted position p; callers address machines by original index and the
    matrix translates.
    """

    entries: tuple  # entries[p][k], sorted-machine-major
    machine_permutation: tuple
    dimension: int

    @property
    def machines(self) -> int:
        return len(self.entries)

    def sorted_position(self, original_index: int) -> int:
        return self.machine_permutation.index(original_index)


def allocate_coordinate_budgets(budgets, d: int) -> CoordinateBudgetMatrix:
    """Slice the repeating sequence 1..d into budget-length runs and count.

    The result is cross-checked against the closed form
    b_i^(k) = floor((S_i - k)/d) - floor((S_{i-1} - k)/d) with S_i the
    cumulative sorted budgets.
    """
    budgets = [int(b) for b in budgets]
    if not budgets or any(b < 1 for b in budgets):
        raise ValueError("budgets must be a nonempty list of integers >= 1")
    if d < 1:
        raise ValueError("dimension must be >= 1")
    order = sorted(range(len(budgets)), key=lambda i: (budgets[i], i))
    rows = []
    t = 0
    for p in order:
        b = budgets[p]
        counts = [0] * d
        for off in range(b):
            counts[(t + off) % d] += 1
        rows.append(tuple(counts))
        t += b
    # closed-form verification
    s = 0
    for i, p in enumerate(order):
        s_prev, s = s, s + budgets[p]
        for k in range(1, d + 1):
            expect = (s - k) // d - (s_prev - k) // d
            if rows[i][k - 1] != expect:
                raise AssertionError("slicing disagrees with the closed form")
    return CoordinateBudgetMatrix(
        entries=tuple(rows), machine_permutation=tuple(order), dimension=d
    )


def effective_sample_size(budgets, d: int) -> float:
    """m' = (1/d) * sum_i min(b_i, d)."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return sum(min(int(b), d) for b in budgets) / d


def coordinate_subproblem(matrix: CoordinateBudgetMatrix, k: int):
    """Sorted positions and budgets of the machines serving coordinate k (1-based)."""
    col = k - 1
    positions = [p for p in range(matrix.machines) if matrix.entries[p][col] > 0]
    budgets = tuple(matrix.entries[p][col] for p in positions)
    return positions, budgets


def coordinate_plan(
    matrix: CoordinateBudgetMatrix, config: ProtocolConfig, k: int
) -> UnivariatePlan:
    """Univariate plan for coordinate k; None when no machine has bits for it."""
    _, budgets = coordinate_subproblem(matrix, k)
    if not budgets:
        return None
    return plan_budget(ProtocolConfig(config.sigma, budgets, 1))


def encode_local_multi(
    matrix: CoordinateBudgetMatrix,
    config: ProtocolConfig,
    machine: int,
    x,
) -> Transcript:
    """Concatenate the machine's per-coordinate sub-transcripts in coordinate order."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    d = matrix.dimension
    if x.shape[0] != d:
        raise ValueError(f"expected a {d}-vector, got {x.shape[0]} entries")
    pos = matrix.sorted_position(machine - 1)
    bits = []
    for k in range(1, d + 1):
        if matrix.entries[pos][k - 1] == 0:
            continue
        positions, _ = coordinate_subproblem(matrix, k)
        plan = coordinate_plan(matrix, config, k)
        sub_index = positions.index(pos) + 1
        bits.extend(encode_local(plan, sub_index, float(x[k - 1])).bits)
    if len(bits) != config.budgets[machine - 1]:
        raise AssertionError("sub-transcripts do not fill the machine budget")
    return Transcript(machine_index=machine, bits=tuple(bits))


def decode_central_multi(matrix: CoordinateBudgetMatrix, config: ProtocolConfig, transcripts):
    """Split transcripts by coordinate, decode each coordinate, assemble the vector.

    Coordinates with zero total budget (possible only when B < d) get the
    minimax point 0.5.  Returns (estimate vector, per-coordinate DecodeResult
    or None).
    """
    d = matrix.dimension
    by_index = {}
    for t in transcripts:
        if t.machine_index in by_index:
            raise ProtocolViolation(f"duplicate transcript for machine {t.machine_index}")
        by_index[t.machine_index] = t
    if sorted(by_index) != list(range(1, config.machines + 1)):
        raise ProtocolViolation("expected exactly one transcript per machine")
    for i, b in enumerate(config.budgets):
        if len(by_index[i + 1].bits) != b:
            raise ProtocolViolation(
                f"machine {i + 1} sent {len(by_index[i + 1].bits)} bits, budget is {b}"
            )

    # slice each machine's payload into its per-coordinate pieces
    pieces = {}
    for p in range(matrix.machines):
        orig = matrix.machine_permutation[p]
        payload = by_index[orig + 1].bits
        off = 0
        for k in range(1, d + 1):
            b = matrix.entries[p][k - 1]
            if b:
                pieces[(p, k)] = payload[off : off + b]
                off += b

    estimates = np.full(d, 0.5)
    results = []
    for k in range(1, d + 1):
        positions, budgets = coordinate_subproblem(matrix, k)
        if not positions:
            results.append(None)
            continue
        plan = plan_budget(ProtocolConfig(config.sigma, budgets, 1))
        subs = [
            Transcript(machine_index=si + 1, bits=pieces[(p, k)])
            for si, p in enumerate(positions)
        ]
        res = decode_central(plan, subs)
        estimates[k - 1] = res.estimate
        results.append(res)
    return estimates, results
