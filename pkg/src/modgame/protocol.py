"""Univariate MODGAME: budget planning, local encoding, central decoding.

A plan resolves the protocol case from (sigma, budgets) and assigns every
transcript bit a role:

* ``("crude", k)``   -- k-th Gray function of the machine's sample,
* ``("finer", j, v)`` -- v-th vote on the j-th finer localization function,
* ``("refine", conj, v)`` -- v-th vote on the (conjugate) refinement wave,
* ``("sign",)``      -- indicator {x >= 0} (the sigma >= 1 protocol),
* ``("pad",)``       -- zero filler (capped budgets, index overflow).

Encoding and decoding are implemented once, vectorized over replications
(shape ``(R, m)`` samples -> ``(R, total_bits)`` transcript bits); the
scalar public API runs the same code with R = 1.  All operations are
deterministic: the only randomness in the system lives in the data.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from . import gray
from .errors import ProtocolInvariantViolation, ProtocolViolation, ResolutionOverflow
from .gray import MAX_INDEX, cell_index_vec, gray_bits_vec
from .refine import (
    alignment_vec,
    floor_log2_inv,
    invert_wave_vec,
    wave_bits_vec,
    wave_exponent,
)

SIGMA_MIN = math.ldexp(1.0, -40)  # resolution cap, see gray.MAX_INDEX

LOCALIZE_ONLY = "LOCALIZE_ONLY"
TWO_STAGE = "TWO_STAGE"
BUDGET_CAPPED = "BUDGET_CAPPED"
ONE_BIT_SIGN = "ONE_BIT_SIGN"


@dataclass(frozen=True)
class ProtocolConfig:
    """One estimation instance: noise level, per-machine bit budgets, dimension."""

    sigma: float
    budgets: tuple
    dimension: int = 1

    def __post_init__(self):
        budgets = tuple(int(b) for b in self.budgets)
        object.__setattr__(self, "budgets", budgets)
        if not budgets:
            raise ValueError("at least one machine is required")
        if any(b < 1 for b in budgets):
            raise ValueError("every budget must be >= 1")
        if not (self.sigma > 0):
            raise ValueError("sigma must be positive")
        if self.sigma < SIGMA_MIN:
            raise ResolutionOverflow(
                f"sigma={self.sigma} below resolution cap 2^-40"
            )
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def machines(self) -> int:
        return len(self.budgets)

    @property
    def total_bits(self) -> int:
        return sum(self.budgets)


@dataclass(frozen=True)
class Transcript:
    """The exactly-b_i-bit message from one machine (1-based index)."""

    machine_index: int
    bits: tuple

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError("transcript bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)


def pack_transcript(t: Transcript) -> bytes:
    """Wire frame: u32 BE machine index, u16 BE bit length, MSB-first payload."""
    nbytes = (len(t.bits) + 7) // 8
    payload = bytearray(nbytes)
    for i, b in enumerate(t.bits):
        if b:
            payload[i // 8] |= 0x80 >> (i % 8)
    return struct.pack(">IH", t.machine_index, len(t.bits)) + bytes(payload)


def unpack_transcript(frame: bytes) -> Transcript:
    if len(frame) < 6:
        raise ProtocolViolation("frame shorter than its 6-byte header")
    idx, nbits = struct.unpack(">IH", frame[:6])
    nbytes = (nbits + 7) // 8
    if len(frame) != 6 + nbytes:
        raise ProtocolViolation(
            f"frame payload is {len(frame) - 6} bytes, expected {nbytes}"
        )
    bits = tuple(
        (frame[6 + i // 8] >> (7 - i % 8)) & 1 for i in range(nbits)
    )
    return Transcript(machine_index=idx, bits=bits)


def majority_vote(votes) -> int:
    """1 iff the vote sum is at least half the count (ties vote 1)."""
    votes = list(votes)
    if not votes:
        raise ValueError("majority vote over an empty list")
    return 1 if 2 * sum(votes) >= len(votes) else 0


def _two_stage_n(q: int) -> int:
    """Largest s with floor(log2 s)^2 + 2s <= q (q >= 2)."""
    s = 1
    while True:
        nxt = s + 1
        if nxt.bit_length() - 1 > 6 * 10:  # unreachable guard
            break
        if (nxt.bit_length() - 1) ** 2 + 2 * nxt <= q:
            s = nxt
        else:
            break
    return s


def cap_budgets(budgets, target: int):
    """Reduce budgets to sum exactly ``target`` with 1 <= b'_i <= b_i.

    Water-filling: cap everything at the largest feasible level t, then hand
    one extra bit to the first machines (original order) still above t.
    """
    budgets = list(budgets)
    if sum(budgets) <= target:
        return tuple(budgets)
    lo_t, hi_t = 1, max(budgets)
    while lo_t < hi_t:
        mid = (lo_t + hi_t + 1) // 2
        if sum(min(b, mid) for b in budgets) <= target:
            lo_t = mid
        else:
            hi_t = mid - 1
    t = lo_t
    capped = [min(b, t) for b in budgets]
    remainder = target - sum(capped)
    for i, b in enumerate(budgets):
        if remainder == 0:
            break
        if b > t:
            capped[i] += 1
            remainder -= 1
    return tuple(capped)


@dataclass(frozen=True)
class UnivariatePlan:
    """Resolved case plus the per-machine bit-role assignment."""

    config: ProtocolConfig
    case: str
    stage: str  # decode pipeline actually used
    effective_budgets: tuple
    crude_precision: int  # floor(log2(1/sigma)); 0 when sigma >= 1
    n: int  # refinement votes per wave (TWO_STAGE)
    log_n: int
    wave_exp: int
    roles: tuple  # roles[i] = tuple of role tuples for machine i+1
    # derived layout, built in __post_init__
    machine_offsets: tuple = field(default=(), compare=False)
    total_bits: int = field(default=0, compare=False)

    def __post_init__(self):
        offsets = []
        pos = 0
        for i, b in enumerate(self.config.budgets):
            if len(self.roles[i]) != b:
                raise AssertionError("role list does not fill the budget")
            offsets.append(pos)
            pos += b
        object.__setattr__(self, "machine_offsets", tuple(offsets))
        object.__setattr__(self, "total_bits", pos)
        object.__setattr__(self, "_layout", _PlanLayout(self))

    def machine_roles(self, machine: int):
        return self.roles[machine - 1]


class _PlanLayout:
    """Flat position indices per role group, for the vectorized paths."""

    def __init__(self, plan: UnivariatePlan):
        crude = {}  # gray index -> flat position
        finer = {}  # (j, v) -> flat position
        ref_plain = {}
        ref_conj = {}
        sign = []
        enc_groups = {"crude": [], "finer": [], "refine": [], "sign": [], "pad": []}
        pos = 0
        for i, roles in enumerate(plan.roles):
            for role in roles:
                tag = role[0]
                if tag == "crude":
                    crude[role[1]] = pos
                    enc_groups["crude"].append((pos, i, role[1]))
                elif tag == "finer":
                    finer[(role[1], role[2])] = pos
                    enc_groups["finer"].append((pos, i, role[1]))
                elif tag == "refine":
                    (ref_conj if role[1] else ref_plain)[role[2]] = pos
                    enc_groups["refine"].append((pos, i, 1 if role[1] else 0))
                elif tag == "sign":
                    sign.append(pos)
                    enc_groups["sign"].append((pos, i, 0))
                else:
                    enc_groups["pad"].append((pos, i, 0))
                pos += 1

        def as_arrays(rows):
            if not rows:
                return (np.empty(0, dtype=np.int64),) * 3
            a = np.asarray(rows, dtype=np.int64)
            return a[:, 0], a[:, 1], a[:, 2]

        self.enc = {k: as_arrays(v) for k, v in enc_groups.items()}
        n_crude = len(crude)
        if n_crude and sorted(crude) != list(range(1, n_crude + 1)):
            raise AssertionError("crude Gray indices are not the prefix 1..n")
        self.crude_positions = np.asarray(
            [crude[k] for k in range(1, n_crude + 1)], dtype=np.int64
        )
        L = plan.log_n
        if plan.stage == TWO_STAGE and L > 0:
            self.finer_positions = np.asarray(
                [[finer[(j, v)] for v in range(1, L + 1)] for j in range(1, L + 1)],
                dtype=np.int64,
            )
        else:
            self.finer_positions = np.empty((0, 0), dtype=np.int64)
        self.refine_plain = np.asarray(
            [ref_plain[v] for v in range(1, len(ref_plain) + 1)], dtype=np.int64
        )
        self.refine_conj = np.asarray(
            [ref_conj[v] for v in range(1, len(ref_conj) + 1)], dtype=np.int64
        )
        self.sign_positions = np.asarray(sign, dtype=np.int64)

        # finer function shape: (level, conjugate) for f_1..f_L
        self.finer_funcs = []
        if plan.stage == TWO_STAGE:
            E = plan.crude_precision
            for k in range(1, L + 1):
                if k <= 2:
                    self.finer_funcs.append((E - L - 2, k == 2))
                else:
                    self.finer_funcs.append((E - L - 4 + k, False))


def _finer_level(E: int, L: int, j: int):
    """Level and conjugacy of finer function f_j (f_1 plain, f_2 conjugate)."""
    if j <= 2:
        return E - L - 2, j == 2
    return E - L - 4 + j, False


def _localize_roles(config: ProtocolConfig, eff):
    roles = []
    s = 0
    for b_orig, b in zip(config.budgets, eff):
        mine = []
        for k in range(1, b + 1):
            idx = s + k
            mine.append(("crude", idx) if idx <= MAX_INDEX else ("pad",))
        mine.extend([("pad",)] * (b_orig - b))
        roles.append(tuple(mine))
        s += b
    return tuple(roles)


def _two_stage_roles(config: ProtocolConfig, eff, n: int, L: int):
    special = L * L + 2 * n
    roles = []
    s = 0
    for i0, (b_orig, b) in enumerate(zip(config.budgets, eff)):
        i = i0 + 1
        if i <= L * L:
            j = (i - 1) // L + 1
            tail = ("finer", j, i - (j - 1) * L)
        elif i <= L * L + n:
            tail = ("refine", False, i - L * L)
        elif i <= special:
            tail = ("refine", True, i - L * L - n)
        else:
            tail = None
        n_crude = b - 1 if tail is not None else b
        mine = []
        for k in range(1, n_crude + 1):
            idx = s + k
            mine.append(("crude", idx) if idx <= MAX_INDEX else ("pad",))
        if tail is not None:
            mine.append(tail)
        mine.extend([("pad",)] * (b_orig - b))
        roles.append(tuple(mine))
        s += n_crude
    return tuple(roles)


def plan_budget(config: ProtocolConfig) -> UnivariatePlan:
    """Resolve the protocol case and assign bit roles.

    sigma >= 1: one sign bit per machine.  sigma < 1 with E = floor(log2(1/sigma)):
    B < E + 2 localizes only; E + 2 <= B <= E + m runs the two-stage protocol;
    B > E + m caps the budgets at E + m bits first (surplus is zero padding).
    """
    if config.dimension != 1:
        raise ValueError("plan_budget handles dimension 1; see the multi module")
    m = config.machines
    if config.sigma >= 1.0:
        roles = tuple(
            (("sign",),) + (("pad",),) * (b - 1) for b in config.budgets
        )
        return UnivariatePlan(
            config=config,
            case=ONE_BIT_SIGN,
            stage=ONE_BIT_SIGN,
            effective_budgets=(1,) * m,
            crude_precision=0,
            n=0,
            log_n=0,
            wave_exp=1,
            roles=roles,
        )

    E = floor_log2_inv(config.sigma)
    B = config.total_bits
    if B < E + 2:
        return UnivariatePlan(
            config=config,
            case=LOCALIZE_ONLY,
            stage=LOCALIZE_ONLY,
            effective_budgets=config.budgets,
            crude_precision=E,
            n=0,
            log_n=0,
            wave_exp=wave_exponent(config.sigma),
            roles=_localize_roles(config, config.budgets),
        )

    if B <= E + m:
        case = TWO_STAGE
        eff = config.budgets
    else:
        case = BUDGET_CAPPED
        eff = cap_budgets(config.budgets, E + m)

    b_eff = sum(eff)
    if b_eff < E + 2:  # capped single machine: falls back to pure localization
        return UnivariatePlan(
            config=config,
            case=case,
            stage=LOCALIZE_ONLY,
            effective_budgets=eff,
            crude_precision=E,
            n=0,
            log_n=0,
            wave_exp=wave_exponent(config.sigma),
            roles=_localize_roles(config, eff),
        )

    n = _two_stage_n(b_eff - E)
    L = n.bit_length() - 1
    return UnivariatePlan(
        config=config,
        case=case,
        stage=TWO_STAGE,
        effective_budgets=eff,
        crude_precision=E,
        n=n,
        log_n=L,
        wave_exp=wave_exponent(config.sigma),
        roles=_two_stage_roles(config, eff, n, L),
    )


# ---------------------------------------------------------------------------
# encoding


def encode_batch(plan: UnivariatePlan, x: np.ndarray) -> np.ndarray:
    """Encode samples (R, m) into transcript bits (R, total_bits)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != plan.config.machines:
        raise ValueError(f"expected samples of shape (R, {plan.config.machines})")
    layout = plan._layout
    bits = np.zeros((x.shape[0], plan.total_bits), dtype=np.uint8)

    pos, mach, k = layout.enc["crude"]
    if pos.size:
        t = x[:, mach]
        np.clip(t, 0.0, 1.0, out=t)
        np.ldexp(t, k, out=t)
        np.floor(t, out=t)
        np.mod(t, 4.0, out=t)
        bits[:, pos] = (t == 1.0) | (t == 2.0)

    pos, mach, j = layout.enc["finer"]
    if pos.size:
        E, L = plan.crude_precision, plan.log_n
        levels = np.empty(j.shape, dtype=np.int64)
        conj = np.empty(j.shape, dtype=bool)
        for idx, jj in enumerate(j):
            levels[idx], conj[idx] = _finer_level(E, L, int(jj))
        neg = levels < 0
        r = np.floor(np.ldexp(np.clip(x[:, mach], 0.0, 1.0), np.maximum(levels, 0))) % 4.0
        vals = np.where(conj, r >= 2.0, (r == 1.0) | (r == 2.0))
        vals[:, neg] = False  # negative-index Gray functions are identically 0
        bits[:, pos] = vals.astype(np.uint8)

    pos, mach, conj = layout.enc["refine"]
    if pos.size:
        t = x[:, mach]
        np.ldexp(t, plan.wave_exp, out=t)
        t -= 0.5 * conj
        np.floor(t, out=t)
        np.mod(t, 2.0, out=t)
        bits[:, pos] = t

    pos, mach, _ = layout.enc["sign"]
    if pos.size:
        bits[:, pos] = (x[:, mach] >= 0.0).astype(np.uint8)

    return bits


def encode_local(plan: UnivariatePlan, machine: int, x: float) -> Transcript:
    """Deterministically evaluate machine's assigned roles at its sample."""
    if not 1 <= machine <= plan.config.machines:
        raise ValueError(f"machine index {machine} out of range")
    E, L = plan.crude_precision, plan.log_n
    out = []
    for role in plan.machine_roles(machine):
        tag = role[0]
        if tag == "crude":
            out.append(gray.gray_bit(role[1], x))
        elif tag == "finer":
            level, conj = _finer_level(E, L, role[1])
            out.append(
                gray.conj_gray_bit(level, x) if conj else gray.gray_bit(level, x)
            )
        elif tag == "refine":
            t = math.ldexp(x, plan.wave_exp) - (0.5 if role[1] else 0.0)
            out.append(int(math.floor(t)) % 2)
        elif tag == "sign":
            out.append(1 if x >= 0.0 else 0)
        else:
            out.append(0)
    return Transcript(machine_index=machine, bits=tuple(out))


# ---------------------------------------------------------------------------
# decoding


@dataclass(frozen=True)
class DecodeResult:
    """Estimate plus decode diagnostics (case, intervals, branch used)."""

    estimate: float
    case: str
    stage: str
    i1: tuple = None
    i1_core: tuple = None
    i2: tuple = None
    i2_core: tuple = None
    branch: str = None


_BRANCH_NAMES = {0: "plain", 1: "conjugate", 2: "degenerate"}


def _restrict_region(lo, hi, level, conjugate, want):
    """Intersect per-row regions [lo, hi] with {x : gray_level(x) = want}.

    Cells outside [0, 1] are fused into single virtual cells (the Gray
    functions clamp, so all x < 0 share cell 0's value and all x > 1 share
    the value at 1).  The result of each restriction is a single contiguous
    run of cells; an empty or split run violates the protocol invariants.
    """
    w = math.ldexp(1.0, -level)
    n_real = float(1 << level)
    c0 = np.maximum(np.floor(np.ldexp(lo, level)), 0.0)
    c1 = np.minimum(np.ceil(np.ldexp(hi, level)) - 1.0, n_real - 1.0)
    mid_count = 6
    cand = np.empty((lo.shape[0], mid_count + 2))
    cand[:, 0] = -1.0
    cand[:, 1 : mid_count + 1] = c0[:, None] + np.arange(mid_count)
    cand[:, -1] = n_real
    valid = np.ones_like(cand, dtype=bool)
    valid[:, 0] = lo < 0.0
    valid[:, 1 : mid_count + 1] = cand[:, 1 : mid_count + 1] <= c1[:, None]
    valid[:, -1] = hi > 1.0
    if np.any(valid[:, mid_count] & (c0 + mid_count - 1 < c1)):
        raise AssertionError("cell walk exceeded its candidate capacity")
    mids = (cand + 0.5) * w
    r = np.floor(np.ldexp(np.clip(mids, 0.0, 1.0), level)) % 4.0
    vals = (r >= 2.0) if conjugate else ((r == 1.0) | (r == 2.0))
    match = valid & (vals == want[:, None].astype(bool))
    if (~match.any(axis=1)).any():
        raise ProtocolInvariantViolation(
            "finer interval is empty: votes selected a region outside [0, 1]"
        )
    first = match.argmax(axis=1)
    last = match.shape[1] - 1 - match[:, ::-1].argmax(axis=1)
    # spatial contiguity: no valid-but-unmatched slot between the run ends
    # (invalid slots cover no ground, e.g. fillers before the virtual top cell)
    slots = np.arange(match.shape[1])
    between = (slots[None, :] > first[:, None]) & (slots[None, :] < last[:, None])
    if (between & valid & ~match).any():
        raise ProtocolInvariantViolation("finer interval is not contiguous")
    rows = np.arange(match.shape[0])
    start_cell = cand[rows, first]
    end_cell = cand[rows, last]
    new_lo = np.where(start_cell < 0.0, lo, np.maximum(lo, start_cell * w))
    new_hi = np.where(end_cell >= n_real, hi, np.minimum(hi, (end_cell + 1.0) * w))
    return new_lo, new_hi


def decode_batch(plan: UnivariatePlan, bits: np.ndarray):
    """Decode transcript bits (R, total_bits); returns (estimates, diagnostics).

    Diagnostics is a dict of per-row arrays: i1lo/i1hi, i2lo/i2hi (stretched
    intervals), i1clo/i1chi, i2clo/i2chi (their cores), and branch codes
    (0 plain, 1 conjugate, 2 degenerate, -1 not applicable).
    """
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim != 2 or bits.shape[1] != plan.total_bits:
        raise ProtocolViolation(
            f"expected a (R, {plan.total_bits}) bit matrix, got {bits.shape}"
        )
    R = bits.shape[0]
    layout = plan._layout
    diag = {
        "branch": np.full(R, -1, dtype=np.int8),
        "i1lo": np.zeros(R), "i1hi": np.ones(R),
        "i1clo": np.zeros(R), "i1chi": np.ones(R),
        "i2lo": np.zeros(R), "i2hi": np.ones(R),
        "i2clo": np.zeros(R), "i2chi": np.ones(R),
    }

    if plan.stage == ONE_BIT_SIGN:
        mean = bits[:, layout.sign_positions].mean(axis=1)
        est = np.clip(plan.config.sigma * ndtri(mean), 0.0, 1.0)
        return est, diag

    if plan.stage == LOCALIZE_ONLY:
        k = layout.crude_positions.size
        cells = cell_index_vec(bits[:, layout.crude_positions])
        lo = np.ldexp(cells.astype(np.float64), -k)
        hi = np.ldexp(cells.astype(np.float64) + 1.0, -k)
        for key, v in (("i1lo", lo), ("i1hi", hi), ("i2lo", lo), ("i2hi", hi),
                       ("i1clo", lo), ("i1chi", hi), ("i2clo", lo), ("i2chi", hi)):
            diag[key] = v
        return lo.copy(), diag

    # TWO_STAGE
    E, L, n = plan.crude_precision, plan.log_n, plan.n
    p = E - L
    sigma = plan.config.sigma

    if p >= 4:
        k1 = p - 3
        cells = cell_index_vec(bits[:, layout.crude_positions[:k1]]).astype(np.float64)
        i1clo = np.ldexp(cells, -k1)
        i1chi = np.ldexp(cells + 1.0, -k1)
        st1 = math.ldexp(1.0, -(p - 2))
        i1lo, i1hi = i1clo - st1, i1chi + st1
    else:
        i1clo, i1chi = np.zeros(R), np.ones(R)
        i1lo, i1hi = i1clo.copy(), i1chi.copy()

    if L > 0:
        w = bits[:, layout.finer_positions.reshape(-1)].reshape(R, L, L)
        votes = (2 * w.sum(axis=2, dtype=np.int64) >= L).astype(np.uint8)
    else:
        votes = np.empty((R, 0), dtype=np.uint8)

    if p <= 3 and E <= 4:
        i2clo, i2chi = np.zeros(R), np.ones(R)
    elif p <= 3:
        # The printed vote range W_{L-E+5}..W_L pairs each decode slot j with
        # the finer function of plain Gray index j, except at L = E - 3 where
        # slot 1 would land on the conjugate f_2; the plain function with the
        # same index there is f_1.
        src = []
        for j in range(1, E - 4 + 1):
            k = j + L - E + 4
            src.append(0 if k == 2 else k - 1)
        cells = cell_index_vec(votes[:, src]).astype(np.float64)
        k2 = E - 4
        i2clo = np.ldexp(cells, -k2)
        i2chi = np.ldexp(cells + 1.0, -k2)
    else:
        lo, hi = i1lo.copy(), i1hi.copy()
        for j in range(1, L + 1):
            level, conj = _finer_level(E, L, j)
            lo, hi = _restrict_region(lo, hi, level, conj, votes[:, j - 1])
        i2clo, i2chi = lo, hi

    st2 = math.ldexp(1.0, -(E - 3))
    i2lo, i2hi = i2clo - st2, i2chi + st2

    align = alignment_vec(i2lo, i2hi, sigma)
    if (align < 0).any():
        if E - 7 >= 1:
            i = int(np.flatnonzero(align < 0)[0])
            raise ProtocolInvariantViolation(
                f"interval [{i2lo[i]}, {i2hi[i]}] fits neither alignment window"
            )
        # sigma > 2^-8: the wave exponent is floored at 1 and the localized
        # interval can outgrow the monotone windows; the refinement votes
        # carry no invertible signal there, so fall back to the midpoint.
        align = align.copy()

    est = np.empty(R)
    e = plan.wave_exp
    for code, positions, conj in (
        (0, layout.refine_plain, False),
        (1, layout.refine_conj, True),
    ):
        rows = np.flatnonzero(align == code)
        if rows.size:
            y = bits[np.ix_(rows, positions)].mean(axis=1)
            est[rows] = invert_wave_vec(
                i2lo[rows], i2hi[rows], y, e, conj, sigma
            )
    deg = np.flatnonzero(align < 0)
    if deg.size:
        lo_c = np.maximum(i2lo[deg], 0.0)
        hi_c = np.minimum(i2hi[deg], 1.0)
        est[deg] = 0.5 * (lo_c + hi_c)

    diag["branch"] = np.where(align < 0, np.int8(2), align).astype(np.int8)
    diag.update(
        i1lo=i1lo, i1hi=i1hi, i1clo=i1clo, i1chi=i1chi,
        i2lo=i2lo, i2hi=i2hi, i2clo=i2clo, i2chi=i2chi,
    )
    return np.clip(est, 0.0, 1.0), diag


def transcripts_to_bits(plan: UnivariatePlan, transcripts) -> np.ndarray:
    """Validate a full transcript set against the plan and flatten it."""
    m = plan.config.machines
    by_index = {}
    for t in transcripts:
        if t.machine_index in by_index:
            raise ProtocolViolation(f"duplicate transcript for machine {t.machine_index}")
        by_index[t.machine_index] = t
    if sorted(by_index) != list(range(1, m + 1)):
        raise ProtocolViolation(
            f"expected one transcript per machine 1..{m}, got {sorted(by_index)}"
        )
    flat = np.zeros((1, plan.total_bits), dtype=np.uint8)
    for i in range(1, m + 1):
        t = by_index[i]
        b = plan.config.budgets[i - 1]
        if len(t.bits) != b:
            raise ProtocolViolation(
                f"machine {i} sent {len(t.bits)} bits, budget is {b}"
            )
        off = plan.machine_offsets[i - 1]
        flat[0, off : off + b] = t.bits
    return flat


def decode_central(plan: UnivariatePlan, transcripts) -> DecodeResult:
    """Run the central decoder over a complete transcript set."""
    flat = transcripts_to_bits(plan, transcripts)
    est, diag = decode_batch(plan, flat)
    branch_code = int(diag["branch"][0])
    return DecodeResult(
        estimate=float(est[0]),
        case=plan.case,
        stage=plan.stage,
        i1=(float(diag["i1lo"][0]), float(diag["i1hi"][0])),
        i1_core=(float(diag["i1clo"][0]), float(diag["i1chi"][0])),
        i2=(float(diag["i2lo"][0]), float(diag["i2hi"][0])),
        i2_core=(float(diag["i2clo"][0]), float(diag["i2chi"][0])),
        branch=_BRANCH_NAMES.get(branch_code),
    )
