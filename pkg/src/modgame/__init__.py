"""Communication-constrained distributed Gaussian mean estimation.

A library and CLI implementing the MODGAME protocols (univariate and
multivariate), quantization and sample-mean baselines, minimax-rate
calculators, and a seeded Monte Carlo harness.
"""

from ._version import __version__
from .errors import ProtocolInvariantViolation, ProtocolViolation, ResolutionOverflow
from .gray import (
    ChangePointSet,
    DyadicInterval,
    change_points,
    conj_gray_bit,
    decode,
    dist_to_set,
    gray_bit,
    truncate,
)
from .refine import (
    MonotoneBranch,
    RefinementWave,
    alignment_case,
    build_branch,
    invert_phi,
    phi_of,
    wave_bit,
    wave_exponent,
)
from .protocol import (
    DecodeResult,
    ProtocolConfig,
    Transcript,
    UnivariatePlan,
    decode_central,
    encode_local,
    majority_vote,
    pack_transcript,
    plan_budget,
    unpack_transcript,
)
from .multi import (
    CoordinateBudgetMatrix,
    allocate_coordinate_budgets,
    decode_central_multi,
    effective_sample_size,
    encode_local_multi,
)
from .baselines import QuantizerSpec, quantize_decode, quantize_encode, sample_mean
from .rates import RatePhase, multivariate_rate, univariate_rate
from .harness import (
    ExperimentResult,
    ExperimentSpec,
    preset,
    run_experiment,
    run_preset,
    run_trial,
)

__all__ = [
    "__version__",
    "ChangePointSet", "DyadicInterval", "change_points", "conj_gray_bit",
    "decode", "dist_to_set", "gray_bit", "truncate",
    "MonotoneBranch", "RefinementWave", "alignment_case", "build_branch",
    "invert_phi", "phi_of", "wave_bit", "wave_exponent",
    "DecodeResult", "ProtocolConfig", "Transcript", "UnivariatePlan",
    "decode_central", "encode_local", "majority_vote", "pack_transcript",
    "plan_budget", "unpack_transcript",
    "CoordinateBudgetMatrix", "allocate_coordinate_budgets",
    "decode_central_multi", "effective_sample_size", "encode_local_multi",
    "QuantizerSpec", "quantize_decode", "quantize_encode", "sample_mean",
    "RatePhase", "multivariate_rate", "univariate_rate",
    "ExperimentResult", "ExperimentSpec", "preset", "run_experiment",
    "run_preset", "run_trial",
    "ProtocolInvariantViolation", "ProtocolViolation", "ResolutionOverflow",
]
