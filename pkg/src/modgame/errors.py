"""Exception types shared across the package."""


class ResolutionOverflow(ValueError):
    """A Gray index or decode resolution beyond the supported cap (48) was requested."""


class ProtocolViolation(ValueError):
    """Transcripts are structurally inconsistent with the plan (count, order, lengths)."""


class ProtocolInvariantViolation(RuntimeError):
    """Decoding reached a state the protocol guarantees impossible for honest inputs.

    Examples: the finer interval came out empty or disconnected, or the
    localized interval fits neither alignment window while the refinement
    wave is at its native resolution.  This aborts the decode.
    """
