"""State-aware successive-cancellation sweeps with interchangeable backends."""

from .engine import (
    DEFAULT_CHUNK_BYTES,
    HAVE_COMPILED,
    POSTERIOR_FLOOR,
    SCEngine,
    TrellisKernel,
    active_backend,
    genie_posterior_batch,
    genie_profile_mc,
    make_trellis,
    sc_decode,
    sc_posteriors,
    state_conditioned_start,
)
from .schedule import build_schedule

__all__ = [
    "DEFAULT_CHUNK_BYTES",
    "HAVE_COMPILED",
    "POSTERIOR_FLOOR",
    "SCEngine",
    "TrellisKernel",
    "active_backend",
    "build_schedule",
    "genie_posterior_batch",
    "genie_profile_mc",
    "make_trellis",
    "sc_decode",
    "sc_posteriors",
    "state_conditioned_start",
]
