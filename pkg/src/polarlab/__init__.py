"""Polarization of binary processes with memory.

Library + CLI for studying how the polar transform reshapes the
conditional entropy of stationary finite-state sources observed through
noisy channels: exact small-block oracles, Monte-Carlo profile estimation
over a state trellis, mixing diagnostics, finite-block inequality
verification, and a source codec with side information.
"""

from .checks import (
    build_pair_tables,
    cross_block_mi_check,
    nostuck_check,
    supermartingale_check,
    surrogate_gap,
    z_recursion_check,
)
from .codec import (
    CodecReport,
    DecodeFailure,
    FrozenSet,
    compress,
    decompress,
    design_code,
    evaluate,
    parse_container,
)
from .entropy import (
    binary_convolve,
    fano_bound,
    h2,
    h2_inv,
    wilson_interval,
    xor_gain_bound,
    xor_gain_floor,
)
from .harness import (
    ExperimentConfig,
    PolarizationSummary,
    extract_subblock_prefixes,
    fano_check,
    guess_initial_state,
    run_check_suite,
    run_fastpolar,
    run_mixing,
    run_periodic,
    run_polarize,
    write_profile_csv,
)
from .oracle import (
    Profile,
    conditional_entropy_rate,
    enumerate_joint,
    exact_profile,
    periodic_identity_checks,
    periodic_window_identity,
    posterior_path,
    state_posterior_entropy,
    state_resolved_joint,
)
from .process import (
    EdgeKernel,
    compose_channel_with_input,
    entropy_rate_estimate,
    forward_prob,
    get_preset,
    load_process,
    make_gilbert_elliott,
    make_hidden_markov,
    make_iid,
    make_periodic_bb00,
    mixing_diagnostics,
    psi_k_bound,
    resolve_process,
    sample_path,
    sample_paths,
    save_process,
    stationary_distribution,
)
from .sctrellis import (
    SCEngine,
    active_backend,
    genie_posterior_batch,
    genie_profile_mc,
    sc_decode,
    sc_posteriors,
)
from .transform import (
    bit_reversal_perm,
    branch_path,
    child_indices,
    deinterleave,
    polar_encode,
    polar_inverse,
)

__version__ = "0.1.0"
