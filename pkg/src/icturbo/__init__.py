"""Information-coupled turbo codes over AWGN: construction, decoding,
EXIT-chart thresholds, and a Monte Carlo simulation harness."""

__version__ = "0.1.0"

from .channel import AwgnChannel, ChannelConfig, llr_mutual_information, snr_db_to_sigma_tilde
from .coupling import (
    CodeParameters,
    build_layouts,
    build_transmission_plan,
    effective_code_rate,
    reassemble,
    route_channel_llrs,
    segment_and_couple,
    select_transmitted_bits,
    solve_code_parameters,
)
from .crc import CRC24A, CRC24B, crc24_attach, crc24_check, crc24_compute
from .decoders import complexity_report, ff_fb_decode, intra_cb_decode, wd_decode
from .exit_chart import (
    MotherExitFamily,
    decoding_threshold,
    exit_ic,
    exit_rep,
    ic_threshold,
    j_function,
    j_inverse,
    lte_threshold,
    tunnel_open,
)
from .rate_matching import apply_repetition, chase_combine, repetition_profile
from .turbo import (
    LLR_SAT,
    LlrFrame,
    TurboCodeword,
    bcjr_decode,
    qpp_interleaver,
    turbo_decode,
    turbo_encode,
)
