"""Bit-metric decoders and complexity sweeps for BICMB with constellation precoding."""

from .channel import (SubchannelAssignment, decompose, generate_channel, subchannel_system,
                      transmit_and_receive)
from .coding import ConvCode, standard_code
from .config import SimConfig
from .counters import OpCounters
from .lattice import RealLatticeSystem, qr_paired, realify, zf_dfe
from .precoder import PrecoderConfig, vandermonde_precoder
from .qam import QamConstellation
from .sim import run_sweep
from .sphere import Mode, compute_precoded_metrics, sd_search

__version__ = "0.1.0"
