"""Thermal spin-cluster models for measurement-based quantum computation."""

from .model_blocks import BlockSpec, build_block, exact_spectrum_oracle, ground_state
from .lattice import LatticeAdjacency, build_chain, build_lattice, build_pair, build_single
from .thermal_channel import (
    EC_THRESHOLD,
    ErrorRates,
    error_rates,
    gibbs_block,
    post_povm_state,
    temperature_sweep,
    threshold_temperature,
    twirl_and_extract,
)
from .fusion import collapse_check, exact_cluster_fidelity, reduce_to_cluster
from .dynamics import build_schedule, evolve_and_verify, revival_check

__version__ = "0.1.0"
