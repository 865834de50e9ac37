"""Semidefinite relaxations, witnesses and random-state studies for genuine
multipartite entanglement."""

from .hermitian import (
    Bipartition,
    DensityMatrix,
    HermitianOperator,
    SubsystemShape,
    enumerate_bipartitions,
    partial_transpose,
    positive_part,
    realign,
)
from .positive_maps import PositiveMapSpec, apply_map, apply_on_subsystem, choi_map, dual_map, generalized_choi, parse_map
from .relaxations import MixerConfig, membership_distance, mixer, per_cut_ppt_support, ppt_support
from .solver import SdpProblem, SdpSolution, Status, solve, verify_certificate

__version__ = "0.1.0"

__all__ = [
    "Bipartition",
    "DensityMatrix",
    "HermitianOperator",
    "MixerConfig",
    "PositiveMapSpec",
    "SdpProblem",
    "SdpSolution",
    "Status",
    "SubsystemShape",
    "apply_map",
    "apply_on_subsystem",
    "choi_map",
    "dual_map",
    "enumerate_bipartitions",
    "generalized_choi",
    "membership_distance",
    "mixer",
    "parse_map",
    "partial_transpose",
    "per_cut_ppt_support",
    "positive_part",
    "ppt_support",
    "realign",
    "solve",
    "verify_certificate",
]
