"""Simulator for direct measurement of a polarization density matrix with weak pointer couplings."""

from .noise import NoiseModel
from .pointer import ExpectationSet, PointerConfig, expectation_set
from .reconstruction import direct_element, direct_matrix, operator_weak_average, qst_reconstruct
from .states import density_from_pure, projector, purity, trace_distance

__all__ = [
    "ExpectationSet",
    "NoiseModel",
    "PointerConfig",
    "density_from_pure",
    "direct_element",
    "direct_matrix",
    "expectation_set",
    "operator_weak_average",
    "projector",
    "purity",
    "qst_reconstruct",
    "trace_distance",
]

__version__ = "0.1.0"
