"""Continuous-variable teleportation of one particle and of an entangled pair.

Two engines share one set of conventions (``x = (a + a^dag)/2``, vacuum
variance 1/4): a lattice wavefunction engine and a Gaussian covariance engine.
"""
from .bases import check_basis, demonstrate_triple_basis_failure
from .gaussian import GaussianState, LinearForm, epr_pair, ghz_triplet, verify_identity
from .grid import Grid, WaveFunction, make_grid
from .metrics import fidelity, quadrature_variance, schmidt_entropy
from .protocols import heisenberg_entangled, teleport_entangled, teleport_single, verify_output_correlations
from .resources import IDEAL, InputSpec, ResourceQuality

__all__ = [
    "Grid", "WaveFunction", "make_grid", "GaussianState", "LinearForm", "epr_pair", "ghz_triplet",
    "verify_identity", "InputSpec", "ResourceQuality", "IDEAL", "check_basis",
    "demonstrate_triple_basis_failure", "teleport_single", "teleport_entangled",
    "verify_output_correlations", "heisenberg_entangled", "fidelity", "quadrature_variance", "schmidt_entropy",
]
