"""Decoherence-free states and bound states in the continuum for two emitters in a cavity array."""

from .bath import BathKind, BathModel, band_edges, dispersion, spectral_density
from .boundstate import DfsReport, bic_solve, closed_form_weight, weight_integral
from .dynamics import memory_kernel, pole_residues, simulate, solve_amplitudes, steady_state_prediction
from .emitters import EmitterPair
from .errors import DfsBicError, ValidationError
from .markovian import bma_dfs_criterion, markovian_rates

__version__ = "0.1.0"

__all__ = [
    "BathKind", "BathModel", "DfsBicError", "DfsReport", "EmitterPair", "ValidationError",
    "band_edges", "bic_solve", "bma_dfs_criterion", "closed_form_weight", "dispersion",
    "markovian_rates", "memory_kernel", "pole_residues", "simulate", "solve_amplitudes",
    "spectral_density", "steady_state_prediction", "weight_integral", "__version__",
]
