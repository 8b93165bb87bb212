"""Time-adapted Meyer wavelet toolkit for mild Navier-Stokes solutions on the torus."""
from .heatflow import make_heat_trajectory, random_field, random_vector_field
from .norms import field_besov_norm, ypm_norm
from .paraproduct import QuadratureWarning, bilinear_B, paraproduct_decompose
from .solver import SmallnessWarning, SolverConfig, picard_solve, preset_field, scaling_check
from .spectral import FrequencyLattice, SpectralField, VectorField, leray_project
from .wavelets import DEFAULT_WINDOW, MeyerWindow, TruncationWarning, analyze, synthesize

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_WINDOW", "FrequencyLattice", "MeyerWindow", "QuadratureWarning", "SmallnessWarning",
    "SolverConfig", "SpectralField", "TruncationWarning", "VectorField", "analyze", "bilinear_B",
    "field_besov_norm", "leray_project", "make_heat_trajectory", "paraproduct_decompose",
    "picard_solve", "preset_field", "random_field", "random_vector_field", "scaling_check",
    "synthesize", "ypm_norm",
]
