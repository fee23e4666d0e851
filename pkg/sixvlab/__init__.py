from sixvlab._version import get_version
from sixvlab.correlation import CorrelatorValue, PointQuad, sigma_squared
from sixvlab.lab import SixVertexLab
from sixvlab.montecarlo import MCConfig, even_domain, estimate_correlator, torus
from sixvlab.spectral import SpectralMeasure, spectral_measure
from sixvlab.transfer import EigenSystem, ModelParams, build_and_codiagonalize
from sixvlab.utils import setup_logger
from sixvlab.wienerhopf import WHParams, f_second_derivative, solve_neumann

__version__ = get_version()

__all__ = [
    "SixVertexLab",
    "__version__",
    "ModelParams",
    "EigenSystem",
    "build_and_codiagonalize",
    "SpectralMeasure",
    "spectral_measure",
    "PointQuad",
    "CorrelatorValue",
    "sigma_squared",
    "WHParams",
    "solve_neumann",
    "f_second_derivative",
    "MCConfig",
    "even_domain",
    "torus",
    "estimate_correlator",
    "setup_logger",
]
