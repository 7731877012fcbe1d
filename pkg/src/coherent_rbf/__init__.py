"""Finite-time coherent sets from RBF collocation of the dynamic Laplacian."""
__version__ = "0.1.0"

from .errors import (AssemblyError, CoherentRBFError, ConfigError, DomainError, EigenSolveError,
                     IntegrationError, ScanError)
from .kernels import KERNELS, WendlandKernel, get_kernel
from .domain import Domain, box, cylinder, torus

__all__ = [
    "AssemblyError", "CoherentRBFError", "ConfigError", "DomainError", "EigenSolveError",
    "IntegrationError", "ScanError", "KERNELS", "WendlandKernel", "get_kernel", "Domain", "box",
    "cylinder", "torus", "__version__",
]
