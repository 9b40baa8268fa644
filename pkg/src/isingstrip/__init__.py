"""Transfer matrix, Temperley-Lieb decomposition and integrals of motion of the critical Ising strip."""
from .lattice import SpectralPoint, SpinBasis, build_transfer, transfer_matrix
from .precision import DOUBLE, Precision, extended
from .spectrum import Partition, analytic_eigenvalue, enumerate_sector, transfer_eigenvalue

__all__ = [
    "DOUBLE",
    "Partition",
    "Precision",
    "SpectralPoint",
    "SpinBasis",
    "analytic_eigenvalue",
    "build_transfer",
    "enumerate_sector",
    "extended",
    "transfer_eigenvalue",
    "transfer_matrix",
]
__version__ = "0.1.0"
