# Torsion sections, spectral gluing and Fried zeta functions
from .errors import TorsionZetaError

__version__ = "0.1.0"

__all__ = ["TorsionZetaError", "__version__"]
