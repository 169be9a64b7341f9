"""
Exception hierarchy for the torsion/zeta toolkit
"""

from typing import Dict, Optional


class TorsionZetaError(Exception):
    """Base class for every contract violation raised by the package"""


class StructuralError(TorsionZetaError):
    """Shape or degree mismatch between graded objects"""


class NotADifferentialError(TorsionZetaError):
    """A map declared as a differential does not square to zero"""


class InfeasibleDimsError(TorsionZetaError):
    """Dimensions that admit no exact complex"""


class NotExactError(TorsionZetaError):
    def __init__(self, which: str, dims: Dict[int, int]):
        self.which = which
        self.dims = dict(dims)
        nonzero = {i: n for i, n in self.dims.items() if n}
        super().__init__(f"{which} is not exact, nonzero cohomology dims {nonzero}")


class SingularMapError(TorsionZetaError):
    """A map that must be invertible is singular on some degree"""


class FrameMismatchError(TorsionZetaError):
    """Determinant-line elements over frames that are neither equal nor paired"""


class GammaAxiomError(TorsionZetaError):
    def __init__(self, identity: str, residual: float):
        self.identity = identity
        self.residual = float(residual)
        super().__init__(f"Γ axiom '{identity}' fails with residual {residual:.3e}")


class CutoffOnSpectrumError(TorsionZetaError):
    def __init__(self, eigenvalue: complex, cutoff: float):
        self.eigenvalue = complex(eigenvalue)
        self.cutoff = float(cutoff)
        super().__init__(
            f"cutoff a={cutoff:g} too close to eigenvalue {eigenvalue:.6g} "
            f"(|λ|={abs(eigenvalue):.6g})"
        )


class NotClosedError(TorsionZetaError):
    """Cohomology representatives that are not d-closed or not a basis"""


class BandNotInvertibleError(TorsionZetaError):
    """[d,δ] is singular on a band where both differentials must be exact"""


class ZetaSingularityError(TorsionZetaError):
    def __init__(self, order: int, sigma: Optional[complex] = None):
        self.order = int(order)
        self.sigma = sigma
        kind = "pole" if order < 0 else "zero"
        where = "" if sigma is None else f" at σ={sigma}"
        super().__init__(f"{kind} of order {abs(order)}{where}")


class NonHyperbolicError(TorsionZetaError):
    """Integer matrix that is not a hyperbolic element of SL(2,Z)"""
