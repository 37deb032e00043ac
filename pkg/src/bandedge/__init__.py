"""Linear response of a two-level emitter coupled to a structured reservoir.

Modules
-------
reservoir   reservoir models, kernels and Laplace transforms
spectral    principal-value and Fourier transforms of tabulated weights
response    stationary susceptibility and transparency points
dynamics    time-domain Volterra and discrete-bath solvers
reconstruct band profile recovery from susceptibility data
cli         command-line front end
"""

from .errors import (BandEdgeError, ConvergenceError, DomainError, InstabilityError,
                     InsufficientDataError, NearTransparencyError, RangeError,
                     RevivalError, SingularPointError, UnsupportedSpecError)
from .reservoir import Kind, ReservoirSpec, gtilde_analytic, gtilde_zero, spectral_weight
from .response import curve, susceptibility, transparency_points
from .tables import DensityTable

__version__ = "0.1.0"

__all__ = [
    "BandEdgeError", "ConvergenceError", "DensityTable", "DomainError",
    "InstabilityError", "InsufficientDataError", "Kind", "NearTransparencyError",
    "RangeError", "ReservoirSpec", "RevivalError", "SingularPointError",
    "UnsupportedSpecError", "curve", "gtilde_analytic", "gtilde_zero",
    "spectral_weight", "susceptibility", "transparency_points",
]
