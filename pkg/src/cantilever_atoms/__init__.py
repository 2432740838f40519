"""Magnetic-tipped cantilever coupled to magnetically trapped cold atoms.

Modules
-------
magnetostatics
    Analytic field and gradient of uniformly magnetized prisms.
cantilever
    Beam mechanics, loaded resonance and capacitive drive response.
trap
    Tip, bias and quadrupole fields, trap minimum and resonant slices.
spin
    Landau-Zener spin-flip probability and a numerical two-level oracle.
montecarlo
    Reproducible Monte Carlo of the trapped ensemble under drive.
analysis
    Weighted nonlinear least-squares fits (exponential, Lorentzian).
detection
    Thermal force floor and spin-force sensitivity estimates.
"""

import warnings

# numba probes TBB at first parallel launch and falls back to its own
# workqueue/OpenMP layer; the notice carries no information for users.
warnings.filterwarnings("ignore", message="The TBB threading layer")

from .constants import CONSTANTS, PhysicalConstants

__version__ = "0.1.0"

__all__ = ["CONSTANTS", "PhysicalConstants", "__version__"]
