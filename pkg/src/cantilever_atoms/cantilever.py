"""Beam mechanics, tip-loaded resonance and capacitive drive response."""

from dataclasses import dataclass
import math
import warnings

import numpy as np

from .constants import CONSTANTS
from .magnetostatics import paper_tip_magnet

# Material defaults (not given in the source measurements; all overridable).
SI_YOUNGS = 169e9
SI_DENSITY = 2330.0
SIN_YOUNGS = 280e9
SIN_DENSITY = 3000.0
CONIMNP_DENSITY = 8000.0

RAYLEIGH_MASS_FACTOR = 0.24


@dataclass(frozen=True)
class Beam:
    length: float
    width: float
    thickness: float
    youngs_modulus: float = SI_YOUNGS
    density: float = SI_DENSITY

    def __post_init__(self):
        for name in ("length", "width", "thickness", "youngs_modulus", "density"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"beam {name} must be positive, got {value!r}")
        if self.thickness > self.length:
            warnings.warn("beam thicker than it is long: thin-beam formula invalid", stacklevel=3)

    @property
    def thin(self):
        return self.thickness <= self.length

    @property
    def mass(self):
        return self.density * self.length * self.width * self.thickness

    @property
    def plate_area(self):
        return self.length * self.width


@dataclass(frozen=True)
class LoadedCantilever:
    beam: Beam
    tip_magnet: object = None
    magnet_density: float = CONIMNP_DENSITY
    Q: float = 1e4
    f0_measured: float = None
    linewidth: float = None

    def __post_init__(self):
        if not self.Q > 0:
            raise ValueError(f"Q must be positive, got {self.Q!r}")
        if self.tip_magnet is not None and not self.magnet_density > 0:
            raise ValueError("magnet density must be positive")

    @property
    def magnet_mass(self):
        if self.tip_magnet is None:
            return 0.0
        return self.magnet_density * self.tip_magnet.volume

    @property
    def resonance(self):
        """Measured resonance if known, else the predicted loaded resonance (Hz)."""
        return self.f0_measured if self.f0_measured is not None else loaded_resonance(self)

    @property
    def drive_Q(self):
        """Q for drive response: f0 / linewidth when a linewidth is known."""
        if self.linewidth is not None:
            return self.resonance / self.linewidth
        return self.Q


@dataclass(frozen=True)
class DriveConfig:
    V_dc: float = 40.0
    V_ac: float = 10.0
    gap: float = 9e-6
    area: float = None  # m^2; None -> area_fraction * beam plate area
    area_fraction: float = 1.0
    drive_frequency: float = 1057.7e3

    def __post_init__(self):
        if not self.gap > 0:
            raise ValueError("electrode gap must be positive")
        if self.area is not None and not self.area > 0:
            raise ValueError("effective area must be positive")
        if not self.area_fraction > 0:
            raise ValueError("area_fraction must be positive")
        if self.V_dc < 0 or self.V_ac < 0:
            raise ValueError("drive voltages must be non-negative")

    def effective_area(self, beam):
        return self.area if self.area is not None else self.area_fraction * beam.plate_area


def spring_constant(beam):
    """k = E w (h / l)^3 / 4 (N/m)."""
    return 0.25 * beam.youngs_modulus * beam.width * (beam.thickness / beam.length) ** 3


def loaded_resonance(c):
    """Fundamental frequency (Hz) with Rayleigh effective mass 0.24 m_c + M."""
    m_eff = RAYLEIGH_MASS_FACTOR * c.beam.mass + c.magnet_mass
    return math.sqrt(spring_constant(c.beam) / m_eff) / (2 * math.pi)


def drive_amplitude(c, drv, constants=CONSTANTS):
    """On-resonance tip amplitude (m) of the parallel-plate capacitive drive."""
    force = constants.eps0 * drv.effective_area(c.beam) * drv.V_dc * drv.V_ac / drv.gap**2
    return c.drive_Q / spring_constant(c.beam) * force


def response_amplitude(c, drv, f=None, constants=CONSTANTS):
    """Driven damped-oscillator amplitude (m) at ``f`` (defaults to the drive frequency).

    Normalized so the value at the resonance equals :func:`drive_amplitude`;
    the FWHM of the squared amplitude is ``f0 / Q``.
    """
    f = drv.drive_frequency if f is None else f
    f0 = c.resonance
    Q = c.drive_Q
    f = np.asarray(f, dtype=float)
    shape = (f0 * f0 / Q) / np.sqrt((f0 * f0 - f * f) ** 2 + (f0 * f / Q) ** 2)
    if shape.ndim == 0:
        shape = float(shape)
    return drive_amplitude(c, drv, constants) * shape


def paper_cantilever(**kwargs):
    """Si 130 x 60 x 25 um beam carrying the CoNiMnP tip magnet."""
    opts = dict(Q=1e4, f0_measured=1057.7e3, linewidth=0.67e3)
    opts.update(kwargs)
    return LoadedCantilever(Beam(130e-6, 60e-6, 25e-6), paper_tip_magnet(), **opts)
