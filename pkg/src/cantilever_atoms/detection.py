"""Thermal-noise force floor of a cantilever and the force from precessing spins.

Separations ``z`` are measured from the center of the cantilever magnet
along its moment.  The per-spin force is ``mu * dB_z/dz`` on that axis.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np
from scipy import optimize

from .cantilever import SIN_DENSITY, SIN_YOUNGS, Beam, LoadedCantilever
from .constants import CONSTANTS
from .magnetostatics import TIP_MAGNETIZATION, Magnet, gradient_at

# SiN detection cantilever and its small CoNiMnP magnet; as for the big tip
# magnet the first dimension lies along the moment
SIN_BEAM_DIMS = (50e-6, 1.1e-6, 0.2e-6)
DETECTION_MAGNET_DIMS = (1.1e-6, 0.9e-6, 0.7e-6)
DETECTION_F0 = 70e3  # Hz


def detection_magnet(magnetization=TIP_MAGNETIZATION):
    along, width, thick = DETECTION_MAGNET_DIMS
    return Magnet.from_dimensions((width, thick, along), magnetization=magnetization)


def detection_cantilever(Q=1e5, magnetization=TIP_MAGNETIZATION, f0_measured=DETECTION_F0, **kwargs):
    """SiN 50 x 1.1 x 0.2 um beam with the 1.1 x 0.9 x 0.7 um magnet."""
    beam = Beam(*SIN_BEAM_DIMS, youngs_modulus=kwargs.pop("youngs_modulus", SIN_YOUNGS),
                density=kwargs.pop("density", SIN_DENSITY))
    return LoadedCantilever(beam, detection_magnet(magnetization), Q=Q, f0_measured=f0_measured, **kwargs)


def min_force(c, temperature, bandwidth, constants=CONSTANTS):
    """F_min = sqrt(4 k k_B T b / (omega_c Q)) in N, omega_c from ``c.resonance``."""
    from .cantilever import spring_constant

    if temperature < 0 or bandwidth < 0:
        raise ValueError("temperature and bandwidth must be non-negative")
    omega = 2 * math.pi * c.resonance
    return math.sqrt(4 * spring_constant(c.beam) * constants.k_B * temperature * bandwidth / (omega * c.Q))


def axial_gradient(magnet, z, constants=CONSTANTS):
    """dB_z/dz (T/m) on the moment axis at distance(s) ``z`` from the magnet center."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z <= magnet.half_lengths[2]):
        raise ValueError("separation must lie outside the magnet (z > half-length along the moment)")
    pts = magnet.center + z[:, None] * magnet.axis
    G, _ = gradient_at(magnet, pts, constants)
    n = magnet.axis
    return np.einsum("i,nij,j->n", n, G, n)


def spin_force(magnet, z, N=1, spin_moment=None, constants=CONSTANTS):
    """Force (N) of ``N`` spins of moment ``spin_moment`` (default mu_B) at ``z``."""
    if N < 0:
        raise ValueError("spin count must be non-negative")
    mu = constants.mu_B if spin_moment is None else spin_moment
    F = N * mu * np.abs(axial_gradient(magnet, z, constants))
    return F if np.ndim(z) else float(F[0])


@dataclass(frozen=True)
class DetectionScenario:
    cantilever: LoadedCantilever
    temperature: float
    bandwidth: float
    spin_count: int = 1000
    separations: np.ndarray = field(default_factory=lambda: np.linspace(0.6e-6, 3e-6, 241))
    spin_moment: float = None

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if self.spin_count < 1:
            raise ValueError("spin count must be at least 1")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        z = np.asarray(self.separations, dtype=float)
        if self.cantilever.tip_magnet is None:
            raise ValueError("scenario needs a cantilever magnet")
        if np.any(z <= self.cantilever.tip_magnet.half_lengths[2]):
            raise ValueError("separations must lie outside the magnet")
        object.__setattr__(self, "separations", z)

    @property
    def magnet(self):
        return self.cantilever.tip_magnet

    def floor(self, constants=CONSTANTS):
        return min_force(self.cantilever, self.temperature, self.bandwidth, constants)

    def with_conditions(self, **kwargs):
        """Copy with new temperature/bandwidth/spin count; ``Q`` updates the cantilever."""
        Q = kwargs.pop("Q", None)
        scen = replace(self, **kwargs)
        if Q is not None:
            scen = replace(scen, cantilever=replace(self.cantilever, Q=Q))
        return scen


def room_temperature_scenario(**kwargs):
    return DetectionScenario(detection_cantilever(Q=kwargs.pop("Q", 1e5)), 300.0, 1.0, **kwargs)


def cryogenic_scenario(**kwargs):
    return DetectionScenario(detection_cantilever(Q=kwargs.pop("Q", 3e5)), 2.0, 0.1, **kwargs)


def detectable_spins(scenario, z, constants=CONSTANTS):
    """Smallest spin count whose force reaches F_min at ``z`` (at least 1)."""
    per_spin = spin_force(scenario.magnet, z, 1, scenario.spin_moment, constants)
    F = scenario.floor(constants)
    if F == 0:
        return 1
    # the tiny relative tolerance keeps exact ratios from rounding up a whole spin
    return max(1, math.ceil(F / per_spin * (1 - 1e-12)))


@dataclass
class SensitivityCurve:
    z: np.ndarray
    F_min: np.ndarray
    F_spins: np.ndarray  # N spins
    F_single: np.ndarray
    spin_count: int
    crossing_single: float  # outermost z where the single-spin force equals F_min (nan if none)
    crossing_spins: float

    def rows(self):
        return np.column_stack([self.z, self.F_min, self.F_spins, self.F_single])


def _outermost_crossing(magnet, z, diff_fn):
    d = diff_fn(z)
    idx = np.nonzero(np.sign(d[:-1]) != np.sign(d[1:]))[0]
    if len(idx) == 0:
        return math.nan
    i = idx[-1]
    return optimize.brentq(lambda s: float(diff_fn(np.array([s]))[0]), z[i], z[i + 1], xtol=1e-15, rtol=1e-12)


def sensitivity_curve(scenario, constants=CONSTANTS):
    """Force floor and spin forces over the scenario's separations, with crossings."""
    z = scenario.separations
    F = scenario.floor(constants)
    single = spin_force(scenario.magnet, z, 1, scenario.spin_moment, constants)
    many = scenario.spin_count * single

    def diff(n):
        return lambda s: n * spin_force(scenario.magnet, s, 1, scenario.spin_moment, constants) - F

    return SensitivityCurve(z, np.full_like(z, F), many, single, scenario.spin_count,
                            _outermost_crossing(scenario.magnet, z, diff(1)),
                            _outermost_crossing(scenario.magnet, z, diff(scenario.spin_count)))
