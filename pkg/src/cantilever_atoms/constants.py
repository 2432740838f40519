"""Physical constants (SI) shared by every module."""

from dataclasses import dataclass, replace
import math


@dataclass(frozen=True)
class PhysicalConstants:
    mu_B: float = 9.274010e-24  # J/T
    hbar: float = 1.054572e-34  # J s
    k_B: float = 1.380649e-23  # J/K
    eps0: float = 8.854188e-12  # F/m
    # Rb-87 F=2 gyromagnetic ratio as the rounded 7 Hz/nT, not mu_B*g_F/h.
    gamma_Rb: float = 7.0e9  # Hz/T
    m_Rb87: float = 1.443160e-25  # kg
    mu0: float = 1.256637e-6  # T m/A

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"constant {name} must be finite and positive, got {value!r}")

    def with_gamma(self, gamma):
        return replace(self, gamma_Rb=float(gamma))


CONSTANTS = PhysicalConstants()
