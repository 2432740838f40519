"""Cantilever-driven spin flips: Rabi frequency and Landau-Zener crossings."""

from dataclasses import dataclass
import math

import numba
import numpy as np

from .constants import CONSTANTS

# below this speed a crossing is treated as fully adiabatic
V_EPSILON = 1e-12  # m/s


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class CrossingEvent:
    speed: float  # m/s through the slice
    gradient: float  # T/m, |grad|B|| at the slice
    delta_z: float  # m, cantilever amplitude
    m_F: int = 2
    position: np.ndarray = None

    def __post_init__(self):
        if self.speed < 0 or self.gradient < 0 or self.delta_z < 0:
            raise ValueError("speed, gradient and amplitude must be non-negative")


def rabi_frequency(delta_z, G_m, constants=CONSTANTS):
    """Omega_R = delta_z * G_m * gamma (Hz)."""
    if delta_z < 0 or G_m < 0:
        raise ValueError("amplitude and gradient must be non-negative")
    return delta_z * G_m * constants.gamma_Rb


def lz_exponent(ev, constants=CONSTANTS, zeeman_factor=1.0):
    """(pi/4) (mu_B B' / hbar) dz^2 / v, times an optional matrix-element factor."""
    if ev.delta_z == 0 or ev.gradient == 0:
        return 0.0
    if ev.speed < V_EPSILON:
        return math.inf
    return 0.25 * math.pi * zeeman_factor * constants.mu_B * ev.gradient / constants.hbar * ev.delta_z**2 / ev.speed


def lz_probability(ev, constants=CONSTANTS, zeeman_factor=1.0):
    """Spin-flip probability for one pass through the resonant slice."""
    return -math.expm1(-lz_exponent(ev, constants, zeeman_factor))


@numba.njit(cache=True)
def _propagate(g, T, dtau):
    # exponential-midpoint propagation of H = (tau sz + g sx) / 2 from -T to T
    n = int(math.ceil(2.0 * T / dtau))
    h = 2.0 * T / n
    c1r, c1i, c2r, c2i = 1.0, 0.0, 0.0, 0.0
    for k in range(n):
        tau = -T + (k + 0.5) * h
        w = math.sqrt(tau * tau + g * g)
        th = 0.5 * h * w
        cs = math.cos(th)
        sn = math.sin(th)
        nz = tau / w if w > 0 else 0.0
        nx = g / w if w > 0 else 0.0
        # U = cos th - i sin th (nz sz + nx sx)
        a_r = cs
        a_i = -sn * nz
        d_i = sn * nz
        b_i = -sn * nx
        # U11 = a_r + i a_i, U12 = i b_i, U21 = i b_i, U22 = a_r + i d_i
        n1r = a_r * c1r - a_i * c1i - b_i * c2i
        n1i = a_r * c1i + a_i * c1r + b_i * c2r
        n2r = a_r * c2r - d_i * c2i - b_i * c1i
        n2i = a_r * c2i + d_i * c2r + b_i * c1r
        c1r, c1i, c2r, c2i = n1r, n1i, n2r, n2i
    return c2r * c2r + c2i * c2i


def sweep_parameters(ev, constants=CONSTANTS):
    """Rabi coupling (rad/s) and detuning sweep rate (rad/s^2) of a crossing."""
    omega = 2 * math.pi * constants.gamma_Rb * ev.delta_z * ev.gradient
    beta = 2 * math.pi * constants.gamma_Rb * ev.gradient * ev.speed
    return omega, beta


def lz_oracle(ev, constants=CONSTANTS, half_span=None, dtau=2e-3, rtol=1e-3):
    """Flip probability from unitary two-level evolution through a linear crossing.

    Works in units where the sweep rate is one: coupling ``g = Omega / sqrt(beta)``
    and detuning ``tau``.  The sweep runs over ``[-half_span, half_span]``;
    the finite-window error falls off as ``1 / half_span`` and the default
    ``max(2000, 20 g)`` holds it near 1e-3 relative.  The step is halved once
    and both results must agree to ``rtol``, otherwise
    :class:`ConvergenceError` is raised.
    """
    omega, beta = sweep_parameters(ev, constants)
    if omega == 0:
        return 0.0
    if beta == 0:
        return 1.0
    g = omega / math.sqrt(beta)
    T = half_span if half_span is not None else max(2000.0, 20.0 * g)
    coarse = _propagate(g, T, dtau)
    fine = _propagate(g, T, dtau / 2)
    if abs(fine - coarse) > rtol * max(fine, 1e-12):
        raise ConvergenceError(f"two-level integration not converged: {coarse} vs {fine}")
    return float(fine)


def apply_crossing(m_F, ev, rng, loss_mode="ladder", constants=CONSTANTS, zeeman_factor=1.0):
    """New m_F after one slice passage; ``m_F <= 0`` means the atom is lost.

    ``rng`` needs a ``random()`` method.  Ladder mode steps down one level per
    flip; immediate mode sends any flipped atom straight to ``0``.
    """
    if loss_mode not in ("ladder", "immediate"):
        raise ValueError(f"unknown loss mode {loss_mode!r}")
    p = lz_probability(ev, constants, zeeman_factor)
    if rng.random() < p:
        return m_F - 1 if loss_mode == "ladder" else 0
    return m_F
