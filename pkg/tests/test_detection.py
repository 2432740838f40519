import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cantilever_atoms.cantilever import spring_constant
from cantilever_atoms.constants import CONSTANTS
from cantilever_atoms.detection import (DETECTION_MAGNET_DIMS, DetectionScenario, axial_gradient,
                                        cryogenic_scenario, detectable_spins, detection_cantilever,
                                        detection_magnet, min_force, room_temperature_scenario,
                                        sensitivity_curve, spin_force)


def test_min_force_formula():
    c = detection_cantilever(Q=1e5)
    k = spring_constant(c.beam)
    expected = math.sqrt(4 * k * CONSTANTS.k_B * 300 * 1.0 / (2 * math.pi * 70e3 * 1e5))
    assert min_force(c, 300, 1.0) == pytest.approx(expected, rel=1e-12)


def test_room_temperature_floor_near_quoted_29_aN():
    assert min_force(detection_cantilever(Q=1e5), 300, 1.0) == pytest.approx(29e-18, rel=1.0)
    assert 29e-18 / 2 <= min_force(detection_cantilever(Q=1e5), 300, 1.0) <= 2 * 29e-18


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 1000), st.floats(1e-3, 100), st.floats(10, 1e7))
def test_min_force_scaling(T, b, Q):
    ref = min_force(detection_cantilever(Q=1.0), 1.0, 1.0)
    assert min_force(detection_cantilever(Q=Q), T, b) == pytest.approx(ref * math.sqrt(T * b / Q), rel=1e-12)


def test_cryo_room_ratio_is_exact():
    room, cryo = room_temperature_scenario(), cryogenic_scenario()
    ratio = (cryo.floor() / math.sqrt(cryo.bandwidth)) / (room.floor() / math.sqrt(room.bandwidth))
    assert ratio == pytest.approx(math.sqrt(2 / 300 / 3), rel=1e-12)
    assert ratio == pytest.approx(0.04714, abs=1e-5)


def test_zero_temperature_floor():
    assert min_force(detection_cantilever(), 0.0, 1.0) == 0.0
    with pytest.raises(ValueError):
        min_force(detection_cantilever(), -1.0, 1.0)


def test_magnet_orientation():
    m = detection_magnet()
    assert m.half_lengths[2] == pytest.approx(DETECTION_MAGNET_DIMS[0] / 2)
    assert m.volume == pytest.approx(np.prod(DETECTION_MAGNET_DIMS))


def test_axial_gradient_dipole_limit():
    m = detection_magnet()
    z = 40e-6
    dipole = 3 * CONSTANTS.mu0 * m.total_moment / (2 * math.pi * z**4)
    assert abs(axial_gradient(m, z)[0]) == pytest.approx(dipole, rel=1e-3)


def test_spin_force_linear_and_decreasing():
    m = detection_magnet()
    z = np.linspace(0.7e-6, 3e-6, 30)
    F = spin_force(m, z)
    assert np.all(np.diff(F) < 0)
    assert np.allclose(spin_force(m, z, 80), 80 * F, rtol=1e-14)
    assert spin_force(m, 1.3e-6) == pytest.approx(F[np.argmin(abs(z - 1.3e-6))], rel=0.2)
    assert isinstance(spin_force(m, 1.3e-6), float)
    with pytest.raises(ValueError):
        spin_force(m, 0.3e-6)
    with pytest.raises(ValueError):
        spin_force(m, 1e-6, N=-1)


def test_detectable_spins_boundary():
    scen = room_temperature_scenario()
    z = 1.3e-6
    n = detectable_spins(scen, z)
    assert n * spin_force(scen.magnet, z) >= scen.floor()
    assert n == 1 or (n - 1) * spin_force(scen.magnet, z) < scen.floor()


def test_crossings_exist_for_strong_magnet():
    cant = detection_cantilever(Q=3e5, magnetization=1e6)
    scen = DetectionScenario(cant, 2.0, 0.1, spin_count=1000, separations=np.linspace(0.6e-6, 20e-6, 400))
    curve = sensitivity_curve(scen)
    assert np.isfinite(curve.crossing_single) and np.isfinite(curve.crossing_spins)
    assert curve.crossing_spins > curve.crossing_single
    F = spin_force(scen.magnet, curve.crossing_single)
    assert F == pytest.approx(scen.floor(), rel=1e-9)
    assert curve.rows().shape == (len(scen.separations), 4)


def test_no_crossing_gives_nan():
    scen = DetectionScenario(detection_cantilever(Q=10.0, magnetization=1.0), 300.0, 1.0)
    assert math.isnan(sensitivity_curve(scen).crossing_single)


def test_with_conditions():
    room = room_temperature_scenario()
    cold = room.with_conditions(temperature=2.0, bandwidth=0.1, Q=3e5)
    assert cold.cantilever.Q == 3e5 and cold.temperature == 2.0
    assert room.cantilever.Q == 1e5


@pytest.mark.parametrize("kwargs", [dict(bandwidth=0.0), dict(spin_count=0), dict(temperature=-1.0),
                                    dict(separations=np.array([0.2e-6]))])
def test_invalid_scenarios(kwargs):
    base = dict(cantilever=detection_cantilever(), temperature=300.0, bandwidth=1.0)
    base.update(kwargs)
    with pytest.raises(ValueError):
        DetectionScenario(**base)
