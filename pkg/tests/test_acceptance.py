"""Acceptance criteria 1-8, one PASS/FAIL line each.

Lines are printed as each test runs and repeated in the pytest terminal
summary.  Criteria 5-7 run the full-size Monte Carlo (about 15 minutes on
one core in total).
"""

import math
import time

import numpy as np
import pytest

from cantilever_atoms import config as cfgmod
from cantilever_atoms import workflows
from cantilever_atoms.analysis import fit_exponential, fit_lorentzian, lorentzian
from cantilever_atoms.cantilever import (Beam, DriveConfig, drive_amplitude, loaded_resonance, paper_cantilever,
                                         spring_constant)
from cantilever_atoms.constants import CONSTANTS
from cantilever_atoms.detection import (cryogenic_scenario, detectable_spins, detection_cantilever, min_force,
                                        room_temperature_scenario, sensitivity_curve)
from cantilever_atoms.magnetostatics import dipole_field, field_at, gradient_at, paper_tip_magnet
from cantilever_atoms.montecarlo import evolve, sample_ensemble, trapped_curve
from cantilever_atoms.spin import CrossingEvent, lz_oracle, lz_probability

from conftest import ACCEPTANCE_LINES

BOOTSTRAP_SAMPLES = 200


def report(n, ok, detail):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)
    assert ok, line


def bootstrap_lifetime(res, seed=0):
    """Spread of the fitted lifetime when atoms are resampled with replacement.

    Points of one survival curve share atoms and are strongly correlated, so
    the fit covariance understates the lifetime error; resampling atoms does not.
    """
    rng = np.random.default_rng(seed)
    taus = []
    for _ in range(BOOTSTRAP_SAMPLES):
        lt = rng.choice(res.loss_times, len(res.loss_times))
        frac, err = trapped_curve(lt, res.times)
        taus.append(fit_exponential(res.times, frac, err)["lifetime"])
    return float(np.std(taus))


@pytest.fixture(scope="module")
def fig3():
    cfg = cfgmod.load_config("paper_fig3.json")
    return cfg, cfgmod.build_axial_model(cfg)


def test_criterion_1_loaded_resonance():
    f0 = loaded_resonance(paper_cantilever())
    dev = f0 / 1057.7e3 - 1
    report(1, abs(dev) <= 0.15, f"predicted f0 = {f0 / 1e3:.1f} kHz vs 1057.7 kHz ({dev:+.1%}, tolerance 15%)")


def test_criterion_2_drive_amplitude():
    dz = drive_amplitude(paper_cantilever(), DriveConfig(40.0, 10.0, 9e-6))
    ok = 20e-9 <= dz <= 80e-9 and 21e-9 <= dz <= 47e-9
    report(2, ok, f"dz = {dz * 1e9:.2f} nm; factor-2 band of 40 nm [20, 80] and measured 34 +/- 13 nm [21, 47]")


def test_criterion_3_force_floor():
    room, cryo = room_temperature_scenario(), cryogenic_scenario()
    F = room.floor()
    ratio = (cryo.floor() / math.sqrt(cryo.bandwidth)) / (F / math.sqrt(room.bandwidth))
    exact = math.sqrt(2.0 / 300.0 / 3.0)
    ok = 29e-18 / 2 <= F <= 2 * 29e-18 and abs(ratio - exact) <= 1e-6 * exact and abs(ratio - 0.04714) <= 1e-6
    report(3, ok, f"F_min(300 K, Q=1e5, 1 Hz) = {F * 1e18:.1f} aN vs 29 aN (x2); cryo/room per rtHz = "
                  f"{ratio:.7f} (exact {exact:.7f}); 29 aN x ratio = {29 * ratio:.3f} aN/rtHz vs 1.3")


def test_criterion_4_fig4():
    t0 = time.perf_counter()
    room, cryo = room_temperature_scenario(), cryogenic_scenario()
    curve = sensitivity_curve(cryo)
    z1 = curve.crossing_single
    n80 = detectable_spins(room, 1.3e-6)
    elapsed = time.perf_counter() - t0
    ok_single = math.isfinite(z1) and abs(z1 / 1.1e-6 - 1) <= 0.3
    ok_80 = 40 <= n80 <= 160
    z1_text = f"{z1 * 1e6:.2f} um" if math.isfinite(z1) else "none in 0.6-3 um"
    ratio = curve.F_single.max() / cryo.floor()
    report(4, ok_single and ok_80 and elapsed < 1.0,
           f"single-spin crossing of F_min(2 K, 0.1 Hz): {z1_text} (target 1.1 um +/- 30%; peak single-spin "
           f"force is {ratio:.2f} x floor); spins needed at 1.3 um, 300 K, 1 Hz: {n80} (target 80, x2); "
           f"{elapsed:.2f} s")


@pytest.mark.slow
def test_criterion_5_decay(fig3):
    cfg, model = fig3
    fits, runtimes = {}, {}
    for V in (10.0, 8.0):
        t0 = time.perf_counter()
        res, _ = workflows.decay_curve(cfg, V_ac=V, model=model)
        runtimes[V] = time.perf_counter() - t0
        fits[V] = fit_exponential(res.times, res.trapped_fraction, res.stderr)
    tau10, tau8 = fits[10.0]["lifetime"], fits[8.0]["lifetime"]
    ratio = tau8 / tau10
    target = (10 / 8) ** 2
    ok_tau = 10e-3 <= tau10 <= 70e-3
    ok_ratio = abs(ratio / target - 1) <= 0.25
    ok_time = max(runtimes.values()) <= 300
    report(5, ok_tau and ok_ratio and ok_time,
           f"tau(10 V) = {tau10 * 1e3:.1f} ms (band 10-70 ms around measured 21 ms and modelled ~10 ms); "
           f"tau(8 V) = {tau8 * 1e3:.1f} ms; ratio {ratio:.3f} vs 1.5625 +/- 25% [1.17, 1.95]; "
           f"offsets {fits[10.0]['offset']:.3f}/{fits[8.0]['offset']:.3f}; "
           f"runtime {max(runtimes.values()):.0f} s per curve")


@pytest.mark.slow
def test_criterion_6_controls(fig3):
    _, model = fig3
    t0 = time.perf_counter()
    details, ok = [], True
    undriven = cfgmod.load_config("paper_fig3_undriven.json")
    off = undriven.with_overrides(**{"drive.V_ac_V": 10.0, "drive.drive_frequency_kHz": 1067.7, "seed": 45})
    for name, cfg in (("drive off", undriven), ("10 kHz off resonance", off)):
        res, _ = workflows.decay_curve(cfg, model=model)
        fit = fit_exponential(res.times, res.trapped_fraction, res.stderr)
        tau = fit["lifetime"]
        sigma = bootstrap_lifetime(res)
        z = (tau - 0.184) / sigma
        good = abs(z) <= 2.0 and abs(tau - 0.184) <= 0.066
        ok &= good
        details.append(f"{name}: tau = {tau * 1e3:.1f} +/- {sigma * 1e3:.1f} ms ({z:+.1f} sigma from 184 ms)")
    far = cfgmod.load_config("paper_fig2_far.json")
    spec, _ = workflows.loss_spectrum(far)
    expected = math.exp(-far.data["sweep"]["interaction_time_ms"] / far.data["dynamics"]["background_lifetime_ms"])
    zs = (spec.remaining - expected) / spec.stderr
    ok &= bool(np.all(zs > -3.0))
    details.append(f"1 mm: remaining {spec.remaining.min():.4f}-{spec.remaining.max():.4f} vs background-only "
                   f"{expected:.4f}, deepest point {zs.min():+.1f} sigma (dip threshold -3 sigma)")
    elapsed = time.perf_counter() - t0
    ok &= elapsed <= 300
    report(6, ok, "; ".join(details) + f"; runtime {elapsed:.0f} s")


@pytest.mark.slow
def test_criterion_7_fig2_shape():
    cfg = cfgmod.load_config("paper_fig2.json")
    t0 = time.perf_counter()
    spec, _ = workflows.loss_spectrum(cfg)
    elapsed = time.perf_counter() - t0
    fit = fit_lorentzian(spec.frequencies, spec.remaining, spec.stderr)
    w, dw = fit["width"], fit.uncertainties["width"]
    ok = fit.converged and fit["amplitude"] < 0 and 430 <= w <= 1030 and abs(w - 670) <= 2 * dw and elapsed <= 1800
    report(7, ok, f"dip FWHM = {w / 1e3:.3f} +/- {dw / 1e3:.3f} kHz (band 0.73 +/- 0.3 kHz; linewidth 0.67 kHz at "
                  f"{(w - 670) / dw:+.1f} sigma); depth {-fit['amplitude']:.3f}; runtime {elapsed:.0f} s")


def test_criterion_8_properties(fig3):
    _, model = fig3
    checks = {}
    magnet = paper_tip_magnet()
    rng = np.random.default_rng(8)
    pts = np.column_stack([rng.uniform(-80e-6, 80e-6, 50), rng.uniform(-20e-6, 20e-6, 50),
                           rng.choice([-1, 1], 50) * rng.uniform(45e-6, 200e-6, 50)])
    G, _ = gradient_at(magnet, pts)
    div = np.max(np.abs(np.trace(G, axis1=1, axis2=2)) / np.abs(G).max(axis=(1, 2)))
    checks["divergence"] = (div <= 1e-4, f"max |div B|/|G| = {div:.1e}")
    size = 85e-6
    dirs = rng.normal(size=(20, 3))
    p = 10 * size * dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    dev = np.max(np.linalg.norm(field_at(magnet, p) - dipole_field(magnet.moment_vector, p), axis=1)
                 / np.linalg.norm(dipole_field(magnet.moment_vector, p), axis=1))
    checks["dipole"] = (dev <= 0.02, f"dipole deviation at 10x size {dev:.2%}")
    lz_dev = 0.0
    for x in np.geomspace(1e-3, 1.0, 7):
        v = 0.25 * math.pi * CONSTANTS.mu_B * 6.0 / CONSTANTS.hbar * (30e-9) ** 2 / x
        ev = CrossingEvent(v, 6.0, 30e-9)
        lz_dev = max(lz_dev, abs(lz_probability(ev) / lz_oracle(ev) - 1))
    checks["lz"] = (lz_dev <= 0.05, f"LZ vs two-level oracle over 3 decades {lz_dev:.2%}")
    state = sample_ensemble(model, 200, 100e-6, 5)
    res = evolve(state, model, 0.0, 0.1, background_lifetime=None)
    drift = float(res.energy_drift.max())
    checks["energy"] = (drift <= 1e-4, f"energy drift over 100 ms {drift:.1e}")
    runs = []
    for threads in (1, None):
        st = sample_ensemble(model, 64, 100e-6, 3)
        runs.append(evolve(st, model, 30e-9, 3e-3, threads=threads,
                           metadata={"drive_frequency": 1057.7e3}).loss_times)
    checks["determinism"] = (np.array_equal(*runs), "bit-identical across thread counts")
    b = Beam(100e-6, 10e-6, 1e-6)
    k_ok = spring_constant(Beam(200e-6, 20e-6, 3e-6)) == pytest.approx(spring_constant(b) * 2 * 27 / 8, rel=1e-12)
    c = detection_cantilever(Q=1e5)
    F_ok = min_force(c, 1200.0, 0.25) == pytest.approx(min_force(c, 300.0, 1.0), rel=1e-12)
    checks["scaling"] = (k_ok and F_ok, "k and F_min scaling exact")
    f = np.linspace(1055.6e3, 1059.8e3, 15)
    fit = fit_lorentzian(f, lorentzian(f, 1057.7e3, 670.0, -0.3, 0.9))
    t = np.linspace(0, 0.07, 50)
    efit = fit_exponential(t, 0.8 * np.exp(-t / 0.021) + 0.1)
    rec = max(abs(fit["width"] / 670 - 1), abs(fit["center"] / 1057.7e3 - 1), abs(efit["lifetime"] / 0.021 - 1))
    checks["fit"] = (rec <= 1e-6, f"noiseless fit recovery {rec:.1e}")
    ok = all(v[0] for v in checks.values())
    report(8, ok, "; ".join(v[1] for v in checks.values()))
