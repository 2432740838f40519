"""Config-driven workflows behind the command-line subcommands.

Each function takes a :class:`~cantilever_atoms.config.RunConfig` and
returns plain tables (header, rows, metadata) or result objects, so the CLI
only handles argument parsing and file output.
"""

import numpy as np

from . import config as cfgmod
from .analysis import fit_exponential, fit_lorentzian
from .cantilever import drive_amplitude, loaded_resonance, response_amplitude, spring_constant
from .detection import detectable_spins, sensitivity_curve
from .magnetostatics import field_at, gradient_at
from .montecarlo import evolve, frequency_sweep, sample_ensemble
from .trap import field_magnitude, find_trap_minimum, larmor_frequency, resonant_slice, zeeman_potential


def run_metadata(cfg, **extra):
    meta = {"config_hash": cfg.config_hash, "seed": cfg.seed, "atom_count": cfg.atom_count}
    meta.update(extra)
    return meta


def cantilever_props(cfg):
    c = cfgmod.build_cantilever(cfg)
    drv = cfgmod.build_drive(cfg)
    return {
        "spring_constant_N_per_m": spring_constant(c.beam),
        "beam_mass_kg": c.beam.mass,
        "magnet_mass_kg": c.magnet_mass,
        "f0_predicted_Hz": loaded_resonance(c),
        "f0_measured_Hz": c.f0_measured,
        "drive_Q": c.drive_Q,
        "delta_z_resonant_m": drive_amplitude(c, drv),
        "linewidth_Hz": c.resonance / c.drive_Q,
        "config_hash": cfg.config_hash,
    }


def field_map(cfg, nx=31, nz=31, half_width=150e-6, depth=300e-6):
    """Field and |grad|B|| of the tip magnet on a plane through its axis, beyond the tip face."""
    magnet = cfgmod.build_magnet(cfg)
    face = magnet.half_lengths[2]
    xs = np.linspace(-half_width, half_width, nx)
    zs = face + np.linspace(depth / nz, depth, nz)
    X, Z = np.meshgrid(xs, zs, indexing="ij")
    q = np.column_stack([X.ravel(), np.zeros(X.size), Z.ravel()])
    pts = magnet.center + q @ magnet.orientation.T
    B = field_at(magnet, pts)
    _, g = gradient_at(magnet, pts)
    rows = np.column_stack([pts, B, np.linalg.norm(B, axis=1), np.linalg.norm(g, axis=1)])
    header = ["x_m", "y_m", "z_m", "Bx_T", "By_T", "Bz_T", "B_T", "grad_B_T_per_m"]
    return header, rows, {"config_hash": cfg.config_hash}


def trap_profile(cfg, n=601, span=None):
    """Axial |B|, Larmor frequency and Zeeman energies, plus slice and minimum summary."""
    trap, target = cfgmod.build_trap(cfg)
    magnet = trap.magnet
    face = magnet.half_lengths[2]
    standoff = float((target - magnet.center) @ trap.axis) - face
    span = 3 * standoff if span is None else span
    d = np.linspace(1e-6, span, n)
    s = face + d
    pts = trap.axis_point(s)
    B = field_magnitude(trap, pts)
    cols = [d, B, larmor_frequency(trap, pts)] + [zeeman_potential(trap, pts, m) for m in (2, 1, 0, -1, -2)]
    header = ["distance_from_face_m", "B_T", "larmor_Hz", "U_mF2_J", "U_mF1_J", "U_mF0_J", "U_mFm1_J", "U_mFm2_J"]
    f_drive = cfg.data["drive"]["drive_frequency_kHz"] * 1e3
    sl = resonant_slice(trap, f_drive, s[0], s[-1], n=4001)
    box = (target - 20e-6, target + 20e-6)
    p_min, B_min = find_trap_minimum(trap, box)
    meta = {
        "config_hash": cfg.config_hash,
        "quad_gradient_T_per_m": float(trap.quad_gradient),
        "bias_field_T": [float(b) for b in trap.bias_field],
        "slice_distance_from_face_m": [float(x - face) for x in sl.coords],
        "trap_minimum_m": [float(x) for x in p_min],
        "trap_minimum_B_T": float(B_min),
    }
    return header, np.column_stack(cols), meta


def decay_curve(cfg, V_ac=None, seed=None, exact=None, threads=None, model=None):
    """Trapped fraction versus time on resonance; returns ``(RunResult, model)``."""
    c = cfgmod.build_cantilever(cfg)
    drv = cfgmod.build_drive(cfg, V_ac=V_ac)
    model = cfgmod.build_axial_model(cfg, exact=exact) if model is None else model
    seed = cfg.seed if seed is None else seed
    state = sample_ensemble(model, cfg.atom_count, cfg.temperature, seed)
    opts = cfgmod.evolve_options(cfg)
    if threads is not None:
        opts["threads"] = threads
    dz = float(response_amplitude(c, drv))
    meta = run_metadata(cfg, seed=seed, drive_frequency=drv.drive_frequency, V_ac=drv.V_ac)
    res = evolve(state, model, dz, cfg.duration, output_interval=cfg.output_interval, metadata=meta, **opts)
    return res, model


def decay_table(res):
    header = ["t_s", "trapped_fraction", "stderr"]
    return header, np.column_stack([res.times, res.trapped_fraction, res.stderr])


def sweep_frequencies(cfg):
    sw = cfg.data["sweep"]
    if sw["points"] == 1:
        return np.array([sw["center_kHz"] * 1e3])
    return (sw["center_kHz"] + np.linspace(-0.5, 0.5, sw["points"]) * sw["span_kHz"]) * 1e3


def loss_spectrum(cfg, V_ac=None, seed=None, exact=None, threads=None, frequencies=None, model=None):
    c = cfgmod.build_cantilever(cfg)
    drv = cfgmod.build_drive(cfg, V_ac=V_ac)
    model = cfgmod.build_axial_model(cfg, exact=exact) if model is None else model
    seed = cfg.seed if seed is None else seed
    f = sweep_frequencies(cfg) if frequencies is None else np.asarray(frequencies, dtype=float)
    opts = cfgmod.evolve_options(cfg)
    if threads is not None:
        opts["threads"] = threads
    t_int = cfg.data["sweep"]["interaction_time_ms"] * 1e-3
    spec = frequency_sweep(model, c, drv, f, t_int, cfg.atom_count, cfg.temperature, seed, **opts)
    spec.metadata.update(run_metadata(cfg, seed=seed, V_ac=drv.V_ac))
    return spec, model


def spectrum_table(spec):
    header = ["f_drive_Hz", "remaining_fraction", "stderr"]
    return header, np.column_stack([spec.frequencies, spec.remaining, spec.stderr])


def detection_limits(cfg):
    """Fig. 4 style table for the cryogenic scenario plus a summary of both scenarios."""
    room, cryo = cfgmod.detection_scenarios(cfg)
    curve = sensitivity_curve(cryo)
    z_crit = cfg.data["detection"]["criterion_z_um"] * 1e-6
    summary = {
        "F_min_room_N": room.floor(),
        "F_min_cryo_N": cryo.floor(),
        "cryo_room_ratio_per_rtHz": (cryo.floor() / np.sqrt(cryo.bandwidth)) / (room.floor() / np.sqrt(room.bandwidth)),
        "single_spin_crossing_m": curve.crossing_single,
        "cryo_spin_count": cryo.spin_count,
        "many_spin_crossing_m": curve.crossing_spins,
        "room_spins_detectable_at_criterion": detectable_spins(room, z_crit),
        "criterion_z_m": z_crit,
        "room_spin_count_crossing_m": sensitivity_curve(room).crossing_spins,
        "config_hash": cfg.config_hash,
    }
    header = ["z_m", "F_min_N", f"F_{cryo.spin_count}_spins_N", "F_single_spin_N"]
    return header, curve.rows(), summary


def fit_table(x, y, sigma=None, model="exponential", offset=None):
    if model == "exponential":
        return fit_exponential(x, y, sigma, offset=offset)
    if model == "lorentzian":
        return fit_lorentzian(x, y, sigma, offset=offset)
    raise ValueError(f"unknown fit model {model!r}")
