"""JSON run configuration: schema, defaults, hashing and SI builders.

Magnet dimensions are listed along the moment first, then width and
thickness.  Keys carry their unit as a suffix (``standoff_um``, ``temperature_uK``,
``drive_frequency_kHz``); everything handed to the physics modules is SI.
A loaded :class:`RunConfig` keeps the document exactly as written plus the
defaults it omitted, so dumping and reloading gives an equal configuration
with the same hash.
"""

import copy
from dataclasses import dataclass
import hashlib
import json
import os
from pathlib import Path

import jsonschema

from .magnetostatics import TIP_MAGNETIZATION

SCHEMA_VERSION = 1
CONFIG_DIR_ENV = "CANTILEVER_ATOMS_CONFIG_DIR"
BUNDLED_DIR = Path(__file__).resolve().parent / "configs"


class ConfigError(ValueError):
    """Malformed or invalid configuration; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_POS_OR_NULL = {"anyOf": [_POS, {"type": "null"}]}


def _obj(props):
    return {"type": "object", "additionalProperties": False, "properties": props}


def _scenario():
    return _obj({
        "temperature_K": _NONNEG,
        "Q": _POS,
        "bandwidth_Hz": _POS,
        "spin_count": {"type": "integer", "minimum": 1},
    })


SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "description": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "atom_count": {"type": "integer", "minimum": 1},
        "temperature_uK": _NONNEG,
        "duration_ms": _POS,
        "dt_us": _POS,
        "output_interval_ms": _POS,
        "output_path": {"type": ["string", "null"]},
        "threads": {"anyOf": [{"type": "integer", "minimum": 1}, {"type": "null"}]},
        "exact_fields": {"type": "boolean"},
        "constants": _obj({"gamma_Rb_Hz_per_T": _POS}),
        "magnet": _obj({
            "dims_um": {"type": "array", "items": _POS, "minItems": 3, "maxItems": 3},
            "moment_J_per_T": _POS_OR_NULL,
            "magnetization_A_per_m": {"anyOf": [_NONNEG, {"type": "null"}]},
            "density_kg_per_m3": _POS,
        }),
        "cantilever": _obj({
            "length_um": _POS,
            "width_um": _POS,
            "thickness_um": _POS,
            "youngs_modulus_GPa": _POS,
            "density_kg_per_m3": _POS,
            "Q": _POS,
            "f0_measured_kHz": _POS_OR_NULL,
            "linewidth_kHz": _POS_OR_NULL,
        }),
        "drive": _obj({
            "V_dc_V": _NONNEG,
            "V_ac_V": _NONNEG,
            "gap_um": _POS,
            "area_um2": _POS_OR_NULL,
            "area_fraction": _POS,
            "drive_frequency_kHz": _POS,
        }),
        "trap": _obj({
            "standoff_um": _POS,
            "standoff_reference": {"enum": ["face", "center"]},
            "quad_gradient_T_per_m": {"anyOf": [_NONNEG, {"type": "null"}]},
            "trap_frequency_Hz": _POS_OR_NULL,
            "field_floor_uT": _POS,
            "g_F": _POS,
        }),
        "dynamics": _obj({
            "loss_mode": {"enum": ["ladder", "immediate"]},
            "coupling": {"enum": ["tip", "local"]},
            "zeeman_factor": _POS,
            "background_lifetime_ms": _POS_OR_NULL,
            "table_step_nm": _POS,
        }),
        "sweep": _obj({
            "center_kHz": _POS,
            "span_kHz": _POS,
            "points": {"type": "integer", "minimum": 1},
            "interaction_time_ms": _POS,
        }),
        "detection": _obj({
            "beam_um": {"type": "array", "items": _POS, "minItems": 3, "maxItems": 3},
            "magnet_um": {"type": "array", "items": _POS, "minItems": 3, "maxItems": 3},
            "magnetization_A_per_m": _NONNEG,
            "youngs_modulus_GPa": _POS,
            "density_kg_per_m3": _POS,
            "f0_kHz": _POS,
            "z_min_um": _POS,
            "z_max_um": _POS,
            "z_points": {"type": "integer", "minimum": 2},
            "room": _scenario(),
            "cryo": _scenario(),
            "criterion_z_um": _POS,
        }),
    },
}

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "description": "",
    "seed": 42,
    "atom_count": 10000,
    "temperature_uK": 100.0,
    "duration_ms": 70.0,
    "dt_us": 0.1,
    "output_interval_ms": 1.0,
    "output_path": None,
    "threads": None,
    "exact_fields": False,
    "constants": {"gamma_Rb_Hz_per_T": 7e9},
    "magnet": {"dims_um": [85.0, 60.0, 9.0], "moment_J_per_T": 2e-9, "magnetization_A_per_m": None,
               "density_kg_per_m3": 8000.0},
    "cantilever": {"length_um": 130.0, "width_um": 60.0, "thickness_um": 25.0, "youngs_modulus_GPa": 169.0,
                   "density_kg_per_m3": 2330.0, "Q": 1e4, "f0_measured_kHz": 1057.7, "linewidth_kHz": 0.67},
    "drive": {"V_dc_V": 40.0, "V_ac_V": 10.0, "gap_um": 9.0, "area_um2": None, "area_fraction": 1.0,
              "drive_frequency_kHz": 1057.7},
    "trap": {"standoff_um": 100.0, "standoff_reference": "face", "quad_gradient_T_per_m": None,
             "trap_frequency_Hz": 1000.0, "field_floor_uT": 1.0, "g_F": 0.5},
    "dynamics": {"loss_mode": "immediate", "coupling": "tip", "zeeman_factor": 1.0,
                 "background_lifetime_ms": 184.0, "table_step_nm": 20.0},
    "sweep": {"center_kHz": 1057.7, "span_kHz": 4.2, "points": 15, "interaction_time_ms": 11.0},
    "detection": {"beam_um": [50.0, 1.1, 0.2], "magnet_um": [1.1, 0.9, 0.7], "magnetization_A_per_m": TIP_MAGNETIZATION,
                  "youngs_modulus_GPa": 280.0, "density_kg_per_m3": 3000.0, "f0_kHz": 70.0,
                  "z_min_um": 0.6, "z_max_um": 3.0, "z_points": 241,
                  "room": {"temperature_K": 300.0, "Q": 1e5, "bandwidth_Hz": 1.0, "spin_count": 80},
                  "cryo": {"temperature_K": 2.0, "Q": 3e5, "bandwidth_Hz": 0.1, "spin_count": 1000},
                  "criterion_z_um": 1.3},
}


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _field_name(err):
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        parts.append(extra[0] if extra else "?")
    elif err.validator == "required":
        parts.append(err.message.split("'")[1])
    return ".".join(parts) or "<root>"


# keys that affect neither results nor their provenance are left out of the hash
UNHASHED_KEYS = ("threads", "output_path", "description")


def _canonical(data):
    return json.dumps(data, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _hash(data):
    core = {k: v for k, v in data.items() if k not in UNHASHED_KEYS}
    return hashlib.sha256(_canonical(core).encode()).hexdigest()


@dataclass(frozen=True)
class RunConfig:
    """A validated configuration document (read-only by convention)."""

    data: dict
    config_hash: str
    source: str = None

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.config_hash == other.config_hash

    def __hash__(self):
        return hash(self.config_hash)

    def section(self, name):
        return self.data[name]

    @property
    def seed(self):
        return int(self.data["seed"])

    @property
    def atom_count(self):
        return int(self.data["atom_count"])

    @property
    def temperature(self):
        return self.data["temperature_uK"] * 1e-6

    @property
    def duration(self):
        return self.data["duration_ms"] * 1e-3

    @property
    def dt(self):
        return self.data["dt_us"] * 1e-6

    @property
    def output_interval(self):
        return self.data["output_interval_ms"] * 1e-3

    @property
    def output_path(self):
        return self.data["output_path"]

    def with_overrides(self, **changes):
        """New config with top-level or dotted keys replaced, e.g. ``{"drive.V_ac_V": 8}``."""
        doc = copy.deepcopy(self.data)
        for key, value in changes.items():
            node = doc
            *head, last = key.split(".")
            for h in head:
                node = node[h]
            node[last] = value
        return parse_config(doc, source=self.source)


def parse_config(doc, source=None):
    """Validate a config mapping and fill in defaults."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(err.message, _field_name(err))
    data = _merge(DEFAULTS, doc)
    # an explicit choice of one alternative clears the other's default
    for sec, given, other in (("magnet", "magnetization_A_per_m", "moment_J_per_T"),
                              ("trap", "quad_gradient_T_per_m", "trap_frequency_Hz")):
        user = doc.get(sec, {})
        if given in user and other not in user:
            data[sec][other] = None
    if data["duration_ms"] * 1e3 < data["dt_us"]:
        raise ConfigError("duration must be at least one time step", "duration_ms")
    trap = data["trap"]
    if trap["quad_gradient_T_per_m"] is not None and trap["trap_frequency_Hz"] is not None:
        raise ConfigError("give quad_gradient_T_per_m or trap_frequency_Hz, not both", "trap.trap_frequency_Hz")
    magnet = data["magnet"]
    if magnet["moment_J_per_T"] is not None and magnet["magnetization_A_per_m"] is not None:
        raise ConfigError("give moment_J_per_T or magnetization_A_per_m, not both", "magnet.magnetization_A_per_m")
    if magnet["moment_J_per_T"] is None and magnet["magnetization_A_per_m"] is None:
        raise ConfigError("one of moment_J_per_T or magnetization_A_per_m is required", "magnet.moment_J_per_T")
    det = data["detection"]
    if det["z_max_um"] <= det["z_min_um"]:
        raise ConfigError("z_max_um must exceed z_min_um", "detection.z_max_um")
    return RunConfig(data, _hash(data), source)


def resolve_config_path(name):
    """``name`` as given if it exists, else under $CANTILEVER_ATOMS_CONFIG_DIR, else bundled."""
    p = Path(name)
    if p.exists():
        return p
    env = os.environ.get(CONFIG_DIR_ENV)
    for base in ([Path(env)] if env else []) + [BUNDLED_DIR]:
        if (base / name).exists():
            return base / name
    raise ConfigError(f"configuration file not found: {name}")


def load_config(path):
    p = resolve_config_path(path)
    text = p.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return parse_config(doc, source=str(p))


def dump_config(cfg):
    """Pretty JSON text of the full (defaults-filled) configuration."""
    return json.dumps(cfg.data, indent=2, sort_keys=True) + "\n"


def bundled_configs():
    return sorted(p.name for p in BUNDLED_DIR.glob("*.json"))


# ---------------------------------------------------------------------------
# builders: SI physics objects from a config


def build_constants(cfg):
    from .constants import CONSTANTS

    return CONSTANTS.with_gamma(cfg.data["constants"]["gamma_Rb_Hz_per_T"])


def build_magnet(cfg):
    from .magnetostatics import Magnet

    m = cfg.data["magnet"]
    along, width, thick = (d * 1e-6 for d in m["dims_um"])
    return Magnet.from_dimensions((width, thick, along), magnetization=m["magnetization_A_per_m"],
                                  moment=m["moment_J_per_T"])


def build_cantilever(cfg):
    from .cantilever import Beam, LoadedCantilever

    c = cfg.data["cantilever"]
    beam = Beam(c["length_um"] * 1e-6, c["width_um"] * 1e-6, c["thickness_um"] * 1e-6,
                c["youngs_modulus_GPa"] * 1e9, c["density_kg_per_m3"])
    f0 = c["f0_measured_kHz"] * 1e3 if c["f0_measured_kHz"] is not None else None
    lw = c["linewidth_kHz"] * 1e3 if c["linewidth_kHz"] is not None else None
    return LoadedCantilever(beam, build_magnet(cfg), cfg.data["magnet"]["density_kg_per_m3"], c["Q"], f0, lw)


def build_drive(cfg, V_ac=None, frequency=None):
    from .cantilever import DriveConfig

    d = cfg.data["drive"]
    return DriveConfig(d["V_dc_V"], d["V_ac_V"] if V_ac is None else V_ac, d["gap_um"] * 1e-6,
                       d["area_um2"] * 1e-12 if d["area_um2"] is not None else None, d["area_fraction"],
                       d["drive_frequency_kHz"] * 1e3 if frequency is None else frequency)


def quad_gradient(cfg):
    """External quadrupole gradient (T/m), calibrated when a trap frequency is given."""
    t = cfg.data["trap"]
    if t["trap_frequency_Hz"] is None:
        return t["quad_gradient_T_per_m"] or 0.0
    from .montecarlo import calibrate_quad_gradient

    return calibrate_quad_gradient(build_magnet(cfg), t["standoff_um"] * 1e-6, cfg.temperature,
                                   t["trap_frequency_Hz"], reference=t["standoff_reference"],
                                   field_floor=t["field_floor_uT"] * 1e-6, g_F=t["g_F"],
                                   constants=build_constants(cfg))


def build_trap(cfg):
    """``(TrapConfig, target point)`` for the configured standoff."""
    from .trap import solve_bias

    t = cfg.data["trap"]
    return solve_bias(build_magnet(cfg), t["standoff_um"] * 1e-6, reference=t["standoff_reference"],
                      quad_gradient=quad_gradient(cfg), field_floor=t["field_floor_uT"] * 1e-6,
                      g_F=t["g_F"], constants=build_constants(cfg))


def build_axial_model(cfg, exact=None):
    from . import montecarlo

    trap, _ = build_trap(cfg)
    exact = cfg.data["exact_fields"] if exact is None else exact
    return montecarlo.build_axial_model(trap, cfg.temperature, step=cfg.data["dynamics"]["table_step_nm"] * 1e-9,
                                        exact=exact)


def evolve_options(cfg):
    d = cfg.data["dynamics"]
    bg = d["background_lifetime_ms"]
    return dict(dt=cfg.dt, background_lifetime=bg * 1e-3 if bg is not None else None, loss_mode=d["loss_mode"],
                zeeman_factor=d["zeeman_factor"], coupling=d["coupling"], threads=cfg.data["threads"])


def detection_scenarios(cfg):
    """``(room, cryo)`` detection scenarios."""
    import numpy as np

    from .cantilever import Beam, LoadedCantilever
    from .detection import DetectionScenario
    from .magnetostatics import Magnet

    d = cfg.data["detection"]
    along, width, thick = (x * 1e-6 for x in d["magnet_um"])
    magnet = Magnet.from_dimensions((width, thick, along), magnetization=d["magnetization_A_per_m"])
    beam = Beam(*(x * 1e-6 for x in d["beam_um"]), youngs_modulus=d["youngs_modulus_GPa"] * 1e9,
                density=d["density_kg_per_m3"])
    z = np.linspace(d["z_min_um"] * 1e-6, d["z_max_um"] * 1e-6, d["z_points"])
    out = []
    for key in ("room", "cryo"):
        s = d[key]
        c = LoadedCantilever(beam, magnet, cfg.data["magnet"]["density_kg_per_m3"], Q=s["Q"],
                             f0_measured=d["f0_kHz"] * 1e3)
        out.append(DetectionScenario(c, s["temperature_K"], s["bandwidth_Hz"], s["spin_count"], z))
    return tuple(out)
