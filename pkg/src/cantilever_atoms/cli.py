"""``cantilever-atoms`` command line.

Exit codes: 0 success, 1 invalid configuration or input data, 2 runtime or
numerical failure, 64 usage error (unknown subcommand or bad arguments).
Config paths that do not exist as given are looked up in the directory
named by ``CANTILEVER_ATOMS_CONFIG_DIR`` and then among the bundled configs.
"""

import argparse
import json
import math
import sys
import warnings

from . import config as cfgmod
from . import workflows
from .analysis import FitError
from .io import format_csv, read_csv

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2
EXIT_USAGE = 64

DEFAULT_CONFIGS = {
    "cantilever-props": "paper_fig1.json",
    "field-map": "paper_fig1.json",
    "trap-profile": "paper_fig3.json",
    "decay-curve": "paper_fig3.json",
    "loss-spectrum": "paper_fig2.json",
    "detection-limits": "paper_fig4.json",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _add_common(p, name, simulation=False):
    p.add_argument("--config", default=DEFAULT_CONFIGS[name],
                   help=f"JSON config path or bundled name (default {DEFAULT_CONFIGS[name]})")
    p.add_argument("--output", "-o", help="output file (default: stdout)")
    p.add_argument("--svg", help="also write a static SVG plot to this path")
    p.add_argument("--verbose", "-v", action="store_true")
    if simulation:
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--exact-fields", action="store_true",
                       help="evaluate the analytic prism field instead of the interpolation table")
        p.add_argument("--threads", type=int, help="worker threads (results do not depend on it)")
        p.add_argument("--vac", type=float, help="override the AC drive voltage (V)")
        p.add_argument("--atoms", type=int, help="override atom_count")


def build_parser():
    parser = _Parser(prog="cantilever-atoms", description="Magnetic cantilever / cold-atom simulator.")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    p = sub.add_parser("cantilever-props", help="spring constant, resonance and drive amplitude as JSON")
    _add_common(p, "cantilever-props")
    p = sub.add_parser("field-map", help="tip-magnet field on a plane through its axis (CSV)")
    _add_common(p, "field-map")
    p.add_argument("--nx", type=int, default=31)
    p.add_argument("--nz", type=int, default=31)
    p = sub.add_parser("trap-profile", help="axial |B|, Larmor frequency and Zeeman energies (CSV)")
    _add_common(p, "trap-profile")
    p = sub.add_parser("decay-curve", help="Monte Carlo trapped fraction versus time (CSV)")
    _add_common(p, "decay-curve", simulation=True)
    p = sub.add_parser("loss-spectrum", help="Monte Carlo remaining fraction versus drive frequency (CSV)")
    _add_common(p, "loss-spectrum", simulation=True)
    p = sub.add_parser("detection-limits", help="force floor and spin forces versus separation (CSV + JSON)")
    _add_common(p, "detection-limits")
    p.add_argument("--summary", help="write the crossing summary JSON here (default: stderr)")
    p = sub.add_parser("fit", help="fit an exponential decay or Lorentzian to a CSV (JSON)")
    p.add_argument("csv", help="input CSV with columns x, y and optionally sigma")
    p.add_argument("--model", choices=["exponential", "lorentzian"], default="exponential")
    p.add_argument("--fixed-offset", type=float, help="fix the offset C instead of fitting it")
    p.add_argument("--unweighted", action="store_true", help="ignore a sigma column")
    p.add_argument("--config", help="warn if the CSV was produced from a different config")
    p.add_argument("--output", "-o")
    return parser


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _emit(text, path):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(args):
    cfg = cfgmod.load_config(args.config)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "exact_fields", False):
        changes["exact_fields"] = True
    if getattr(args, "threads", None) is not None:
        changes["threads"] = args.threads
    if getattr(args, "vac", None) is not None:
        changes["drive.V_ac_V"] = args.vac
    if getattr(args, "atoms", None) is not None:
        changes["atom_count"] = args.atoms
    return cfg.with_overrides(**changes) if changes else cfg


def _output_path(args, cfg):
    return args.output or cfg.output_path


def _run(args):
    from .svg import line_plot

    if args.command == "fit":
        meta, header, data = read_csv(args.csv)
        if data.shape[1] < 2:
            raise FitError("CSV needs at least two columns")
        sigma = data[:, 2] if data.shape[1] > 2 and not args.unweighted else None
        if args.config:
            cfg = cfgmod.load_config(args.config)
            if meta.get("config_hash") not in (None, cfg.config_hash):
                warnings.warn("CSV config hash differs from the given config", stacklevel=1)
        res = workflows.fit_table(data[:, 0], data[:, 1], sigma, args.model, args.fixed_offset)
        out = res.to_dict()
        out["source_config_hash"] = meta.get("config_hash")
        _emit(json.dumps(_clean(out), indent=2, sort_keys=True) + "\n", args.output)
        return EXIT_OK if res.converged else EXIT_RUNTIME

    cfg = _load(args)
    out_path = _output_path(args, cfg)
    if args.command == "cantilever-props":
        _emit(json.dumps(_clean(workflows.cantilever_props(cfg)), indent=2, sort_keys=True) + "\n", out_path)
        return EXIT_OK
    if args.command == "field-map":
        header, rows, meta = workflows.field_map(cfg, args.nx, args.nz)
        _emit(format_csv(header, rows, meta), out_path)
        return EXIT_OK
    if args.command == "trap-profile":
        header, rows, meta = workflows.trap_profile(cfg)
        _emit(format_csv(header, rows, meta), out_path)
        if args.svg:
            line_plot(args.svg, rows[:, 0] * 1e6, [("|B| (uT)", rows[:, 1] * 1e6)],
                      "distance from tip face (um)", "|B| (uT)")
        return EXIT_OK
    if args.command == "decay-curve":
        res, _ = workflows.decay_curve(cfg)
        header, rows = workflows.decay_table(res)
        meta = workflows.run_metadata(cfg, V_ac=res.metadata["V_ac"],
                                      drive_frequency=res.metadata["drive_frequency"])
        _emit(format_csv(header, rows, meta), out_path)
        if args.svg:
            line_plot(args.svg, rows[:, 0] * 1e3, [("trapped fraction", rows[:, 1])], "t (ms)", "trapped fraction")
        return EXIT_OK
    if args.command == "loss-spectrum":
        spec, _ = workflows.loss_spectrum(cfg)
        header, rows = workflows.spectrum_table(spec)
        meta = workflows.run_metadata(cfg, V_ac=spec.metadata["V_ac"],
                                      interaction_time=spec.metadata["interaction_time"])
        _emit(format_csv(header, rows, meta), out_path)
        if args.svg:
            line_plot(args.svg, rows[:, 0] * 1e-3, [("remaining fraction", rows[:, 1])], "f (kHz)",
                      "remaining fraction")
        return EXIT_OK
    if args.command == "detection-limits":
        header, rows, summary = workflows.detection_limits(cfg)
        _emit(format_csv(header, rows, {"config_hash": cfg.config_hash}), out_path)
        text = json.dumps(_clean(summary), indent=2, sort_keys=True) + "\n"
        if args.summary:
            with open(args.summary, "w") as fh:
                fh.write(text)
        else:
            sys.stderr.write(text)
        if args.svg:
            line_plot(args.svg, rows[:, 0] * 1e6, [(h, rows[:, i + 1]) for i, h in enumerate(header[1:])],
                      "z (um)", "force (N)", logy=True)
        return EXIT_OK
    raise UsageError(f"unknown subcommand {args.command!r}")


def run(argv=None):
    """Parse ``argv`` and execute one subcommand; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage() + "cantilever-atoms: error: a subcommand is required")
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    from .magnetostatics import InsideMagnetError
    from .montecarlo import InstabilityError, SamplingError
    from .spin import ConvergenceError
    from .trap import NoMinimumError

    try:
        return _run(args)
    except (cfgmod.ConfigError, FitError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SamplingError, InstabilityError, NoMinimumError, ConvergenceError, InsideMagnetError,
            ArithmeticError, RuntimeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
