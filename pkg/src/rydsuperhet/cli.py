"""Command-line entry point: ``rydsuperhet <subcommand> [options]``.

Exit status: 0 success, 1 oracle deviation above tolerance, 2 invalid input
(nothing written), 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, config, kernels
from .calibration import (BeamGeometry, MWGeometry, beta_from_od, field_from_rabi,
                          fit_at_splitting, phase_mismatch, rabi_from_power)
from .constants import CONSTANTS_VERSION, TWO_PI, mhz, to_mhz
from .doppler import DopplerSpec
from .errors import ConfigError, NumericalError, ValidationError
from .estimation import (SensitivityInput, default_guess, estimate_sensitivity, fit_eit,
                         optimize_local_mw, sweep_response)
from .model import AtomSystem, DriveConfig
from .observables import (DetectorModel, bandwidth_minus3db, eit_spectrum, gain_peak,
                          response_curve, sideband_curves)
from .oracle import oracle_check


EXIT_OK, EXIT_ORACLE, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2, 3


class Table:
    """Column-ordered numeric table destined for CSV."""

    def __init__(self, columns, rows):
        self.columns = list(columns)
        self.rows = rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(x) for x in row])
        return buf.getvalue()

    def to_json(self):
        return {c: [_plain(r[i]) for r in self.rows] for i, c in enumerate(self.columns)}


def _fmt(x):
    # repr gives the shortest string that round-trips
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _plain(x):
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


# ---------------------------------------------------------------- building

def build_atom(cfg) -> AtomSystem:
    a = cfg["atom"]
    return AtomSystem(
        gamma2=mhz(a["gamma2"]), gamma_r=mhz(a["gamma_r"]), dephasing=mhz(a["dephasing"]),
        dipole_probe=a["dipole_probe"], dipole_coupling=a["dipole_coupling"],
        dipole_mw=a["dipole_mw"], lambda_probe=a["lambda_probe"] * 1e-9,
        lambda_coupling=a["lambda_coupling"] * 1e-9, mass=a["mass"],
        temperature=a["temperature"],
    )


def optical_rabi(cfg, name, dipole):
    d = cfg["drive"]
    if f"{name}_power" in d:
        beam = BeamGeometry(d[f"{name}_power"] * 1e-3, d[f"{name}_waist"] * 1e-6)
        return rabi_from_power(beam, dipole)
    return mhz(d[f"{name}_rabi"])


def mw_rabi(cfg, name):
    d = cfg["drive"]
    if f"{name}_power" in d:
        return mhz(d[f"alpha_{name}"] * math.sqrt(d[f"{name}_power"]))
    return mhz(d[f"{name}_rabi"])


def build_drive(cfg, atom: AtomSystem) -> DriveConfig:
    d = cfg["drive"]
    return DriveConfig(
        omega_p=optical_rabi(cfg, "probe", atom.dipole_probe),
        omega_c=optical_rabi(cfg, "coupling", atom.dipole_coupling),
        omega_l=mw_rabi(cfg, "local"),
        omega_s=mw_rabi(cfg, "signal"),
        delta_p=mhz(d["delta_p"]), delta_c=mhz(d["delta_c"]),
        delta_l=mhz(d["delta_l"]), delta_s=mhz(d["delta_s"]),
    )


def build_spec(cfg, atom) -> DopplerSpec:
    dp = cfg["doppler"]
    sign = 1 if dp["geometry"] == "counter" else -1
    return DopplerSpec.from_atom(atom, nodes=dp["nodes"], enabled=dp["enabled"],
                                 coupling_sign=sign)


def frequency_grid(task):
    lo, hi, n = task["freq_min"], task["freq_max"], task["points"]
    if n < 1:
        raise ConfigError("must be >= 1", field="task.points")
    if not 0 < lo < hi:
        raise ConfigError("need 0 < freq_min < freq_max", field="task.freq_min")
    grid = np.geomspace(lo, hi, n) if task["spacing"] == "log" else np.linspace(lo, hi, n)
    return mhz(grid)


def detector_of(task):
    f = task["detector_f3db"]
    return DetectorModel(f * 1e6) if f > 0 else None


def _normalize_at(task):
    return mhz(task["normalize_at"]) if task["normalize_at"] > 0 else None


def _with_local_opt(cfg, atom, drive, spec, result):
    task = cfg["task"]
    if task["optimize_local"]:
        omega_l, peak = optimize_local_mw(atom, drive, spec, mhz(task["optimize_at"]),
                                          tuple(mhz(b) for b in task["bracket"]))
        drive = drive.replace(omega_l=omega_l)
        result["omega_l_opt_MHz"] = to_mhz(omega_l)
        result["peak_amplitude"] = peak
    return drive


def _curve_table(curve):
    db = curve.db()
    return Table(["frequency_Hz", "amplitude", "amplitude_dB"],
                 list(zip(curve.frequency_hz, curve.amplitude, db)))


# ------------------------------------------------------------ subcommands

def _response(cfg, ctx):
    atom, drive, spec = ctx
    task = cfg["task"]
    result = {}
    drive = _with_local_opt(cfg, atom, drive, spec, result)
    curve = response_curve(atom, drive, spec, frequency_grid(task), detector=detector_of(task),
                           normalize_at=_normalize_at(task))
    return result, curve


def cmd_response(cfg, ctx):
    result, curve = _response(cfg, ctx)
    peak = gain_peak(curve)
    result["gain_peak"] = None if peak is None else {"frequency_Hz": peak[0], "gain_dB": peak[1]}
    return result, _curve_table(curve)


def cmd_bandwidth(cfg, ctx):
    if _normalize_at(cfg["task"]) is None:
        raise ConfigError("bandwidth needs a normalisation point", field="task.normalize_at")
    result, curve = _response(cfg, ctx)
    result["bandwidth_Hz"] = bandwidth_minus3db(curve)
    return result, _curve_table(curve)


def cmd_sidebands(cfg, ctx):
    atom, drive, spec = ctx
    result = {}
    drive = _with_local_opt(cfg, atom, drive, spec, result)
    grid = frequency_grid(cfg["task"])
    plus, minus = sideband_curves(atom, drive, spec, grid)
    return result, Table(["frequency_Hz", "plus", "minus"], list(zip(grid / TWO_PI, plus, minus)))


def _dc_grid(task):
    if task["dc_points"] < 2 or not task["dc_min"] < task["dc_max"]:
        raise ConfigError("need dc_points >= 2 and dc_min < dc_max", field="task.dc_points")
    return mhz(np.linspace(task["dc_min"], task["dc_max"], task["dc_points"]))


def cmd_eit(cfg, ctx):
    atom, drive, spec = ctx
    task = cfg["task"]
    beta = beta_from_od(atom, spec, task["od"])
    spectrum = eit_spectrum(atom, drive.replace(omega_s=0.0), spec, _dc_grid(task), beta, task["od"])
    table = Table(["delta_c_MHz", "ln_transmission", "transmission"],
                  list(zip(to_mhz(spectrum.delta_c), spectrum.ln_transmission,
                           spectrum.transmission)))
    return {"beta": beta, "od": task["od"]}, table


def _read_pairs(data, field):
    """Two-column numeric data from an inline list or a CSV path with a header."""
    if isinstance(data, str):
        try:
            arr = np.loadtxt(data, delimiter=",", skiprows=1, ndmin=2)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read {data}: {exc}", field=field) from exc
    else:
        try:
            arr = np.asarray(data, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ConfigError("expected a list of number pairs", field=field) from exc
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ConfigError("expected two columns", field=field)
    return arr


def cmd_fit_eit(cfg, ctx):
    atom, drive, spec = ctx
    task = cfg["task"]
    if "data" not in task:
        raise ConfigError("fit-eit needs task.data (CSV path or inline pairs)", field="task.data")
    arr = _read_pairs(task["data"], "task.data")
    data = np.column_stack([mhz(arr[:, 0]), arr[:, 1]])
    if "coupling_power" in cfg["drive"]:
        gamma0, omega_c0 = default_guess(cfg["drive"]["coupling_power"] * 1e-3, atom,
                                         cfg["drive"]["coupling_waist"] * 1e-6)
    else:
        gamma0, omega_c0 = mhz(2.0), drive.omega_c
    gamma0 = mhz(task["gamma_guess"]) if "gamma_guess" in task else gamma0
    omega_c0 = mhz(task["omega_c_guess"]) if "omega_c_guess" in task else omega_c0
    fit = fit_eit(data, atom, spec, (gamma0, omega_c0), drive=drive)
    return fit.as_dict(), None


def cmd_optimize_local(cfg, ctx):
    atom, drive, spec = ctx
    task = cfg["task"]
    omega_l, peak = optimize_local_mw(atom, drive, spec, mhz(task["optimize_at"]),
                                      tuple(mhz(b) for b in task["bracket"]))
    return {"omega_l_opt_MHz": to_mhz(omega_l), "peak_amplitude": peak}, None


def cmd_sweep(cfg, ctx):
    atom, drive, spec = ctx
    task = cfg["task"]
    if "sweep" not in task:
        raise ConfigError("sweep needs task.sweep = [[gamma_MHz, omega_c_MHz], ...]",
                          field="task.sweep")
    pairs = _read_pairs(task["sweep"], "task.sweep")
    points = sweep_response(atom, spec, [(mhz(g), mhz(c)) for g, c in pairs],
                            frequency_grid(task), drive=drive,
                            optimize_at=mhz(task["optimize_at"]),
                            bracket=tuple(mhz(b) for b in task["bracket"]),
                            detector=detector_of(task), normalize_at=_normalize_at(task),
                            workers=task["workers"])
    rows, summary = [], []
    for p in points:
        g, c, ol = to_mhz(p.gamma), to_mhz(p.omega_c), to_mhz(p.omega_l)
        for f, a, db in zip(p.curve.frequency_hz, p.curve.amplitude, p.curve.db()):
            rows.append((g, c, ol, f, a, db))
        entry = {"gamma_MHz": g, "omega_c_MHz": c, "omega_l_opt_MHz": ol}
        if p.curve.normalized_at is not None:
            entry["bandwidth_Hz"] = bandwidth_minus3db(p.curve)
        summary.append(entry)
    table = Table(["gamma_MHz", "omega_c_MHz", "omega_l_MHz", "frequency_Hz", "amplitude",
                   "amplitude_dB"], rows)
    return {"points": summary}, table


def cmd_calibrate_at(cfg, ctx):
    atom = ctx[0]
    task = cfg["task"]
    if "data" not in task:
        raise ConfigError("calibrate-at needs task.data = [[power_mW, splitting_MHz], ...]",
                          field="task.data")
    arr = _read_pairs(task["data"], "task.data")
    cal = fit_at_splitting(np.column_stack([arr[:, 0], arr[:, 1] * 1e6]), atom.dipole_mw)
    return {
        "alpha_MHz_per_sqrt_mW": cal.alpha / 1e6,
        "alpha_stderr_MHz_per_sqrt_mW": cal.alpha_stderr / 1e6,
        "field_mV_per_cm_per_sqrt_mW": cal.field_per_sqrt_power * 10,
    }, None


def cmd_rabi(cfg, ctx):
    atom, drive, _ = ctx
    out = {
        "probe_rabi_MHz": to_mhz(drive.omega_p),
        "coupling_rabi_MHz": to_mhz(drive.omega_c),
        "local_rabi_MHz": to_mhz(drive.omega_l),
        "signal_rabi_MHz": to_mhz(drive.omega_s),
        "local_field_mV_per_cm": field_from_rabi(drive.omega_l, atom.dipole_mw) * 10,
        "signal_field_mV_per_cm": field_from_rabi(drive.omega_s, atom.dipole_mw) * 10,
    }
    task = cfg["task"]
    if "cell_length" in task:
        geom = MWGeometry(math.radians(task.get("local_angle", 0.0)),
                          math.radians(task.get("signal_angle", 0.0)))
        out["phase_mismatch"] = phase_mismatch(geom, drive.delta_s, task["cell_length"] * 1e-6)
    return out, None


def cmd_sensitivity(cfg, ctx):
    task = cfg["task"]
    for key in ("slope", "noise_density"):
        if key not in task:
            raise ConfigError(f"sensitivity needs task.{key}", field=f"task.{key}")
    if _normalize_at(task) is None:
        raise ConfigError("sensitivity needs a normalisation point", field="task.normalize_at")
    result, curve = _response(cfg, ctx)
    delta_s = ctx[1].delta_s
    inp = SensitivityInput(float(task["slope"]), float(task["noise_density"]), delta_s, curve)
    result["sensitivity_V_per_m_per_sqrt_Hz"] = estimate_sensitivity(inp)
    result["normalized_response"] = curve.value_at(delta_s)
    return result, None


def cmd_oracle_check(cfg, ctx):
    task = cfg["task"]
    if task["oracle_points"] < 1:
        raise ConfigError("must be >= 1", field="task.oracle_points")
    report = oracle_check(task["oracle_points"], task["seed"], task["oracle_order"],
                          task["max_signal_ratio"], task["min_signal_ratio"])
    out = report.as_dict()
    out.pop("elapsed_s")
    out["tolerance"] = task["oracle_tolerance"]
    out["max_pairwise_deviation"] = report.max_deviation()
    out["passed"] = report.max_deviation() <= task["oracle_tolerance"]
    rows = [(i, *(d[p] for p in ("closed_vs_truncated", "truncated_vs_time", "closed_vs_time",
                                 "closed_vs_order1"))) for i, d in enumerate(report.per_point)]
    table = Table(["point", "closed_vs_truncated", "truncated_vs_time", "closed_vs_time",
                   "closed_vs_order1"], rows)
    return out, table


COMMANDS = {
    "response": (cmd_response, "normalised beat-amplitude response curve"),
    "bandwidth": (cmd_bandwidth, "-3 dB instantaneous bandwidth"),
    "sidebands": (cmd_sidebands, "|rho12^+1| and |rho12^-1| versus beat frequency"),
    "eit": (cmd_eit, "probe ln-transmission versus coupling detuning"),
    "fit-eit": (cmd_fit_eit, "fit (gamma, Omega_c) to an EIT spectrum"),
    "optimize-local": (cmd_optimize_local, "local-MW Rabi frequency maximising the response"),
    "sweep": (cmd_sweep, "response curves over (gamma, Omega_c) pairs"),
    "calibrate-at": (cmd_calibrate_at, "AT splitting fit and field calibration"),
    "rabi": (cmd_rabi, "Rabi frequencies and fields from the drive section"),
    "sensitivity": (cmd_sensitivity, "noise-limited field sensitivity"),
    "oracle-check": (cmd_oracle_check, "cross-check the three harmonic solvers"),
}


# ------------------------------------------------------------------ driver

def build_parser():
    parser = argparse.ArgumentParser(prog="rydsuperhet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="TOML run configuration")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override, e.g. drive.coupling_rabi=17.12MHz (repeatable)")
        p.add_argument("--output", type=Path, help="output file (stdout if omitted)")
        p.add_argument("--format", choices=("csv", "json"), help="output format")
        p.add_argument("--seed", type=int, help="random seed (task.seed)")
    return parser


def resolve_config(args):
    raw = config.load_file(args.config) if args.config else {}
    for assignment in args.set:
        config.apply_override(raw, assignment)
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer", field="task.seed")
        raw.setdefault("task", {})["seed"] = args.seed
    if args.format:
        raw.setdefault("output", {})["format"] = args.format
    if args.output:
        raw.setdefault("output", {})["path"] = str(args.output)
    return config.resolve(raw)


def _render(fmt, result, table):
    if fmt == "csv" and table is not None:
        return table.to_csv()
    payload = {"result": _plain(result)}
    if table is not None:
        payload["table"] = table.to_json()
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def run(command: str, cfg: dict):
    """Execute one subcommand on a resolved config; returns ``(result, table)``."""
    atom = build_atom(cfg)
    drive = build_drive(cfg, atom)
    spec = build_spec(cfg, atom)
    return COMMANDS[command][0](cfg, (atom, drive, spec))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    start = time.perf_counter()
    try:
        cfg = resolve_config(args)
        result, table = run(args.command, cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    elapsed = time.perf_counter() - start

    fmt = cfg["output"]["format"]
    text = _render(fmt, result, table)
    path = cfg["output"].get("path")
    if path:
        path = Path(path)
        path.write_text(text, encoding="utf-8")
        meta = {
            "command": args.command,
            "version": __version__,
            "config": _plain(cfg),
            "constants": CONSTANTS_VERSION,
            "kernel_backend": kernels.BACKEND,
            "elapsed_s": elapsed,
            "result": _plain(result),
        }
        path.with_name(path.name + ".meta.json").write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text)
        if table is not None and fmt == "csv" and result:
            print(json.dumps(_plain(result), sort_keys=True), file=sys.stderr)

    if args.command == "oracle-check" and not result["passed"]:
        print(f"oracle deviation {result['max_pairwise_deviation']:.3g} exceeds tolerance "
              f"{result['tolerance']:g}", file=sys.stderr)
        return EXIT_ORACLE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
