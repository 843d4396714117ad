"""Command-line front end: ``analyze``, ``scan`` and ``simulate``.

Exit status is 2 for an invalid configuration, 1 when an internal
tolerance check fails, 0 otherwise.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings

import numpy as np

from .angular import Polarization, format_momentum, magnetic_numbers, parse_momentum, polarization_from_name
from .darkspace import DecompositionError, dark_counts
from .dynamics import AdiabaticCrossingError, DriftError, PulseSchedule, StepSizeError, compare_adiabatic
from .linalg import ContractError
from .memory import (
    AtomicDensityMatrix,
    PolarizationQubit,
    StorageWarning,
    default_tolerance,
    initial_state,
    scan_initial_states,
    storage_report,
)
from .system import SystemConfig, make_config

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


ZERO_SNAP = 1e-13


def num(x: float) -> float:
    """Round to 12 significant digits (and flush round-off to zero) so reports are stable."""
    x = float(x)
    if abs(x) < ZERO_SNAP:
        return 0.0
    return float(f"{x:.12g}")


def fmt(x: float) -> str:
    return f"{num(x):.12g}"


def fmt_c(re: float, im: float) -> str:
    re, im = num(re), num(im)
    if im == 0.0:
        return fmt(re)
    if re == 0.0:
        return f"{fmt(im)}i"
    return f"{fmt(re)}{'+' if im > 0 else '-'}{fmt(abs(im))}i"


def fmt_m(two_m: int) -> str:
    return str(two_m // 2) if two_m % 2 == 0 else f"{two_m}/2"


# ---------------------------------------------------------------- parsing

def parse_complex(text: str) -> complex:
    try:
        return complex(text.strip().replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise ConfigError(f"cannot parse complex number {text!r}") from exc


def parse_polarization(text: str) -> Polarization:
    """A name (pi, x, y, sigma+, sigma-) or three circular components 'q-1,q0,q+1'."""
    if "," in text:
        parts = text.split(",")
        if len(parts) != 3:
            raise ConfigError(f"polarization {text!r} needs three comma-separated circular components")
        try:
            return Polarization.from_components([parse_complex(p) for p in parts], name=text)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    try:
        return polarization_from_name(text)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_density_file(path: str, two_j: int) -> AtomicDensityMatrix:
    try:
        with open(path) as fh:
            rows = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read density file {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"density file {path}: invalid JSON at line {exc.lineno} column {exc.colno}") from exc
    n = two_j + 1
    if not isinstance(rows, list) or len(rows) != n:
        raise ConfigError(f"density file {path}: expected {n} rows for J={format_momentum(two_j)}")
    m = np.zeros((n, n), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise ConfigError(f"density file {path}: row {i} must hold {n} [re, im] pairs")
        for j, pair in enumerate(row):
            if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(v, (int, float)) for v in pair)):
                raise ConfigError(f"density file {path}: entry ({i}, {j}) must be a [re, im] pair of numbers")
            m[i, j] = complex(pair[0], pair[1])
    try:
        return AtomicDensityMatrix("b", m, f"file:{path}")
    except ValueError as exc:
        raise ConfigError(f"density file {path}: {exc}") from exc


def parse_initial(text: str, two_jb: int) -> AtomicDensityMatrix:
    text = text.strip()
    if text == "mixed":
        return AtomicDensityMatrix.mixed(two_jb)
    if text.startswith("m="):
        raw = text[2:].strip()
        sign = -1 if raw.startswith("-") else 1
        try:
            two_m = sign * parse_momentum(raw.lstrip("+-"))
        except ValueError as exc:
            raise ConfigError(f"cannot parse initial sublevel {text!r}") from exc
        if two_m not in magnetic_numbers(two_jb):
            raise ConfigError(f"m={raw} is not a sublevel of J_b={format_momentum(two_jb)}")
        return AtomicDensityMatrix.pure(two_jb, two_m)
    return load_density_file(text, two_jb)


def build_config(args, drive: str | None = None) -> SystemConfig:
    try:
        return make_config(
            args.ja,
            args.jb,
            args.jc,
            parse_polarization(drive or args.drive[0]),
            parse_polarization(args.l1),
            parse_polarization(args.l2),
            args.delta,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_qubit(args) -> PolarizationQubit:
    try:
        return PolarizationQubit.normalized(parse_complex(args.xi1), parse_complex(args.xi2))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------- output

def cplx_pair(z: complex) -> list[float]:
    return [num(z.real), num(z.imag)]


def emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def to_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def to_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------- commands

def analyze_report(args) -> dict:
    if len(args.drive) > 1:
        raise ConfigError("analyze takes a single --drive")
    cfg = build_config(args)
    rho_b = parse_initial(args.initial, cfg.scheme.two_jb)
    qubit = build_qubit(args)
    counts = dark_counts(cfg, args.omega_a, args.omega_b)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StorageWarning)
        rep = storage_report(cfg, rho_b, qubit, default_tolerance())
    stored = None
    if rep.stored_state is not None:
        stored = [
            {"m": fmt_m(m), "re": num(z.real), "im": num(z.imag)}
            for m, z in zip(magnetic_numbers(cfg.scheme.two_ja), rep.stored_state)
        ]
    return {
        "scheme": cfg.scheme.label(),
        "polarizations": {"drive": cfg.l_c.label(), "l1": cfg.l_1.label(), "l2": cfg.l_2.label()},
        "initial": rho_b.description,
        "xi": [cplx_pair(qubit.xi1), cplx_pair(qubit.xi2)],
        "counts": counts.as_dict(),
        "w": [[cplx_pair(z) for z in row] for row in rep.w],
        "faithful": rep.faithful,
        "worst_case_prob": num(rep.worst_case_prob),
        "storage_prob": num(rep.storage_prob),
        "stored_state": stored,
        "leak_weight": num(rep.leak_weight),
    }


def analyze_text(r: dict) -> str:
    lines = [
        f"scheme         {r['scheme']}",
        f"drive          {r['polarizations']['drive']}  (cavity modes {r['polarizations']['l1']}, {r['polarizations']['l2']})",
        f"initial        {r['initial']}",
        "counts         " + "  ".join(f"{k}={v}" for k, v in r["counts"].items()),
        "w              " + "  ".join(fmt_c(*z) for z in r["w"][0]),
        "               " + "  ".join(fmt_c(*z) for z in r["w"][1]),
        f"faithful       {str(r['faithful']).lower()}",
        f"worst case     {fmt(r['worst_case_prob'])}",
        f"storage prob   {fmt(r['storage_prob'])}",
        f"leak weight    {fmt(r['leak_weight'])}",
    ]
    if r["stored_state"] is not None:
        lines.append("stored state   " + "  ".join(f"m={s['m']}: {fmt_c(s['re'], s['im'])}" for s in r["stored_state"]))
    return "\n".join(lines) + "\n"


def cmd_analyze(args) -> int:
    r = analyze_report(args)
    if args.format == "json":
        emit(to_json(r), args.out)
    elif args.format == "csv":
        rows = [["w11", fmt(r["w"][0][0][0])], ["w22", fmt(r["w"][1][1][0])], ["faithful", str(r["faithful"]).lower()],
                ["worst_case_prob", fmt(r["worst_case_prob"])], ["leak_weight", fmt(r["leak_weight"])]]
        emit(to_csv(["field", "value"], rows), args.out)
    else:
        emit(analyze_text(r), args.out)
    return EXIT_OK


SCAN_COLUMNS = ["scheme", "drive", "initial", "w11", "w22", "|w12|", "faithful", "worst_case"]


def scan_rows(args) -> list[list]:
    rows = []
    tol = default_tolerance()
    for drive in args.drive:
        cfg = build_config(args, drive)
        states = None
        if args.initial:
            states = [parse_initial(args.initial, cfg.scheme.two_jb)]
        res = scan_initial_states(cfg, states, tol=tol)
        for row in res.rows:
            rows.append([
                cfg.scheme.label(), cfg.l_c.label(), row.initial,
                fmt(row.w[0, 0].real), fmt(row.w[1, 1].real), fmt(abs(row.w[0, 1])),
                str(row.faithful).lower(), fmt(row.worst_case),
            ])
    return rows


def cmd_scan(args) -> int:
    rows = scan_rows(args)
    if args.format == "json":
        keys = SCAN_COLUMNS
        emit(to_json([dict(zip(keys, r)) for r in rows]), args.out)
    elif args.format == "csv":
        emit(to_csv(SCAN_COLUMNS, rows), args.out)
    else:
        widths = [max(len(str(x)) for x in col) for col in zip(SCAN_COLUMNS, *rows)]
        lines = ["  ".join(str(x).ljust(w) for x, w in zip(r, widths)).rstrip() for r in [SCAN_COLUMNS, *rows]]
        emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


TRAJECTORY_COLUMNS = ["t", "trace", "pop_a", "pop_b", "pop_c", "fidelity_to_adiabatic"]


def cmd_simulate(args) -> int:
    if len(args.drive) > 1:
        raise ConfigError("simulate takes a single --drive")
    cfg = build_config(args)
    rho_b = parse_initial(args.initial, cfg.scheme.two_jb)
    qubit = build_qubit(args)
    try:
        sched = PulseSchedule(
            t1=args.t1, tau=args.tau, t2=args.t2,
            omega_a1=args.omega_a, omega_b1=args.omega_b, omega_a2=args.omega_a, omega_b2=args.omega_b,
            shape=args.shape,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    scale = max(sched.omega_max, abs(cfg.delta))
    dt = args.dt if args.dt is not None else (0.02 / scale if scale > 0 else 0.02)
    rho0 = initial_state(cfg, rho_b, qubit)
    try:
        cmp_ = compare_adiabatic(cfg, sched, rho0, dt, samples_per_stage=args.samples)
    except StepSizeError as exc:
        raise ConfigError(str(exc)) from exc
    res = cmp_.evolution
    traj = [
        [fmt(s.time), fmt(s.trace), fmt(s.pop_a), fmt(s.pop_b), fmt(s.pop_c), fmt(f)]
        for s, f in zip(res.samples, cmp_.fidelity_trace)
    ]
    summary = {
        "scheme": cfg.scheme.label(),
        "drive": cfg.l_c.label(),
        "initial": rho_b.description,
        "schedule": {"t1": num(sched.t1), "tau": num(sched.tau), "t2": num(sched.t2),
                     "omega_a": num(args.omega_a), "omega_b": num(args.omega_b), "shape": sched.shape},
        "dt": num(res.step_sizes[0]),
        "steps": res.steps,
        "fidelity": num(cmp_.fidelity),
        "trace_distance": num(cmp_.trace_distance),
        "leak_weight": num(cmp_.leak_weight),
        "max_trace_drift": num(res.max_trace_drift),
        "max_hermiticity_drift": num(res.max_hermiticity_drift),
    }
    if args.format == "json":
        summary["trajectory"] = [dict(zip(TRAJECTORY_COLUMNS, map(float, r))) for r in traj]
        emit(to_json(summary), args.out)
    elif args.format == "csv":
        emit(to_csv(TRAJECTORY_COLUMNS, traj), args.out)
    else:
        text = "\n".join(f"{k:<22} {fmt(v) if isinstance(v, float) else v}" for k, v in summary.items() if k != "schedule")
        emit(text + "\n", None)
        if args.out:
            emit(to_csv(TRAJECTORY_COLUMNS, traj), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--ja", default="2", help="angular momentum of level a, e.g. 2 or 3/2")
    common.add_argument("--jb", default="1", help="angular momentum of level b")
    common.add_argument("--jc", default="1", help="angular momentum of excited level c")
    common.add_argument("--drive", action="append", default=None,
                        help="drive polarization: pi, x, y, sigma+, sigma- or 'q-1,q0,q+1' (repeat for scan)")
    common.add_argument("--l1", default="sigma-", help="polarization of cavity mode 1")
    common.add_argument("--l2", default="sigma+", help="polarization of cavity mode 2")
    common.add_argument("--delta", type=float, default=0.0, help="common detuning")
    common.add_argument("--xi1", default="1", help="photon amplitude in mode 1 (complex)")
    common.add_argument("--xi2", default="0", help="photon amplitude in mode 2 (complex)")
    common.add_argument("--omega-a", dest="omega_a", type=float, default=1.0, help="peak drive Rabi frequency")
    common.add_argument("--omega-b", dest="omega_b", type=float, default=1.0, help="peak cavity Rabi frequency")
    common.add_argument("--format", choices=("text", "json", "csv"), default="text")
    common.add_argument("--out", default=None, help="output file (default stdout)")

    p = argparse.ArgumentParser(prog="lambda-memory", description="Photon polarization storage in degenerate Lambda atoms.")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="dark-state structure and storage probabilities")
    a.add_argument("--initial", default="m=0", help="m=<value>, mixed, or a JSON density-matrix file")

    s = sub.add_parser("scan", parents=[common], help="storage figures over initial states and drives")
    s.add_argument("--initial", default=None, help="restrict to one initial state (default: all pure states and mixed)")

    m = sub.add_parser("simulate", parents=[common], help="time-dependent integration against the adiabatic picture")
    m.add_argument("--initial", default="m=0", help="m=<value>, mixed, or a JSON density-matrix file")
    m.add_argument("--t1", type=float, default=200.0, help="storage duration")
    m.add_argument("--tau", type=float, default=0.0, help="hold duration")
    m.add_argument("--t2", type=float, default=0.0, help="retrieval duration (0: storage only)")
    m.add_argument("--dt", type=float, default=None, help="RK4 step (default 0.02 / max(Omega, |Delta|))")
    m.add_argument("--shape", choices=("sin2", "linear"), default="sin2")
    m.add_argument("--samples", type=int, default=200, help="trajectory samples per stage")
    return p


COMMANDS = {"analyze": cmd_analyze, "scan": cmd_scan, "simulate": cmd_simulate}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if not args.drive:
        args.drive = ["pi"]
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DecompositionError, DriftError, AdiabaticCrossingError, ContractError) as exc:
        print(f"tolerance failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
