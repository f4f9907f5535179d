"""Command-line front end.

Exit status: 0 when the run verifies, 1 on a verification mismatch or an
unreadable spectrum, 2 on bad input (files, names, arity, DSL errors).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import dj as djmod
from .experiment import (
    Acquisition,
    ReadoutError,
    correlation_map,
    default_gate_acquisition,
    run_gate,
    run_program,
)
from .gates import GateError, catalog, get_gate
from .program import DSLError, parse_program
from .spins import SpinSystemError, load_system

OUTPUT_ENV = "NMRQC_OUTPUT_DIR"
DEMO_SYSTEMS = ("two_spin", "three_spin", "four_spin")
EXIT_OK, EXIT_MISMATCH, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def demo_system_path(name: str) -> Path:
    return Path(str(resources.files("nmrqc") / "data" / f"{name}.json"))


def _load_system(spec: str):
    path = Path(spec)
    if not path.exists() and spec in DEMO_SYSTEMS:
        path = demo_system_path(spec)
    if not path.exists():
        raise InputError(f"system file not found: {spec}")
    return load_system(path)


def _output_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUTPUT_ENV) or "nmrqc_output")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def write_spectrum_csv(path: Path, spectrum) -> None:
    f1, f2 = np.meshgrid(spectrum.axis1, spectrum.axis2, indexing="ij")
    table = np.column_stack([f1.ravel(), f2.ravel(), spectrum.magnitudes.ravel()])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("f1_hz,f2_hz,magnitude\n")
        np.savetxt(fh, table, fmt=["%.6f", "%.6f", "%.9e"], delimiter=",")


def peaks_json(peaks) -> list[dict]:
    return [{"f1_hz": round(p.f1, 6), "f2_hz": round(p.f2, 6), "magnitude": float(f"{p.magnitude:.9g}")}
            for p in peaks]


def ascii_contour(spectrum, width: int = 64, height: int = 24) -> str:
    """Coarse max-pooled rendering, F1 down the rows and F2 across."""
    M = spectrum.magnitudes
    top = M.max() or 1.0
    rows = np.array_split(np.arange(M.shape[0]), height)
    cols = np.array_split(np.arange(M.shape[1]), width)
    ramp = " .:-=+*#%@"
    lines = [f"F2 {spectrum.axis2[0]:.1f} .. {spectrum.axis2[-1]:.1f} Hz ->"]
    for r in rows:
        block = M[r]
        chars = []
        for c in cols:
            level = block[:, c].max() / top
            chars.append(ramp[min(int(level * len(ramp)), len(ramp) - 1)])
        lines.append(f"{spectrum.axis1[r[0]]:10.1f} |" + "".join(chars) + "|")
    return "\n".join(lines)


def _acquisition(base: Acquisition, args) -> Acquisition:
    for name in ("n_t1", "n_t2", "dwell1", "dwell2", "zerofill", "threshold"):
        value = getattr(args, name, None)
        if value is not None and value <= 0:
            raise InputError(f"--{name.replace('_', '-')} must be positive")
    return base.replace(n_t1=args.n_t1, n_t2=args.n_t2, dwell1=args.dwell1, dwell2=args.dwell2,
                        zerofill=args.zerofill, rel_threshold=args.threshold)


def cmd_gates_list(args) -> int:
    entries = catalog(args.arity)
    if args.json:
        print(json.dumps(entries, indent=2))
        return EXIT_OK
    for g in entries:
        table = " ".join(f"{a}->{b}" for a, b in g["truth_table"])
        print(f"{g['name']:<16} arity {g['arity']}  {table}")
    return EXIT_OK


def cmd_run_gate(args) -> int:
    system = _load_system(args.system)
    arity = len(system.input_spins)
    spec = get_gate(args.name, arity)
    expect = get_gate(args.expect, arity) if args.expect else None
    acq = _acquisition(default_gate_acquisition(system), args)
    out = _output_dir(args)
    run = run_gate(system, spec, acq, expect)
    write_spectrum_csv(out / "spectrum.csv", run.spectrum)
    _write_json(out / "peaks.json", peaks_json(run.peaks))
    _write_json(out / "correlation.json", run.cmap.to_json())
    _write_json(out / "report.json", run.report.to_json())
    if args.ascii:
        print(ascii_contour(run.spectrum))
    pairs = ", ".join(f"{a}->{b}" for a, b in run.cmap.sorted_pairs())
    status = "PASS" if run.report.passed else "FAIL"
    print(f"{spec.name} vs {run.report.gate}: {status}  [{pairs}]")
    for m in run.report.mismatches:
        print(f"  input {m['input']}: expected {m['expected']}, observed {m['observed']}")
    return EXIT_OK if run.report.passed else EXIT_MISMATCH


def cmd_run_dj(args) -> int:
    f = djmod.get_function(args.bits, args.function)
    system = _load_system(args.system)
    acq = _acquisition(djmod.default_dj_acquisition(system), args)
    outcome, spectrum = djmod.run_dj(system, f, acq)
    out = _output_dir(args)
    _write_json(out / "verdict.json", outcome.to_json(djmod.symbolic_io(f)))
    write_spectrum_csv(out / "spectrum.csv", spectrum)
    if args.ascii:
        print(ascii_contour(spectrum))
    ratios = ", ".join(f"I{q}: {r:.3f}" for q, r in sorted(outcome.ratios.items()))
    ok = outcome.verdict == f.kind
    print(f"{args.bits}-bit {f.name}: {outcome.verdict} (declared {f.kind}); band ratios {ratios}")
    return EXIT_OK if ok else EXIT_MISMATCH


def cmd_run_program(args) -> int:
    path = Path(args.file)
    if not path.exists():
        raise InputError(f"program file not found: {args.file}")
    program = parse_program(path.read_text(encoding="utf-8"), name=path.stem)
    system = _load_system(args.system)
    program.validate(system)
    if program.t1_index is None:
        raise InputError("program has no t1 marker")
    observer_only = program.acquire.spins == (0,)
    base = default_gate_acquisition(system) if observer_only else djmod.default_dj_acquisition(system)
    acq = _acquisition(base, args)
    _, spectrum, peaks = run_program(system, program, acq)
    out = _output_dir(args)
    write_spectrum_csv(out / "spectrum.csv", spectrum)
    _write_json(out / "peaks.json", peaks_json(peaks))
    if observer_only:
        try:
            cmap = correlation_map(peaks, system, spectrum)
        except ReadoutError as exc:
            print(f"no correlation map: {exc}", file=sys.stderr)
        else:
            _write_json(out / "correlation.json", cmap.to_json())
    if args.ascii:
        print(ascii_contour(spectrum))
    print(f"{program.name}: {len(peaks)} peaks")
    for p in peaks:
        print(f"  F1 {p.f1:10.3f} Hz  F2 {p.f2:10.3f} Hz  |S| {p.magnitude:.4g}")
    return EXIT_OK


def _add_acq_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-t1", type=int, help="t1 increments")
    p.add_argument("--n-t2", type=int, help="points per FID")
    p.add_argument("--dwell1", type=float, help="t1 increment (s)")
    p.add_argument("--dwell2", type=float, help="t2 dwell (s)")
    p.add_argument("--zerofill", type=int, help="zero-fill factor per axis")
    p.add_argument("--threshold", type=float, help="relative peak-picking threshold")
    p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./nmrqc_output)")
    p.add_argument("--ascii", action="store_true", help="print an ASCII contour of the spectrum")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nmrqc", description="2D NMR quantum computing simulator")
    sub = parser.add_subparsers(dest="group", required=True)

    gates = sub.add_parser("gates", help="logic gates").add_subparsers(dest="action", required=True)
    p = gates.add_parser("list", help="list the gate catalog")
    p.add_argument("--arity", type=int, choices=(2, 3))
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_gates_list)
    p = gates.add_parser("run", help="simulate a gate and verify its truth table")
    p.add_argument("name")
    p.add_argument("--system", required=True, help="system JSON file or demo name")
    p.add_argument("--expect", help="verify against this gate instead")
    _add_acq_flags(p)
    p.set_defaults(func=cmd_run_gate)

    dj = sub.add_parser("dj", help="Deutsch-Jozsa").add_subparsers(dest="action", required=True)
    p = dj.add_parser("run", help="run the DJ algorithm on one function")
    p.add_argument("--bits", type=int, required=True)
    p.add_argument("--function", required=True)
    p.add_argument("--system", required=True, help="system JSON file or demo name")
    _add_acq_flags(p)
    p.set_defaults(func=cmd_run_dj)

    prog = sub.add_parser("program", help="pulse programs").add_subparsers(dest="action", required=True)
    p = prog.add_parser("run", help="run a DSL pulse program through the 2D pipeline")
    p.add_argument("file")
    p.add_argument("--system", required=True, help="system JSON file or demo name")
    _add_acq_flags(p)
    p.set_defaults(func=cmd_run_program)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ReadoutError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (InputError, SpinSystemError, GateError, DSLError, djmod.DJError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
