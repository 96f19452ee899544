"""Command-line entry point: ``pulsecomp compile|simulate|inspect``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import discretize as dz
from .compiler import compile_files
from .core import bit_set
from .dds import CorrectionStream, SimConfig, SimulationError, simulate
from .lexer import SourceError
from .schedule import CompileError, Timeline, timeline_from_json, timeline_to_json

EXIT_OK, EXIT_USER, EXIT_INTERNAL = 0, 1, 2


class UsageError(Exception):
    pass


def _add_inputs(p: argparse.ArgumentParser):
    p.add_argument("--program", help="assembly program (.jaqal)")
    p.add_argument("--defs", help="pulse definition file (default: from the usepulses import)")
    p.add_argument("--calib", help="calibration file (key = value)")
    p.add_argument("--channels", type=int, default=8, help="number of hardware channels (default 8)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pulsecomp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", help="compile a program to a timeline JSON document")
    _add_inputs(c)
    c.add_argument("--out", help="timeline JSON path (default: stdout)")

    s = sub.add_parser("simulate", help="simulate a program or timeline and write waveforms")
    _add_inputs(s)
    s.add_argument("--timeline", help="previously compiled timeline JSON")
    s.add_argument("--out", help="output path (default: stdout)")
    s.add_argument("--t-global", type=int, default=0, help="global counter value at program start (ticks)")
    s.add_argument(
        "--correction",
        default="0",
        help="feedback correction: an integer word, or a file of 't_global word' lines",
    )
    s.add_argument("--correction-scale", type=int, default=1, help="signed multiplier on correction words")
    s.add_argument("--triggers", default="", help="comma-separated trigger times (global ticks)")
    s.add_argument("--oversample", type=int, default=1)
    s.add_argument("--decimate", type=int, default=1)
    s.add_argument("--format", choices=("csv", "json"), default="csv")

    i = sub.add_parser("inspect", help="print a report for a program or timeline")
    _add_inputs(i)
    i.add_argument("--timeline", help="previously compiled timeline JSON")
    return parser


def _load_timeline(args) -> Timeline:
    if getattr(args, "timeline", None):
        return timeline_from_json(Path(args.timeline).read_text())
    if not args.program:
        raise UsageError("either --program or --timeline is required")
    return compile_files(args.program, args.defs, args.calib, args.channels).timeline


def _correction(args) -> CorrectionStream:
    text = args.correction.strip()
    try:
        return CorrectionStream.constant(int(text, 0), args.correction_scale)
    except ValueError:
        pass
    table = []
    for n, line in enumerate(Path(text).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise UsageError(f"{text}:{n}: expected 't_global word'")
        table.append((int(parts[0], 0), int(parts[1], 0)))
    return CorrectionStream(tuple(sorted(table)), args.correction_scale)


def report(tl: Timeline) -> str:
    """Human-readable summary of a compiled timeline."""
    out = [f"program: {tl.program_cycles} cycles ({dz.cycles_to_seconds(tl.program_cycles):.9g} s), "
           f"{tl.channel_count} channels"]
    padding = dict(tl.padding)
    for ct in tl.channels:
        busy = ct.total_cycles - padding.get(ct.channel, 0)
        sync = [sum(bit_set(p.sync_mask, t) for p in ct.pulses) for t in (0, 1)]
        fb = [sum(bit_set(p.fb_enable_mask, t) for p in ct.pulses) for t in (0, 1)]
        line = (f"  ch{ct.channel}: {len(ct.pulses)} segment(s), {busy} cycles used, "
                f"padding {padding.get(ct.channel, 0)} cycles")
        if any(sync) or any(fb):
            line += f", sync tone0/1={sync[0]}/{sync[1]}, fb tone0/1={fb[0]}/{fb[1]}"
        if any(p.waittrig for p in ct.pulses):
            line += ", waits for trigger"
        out.append(line)
    if tl.shared_channels:
        out.append("shared channels accepted (identical parallel pulses): "
                   + ", ".join(str(c) for c in tl.shared_channels))
    return "\n".join(out) + "\n"


def _write(path, text: str):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_compile(args) -> int:
    if not args.program:
        raise UsageError("--program is required")
    tl = compile_files(args.program, args.defs, args.calib, args.channels).timeline
    _write(args.out, timeline_to_json(tl))
    (sys.stdout if args.out else sys.stderr).write(report(tl))
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.oversample < 1 or args.decimate < 1:
        raise UsageError("--oversample and --decimate must be >= 1")
    tl = _load_timeline(args)
    triggers = tuple(int(t, 0) for t in args.triggers.split(",") if t.strip())
    cfg = SimConfig(args.t_global, _correction(args), triggers, args.oversample)
    table = simulate(tl, cfg)
    text = table.to_csv(args.decimate) if args.format == "csv" else table.to_json(args.decimate)
    _write(args.out, text)
    return EXIT_OK


def cmd_inspect(args) -> int:
    sys.stdout.write(report(_load_timeline(args)))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"compile": cmd_compile, "simulate": cmd_simulate, "inspect": cmd_inspect}[args.command]
    try:
        return handler(args)
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head); not an error
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except (SourceError, CompileError, SimulationError, dz.RangeError, UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except ValueError as exc:
        # malformed timeline JSON and similar input problems
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
