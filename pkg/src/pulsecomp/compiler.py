"""End-to-end lowering: assembly text + definitions + calibration -> timeline."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .core import DEFAULT_CHANNEL_COUNT
from .definitions import DefinitionError, DefinitionSet, load_calibration, load_definitions
from .jaqal import Program, elaborate, parse
from .schedule import Timeline, build_timeline

DEFS_SUFFIX = ".pulses"


@dataclass(frozen=True)
class CompileResult:
    program: Program
    definitions: DefinitionSet
    timeline: Timeline


def select_definitions(program: Program, sets: dict, filename: str = "<defs>") -> DefinitionSet:
    """Pick the definition set named by the program's usepulses import."""
    if program.usepulses:
        class_name = program.usepulses.rsplit(".", 1)[-1]
        if class_name not in sets:
            raise DefinitionError(f"{filename} has no definition set {class_name!r} (have: {', '.join(sorted(sets))})")
        return sets[class_name]
    if len(sets) != 1:
        raise DefinitionError("program has no usepulses import and the definition file is ambiguous")
    return next(iter(sets.values()))


def compile_source(
    program_text: str,
    defs_text: str,
    calib: dict | None = None,
    channel_count: int = DEFAULT_CHANNEL_COUNT,
    program_name: str = "<program>",
    defs_name: str = "<defs>",
) -> CompileResult:
    program = parse(program_text, program_name)
    dset = select_definitions(program, load_definitions(defs_text, defs_name), defs_name)
    blocks = elaborate(program, dset, calib or {}, program_name)
    return CompileResult(program, dset, build_timeline(blocks, channel_count))


def resolve_defs_path(program_path: Path, program: Program) -> Path:
    """``from File.Class usepulses *`` -> ``File.pulses`` next to the program."""
    if not program.usepulses:
        raise DefinitionError(f"{program_path}: no usepulses import; pass the definition file explicitly")
    stem = program.usepulses.split(".")[0]
    return program_path.parent / (stem + DEFS_SUFFIX)


def compile_files(
    program_path,
    defs_path=None,
    calib_path=None,
    channel_count: int = DEFAULT_CHANNEL_COUNT,
) -> CompileResult:
    program_path = Path(program_path)
    text = program_path.read_text()
    program = parse(text, str(program_path))
    defs_path = Path(defs_path) if defs_path else resolve_defs_path(program_path, program)
    calib = load_calibration(Path(calib_path).read_text(), str(calib_path)) if calib_path else {}
    dset = select_definitions(program, load_definitions(defs_path.read_text(), str(defs_path)), str(defs_path))
    blocks = elaborate(program, dset, calib, str(program_path))
    return CompileResult(program, dset, build_timeline(blocks, channel_count))
