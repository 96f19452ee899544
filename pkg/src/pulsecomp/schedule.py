"""Encoding of pulse records and their layout into per-channel timelines."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace

from . import discretize as dz
from .core import (
    DEFAULT_CHANNEL_COUNT,
    MASKS,
    PHASE_LIKE,
    SOURCE_PARAMS,
    Constant,
    Discrete,
    PulseRecord,
    validate_pulse,
)
from .spline import fit_natural_cubic, split_cycles, wind_phase_coefficients

TIMELINE_FORMAT = "pulsecomp-timeline/1"


class CompileError(Exception):
    """A user-facing compilation failure."""


class ValidationError(CompileError):
    def __init__(self, pulse, diagnostics):
        self.pulse = pulse
        self.diagnostics = diagnostics
        detail = "; ".join(str(d) for d in diagnostics)
        super().__init__(f"invalid pulse on channel {pulse.channel}: {detail}")


class CollisionError(CompileError):
    def __init__(self, channel: int, detail: str):
        self.channel = channel
        self.detail = detail
        super().__init__(f"collision on channel {channel}: {detail}")


@dataclass(frozen=True)
class EncodedSegment:
    """Hardware words for one parameter over one slice of a pulse.

    Step slices carry an integer ``word``; spline slices carry cubic
    coefficients in physical units (Hz, degrees or amplitude).
    """

    cycles: int
    word: int | None = None
    coeffs: tuple | None = None


@dataclass(frozen=True)
class EncodedParam:
    mode: str  # "constant", "discrete" or "spline"
    segments: tuple
    knots: tuple | None = None


_WORD_OF = {
    "freq": dz.discretize_frequency,
    "phase": dz.discretize_phase,
    "amp": dz.discretize_amplitude,
    "framerot": dz.discretize_phase,
}


def _kind(name: str) -> str:
    return name.rstrip("01")


def encode_param(name: str, src, cycles: int) -> EncodedParam:
    to_word = _WORD_OF[_kind(name)]
    if isinstance(src, Constant):
        return EncodedParam("constant", (EncodedSegment(cycles, to_word(src.value)),))
    if isinstance(src, Discrete):
        parts = split_cycles(cycles, len(src.values))
        return EncodedParam(
            "discrete", tuple(EncodedSegment(c, to_word(v)) for c, v in zip(parts, src.values))
        )
    sp = fit_natural_cubic(src.knots, cycles)
    if name in PHASE_LIKE:
        sp = wind_phase_coefficients(sp)
    return EncodedParam(
        "spline",
        tuple(EncodedSegment(s.duration_cycles, coeffs=s.coeffs) for s in sp.segments),
        src.knots,
    )


@dataclass(frozen=True)
class EncodedPulse:
    channel: int
    cycles: int
    freq0: EncodedParam
    phase0: EncodedParam
    amp0: EncodedParam
    freq1: EncodedParam
    phase1: EncodedParam
    amp1: EncodedParam
    framerot0: EncodedParam
    framerot1: EncodedParam
    apply_at_end_mask: int = 0
    rst_frame_mask: int = 0
    fwd_frame0_mask: int = 0
    inv_frame0_mask: int = 0
    fwd_frame1_mask: int = 0
    inv_frame1_mask: int = 0
    sync_mask: int = 0
    enable_mask: int = 0
    fb_enable_mask: int = 0
    waittrig: bool = False

    def masks(self) -> dict:
        return {name: getattr(self, name) for name in MASKS}

    @property
    def is_nop(self) -> bool:
        return self == nop_pulse(self.channel, self.cycles)


def encode_pulse(p: PulseRecord, channel_count: int = DEFAULT_CHANNEL_COUNT) -> EncodedPulse:
    diags = validate_pulse(p, channel_count)
    if diags:
        raise ValidationError(p, diags)
    cycles = p.cycles
    params = {name: encode_param(name, getattr(p, name), cycles) for name in SOURCE_PARAMS}
    return EncodedPulse(p.channel, cycles, **params, **p.masks(), waittrig=p.waittrig)


def nop_pulse(channel: int, cycles: int) -> EncodedPulse:
    zero = EncodedParam("constant", (EncodedSegment(cycles, 0),))
    return EncodedPulse(channel, cycles, **{name: zero for name in SOURCE_PARAMS})


def _with_cycles(p: EncodedPulse, cycles: int) -> EncodedPulse:
    zero = EncodedParam("constant", (EncodedSegment(cycles, 0),))
    return replace(p, cycles=cycles, **{name: zero for name in SOURCE_PARAMS})


# -- lowering -----------------------------------------------------------------

@dataclass(frozen=True)
class GateBlock:
    """Pulses returned by one gate; list order is execution order per channel."""

    pulses: tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "pulses", tuple(self.pulses))


@dataclass(frozen=True)
class ParallelGroup:
    """Branches (each a sequence of blocks/groups) that start together."""

    branches: tuple


@dataclass
class LoweringReport:
    shared_channels: list = field(default_factory=list)


def sequence(blocks, channel_count: int = DEFAULT_CHANNEL_COUNT, report: LoweringReport | None = None) -> dict:
    """Concatenate blocks back to back, per channel, with no implicit gaps.

    ``blocks`` may contain :class:`GateBlock` and :class:`ParallelGroup`
    items; parallel groups are merged with :func:`merge_parallel`.
    """
    out: dict[int, list[EncodedPulse]] = {}
    for item in blocks:
        if isinstance(item, ParallelGroup):
            branches = [sequence(b, channel_count, report) for b in item.branches]
            merged = merge_parallel(branches, report)
            for ch, pulses in merged.items():
                out.setdefault(ch, []).extend(pulses)
        else:
            for p in item.pulses:
                out.setdefault(p.channel, []).append(encode_pulse(p, channel_count))
    return out


def _first_difference(a: list, b: list) -> str:
    if len(a) != len(b):
        return f"pulse count {len(a)} != {len(b)}"
    for i, (pa, pb) in enumerate(zip(a, b)):
        for f in fields(EncodedPulse):
            if getattr(pa, f.name) != getattr(pb, f.name):
                return f"pulse {i} field {f.name}"
    return ""


def merge_parallel(branches, report: LoweringReport | None = None) -> dict:
    """Unite per-channel pulse lists of parallel branches.

    A channel used by several branches is accepted only if every branch
    emits the identical encoded pulse list for it; the list is kept once.
    """
    out: dict[int, list[EncodedPulse]] = {}
    owner: dict[int, int] = {}
    for bi, branch in enumerate(branches):
        for ch, pulses in branch.items():
            if ch not in out:
                out[ch] = list(pulses)
                owner[ch] = bi
                continue
            diff = _first_difference(out[ch], list(pulses))
            if diff:
                raise CollisionError(ch, f"branches {owner[ch]} and {bi} differ at {diff}")
            if report is not None:
                report.shared_channels.append(ch)
    return out


def pad_to_common_duration(per_channel: dict, channel_count: int = DEFAULT_CHANNEL_COUNT):
    """Append one trailing NOP per channel so all channels end together.

    A NOP is never shorter than the 4-cycle minimum: a 1-3 cycle deficit is
    absorbed by lengthening a trailing NOP, and if some channel has no
    trailing NOP to lengthen, the whole program is extended by 4 cycles.
    Returns ``(channels, padding)`` where ``padding`` maps channel to the
    number of cycles added.
    """
    lengths = {ch: sum(p.cycles for p in per_channel.get(ch, [])) for ch in range(channel_count)}
    target = max(lengths.values(), default=0)

    def stuck(ch):
        d = target - lengths[ch]
        pulses = per_channel.get(ch, [])
        return 0 < d < dz.MIN_CYCLES and not (pulses and pulses[-1].is_nop)

    if any(stuck(ch) for ch in lengths):
        target += dz.MIN_CYCLES

    channels: dict[int, list[EncodedPulse]] = {}
    padding: dict[int, int] = {}
    for ch in range(channel_count):
        pulses = list(per_channel.get(ch, []))
        d = target - lengths[ch]
        if d >= dz.MIN_CYCLES:
            pulses.append(nop_pulse(ch, d))
        elif d > 0:
            pulses[-1] = _with_cycles(pulses[-1], pulses[-1].cycles + d)
        padding[ch] = d
        channels[ch] = pulses
    return channels, padding


@dataclass(frozen=True)
class ChannelTimeline:
    channel: int
    pulses: tuple

    @property
    def starts(self) -> list[int]:
        out, t = [], 0
        for p in self.pulses:
            out.append(t)
            t += p.cycles
        return out

    @property
    def total_cycles(self) -> int:
        return sum(p.cycles for p in self.pulses)


@dataclass(frozen=True)
class Timeline:
    channel_count: int
    channels: tuple
    padding: tuple = ()
    shared_channels: tuple = ()

    @property
    def program_cycles(self) -> int:
        return max((c.total_cycles for c in self.channels), default=0)

    def channel(self, index: int) -> ChannelTimeline:
        return self.channels[index]

    def __eq__(self, other):
        # padding and shared-channel notes are reporting detail
        if not isinstance(other, Timeline):
            return NotImplemented
        return self.channel_count == other.channel_count and self.channels == other.channels

    __hash__ = None


def build_timeline(blocks, channel_count: int = DEFAULT_CHANNEL_COUNT) -> Timeline:
    """Sequence, merge and pad a block stream into a :class:`Timeline`."""
    report = LoweringReport()
    per_channel = sequence(blocks, channel_count, report)
    channels, padding = pad_to_common_duration(per_channel, channel_count)
    return Timeline(
        channel_count,
        tuple(ChannelTimeline(ch, tuple(channels[ch])) for ch in range(channel_count)),
        tuple(sorted(padding.items())),
        tuple(sorted(set(report.shared_channels))),
    )


# -- serialization ------------------------------------------------------------

def _param_to_json(p: EncodedParam) -> dict:
    if p.mode == "constant":
        return {"mode": "constant", "word": p.segments[0].word}
    if p.mode == "discrete":
        return {"mode": "discrete", "steps": [{"cycles": s.cycles, "word": s.word} for s in p.segments]}
    return {
        "mode": "spline",
        "knots": list(p.knots),
        "segments": [{"cycles": s.cycles, "coeffs": list(s.coeffs)} for s in p.segments],
    }


def _param_from_json(d: dict, cycles: int) -> EncodedParam:
    mode = d["mode"]
    if mode == "constant":
        return EncodedParam("constant", (EncodedSegment(cycles, int(d["word"])),))
    if mode == "discrete":
        return EncodedParam(
            "discrete", tuple(EncodedSegment(int(s["cycles"]), int(s["word"])) for s in d["steps"])
        )
    if mode == "spline":
        return EncodedParam(
            "spline",
            tuple(EncodedSegment(int(s["cycles"]), coeffs=tuple(float(c) for c in s["coeffs"])) for s in d["segments"]),
            tuple(float(k) for k in d["knots"]),
        )
    raise ValueError(f"unknown parameter mode {mode!r}")


def pulse_to_json(p: EncodedPulse, start: int) -> dict:
    return {
        "start_cycle": start,
        "cycles": p.cycles,
        "tone0": {"freq": _param_to_json(p.freq0), "phase": _param_to_json(p.phase0), "amp": _param_to_json(p.amp0)},
        "tone1": {"freq": _param_to_json(p.freq1), "phase": _param_to_json(p.phase1), "amp": _param_to_json(p.amp1)},
        "masks": p.masks(),
        "frame_inputs": {"framerot0": _param_to_json(p.framerot0), "framerot1": _param_to_json(p.framerot1)},
        "waittrig": p.waittrig,
    }


def pulse_from_json(channel: int, d: dict) -> EncodedPulse:
    n = int(d["cycles"])
    params = {}
    for tone in (0, 1):
        for kind in ("freq", "phase", "amp"):
            params[f"{kind}{tone}"] = _param_from_json(d[f"tone{tone}"][kind], n)
    for name in ("framerot0", "framerot1"):
        params[name] = _param_from_json(d["frame_inputs"][name], n)
    masks = {name: int(d["masks"].get(name, 0)) for name in MASKS}
    return EncodedPulse(channel, n, **params, **masks, waittrig=bool(d.get("waittrig", False)))


def timeline_to_dict(tl: Timeline) -> dict:
    return {
        "format": TIMELINE_FORMAT,
        "header": {
            "clock_hz": dz.CLOCK_HZ,
            "channel_count": tl.channel_count,
            "program_cycles": tl.program_cycles,
        },
        "channels": [
            {
                "channel": ct.channel,
                "padding_cycles": dict(tl.padding).get(ct.channel, 0),
                "segments": [pulse_to_json(p, s) for p, s in zip(ct.pulses, ct.starts)],
            }
            for ct in tl.channels
        ],
    }


def timeline_to_json(tl: Timeline) -> str:
    return json.dumps(timeline_to_dict(tl), indent=1, sort_keys=False) + "\n"


def timeline_from_json(text: str) -> Timeline:
    doc = json.loads(text)
    if doc.get("format") != TIMELINE_FORMAT:
        raise ValueError(f"not a timeline document (format={doc.get('format')!r})")
    channels = []
    padding = []
    for c in doc["channels"]:
        ch = int(c["channel"])
        pulses = tuple(pulse_from_json(ch, s) for s in c["segments"])
        channels.append(ChannelTimeline(ch, pulses))
        padding.append((ch, int(c.get("padding_cycles", 0))))
    tl = Timeline(int(doc["header"]["channel_count"]), tuple(channels), tuple(padding))
    if tl.program_cycles != doc["header"]["program_cycles"]:
        raise ValueError("program_cycles does not match segment durations")
    return tl
