"""Pulse records, modulation sources and their validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Union

import numpy as np

from . import discretize as dz

DEFAULT_CHANNEL_COUNT = 8
GLOBAL_BEAM = 0

TONE_PARAMS = ("freq0", "freq1", "phase0", "phase1", "amp0", "amp1")
FRAME_PARAMS = ("framerot0", "framerot1")
SOURCE_PARAMS = TONE_PARAMS + FRAME_PARAMS
PHASE_LIKE = ("phase0", "phase1", "framerot0", "framerot1")
TONE_MASKS = (
    "sync_mask",
    "enable_mask",
    "fb_enable_mask",
    "fwd_frame0_mask",
    "fwd_frame1_mask",
    "inv_frame0_mask",
    "inv_frame1_mask",
)
FRAME_MASKS = ("apply_at_end_mask", "rst_frame_mask")
MASKS = TONE_MASKS + FRAME_MASKS


def bit_set(mask: int, index: int) -> bool:
    """True if the bit for tone/frame ``index`` is set in a 2-bit mask."""
    return bool((mask >> index) & 1)


@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class Discrete:
    """Back-to-back steps that split the pulse into equal parts."""

    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) < 1:
            raise ValueError("discrete modulation needs at least one value")


@dataclass(frozen=True)
class Spline:
    """Knots of a natural cubic spline, equally spaced over the pulse."""

    knots: tuple

    def __post_init__(self):
        object.__setattr__(self, "knots", tuple(float(v) for v in self.knots))
        if len(self.knots) < 2:
            raise ValueError("spline modulation needs at least two knots")


ParamSource = Union[Constant, Discrete, Spline]


def as_source(value) -> ParamSource:
    """Coerce a number, list (discrete) or tuple (spline) to a source."""
    if isinstance(value, (Constant, Discrete, Spline)):
        return value
    if isinstance(value, list):
        return Discrete(tuple(value))
    if isinstance(value, tuple):
        return Spline(value)
    return Constant(float(value))


def source_points(src: ParamSource) -> tuple:
    """The raw values carried by a source."""
    if isinstance(src, Constant):
        return (src.value,)
    if isinstance(src, Discrete):
        return src.values
    return src.knots


def max_abs(src: ParamSource, samples_per_segment: int = 64) -> float:
    """Largest magnitude a source reaches; splines are sampled densely."""
    if not isinstance(src, Spline):
        return max(abs(v) for v in source_points(src))
    from .spline import natural_coefficients

    coeffs = natural_coefficients(src.knots)
    u = np.linspace(0.0, 1.0, samples_per_segment + 1)
    vals = ((coeffs[:, 3, None] * u + coeffs[:, 2, None]) * u + coeffs[:, 1, None]) * u + coeffs[:, 0, None]
    return float(max(np.abs(vals).max(), max(abs(k) for k in src.knots)))


@dataclass(frozen=True)
class PulseRecord:
    """One pulse on one channel: two tones plus frame and metadata inputs.

    Source fields accept plain numbers, lists (discrete steps) and tuples
    (spline knots); they are normalized to :class:`Constant`,
    :class:`Discrete` and :class:`Spline` on construction.
    """

    channel: int
    duration: float
    freq0: ParamSource = 0.0
    phase0: ParamSource = 0.0
    amp0: ParamSource = 0.0
    freq1: ParamSource = 0.0
    phase1: ParamSource = 0.0
    amp1: ParamSource = 0.0
    framerot0: ParamSource = 0.0
    framerot1: ParamSource = 0.0
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

    def __post_init__(self):
        object.__setattr__(self, "channel", int(self.channel))
        object.__setattr__(self, "duration", float(self.duration))
        for name in SOURCE_PARAMS:
            object.__setattr__(self, name, as_source(getattr(self, name)))
        for name in MASKS:
            object.__setattr__(self, name, int(getattr(self, name)))
        object.__setattr__(self, "waittrig", bool(self.waittrig))

    @property
    def cycles(self) -> int:
        return dz.quantize_duration(self.duration)

    def masks(self) -> dict:
        return {name: getattr(self, name) for name in MASKS}


def nop(channel: int, duration: float) -> PulseRecord:
    """A zero-output pulse; raises :class:`RangeError` for a bad duration."""
    dz.quantize_duration(duration)
    return PulseRecord(channel, duration)


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    field: str = ""
    tone: int | None = None

    def __str__(self):
        return f"{self.code}: {self.message}"


def validate_pulse(p: PulseRecord, channel_count: int = DEFAULT_CHANNEL_COUNT) -> list[Diagnostic]:
    """Return one diagnostic per violated constraint; empty means valid.

    Phases and frame rotations are never range-checked since they wrap.
    """
    out: list[Diagnostic] = []
    if not 0 <= p.channel < channel_count:
        out.append(Diagnostic("ChannelOutOfRange", f"channel {p.channel} not in 0..{channel_count - 1}", "channel"))

    cycles = None
    try:
        cycles = dz.quantize_duration(p.duration)
    except dz.RangeError as exc:
        out.append(Diagnostic("DurationOutOfRange", str(exc), "duration"))

    for name in SOURCE_PARAMS:
        src = getattr(p, name)
        if not all(math.isfinite(v) for v in source_points(src)):
            out.append(Diagnostic("NonFiniteValue", f"{name} has a non-finite value", name))
            continue
        if cycles is not None:
            pieces = len(source_points(src)) - (1 if isinstance(src, Spline) else 0)
            if not isinstance(src, Constant) and pieces > cycles:
                out.append(
                    Diagnostic(
                        "ModulationTooDense",
                        f"{name} needs {pieces} pieces but the pulse has {cycles} cycles",
                        name,
                    )
                )

    amp_max = []
    for tone in (0, 1):
        fname = f"freq{tone}"
        src = getattr(p, fname)
        if all(math.isfinite(v) for v in source_points(src)) and max_abs(src) > dz.FREQ_MAX_HZ:
            out.append(
                Diagnostic("FrequencyOutOfRange", f"{fname} exceeds +/-{dz.FREQ_MAX_HZ} Hz", fname, tone)
            )
        aname = f"amp{tone}"
        src = getattr(p, aname)
        if all(math.isfinite(v) for v in source_points(src)):
            peak = max_abs(src)
            amp_max.append(peak)
            if peak > dz.AMP_MAX:
                out.append(Diagnostic("AmplitudeOutOfRange", f"{aname} exceeds +/-{dz.AMP_MAX}", aname, tone))
    if len(amp_max) == 2 and all(a <= dz.AMP_MAX for a in amp_max) and sum(amp_max) > dz.AMP_MAX:
        out.append(
            Diagnostic(
                "AmplitudeSumExceeded",
                f"peak |amp0| + |amp1| = {sum(amp_max):g} exceeds {dz.AMP_MAX}",
                "amp0,amp1",
            )
        )

    for name in MASKS:
        if getattr(p, name) not in (0, 1, 2, 3):
            out.append(Diagnostic("MaskOutOfRange", f"{name}={getattr(p, name)} not in 0..3", name))
    return out


def is_nop(p: PulseRecord) -> bool:
    """True when a record only occupies time."""
    defaults = PulseRecord(p.channel, p.duration)
    return all(getattr(p, f.name) == getattr(defaults, f.name) for f in fields(PulseRecord))
