"""Per-channel frame-rotation accumulators (virtual Z rotations).

Each channel tracks two frames. A pulse may reset them, add its
``framerot`` inputs at the start or the end of the pulse (or follow a
spline), and forward either frame to either tone with an optional sign flip.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Constant, Discrete, ParamSource, PulseRecord, Spline, as_source, bit_set
from .discretize import wrap_degrees
from .spline import fit_natural_cubic, sample, split_cycles


@dataclass(frozen=True)
class FrameState:
    frame0_deg: float = 0.0
    frame1_deg: float = 0.0

    def frame(self, index: int) -> float:
        return self.frame1_deg if index else self.frame0_deg


@dataclass(frozen=True)
class FrameDirective:
    framerot0: ParamSource = Constant(0.0)
    framerot1: ParamSource = Constant(0.0)
    fwd_frame0_mask: int = 0
    fwd_frame1_mask: int = 0
    inv_frame0_mask: int = 0
    inv_frame1_mask: int = 0
    apply_at_end_mask: int = 0
    rst_frame_mask: int = 0

    def __post_init__(self):
        object.__setattr__(self, "framerot0", as_source(self.framerot0))
        object.__setattr__(self, "framerot1", as_source(self.framerot1))

    @classmethod
    def from_pulse(cls, p: PulseRecord) -> "FrameDirective":
        return cls(
            p.framerot0,
            p.framerot1,
            p.fwd_frame0_mask,
            p.fwd_frame1_mask,
            p.inv_frame0_mask,
            p.inv_frame1_mask,
            p.apply_at_end_mask,
            p.rst_frame_mask,
        )


def _step_one(acc: float, src: ParamSource, at_end: bool, cycles: int, spc: int):
    n = cycles * spc
    if isinstance(src, Constant):
        if at_end:
            return np.full(n, acc), acc + src.value
        acc += src.value
        return np.full(n, acc), acc
    if isinstance(src, Discrete):
        parts = []
        for value, c in zip(src.values, split_cycles(cycles, len(src.values))):
            if at_end:
                parts.append(np.full(c * spc, acc))
                acc += value
            else:
                acc += value
                parts.append(np.full(c * spc, acc))
        return np.concatenate(parts), acc
    if isinstance(src, Spline):
        # apply-at-end does not apply to splines
        sp = fit_natural_cubic(src.knots, cycles)
        first = src.knots[0]
        trace = acc + (sample(sp, spc) - first)
        return trace, acc + (src.knots[-1] - first)
    raise TypeError(f"unsupported frame source {src!r}")


def step_frame(state: FrameState, d: FrameDirective, pulse_cycles: int, samples_per_cycle: int = 1):
    """Advance both frames through one pulse.

    Returns ``(trace0, trace1, new_state)``: the wrapped frame values at each
    sample of the pulse, and the accumulators afterwards.
    """
    if pulse_cycles < 1:
        raise ValueError("pulse_cycles must be >= 1")
    traces = []
    finals = []
    for f, src in ((0, d.framerot0), (1, d.framerot1)):
        acc = 0.0 if bit_set(d.rst_frame_mask, f) else state.frame(f)
        trace, acc = _step_one(acc, src, bit_set(d.apply_at_end_mask, f), pulse_cycles, samples_per_cycle)
        traces.append(wrap_degrees(trace))
        finals.append(float(wrap_degrees(acc)))
    return traces[0], traces[1], FrameState(finals[0], finals[1])


def tone_phase_offset(frames, d: FrameDirective, tone: int):
    """Phase (degrees) the frames contribute to ``tone``.

    ``frames`` is a ``(frame0, frame1)`` pair of scalars or arrays. Frame 0
    wins when both frames are forwarded to the same tone.
    """
    frame0, frame1 = frames
    if bit_set(d.fwd_frame0_mask, tone):
        return -frame0 if bit_set(d.inv_frame0_mask, tone) else frame0
    if bit_set(d.fwd_frame1_mask, tone):
        return -frame1 if bit_set(d.inv_frame1_mask, tone) else frame1
    return 0.0 * frame0
