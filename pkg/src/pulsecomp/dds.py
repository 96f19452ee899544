"""Tick-accurate model of the dual-tone DDS channels.

Every tone owns a 40-bit phase accumulator that advances by its frequency
word once per DDS tick (819.2 MHz, two ticks per 409.6 MHz duration
cycle). A global counter shared by all tones supplies the phase used when a
pulse requests synchronization: ``acc := freq_word * t_global mod 2**40``.
Frame rotations and phase inputs are added at the output stage only, so
they never disturb the accumulator.
"""

from __future__ import annotations

import bisect
import io
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import discretize as dz
from .core import Constant, Discrete, Spline, bit_set
from .frames import FrameDirective, FrameState, step_frame, tone_phase_offset
from .schedule import EncodedParam, EncodedPulse, Timeline
from .spline import CubicSegment, SplineProgram, sample

MOD = dz.WORD_MOD
TICKS = dz.TICKS_PER_CYCLE
CSV_HEADER = "cycle,t_seconds,channel,tone0,tone1,sum,frame0_deg,frame1_deg,acc0,acc1"
_CHUNK = 1 << 22


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class CorrectionStream:
    """Frequency-word correction fed to tones with feedback enabled.

    ``table`` holds ``(t_global_start, word)`` breakpoints; the word before
    the first breakpoint is zero. ``scale`` is the signed harmonic
    multiplier applied to every word.
    """

    table: tuple = ()
    scale: int = 1

    @classmethod
    def constant(cls, word: int, scale: int = 1) -> "CorrectionStream":
        return cls(((0, int(word)),), scale)

    def word_at(self, t_global: int) -> int:
        starts = [s for s, _ in self.table]
        i = bisect.bisect_right(starts, t_global) - 1
        return self.scale * self.table[i][1] if i >= 0 else 0

    def words(self, ticks: np.ndarray) -> np.ndarray:
        if not self.table:
            return np.zeros(len(ticks), dtype=np.int64)
        starts = np.array([s for s, _ in self.table], dtype=np.int64)
        vals = np.array([0] + [w for _, w in self.table], dtype=np.int64) * self.scale
        return vals[np.searchsorted(starts, ticks, side="right")]


@dataclass(frozen=True)
class SimConfig:
    t_global_initial: int = 0
    correction: CorrectionStream = field(default_factory=CorrectionStream)
    trigger_times: tuple = ()
    oversample: int = 1

    def __post_init__(self):
        if self.oversample < 1:
            raise ValueError("oversample must be >= 1")
        if self.t_global_initial < 0:
            raise ValueError("t_global_initial must be non-negative")


# -- scalar reference path ----------------------------------------------------

@dataclass(frozen=True)
class ToneState:
    phase_acc: int = 0
    freq_word: int = 0
    phase_offset_word: int = 0
    amp: float = 0.0
    enabled: bool = True
    fb_enabled: bool = False


def apply_sync(tone: ToneState, t_global: int) -> ToneState:
    """Overwrite the accumulator with the global phase of the tone's word."""
    return replace(tone, phase_acc=(tone.freq_word * t_global) % MOD)


@dataclass
class ChannelState:
    tones: list
    t_global: int = 0


def run_cycle(state: ChannelState, frame_words=(0, 0), correction_word: int = 0):
    """Emit one sample from ``state`` and advance it by one tick.

    Returns ``(sum, (tone0, tone1))``. This is the reference model the
    vectorized :func:`simulate` is checked against.
    """
    outs = []
    new_tones = []
    for tone, fw in zip(state.tones, frame_words):
        phase = (tone.phase_acc + tone.phase_offset_word + fw) % MOD
        outs.append(tone.amp / 100.0 * math.sin(2 * math.pi * phase / MOD) if tone.enabled else 0.0)
        inc = tone.freq_word + (correction_word if tone.fb_enabled else 0)
        new_tones.append(replace(tone, phase_acc=(tone.phase_acc + inc) % MOD))
    state.tones = new_tones
    state.t_global += 1
    return outs[0] + outs[1], (outs[0], outs[1])


def phase_error_after_epoch(f_eps: int, t_global: int) -> float:
    return dz.phase_error_after_epoch(f_eps, t_global)


# -- vectorized simulation ----------------------------------------------------

def _excl_cumsum_mod(start: int, inc: np.ndarray) -> tuple[np.ndarray, int]:
    """Accumulator value before each tick, and after the last one."""
    out = np.empty(len(inc), dtype=np.int64)
    acc = start
    for lo in range(0, len(inc), _CHUNK):
        part = inc[lo:lo + _CHUNK]
        c = np.cumsum(part)
        out[lo] = acc
        out[lo + 1:lo + len(part)] = (acc + c[:-1]) % MOD
        acc = int((acc + int(c[-1]) % MOD) % MOD)
    return out, acc


def _spline_of(param: EncodedParam) -> SplineProgram:
    return SplineProgram(tuple(CubicSegment(*s.coeffs, s.cycles) for s in param.segments))


def _param_ticks(param: EncodedParam, kind: str) -> np.ndarray:
    if param.mode == "spline":
        vals = sample(_spline_of(param), TICKS)
        if kind == "freq":
            return dz.frequency_words(vals)
        if kind == "phase":
            return dz.phase_words(vals)
        return dz.quantize_amplitudes(vals)
    words = np.array([s.word for s in param.segments], dtype=np.int64)
    reps = np.array([s.cycles * TICKS for s in param.segments])
    if kind == "amp":
        return np.repeat(words * dz.AMP_LSB, reps)
    return np.repeat(words, reps)


def _frame_source(param: EncodedParam):
    if param.mode == "constant":
        return Constant(dz.to_degrees(param.segments[0].word))
    if param.mode == "discrete":
        return Discrete(tuple(dz.to_degrees(s.word) for s in param.segments))
    return Spline(param.knots)


def frame_directive(p: EncodedPulse) -> FrameDirective:
    return FrameDirective(
        _frame_source(p.framerot0),
        _frame_source(p.framerot1),
        p.fwd_frame0_mask,
        p.fwd_frame1_mask,
        p.inv_frame0_mask,
        p.inv_frame1_mask,
        p.apply_at_end_mask,
        p.rst_frame_mask,
    )


class _ChannelSim:
    def __init__(self, channel: int, cfg: SimConfig):
        self.channel = channel
        self.cfg = cfg
        self.t = cfg.t_global_initial
        self.acc = [0, 0]
        self.word = [0, 0]
        self.fb = [False, False]
        self.frames = FrameState()
        self.triggers = sorted(cfg.trigger_times)
        self.trigger_pos = 0
        self.chunks: list[dict] = []

    def _increments(self, words: np.ndarray, fb: bool) -> np.ndarray:
        inc = words.astype(np.int64)
        if fb:
            ticks = self.t + np.arange(len(words), dtype=np.int64)
            inc = inc + self.cfg.correction.words(ticks)
        return np.mod(inc, MOD)

    def _emit(self, n, **cols):
        cols["tick"] = self.t - self.cfg.t_global_initial + np.arange(n, dtype=np.int64)
        self.chunks.append(cols)

    def idle(self, n: int):
        """Zero output for ``n`` ticks while the accumulators keep running."""
        if n <= 0:
            return
        accs, incs = [], []
        for tone in (0, 1):
            inc = self._increments(np.full(n, self.word[tone], dtype=np.int64), self.fb[tone])
            acc, self.acc[tone] = _excl_cumsum_mod(self.acc[tone], inc)
            accs.append(acc)
            incs.append(inc)
        zeros = np.zeros(n)
        f0 = np.full(n, self.frames.frame0_deg)
        f1 = np.full(n, self.frames.frame1_deg)
        izero = np.zeros(n, dtype=np.int64)
        self._emit(
            n, tone0=zeros, tone1=zeros, phase0=izero, phase1=izero, amp0=zeros, amp1=zeros,
            frame0=f0, frame1=f1, acc0=accs[0], acc1=accs[1], inc0=incs[0], inc1=incs[1],
        )
        self.t += n

    def wait_for_trigger(self):
        while self.trigger_pos < len(self.triggers) and self.triggers[self.trigger_pos] < self.t:
            self.trigger_pos += 1
        if self.trigger_pos >= len(self.triggers):
            raise SimulationError(f"channel {self.channel}: waittrig at t_global={self.t} with no trigger left")
        trig = self.triggers[self.trigger_pos]
        self.trigger_pos += 1
        self.idle(trig - self.t)

    def pulse(self, p: EncodedPulse):
        if p.waittrig:
            self.wait_for_trigger()
        n = p.cycles * TICKS
        d = frame_directive(p)
        tr0, tr1, self.frames = step_frame(self.frames, d, p.cycles, TICKS)
        outs, accs, incs, phases, levels = [], [], [], [], []
        for tone in (0, 1):
            words = _param_ticks(getattr(p, f"freq{tone}"), "freq")
            offs = _param_ticks(getattr(p, f"phase{tone}"), "phase")
            amps = _param_ticks(getattr(p, f"amp{tone}"), "amp")
            frame_words = dz.phase_words(tone_phase_offset((tr0, tr1), d, tone) + np.zeros(n))
            if bit_set(p.sync_mask, tone):
                self.acc[tone] = (int(words[0]) * self.t) % MOD
            fb = bit_set(p.fb_enable_mask, tone)
            inc = self._increments(words, fb)
            acc, self.acc[tone] = _excl_cumsum_mod(self.acc[tone], inc)
            phase = np.mod(acc + offs + frame_words, MOD)
            if bit_set(p.enable_mask, tone):
                amps = np.zeros(n)
            out = amps / 100.0 * np.sin(2 * np.pi * (phase / MOD))
            self.word[tone] = int(words[-1])
            self.fb[tone] = fb
            outs.append(out)
            accs.append(acc)
            incs.append(inc)
            phases.append(phase)
            levels.append(amps)
        self._emit(
            n, tone0=outs[0], tone1=outs[1], phase0=phases[0], phase1=phases[1], amp0=levels[0], amp1=levels[1],
            frame0=tr0, frame1=tr1, acc0=accs[0], acc1=accs[1], inc0=incs[0], inc1=incs[1],
        )
        self.t += n

    def result(self) -> dict:
        if not self.chunks:
            return {k: np.zeros(0) for k in ("tick", "tone0", "tone1", "frame0", "frame1", "acc0", "acc1")}
        return {k: np.concatenate([c[k] for c in self.chunks]) for k in self.chunks[0]}


@dataclass
class WaveformTable:
    """Per-channel sample arrays, one row per DDS tick (times ``oversample``)."""

    t_global_initial: int
    oversample: int
    channels: dict

    @property
    def ticks(self) -> int:
        return max((len(c["tick"]) for c in self.channels.values()), default=0)

    def render(self, channel: int) -> dict:
        """Columns for one channel, expanded by the oversampling factor."""
        c = self.channels[channel]
        if self.oversample == 1:
            return c
        k = self.oversample
        frac = np.tile(np.arange(k) / k, len(c["tick"]))
        out = {name: np.repeat(c[name], k) for name in ("tick", "frame0", "frame1", "acc0", "acc1")}
        for tone in (0, 1):
            phase = np.repeat(c[f"phase{tone}"], k) + np.repeat(c[f"inc{tone}"], k) * frac
            out[f"tone{tone}"] = np.repeat(c[f"amp{tone}"], k) / 100.0 * np.sin(2 * np.pi * (phase / MOD))
        out["sub"] = frac
        return out

    def to_csv(self, decimate: int = 1) -> str:
        if decimate < 1:
            raise ValueError("decimate must be >= 1")
        cols = {ch: self.render(ch) for ch in sorted(self.channels)}
        n = max((len(c["tick"]) for c in cols.values()), default=0)
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        rate = dz.SAMPLE_RATE_HZ
        for i in range(0, n, decimate):
            for ch, c in cols.items():
                tick = int(c["tick"][i])
                sub = float(c["sub"][i]) if "sub" in c else 0.0
                t0 = float(c["tone0"][i])
                t1 = float(c["tone1"][i])
                buf.write(
                    f"{tick},{(tick + sub) / rate!r},{ch},{t0!r},{t1!r},{t0 + t1!r},"
                    f"{float(c['frame0'][i])!r},{float(c['frame1'][i])!r},{int(c['acc0'][i])},{int(c['acc1'][i])}\n"
                )
        return buf.getvalue()

    def to_json(self, decimate: int = 1) -> str:
        chans = []
        for ch in sorted(self.channels):
            c = self.render(ch)
            sl = slice(None, None, decimate)
            chans.append(
                {
                    "channel": ch,
                    "cycle": [int(x) for x in c["tick"][sl]],
                    "tone0": [float(x) for x in c["tone0"][sl]],
                    "tone1": [float(x) for x in c["tone1"][sl]],
                    "sum": [float(a + b) for a, b in zip(c["tone0"][sl], c["tone1"][sl])],
                    "frame0_deg": [float(x) for x in c["frame0"][sl]],
                    "frame1_deg": [float(x) for x in c["frame1"][sl]],
                    "acc0": [int(x) for x in c["acc0"][sl]],
                    "acc1": [int(x) for x in c["acc1"][sl]],
                }
            )
        header = {
            "sample_rate_hz": dz.SAMPLE_RATE_HZ,
            "t_global_initial": self.t_global_initial,
            "oversample": self.oversample,
            "decimate": decimate,
        }
        return json.dumps({"header": header, "channels": chans}) + "\n"


def simulate(timeline: Timeline, cfg: SimConfig | None = None) -> WaveformTable:
    """Run every channel of ``timeline`` and collect per-tick traces."""
    cfg = cfg or SimConfig()
    sims = []
    for ct in timeline.channels:
        sim = _ChannelSim(ct.channel, cfg)
        for p in ct.pulses:
            sim.pulse(p)
        sims.append(sim)
    end = max((s.t for s in sims), default=cfg.t_global_initial)
    for sim in sims:
        sim.idle(end - sim.t)
    return WaveformTable(cfg.t_global_initial, cfg.oversample, {s.channel: s.result() for s in sims})
