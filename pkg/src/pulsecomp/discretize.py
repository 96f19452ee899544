"""Fixed-point conversion between physical units and hardware words.

Word widths follow from the resolutions of the control hardware:

* frequency: signed word, ``819.2 MHz / 2**40`` per LSB
* phase: unsigned word modulo ``2**40``, ``360 / 2**40`` degrees per LSB
* amplitude: signed word, ``200 / 2**15`` per LSB on ``[-100, 100]``
* duration: count of 409.6 MHz clock cycles, 4 to ``2**40``

Scalar conversions use exact rational arithmetic and round half to even.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

WORD_BITS = 40
WORD_MOD = 1 << WORD_BITS

CLOCK_HZ = 409_600_000
CLOCK_PERIOD = 1 / CLOCK_HZ  # 2.44140625 ns (use _CLOCK_PERIOD for exact arithmetic)

# The DDS advances its accumulator at twice the duration clock.
SAMPLE_RATE_HZ = 2 * CLOCK_HZ
TICKS_PER_CYCLE = SAMPLE_RATE_HZ // CLOCK_HZ

_FREQ_LSB = Fraction(SAMPLE_RATE_HZ, WORD_MOD)
_PHASE_LSB = Fraction(360, WORD_MOD)
_AMP_LSB = Fraction(200, 1 << 15)
_CLOCK_PERIOD = Fraction(1, CLOCK_HZ)

FREQ_LSB = float(_FREQ_LSB)
PHASE_LSB = float(_PHASE_LSB)
AMP_LSB = float(_AMP_LSB)

FREQ_MAX_HZ = 409.6e6
FREQ_WORD_MAX = 1 << (WORD_BITS - 1)
AMP_MAX = 100.0
AMP_WORD_MAX = 1 << 14
MIN_CYCLES = 4
MAX_CYCLES = 1 << WORD_BITS


class RangeError(ValueError):
    """A physical value falls outside what the hardware can represent."""


# Fail at import if the inferred widths disagree with the published resolutions.
assert abs(FREQ_LSB - 745.0581e-6) < 1e-10
assert abs(PHASE_LSB - 3.2742e-10) < 1e-14
assert abs(AMP_LSB - 6.1035e-3) < 1e-7
assert MAX_CYCLES * _CLOCK_PERIOD == Fraction("2684.35456")
assert abs(float(MIN_CYCLES * _CLOCK_PERIOD) - 9.77e-9) < 5e-12


def _finite(x, what):
    if not math.isfinite(x):
        raise RangeError(f"{what} must be finite, got {x!r}")


def wrap_degrees(theta):
    """Map an angle (scalar or array) into ``[-180, 180)``."""
    return (theta + 180.0) % 360.0 - 180.0


def discretize_frequency(f: float) -> int:
    """Signed frequency word nearest to ``f`` Hz."""
    _finite(f, "frequency")
    if abs(f) > FREQ_MAX_HZ:
        raise RangeError(f"frequency {f} Hz outside +/-{FREQ_MAX_HZ} Hz")
    return round(Fraction(f) / _FREQ_LSB)


def to_hz(word: int) -> float:
    return float(word * _FREQ_LSB)


def discretize_phase(theta: float) -> int:
    """Unsigned phase word for ``theta`` degrees (any finite angle)."""
    _finite(theta, "phase")
    wrapped = (Fraction(theta) + 180) % 360 - 180
    return round(wrapped / _PHASE_LSB) % WORD_MOD


def to_degrees(word: int) -> float:
    """Phase word to degrees in ``[-180, 180)``."""
    word %= WORD_MOD
    if word >= WORD_MOD // 2:
        word -= WORD_MOD
    return float(word * _PHASE_LSB)


def discretize_amplitude(a: float) -> int:
    _finite(a, "amplitude")
    if abs(a) > AMP_MAX:
        raise RangeError(f"amplitude {a} outside +/-{AMP_MAX}")
    return round(Fraction(a) / _AMP_LSB)


def to_amplitude(word: int) -> float:
    return float(word * _AMP_LSB)


def quantize_duration(t: float) -> int:
    """Number of clock cycles nearest to ``t`` seconds."""
    _finite(t, "duration")
    cycles = round(Fraction(t) / _CLOCK_PERIOD)
    if cycles < MIN_CYCLES or cycles > MAX_CYCLES:
        raise RangeError(
            f"duration {t} s quantizes to {cycles} cycles, "
            f"allowed range is {MIN_CYCLES}..{MAX_CYCLES}"
        )
    return cycles


def cycles_to_seconds(cycles: int) -> float:
    return float(cycles * _CLOCK_PERIOD)


def phase_error_after_epoch(f_eps: int, t_global: int) -> float:
    """Phase in degrees by which two tones ``f_eps`` words apart disagree
    after a sync at global tick ``t_global``."""
    return float((f_eps * t_global) % WORD_MOD * _PHASE_LSB)


# Vectorized float paths used by the simulator on per-tick arrays.

def frequency_words(values: np.ndarray) -> np.ndarray:
    return np.rint(np.asarray(values, dtype=float) / FREQ_LSB).astype(np.int64)


def phase_words(values: np.ndarray) -> np.ndarray:
    wrapped = np.mod(np.asarray(values, dtype=float), 360.0)
    return np.mod(np.rint(wrapped * (WORD_MOD / 360.0)).astype(np.int64), WORD_MOD)


def quantize_amplitudes(values: np.ndarray) -> np.ndarray:
    return np.rint(np.asarray(values, dtype=float) / AMP_LSB) * AMP_LSB
