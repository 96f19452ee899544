"""Natural cubic splines through equally spaced knots.

Each segment is stored as ``c0 + c1*u + c2*u**2 + c3*u**3`` in normalized
segment time ``u`` in ``[0, 1]``, so the fit does not depend on how many
clock cycles the segment eventually lasts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretize import wrap_degrees


def split_cycles(total_cycles: int, parts: int) -> list[int]:
    """Split ``total_cycles`` into ``parts`` near-equal counts.

    The first ``total_cycles % parts`` pieces receive the extra cycle.
    """
    if parts < 1:
        raise ValueError("parts must be >= 1")
    if total_cycles < parts:
        raise ValueError(f"cannot split {total_cycles} cycles into {parts} non-empty pieces")
    base, extra = divmod(total_cycles, parts)
    return [base + 1 if i < extra else base for i in range(parts)]


def _second_derivatives(y: np.ndarray) -> np.ndarray:
    # Unit knot spacing: M[i-1] + 4 M[i] + M[i+1] = 6 (y[i+1] - 2 y[i] + y[i-1]),
    # with M[0] = M[-1] = 0. Thomas algorithm on the interior unknowns.
    k = len(y)
    m = np.zeros(k)
    n = k - 2
    if n <= 0:
        return m
    rhs = 6.0 * (y[2:] - 2.0 * y[1:-1] + y[:-2])
    c = np.empty(n)
    d = np.empty(n)
    c[0] = 1.0 / 4.0
    d[0] = rhs[0] / 4.0
    for i in range(1, n):
        denom = 4.0 - c[i - 1]
        c[i] = 1.0 / denom
        d[i] = (rhs[i] - d[i - 1]) / denom
    m[n] = d[n - 1]
    for i in range(n - 2, -1, -1):
        m[i + 1] = d[i] - c[i] * m[i + 2]
    return m


def natural_coefficients(knots) -> np.ndarray:
    """Coefficient array of shape ``(k - 1, 4)`` for ``k`` knots."""
    y = np.asarray(knots, dtype=float)
    if y.ndim != 1 or len(y) < 2:
        raise ValueError("a spline needs at least two knots")
    m = _second_derivatives(y)
    coeffs = np.empty((len(y) - 1, 4))
    coeffs[:, 0] = y[:-1]
    coeffs[:, 1] = (y[1:] - y[:-1]) - (2.0 * m[:-1] + m[1:]) / 6.0
    coeffs[:, 2] = m[:-1] / 2.0
    coeffs[:, 3] = (m[1:] - m[:-1]) / 6.0
    return coeffs


@dataclass(frozen=True)
class CubicSegment:
    c0: float
    c1: float
    c2: float
    c3: float
    duration_cycles: int

    def at(self, u):
        return ((self.c3 * u + self.c2) * u + self.c1) * u + self.c0

    @property
    def coeffs(self) -> tuple:
        return (self.c0, self.c1, self.c2, self.c3)


@dataclass(frozen=True)
class SplineProgram:
    segments: tuple

    @property
    def total_cycles(self) -> int:
        return sum(s.duration_cycles for s in self.segments)

    def starts(self) -> list[int]:
        out, acc = [], 0
        for s in self.segments:
            out.append(acc)
            acc += s.duration_cycles
        return out


def fit_natural_cubic(knots, total_cycles: int) -> SplineProgram:
    """Fit a natural cubic spline and lay its segments over ``total_cycles``."""
    knots = list(knots)
    if len(knots) < 2:
        raise ValueError("fit_natural_cubic needs at least two knots")
    coeffs = natural_coefficients(knots)
    durations = split_cycles(total_cycles, len(knots) - 1)
    segs = tuple(
        CubicSegment(float(c[0]), float(c[1]), float(c[2]), float(c[3]), n) for c, n in zip(coeffs, durations)
    )
    return SplineProgram(segs)


def evaluate(sp: SplineProgram, cycle) -> float:
    """Value of the spline at clock position ``cycle`` (may be fractional)."""
    total = sp.total_cycles
    if not 0 <= cycle < total:
        raise ValueError(f"cycle {cycle} outside [0, {total})")
    start = 0
    for seg in sp.segments:
        if cycle < start + seg.duration_cycles:
            return float(seg.at((cycle - start) / seg.duration_cycles))
        start += seg.duration_cycles
    raise AssertionError("unreachable")


def sample(sp: SplineProgram, samples_per_cycle: int = 1) -> np.ndarray:
    """Evaluate at every sub-cycle sample position, vectorized."""
    parts = []
    for seg in sp.segments:
        n = seg.duration_cycles * samples_per_cycle
        parts.append(seg.at(np.arange(n) / n))
    return np.concatenate(parts) if parts else np.zeros(0)


def wind_phase_coefficients(sp: SplineProgram) -> SplineProgram:
    """Wrap each segment's constant term into ``[-180, 180)`` degrees."""
    return SplineProgram(
        tuple(
            CubicSegment(float(wrap_degrees(s.c0)), s.c1, s.c2, s.c3, s.duration_cycles) for s in sp.segments
        )
    )
