"""Independent reference implementations used to derive frozen test values.

Nothing here imports the package under test; each routine recomputes a
quantity from first principles by a different route (decimal arithmetic,
dense linear algebra, big-integer loops) so that agreement is meaningful.
"""

from __future__ import annotations

import math
from decimal import ROUND_HALF_EVEN, Decimal, localcontext

import numpy as np

TWO40 = 2**40
SAMPLE_RATE = Decimal(819_200_000)
CLOCK = Decimal(409_600_000)


def _round_half_even(x: Decimal) -> int:
    return int(x.to_integral_value(rounding=ROUND_HALF_EVEN))


def freq_word(f) -> int:
    with localcontext() as ctx:
        ctx.prec = 60
        return _round_half_even(Decimal(f) * TWO40 / SAMPLE_RATE)


def phase_word(theta) -> int:
    with localcontext() as ctx:
        ctx.prec = 60
        t = Decimal(theta)
        wrapped = (t + 180) % 360
        if wrapped < 0:
            wrapped += 360
        wrapped -= 180
        return _round_half_even(wrapped * TWO40 / 360) % TWO40


def amp_word(a) -> int:
    with localcontext() as ctx:
        ctx.prec = 60
        return _round_half_even(Decimal(a) * 2**15 / 200)


def cycles(t) -> int:
    with localcontext() as ctx:
        ctx.prec = 60
        return _round_half_even(Decimal(t) * CLOCK)


def even_split(total: int, parts: int) -> list[int]:
    """Piece lengths with the remainder given to the leading pieces."""
    q, r = divmod(total, parts)
    return [q + 1 if i < r else q for i in range(parts)]


# -- natural cubic spline by dense solve ---------------------------------------

def natural_spline_dense(knots, x):
    """Natural cubic spline through ``(i, knots[i])`` evaluated at ``x``.

    Builds the full k-by-k system for the knot second derivatives and solves
    it with a general dense solver.
    """
    y = np.asarray(knots, dtype=float)
    k = len(y)
    a = np.zeros((k, k))
    rhs = np.zeros(k)
    a[0, 0] = a[-1, -1] = 1.0
    for i in range(1, k - 1):
        a[i, i - 1], a[i, i], a[i, i + 1] = 1.0, 4.0, 1.0
        rhs[i] = 6.0 * (y[i + 1] - 2 * y[i] + y[i - 1])
    m = np.linalg.solve(a, rhs)
    x = np.asarray(x, dtype=float)
    i = np.clip(np.floor(x).astype(int), 0, k - 2)
    t = x - i
    return (
        m[i] * (1 - t) ** 3 / 6
        + m[i + 1] * t**3 / 6
        + (y[i] - m[i] / 6) * (1 - t)
        + (y[i + 1] - m[i + 1] / 6) * t
    )


# -- accumulators ---------------------------------------------------------------

def accumulator_trace(start: int, increments) -> list[int]:
    """Accumulator value before each tick, with Python big integers."""
    out, acc = [], start
    for inc in increments:
        out.append(acc)
        acc = (acc + int(inc)) % TWO40
    return out


def sync_value(word: int, t_global: int) -> int:
    return (word * t_global) % TWO40


def tone_samples(amp: float, phases) -> list[float]:
    return [amp / 100.0 * math.sin(2 * math.pi * p / TWO40) for p in phases]
