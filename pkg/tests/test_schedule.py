import json

import pytest
from hypothesis import given, settings, strategies as st

from pulsecomp import discretize as dz
from pulsecomp.core import PulseRecord
from pulsecomp.schedule import (
    CollisionError,
    GateBlock,
    ParallelGroup,
    ValidationError,
    build_timeline,
    encode_pulse,
    merge_parallel,
    nop_pulse,
    pad_to_common_duration,
    sequence,
    timeline_from_json,
    timeline_to_json,
)

import oracles


def square(ch, t=1.25e-6, amp=50.0, **kw):
    return PulseRecord(ch, t, freq0=200e6, amp0=amp, **kw)


def block(*pulses):
    return GateBlock(pulses)


def test_back_to_back_no_gaps():
    tl = build_timeline([block(square(3))] * 4, channel_count=4)
    ch = tl.channel(3)
    assert [p.cycles for p in ch.pulses] == [512] * 4
    assert ch.starts == [0, 512, 1024, 1536]
    assert tl.program_cycles == 2048


def test_block_and_intra_block_order():
    a, b, c = square(1, amp=10), square(1, amp=20), square(1, amp=30)
    seq = sequence([block(a, b), block(c)], channel_count=2)
    assert [p.amp0.segments[0].word for p in seq[1]] == [dz.discretize_amplitude(v) for v in (10, 20, 30)]


def test_three_chaining_forms_identical():
    g, gap = square(2), PulseRecord(2, 0.25e-6)
    separate = [block(g), block(gap)] * 3
    single = [block(g, gap)] * 3
    multi = [block(g, gap, g, gap, g, gap)]
    tls = [build_timeline(x, channel_count=3) for x in (separate, single, multi)]
    assert tls[0] == tls[1] == tls[2]
    assert timeline_to_json(tls[0]) == timeline_to_json(tls[1]) == timeline_to_json(tls[2])


def test_empty_channel_only_padding():
    tl = build_timeline([block(square(1))], channel_count=3)
    assert tl.channel(0).pulses == (nop_pulse(0, 512),)
    assert tl.channel(2).pulses == (nop_pulse(2, 512),)
    assert dict(tl.padding) == {0: 512, 1: 0, 2: 512}


def test_two_channel_padding():
    ch1 = [PulseRecord(1, 2.5e-6, amp0=(0, 50)), PulseRecord(1, 2.5e-6, amp0=50), PulseRecord(1, 2.5e-6, amp0=(50, 0))]
    ch2 = [PulseRecord(2, 1e-6, amp0=[20, 40]), PulseRecord(2, 3e-6, amp0=30)]
    tl = build_timeline([block(*ch1, *ch2)], channel_count=3)
    assert tl.channel(1).total_cycles == tl.channel(2).total_cycles == oracles.cycles(7.5e-6) == 3072
    pad = tl.channel(2).pulses[-1]
    assert pad.is_nop
    assert pad.cycles == 3072 - oracles.cycles(1e-6) - oracles.cycles(3e-6)
    assert abs(dz.cycles_to_seconds(pad.cycles) - 3.5e-6) < dz.CLOCK_PERIOD


def test_short_deficit_extends_trailing_nop():
    chans, padding = pad_to_common_duration(
        {0: [encode_pulse(square(0, t=dz.cycles_to_seconds(100)))], 1: [nop_pulse(1, 98)]}, channel_count=2
    )
    assert [p.cycles for p in chans[1]] == [100]
    assert chans[1][0].is_nop and padding == {0: 0, 1: 2}


def test_short_deficit_without_nop_extends_program():
    chans, padding = pad_to_common_duration(
        {0: [encode_pulse(square(0, t=dz.cycles_to_seconds(100)))], 1: [encode_pulse(square(1, t=dz.cycles_to_seconds(98)))]},
        channel_count=2,
    )
    assert padding == {0: 4, 1: 6}
    assert sum(p.cycles for p in chans[0]) == sum(p.cycles for p in chans[1]) == 104
    assert all(p.cycles >= 4 for ps in chans.values() for p in ps)


def test_parallel_disjoint_union():
    x = [block(square(2))]
    y = [block(square(3, amp=20))]
    tl = build_timeline([ParallelGroup((x, y))], channel_count=4)
    assert tl.channel(2).pulses[0] == encode_pulse(square(2))
    assert tl.channel(3).pulses[0] == encode_pulse(square(3, amp=20))


def test_parallel_symmetric_when_disjoint():
    x = [block(square(1), square(2, t=2e-6))]
    y = [block(square(3, amp=20))]
    assert build_timeline([ParallelGroup((x, y))], 4) == build_timeline([ParallelGroup((y, x))], 4)


def test_parallel_identical_shared_channel_accepted():
    x = [block(square(0, amp=60), square(2))]
    y = [block(square(0, amp=60), square(3, phase0=90))]
    tl = build_timeline([ParallelGroup((x, y))], channel_count=4)
    assert len(tl.channel(0).pulses) == 1
    assert tl.shared_channels == (0,)


def test_parallel_shared_channel_same_words_accepted():
    # different source values that round to the same amplitude word
    x = [block(square(0, amp=50.0))]
    y = [block(square(0, amp=50.0 + dz.AMP_LSB / 4))]
    build_timeline([ParallelGroup((x, y))], channel_count=1)


def test_parallel_one_word_difference_rejected():
    x = [block(square(0, amp=60))]
    y = [block(square(0, amp=60 + dz.AMP_LSB))]
    with pytest.raises(CollisionError) as err:
        build_timeline([ParallelGroup((x, y))], channel_count=1)
    assert err.value.channel == 0
    assert "amp0" in str(err.value)


def test_merge_parallel_length_mismatch():
    a = {1: [encode_pulse(square(1))]}
    b = {1: [encode_pulse(square(1))] * 2}
    with pytest.raises(CollisionError, match="pulse count"):
        merge_parallel([a, b])


def test_invalid_pulse_rejected():
    with pytest.raises(ValidationError) as err:
        encode_pulse(PulseRecord(1, 1e-6, amp0=70, amp1=40))
    assert {d.code for d in err.value.diagnostics} == {"AmplitudeSumExceeded"}
    with pytest.raises(ValidationError):
        build_timeline([block(square(9))], channel_count=8)


def test_discrete_layout():
    p = encode_pulse(PulseRecord(1, 5e-6, amp0=[10, 20, 30]))
    assert [s.cycles for s in p.amp0.segments] == oracles.even_split(2048, 3) == [683, 683, 682]


def test_spline_layout_and_winding():
    p = encode_pulse(PulseRecord(1, 3e-6, phase0=(0, 240, 480, 720)))
    assert [s.cycles for s in p.phase0.segments] == oracles.even_split(1229, 3)
    assert all(-180 <= s.coeffs[0] < 180 for s in p.phase0.segments)
    q = encode_pulse(PulseRecord(1, 3e-6, amp0=(0, 40, 10, 30)))
    assert q.amp0.segments[1].coeffs[0] == pytest.approx(40)


def test_json_roundtrip():
    blocks = [
        block(PulseRecord(1, 5e-6, freq0=[5e6, 7e6], amp0=(0, 60, 20), phase0=(0, 400), framerot0=15,
                          fwd_frame0_mask=1, sync_mask=2, waittrig=True)),
        ParallelGroup(([block(square(0))], [block(square(0)), block(square(2))])),
    ]
    tl = build_timeline(blocks, channel_count=3)
    text = timeline_to_json(tl)
    back = timeline_from_json(text)
    assert back == tl
    assert dict(back.padding) == dict(tl.padding)
    assert timeline_to_json(back) == text
    doc = json.loads(text)
    assert doc["header"] == {"clock_hz": 409_600_000, "channel_count": 3, "program_cycles": tl.program_cycles}
    seg = doc["channels"][1]["segments"][0]
    assert set(seg) == {"start_cycle", "cycles", "tone0", "tone1", "masks", "frame_inputs", "waittrig"}
    assert seg["tone0"]["freq"]["mode"] == "discrete"
    assert seg["tone0"]["amp"]["mode"] == "spline"


durations = st.integers(4, 5000).map(dz.cycles_to_seconds)
records = st.builds(
    lambda ch, t, amp: PulseRecord(ch, t, freq0=10e6, amp0=amp),
    st.integers(0, 3),
    durations,
    st.floats(-100, 100, allow_nan=False),
)
gate_blocks = st.lists(records, min_size=1, max_size=4).map(lambda ps: GateBlock(tuple(ps)))


@settings(max_examples=60, deadline=None)
@given(st.lists(gate_blocks, max_size=5), st.lists(gate_blocks, max_size=5))
def test_sequencing_associative(a, b):
    whole = sequence(a + b, 4)
    first, second = sequence(a, 4), sequence(b, 4)
    for ch in range(4):
        assert whole.get(ch, []) == first.get(ch, []) + second.get(ch, [])


@settings(max_examples=60, deadline=None)
@given(st.lists(gate_blocks, min_size=1, max_size=6))
def test_padding_equalizes(blocks):
    tl = build_timeline(blocks, 4)
    totals = {c.total_cycles for c in tl.channels}
    assert len(totals) == 1
    assert all(p.cycles >= 4 for c in tl.channels for p in c.pulses)


@settings(max_examples=40, deadline=None)
@given(st.lists(gate_blocks, min_size=1, max_size=3), st.integers(0, 5))
def test_loop_unrolling_equivalence(body, n):
    assert sequence(body * n, 4) == {
        ch: ps * n for ch, ps in sequence(body, 4).items() if n
    }


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 16), st.integers(4, 100_000))
def test_discrete_piece_sums(n, cycles):
    if cycles < n:
        return
    t = dz.cycles_to_seconds(cycles)
    p = encode_pulse(PulseRecord(0, t, amp0=[1.0] * n))
    pieces = [s.cycles for s in p.amp0.segments]
    assert sum(pieces) == dz.quantize_duration(t)
    assert all(abs(c - cycles / n) < 1 for c in pieces)
