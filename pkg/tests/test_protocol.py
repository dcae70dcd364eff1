"""Wire framing, envelope versioning, and sequence bookkeeping."""

import json
import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from safecage.protocol import (MAX_FRAME_BYTES, PROTOCOL_VERSION, FrameDecoder,
                               SequenceSource, SequenceTracker, WireMessage,
                               encode_frame)


def msg(kind="StateUpdate", vehicle="van-1", sender="veh", seq=0, payload=None):
    return WireMessage(kind=kind, vehicle_id=vehicle, sender=sender,
                       sequence=seq, payload=payload or {})


# -- framing ---------------------------------------------------------------------

def test_roundtrip_single_frame():
    m = msg(payload={"Driving Mode": "Emergency Stop", "tick": 7})
    out = FrameDecoder().feed(encode_frame(m))
    assert out == [m]


def test_frame_is_length_prefixed_json():
    raw = encode_frame(msg(seq=3))
    (length,) = struct.unpack(">I", raw[:4])
    body = json.loads(raw[4:])
    assert length == len(raw) - 4
    assert body["version"] == PROTOCOL_VERSION
    assert body["sequence"] == 3


@settings(max_examples=100, deadline=None)
@given(cut=st.data(), n=st.integers(1, 6))
def test_decoder_reassembles_arbitrary_chunking(cut, n):
    msgs = [msg(seq=i, payload={"i": i}) for i in range(n)]
    stream = b"".join(encode_frame(m) for m in msgs)
    decoder = FrameDecoder()
    out = []
    pos = 0
    while pos < len(stream):
        step = cut.draw(st.integers(1, 7))
        out.extend(decoder.feed(stream[pos:pos + step]))
        pos += step
    assert out == msgs


def test_oversized_frame_is_rejected():
    decoder = FrameDecoder()
    with pytest.raises(ValueError):
        decoder.feed(struct.pack(">I", MAX_FRAME_BYTES + 1))


def test_wrong_version_is_rejected():
    body = msg().to_dict()
    body["version"] = 99
    with pytest.raises(ValueError):
        WireMessage.from_dict(body)


# -- sequence handling --------------------------------------------------------------

def test_tracker_drops_stale_and_duplicate():
    tracker = SequenceTracker()
    assert tracker.accept(msg(seq=0))
    assert tracker.accept(msg(seq=1))
    assert not tracker.accept(msg(seq=1))
    assert not tracker.accept(msg(seq=0))
    assert tracker.accept(msg(seq=5))


def test_tracker_streams_are_independent():
    tracker = SequenceTracker()
    assert tracker.accept(msg(sender="a", seq=4))
    assert tracker.accept(msg(sender="b", seq=0))
    assert tracker.accept(msg(sender="a", vehicle="van-2", seq=0))


def test_source_is_monotone_per_stream():
    src = SequenceSource()
    seqs = [src.next("ccc-1", "van-1") for _ in range(5)]
    assert seqs == [0, 1, 2, 3, 4]
    assert src.next("ccc-2", "van-1") == 0
