import pytest
from hypothesis import given, strategies as st

from rehand.accumulator import AccParams, AccValue
from rehand.crypto import Ciphertext
from rehand.errors import DecodeFailure
from rehand.messages import (
    FastChallenge, FastConfirm, FastRequest, HeNBKeyDelivery, InitialRequest,
    InitialResponseCore, InitialResponseENB, InitialResponseHeNB, Reject, RListPush,
    decode_message,
)

b16 = st.binary(min_size=16, max_size=16)
cts = st.builds(Ciphertext, st.binary(min_size=12, max_size=12), st.binary(max_size=80),
                st.binary(min_size=16, max_size=16))
accs = st.builds(lambda bits, n: AccValue(bits, AccParams(4, 40), n),
                 st.integers(0, 2**40 - 1), st.integers(0, 99))

messages = st.one_of(
    st.builds(InitialRequest, b16, cts),
    st.builds(InitialResponseCore, cts, b16),
    st.builds(InitialResponseENB, cts, b16),
    st.builds(HeNBKeyDelivery, cts, b16),
    st.builds(InitialResponseHeNB, cts),
    st.builds(FastRequest, b16, st.integers(0, 2**16 - 1), b16, st.integers(0, 2**64 - 1)),
    st.builds(FastChallenge, b16, b16, cts),
    st.builds(FastConfirm, b16),
    st.builds(RListPush, st.integers(0, 2**32 - 1), st.integers(0, 2**64 - 1), accs, b16),
    st.builds(Reject, st.text(alphabet="abcdefghijklmnopqrstuvwxyz_", max_size=30)),
)


@given(messages)
def test_roundtrip(msg):
    assert decode_message(msg.encode()) == msg


@given(messages)
def test_encoding_starts_with_tag(msg):
    assert msg.encode()[0] == msg.TAG


def test_fast_flow_sizes():
    req = FastRequest(bytes(16), 3, bytes(16), 10)
    assert req.payload_bits() == 128 + 16 + 128 + 64
    assert FastConfirm(bytes(16)).payload_bits() == 128
    ct = Ciphertext(bytes(12), bytes(22), bytes(16))
    assert FastChallenge(bytes(16), bytes(16), ct).payload_bits() == 256 + 8 * 50


def test_rlist_bits_count_accumulator_length():
    push = RListPush(0, 1, AccValue.empty(AccParams(6, 1536)), bytes(16))
    assert push.payload_bits() == 32 + 64 + 1536 + 128


@pytest.mark.parametrize("data", [
    b"",
    bytes([99]),
    bytes([8]),                                 # FastConfirm without its field
    bytes([8, 0, 15]) + bytes(15),              # 15-byte digest
    bytes([8, 0, 16]) + bytes(16) + b"\x00",   # trailing garbage
    bytes([6, 0, 16]) + bytes(16) + bytes([0, 3, 0, 0, 0]) + bytes(26),
    bytes([10, 0, 1, 0xff]),                    # non-ascii reject code
])
def test_malformed_input_raises_decode_failure(data):
    with pytest.raises(DecodeFailure):
        decode_message(data)


@given(messages, st.data())
def test_single_bit_flip_never_crashes(msg, data):
    raw = bytearray(msg.encode())
    bit = data.draw(st.integers(0, 8 * len(raw) - 1))
    raw[bit // 8] ^= 0x80 >> (bit % 8)
    try:
        out = decode_message(bytes(raw))
    except DecodeFailure:
        return
    assert out != msg
