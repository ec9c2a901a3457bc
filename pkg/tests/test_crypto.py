from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from rehand.crypto import (
    Ciphertext, RandomSource, decode_fields, encode_fields, kdf_next, mac, open_, prf_hash,
    pseudonym_decrypt, pseudonym_encrypt, seal, xor128,
)
from rehand.errors import AuthFailure, DecodeFailure, EncodingError

FIXTURE = Path(__file__).parent / "fixtures" / "crypto_vectors.txt"


def _vectors(kind):
    for line in FIXTURE.read_text().splitlines():
        if line.startswith("#") or not line.strip():
            continue
        k, ins, out = (part.strip() for part in line.split("|"))
        if k == kind:
            yield [b"" if x == "-" else bytes.fromhex(x) for x in ins.split(",")], bytes.fromhex(out)


@pytest.mark.parametrize("fields,expected", list(_vectors("prf")))
def test_prf_golden(fields, expected):
    assert prf_hash(fields) == expected


@pytest.mark.parametrize("inputs,expected", list(_vectors("kdf")))
def test_kdf_golden(inputs, expected):
    assert kdf_next(inputs[0]) == expected


@pytest.mark.parametrize("inputs,expected", list(_vectors("mac")))
def test_mac_golden(inputs, expected):
    assert mac(*inputs) == expected


def test_pseudonym_matches_fips197():
    (key, block), expected = next(_vectors("aes_ecb"))
    assert pseudonym_encrypt(key, block) == expected
    assert pseudonym_decrypt(key, expected) == block


def test_gcm_layer_matches_nist_vector():
    (key, nonce, _), expected = next(_vectors("gcm"))
    ct = Ciphertext(nonce, expected[:16], expected[16:])
    # 16 zero bytes decode as eight empty length-prefixed fields
    assert open_(key, ct) == [b""] * 8


def test_labels_separate_domains():
    k = bytes(16)
    assert len({prf_hash([k]), kdf_next(k), mac(k)}) == 3


def test_prf_rejects_empty_field_list():
    with pytest.raises(EncodingError):
        prf_hash([])


def test_field_too_long():
    with pytest.raises(EncodingError):
        encode_fields([bytes(0x10000)])


@given(st.lists(st.binary(max_size=300), max_size=8))
def test_field_encoding_roundtrip(fields):
    assert decode_fields(encode_fields(fields)) == fields


@given(st.lists(st.binary(min_size=1, max_size=40), min_size=1, max_size=4))
def test_field_encoding_is_injective_across_splits(fields):
    # moving one byte across a field boundary must change the encoding
    if len(fields) > 1:
        shifted = [fields[0] + fields[1][:1], fields[1][1:], *fields[2:]]
        assert encode_fields(shifted) != encode_fields(fields)
    else:
        assert encode_fields([fields[0][:1], fields[0][1:]]) != encode_fields(fields)


def test_truncated_encoding_fails():
    data = encode_fields([b"abcd"])
    with pytest.raises(DecodeFailure):
        decode_fields(data[:-1])


@given(st.lists(st.binary(max_size=64), max_size=6), st.integers(0, 2**32))
def test_seal_open_roundtrip(fields, seed):
    rng = RandomSource(seed)
    key = rng.bytes(16)
    assert open_(key, seal(key, fields, rng)) == fields


def test_open_wrong_key_or_tamper():
    rng = RandomSource(1)
    key = rng.bytes(16)
    ct = seal(key, [b"secret"], rng)
    with pytest.raises(AuthFailure):
        open_(bytes(16), ct)
    raw = bytearray(ct.to_bytes())
    raw[14] ^= 1
    with pytest.raises(AuthFailure):
        open_(key, Ciphertext.from_bytes(bytes(raw)))


def test_ciphertext_bits_and_short_input():
    ct = seal(bytes(16), [bytes(16)], RandomSource(0))
    assert ct.bits == 8 * (12 + 18 + 16)
    with pytest.raises(DecodeFailure):
        Ciphertext.from_bytes(bytes(27))


@given(st.binary(min_size=16, max_size=16), st.binary(min_size=16, max_size=16))
def test_pseudonym_is_a_permutation(key, rid):
    assert pseudonym_decrypt(key, pseudonym_encrypt(key, rid)) == rid


@given(st.binary(min_size=16, max_size=16), st.binary(min_size=16, max_size=16))
def test_xor_involution(a, b):
    assert xor128(xor128(a, b), b) == a


def test_random_source_reproducible():
    a, b = RandomSource(42), RandomSource(42)
    assert a.bytes(32) == b.bytes(32)
    assert a.spawn().bytes(8) == b.spawn().bytes(8)
    assert len(RandomSource.system().bytes(16)) == 16
