"""Deterministic symmetric primitives used by the protocol.

H/F are SHA-256 truncated to 128 bits over a length-prefixed field encoding,
E/D is AES-128-GCM, and the pseudonym map is a single AES-128 block
encryption (a keyed 128-bit permutation).
"""

from __future__ import annotations

import hashlib
import hmac
import os
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .errors import AuthFailure, DecodeFailure, EncodingError

KEY_BYTES = 16
DIGEST_BYTES = 16
NONCE_BYTES = 16
GCM_NONCE_BYTES = 12
TAG_BYTES = 16
MAX_FIELD = 0xFFFF

LABEL_H = b"H"
LABEL_F = b"F"
LABEL_MAC = b"MAC"


class RandomSource:
    """Seedable byte/integer source. Single owner; never share between entities."""

    def __init__(self, seed: int | None = None):
        self._system = seed is None
        self._rng = random.SystemRandom() if self._system else random.Random(seed)
        self.seed = seed

    @classmethod
    def system(cls) -> "RandomSource":
        return cls(None)

    def bytes(self, n: int) -> bytes:
        if self._system:
            return os.urandom(n)
        return self._rng.randbytes(n)

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi]."""
        return self._rng.randint(lo, hi)

    def random(self) -> float:
        return self._rng.random()

    def expovariate(self, rate: float) -> float:
        return self._rng.expovariate(rate)

    def choice(self, seq: Sequence):
        return self._rng.choice(seq)

    def spawn(self) -> "RandomSource":
        """Child source derived from this one, so sub-streams stay reproducible."""
        if self._system:
            return RandomSource.system()
        return RandomSource(self._rng.getrandbits(64))


def _check_len(name: str, value: bytes, n: int) -> bytes:
    if not isinstance(value, (bytes, bytearray)) or len(value) != n:
        raise EncodingError(f"{name} must be exactly {n} bytes")
    return bytes(value)


def encode_fields(fields: Iterable[bytes]) -> bytes:
    """Concatenate fields, each prefixed with its 2-byte big-endian length."""
    out = bytearray()
    for f in fields:
        if not isinstance(f, (bytes, bytearray)):
            raise EncodingError(f"field of type {type(f).__name__} is not bytes")
        if len(f) > MAX_FIELD:
            raise EncodingError(f"field of {len(f)} bytes exceeds {MAX_FIELD}")
        out += len(f).to_bytes(2, "big")
        out += f
    return bytes(out)


def decode_fields(data: bytes) -> list[bytes]:
    fields = []
    i = 0
    while i < len(data):
        if i + 2 > len(data):
            raise DecodeFailure("truncated length prefix")
        n = int.from_bytes(data[i:i + 2], "big")
        i += 2
        if i + n > len(data):
            raise DecodeFailure("field runs past end of buffer")
        fields.append(bytes(data[i:i + n]))
        i += n
    return fields


def prf_hash(fields: Sequence[bytes], label: bytes = LABEL_H) -> bytes:
    """H(fields): first 128 bits of SHA-256 over label + canonical encoding."""
    if not fields:
        raise EncodingError("prf_hash needs at least one field")
    return hashlib.sha256(encode_fields([label, *fields])).digest()[:DIGEST_BYTES]


def kdf_next(key: bytes) -> bytes:
    """F(key), the one-step key derivation used along the key chain."""
    return prf_hash([_check_len("key", key, KEY_BYTES)], label=LABEL_F)


def mac(key: bytes, *fields: bytes) -> bytes:
    return prf_hash([key, *fields], label=LABEL_MAC)


def digest_equal(a: bytes, b: bytes) -> bool:
    return hmac.compare_digest(a, b)


@dataclass(frozen=True)
class Ciphertext:
    nonce: bytes
    body: bytes
    tag: bytes

    def __post_init__(self):
        _check_len("nonce", self.nonce, GCM_NONCE_BYTES)
        _check_len("tag", self.tag, TAG_BYTES)

    def to_bytes(self) -> bytes:
        return self.nonce + self.body + self.tag

    @classmethod
    def from_bytes(cls, data: bytes) -> "Ciphertext":
        if len(data) < GCM_NONCE_BYTES + TAG_BYTES:
            raise DecodeFailure("ciphertext shorter than nonce + tag")
        return cls(data[:GCM_NONCE_BYTES], data[GCM_NONCE_BYTES:-TAG_BYTES], data[-TAG_BYTES:])

    @property
    def bits(self) -> int:
        return 8 * (len(self.nonce) + len(self.body) + len(self.tag))


def seal(key: bytes, plaintext: Sequence[bytes], rng: RandomSource) -> Ciphertext:
    """E_key(fields) with a fresh 96-bit nonce."""
    nonce = rng.bytes(GCM_NONCE_BYTES)
    out = AESGCM(_check_len("key", key, KEY_BYTES)).encrypt(nonce, encode_fields(plaintext), None)
    return Ciphertext(nonce, out[:-TAG_BYTES], out[-TAG_BYTES:])


def open_(key: bytes, ct: Ciphertext) -> list[bytes]:
    """D_key(ct). Raises AuthFailure on tag mismatch, DecodeFailure on bad framing."""
    try:
        pt = AESGCM(_check_len("key", key, KEY_BYTES)).decrypt(ct.nonce, ct.body + ct.tag, None)
    except InvalidTag:
        raise AuthFailure("ciphertext failed authentication") from None
    return decode_fields(pt)


def _aes_block(key: bytes, block: bytes, decrypt: bool) -> bytes:
    cipher = Cipher(algorithms.AES(_check_len("K_H", key, KEY_BYTES)), modes.ECB())
    op = cipher.decryptor() if decrypt else cipher.encryptor()
    return op.update(_check_len("block", block, 16)) + op.finalize()


def pseudonym_encrypt(k_h: bytes, rid: bytes) -> bytes:
    """pID = E_{K_H}(rID) as a deterministic 128-bit permutation."""
    return _aes_block(k_h, rid, decrypt=False)


def pseudonym_decrypt(k_h: bytes, pid: bytes) -> bytes:
    return _aes_block(k_h, pid, decrypt=True)


def xor128(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(_check_len("a", a, 16), _check_len("b", b, 16)))
