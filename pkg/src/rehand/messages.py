"""Protocol messages and their wire encoding.

Wire format: a 1-byte type tag followed by the message fields in declaration
order, each as a 2-byte big-endian length and the field bytes. Field codecs:

    b16  16 raw bytes (identities, nonces, keys, digests)
    u16  2-byte unsigned big-endian
    u32  4-byte unsigned big-endian
    u64  8-byte unsigned big-endian
    ct   AES-GCM ciphertext: 12-byte nonce || body || 16-byte tag
    acc  serialized accumulator (see AccValue.to_bytes)
    str  ASCII text
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import ClassVar

from .accumulator import AccValue
from .crypto import Ciphertext, decode_fields, encode_fields
from .errors import DecodeFailure

_INT_WIDTH = {"u16": 2, "u32": 4, "u64": 8}


def _encode_value(kind: str, value) -> bytes:
    if kind == "b16":
        return value
    if kind in _INT_WIDTH:
        return value.to_bytes(_INT_WIDTH[kind], "big")
    if kind == "ct":
        return value.to_bytes()
    if kind == "acc":
        return value.to_bytes()
    if kind == "str":
        return value.encode("ascii")
    raise AssertionError(kind)


def _decode_value(kind: str, raw: bytes):
    if kind == "b16":
        if len(raw) != 16:
            raise DecodeFailure(f"expected 16 bytes, got {len(raw)}")
        return raw
    if kind in _INT_WIDTH:
        if len(raw) != _INT_WIDTH[kind]:
            raise DecodeFailure(f"expected {_INT_WIDTH[kind]}-byte integer, got {len(raw)}")
        return int.from_bytes(raw, "big")
    if kind == "ct":
        return Ciphertext.from_bytes(raw)
    if kind == "acc":
        return AccValue.from_bytes(raw)
    if kind == "str":
        try:
            return raw.decode("ascii")
        except UnicodeDecodeError:
            raise DecodeFailure("non-ascii text field") from None
    raise AssertionError(kind)


def _value_bits(kind: str, value) -> int:
    if kind == "b16":
        return 128
    if kind in _INT_WIDTH:
        return 8 * _INT_WIDTH[kind]
    if kind == "ct":
        return value.bits
    if kind == "acc":
        return value.params.r
    return 8 * len(value)


_REGISTRY: dict[int, type["Message"]] = {}


class Message:
    TAG: ClassVar[int]
    LAYOUT: ClassVar[tuple[str, ...]]

    def __init_subclass__(cls, **kw):
        super().__init_subclass__(**kw)
        if cls.TAG in _REGISTRY:
            raise AssertionError(f"duplicate message tag {cls.TAG}")
        _REGISTRY[cls.TAG] = cls

    def encode(self) -> bytes:
        values = [getattr(self, f.name) for f in fields(self)]
        return bytes([self.TAG]) + encode_fields(
            _encode_value(kind, v) for kind, v in zip(self.LAYOUT, values)
        )

    def payload_bits(self) -> int:
        """Bits of protocol content, excluding tag and length framing."""
        return sum(_value_bits(kind, getattr(self, f.name)) for kind, f in zip(self.LAYOUT, fields(self)))

    @property
    def name(self) -> str:
        return type(self).__name__


def decode_message(data: bytes) -> Message:
    if not data:
        raise DecodeFailure("empty message")
    cls = _REGISTRY.get(data[0])
    if cls is None:
        raise DecodeFailure(f"unknown message tag {data[0]}")
    raw = decode_fields(data[1:])
    if len(raw) != len(cls.LAYOUT):
        raise DecodeFailure(f"{cls.__name__} expects {len(cls.LAYOUT)} fields, got {len(raw)}")
    return cls(*(_decode_value(k, r) for k, r in zip(cls.LAYOUT, raw)))


@dataclass(frozen=True)
class InitialRequest(Message):
    TAG = 1
    LAYOUT = ("b16", "ct")
    pid: bytes
    c1: Ciphertext


@dataclass(frozen=True)
class InitialResponseCore(Message):
    """HSS -> MME."""

    TAG = 2
    LAYOUT = ("ct", "b16")
    c2: Ciphertext
    k_m: bytes


@dataclass(frozen=True)
class InitialResponseENB(Message):
    """MME -> eNB."""

    TAG = 3
    LAYOUT = ("ct", "b16")
    c2: Ciphertext
    k_en: bytes


@dataclass(frozen=True)
class HeNBKeyDelivery(Message):
    """eNB -> HeNB: C_2 for the UE plus the HeNB session key."""

    TAG = 4
    LAYOUT = ("ct", "b16")
    c2: Ciphertext
    k_he: bytes


@dataclass(frozen=True)
class InitialResponseHeNB(Message):
    """HeNB -> UE."""

    TAG = 5
    LAYOUT = ("ct",)
    c2: Ciphertext


@dataclass(frozen=True)
class FastRequest(Message):
    TAG = 6
    LAYOUT = ("b16", "u16", "b16", "u64")
    lam: bytes
    index: int
    r_u: bytes
    t_ex: int


@dataclass(frozen=True)
class FastChallenge(Message):
    TAG = 7
    LAYOUT = ("b16", "b16", "ct")
    delta: bytes
    r_h: bytes
    c: Ciphertext


@dataclass(frozen=True)
class FastConfirm(Message):
    TAG = 8
    LAYOUT = ("b16",)
    delta_prime: bytes


@dataclass(frozen=True)
class RListPush(Message):
    TAG = 9
    LAYOUT = ("u32", "u64", "acc", "b16")
    region: int
    slot: int
    acc: AccValue
    sigma: bytes


@dataclass(frozen=True)
class Reject(Message):
    TAG = 10
    LAYOUT = ("str",)
    code: str
