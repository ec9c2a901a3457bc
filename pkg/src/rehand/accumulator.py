"""Nyberg's fast one-way accumulator.

An item is expanded to an l = r*d bit hash code, each d-bit substring is
collapsed to one bit (0 iff the substring is all zeros), and the resulting
r-bit strings are ANDed together. Membership of x in Z holds iff
Z AND alpha(h(x)) == Z. Bit strings are Python ints, most significant bit
first, with an explicit length carried by the parameters.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import CapacityWarning, DecodeFailure, ParamError


@dataclass(frozen=True)
class AccParams:
    d: int = 6
    r: int = 1536

    def __post_init__(self):
        if self.d < 1 or self.r < 1:
            raise ParamError(f"accumulator needs d >= 1 and r >= 1, got d={self.d}, r={self.r}")

    @property
    def l(self) -> int:
        return self.r * self.d

    @property
    def capacity(self) -> int:
        return 2 ** self.d


def long_hash_bytes(item: bytes, nbits: int) -> bytes:
    """SHA-256(item || counter) for counter = 0, 1, ... until nbits are available."""
    nblocks = -(-nbits // 256)
    return b"".join(
        hashlib.sha256(item + c.to_bytes(4, "big")).digest() for c in range(nblocks)
    )


def long_hash(item: bytes, params: AccParams) -> np.ndarray:
    """The l-bit code h(item) as a uint8 array of 0/1 values."""
    stream = np.unpackbits(np.frombuffer(long_hash_bytes(item, params.l), dtype=np.uint8))
    return stream[: params.l]


def alpha_map(longcode: np.ndarray, params: AccParams) -> np.ndarray:
    """Collapse each d-bit substring to 0 (all zeros) or 1 (anything else)."""
    longcode = np.asarray(longcode, dtype=np.uint8)
    if longcode.shape != (params.l,):
        raise ParamError(f"long code has {longcode.size} bits, expected {params.l}")
    return longcode.reshape(params.r, params.d).any(axis=1).astype(np.uint8)


def bits_to_int(bits: np.ndarray) -> int:
    value = int.from_bytes(np.packbits(bits).tobytes(), "big")
    # packbits pads on the right; drop the padding
    return value >> ((-len(bits)) % 8)


def int_to_bits(value: int, n: int) -> np.ndarray:
    pad = (-n) % 8
    raw = (value << pad).to_bytes((n + pad) // 8, "big")
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8))[:n]


def item_pattern(item: bytes, params: AccParams) -> int:
    """alpha(h(item)) as an r-bit int."""
    return bits_to_int(alpha_map(long_hash(item, params), params))


@dataclass(frozen=True)
class AccValue:
    bits: int
    params: AccParams
    count: int = 0

    @classmethod
    def empty(cls, params: AccParams) -> "AccValue":
        return cls((1 << params.r) - 1, params, 0)

    def popcount(self) -> int:
        return bin(self.bits).count("1")

    def to_bytes(self) -> bytes:
        """2-byte d, 4-byte r, 4-byte count, then the r bits packed MSB first."""
        r = self.params.r
        pad = (-r) % 8
        body = (self.bits << pad).to_bytes((r + pad) // 8, "big")
        return (
            self.params.d.to_bytes(2, "big")
            + r.to_bytes(4, "big")
            + self.count.to_bytes(4, "big")
            + body
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "AccValue":
        if len(data) < 10:
            raise DecodeFailure("accumulator header truncated")
        d = int.from_bytes(data[0:2], "big")
        r = int.from_bytes(data[2:6], "big")
        count = int.from_bytes(data[6:10], "big")
        try:
            params = AccParams(d, r)
        except ParamError as exc:
            raise DecodeFailure(str(exc)) from None
        nbytes = -(-r // 8)
        if len(data) != 10 + nbytes:
            raise DecodeFailure(f"accumulator body is {len(data) - 10} bytes, expected {nbytes}")
        pad = (-r) % 8
        raw = int.from_bytes(data[10:], "big")
        if raw & ((1 << pad) - 1):
            raise DecodeFailure("non-zero padding bits")
        return cls(raw >> pad, params, count)


def accumulate(acc: AccValue, item: bytes) -> AccValue:
    """H^Nyb(acc, item) = acc AND alpha(h(item))."""
    if not item:
        raise ParamError("cannot accumulate an empty item")
    if acc.count + 1 > acc.params.capacity:
        warnings.warn(
            f"accumulator now holds {acc.count + 1} items, above capacity {acc.params.capacity}",
            CapacityWarning,
            stacklevel=2,
        )
    return AccValue(acc.bits & item_pattern(item, acc.params), acc.params, acc.count + 1)


def accumulate_all(acc: AccValue, items) -> AccValue:
    for item in items:
        acc = accumulate(acc, item)
    return acc


def contains(acc: AccValue, item: bytes) -> bool:
    """Membership test; never false for an accumulated item, may be spuriously true."""
    return acc.bits & item_pattern(item, acc.params) == acc.bits


def fp_rate_estimate(params: AccParams, m: int, trials: int, rng, probes_per_acc: int = 1) -> float:
    """Monte-Carlo Pr[contains(acc, x)] for a random non-member x.

    Accumulators of m fresh random members are probed with fresh non-members,
    all through the real hash path. Each accumulator serves ``probes_per_acc``
    probes; sharing keeps the estimate unbiased and cuts hashing cost.
    """
    if trials < 1000:
        raise ParamError("fp_rate_estimate needs at least 1000 trials")
    if probes_per_acc < 1:
        raise ParamError("probes_per_acc must be positive")
    hits = 0
    acc = None
    for t in range(trials):
        if t % probes_per_acc == 0:
            acc = AccValue.empty(params)
            for _ in range(m):
                acc = AccValue(acc.bits & item_pattern(rng.bytes(16), params), params, acc.count + 1)
        if contains(acc, rng.bytes(16)):
            hits += 1
    return hits / trials
