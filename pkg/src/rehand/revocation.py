"""Time-slotted revocation lists.

The HSS keeps one accumulator per region for the current slot. Revoking a
user absorbs the region secret D_ij of each live warrant into its region's
list and pushes the list at once. A warrant is accumulated only if it outlives
the end of the slot in which it is revoked; otherwise expiry takes care of it.
At a slot boundary a new list is opened per region, seeded with every revoked
warrant that is still alive at the slot start, and pushed to the region.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

from .accumulator import AccParams, AccValue, accumulate
from .crypto import digest_equal, mac
from .errors import ParamError, UnknownUser
from .messages import RListPush

if TYPE_CHECKING:
    from .protocol import HSS


@dataclass(frozen=True)
class TimeSlot:
    index: int
    start: int
    length: int

    @property
    def end(self) -> int:
        return self.start + self.length

    @classmethod
    def containing(cls, t: int, length: int) -> "TimeSlot":
        if length <= 0:
            raise ParamError("slot length must be positive")
        idx = t // length
        return cls(idx, idx * length, length)

    def next(self) -> "TimeSlot":
        return TimeSlot(self.index + 1, self.end, self.length)

    def __contains__(self, t: int) -> bool:
        return self.start <= t < self.end


def list_mac(gk: bytes, slot: int, acc: AccValue) -> bytes:
    """sigma = H(GK_j, R), with the slot index bound in so old lists cannot be replayed."""
    return mac(gk, slot.to_bytes(8, "big"), acc.to_bytes())


@dataclass(frozen=True)
class RevocationList:
    region: int
    slot: int
    acc: AccValue
    sigma: bytes

    @classmethod
    def build(cls, region: int, slot: int, acc: AccValue, gk: bytes) -> "RevocationList":
        return cls(region, slot, acc, list_mac(gk, slot, acc))

    def verify(self, gk: bytes) -> bool:
        return digest_equal(self.sigma, list_mac(gk, self.slot, self.acc))

    def to_push(self) -> RListPush:
        return RListPush(self.region, self.slot, self.acc, self.sigma)

    @classmethod
    def from_push(cls, msg: RListPush) -> "RevocationList":
        return cls(msg.region, msg.slot, msg.acc, msg.sigma)


@dataclass
class RevokedEntry:
    ue_id: int
    region: int
    d_ij: bytes
    t_ex: int
    slot: int


def should_accumulate(t_ex: int, revoke_time: int, slot: TimeSlot) -> bool:
    """True iff the warrant is still live when the next list is issued."""
    if revoke_time not in slot:
        raise ParamError(f"revocation time {revoke_time} outside slot [{slot.start}, {slot.end})")
    return t_ex > slot.end


def empty_lists(regions, slot: int, params: AccParams) -> dict[int, RevocationList]:
    return {
        j: RevocationList.build(j, slot, AccValue.empty(params), secrets.gk)
        for j, secrets in regions.items()
    }


def revoke_user(hss: "HSS", ue_id: int, now: int) -> list[RListPush]:
    """Actively revoke every live warrant of ``ue_id`` and deregister the user.

    Returns one push per region whose list changed.
    """
    if ue_id not in hss.known_ids:
        raise UnknownUser(f"no user with ID {ue_id}")
    slot = hss.slot
    touched: dict[int, RevocationList] = {}
    for entry in hss.ledger.get(ue_id, []):
        if entry.revoked or entry.t_ex <= now:
            continue
        entry.revoked = True
        if not should_accumulate(entry.t_ex, now, slot):
            continue
        hss.revoked.append(RevokedEntry(ue_id, entry.region, entry.d_ij, entry.t_ex, slot.index))
        current = hss.rlists[entry.region]
        acc = accumulate(current.acc, entry.d_ij)
        touched[entry.region] = hss.rlists[entry.region] = RevocationList.build(
            entry.region, slot.index, acc, hss.regions[entry.region].gk
        )
    hss.deregister(ue_id)
    return [touched[j].to_push() for j in sorted(touched)]


def issue_slot_lists(hss: "HSS", slot: TimeSlot) -> list[RListPush]:
    """Open the lists for ``slot`` and return one push per region."""
    hss.slot = slot
    hss.revoked = [e for e in hss.revoked if e.t_ex > slot.start]
    hss.prune_ledger(slot.start)
    pushes = []
    for j in sorted(hss.regions):
        acc = AccValue.empty(hss.acc_params)
        for e in hss.revoked:
            if e.region == j:
                acc = accumulate(acc, e.d_ij)
        hss.rlists[j] = RevocationList.build(j, slot.index, acc, hss.regions[j].gk)
        pushes.append(hss.rlists[j].to_push())
    return pushes
