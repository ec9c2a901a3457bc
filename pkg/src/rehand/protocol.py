"""Entity state machines for registration, initial handover and fast handover.

Each entity owns its state and talks to the others only through message
objects. Methods raise a ProtocolReject subclass when a check fails; the
raising entity leaves its state untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .accumulator import AccParams, contains
from .crypto import (
    RandomSource,
    digest_equal,
    kdf_next,
    open_,
    prf_hash,
    pseudonym_decrypt,
    pseudonym_encrypt,
    seal,
    xor128,
)
from .errors import (
    AlreadyRegistered,
    ClientAuthFailure,
    DecodeFailure,
    ExpiredWarrant,
    IntegrityFailure,
    MalformedRequest,
    NoWarrant,
    ParamError,
    RejectList,
    ReplayDetected,
    RevokedUE,
    ServerAuthFailure,
    StaleWarrant,
    UnknownUser,
)
from .messages import (
    FastChallenge,
    FastConfirm,
    FastRequest,
    HeNBKeyDelivery,
    InitialRequest,
    InitialResponseCore,
    InitialResponseENB,
    InitialResponseHeNB,
    RListPush,
)
from .revocation import RevocationList, TimeSlot, empty_lists

DEFAULT_THETA_MS = 5_000
DEFAULT_LIFETIME_MS = 600_000


def u16(n: int) -> bytes:
    return n.to_bytes(2, "big")


def u64(n: int) -> bytes:
    return n.to_bytes(8, "big")


def region_secret(gk: bytes, rid: bytes, t_ex: int) -> bytes:
    """D_ij = H(GK_j, rID, T_ex); the same argument order at HSS and HeNB."""
    return prf_hash([gk, rid, u64(t_ex)])


@dataclass(frozen=True)
class KeyChain:
    ck: bytes
    k_m: bytes
    k_en: bytes
    k_he: bytes

    @classmethod
    def from_ck(cls, ck: bytes) -> "KeyChain":
        k_m = kdf_next(ck)
        k_en = kdf_next(k_m)
        return cls(ck, k_m, k_en, kdf_next(k_en))


def session_ck(d: bytes, pid_star: bytes) -> bytes:
    return prf_hash([d, pid_star])


@dataclass
class Warrant:
    lam: bytes
    index: int
    d_ij: bytes
    t_ex: int
    region: int


@dataclass(frozen=True)
class RegionSecrets:
    gk: bytes
    blind_factors: tuple[bytes, ...]

    @property
    def k(self) -> int:
        return len(self.blind_factors)


@dataclass
class UserRecord:
    ue_id: int
    rid: bytes
    k_i: bytes


@dataclass
class LedgerEntry:
    ue_id: int
    pid: bytes
    rid: bytes
    d_ij: bytes
    t_ex: int
    region: int
    issued_at: int
    revoked: bool = False


class HSS:
    """HSS/AuC: root of trust for identities, region keys, warrants and lists."""

    def __init__(
        self,
        rng: RandomSource,
        k: int = 8,
        acc_params: AccParams | None = None,
        warrant_lifetime_ms: int = DEFAULT_LIFETIME_MS,
        slot_ms: int = DEFAULT_LIFETIME_MS,
        start_time: int = 0,
    ):
        if k < 1:
            raise ParamError("need at least one blind factor per region")
        self.rng = rng
        self.k = k
        self.acc_params = acc_params or AccParams()
        self.warrant_lifetime_ms = warrant_lifetime_ms
        self.k_h = rng.bytes(16)
        self.users: dict[bytes, UserRecord] = {}
        self.pid_of: dict[int, bytes] = {}
        self.known_ids: set[int] = set()
        self.regions: dict[int, RegionSecrets] = {}
        self.ledger: dict[int, list[LedgerEntry]] = {}
        self.session_keys: dict[int, bytes] = {}
        self.slot = TimeSlot.containing(start_time, slot_ms)
        self.rlists: dict[int, RevocationList] = {}
        self.revoked: list = []

    # -- initialization -------------------------------------------------
    def add_region(self, j: int) -> "RegionState":
        """Issue GK_j and k blind factors for region j."""
        if j in self.regions:
            raise ParamError(f"region {j} already exists")
        factors: list[bytes] = []
        while len(factors) < self.k:
            b = self.rng.bytes(16)
            if b not in factors:
                factors.append(b)
        self.regions[j] = RegionSecrets(self.rng.bytes(16), tuple(factors))
        self.rlists.update(empty_lists({j: self.regions[j]}, self.slot.index, self.acc_params))
        return self.region_state(j)

    def region_state(self, j: int, theta_ms: int = DEFAULT_THETA_MS) -> "RegionState":
        """A fresh copy of region j's state for one eNB or HeNB."""
        s = self.regions[j]
        return RegionState(j, s.gk, s.blind_factors, self.rlists[j], theta_ms)

    # -- registration ---------------------------------------------------
    def register(self, ue_id: int) -> "UE":
        if ue_id in self.known_ids:
            raise AlreadyRegistered(f"ID {ue_id} already registered")
        rid = self._fresh_rid()
        k_i = self.rng.bytes(16)
        pid = pseudonym_encrypt(self.k_h, rid)
        self.users[pid] = UserRecord(ue_id, rid, k_i)
        self.pid_of[ue_id] = pid
        self.known_ids.add(ue_id)
        return UE(ue_id, rid, pid, k_i, self.rng.spawn())

    def _fresh_rid(self) -> bytes:
        while True:
            rid = self.rng.bytes(16)
            if pseudonym_encrypt(self.k_h, rid) not in self.users:
                return rid

    def lookup(self, pid: bytes) -> UserRecord:
        try:
            return self.users[pid]
        except KeyError:
            raise UnknownUser("pseudonym not in user database") from None

    def deregister(self, ue_id: int) -> None:
        pid = self.pid_of.pop(ue_id, None)
        if pid is not None:
            self.users.pop(pid, None)
        self.session_keys.pop(ue_id, None)

    # -- initial handover -----------------------------------------------
    def handle_initial(
        self, msg: InitialRequest, region: int, now: int, lifetime_ms: int | None = None
    ) -> InitialResponseCore:
        rec = self.lookup(msg.pid)
        if pseudonym_decrypt(self.k_h, msg.pid) != rec.rid:
            raise IntegrityFailure("pseudonym does not decrypt to the stored rID")
        fields = open_(rec.k_i, msg.c1)
        if len(fields) != 2:
            raise DecodeFailure("C_1 does not hold two fields")
        pid_inner, d = fields
        if not digest_equal(pid_inner, msg.pid):
            raise IntegrityFailure("decrypted pID differs from the clear pID")
        if len(d) != 16:
            raise DecodeFailure("one-time key d must be 16 bytes")
        if region not in self.regions:
            raise ParamError(f"unknown region {region}")
        secrets = self.regions[region]
        lifetime = self.warrant_lifetime_ms if lifetime_ms is None else lifetime_ms
        t_ex = now + lifetime

        rid_star = self._fresh_rid()
        index = self.rng.randint(1, secrets.k)
        lam = xor128(rid_star, secrets.blind_factors[index - 1])
        pid_star = pseudonym_encrypt(self.k_h, rid_star)
        d_ij = region_secret(secrets.gk, rid_star, t_ex)
        c2 = seal(rec.k_i, [lam, u16(index), d_ij, u64(t_ex), d, pid_star], self.rng)
        ck = session_ck(d, pid_star)

        del self.users[msg.pid]
        rec.rid = rid_star
        self.users[pid_star] = rec
        self.pid_of[rec.ue_id] = pid_star
        self.session_keys[rec.ue_id] = ck
        self.ledger.setdefault(rec.ue_id, []).append(
            LedgerEntry(rec.ue_id, pid_star, rid_star, d_ij, t_ex, region, now)
        )
        return InitialResponseCore(c2, kdf_next(ck))

    def prune_ledger(self, now: int) -> None:
        for ue_id in list(self.ledger):
            live = [e for e in self.ledger[ue_id] if e.t_ex > now]
            if live:
                self.ledger[ue_id] = live
            else:
                del self.ledger[ue_id]


class MME:
    """Keeps K_M and hands K_eN = F(K_M) to the eNB."""

    def __init__(self):
        self.keys: dict[object, bytes] = {}

    def relay(self, msg: InitialResponseCore, ctx=None) -> InitialResponseENB:
        self.keys[ctx] = msg.k_m
        return InitialResponseENB(msg.c2, kdf_next(msg.k_m))


class ENodeB:
    """Keeps K_eN and hands K_He = F(K_eN) to the serving HeNB."""

    def __init__(self, region: int):
        self.region = region
        self.keys: dict[object, bytes] = {}

    def relay(self, msg: InitialResponseENB, ctx=None) -> HeNBKeyDelivery:
        self.keys[ctx] = msg.k_en
        return HeNBKeyDelivery(msg.c2, kdf_next(msg.k_en))


def relay_key_chain(core: InitialResponseCore, mme: MME | None = None, enb: ENodeB | None = None,
                    henb: "HomeENodeB | None" = None, ctx=None):
    """Run the MME -> eNB -> HeNB relay and return the three downstream messages."""
    mme = mme or MME()
    enb = enb or ENodeB(-1)
    to_enb = mme.relay(core, ctx)
    to_henb = enb.relay(to_enb, ctx)
    if henb is not None:
        to_ue = henb.deliver_initial(to_henb, ctx)
    else:
        to_ue = InitialResponseHeNB(to_henb.c2)
    return to_enb, to_henb, to_ue


@dataclass
class RegionState:
    region: int
    gk: bytes
    blind_factors: tuple[bytes, ...]
    rlist: RevocationList | None
    theta_ms: int = DEFAULT_THETA_MS

    @property
    def k(self) -> int:
        return len(self.blind_factors)


@dataclass
class PendingSession:
    k_he: bytes
    r_u: bytes
    r_h: bytes
    lam: bytes
    index: int
    t_ex: int


def henb_install_rlist(region: RegionState, msg: RListPush) -> RegionState:
    """Install a pushed list after checking its MAC and freshness."""
    lst = RevocationList.from_push(msg)
    if msg.region != region.region or not lst.verify(region.gk):
        raise RejectList("revocation list MAC does not verify")
    cur = region.rlist
    if cur is not None:
        if lst.slot < cur.slot:
            raise RejectList("revocation list is older than the installed one")
        # within one slot lists only ever lose 1-bits
        if lst.slot == cur.slot and (lst.acc.bits & cur.acc.bits) != lst.acc.bits:
            raise RejectList("revocation list would drop revoked entries")
    region.rlist = lst
    return region


class HomeENodeB:
    def __init__(self, name: str, region: RegionState, rng: RandomSource):
        self.name = name
        self.region = region
        self.rng = rng
        self.initial_keys: dict[object, bytes] = {}
        self.session_keys: dict[object, bytes] = {}

    def install_rlist(self, msg: RListPush) -> None:
        henb_install_rlist(self.region, msg)

    def deliver_initial(self, msg: HeNBKeyDelivery, ctx=None) -> InitialResponseHeNB:
        self.initial_keys[ctx] = msg.k_he
        return InitialResponseHeNB(msg.c2)

    def handle_fast(self, msg: FastRequest, now: int) -> tuple[FastChallenge, PendingSession]:
        reg = self.region
        if not 1 <= msg.index <= reg.k:
            raise MalformedRequest(f"blind-factor index {msg.index} outside [1, {reg.k}]")
        t_rid = xor128(msg.lam, reg.blind_factors[msg.index - 1])
        d_prime = region_secret(reg.gk, t_rid, msg.t_ex)
        if reg.rlist is not None and contains(reg.rlist.acc, d_prime):
            raise RevokedUE("region secret is in the revocation list")
        if now >= msg.t_ex + reg.theta_ms:
            raise ExpiredWarrant(f"warrant expired at {msg.t_ex}")
        r_h = self.rng.bytes(16)
        k_he = prf_hash([d_prime, msg.r_u, r_h])
        delta = prf_hash([d_prime, msg.r_u, r_h, k_he])
        if reg.k > 1:
            new_index = self.rng.randint(1, reg.k - 1)
            if new_index >= msg.index:
                new_index += 1
        else:
            new_index = msg.index
        new_lam = xor128(t_rid, reg.blind_factors[new_index - 1])
        c = seal(d_prime, [new_lam, u16(new_index)], self.rng)
        session = PendingSession(k_he, msg.r_u, r_h, msg.lam, msg.index, msg.t_ex)
        return FastChallenge(delta, r_h, c), session

    def confirm(self, session: PendingSession, msg: FastConfirm, ctx=None) -> bytes:
        """Accept (returning K_He) or raise ClientAuthFailure."""
        if not digest_equal(msg.delta_prime, prf_hash([session.k_he, session.r_h])):
            raise ClientAuthFailure("confirmation digest mismatch")
        self.session_keys[ctx] = session.k_he
        return session.k_he


class UE:
    def __init__(self, ue_id: int, rid: bytes, pid: bytes, k_i: bytes, rng: RandomSource):
        self.ue_id = ue_id
        self.rid = rid
        self.pid = pid
        self.k_i = k_i
        self.rng = rng
        self.warrant: Warrant | None = None
        self.keychain: KeyChain | None = None
        self.session_key: bytes | None = None
        self.region: int | None = None
        self.pending_d: bytes | None = None
        self.pending_r_u: bytes | None = None
        self.last_request: FastRequest | None = None

    def initial_request(self) -> InitialRequest:
        d = self.rng.bytes(16)
        self.pending_d = d
        return InitialRequest(self.pid, seal(self.k_i, [self.pid, d], self.rng))

    def complete_initial(self, msg: InitialResponseHeNB, region: int, now: int) -> None:
        if self.pending_d is None:
            raise ReplayDetected("no initial handover in progress")
        fields = open_(self.k_i, msg.c2)
        if len(fields) != 6:
            raise DecodeFailure(f"C_2 holds {len(fields)} fields, expected 6")
        lam, index, d_ij, t_ex, d, pid_star = fields
        if not digest_equal(d, self.pending_d):
            raise ReplayDetected("C_2 answers a different one-time key")
        t_ex = int.from_bytes(t_ex, "big")
        if t_ex <= now:
            raise StaleWarrant(f"warrant expiry {t_ex} is not after {now}")
        self.warrant = Warrant(lam, int.from_bytes(index, "big"), d_ij, t_ex, region)
        self.pid = pid_star
        self.keychain = KeyChain.from_ck(session_ck(d, pid_star))
        self.region = region
        self.pending_d = None

    def fast_request(self) -> FastRequest:
        w = self.warrant
        if w is None:
            raise NoWarrant("fast handover needs a warrant")
        self.pending_r_u = self.rng.bytes(16)
        self.last_request = FastRequest(w.lam, w.index, self.pending_r_u, w.t_ex)
        return self.last_request

    def handle_fast_challenge(self, msg: FastChallenge) -> FastConfirm:
        w = self.warrant
        if w is None or self.pending_r_u is None:
            raise NoWarrant("no fast handover in progress")
        k_he = prf_hash([w.d_ij, self.pending_r_u, msg.r_h])
        if not digest_equal(msg.delta, prf_hash([w.d_ij, self.pending_r_u, msg.r_h, k_he])):
            raise ServerAuthFailure("challenge digest mismatch")
        fields = open_(w.d_ij, msg.c)
        if len(fields) != 2 or len(fields[0]) != 16 or len(fields[1]) != 2:
            raise DecodeFailure("rotated TID has the wrong shape")
        w.lam, w.index = fields[0], int.from_bytes(fields[1], "big")
        self.session_key = k_he
        self.pending_r_u = None
        return FastConfirm(prf_hash([k_he, msg.r_h]))
