"""Deterministic discrete-event simulator for the handover protocols.

The clock counts integer microseconds so that sub-millisecond hop latencies
(4.36 ms over the air) add up exactly; protocol timestamps (warrant expiry,
revocation slots) stay in integer milliseconds. Events are ordered by
(time, sequence number), and every random draw comes from one seeded source,
so an identical config yields a byte-identical event log.
"""

from __future__ import annotations

import csv
import heapq
import io
import math
import statistics
from dataclasses import dataclass, field
from typing import Callable

from .accumulator import AccParams
from .config import FaultConfig, ScenarioConfig
from .crypto import RandomSource
from .errors import DecodeFailure, EmptyLog, ParamError, ProtocolReject
from .messages import (
    FastChallenge, FastConfirm, FastRequest, HeNBKeyDelivery, InitialRequest,
    InitialResponseCore, InitialResponseENB, InitialResponseHeNB, Message, Reject,
    RListPush, decode_message,
)
from .protocol import ENodeB, HSS, HomeENodeB, MME, UE, KeyChain
from .revocation import TimeSlot, issue_slot_lists, revoke_user

US_PER_MS = 1000
HOP_CLASSES = ("alpha", "x2", "beta", "core")


@dataclass(frozen=True)
class Topology:
    regions: int
    henbs_per_region: int
    latency_ms: dict

    def __post_init__(self):
        if self.regions < 1 or self.henbs_per_region < 1:
            raise ParamError("need at least one region and one HeNB per region")
        missing = set(HOP_CLASSES) - set(self.latency_ms)
        if missing:
            raise ParamError(f"latency map lacks {sorted(missing)}")

    def hop_us(self, cls: str) -> int:
        return round(self.latency_ms[cls] * US_PER_MS)


@dataclass(frozen=True)
class MobilityProfile:
    v: float
    r: float
    t_exp: float
    rate: float = 1.0

    def __post_init__(self):
        if self.v < 0 or self.r <= 0 or self.t_exp <= 0 or self.rate <= 0:
            raise ParamError("need v >= 0, r > 0, T_exp > 0 and a positive handover rate")

    @property
    def crossing_rate(self) -> float:
        """Region crossings per second."""
        return self.v / (self.r * 3600)

    @property
    def expiry_rate(self) -> float:
        return 1.0 / self.t_exp

    @property
    def move_rate(self) -> float:
        """Intra-region HeNB changes per second: what is left of the total rate."""
        return max(0.0, self.rate - self.crossing_rate - self.expiry_rate)

    @property
    def alpha_r(self) -> float:
        return min(1.0, (self.crossing_rate + self.expiry_rate) / self.rate)


def next_handover(ue: UE, profile: MobilityProfile, rng: RandomSource, now_ms: int = 0):
    """Sample (delay in seconds, reason) of the next movement event of ``ue``.

    Region crossings and intra-region moves are competing exponential clocks;
    the expiry clock is the remaining life of the UE's warrant. Reason is
    "cross", "expire" or "move"; the first two lead to an initial handover.
    A UE without a warrant gets (delay, "attach").
    """
    w = ue.warrant
    if w is None:
        return (rng.expovariate(profile.rate), "attach")
    clocks = []
    if profile.move_rate > 0:
        clocks.append((rng.expovariate(profile.move_rate), "move"))
    if profile.crossing_rate > 0:
        clocks.append((rng.expovariate(profile.crossing_rate), "cross"))
    clocks.append((max(0, w.t_ex - now_ms) / 1000.0, "expire"))
    return min(clocks, key=lambda c: c[0])


def handover_kind(reason: str) -> str:
    return "fast" if reason == "move" else "initial"


@dataclass
class HandoverRecord:
    time_ms: float
    ue: int
    region: int
    henb: str
    kind: str
    outcome: str
    latency_ms: float | None
    bits_alpha: int
    bits_beta: int
    lam: str
    index: int | None
    epoch: int
    ordinal: int
    core_messages: int = 0
    beta_hops: int = 0
    faulted: bool = False
    key_agreed: bool | None = None


@dataclass
class RevocationRecord:
    ue: int
    time_ms: float
    region_pushes: int
    installed_ms: list = field(default_factory=list)
    accepted_after: int = 0
    rejected_after: int = 0

    @property
    def window_ms(self) -> float | None:
        """Time from revocation until the last serving HeNB installed the list."""
        return max(self.installed_ms) - self.time_ms if self.installed_ms else None


@dataclass
class EventLog:
    records: list = field(default_factory=list)
    revocations: list = field(default_factory=list)
    list_rejects: int = 0
    sent: int = 0
    delivered: int = 0
    dropped: int = 0

    CSV_FIELDS = ("time", "ue", "region", "kind", "outcome", "latency_ms",
                  "bits_alpha", "bits_beta", "lambda", "index", "epoch")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_FIELDS)
        for r in self.records:
            w.writerow([
                f"{r.time_ms:.3f}", r.ue, r.region, r.kind, r.outcome,
                "" if r.latency_ms is None else f"{r.latency_ms:.3f}",
                r.bits_alpha, r.bits_beta, r.lam, "" if r.index is None else r.index, r.epoch,
            ])
        return buf.getvalue()

    def by_kind(self, kind: str) -> list:
        return [r for r in self.records if r.kind == kind]

    def initial_fraction(self, skip_attach: bool = True) -> float:
        recs = [r for r in self.records if not (skip_attach and r.ordinal == 0)]
        if not recs:
            raise EmptyLog("no handovers recorded")
        return sum(r.kind == "initial" for r in recs) / len(recs)

    def invariant_violations(self) -> list[str]:
        """Checks that must hold whatever the scenario; any hit is a simulator bug."""
        out = []
        if self.sent != self.delivered + self.dropped:
            out.append(f"message conservation: sent={self.sent} delivered={self.delivered} "
                       f"dropped={self.dropped}")
        for r in self.records:
            if r.kind == "fast" and (r.core_messages or r.beta_hops):
                out.append(f"fast handover of UE {r.ue} at {r.time_ms} ms touched the core")
            if r.outcome == "accept" and not r.faulted and r.key_agreed is False:
                out.append(f"UE {r.ue} at {r.time_ms} ms accepted with disagreeing keys")
        return out


def measure_latency(log: EventLog) -> dict[str, dict[str, float]]:
    """Mean, median, 95th percentile and max latency of completed handovers per kind."""
    if not log.records:
        raise EmptyLog("event log is empty")
    out = {}
    for kind in ("initial", "fast"):
        lat = sorted(r.latency_ms for r in log.records if r.kind == kind and r.latency_ms is not None)
        if not lat:
            continue
        p95 = lat[min(len(lat) - 1, math.ceil(0.95 * len(lat)) - 1)]
        out[kind] = {
            "count": len(lat),
            "mean": statistics.fmean(lat),
            "p50": statistics.median(lat),
            "p95": p95,
            "max": lat[-1],
        }
    return out


# --- simulation --------------------------------------------------------------

@dataclass
class _Session:
    record: HandoverRecord
    agent: "_Agent"
    henb: HomeENodeB
    start_us: int
    ctx: int = 0
    pending: object = None
    done: bool = False


@dataclass
class _Agent:
    ue: UE
    region: int
    henb: int
    epoch: int = 0
    ordinal: int = 0
    session: _Session | None = None
    sent_by_flow: dict = field(default_factory=dict)


class Simulation:
    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        lat = cfg.latency
        self.topology = Topology(cfg.topology.regions, cfg.topology.henbs_per_region, {
            "alpha": lat.alpha_ms, "x2": lat.x2_ms, "beta": lat.beta_ms, "core": lat.core_ms,
        })
        mob = cfg.mobility
        self.profile = MobilityProfile(mob.speed_kmh, mob.region_diameter_km,
                                       mob.warrant_lifetime_s, mob.handover_rate_hz)
        root = RandomSource(cfg.seed)
        self.rng_mobility = root.spawn()
        self.rng_lifetime = root.spawn()
        self.slot_ms = max(1, round(cfg.slot_length_s * 1000))
        self.hss = HSS(root.spawn(), k=cfg.topology.blind_factors,
                       acc_params=AccParams(cfg.accumulator.d, cfg.accumulator.r),
                       warrant_lifetime_ms=round(mob.warrant_lifetime_s * 1000),
                       slot_ms=self.slot_ms)
        self.mme = MME()
        self.enbs: dict[int, ENodeB] = {}
        self.henbs: dict[int, list[HomeENodeB]] = {}
        for j in range(cfg.topology.regions):
            self.hss.add_region(j)
            self.enbs[j] = ENodeB(j)
            self.henbs[j] = [
                HomeENodeB(f"h{j}.{h}", self.hss.region_state(j, cfg.theta_ms), root.spawn())
                for h in range(cfg.topology.henbs_per_region)
            ]
        self.agents: list[_Agent] = []
        for u in range(cfg.ue_count):
            ue = self.hss.register(u)
            self.agents.append(_Agent(ue, self.rng_mobility.randint(0, cfg.topology.regions - 1),
                                      self.rng_mobility.randint(0, cfg.topology.henbs_per_region - 1)))
        self.faults: dict[tuple, FaultConfig] = {(f.ue, f.handover, f.flow): f for f in cfg.faults}
        self.log = EventLog()
        self.queue: list = []
        self.seq = 0
        self.now_us = 0
        self.active = cfg.ue_count
        self.open_revocations: list[tuple[RevocationRecord, set]] = []
        self.revoked_ids: set[int] = set()

    # -- event queue ---------------------------------------------------------
    def at(self, t_us: int, fn: Callable, *args) -> None:
        heapq.heappush(self.queue, (t_us, self.seq, fn, args))
        self.seq += 1

    @property
    def now_ms(self) -> int:
        return self.now_us // US_PER_MS

    def run(self) -> EventLog:
        for agent in self.agents:
            self._schedule_next(agent)
        for rev in self.cfg.revocations:
            self.at(round(rev.time_s * 1e6), self._revoke, rev.ue)
        self.at(self.slot_ms * US_PER_MS, self._slot_boundary)
        while self.queue:
            self.now_us, _, fn, args = heapq.heappop(self.queue)
            fn(*args)
        return self.log

    # -- message transport ---------------------------------------------------
    def _send(self, session: _Session | None, cls: str, msg: Message, deliver: Callable) -> None:
        """Encode, apply any scheduled fault, and deliver after the hop latency.

        A fault fires once, on the first hop that carries its flow.
        """
        self.log.sent += 1
        data = msg.encode()
        if session is not None:
            rec = session.record
            if cls == "alpha":
                rec.bits_alpha += msg.payload_bits()
            elif cls == "beta":
                rec.bits_beta += msg.payload_bits()
                rec.beta_hops += 1
            agent = session.agent
            fault = self.faults.pop((agent.ue.ue_id, rec.ordinal, msg.name), None)
            if fault is not None:
                rec.faulted = True
                if fault.kind == "drop":
                    self.log.dropped += 1
                    self._finish(session, "dropped")
                    return
                if fault.kind == "corrupt":
                    bit = fault.bit % (8 * len(data))
                    buf = bytearray(data)
                    buf[bit // 8] ^= 0x80 >> (bit % 8)
                    data = bytes(buf)
                elif fault.kind == "replay":
                    data = agent.sent_by_flow.get(msg.name, data)
            agent.sent_by_flow.setdefault(msg.name, msg.encode())
        self.at(self.now_us + self.topology.hop_us(cls), self._deliver, data, deliver)

    def _deliver(self, data: bytes, deliver: Callable) -> None:
        self.log.delivered += 1
        try:
            msg = decode_message(data)
        except DecodeFailure as exc:
            deliver(None, exc)
            return
        deliver(msg, None)

    # -- handover sessions -----------------------------------------------------
    def _schedule_next(self, agent: _Agent) -> None:
        if agent.ordinal >= self.cfg.handovers_per_ue:
            self.active -= 1
            return
        delay_s, reason = next_handover(agent.ue, self.profile, self.rng_mobility, self.now_ms)
        self.at(self.now_us + max(1, round(delay_s * 1e6)), self._start, agent, reason)

    def _start(self, agent: _Agent, reason: str) -> None:
        regions, henbs = self.cfg.topology.regions, self.cfg.topology.henbs_per_region
        if reason == "cross" and regions > 1:
            step = self.rng_mobility.randint(1, regions - 1)
            agent.region = (agent.region + step) % regions
            agent.henb = self.rng_mobility.randint(0, henbs - 1)
        elif henbs > 1:
            agent.henb = (agent.henb + self.rng_mobility.randint(1, henbs - 1)) % henbs
        ue = agent.ue
        kind = handover_kind(reason)
        if kind == "fast" and ue.warrant is not None and ue.warrant.region != agent.region:
            kind = "initial"
        if kind == "fast" and ue.warrant is None:
            kind = "initial"
        henb = self.henbs[agent.region][agent.henb]
        rec = HandoverRecord(self.now_us / US_PER_MS, ue.ue_id, agent.region, henb.name, kind,
                             "pending", None, 0, 0, "", None, agent.epoch, agent.ordinal)
        self.log.records.append(rec)
        session = _Session(rec, agent, henb, self.now_us, ctx=len(self.log.records))
        agent.session = session
        if kind == "initial":
            self._send(session, "alpha", ue.initial_request(),
                       lambda m, e: self._initial_at_henb(session, m, e))
        else:
            req = ue.fast_request()
            rec.lam, rec.index = req.lam.hex(), req.index
            self._send(session, "alpha", req, lambda m, e: self._fast_at_henb(session, m, e))

    def _finish(self, session: _Session, outcome: str) -> None:
        if session.done:
            return
        session.done = True
        rec = session.record
        rec.outcome = outcome
        if outcome == "accept":
            rec.latency_ms = (self.now_us - session.start_us) / US_PER_MS
        agent = session.agent
        agent.session = None
        agent.ordinal += 1
        if rec.kind == "fast":
            self._note_revocation_outcome(rec)
        self._schedule_next(agent)

    def _reject_to_ue(self, session: _Session, path: list[str], exc: ProtocolReject) -> None:
        """Carry a Reject message back over ``path`` and close the session on arrival."""
        if not path:
            self._finish(session, exc.code)
            return
        msg = Reject(exc.code)
        self._send(None, path[0], msg, lambda m, e: self._reject_to_ue(session, path[1:], exc))

    def _expect(self, session, msg, err, cls, path) -> bool:
        if err is not None:
            self._reject_to_ue(session, path, err)
            return False
        if isinstance(msg, Reject):
            self._reject_to_ue(session, path, _code_reject(msg.code))
            return False
        if not isinstance(msg, cls):
            self._reject_to_ue(session, path, DecodeFailure(f"unexpected {msg.name}"))
            return False
        return True

    # initial handover: UE -> HeNB -> eNB -> MME -> HSS and back
    def _initial_at_henb(self, s: _Session, msg, err) -> None:
        if self._expect(s, msg, err, InitialRequest, ["alpha"]):
            self._send(s, "x2", msg, lambda m, e: self._initial_at_enb(s, m, e))

    def _initial_at_enb(self, s: _Session, msg, err) -> None:
        if self._expect(s, msg, err, InitialRequest, ["x2", "alpha"]):
            s.record.core_messages += 1
            self._send(s, "beta", msg, lambda m, e: self._initial_at_mme(s, m, e))

    def _initial_at_mme(self, s: _Session, msg, err) -> None:
        if self._expect(s, msg, err, InitialRequest, ["beta", "x2", "alpha"]):
            s.record.core_messages += 1
            self._send(s, "core", msg, lambda m, e: self._initial_at_hss(s, m, e))

    def _initial_at_hss(self, s: _Session, msg, err) -> None:
        back = ["core", "beta", "x2", "alpha"]
        if not self._expect(s, msg, err, InitialRequest, back):
            return
        lifetime = None
        if self.cfg.mobility.lifetime_policy == "exponential":
            mean_ms = self.cfg.mobility.warrant_lifetime_s * 1000
            lifetime = max(1, round(self.rng_lifetime.expovariate(1.0 / mean_ms)))
        try:
            resp = self.hss.handle_initial(msg, s.record.region, self.now_ms, lifetime)
        except ProtocolReject as exc:
            self._reject_to_ue(s, back, exc)
            return
        s.record.core_messages += 1
        self._send(s, "core", resp, lambda m, e: self._initial_back_mme(s, m, e))

    def _initial_back_mme(self, s: _Session, msg, err) -> None:
        if self._expect(s, msg, err, InitialResponseCore, ["beta", "x2", "alpha"]):
            s.record.core_messages += 1
            out = self.mme.relay(msg, ctx=s.ctx)
            self._send(s, "beta", out, lambda m, e: self._initial_back_enb(s, m, e))

    def _initial_back_enb(self, s: _Session, msg, err) -> None:
        if self._expect(s, msg, err, InitialResponseENB, ["x2", "alpha"]):
            out = self.enbs[s.record.region].relay(msg, ctx=s.ctx)
            self._send(s, "x2", out, lambda m, e: self._initial_back_henb(s, m, e))

    def _initial_back_henb(self, s: _Session, msg, err) -> None:
        if self._expect(s, msg, err, HeNBKeyDelivery, ["alpha"]):
            out = s.henb.deliver_initial(msg, ctx=s.ctx)
            self._send(s, "alpha", out, lambda m, e: self._initial_at_ue(s, m, e))

    def _initial_at_ue(self, s: _Session, msg, err) -> None:
        if not self._expect(s, msg, err, InitialResponseHeNB, []):
            return
        ue = s.agent.ue
        try:
            ue.complete_initial(msg, s.record.region, self.now_ms)
        except ProtocolReject as exc:
            self._finish(s, exc.code)
            return
        ctx = s.ctx
        chain = ue.keychain
        s.record.key_agreed = chain == KeyChain(
            self.hss.session_keys.get(ue.ue_id), self.mme.keys.pop(ctx, None),
            self.enbs[s.record.region].keys.pop(ctx, None), s.henb.initial_keys.pop(ctx, None),
        )
        s.agent.epoch += 1
        s.record.epoch = s.agent.epoch
        self._finish(s, "accept" if s.record.key_agreed else "key_mismatch")

    # fast handover: three flows over the air
    def _fast_at_henb(self, s: _Session, msg, err) -> None:
        if not self._expect(s, msg, err, FastRequest, ["alpha"]):
            return
        try:
            challenge, s.pending = s.henb.handle_fast(msg, self.now_ms)
        except ProtocolReject as exc:
            if exc.code == "revoked" and s.agent.ue.ue_id not in self.revoked_ids:
                exc.code = "revoked_fp"
            self._reject_to_ue(s, ["alpha"], exc)
            return
        self._send(s, "alpha", challenge, lambda m, e: self._fast_at_ue(s, m, e))

    def _fast_at_ue(self, s: _Session, msg, err) -> None:
        if err is not None:
            self._finish(s, err.code)
            return
        if not isinstance(msg, FastChallenge):
            self._finish(s, _code_reject(msg.code).code if isinstance(msg, Reject) else "malformed")
            return
        try:
            confirm = s.agent.ue.handle_fast_challenge(msg)
        except ProtocolReject as exc:
            self._finish(s, exc.code)
            return
        self._send(s, "alpha", confirm, lambda m, e: self._fast_confirm(s, m, e))

    def _fast_confirm(self, s: _Session, msg, err) -> None:
        if err is not None or not isinstance(msg, FastConfirm):
            self._finish(s, "malformed")
            return
        try:
            k_he = s.henb.confirm(s.pending, msg, ctx=s.ctx)
        except ProtocolReject as exc:
            self._finish(s, exc.code)
            return
        s.henb.session_keys.pop(s.ctx, None)
        s.record.key_agreed = k_he == s.agent.ue.session_key
        self._finish(s, "accept" if s.record.key_agreed else "key_mismatch")

    # -- revocation ------------------------------------------------------------
    def _revoke(self, ue_id: int) -> None:
        try:
            pushes = revoke_user(self.hss, ue_id, self.now_ms)
        except ProtocolReject:
            return
        self.revoked_ids.add(ue_id)
        rec = RevocationRecord(ue_id, self.now_us / US_PER_MS, len(pushes))
        self.log.revocations.append(rec)
        waiting = set()
        for push in pushes:
            for henb in self.henbs[push.region]:
                waiting.add(henb.name)
            self._push(push, rec)
        self.open_revocations.append((rec, waiting))

    def _push(self, push: RListPush, rec: RevocationRecord | None) -> None:
        """HSS -> MME -> eNB -> every HeNB of the region."""
        def at_enb(m, e):
            for henb in self.henbs[push.region]:
                self._send(None, "x2", m, lambda m2, e2, h=henb: at_henb(h, m2, e2))

        def at_mme(m, e):
            self._send(None, "beta", m, at_enb)

        def at_henb(henb, m, e):
            try:
                if e is not None:
                    raise e
                henb.install_rlist(m)
            except ProtocolReject:
                self.log.list_rejects += 1
                return
            for r, waiting in self.open_revocations:
                if henb.name in waiting:
                    waiting.discard(henb.name)
                    r.installed_ms.append(self.now_us / US_PER_MS)

        self._send(None, "core", push, at_mme)

    def _note_revocation_outcome(self, rec: HandoverRecord) -> None:
        for r, _ in self.open_revocations:
            if r.ue == rec.ue and rec.time_ms >= r.time_ms:
                if rec.outcome == "accept":
                    r.accepted_after += 1
                elif rec.outcome == "revoked":
                    r.rejected_after += 1

    def _slot_boundary(self) -> None:
        slot = TimeSlot.containing(self.now_ms, self.slot_ms)
        for push in issue_slot_lists(self.hss, slot):
            self._push(push, None)
        if self.active > 0:
            self.at(self.now_us + self.slot_ms * US_PER_MS, self._slot_boundary)


def _code_reject(code: str) -> ProtocolReject:
    exc = ProtocolReject(code)
    exc.code = code
    return exc


def run_scenario(config: ScenarioConfig) -> EventLog:
    return Simulation(config).run()
