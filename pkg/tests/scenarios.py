"""Hand-stepped protocol setups shared by unit and acceptance tests."""

from __future__ import annotations

from rehand.crypto import RandomSource
from rehand.protocol import ENodeB, HSS, HomeENodeB, MME, relay_key_chain
from rehand.revocation import TimeSlot, issue_slot_lists, revoke_user


class Net:
    """One region with one eNB and two HeNBs, stepped by hand."""

    def __init__(self, seed=0, k=8, lifetime_ms=700_000, slot_ms=600_000):
        rng = RandomSource(seed)
        self.hss = HSS(rng.spawn(), k=k, warrant_lifetime_ms=lifetime_ms, slot_ms=slot_ms)
        self.mme = MME()
        self.enb = ENodeB(0)
        self.hss.add_region(0)
        self.henbs = [HomeENodeB(f"h{i}", self.hss.region_state(0), rng.spawn()) for i in range(2)]

    def initial(self, ue, now=0, henb=0, wire=None):
        req = ue.initial_request()
        core = self.hss.handle_initial(req, 0, now)
        to_enb, to_henb, to_ue = relay_key_chain(core, self.mme, self.enb, self.henbs[henb],
                                                 ctx=ue.ue_id)
        ue.complete_initial(to_ue, 0, now)
        if wire is not None:
            wire += [req, core, to_enb, to_henb, to_ue]
        return to_ue

    def fast(self, ue, now=0, henb=1, wire=None):
        req = ue.fast_request()
        challenge, session = self.henbs[henb].handle_fast(req, now)
        confirm = ue.handle_fast_challenge(challenge)
        k_he = self.henbs[henb].confirm(session, confirm)
        if wire is not None:
            wire += [req, challenge, confirm]
        return k_he

    def push(self, pushes):
        for p in pushes:
            for h in self.henbs:
                h.install_rlist(p)


# Slot length 10 ms: S_0 = [0, 10), S_1 = [10, 20). Warrants last one slot.
STORY_ISSUE = {"alice": 2, "bob": 4, "charles": 16}
STORY_LIFETIME = 10


def slot_story(revoke_at: dict[str, int], seed: int = 0):
    """Issue the three warrants, revoke as given, and return what each list holds.

    Result maps name -> slot index whose list absorbed the warrant, or None.
    """
    from rehand.accumulator import contains

    net = Net(seed, lifetime_ms=STORY_LIFETIME, slot_ms=10)
    ues = {n: net.hss.register(i) for i, n in enumerate(STORY_ISSUE)}
    events = [(t, "issue", n) for n, t in STORY_ISSUE.items()]
    events += [(t, "revoke", n) for n, t in revoke_at.items()]
    events += [(10, "slot", None), (20, "slot", None)]
    order = {"slot": 0, "issue": 1, "revoke": 2}
    lists = {}
    for t, kind, name in sorted(events, key=lambda e: (e[0], order[e[1]])):
        if kind == "slot":
            lists[net.hss.slot.index] = dict(net.hss.rlists)
            issue_slot_lists(net.hss, TimeSlot.containing(t, 10))
        elif kind == "issue":
            net.initial(ues[name], now=t)
        else:
            net.push(revoke_user(net.hss, ues[name].ue_id, t))
    lists[net.hss.slot.index] = dict(net.hss.rlists)
    out = {}
    for name, ue in ues.items():
        d = ue.warrant.d_ij
        hits = [s for s in sorted(lists) if s <= 1 and contains(lists[s][0].acc, d)]
        out[name] = hits[0] if hits else None
    return out
