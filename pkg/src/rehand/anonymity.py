"""Eavesdropper model for fast-handover pseudonyms.

Every observed request (lambda, I) gives one XOR equation
rID_u XOR bR_I = lambda over the unknown identities and blind factors. The
per-bit systems are identical, so rank is computed on the symbol incidence
matrix (rows as int bitmasks) while the 128-bit right-hand sides ride along
to detect inconsistency.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping

from .errors import Inconsistent, ParamError


@dataclass(frozen=True)
class Observation:
    lam: bytes
    index: int
    true_ue: Hashable


@dataclass(frozen=True)
class ObservationSet:
    observations: tuple[Observation, ...]
    b: int
    k: int
    a: float

    @classmethod
    def from_observations(cls, obs: Iterable[Observation], k: int) -> "ObservationSet":
        obs = tuple(obs)
        b = len({o.true_ue for o in obs})
        return cls(obs, b, k, len(obs) / b if b else 0.0)

    @property
    def bound(self) -> float:
        """a*b - b; unlinkability is claimed when k exceeds this."""
        return self.a * self.b - self.b


@dataclass(frozen=True)
class XorSystem:
    rows: tuple[int, ...]
    rhs: tuple[int, ...]
    b: int
    k: int
    labels: tuple[Hashable, ...]

    @property
    def n_symbols(self) -> int:
        return self.b + self.k


def build_system(obs: ObservationSet, assignment: Mapping[int, Hashable] | None = None) -> XorSystem:
    """One row per observation: column of its UE (0..b-1) plus column b+I-1."""
    if obs.k < 1:
        raise ParamError("need at least one blind factor")
    who = [assignment[i] if assignment is not None else o.true_ue for i, o in enumerate(obs.observations)]
    labels = tuple(dict.fromkeys(who))
    col = {u: c for c, u in enumerate(labels)}
    b = len(labels)
    rows, rhs = [], []
    for o, u in zip(obs.observations, who):
        if not 1 <= o.index <= obs.k:
            raise ParamError(f"blind-factor index {o.index} outside [1, {obs.k}]")
        rows.append((1 << col[u]) | (1 << (b + o.index - 1)))
        rhs.append(int.from_bytes(o.lam, "big"))
    return XorSystem(tuple(rows), tuple(rhs), b, obs.k, labels)


def _eliminate(rows, rhs, n_cols):
    """Reduced row echelon form over GF(2); returns (pivot rows, rank, consistent)."""
    work = list(zip(rows, rhs))
    pivots = []
    r = 0
    for c in range(n_cols):
        p = next((i for i in range(r, len(work)) if (work[i][0] >> c) & 1), None)
        if p is None:
            continue
        work[r], work[p] = work[p], work[r]
        pr, pv = work[r]
        for i in range(len(work)):
            if i != r and (work[i][0] >> c) & 1:
                work[i] = (work[i][0] ^ pr, work[i][1] ^ pv)
        pivots.append(c)
        r += 1
    consistent = all(v == 0 for m, v in work[r:] if m == 0)
    return work[:r], r, consistent


def gf2_rank(rows: Iterable[int], n_cols: int) -> int:
    rows = list(rows)
    return _eliminate(rows, [0] * len(rows), n_cols)[1]


def solution_space_dim(system: XorSystem) -> int:
    """(b + k) - rank; raises Inconsistent if no assignment of values fits."""
    _, rank, ok = _eliminate(system.rows, system.rhs, system.n_symbols)
    if not ok:
        raise Inconsistent("observations admit no solution under this assignment")
    return system.n_symbols - rank


def pinned_differences(system: XorSystem) -> int:
    """Pairs of identities whose XOR difference the observations determine.

    A pinned pair means the eavesdropper can tell whether two requests came
    from the same identity, even when no single value is recoverable.
    """
    n = system.n_symbols
    base = gf2_rank(system.rows, n)
    count = 0
    for i in range(system.b):
        for j in range(i + 1, system.b):
            if gf2_rank([*system.rows, (1 << i) | (1 << j)], n) == base:
                count += 1
    return count


def is_unlinkable(obs: ObservationSet) -> bool:
    if obs.k < 1:
        raise ParamError("need at least one blind factor")
    return solution_space_dim(build_system(obs)) >= 1


@dataclass(frozen=True)
class Verdict:
    region: int | None
    a: float
    b: int
    k: int
    rank: int
    dim: int
    pinned: int
    unlinkable: bool

    def line(self) -> str:
        tag = "unlinkable" if self.unlinkable else "linkable"
        where = "" if self.region is None else f"region={self.region} "
        return (
            f"{where}a={self.a:g} b={self.b} k={self.k} rank={self.rank} dim={self.dim} "
            f"pinned_pairs={self.pinned} bound_ok={self.k > self.a * self.b - self.b} verdict={tag}"
        )


def analyse(obs: ObservationSet, region: int | None = None) -> Verdict:
    system = build_system(obs)
    dim = solution_space_dim(system)
    return Verdict(region, obs.a, obs.b, obs.k, system.n_symbols - dim, dim,
                   pinned_differences(system), dim >= 1)


def observations_from_csv(text: str, k: int) -> dict[int, ObservationSet]:
    """Group the FastRequest fields of an event-log CSV by region.

    An identity is one (ue, epoch) pair: the anonymous identity is replaced at
    every initial handover.
    """
    reader = csv.DictReader(io.StringIO(text))
    need = {"ue", "region", "kind", "lambda", "index", "epoch"}
    if reader.fieldnames is None or not need <= set(reader.fieldnames):
        raise ParamError(f"event log is missing columns {sorted(need - set(reader.fieldnames or []))}")
    per_region: dict[int, list[Observation]] = {}
    for n, row in enumerate(reader, start=2):
        if row["kind"] != "fast" or not row["lambda"]:
            continue
        try:
            lam = bytes.fromhex(row["lambda"])
            obs = Observation(lam, int(row["index"]), (int(row["ue"]), int(row["epoch"])))
            region = int(row["region"])
        except ValueError as exc:
            raise ParamError(f"line {n}: {exc}") from None
        if len(lam) != 16:
            raise ParamError(f"line {n}: lambda must be 16 bytes")
        per_region.setdefault(region, []).append(obs)
    if not per_region:
        raise ParamError("event log holds no fast-handover observations")
    return {j: ObservationSet.from_observations(o, k) for j, o in sorted(per_region.items())}


def simulate_observations(a: int, b: int, k: int, seed: int) -> ObservationSet:
    """Run b UEs through one initial and ``a`` fast handovers in a single region."""
    from .crypto import RandomSource
    from .protocol import HSS, HomeENodeB, relay_key_chain

    if k < 1:
        raise ParamError("need at least one blind factor")
    rng = RandomSource(seed)
    hss = HSS(rng.spawn(), k=k)
    henb = HomeENodeB("h0", hss.add_region(0), rng.spawn())
    obs = []
    now = 0
    for u in range(b):
        ue = hss.register(u)
        core = hss.handle_initial(ue.initial_request(), 0, now)
        *_, to_ue = relay_key_chain(core, henb=henb)
        ue.complete_initial(to_ue, 0, now)
        for _ in range(a):
            req = ue.fast_request()
            obs.append(Observation(req.lam, req.index, u))
            challenge, session = henb.handle_fast(req, now)
            henb.confirm(session, ue.handle_fast_challenge(challenge))
            now += 1
    return ObservationSet(tuple(obs), b, k, float(a))
