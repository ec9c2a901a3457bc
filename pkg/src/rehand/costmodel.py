"""Analytic computation/communication cost model for ReHand and three baselines.

All costs are milliseconds per authentication. Communication terms are
C * (bits / 512) in ``linear`` mode or C * ceil(bits / 512) per flow term in
``ceil`` mode, where C is the per-frame latency of the hop class.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable

from .errors import ParamError

SCHEMES = ("ReHand", "CPAL", "TimeBound", "HashHand")


@dataclass(frozen=True)
class TimingConstants:
    T_SE: float
    T_H: float
    T_e: float
    T_m: float
    T_p: float
    T_me: float
    T_pH: float
    T_Inv: float

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not v > 0:
                raise ParamError(f"timing constant {k} must be positive")


# UE block of the constants table. T_m has no UE-side value and is never used
# by a UE formula; it carries the system value so the record stays complete.
UE_TIMINGS = TimingConstants(
    T_SE=6.8e-3, T_H=0.006, T_e=70.1, T_m=9.556, T_p=135.5, T_me=105.15, T_pH=10.2, T_Inv=70.1
)
# System block. T_SE and T_H are not listed for the system; the UE values are reused.
SYSTEM_TIMINGS = TimingConstants(
    T_SE=6.8e-3, T_H=0.006, T_e=9.505, T_m=9.556, T_p=5.065, T_me=14.257, T_pH=1.413, T_Inv=9.505
)


@dataclass(frozen=True)
class LengthConstants:
    L_ID: float = 128
    L_N: float = 128
    L_H: float = 128
    L_K: float = 128
    L_G: float = 170
    L_p: float = 171
    L_T: float = 64
    L_HNyb_10: float = 722.33
    L_HNyb_100: float = 1444.66

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not v > 0:
                raise ParamError(f"length constant {k} must be positive")

    def nyberg_length(self, items: float) -> float:
        """Per-item accumulator length, linear through the 10- and 100-item points."""
        slope = (self.L_HNyb_100 - self.L_HNyb_10) / 90.0
        return self.L_HNyb_10 + slope * (items - 10.0)


@dataclass(frozen=True)
class CostConstants:
    ue: TimingConstants = UE_TIMINGS
    system: TimingConstants = SYSTEM_TIMINGS
    lengths: LengthConstants = field(default_factory=LengthConstants)


@dataclass(frozen=True)
class ScenarioPoint:
    v: float = 120.0
    r: float = 2.0
    T_exp: float = 600.0
    T_RL: float = 600.0
    RL: float = 1_000_000
    N_eNB: float = 22_000
    C_alpha: float = 4.36
    C_beta: float = 261.76
    frame_bits: int = 512
    mode: str = "linear"
    # revocation computation is spread over T_RL like the list push; False charges it per authentication
    amortize_revocation: bool = True
    include_tracing: bool = False

    def __post_init__(self):
        if self.frame_bits <= 0:
            raise ParamError("frame_bits must be positive")
        if self.mode not in ("linear", "ceil"):
            raise ParamError(f"unknown quantization mode {self.mode!r}")
        if self.T_RL <= 0 or self.N_eNB <= 0:
            raise ParamError("T_RL and N_eNB must be positive")

    @property
    def rl_region(self) -> float:
        """|RL^{S_t}_j|: revoked entries in one region's list."""
        return self.RL / self.N_eNB


@dataclass(frozen=True)
class CostReport:
    scheme: str
    comp_ue: float
    comp_sys: float
    comp_revocation: float
    comm: float
    tracing: float
    total: float
    alpha_R: float


def alpha_r(v: float, r: float, T_exp: float) -> float:
    """Share of handovers that need the full initial handover."""
    if r <= 0 or T_exp <= 0:
        raise ParamError("r and T_exp must be positive")
    if v < 0:
        raise ParamError("speed must be non-negative")
    a = 1.0 / T_exp + v / (r * 3600.0)
    return a if a < 1 else 1.0


def _frames(bits: float, point: ScenarioPoint) -> float:
    x = bits / point.frame_bits
    return math.ceil(x) if point.mode == "ceil" else x


def _report(scheme, point, ue, sys_, rev, comm, tracing, a) -> CostReport:
    rev_charged = rev / point.T_RL if point.amortize_revocation else rev
    total = ue + sys_ + rev_charged + comm + (tracing if point.include_tracing else 0.0)
    return CostReport(scheme, ue, sys_, rev_charged, comm, tracing, total, a)


def rehand_cost(point: ScenarioPoint, consts: CostConstants | None = None) -> CostReport:
    c = consts or CostConstants()
    u, s, L = c.ue, c.system, c.lengths
    a = alpha_r(point.v, point.r, point.T_exp)
    ue = a * (2 * u.T_SE + 4 * u.T_H) + (1 - a) * 3 * u.T_H
    sys_ = a * (2 * s.T_SE + 5 * s.T_H) + (1 - a) * 5 * s.T_H
    rl = point.rl_region
    rev = rl * s.T_H
    Ca, Cb = point.C_alpha, point.C_beta
    initial = Ca * _frames(3 * L.L_ID + 3 * L.L_K + L.L_T, point) + Cb * _frames(
        3 * L.L_ID + 4 * L.L_K + L.L_T, point
    )
    fast = Ca * _frames(L.L_ID + 2 * L.L_H + 2 * L.L_N + L.L_T, point)
    push = (1.0 / point.T_RL) * Cb * _frames(rl * L.nyberg_length(rl), point)
    comm = a * initial + (1 - a) * (fast + push)
    return _report("ReHand", point, ue, sys_, rev, comm, 0.0, a)


def baseline_cost(scheme: str, point: ScenarioPoint, consts: CostConstants | None = None) -> CostReport:
    c = consts or CostConstants()
    u, s, L = c.ue, c.system, c.lengths
    Ca, Cb = point.C_alpha, point.C_beta
    a = alpha_r(point.v, point.r, point.T_exp)
    if scheme == "CPAL":
        # no regions in CPAL: one network-wide list per period
        rl_t = point.RL
        ue = 3 * u.T_e + 10 * u.T_me
        sys_ = s.T_e + 7 * s.T_me + s.T_p
        tracing = 4 * s.T_me + 2 * s.T_p
        rev = 4 * rl_t * s.T_m + rl_t * (s.T_me + s.T_e) + s.T_Inv
        comm = (
            Ca * _frames(15 * L.L_G + L.L_T, point)
            + (1.0 / point.T_RL) * (Ca + Cb) * _frames(L.L_G, point)
            + Cb * _frames(3 * L.L_G, point)
        )
    elif scheme == "TimeBound":
        ue = 49 * u.T_e + 8 * u.T_p
        sys_ = 46 * s.T_e + 6 * s.T_p
        tracing = point.RL * s.T_e
        rev = point.RL * s.T_e
        comm = Ca * _frames((11 * L.L_G + 13 * L.L_p + L.L_ID + L.L_H) + 2 * L.L_G, point)
    elif scheme == "HashHand":
        ue = u.T_pH + u.T_H + u.T_p
        sys_ = s.T_pH + 2 * s.T_H + s.T_p
        tracing = s.T_pH + s.T_H + s.T_p
        rev = 0.0
        comm = Ca * _frames(2 * L.L_ID + L.L_N + 2 * L.L_H, point) + Cb * _frames(
            2 * L.L_ID + L.L_N + L.L_H, point
        )
    else:
        raise ParamError(f"unknown scheme {scheme!r}")
    return _report(scheme, point, ue, sys_, rev, comm, tracing, a)


def scheme_cost(scheme: str, point: ScenarioPoint, consts: CostConstants | None = None) -> CostReport:
    if scheme == "ReHand":
        return rehand_cost(point, consts)
    return baseline_cost(scheme, point, consts)


def default_grid(
    t_rl=(60, 120, 180, 240, 300, 600, 900, 1200, 1800, 2400, 3000, 3600),
    speeds=(0, 50, 100, 120, 150, 200, 250, 300, 350, 400, 450, 500),
    **overrides,
) -> list[ScenarioPoint]:
    """The sweep: T_exp follows T_RL, r = 2 km, 10^6 revoked over 22,000 eNBs."""
    return [
        ScenarioPoint(v=float(v), T_RL=float(t), T_exp=float(t), **overrides)
        for t in t_rl
        for v in speeds
    ]


@dataclass(frozen=True)
class SweepRow:
    index: int
    point: ScenarioPoint
    report: CostReport
    reduction: float  # (baseline - rehand) / baseline; 0 for the ReHand row


def reduction_sweep(grid: Iterable[ScenarioPoint], consts: CostConstants | None = None) -> list[SweepRow]:
    grid = list(grid)
    if not grid:
        raise ParamError("empty grid")
    rows = []
    for i, p in enumerate(grid):
        ours = rehand_cost(p, consts)
        rows.append(SweepRow(i, p, ours, 0.0))
        for scheme in SCHEMES[1:]:
            rep = baseline_cost(scheme, p, consts)
            rows.append(SweepRow(i, p, rep, (rep.total - ours.total) / rep.total))
    return rows


def sanity_flags(rows: list[SweepRow]) -> list[str]:
    """Grid points where ReHand costs more than some baseline."""
    return [
        f"grid {r.index}: ReHand exceeds {r.report.scheme} (T_RL={r.point.T_RL:g}, v={r.point.v:g})"
        for r in rows
        if r.report.scheme != "ReHand" and r.reduction <= 0
    ]


def worst_reduction(rows: list[SweepRow], scheme: str, min_t_rl: float = 0.0) -> SweepRow:
    cand = [r for r in rows if r.report.scheme == scheme and r.point.T_RL >= min_t_rl]
    if not cand:
        raise ParamError(f"no {scheme} rows with T_RL >= {min_t_rl}")
    return min(cand, key=lambda r: r.reduction)


CSV_FIELDS = (
    "grid_index", "scheme", "T_RL", "v", "mode", "alpha_R", "comp_ue", "comp_sys",
    "comp_revocation", "comm", "tracing", "total", "reduction_vs_rehand",
)


def sweep_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        rep = r.report
        w.writerow([
            r.index, rep.scheme, f"{r.point.T_RL:g}", f"{r.point.v:g}", r.point.mode,
            f"{rep.alpha_R:.10g}", f"{rep.comp_ue:.10g}", f"{rep.comp_sys:.10g}",
            f"{rep.comp_revocation:.10g}", f"{rep.comm:.10g}", f"{rep.tracing:.10g}",
            f"{rep.total:.10g}", f"{r.reduction:.10g}",
        ])
    return buf.getvalue()


def fig5_series(rows: list[SweepRow], v: float) -> str:
    """Total cost per scheme against T_RL at one speed, one column per scheme."""
    by_t: dict[float, dict[str, float]] = {}
    for r in rows:
        if r.point.v == v:
            by_t.setdefault(r.point.T_RL, {})[r.report.scheme] = r.report.total
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("T_RL", *SCHEMES))
    for t in sorted(by_t):
        w.writerow((f"{t:g}", *(f"{by_t[t][s]:.10g}" for s in SCHEMES)))
    return buf.getvalue()


PUBLISHED_HEADLINES = {"HashHand": 0.8292, "TimeBound": 0.9999, "CPAL": 0.9995}


def headline_summary(rows: list[SweepRow]) -> dict[str, dict]:
    """Reported reductions next to the published headline figures."""
    out = {}
    for scheme, published in PUBLISHED_HEADLINES.items():
        min_t = 240.0 if scheme == "HashHand" else 0.0
        worst = worst_reduction(rows, scheme, min_t)
        cand = [r.reduction for r in rows if r.report.scheme == scheme and r.point.T_RL >= min_t]
        out[scheme] = {
            "published": published,
            "min": worst.reduction,
            "max": max(cand),
            "worst_point": {"T_RL": worst.point.T_RL, "v": worst.point.v},
            "min_T_RL": min_t,
        }
    return out


def with_point(point: ScenarioPoint, **changes) -> ScenarioPoint:
    return replace(point, **changes)
