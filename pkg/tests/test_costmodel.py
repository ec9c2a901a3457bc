import csv
import io
import json
from dataclasses import replace
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from oracles import hand_alpha, hand_totals
from rehand.costmodel import (
    SCHEMES, CostConstants, LengthConstants, ScenarioPoint, UE_TIMINGS, alpha_r, baseline_cost,
    default_grid, fig5_series, headline_summary, reduction_sweep, rehand_cost, sanity_flags,
    scheme_cost, sweep_csv,
)
from rehand.errors import ParamError

FIXTURE = json.loads((Path(__file__).parent / "fixtures" / "cost_default_point.json").read_text())


def test_alpha_r_endpoints():
    assert alpha_r(0, 2, 3600) == pytest.approx(2.78e-4, abs=1e-5)
    assert alpha_r(500, 2, 60) == pytest.approx(8.6e-2, abs=1e-3)
    assert alpha_r(10**7, 2, 600) == 1.0


@pytest.mark.parametrize("args", [(0, 0, 10), (0, 2, 0), (-1, 2, 10)])
def test_alpha_r_domain(args):
    with pytest.raises(ParamError):
        alpha_r(*args)


@given(st.floats(0, 1e4), st.floats(0.1, 100), st.floats(1, 1e5))
def test_alpha_r_matches_oracle(v, r, t):
    assert alpha_r(v, r, t) == pytest.approx(hand_alpha(v, r, t), rel=1e-12)


@pytest.mark.parametrize("mode", ["linear", "ceil"])
@pytest.mark.parametrize("amortize", [True, False])
def test_default_point_fixture(mode, amortize):
    p = ScenarioPoint(mode=mode, amortize_revocation=amortize)
    assert rehand_cost(p).alpha_R == pytest.approx(FIXTURE["alpha_R"], rel=1e-12)
    for scheme, expected in FIXTURE[mode if amortize else f"{mode}_per_auth"].items():
        assert scheme_cost(scheme, p).total == pytest.approx(expected, rel=1e-9)


@given(st.sampled_from([60, 240, 600, 1800, 3600]), st.floats(0, 500), st.booleans(), st.booleans())
def test_any_grid_point_matches_oracle(t_rl, v, ceil, amortize):
    p = ScenarioPoint(v=v, T_RL=t_rl, T_exp=t_rl, mode="ceil" if ceil else "linear",
                      amortize_revocation=amortize)
    expected = hand_totals(v, t_rl, ceil=ceil, amortize=amortize)
    for scheme in SCHEMES:
        assert scheme_cost(scheme, p).total == pytest.approx(expected[scheme], rel=1e-9)


def test_ue_computation_spot_values():
    p = ScenarioPoint()
    assert baseline_cost("HashHand", p).comp_ue == pytest.approx(145.706, rel=1e-6)
    assert baseline_cost("TimeBound", p).comp_ue == pytest.approx(4518.9, rel=1e-6)
    assert baseline_cost("CPAL", p).comp_ue == pytest.approx(3 * 70.1 + 10 * 105.15, rel=1e-9)


def test_rehand_at_alpha_zero():
    # v = 0 and an enormous lifetime push alpha_R to ~0
    p = ScenarioPoint(v=0, T_exp=1e15, T_RL=600, amortize_revocation=False)
    rep = rehand_cost(p)
    assert rep.comp_ue == pytest.approx(3 * 0.006, rel=1e-9)
    fast = 4.36 * (128 + 2 * 128 + 2 * 128 + 64) / 512
    rl = 1e6 / 22000
    push = 261.76 * rl * LengthConstants().nyberg_length(rl) / 512 / 600
    assert rep.comm == pytest.approx(fast + push, rel=1e-9)


def test_rehand_at_alpha_one_has_no_push_term():
    p = ScenarioPoint(v=1e7)
    a = rehand_cost(p)
    b = rehand_cost(replace(p, T_RL=60))
    assert a.alpha_R == 1.0 and a.comm == b.comm


def test_revocation_and_tracing_switches():
    p = ScenarioPoint()
    rl = 1e6 / 22000
    assert rehand_cost(p).comp_revocation == pytest.approx(rl * 0.006 / 600)
    per_auth = rehand_cost(replace(p, amortize_revocation=False))
    assert per_auth.comp_revocation == pytest.approx(rl * 0.006)
    hh = baseline_cost("HashHand", p)
    traced = baseline_cost("HashHand", replace(p, include_tracing=True))
    assert traced.total - hh.total == pytest.approx(hh.tracing)
    assert rehand_cost(p).tracing == 0


def test_total_is_sum_of_parts():
    for scheme in SCHEMES:
        r = scheme_cost(scheme, ScenarioPoint(v=200, T_RL=300, T_exp=300))
        assert r.total == pytest.approx(r.comp_ue + r.comp_sys + r.comp_revocation + r.comm)


def test_cpal_broadcast_term_scales_inversely_with_t_rl():
    short = baseline_cost("CPAL", ScenarioPoint(T_RL=60)).comm
    long = baseline_cost("CPAL", ScenarioPoint(T_RL=120)).comm
    term60 = (4.36 + 261.76) * 170 / 512 / 60
    assert short - long == pytest.approx(term60 / 2, rel=1e-9)


@given(st.floats(0, 500), st.floats(0, 500))
def test_rehand_monotone_in_alpha(v1, v2):
    lo, hi = sorted((v1, v2))
    a = rehand_cost(ScenarioPoint(v=lo)).total
    b = rehand_cost(ScenarioPoint(v=hi)).total
    assert a <= b + 1e-12


def test_unknown_scheme_and_bad_point():
    with pytest.raises(ParamError):
        baseline_cost("Magic", ScenarioPoint())
    with pytest.raises(ParamError):
        ScenarioPoint(frame_bits=0)
    with pytest.raises(ParamError):
        ScenarioPoint(mode="round")
    with pytest.raises(ParamError):
        replace(UE_TIMINGS, T_H=0)


def test_constant_override_propagates():
    consts = CostConstants(ue=replace(UE_TIMINGS, T_p=200.0))
    assert baseline_cost("HashHand", ScenarioPoint(), consts).comp_ue == pytest.approx(10.2 + 0.006 + 200)


def test_sweep_rows_and_csv():
    grid = default_grid(t_rl=(600,), speeds=(120,))
    rows = reduction_sweep(grid)
    assert [r.report.scheme for r in rows] == list(SCHEMES)
    table = list(csv.DictReader(io.StringIO(sweep_csv(rows))))
    assert len(table) == 4 and table[0]["reduction_vs_rehand"] == "0"
    assert all(0 < r.reduction < 1 for r in rows[1:])
    series = fig5_series(rows, 120)
    assert series.splitlines()[0] == "T_RL,ReHand,CPAL,TimeBound,HashHand"
    with pytest.raises(ParamError):
        reduction_sweep([])


def test_default_grid_reductions_in_unit_interval():
    rows = reduction_sweep(default_grid())
    assert len(rows) == 4 * 144
    assert all(0 < r.reduction < 1 for r in rows if r.report.scheme != "ReHand")
    assert sanity_flags(rows) == []


def test_headline_summary_shape():
    summary = headline_summary(reduction_sweep(default_grid()))
    assert set(summary) == {"HashHand", "TimeBound", "CPAL"}
    assert summary["HashHand"]["min_T_RL"] == 240.0
    assert summary["HashHand"]["published"] == 0.8292
