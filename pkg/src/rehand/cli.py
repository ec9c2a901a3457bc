"""Command-line front end: ``rehand simulate | costs | anonymity``.

Exit codes: 0 success, 2 bad config or input, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .anonymity import analyse, observations_from_csv
from .config import ScenarioConfig, load_config
from .costmodel import (
    CostConstants, LengthConstants, SYSTEM_TIMINGS, UE_TIMINGS, default_grid, fig5_series,
    headline_summary, reduction_sweep, sanity_flags, sweep_csv,
)
from .errors import ConfigError, Inconsistent, ParamError, ReHandError
from .simnet import measure_latency, run_scenario

EXIT_OK, EXIT_INPUT, EXIT_INVARIANT = 0, 2, 3


@dataclass
class RunManifest:
    subcommand: str
    config: str | None
    seed: int | None
    out: str
    files: list = field(default_factory=list)

    def add(self, path: Path, data: str) -> None:
        raw = data.encode("utf-8")
        path.write_bytes(raw)
        self.files.append({"name": path.name, "sha256": hashlib.sha256(raw).hexdigest()})

    def write(self, out: Path) -> None:
        (out / "manifest.json").write_text(json.dumps(asdict(self), indent=2) + "\n", encoding="utf-8")


def _seed(args, cfg_seed: int | None) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("REHAND_SEED")
    if env:
        try:
            seed = int(env, 0)
        except ValueError:
            raise ConfigError("REHAND_SEED", f"not an integer: {env!r}") from None
        if not 0 <= seed < 2**64:
            raise ConfigError("REHAND_SEED", "must fit in an unsigned 64-bit integer")
        return seed
    return cfg_seed or 0


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _config(args) -> ScenarioConfig:
    return load_config(args.config) if args.config else ScenarioConfig()


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    cfg = _config(args)
    cfg.seed = _seed(args, cfg.seed)
    log = run_scenario(cfg)
    out = _outdir(args)
    manifest = RunManifest("simulate", args.config, cfg.seed, str(out))
    manifest.add(out / "events.csv", log.to_csv())
    summary = {
        "handovers": len(log.records),
        "initial_fraction": log.initial_fraction() if len(log.records) > cfg.ue_count else None,
        "latency_ms": measure_latency(log) if log.records else {},
        "messages": {"sent": log.sent, "delivered": log.delivered, "dropped": log.dropped},
        "list_rejects": log.list_rejects,
        "revocations": [
            {"ue": r.ue, "time_ms": r.time_ms,
             "window_ms": None if r.window_ms is None else round(r.window_ms, 3),
             "accepted_after": r.accepted_after, "rejected_after": r.rejected_after}
            for r in log.revocations
        ],
    }
    manifest.add(out / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    manifest.write(out)
    print(f"{len(log.records)} handovers -> {out / 'events.csv'}")
    problems = log.invariant_violations()
    for p in problems:
        print(f"invariant violated: {p}", file=sys.stderr)
    return EXIT_INVARIANT if problems else EXIT_OK


def cost_constants(cfg: ScenarioConfig) -> CostConstants:
    c = cfg.costs
    try:
        return CostConstants(
            ue=replace(UE_TIMINGS, **c.ue_timings),
            system=replace(SYSTEM_TIMINGS, **c.system_timings),
            lengths=replace(LengthConstants(), **c.lengths),
        )
    except TypeError as exc:
        raise ConfigError("costs", f"unknown constant override ({exc})") from None
    except ParamError as exc:
        raise ConfigError("costs", str(exc)) from None


def cmd_costs(args) -> int:
    cfg = _config(args)
    c = cfg.costs
    mode = args.mode or c.mode
    grid = default_grid(
        t_rl=c.t_rl, speeds=c.speeds, r=c.r, RL=c.revoked_total, N_eNB=c.n_enb,
        C_alpha=c.c_alpha, C_beta=c.c_beta, frame_bits=c.frame_bits, mode=mode,
        amortize_revocation=c.amortize_revocation, include_tracing=c.include_tracing,
    )
    rows = reduction_sweep(grid, cost_constants(cfg))
    out = _outdir(args)
    manifest = RunManifest("costs", args.config, None, str(out))
    manifest.add(out / "costs.csv", sweep_csv(rows))
    manifest.add(out / "fig5.csv", fig5_series(rows, c.series_speed))
    summary = {"mode": mode, "headlines": headline_summary(rows), "flags": sanity_flags(rows)}
    manifest.add(out / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    manifest.write(out)
    print(f"mode={mode} points={len(grid)}")
    for scheme, h in summary["headlines"].items():
        print(f"reduction vs {scheme}: min={h['min']:.4f} max={h['max']:.4f} "
              f"(T_RL >= {h['min_T_RL']:g}) published={h['published']:.4f}")
    for flag in summary["flags"]:
        print(f"note: {flag}")
    return EXIT_OK


def cmd_anonymity(args) -> int:
    try:
        text = Path(args.events).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("--events", str(exc)) from None
    try:
        per_region = observations_from_csv(text, args.k)
        lines = [analyse(obs, region).line() for region, obs in per_region.items()]
    except (ParamError, Inconsistent) as exc:
        raise ConfigError("--events", str(exc)) from None
    for line in lines:
        print(line)
    if args.out:
        out = _outdir(args)
        manifest = RunManifest("anonymity", args.events, None, str(out))
        manifest.add(out / "anonymity.txt", "\n".join(lines) + "\n")
        manifest.write(out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rehand", description="ReHand handover simulator and cost model")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario and write its event log")
    sim.add_argument("--config", help="scenario TOML file")
    sim.add_argument("--seed", type=_u64, help="overrides REHAND_SEED and the config seed")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--format", choices=["csv"], default="csv")
    sim.set_defaults(func=cmd_simulate)

    cost = sub.add_parser("costs", help="sweep the analytic cost model")
    cost.add_argument("--config", help="scenario TOML file ([costs] table)")
    cost.add_argument("--out", required=True, help="output directory")
    cost.add_argument("--mode", choices=["linear", "ceil"], help="frame quantization")
    cost.add_argument("--format", choices=["csv"], default="csv")
    cost.set_defaults(func=cmd_costs)

    anon = sub.add_parser("anonymity", help="XOR-system analysis of a simulated event log")
    anon.add_argument("--events", required=True, help="events.csv written by 'simulate'")
    anon.add_argument("--k", type=int, default=8, help="blind factors per region")
    anon.add_argument("--out", help="optional output directory")
    anon.set_defaults(func=cmd_anonymity)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParamError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ReHandError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
