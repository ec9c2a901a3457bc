"""Simulated initial-handover fraction against the analytic alpha_R over a speed sweep.

    python3 scripts/mobility_experiment.py --handovers 2000
"""

import argparse
import csv
import sys

from rehand.config import ScenarioConfig
from rehand.costmodel import alpha_r
from rehand.simnet import measure_latency, run_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--speeds", type=float, nargs="+", default=[0, 30, 60, 120, 250, 500])
    ap.add_argument("--lifetime-s", type=float, default=600)
    ap.add_argument("--ues", type=int, default=10)
    ap.add_argument("--handovers", type=int, default=1000, help="per UE")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    out = csv.writer(sys.stdout)
    out.writerow(["v_kmh", "simulated", "alpha_R", "rel_gap", "fast_mean_ms", "initial_mean_ms"])
    for v in args.speeds:
        cfg = ScenarioConfig(seed=args.seed, ue_count=args.ues, handovers_per_ue=args.handovers)
        cfg.topology.regions = 4
        cfg.mobility.speed_kmh = v
        cfg.mobility.warrant_lifetime_s = args.lifetime_s
        log = run_scenario(cfg)
        sim = log.initial_fraction()
        target = alpha_r(v, cfg.mobility.region_diameter_km, args.lifetime_s)
        lat = measure_latency(log)
        out.writerow([v, f"{sim:.5f}", f"{target:.5f}", f"{abs(sim - target) / target:.3f}",
                      f"{lat['fast']['mean']:.2f}", f"{lat['initial']['mean']:.2f}"])


if __name__ == "__main__":
    main()
