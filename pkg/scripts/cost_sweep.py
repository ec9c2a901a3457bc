"""Total cost of each scheme against T_RL at fixed speeds, in both frame modes.

    python3 scripts/cost_sweep.py --out results/costs
"""

import argparse
from pathlib import Path

from rehand.costmodel import default_grid, fig5_series, headline_summary, reduction_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/costs")
    ap.add_argument("--speeds", type=float, nargs="+", default=[0, 120, 500])
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for mode in ("linear", "ceil"):
        rows = reduction_sweep(default_grid(mode=mode))
        for v in args.speeds:
            path = out / f"fig5_{mode}_v{v:g}.csv"
            path.write_text(fig5_series(rows, v))
            print(f"wrote {path}")
        for scheme, h in headline_summary(rows).items():
            print(f"  {mode} vs {scheme}: min {h['min']:.4f} max {h['max']:.4f} "
                  f"published {h['published']:.4f}")


if __name__ == "__main__":
    main()
