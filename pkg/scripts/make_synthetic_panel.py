"""Write a synthetic 8-signal panel (price + seven signals) and a run config.

    python scripts/make_synthetic_panel.py --out demo --seed 3
    signaltrader run --config demo/run.yaml
"""

import argparse
from pathlib import Path

import yaml

from signaltrader.synthetic import planted_lead_signals, write_panel


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="demo")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--days", type=int, default=1400)
    ap.add_argument("--effect", type=float, default=0.005)
    ap.add_argument("--lead", default="polarization")
    ap.add_argument("--n-boot", type=int, default=1000)
    args = ap.parse_args()

    out = Path(args.out)
    signals = planted_lead_signals(args.seed, args.days, args.effect, lead=args.lead)
    dates = signals["price"].dates
    split = dates[int(len(dates) * 0.75)]
    write_panel(signals, out / "panel", split, dates[-1])
    config = {
        "panel": "panel/manifest.yaml",
        "output_dir": "results",
        "seed": args.seed,
        "threads": 2,
        "irf": {"n_boot": args.n_boot, "n_perm": 200},
        "strategies": {"n_random": 2000},
    }
    (out / "run.yaml").write_text(yaml.safe_dump(config, sort_keys=False))
    print(f"wrote {out / 'run.yaml'} (analysis ends {split})")


if __name__ == "__main__":
    main()
