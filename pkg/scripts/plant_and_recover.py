"""Plant a one-day lead in one of seven signals and check the pipeline finds it.

    python scripts/plant_and_recover.py --seeds 20 --effect 0.005
"""

import argparse
import tempfile
from pathlib import Path

import yaml

from signaltrader import pipeline
from signaltrader.config import load_config
from signaltrader.synthetic import DEFAULT_SIGNALS, planted_lead_signals, write_panel


def one_seed(root: Path, seed: int, args) -> tuple[bool, float | None, float]:
    signals = planted_lead_signals(seed, args.days, args.effect, lead=args.lead)
    dates = signals["price"].dates
    write_panel(signals, root / "panel", dates[int(len(dates) * 0.75)], dates[-1])
    (root / "run.yaml").write_text(
        yaml.safe_dump(
            {
                "panel": "panel/manifest.yaml",
                "output_dir": "out",
                "seed": seed,
                "irf": {"n_boot": args.n_boot, "n_perm": 0},
                "strategies": {"n_random": 1000},
            }
        )
    )
    config = load_config(root / "run.yaml")
    screen = pipeline.analyze(config)
    picked = {item["impulse"]: item["sign"] for item in screen["selected"]}
    pipeline.design(config)
    report = pipeline.backtest(config)
    sr = report["strategies"].get(args.lead, {}).get("sharpe_annualized")
    return picked.get(args.lead) == 1, sr, report["random_traders"]["mean_sharpe_annualized"]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--days", type=int, default=1400)
    ap.add_argument("--effect", type=float, default=0.005)
    ap.add_argument("--lead", default="polarization", choices=DEFAULT_SIGNALS)
    ap.add_argument("--n-boot", type=int, default=1000)
    args = ap.parse_args()

    found = beat = 0
    print("seed  screened  strategy_SR  random_SR")
    with tempfile.TemporaryDirectory() as tmp:
        for seed in range(args.seeds):
            ok, sr, rnd = one_seed(Path(tmp) / str(seed), seed, args)
            found += ok
            beat += sr is not None and sr > rnd
            sr_text = "-" if sr is None else f"{sr:11.3f}"
            print(f"{seed:4d}  {str(ok):8s}  {sr_text:>11s}  {rnd:9.3f}")
    print(f"screened with correct sign: {found}/{args.seeds}; beat random mean: {beat}/{args.seeds}")


if __name__ == "__main__":
    main()
