"""Final profit against trading cost for a signal strategy and random traders.

    python scripts/cost_sweep_demo.py --seed 1
"""

import argparse

import numpy as np

from signaltrader.backtest import DEFAULT_COST_GRID, CostModel, cost_sweep, monte_carlo_random
from signaltrader.strategies import predict_signal
from signaltrader.synthetic import planted_lead_signals


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--days", type=int, default=400)
    ap.add_argument("--traders", type=int, default=2000)
    args = ap.parse_args()

    signals = planted_lead_signals(args.seed, args.days)
    price = signals["price"]
    preds = predict_signal(signals["polarization"], 1)
    print("cost     " + "  ".join(f"{m:>12s}" for m in ("full", "long_only", "short_only", "random_mean")))
    curves = {m: cost_sweep(price, preds, mode=m) for m in ("full", "long_only", "short_only")}
    for c in DEFAULT_COST_GRID:
        rnd = monte_carlo_random(price, args.traders, CostModel.uniform(c), seed=args.seed)
        row = [curves[m][c] for m in curves] + [float(np.mean(rnd.final_profits))]
        print(f"{c:<7.4f}  " + "  ".join(f"{v:11.2f}%" for v in row))


if __name__ == "__main__":
    main()
