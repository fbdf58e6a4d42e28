#!/usr/bin/env python3
"""Generate the bundled synthetic dataset: 10 stocks plus a market index,
daily closes over 2013-01..2023-08 (three trading days per month), and a
matching monthly fixed-deposit rate file whose average monthly rate is
pinned to 0.002139918.

Stock returns follow a single-factor process so the two estimation models
produce comparable portfolios on this data.  Regenerating with the default
seed reproduces the files in data/ byte for byte.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

TICKERS = ["ALFA", "BRVO", "CDRL", "DLTA", "ECHO",
           "FOXT", "GOLF", "HTEL", "INDI", "JULI"]
MARKET = "MKT"
SEED = 20230802
TARGET_AVG_MONTHLY_RF = 0.002139918

FIRST = (2013, 1)
LAST = (2023, 8)
TRADING_DAYS = (2, 12, 22)


def month_range(first, last):
    months = []
    y, m = first
    while (y, m) <= last:
        months.append((y, m))
        m += 1
        if m > 12:
            y, m = y + 1, 1
    return months


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--output-dir", default=str(Path(__file__).resolve().parents[1] / "data"))
    parser.add_argument("--seed", type=int, default=SEED)
    args = parser.parse_args()

    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    months = month_range(FIRST, LAST)
    n_months = len(months)
    n_stocks = len(TICKERS)

    market_ret = rng.normal(0.004, 0.028, n_months - 1).clip(-0.35, 0.35)
    beta = rng.uniform(0.4, 1.6, n_stocks)
    alpha = rng.normal(0.0, 0.0015, n_stocks)
    resid_sd = rng.uniform(0.015, 0.05, n_stocks)
    eps = rng.normal(0.0, 1.0, (n_months - 1, n_stocks)) * resid_sd
    stock_ret = (alpha + np.outer(market_ret, beta) + eps).clip(-0.6, 0.6)

    bom = np.empty((n_months, n_stocks + 1))
    bom[0, :n_stocks] = rng.uniform(1.5, 12.0, n_stocks)
    bom[0, n_stocks] = 1650.0
    for t in range(1, n_months):
        bom[t, :n_stocks] = bom[t - 1, :n_stocks] * (1.0 + stock_ret[t - 1])
        bom[t, n_stocks] = bom[t - 1, n_stocks] * (1.0 + market_ret[t - 1])

    lines = ["date," + ",".join(TICKERS + [MARKET])]
    for t, (y, m) in enumerate(months):
        for k, day in enumerate(TRADING_DAYS):
            if k == 0:
                prices = bom[t]
            else:
                wiggle = 1.0 + rng.uniform(-0.015, 0.015, n_stocks + 1)
                prices = bom[t] * wiggle
            row = ",".join(format(p, ".6f") for p in prices)
            lines.append(f"{y:04d}-{m:02d}-{day:02d},{row}")
    (out / "synthetic_prices.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    annual = rng.uniform(0.018, 0.033, n_months)
    annual += 12.0 * TARGET_AVG_MONTHLY_RF - annual.mean()
    rf_lines = ["month,annual_rate"]
    for (y, m), a in zip(months, annual):
        rf_lines.append(f"{y:04d}-{m:02d},{float(a)!r}")
    (out / "synthetic_riskfree.csv").write_text("\n".join(rf_lines) + "\n", encoding="utf-8")

    print(f"wrote {out / 'synthetic_prices.csv'} ({len(lines) - 1} rows, {n_stocks + 1} assets)")
    print(f"wrote {out / 'synthetic_riskfree.csv'} ({n_months} rows)")


if __name__ == "__main__":
    main()
