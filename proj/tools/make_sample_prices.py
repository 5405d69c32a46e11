"""Writes data/sample_prices.csv: 35 days of hourly synthetic DA/RT prices.

RT = DA + residual, residual ~ normal(0, 8) off-peak and normal(0, 14) for
hours 16-20. Deterministic for a fixed seed.
"""
import argparse
import datetime as dt
import math
import random


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/sample_prices.csv")
    ap.add_argument("--days", type=int, default=35)
    ap.add_argument("--seed", type=int, default=2018)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    tz = dt.timezone(dt.timedelta(hours=-5))
    start = dt.datetime(2018, 1, 1, tzinfo=tz)
    with open(args.out, "w", newline="\n") as f:
        f.write("timestamp,da,rt\n")
        for day in range(args.days):
            level = rng.gauss(0.0, 3.0)
            for hour in range(24):
                ts = start + dt.timedelta(days=day, hours=hour)
                da = 35.0 + 12.0 * math.sin(2.0 * math.pi * (hour - 10) / 24.0) + level
                if 17 <= hour <= 20:
                    da += 8.0
                sigma = 14.0 if 16 <= hour <= 20 else 8.0
                rt = da + rng.gauss(0.0, sigma)
                f.write(f"{ts.isoformat()},{da:.2f},{rt:.2f}\n")


if __name__ == "__main__":
    main()
