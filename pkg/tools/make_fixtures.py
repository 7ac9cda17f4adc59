"""Regenerate the committed CSV fixtures under tests/fixtures/.

Run from the repo root:  python3 tools/make_fixtures.py
Output is deterministic; reruns must leave git clean.
"""

from __future__ import annotations

import pathlib
import sys

import numpy as np
import pandas as pd

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from featgate.synth import btc_covid_fixture, btc_like_prices  # noqa: E402

OUT = pathlib.Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def write_prices(prices, path):
    df = pd.DataFrame({
        "Date": prices.dates.astype("datetime64[s]").astype("datetime64[D]").astype(str),
        "Close": np.round(prices.close, 2),
    })
    df.to_csv(path, index=False)
    print(f"wrote {path} ({len(df)} rows)")


def write_indicators(table, path, location="World"):
    df = pd.DataFrame({"location": location,
                       "date": table.dates.astype(str)})
    for name, vals in table.columns.items():
        df[name] = np.round(vals, 4)
    df.to_csv(path, index=False)
    print(f"wrote {path} ({len(df)} rows, {len(table.columns)} indicator cols)")


def main():
    OUT.mkdir(parents=True, exist_ok=True)

    # Experiment fixture: 566 closes -> 558 aligned rows 2020-12-11..2022-06-21.
    # Seed chosen so train and test windows span comparable latent ranges.
    prices, indicators = btc_covid_fixture(seed=128)
    write_prices(prices, OUT / "btc_prices.csv")
    write_indicators(indicators, OUT / "covid_indicators.csv")

    # Parser fixture: exactly 558 closes spanning 2020-12-11..2022-06-21.
    write_prices(btc_like_prices(558, "2020-12-11", seed=558), OUT / "btc_prices_558.csv")


if __name__ == "__main__":
    main()
